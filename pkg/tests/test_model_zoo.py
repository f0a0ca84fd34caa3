"""Architecture graph, initialization, and checkpoint container tests."""

from functools import lru_cache

import numpy as np
import pytest

from crystaltriage.nn import Conv2d, Dense, Residual, iter_layers, softmax
from crystaltriage.zoo import (
    ARCHITECTURES,
    ModelSpec,
    ZooError,
    build,
    census,
    checkpoint_digest,
    list_architectures,
    load_checkpoint,
    param_count,
    save_checkpoint,
    weighted_layer_count,
)


@lru_cache(maxsize=None)
def model(arch, seed=1):
    return build(ModelSpec(architecture=arch, init_seed=seed))


def small_batch(n=2, seed=0):
    return np.random.default_rng(seed).random((n, 128, 128, 1)).astype(np.float32)


class TestRegistry:
    def test_exactly_eight(self):
        assert len(list_architectures()) == 8

    def test_table_order_endpoints(self):
        archs = list_architectures()
        assert archs[0] == "crystalnet"
        assert archs[-1] == "resnet56"

    def test_idempotent(self):
        assert list_architectures() == list_architectures()

    def test_unknown_architecture(self):
        with pytest.raises(ZooError, match="unknown architecture"):
            build(ModelSpec(architecture="lenet"))

    def test_fixed_input_contract(self):
        with pytest.raises(ZooError):
            ModelSpec(architecture="lcn", num_classes=2).validate()


class TestCensus:
    def test_crystalnet_counts(self):
        c = census(model("crystalnet"))
        assert c["conv"] == 4
        assert c["dense"] == 3

    def test_lcn_delta(self):
        base = census(model("crystalnet"))
        lean = census(model("lcn"))
        assert lean["conv"] == base["conv"] + 1
        assert lean["pool"] == base["pool"] + 2
        assert lean["dense"] == base["dense"] + 1

    def test_alexnet_counts(self):
        c = census(model("alexnet"))
        assert c["conv"] == 5
        assert c["dense"] == 3

    def test_vgg_counts(self):
        assert census(model("vgg16"))["conv"] == 13
        assert census(model("vgg19"))["conv"] == 16
        assert census(model("vgg16"))["dense"] == 3
        assert census(model("vgg19"))["dense"] == 3

    def test_resnet_weighted_layers(self):
        assert weighted_layer_count(model("resnet32")) == 32
        assert weighted_layer_count(model("resnet56")) == 56
        assert weighted_layer_count(model("resnet56")) \
            - weighted_layer_count(model("resnet32")) == 24


class TestParamCount:
    def test_dense_oracle(self):
        layer = Dense(10, 10)
        assert sum(p.value.size for p in layer.params()) == 110

    def test_conv_oracle(self):
        layer = Conv2d(1, 8, 3)
        assert sum(p.value.size for p in layer.params()) == 80

    def test_lcn_under_60_percent_of_crystalnet(self):
        ratio = param_count(model("lcn")) / param_count(model("crystalnet"))
        assert ratio < 0.6

    def test_exact_sum_matches_walk(self):
        m = model("crystalnet")
        total = sum(p.value.size for layer in iter_layers(m.net)
                    for p in layer.params())
        assert param_count(m) == total


class TestForward:
    @pytest.mark.parametrize("arch", ARCHITECTURES)
    def test_shape_and_finiteness(self, arch):
        out = model(arch).forward(np.zeros((2, 128, 128, 1), dtype=np.float32))
        assert out.shape == (2, 10)
        assert np.isfinite(out).all()
        assert softmax(out).sum(axis=1) == pytest.approx(np.ones(2), abs=1e-6)

    @pytest.mark.parametrize("arch", ["lcn", "resnet32"])
    def test_duplicated_rows_identical(self, arch):
        row = small_batch(1, seed=3)
        batch = np.repeat(row, 4, axis=0)
        out = model(arch).forward(batch)
        for i in range(1, 4):
            assert out[i] == pytest.approx(out[0], abs=1e-6)

    @pytest.mark.parametrize("arch", ["crystalnet", "resnet56"])
    def test_single_vs_batched(self, arch):
        imgs = small_batch(4, seed=4)
        batched = model(arch).forward(imgs)
        single = model(arch).forward(imgs[:1])
        assert single[0] == pytest.approx(batched[0], rel=1e-5, abs=1e-5)

    def test_accepts_nchw_and_2d_layouts(self):
        m = model("lcn")
        imgs = small_batch(2, seed=5)
        a = m.forward(imgs)
        b = m.forward(imgs.transpose(0, 3, 1, 2))
        c = m.forward(imgs[:, :, :, 0])
        assert np.array_equal(a, b)
        assert np.array_equal(a, c)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ZooError, match="expected"):
            model("lcn").forward(np.zeros((2, 64, 64, 1), dtype=np.float32))


class TestInitialization:
    def test_same_seed_identical(self):
        a = build(ModelSpec(architecture="lcn", init_seed=7))
        b = build(ModelSpec(architecture="lcn", init_seed=7))
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(pa.value, pb.value)

    def test_different_seed_differs(self):
        a = build(ModelSpec(architecture="lcn", init_seed=7))
        b = build(ModelSpec(architecture="lcn", init_seed=8))
        assert any(not np.array_equal(pa.value, pb.value)
                   for pa, pb in zip(a.parameters(), b.parameters()))

    def test_gaussian_fan_in_scale(self):
        m = build(ModelSpec(architecture="crystalnet", init_seed=9))
        conv1 = next(l for l in iter_layers(m.net) if isinstance(l, Conv2d))
        w = conv1.weight.value
        fan_in = w.shape[1] * w.shape[2] * w.shape[3]
        assert w.std() == pytest.approx(np.sqrt(2.0 / fan_in), rel=0.2)
        assert abs(w.mean()) < 0.05
        assert np.all(conv1.bias.value == 0)


class TestResidualIdentity:
    @pytest.mark.parametrize("arch", ["resnet32", "resnet56"])
    def test_zeroed_branch_block_is_identity(self, arch):
        m = build(ModelSpec(architecture=arch, init_seed=11))
        block = next(l for l in iter_layers(m.net)
                     if isinstance(l, Residual) and l.shortcut is None)
        for layer in iter_layers(block.branch):
            for p in layer.params():
                p.value[...] = 0.0
        x = np.random.default_rng(12).normal(
            size=(2, 16, 64, 64)).astype(np.float32)
        out = block.forward(x, training=False)
        assert out == pytest.approx(x, abs=1e-6)


class TestCheckpoint:
    def test_round_trip_values(self, tmp_path):
        m = model("lcn")
        path = tmp_path / "m.ckpt"
        save_checkpoint(m, path, extra={"epoch": 3, "validation_accuracy": 0.5})
        loaded, extra = load_checkpoint(path)
        assert extra == {"epoch": 3, "validation_accuracy": 0.5}
        assert loaded.spec == m.spec
        for pa, pb in zip(m.parameters(), loaded.parameters()):
            assert np.array_equal(pa.value, pb.value)
        imgs = small_batch(2, seed=6)
        assert np.array_equal(m.forward(imgs), loaded.forward(imgs))

    def test_byte_exact_round_trip(self, tmp_path):
        m = model("resnet32")
        first = tmp_path / "a.ckpt"
        second = tmp_path / "b.ckpt"
        save_checkpoint(m, first, extra={"epoch": 1})
        loaded, extra = load_checkpoint(first)
        save_checkpoint(loaded, second, extra=extra)
        assert first.read_bytes() == second.read_bytes()
        assert checkpoint_digest(first) == checkpoint_digest(second)

    def test_architecture_mismatch(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(model("crystalnet"), path)
        raw = bytearray(path.read_bytes())
        raw_str = raw.decode("latin1").replace("crystalnet", "mystery_ne")
        path.write_bytes(raw_str.encode("latin1"))
        with pytest.raises(ZooError):
            load_checkpoint(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"PNG....definitely not weights")
        with pytest.raises(ZooError, match="not a checkpoint"):
            load_checkpoint(path)

    def test_includes_batchnorm_buffers(self, tmp_path):
        m = build(ModelSpec(architecture="resnet32", init_seed=13))
        # train-mode forward moves running stats away from defaults
        m.forward(small_batch(4, seed=7), training=True)
        path = tmp_path / "m.ckpt"
        save_checkpoint(m, path)
        loaded, _ = load_checkpoint(path)
        for (na, aa, ka), (nb, ab, kb) in zip(m.named_arrays(),
                                              loaded.named_arrays()):
            assert na == nb and ka == kb
            assert aa == pytest.approx(ab, abs=1e-7)
