"""Acceptance gate: twelve end-to-end properties, one test each.

Run with -v to get a one-line verdict per criterion. Every check recomputes
its expectation from scratch (hand tallies, finite differences, pairwise
statistics, a serial replay oracle) rather than trusting the code under
test, and the timed criteria assert their wall-clock budgets.
"""

import http.client
import json
import socket
import subprocess
import sys
import threading
import time
import urllib.request
from dataclasses import replace
from pathlib import Path

import numpy as np

from crystaltriage import imgio, metrics, synth, trainer, zoo
from crystaltriage.augment import (augment_dataset, balance_plan, derive_seed,
                                   preprocess)
from crystaltriage.corpus import (CRYSTAL_IDS, LABELS, ImageRecord,
                                  class_histogram, label_by_id, make_manifest,
                                  stratified_split)
from crystaltriage.metrics import PredictionRecord
from crystaltriage.nn import (AvgPool2d, BatchNorm2d, Concat, Conv2d, Dense,
                              Dropout, Flatten, GlobalAvgPool, MaxPool2d,
                              ReLU, Residual, Sequential, SubsampleZeroPad,
                              cross_entropy, iter_layers)
from crystaltriage.service import STATUS_BY_ACTION, TriageService
from crystaltriage.trainer import TrainConfig
from crystaltriage.zoo import ARCHITECTURES, ModelSpec


def synth_plates(out_dir, counts, seed):
    spec = synth.SynthSpec(counts=counts, width=960, height=960, seed=seed)
    return synth.generate(spec, out_dir)


def quantize(tile):
    return np.clip(np.rint(tile * 255.0), 0, 255).astype(np.uint8)


def inference_tiles(manifest, out_dir):
    """Deterministic eval-path tiles (no orientation draw) for a manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    recs = []
    for rec in manifest.records:
        path = out_dir / f"{rec.record_id}.png"
        imgio.write_gray(path, quantize(preprocess(imgio.read_rgb(rec.source_path))))
        recs.append(replace(rec, source_path=str(path)))
    return make_manifest(recs, image_width=128, image_height=128, seed=0)


def test_c01_rebalancing_equalizes_class_counts_within_budget(tmp_path):
    counts = dict(enumerate((1800, 1500, 1200, 90, 1000, 80, 70, 60, 900, 100)))
    corpus = synth_plates(tmp_path / "plates", counts, seed=5)

    start = time.perf_counter()
    plan = balance_plan({c: int(n) for c, n in
                         enumerate(class_histogram(corpus)) if n})
    tiles = augment_dataset(corpus, plan, seed=13, out_dir=tmp_path / "tiles")
    elapsed = time.perf_counter() - start

    histogram = class_histogram(tiles)
    assert len(tiles.records) == sum(histogram)
    top = int(histogram.max())
    for class_id, n in enumerate(histogram):
        assert n >= 0.9 * top, f"class {class_id}: {n} vs max {top}"
    sample = imgio.read_gray(tiles.records[0].source_path)
    assert sample.shape == (128, 128)
    assert elapsed < 120.0, f"rebalancing took {elapsed:.1f}s"
    print(f"[PASS] balanced {sum(counts.values())} -> {sum(histogram)} tiles, "
          f"max spread {top - histogram.min()}, {elapsed:.1f}s")


def test_c02_split_counts_exact_and_stable_across_reruns():
    records = [ImageRecord(record_id=f"img-{i:04d}", source_path=f"img-{i:04d}.png",
                           label=label_by_id(1)) for i in range(1000)]
    manifest = make_manifest(records)

    outcomes = []
    for _ in range(3):
        split = stratified_split(manifest, (0.80, 0.05, 0.15), seed=41)
        outcomes.append([(r.record_id, r.split) for r in split.records])
        tally = {s: sum(r.split == s for r in split.records)
                 for s in ("train", "validation", "test")}
        assert tally == {"train": 800, "validation": 50, "test": 150}
    assert outcomes[0] == outcomes[1] == outcomes[2]
    print("[PASS] 1000 records -> 800/50/150, identical across 3 reruns")


def test_c03_augmentation_byte_identical_across_runs(tmp_path):
    counts = {c: (1 if c in CRYSTAL_IDS else 2) for c in range(10)}
    corpus = synth_plates(tmp_path / "plates", counts, seed=3)
    plan = balance_plan({c: int(n) for c, n in
                         enumerate(class_histogram(corpus)) if n})

    first = augment_dataset(corpus, plan, seed=9, out_dir=tmp_path / "a")
    second = augment_dataset(corpus, plan, seed=9, out_dir=tmp_path / "b")

    assert len(first.records) == len(second.records) > len(corpus.records)
    for fa, fb in zip(first.records, second.records):
        assert (fa.record_id, fa.label.id, fa.parent_id, fa.augmentation_seed) \
            == (fb.record_id, fb.label.id, fb.parent_id, fb.augmentation_seed)
        assert Path(fa.source_path).read_bytes() == Path(fb.source_path).read_bytes()
    print(f"[PASS] {len(first.records)} augmented images byte-identical")


def census_by_walk(model):
    counts = {"conv": 0, "dense": 0, "pool": 0}
    for layer in iter_layers(model.net):
        if isinstance(layer, Conv2d):
            counts["conv"] += 1
        elif isinstance(layer, Dense):
            counts["dense"] += 1
        elif isinstance(layer, (MaxPool2d, AvgPool2d)):
            counts["pool"] += 1
    return counts


def test_c04_architecture_census_and_parameter_ratios():
    models = {}
    for arch in ARCHITECTURES:
        model = zoo.build(ModelSpec(architecture=arch, init_seed=1))
        out = model.forward(np.zeros((1, 128, 128)))
        assert out.shape == (1, 10) and np.isfinite(out).all()
        models[arch] = model

    base = census_by_walk(models["crystalnet"])
    lean = census_by_walk(models["lcn"])
    assert (base["conv"], base["dense"]) == (4, 3)
    assert lean["conv"] == base["conv"] + 1
    assert lean["pool"] == base["pool"] + 2
    assert lean["dense"] == base["dense"] + 1

    def params(m):
        return sum(p.value.size for layer in iter_layers(m.net)
                   for p in layer.params())

    ratio = params(models["lcn"]) / params(models["crystalnet"])
    assert ratio < 0.6, f"parameter ratio {ratio:.3f}"

    def weighted(m):
        return sum(isinstance(l, (Conv2d, Dense)) for l in iter_layers(m.net))

    assert weighted(models["resnet56"]) - weighted(models["resnet32"]) == 24
    print(f"[PASS] 8 architectures build; lcn/crystalnet params {ratio:.3f}; "
          f"resnet depth delta 24")


def finite_difference_check(layer, x, training=True, eps=1e-5):
    """Max relative error of analytic vs central-difference gradients."""
    rng = np.random.default_rng(0)
    probe = rng.normal(size=layer.forward(x, training).shape)

    def objective():
        return float((layer.forward(x, training) * probe).sum())

    def numeric(flat):
        grad = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = objective()
            flat[i] = orig - eps
            grad[i] = (up - objective()) / (2 * eps)
            flat[i] = orig
        return grad

    def rel(a, b):
        scale = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
        return float(np.abs(a - b).max() / scale)

    stack = [layer]
    params = []
    while stack:
        node = stack.pop()
        params.extend(node.params())
        stack.extend(node.children())
    for p in params:
        p.grad[...] = 0.0

    layer.forward(x, training)
    dx = layer.backward(probe.copy())
    worst = rel(dx, numeric(x.reshape(-1)).reshape(x.shape))
    for p in params:
        worst = max(worst, rel(p.grad, numeric(p.value.reshape(-1)).reshape(p.grad.shape)))
    return worst


def test_c05_all_layer_gradients_match_finite_differences():
    rng = np.random.default_rng(77)

    def keep_off_kinks(shape):
        x = rng.normal(size=shape)
        x[np.abs(x) < 0.05] += 0.1
        return x

    def conv(*a, **k):
        layer = Conv2d(*a, dtype=np.float64, **k)
        layer.init(rng)
        return layer

    def dense(n_in, n_out):
        layer = Dense(n_in, n_out, dtype=np.float64)
        layer.init(rng)
        return layer

    bn = BatchNorm2d(3, dtype=np.float64)
    bn.gamma.value[...] = rng.normal(1.0, 0.1, 3)
    bn.beta.value[...] = rng.normal(0.0, 0.1, 3)
    bn_eval = BatchNorm2d(3, dtype=np.float64)
    bn_eval.running_mean[...] = rng.normal(size=3)
    bn_eval.running_var[...] = rng.uniform(0.5, 2.0, 3)

    residual = Residual(
        Sequential([conv(2, 2, 3, padding=1), ReLU(), conv(2, 2, 3, padding=1)]))
    projected = Residual(Sequential([conv(2, 4, 3, stride=2, padding=1)]),
                         shortcut=SubsampleZeroPad(2, 4, stride=2))
    concat = Concat([Sequential([conv(2, 2, 1)]),
                     Sequential([conv(2, 3, 3, padding=1)])])

    cases = [
        ("conv", conv(2, 3, 3, stride=2, padding=1), (2, 2, 6, 6), True),
        ("conv_rect", conv(2, 3, (1, 5), padding=(0, 2)), (2, 2, 4, 6), True),
        ("dense", dense(7, 4), (3, 7), True),
        ("relu", ReLU(), (2, 3, 4, 4), True),
        ("maxpool", MaxPool2d(3, stride=2, padding=1), (1, 2, 6, 6), True),
        ("avgpool", AvgPool2d(3, stride=1, padding=1), (2, 2, 5, 5), True),
        ("globalavgpool", GlobalAvgPool(), (2, 3, 4, 4), True),
        ("flatten", Flatten(), (2, 3, 4, 4), True),
        ("batchnorm_train", bn, (4, 3, 5, 5), True),
        ("batchnorm_eval", bn_eval, (2, 3, 4, 4), False),
        ("subsample_pad", SubsampleZeroPad(2, 4, stride=2), (2, 2, 6, 6), True),
        ("residual", residual, (2, 2, 5, 5), True),
        ("residual_projected", projected, (2, 2, 6, 6), True),
        ("concat", concat, (2, 2, 4, 4), True),
    ]

    start = time.perf_counter()
    worst = {}
    for name, layer, shape, training in cases:
        err = finite_difference_check(layer, keep_off_kinks(shape), training)
        worst[name] = err
        assert err < 1e-4, f"{name}: relative error {err:.2e}"

    # dropout redraws its mask per forward, so check backward against the
    # mask actually used instead of differentiating the objective
    drop = Dropout(0.4, seed=3)
    x = keep_off_kinks((3, 5))
    out = drop.forward(x, training=True)
    probe = rng.normal(size=out.shape)
    assert np.allclose(drop.backward(probe.copy()), probe * drop._mask)

    logits = rng.normal(size=(4, 10))
    labels = rng.integers(0, 10, size=4)
    _, dlogits = cross_entropy(logits, labels)
    num = np.zeros_like(logits)
    flat = logits.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + 1e-5
        up, _ = cross_entropy(logits, labels)
        flat[i] = orig - 1e-5
        down, _ = cross_entropy(logits, labels)
        flat[i] = orig
        num.reshape(-1)[i] = (up - down) / (2 * 1e-5)
    scale = max(np.abs(dlogits).max(), np.abs(num).max())
    assert np.abs(dlogits - num).max() / scale < 1e-4

    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"gradient sweep took {elapsed:.1f}s"
    print(f"[PASS] {len(cases)} primitives + dropout + loss within 1e-4, "
          f"worst {max(worst.values()):.2e}, {elapsed:.1f}s")


def test_c06_learning_rate_schedule_profile_exact():
    config = TrainConfig(lr0=0.01, epochs=70)
    profile = [trainer.lr_at(epoch, config) for epoch in range(70)]
    assert profile == [0.01] * 20 + [0.001] * 20 + [0.0001] * 20 + [0.00001] * 10
    print("[PASS] 70-epoch profile == {0.01 x20, 0.001 x20, 0.0001 x20, 0.00001 x10}")


def test_c07_lcn_overfits_64_images_within_200_epochs(tmp_path):
    start = time.perf_counter()
    counts = {c: (7 if c < 4 else 6) for c in range(10)}
    plates = synth_plates(tmp_path / "plates", counts, seed=11)
    assert len(plates.records) == 64

    tile_dir = tmp_path / "tiles"
    tile_dir.mkdir()
    records = []
    for rec in plates.records:
        rng = np.random.default_rng(derive_seed(17, rec.record_id, 0))
        path = tile_dir / f"{rec.record_id}.png"
        imgio.write_gray(path, quantize(preprocess(imgio.read_rgb(rec.source_path), rng)))
        records.append(replace(rec, source_path=str(path), origin="augmented",
                               parent_id=rec.record_id, augmentation_seed=17))
    tiles = make_manifest(records, image_width=128, image_height=128, seed=17)

    model = zoo.build(ModelSpec(architecture="lcn", init_seed=0))
    config = TrainConfig(batch_size=64, epochs=100, lr0=0.01, momentum=0.9,
                         decay_period=50, decay_factor=10, seed=0)
    result = trainer.train(model, tiles, tiles, config)
    elapsed = time.perf_counter() - start

    peak = max(s.val_accuracy for s in result.history)
    assert peak >= 0.99, f"peak training accuracy {peak:.3f}"
    first_hit = next(s.epoch for s in result.history if s.val_accuracy >= 0.99)
    assert first_hit < 200
    assert elapsed < 600.0, f"overfit run took {elapsed:.1f}s"
    print(f"[PASS] training accuracy {peak:.3f}, first >=99% at epoch "
          f"{first_hit}, {elapsed:.1f}s")


def test_c08_lcn_learns_synthetic_corpus_end_to_end(tmp_path):
    start = time.perf_counter()
    corpus = synth_plates(tmp_path / "plates", {c: 200 for c in range(10)}, seed=23)
    assert len(corpus.records) == 2000

    split = stratified_split(corpus, (0.80, 0.05, 0.15), seed=7)
    parts = {s: make_manifest([r for r in split.records if r.split == s], seed=7)
             for s in ("train", "validation", "test")}
    assert {s: len(m.records) for s, m in parts.items()} \
        == {"train": 1600, "validation": 100, "test": 300}

    plan = balance_plan({c: int(n) for c, n in
                         enumerate(class_histogram(parts["train"])) if n})
    train_tiles = augment_dataset(parts["train"], plan, seed=31,
                                  out_dir=tmp_path / "train_tiles")
    val_tiles = inference_tiles(parts["validation"], tmp_path / "val_tiles")
    test_tiles = inference_tiles(parts["test"], tmp_path / "test_tiles")

    model = zoo.build(ModelSpec(architecture="lcn", init_seed=0))
    config = TrainConfig(batch_size=64, epochs=30, lr0=0.01, momentum=0.9, seed=0)
    trainer.train(model, train_tiles, val_tiles, config)

    images, _ = trainer.load_corpus(test_tiles)
    preds = []
    for base in range(0, len(images), 64):
        logits = model.forward(images[base:base + 64].astype(np.float32) / 255.0)
        for j, row in enumerate(logits):
            rec = test_tiles.records[base + j]
            preds.append(PredictionRecord(rec.record_id, rec.label,
                                          tuple(float(v) for v in row)))
    report = metrics.report(preds)
    elapsed = time.perf_counter() - start

    top = report.top_n_accuracy
    assert top[1] >= 0.60, f"top-1 test accuracy {top[1]:.3f}"
    assert top[1] <= top[2] <= top[3]
    assert elapsed < 1800.0, f"end-to-end run took {elapsed:.1f}s"
    print(f"[PASS] top-1 {top[1]:.3f} top-2 {top[2]:.3f} top-3 {top[3]:.3f}, "
          f"{elapsed:.1f}s")


def random_fixture(rng, size):
    """Prediction set with all 10 classes present and planted activation ties."""
    preds = []
    for i in range(size):
        true = label_by_id(int(i % 10 if i < 10 else rng.integers(10)))
        acts = np.round(rng.normal(size=10), 3)
        if rng.random() < 0.4:
            acts[rng.integers(10)] = acts[rng.integers(10)]
        preds.append(PredictionRecord(f"fx-{i}", true, tuple(float(a) for a in acts)))
    return preds


def brute_rank(acts):
    return sorted(range(10), key=lambda c: (-acts[c], c))


def brute_pairwise_auc(scores, flags):
    pos = [s for s, f in zip(scores, flags) if f]
    neg = [s for s, f in zip(scores, flags) if not f]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def brute_trapezoid_auc(scores, flags):
    order = np.argsort(scores)[::-1]
    pos = sum(flags)
    neg = len(flags) - pos
    tps = fps = 0
    xs, ys = [0.0], [0.0]
    last = None
    for i in order:
        if last is not None and scores[i] != last:
            xs.append(fps / neg)
            ys.append(tps / pos)
        tps += bool(flags[i])
        fps += not flags[i]
        last = scores[i]
    xs.append(1.0)
    ys.append(1.0)
    return float(np.trapezoid(ys, xs))


def test_c09_metrics_match_brute_force_on_200_fixtures():
    rng = np.random.default_rng(2024)
    for fixture in range(200):
        preds = random_fixture(rng, int(rng.integers(20, 61)))
        n_total = len(preds)

        for n in (1, 3, 5):
            brute = sum(p.true_label.id in brute_rank(p.activations)[:n]
                        for p in preds) / n_total
            assert abs(metrics.topn_accuracy(preds, n) - brute) <= 1e-12

        matrix = metrics.confusion_matrix(preds)
        tally = np.zeros((10, 10), dtype=np.int64)
        for p in preds:
            tally[brute_rank(p.activations)[0], p.true_label.id] += 1
        assert np.array_equal(matrix.counts, tally)

        ratios, average = metrics.per_class_accuracy(matrix, allow_empty=True)
        defined = []
        for c in range(10):
            colsum = tally[:, c].sum()
            if colsum == 0:
                assert ratios[c] is None
                continue
            assert abs(ratios[c] - tally[c, c] / colsum) <= 1e-12
            defined.append(tally[c, c] / colsum)
        assert abs(average - np.mean(defined)) <= 1e-12

        target = int(fixture % 10)
        all_probs = metrics.softmax(
            np.array([p.activations for p in preds], dtype=np.float64))
        probs = [float(v) for v in all_probs[:, target]]
        flags = [p.true_label.id == target for p in preds]
        if any(flags) and not all(flags):
            ours = metrics.roc_auc(probs, flags)
            assert abs(ours - brute_pairwise_auc(probs, flags)) <= 1e-12
            assert abs(ours - brute_trapezoid_auc(probs, flags)) <= 1e-12
            by_class = metrics.one_vs_rest_auc(preds, allow_undefined=True)
            assert abs(ours - by_class[target]) <= 1e-12

        crystal_truths = [p for p in preds if p.true_label.is_crystal]
        for n in (1, 2, 3, 10):
            brute_missed = sum(
                not (set(brute_rank(p.activations)[:n]) & CRYSTAL_IDS)
                for p in crystal_truths)
            assert abs(metrics.missed_crystal_rate(preds, n)
                       - brute_missed / len(crystal_truths)) <= 1e-12
    print("[PASS] 200 fixtures: top-n, confusion, per-class, AUC, missed-crystal"
          " all match brute force")


def test_c10_missed_crystal_identity_and_monotonicity():
    rng = np.random.default_rng(5150)
    for _ in range(200):
        preds = random_fixture(rng, int(rng.integers(20, 61)))
        matrix = metrics.confusion_matrix(preds)

        crystal_cols = sorted(CRYSTAL_IDS)
        total = int(matrix.counts[:, crystal_cols].sum())
        detected = int(matrix.counts[np.ix_(crystal_cols, crystal_cols)].sum())
        assert metrics.missed_crystal_rate(preds, 1) == (total - detected) / total

        rates = [metrics.missed_crystal_rate(preds, n) for n in range(1, 11)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))
        assert rates[-1] == 0.0
    print("[PASS] top-1 rate equals confusion identity; non-increasing in n")


def test_c11_class_average_is_unweighted_mean_of_per_class_ratios():
    printed = (98.1, 96.6, 89.9, 89.3, 81.0, 69.2, 61.1, 78.0, 86.8, 65.4)
    counts = np.zeros((10, 10), dtype=np.int64)
    for c, pct in enumerate(printed):
        column_total = 1000 * (c + 1)
        correct = round(pct * 10) * (c + 1)
        counts[c, c] = correct
        counts[(c + 1) % 10, c] = column_total - correct
    matrix = metrics.ConfusionMatrix(counts)

    ratios, average = metrics.per_class_accuracy(matrix)
    for ratio, pct in zip(ratios, printed):
        assert abs(ratio * 100 - pct) <= 1e-9
    assert abs(average * 100 - 81.5) <= 0.05
    weighted = counts.trace() / counts.sum()
    assert abs(weighted * 100 - 81.5) > 0.05
    print(f"[PASS] unweighted average {average * 100:.2f} within 0.05 of 81.5; "
          f"weighted would be {weighted * 100:.2f}")


def wait_for_health(port, deadline=15.0):
    end = time.time() + deadline
    while time.time() < end:
        try:
            with urllib.request.urlopen(
                    f"http://127.0.0.1:{port}/healthz", timeout=1) as resp:
                if resp.status == 200:
                    return
        except OSError:
            time.sleep(0.05)
    raise TimeoutError("service never became healthy")


def test_c12_killed_service_loses_no_acknowledged_annotation(tmp_path):
    model = zoo.build(ModelSpec(architecture="crystalnet", init_seed=4))
    checkpoint = tmp_path / "model.ckpt"
    zoo.save_checkpoint(model, checkpoint)
    digest = zoo.checkpoint_digest(checkpoint)

    plates = synth_plates(tmp_path / "plates", {c: 3 if c < 5 else 2 for c in range(10)},
                          seed=29)
    data_dir = tmp_path / "triage"
    seeding = TriageService(data_dir, model, digest)
    record_ids = [item.record_id for item in
                  seeding.ingest(r.source_path for r in plates.records)]
    assert len(record_ids) == 25

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = tmp_path / "serve.yaml"
    config.write_text(
        f"data_dir: {data_dir}\ncheckpoint_path: {checkpoint}\n"
        f"auth_token: burst-token\nlisten_address: 127.0.0.1:{port}\n")
    proc = subprocess.Popen(
        [sys.executable, "-m", "crystaltriage.cli", "serve", "--config", str(config)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        wait_for_health(port)

        actions = ("confirm_crystal", "confirm_noncrystal", "relabel")
        acked = []
        ack_lock = threading.Lock()
        killed = threading.Event()

        def client(worker):
            for i in range(25):
                record = record_ids[(worker * 6 + i) % len(record_ids)]
                action = actions[(worker + i) % 3]
                body = {"record_id": record, "action": action,
                        "reviewer": f"rev-{worker}",
                        "idempotency_key": f"burst-{worker}-{i}"}
                if action == "relabel":
                    body["label"] = LABELS[(worker + i) % 10].name
                request = urllib.request.Request(
                    f"http://127.0.0.1:{port}/annotations",
                    data=json.dumps(body).encode(),
                    headers={"Authorization": "Bearer burst-token",
                             "Content-Type": "application/json"})
                try:
                    with urllib.request.urlopen(request, timeout=5) as resp:
                        ok = resp.status == 200 and bool(resp.read())
                except (OSError, http.client.HTTPException):
                    return
                if ok:
                    with ack_lock:
                        acked.append(body)
                        if len(acked) >= 50 and not killed.is_set():
                            killed.set()
                            proc.kill()

        workers = [threading.Thread(target=client, args=(w,)) for w in range(4)]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
    finally:
        proc.kill()
        proc.wait()

    assert killed.is_set(), "burst finished before the kill fired"
    assert len(acked) >= 50

    reborn = TriageService(data_dir, model, digest)
    persisted = reborn.events()
    persisted_keys = {e.idempotency_key for e in persisted}
    for body in acked:
        assert body["idempotency_key"] in persisted_keys

    oracle = {}
    for event in persisted:
        oracle[event.record_id] = (
            STATUS_BY_ACTION[event.action],
            event.label.name if event.action == "relabel" else None,
            event.reviewer)
    for record_id, expected in oracle.items():
        item = reborn.get(record_id)
        got = (item.status,
               item.human_label.name if item.human_label else None,
               item.reviewer)
        assert got == expected
    untouched = set(record_ids) - set(oracle)
    for record_id in untouched:
        assert reborn.get(record_id).status == "pending"
    print(f"[PASS] {len(acked)} acked annotations all survived SIGKILL; "
          f"{len(persisted)} persisted events replay to oracle statuses")
