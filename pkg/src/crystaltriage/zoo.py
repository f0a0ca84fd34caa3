"""The eight compared architectures as concrete layer graphs.

All nets take 128x128 single-channel input and emit 10 activations.
CrystalNet and LCN use our fixed parameterization (the source material names
only their layer counts); the classics follow their published configurations
with the input retargeted to 128x128x1, the head to 10 classes, and VGG's
fully connected widths reduced 4096 -> 1024 to fit desk-scale memory.
"""

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import NUM_CLASSES
from .nn import (
    AvgPool2d,
    BatchNorm2d,
    Concat,
    Conv2d,
    Dense,
    Dropout,
    Flatten,
    GlobalAvgPool,
    Layer,
    MaxPool2d,
    Param,
    ReLU,
    Residual,
    Sequential,
    SubsampleZeroPad,
    assign_names,
    cross_entropy,
    iter_layers,
    softmax,
)

#: Table-order architecture ids; first and last entries are load-bearing.
ARCHITECTURES = ("crystalnet", "lcn", "alexnet", "vgg16", "vgg19",
                 "inception_v3", "resnet32", "resnet56")

CHECKPOINT_MAGIC = b"CRYSCKPT"
CHECKPOINT_VERSION = 1


class ZooError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    architecture: str
    input_side: int = 128
    input_channels: int = 1
    num_classes: int = NUM_CLASSES
    init_seed: int = 0
    init_scheme: str = "fan_in_gaussian"

    def validate(self) -> "ModelSpec":
        if self.architecture not in ARCHITECTURES:
            raise ZooError(f"unknown architecture id: {self.architecture!r}")
        if (self.input_side, self.input_channels, self.num_classes) != (128, 1, 10):
            raise ZooError("models are fixed to 128x128x1 input and 10 classes")
        if self.init_scheme != "fan_in_gaussian":
            raise ZooError(f"unknown init scheme: {self.init_scheme!r}")
        return self


class Model:
    """A built network: immutable for inference, mutable under training."""

    def __init__(self, spec: ModelSpec, net: Layer):
        self.spec = spec
        self.net = net

    def forward(self, batch: np.ndarray, training: bool = False) -> np.ndarray:
        return self.net.forward(self._standardize(batch), training)

    def loss_and_gradients(self, images: np.ndarray, labels: np.ndarray):
        """One training forward/backward; returns (mean loss, logits).

        Parameter .grad fields hold the fresh gradients afterwards.
        """
        for p in self.parameters():
            p.grad[...] = 0.0
        logits = self.forward(images, training=True)
        loss, dlogits = cross_entropy(logits, np.asarray(labels))
        self.net.backward(dlogits)
        return loss, logits

    def parameters(self) -> list[Param]:
        out = []
        for layer in iter_layers(self.net):
            out.extend(layer.params())
        return out

    def named_arrays(self) -> list[tuple[str, np.ndarray, str]]:
        """(name, array, kind) for every parameter and buffer, walk order."""
        out = []
        for layer in iter_layers(self.net):
            for p in layer.params():
                out.append((f"{layer.name}.{p.name}", p.value, "param"))
            for bname, buf in layer.buffers():
                out.append((f"{layer.name}.{bname}", buf, "buffer"))
        return out

    def _standardize(self, batch: np.ndarray) -> np.ndarray:
        x = np.asarray(batch)
        side = self.spec.input_side
        if x.ndim == 3:
            x = x[:, None, :, :]
        elif x.ndim == 4 and x.shape[3] == 1 and x.shape[1] == side:
            x = x.transpose(0, 3, 1, 2)
        if x.ndim != 4 or x.shape[1:] != (1, side, side):
            raise ZooError(f"expected Bx{side}x{side}x1 images, got {x.shape}")
        x = np.ascontiguousarray(x, dtype=np.float32)
        # per-image standardization: trial tiles are mostly bright background
        # with std ~0.05, and feeding them raw leaves fan-in-Gaussian nets
        # with gradients too weak to train at the stock learning rate
        mean = x.mean(axis=(1, 2, 3), keepdims=True)
        std = x.std(axis=(1, 2, 3), keepdims=True)
        floor = 1.0 / np.sqrt(x[0].size)
        return (x - mean) / np.maximum(std, floor)


def list_architectures() -> list[str]:
    return list(ARCHITECTURES)


def param_count(model: Model) -> int:
    return sum(p.value.size for p in model.parameters())


def census(model: Model) -> dict[str, int]:
    """Count node types in the layer graph."""
    counts = {"conv": 0, "dense": 0, "pool": 0, "batchnorm": 0, "residual": 0}
    for layer in iter_layers(model.net):
        if isinstance(layer, Conv2d):
            counts["conv"] += 1
        elif isinstance(layer, Dense):
            counts["dense"] += 1
        elif isinstance(layer, (MaxPool2d, AvgPool2d, GlobalAvgPool)):
            counts["pool"] += 1
        elif isinstance(layer, BatchNorm2d):
            counts["batchnorm"] += 1
        elif isinstance(layer, Residual):
            counts["residual"] += 1
    return counts


def weighted_layer_count(model: Model) -> int:
    """Depth as conventionally quoted: layers carrying weights (conv + FC)."""
    c = census(model)
    return c["conv"] + c["dense"]


def _crystalnet() -> Layer:
    return Sequential([
        Conv2d(1, 32, 5, stride=2, padding=2), ReLU(),
        Conv2d(32, 64, 5, stride=2, padding=2), ReLU(),
        Conv2d(64, 128, 3, stride=2, padding=1), ReLU(),
        Conv2d(128, 128, 3, stride=2, padding=1), ReLU(),
        Flatten(),
        Dense(8 * 8 * 128, 1024), ReLU(),
        Dense(1024, 512), ReLU(),
        Dense(512, 10),
    ])


def _lcn() -> Layer:
    # crystalnet plus one conv, two max-pools, one FC; the pools shrink the
    # flattened features enough to cut the parameter count well below half
    return Sequential([
        Conv2d(1, 32, 5, stride=2, padding=2), ReLU(),
        MaxPool2d(2),
        Conv2d(32, 64, 5, stride=2, padding=2), ReLU(),
        MaxPool2d(2),
        Conv2d(64, 128, 3, stride=2, padding=1), ReLU(),
        Conv2d(128, 128, 3, stride=2, padding=1), ReLU(),
        Conv2d(128, 128, 3, stride=1, padding=1), ReLU(),
        Flatten(),
        Dense(2 * 2 * 128, 1024), ReLU(),
        Dense(1024, 512), ReLU(),
        Dense(512, 256), ReLU(),
        Dense(256, 10),
    ])


def _alexnet() -> Layer:
    return Sequential([
        Conv2d(1, 64, 11, stride=4, padding=2), ReLU(),
        MaxPool2d(3, stride=2),
        Conv2d(64, 192, 5, padding=2), ReLU(),
        MaxPool2d(3, stride=2),
        Conv2d(192, 384, 3, padding=1), ReLU(),
        Conv2d(384, 256, 3, padding=1), ReLU(),
        Conv2d(256, 256, 3, padding=1), ReLU(),
        MaxPool2d(3, stride=2),
        Flatten(),
        Dropout(0.5),
        Dense(3 * 3 * 256, 4096), ReLU(),
        Dropout(0.5),
        Dense(4096, 4096), ReLU(),
        Dense(4096, 10),
    ])


_VGG_PLANS = {
    "vgg16": (2, 2, 3, 3, 3),
    "vgg19": (2, 2, 4, 4, 4),
}


def _vgg(arch: str) -> Layer:
    layers: list[Layer] = []
    channels = 1
    for stage, repeats in zip((64, 128, 256, 512, 512), _VGG_PLANS[arch]):
        for _ in range(repeats):
            layers += [Conv2d(channels, stage, 3, padding=1), ReLU()]
            channels = stage
        layers.append(MaxPool2d(2))
    layers += [
        Flatten(),
        Dense(4 * 4 * 512, 1024), ReLU(), Dropout(0.5),
        Dense(1024, 1024), ReLU(), Dropout(0.5),
        Dense(1024, 10),
    ]
    return Sequential(layers)


def _conv_bn(in_ch: int, out_ch: int, kernel, stride=1, padding=0) -> Layer:
    return Sequential([
        Conv2d(in_ch, out_ch, kernel, stride=stride, padding=padding, bias=False),
        BatchNorm2d(out_ch), ReLU(),
    ])


def _inception_a(in_ch: int, pool_features: int) -> Layer:
    return Concat([
        _conv_bn(in_ch, 64, 1),
        Sequential([_conv_bn(in_ch, 48, 1), _conv_bn(48, 64, 5, padding=2)]),
        Sequential([_conv_bn(in_ch, 64, 1), _conv_bn(64, 96, 3, padding=1),
                    _conv_bn(96, 96, 3, padding=1)]),
        Sequential([AvgPool2d(3, stride=1, padding=1),
                    _conv_bn(in_ch, pool_features, 1)]),
    ])


def _inception_b(in_ch: int) -> Layer:
    return Concat([
        _conv_bn(in_ch, 384, 3, stride=2),
        Sequential([_conv_bn(in_ch, 64, 1), _conv_bn(64, 96, 3, padding=1),
                    _conv_bn(96, 96, 3, stride=2)]),
        MaxPool2d(3, stride=2),
    ])


def _inception_c(in_ch: int, c7: int) -> Layer:
    return Concat([
        _conv_bn(in_ch, 192, 1),
        Sequential([
            _conv_bn(in_ch, c7, 1),
            _conv_bn(c7, c7, (1, 7), padding=(0, 3)),
            _conv_bn(c7, 192, (7, 1), padding=(3, 0)),
        ]),
        Sequential([
            _conv_bn(in_ch, c7, 1),
            _conv_bn(c7, c7, (7, 1), padding=(3, 0)),
            _conv_bn(c7, c7, (1, 7), padding=(0, 3)),
            _conv_bn(c7, c7, (7, 1), padding=(3, 0)),
            _conv_bn(c7, 192, (1, 7), padding=(0, 3)),
        ]),
        Sequential([AvgPool2d(3, stride=1, padding=1), _conv_bn(in_ch, 192, 1)]),
    ])


def _inception_d(in_ch: int) -> Layer:
    return Concat([
        Sequential([_conv_bn(in_ch, 192, 1), _conv_bn(192, 320, 3, stride=2)]),
        Sequential([
            _conv_bn(in_ch, 192, 1),
            _conv_bn(192, 192, (1, 7), padding=(0, 3)),
            _conv_bn(192, 192, (7, 1), padding=(3, 0)),
            _conv_bn(192, 192, 3, stride=2),
        ]),
        MaxPool2d(3, stride=2),
    ])


def _inception_e(in_ch: int) -> Layer:
    return Concat([
        _conv_bn(in_ch, 320, 1),
        Sequential([
            _conv_bn(in_ch, 384, 1),
            Concat([_conv_bn(384, 384, (1, 3), padding=(0, 1)),
                    _conv_bn(384, 384, (3, 1), padding=(1, 0))]),
        ]),
        Sequential([
            _conv_bn(in_ch, 448, 1),
            _conv_bn(448, 384, 3, padding=1),
            Concat([_conv_bn(384, 384, (1, 3), padding=(0, 1)),
                    _conv_bn(384, 384, (3, 1), padding=(1, 0))]),
        ]),
        Sequential([AvgPool2d(3, stride=1, padding=1), _conv_bn(in_ch, 192, 1)]),
    ])


def _inception_v3() -> Layer:
    return Sequential([
        _conv_bn(1, 32, 3, stride=2),
        _conv_bn(32, 32, 3),
        _conv_bn(32, 64, 3, padding=1),
        MaxPool2d(3, stride=2),
        _conv_bn(64, 80, 1),
        _conv_bn(80, 192, 3),
        MaxPool2d(3, stride=2),
        _inception_a(192, 32),
        _inception_a(256, 64),
        _inception_a(288, 64),
        _inception_b(288),
        _inception_c(768, 128),
        _inception_c(768, 160),
        _inception_c(768, 160),
        _inception_c(768, 192),
        _inception_d(768),
        _inception_e(1280),
        _inception_e(2048),
        GlobalAvgPool(),
        Dropout(0.5),
        Dense(2048, 10),
    ])


def _residual_block(in_ch: int, out_ch: int, stride: int) -> Layer:
    # pre-activation ordering: a zeroed branch leaves the input untouched
    branch = Sequential([
        BatchNorm2d(in_ch), ReLU(),
        Conv2d(in_ch, out_ch, 3, stride=stride, padding=1),
        BatchNorm2d(out_ch), ReLU(),
        Conv2d(out_ch, out_ch, 3, stride=1, padding=1),
    ])
    shortcut = None
    if stride != 1 or in_ch != out_ch:
        shortcut = SubsampleZeroPad(in_ch, out_ch, stride=stride)
    return Residual(branch, shortcut)


def _resnet(blocks_per_stage: int) -> Layer:
    layers: list[Layer] = [Conv2d(1, 16, 3, stride=2, padding=1)]
    channels = 16
    for stage, width in enumerate((16, 32, 64)):
        for b in range(blocks_per_stage):
            stride = 2 if (stage > 0 and b == 0) else 1
            layers.append(_residual_block(channels, width, stride))
            channels = width
    layers += [BatchNorm2d(64), ReLU(), GlobalAvgPool(), Dense(64, 10)]
    return Sequential(layers)


_BUILDERS = {
    "crystalnet": _crystalnet,
    "lcn": _lcn,
    "alexnet": _alexnet,
    "vgg16": lambda: _vgg("vgg16"),
    "vgg19": lambda: _vgg("vgg19"),
    "inception_v3": _inception_v3,
    "resnet32": lambda: _resnet(5),
    "resnet56": lambda: _resnet(9),
}


def build(spec: ModelSpec) -> Model:
    """Construct and initialize a model; same init_seed, same weights."""
    spec.validate()
    net = _BUILDERS[spec.architecture]()
    assign_names(net)
    rng = np.random.default_rng(np.random.SeedSequence((spec.init_seed,)))
    for layer in iter_layers(net):
        if hasattr(layer, "init"):
            layer.init(rng)
        elif isinstance(layer, Dropout):
            layer.reseed(int(rng.integers(2**63)))
    return Model(spec, net)


def save_checkpoint(model: Model, path: str | Path,
                    extra: Optional[dict] = None) -> None:
    """Write the container: magic, JSON header, then each array as row-major
    32-bit floats in header order. Loading and resaving reproduces the file
    byte for byte."""
    arrays = model.named_arrays()
    header = {
        "format_version": CHECKPOINT_VERSION,
        "spec": asdict(model.spec),
        "extra": extra or {},
        "entries": [{"name": name, "shape": list(arr.shape), "kind": kind}
                    for name, arr, kind in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr, _ in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> tuple[Model, dict]:
    """Rebuild the model a checkpoint describes and load its arrays."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ZooError(f"not a checkpoint file: {path}")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12:12 + hlen])
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise ZooError(f"unsupported checkpoint version: {header.get('format_version')}")
    model = build(ModelSpec(**header["spec"]))
    by_name = {name: arr for name, arr, _ in model.named_arrays()}
    offset = 12 + hlen
    for entry in header["entries"]:
        arr = by_name.get(entry["name"])
        if arr is None or list(arr.shape) != entry["shape"]:
            raise ZooError(f"checkpoint/architecture mismatch at {entry['name']!r}")
        nbytes = arr.size * 4
        data = np.frombuffer(raw[offset:offset + nbytes], dtype="<f4")
        if data.size != arr.size:
            raise ZooError(f"truncated checkpoint at {entry['name']!r}")
        arr[...] = data.reshape(entry["shape"])
        offset += nbytes
    if offset != len(raw):
        raise ZooError("trailing bytes after checkpoint payload")
    return model, header["extra"]


def checkpoint_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def predict_probabilities(model: Model, batch: np.ndarray) -> np.ndarray:
    return softmax(model.forward(batch))
