"""Model specs, construction, prediction, and the APNN file format."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, FormatError, ShapeMismatch
from .functional import softmax
from .layers import LSTM, BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2, ReLU

MODEL_IDS = ("cnn", "mlp", "rnn")
INPUT_SHAPE = (1, 28, 28)
NUM_CLASSES = 10

_MAGIC = b"APNN"
_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    args: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.args}

    @classmethod
    def from_json(cls, obj: dict) -> "LayerSpec":
        args = dict(obj)
        kind = args.pop("kind")
        return cls(kind=kind, args=args)


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        if not self.layers or self.layers[-1].kind != "softmax":
            raise ConfigError("model spec must end with a softmax layer")


def model_spec(model_id: str) -> ModelSpec:
    """The three reference architectures; cnn-aug shares the cnn topology."""
    base = model_id.removesuffix("-aug")
    if base == "cnn":
        layers = [
            LayerSpec("conv2d", {"out_channels": 32, "k": 3, "stride": 1, "pad": 1}),
            LayerSpec("batchnorm"),
            LayerSpec("relu"),
            LayerSpec("conv2d", {"out_channels": 32, "k": 3, "stride": 1, "pad": 1}),
            LayerSpec("batchnorm"),
            LayerSpec("relu"),
            LayerSpec("maxpool2"),
            LayerSpec("conv2d", {"out_channels": 64, "k": 3, "stride": 1, "pad": 1}),
            LayerSpec("batchnorm"),
            LayerSpec("relu"),
            LayerSpec("maxpool2"),
            LayerSpec("flatten"),
            LayerSpec("dense", {"units": 128}),
            LayerSpec("relu"),
            LayerSpec("dense", {"units": NUM_CLASSES}),
            LayerSpec("softmax"),
        ]
    elif base == "mlp":
        layers = [
            LayerSpec("flatten"),
            LayerSpec("dense", {"units": 256}),
            LayerSpec("relu"),
            LayerSpec("dense", {"units": 128}),
            LayerSpec("relu"),
            LayerSpec("dense", {"units": NUM_CLASSES}),
            LayerSpec("softmax"),
        ]
    elif base == "rnn":
        layers = [
            LayerSpec("lstm", {"hidden": 128}),
            LayerSpec("dense", {"units": NUM_CLASSES}),
            LayerSpec("softmax"),
        ]
    else:
        raise ConfigError(f"unknown model id {model_id!r}")
    return ModelSpec(model_id=base, layers=tuple(layers))


def _wants_relu(specs: tuple[LayerSpec, ...], idx: int) -> bool:
    """He init when the next activation downstream is a ReLU."""
    for nxt in specs[idx + 1 :]:
        if nxt.kind == "relu":
            return True
        if nxt.kind in ("dense", "conv2d", "lstm", "softmax"):
            return False
    return False


class Model:
    """Ordered layers with the terminal softmax handled by the loss/predict."""

    def __init__(self, spec: ModelSpec, layers: list[Layer], dtype):
        self.spec = spec
        self.layers = layers
        self.dtype = dtype

    def forward_logits(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward_from_logits(self, dlogits: np.ndarray) -> np.ndarray:
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward_logits(x, train=False))


def build_model(spec: ModelSpec, rng: np.random.Generator | None = None, dtype=np.float32) -> Model:
    """Instantiate layers, chaining shapes from 28x28x1 to the 10 classes."""
    rng = rng or np.random.default_rng(0)
    shape: tuple = INPUT_SHAPE
    layers: list[Layer] = []
    for idx, ls in enumerate(spec.layers):
        init = "he" if _wants_relu(spec.layers, idx) else "glorot"
        if ls.kind == "conv2d":
            if len(shape) != 3:
                raise ConfigError(f"conv2d needs a (C, H, W) input, have {shape}")
            layer = Conv2D(
                shape[0],
                ls.args["out_channels"],
                ls.args["k"],
                stride=ls.args.get("stride", 1),
                pad=ls.args.get("pad", 0),
                rng=rng,
                dtype=dtype,
                init=init,
            )
            ho, wo = layer.out_hw(shape[1], shape[2])
            shape = (ls.args["out_channels"], ho, wo)
        elif ls.kind == "batchnorm":
            layer = BatchNorm(shape[0], dtype=dtype)
        elif ls.kind == "relu":
            layer = ReLU()
        elif ls.kind == "maxpool2":
            if len(shape) != 3 or shape[1] % 2 or shape[2] % 2:
                raise ConfigError(f"maxpool2 needs even (C, H, W), have {shape}")
            layer = MaxPool2()
            shape = (shape[0], shape[1] // 2, shape[2] // 2)
        elif ls.kind == "flatten":
            layer = Flatten()
            shape = (int(np.prod(shape)),)
        elif ls.kind == "dense":
            if len(shape) != 1:
                raise ConfigError(f"dense needs a flat input, have {shape}")
            layer = Dense(shape[0], ls.args["units"], rng=rng, dtype=dtype, init=init)
            shape = (ls.args["units"],)
        elif ls.kind == "lstm":
            if len(shape) != 3 or shape[0] != 1:
                raise ConfigError(f"lstm consumes the raw (1, H, W) image, have {shape}")
            layer = LSTM(shape[2], ls.args["hidden"], rng=rng, dtype=dtype)
            shape = (ls.args["hidden"],)
        elif ls.kind == "softmax":
            if shape != (NUM_CLASSES,):
                raise ConfigError(f"softmax input must be ({NUM_CLASSES},), have {shape}")
            continue  # terminal; applied by the loss and by predict
        else:
            raise ConfigError(f"unknown layer kind {ls.kind!r}")
        layers.append(layer)
    return Model(spec, layers, dtype)


@dataclass
class ModelBundle:
    """A trained classifier: architecture, weights, and training metadata."""

    model: Model
    metadata: dict = field(default_factory=dict)

    @property
    def model_id(self) -> str:
        return self.model.spec.model_id

    def info(self) -> dict:
        return {
            "model_id": self.model_id,
            "layers": [ls.to_json() for ls in self.model.spec.layers],
            "metadata": self.metadata,
        }


def predict(bundle: ModelBundle, image) -> tuple[int, float, np.ndarray]:
    """Digit, confidence, and the full probability vector for one image.

    Argmax ties resolve toward the lower digit.
    """
    from ..gesture import DigitImage

    if isinstance(image, DigitImage):
        arr = image.pixels
    else:
        arr = np.asarray(image)
        if arr.dtype == np.uint8:
            arr = arr.astype(np.float64) / 255.0
    if arr.shape == (784,):
        arr = arr.reshape(28, 28)
    if arr.shape != (28, 28):
        raise ShapeMismatch(f"predict expects a 28x28 image, got {arr.shape}")
    x = arr.reshape(1, 1, 28, 28).astype(bundle.model.dtype)
    probs = bundle.model.predict_proba(x)[0]
    digit = int(np.argmax(probs))
    return digit, float(probs[digit]), probs


def _tensor_items(model: Model):
    for li, layer in enumerate(model.layers):
        for name, arr in layer.params.items():
            yield f"{li}.{layer.kind}.{name}", arr, (layer, name, "params")
        for name, arr in layer.buffers.items():
            yield f"{li}.{layer.kind}.{name}", arr, (layer, name, "buffers")


def save_model(bundle: ModelBundle, path) -> None:
    """APNN container: JSON header then raw float32 payloads in header order."""
    tensors = []
    payload = bytearray()
    for name, arr, _ in _tensor_items(bundle.model):
        arr32 = np.ascontiguousarray(arr, dtype=np.float32)
        tensors.append({"name": name, "shape": list(arr.shape)})
        payload.extend(arr32.tobytes())
    header = json.dumps(
        {
            "model_id": bundle.model_id,
            "layers": [ls.to_json() for ls in bundle.model.spec.layers],
            "tensors": tensors,
            "metadata": bundle.metadata,
        }
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", _MAGIC, _VERSION, len(header)))
        fh.write(header)
        fh.write(payload)


def load_model(path) -> ModelBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise FormatError("model file shorter than header")
    magic, version, hlen = struct.unpack_from("<4sII", blob)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise FormatError(f"unsupported version {version}")
    if len(blob) < 12 + hlen:
        raise FormatError("truncated header")
    try:
        header = json.loads(blob[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from exc

    spec = ModelSpec(
        model_id=header["model_id"],
        layers=tuple(LayerSpec.from_json(o) for o in header["layers"]),
    )
    model = build_model(spec, rng=np.random.default_rng(0), dtype=np.float32)

    declared = {t["name"]: tuple(t["shape"]) for t in header["tensors"]}
    expected_bytes = sum(int(np.prod(s)) * 4 for s in declared.values())
    payload = blob[12 + hlen :]
    if len(payload) != expected_bytes:
        raise FormatError(
            f"payload is {len(payload)} bytes, header declares {expected_bytes}"
        )

    locations = {name: (arr.shape, loc) for name, arr, loc in _tensor_items(model)}
    offset = 0
    seen = set()
    for t in header["tensors"]:
        name = t["name"]
        if name not in locations:
            raise FormatError(f"unexpected tensor {name!r}")
        shape = tuple(t["shape"])
        expected_shape, (layer, pname, group) = locations[name]
        if shape != expected_shape:
            raise FormatError(f"tensor {name}: shape {shape} != expected {expected_shape}")
        count = int(np.prod(shape))
        data = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset += count * 4
        getattr(layer, group)[pname] = data.copy()
        seen.add(name)
    if seen != set(locations):
        raise FormatError(f"missing tensors: {sorted(set(locations) - seen)}")
    return ModelBundle(model=model, metadata=header.get("metadata", {}))
