"""Dataset ingestion, result serialization, and run configuration.

IDX is the big-endian binary container used by the MNIST-family files:
two zero bytes, a dtype code, a dimension-count byte, that many u32
sizes, then the raw row-major payload.  CSV output fixes float formatting
at 17 significant digits so identical runs produce identical bytes.
Configs are flat ``key = value`` text with ``#`` comments.
"""

import os
import struct

import numpy as np
from dataclasses import dataclass, fields

from .errors import ConfigError, ContractError
from .rng import SplitMix64

IDX_DTYPES = {
    0x08: ("u1", 1),
    0x09: ("i1", 1),
    0x0B: (">i2", 2),
    0x0C: (">i4", 4),
    0x0D: (">f4", 4),
    0x0E: (">f8", 8),
}

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ConfigError):
    """Malformed IDX container; message carries the failing byte offset."""

    def __init__(self, path, offset, message):
        self.offset = offset
        super().__init__(f"{path}: byte {offset}: {message}")


@dataclass
class IdxTensor:
    dtype_code: int
    dims: tuple
    payload: bytes

    def to_array(self):
        np_dtype, _ = IDX_DTYPES[self.dtype_code]
        return np.frombuffer(self.payload, dtype=np_dtype).reshape(self.dims)

    @property
    def magic(self):
        return (self.dtype_code << 8) | len(self.dims)


def load_idx(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4:
        raise IdxFormatError(path, len(raw), "file shorter than the 4-byte magic")
    if raw[0] != 0 or raw[1] != 0:
        raise IdxFormatError(path, 0 if raw[0] else 1, "magic must start with two zero bytes")
    dtype_code = raw[2]
    if dtype_code not in IDX_DTYPES:
        raise IdxFormatError(path, 2, f"unknown dtype code 0x{dtype_code:02x}")
    ndim = raw[3]
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise IdxFormatError(path, len(raw), f"truncated header: need {header_len} bytes for {ndim} dims")
    dims = struct.unpack(f">{ndim}I", raw[4:header_len])
    _, width = IDX_DTYPES[dtype_code]
    expected = int(np.prod(dims, dtype=np.int64)) * width if ndim else width
    actual = len(raw) - header_len
    if actual < expected:
        raise IdxFormatError(path, len(raw), f"truncated payload: have {actual} bytes, need {expected}")
    if actual > expected:
        raise IdxFormatError(path, header_len + expected, f"trailing bytes: have {actual}, expected {expected}")
    return IdxTensor(dtype_code=dtype_code, dims=tuple(dims), payload=raw[header_len:])


def save_idx(tensor, path):
    header = bytes([0, 0, tensor.dtype_code, len(tensor.dims)])
    header += struct.pack(f">{len(tensor.dims)}I", *tensor.dims)
    with open(path, "wb") as f:
        f.write(header + tensor.payload)


def load_image_file(path):
    t = load_idx(path)
    if t.magic != IMAGE_MAGIC:
        raise IdxFormatError(path, 2, f"expected image magic 0x{IMAGE_MAGIC:08x}, got 0x{t.magic:08x}")
    return t


def load_label_file(path):
    t = load_idx(path)
    if t.magic != LABEL_MAGIC:
        raise IdxFormatError(path, 2, f"expected label magic 0x{LABEL_MAGIC:08x}, got 0x{t.magic:08x}")
    return t


def load_split(images_path, labels_path, n_classes=10):
    """Scaled flat inputs in [0, 1] plus integer labels, counts validated."""
    images = load_image_file(images_path)
    labels = load_label_file(labels_path)
    if images.dims[0] != labels.dims[0]:
        raise ContractError(
            f"image count {images.dims[0]} does not match label count {labels.dims[0]}")
    x = images.to_array().reshape(images.dims[0], -1).astype(np.float64) / 255.0
    y = labels.to_array().astype(np.int64)
    if y.size and int(y.max()) >= n_classes:
        raise ContractError(f"label {int(y.max())} outside [0, {n_classes})")
    return x, y


def to_batches(inputs, labels, batch_size, rng, subset=None):
    """One epoch of (inputs, labels) batches in a fresh shuffled order.

    The subset takes the first N examples before shuffling, so a given
    subset size always selects the same data.  The remainder batch is kept.
    """
    inputs = np.asarray(inputs)
    labels = np.asarray(labels)
    if inputs.shape[0] != labels.shape[0]:
        raise ContractError(f"count mismatch: {inputs.shape[0]} inputs vs {labels.shape[0]} labels")
    n = labels.shape[0]
    if subset is not None:
        if subset > n:
            raise ContractError(f"subset {subset} exceeds dataset size {n}")
        n = int(subset)
    if batch_size < 1:
        raise ContractError(f"batch size must be >= 1, got {batch_size}")
    order = rng.permutation(n)
    return [
        (inputs[order[lo:lo + batch_size]], labels[order[lo:lo + batch_size]])
        for lo in range(0, n, batch_size)
    ]


def format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path, header, rows):
    """Header plus rows, floats at 17 significant digits, newline-terminated."""
    width = len(header)
    lines = [",".join(header)]
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ContractError(f"row {i} has {len(row)} cells, header has {width}")
        lines.append(",".join(format_cell(c) for c in row))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path):
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    if not lines:
        raise ContractError(f"{path}: empty CSV")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


KINDS = ("anneal-demo", "fixedpoint", "online", "train", "sweep-eps", "bench")

_LIST_KEYS = {"optimizer": str, "seed": int, "eps": float, "kappa": float, "layers": int}
_SCALAR_KEYS = {
    "kind": str,
    "gamma": float,
    "beta": float,
    "lambda": float,
    "beta2": float,
    "momentum": float,
    "dampening": float,
    "stability": float,
    "lr_schedule": str,
    "beta_schedule": str,
    "epochs": int,
    "batch_size": int,
    "subset": int,
    "T": int,
    "C": float,
    "grid_lo": float,
    "grid_hi": float,
    "grid_points": int,
    "n_pairs": int,
    "project": bool,
    "data_dir": str,
    "out_dir": str,
}


@dataclass
class RunConfig:
    kind: str = None
    optimizer: list = None
    seed: list = None
    eps: list = None
    kappa: list = None
    layers: list = None
    gamma: float = None
    beta: float = None
    lam: float = None
    beta2: float = None
    momentum: float = None
    dampening: float = None
    stability: float = None
    lr_schedule: str = None
    beta_schedule: str = None
    epochs: int = None
    batch_size: int = None
    subset: int = None
    T: int = None
    C: float = None
    grid_lo: float = None
    grid_hi: float = None
    grid_points: int = None
    n_pairs: int = None
    project: bool = None
    data_dir: str = None
    out_dir: str = None

    def merged_with(self, **overrides):
        out = RunConfig(**{f.name: getattr(self, f.name) for f in fields(self)})
        for key, value in overrides.items():
            if value is not None:
                setattr(out, key, value)
        return out

    def items(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                yield f.name, value


_FIELD_FOR_KEY = {"lambda": "lam"}


def _parse_scalar(key, text, caster, line_no):
    text = text.strip()
    if caster is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"line {line_no}: {key} expects a boolean, got {text!r}")
    try:
        return caster(text)
    except ValueError:
        kindname = {int: "an integer", float: "a number"}.get(caster, "a value")
        raise ConfigError(f"line {line_no}: {key} expects {kindname}, got {text!r}") from None


def parse_config(source):
    """Parse ``key = value`` text (or a path to it) into a RunConfig.

    Unknown keys and duplicate keys are errors, not warnings; every error
    message names the offending line.
    """
    if isinstance(source, str) and "\n" not in source and os.path.exists(source):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = source
    cfg = RunConfig()
    seen = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in seen:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        seen.add(key)
        if key in _LIST_KEYS:
            caster = _LIST_KEYS[key]
            parts = [p for p in (s.strip() for s in value.split(",")) if p]
            if not parts:
                raise ConfigError(f"line {line_no}: {key} expects at least one value")
            setattr(cfg, _FIELD_FOR_KEY.get(key, key),
                    [_parse_scalar(key, p, caster, line_no) for p in parts])
        elif key in _SCALAR_KEYS:
            setattr(cfg, _FIELD_FOR_KEY.get(key, key),
                    _parse_scalar(key, value, _SCALAR_KEYS[key], line_no))
        else:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
    if cfg.kind is not None and cfg.kind not in KINDS:
        raise ConfigError(f"unknown kind {cfg.kind!r}; choose from {KINDS}")
    return cfg


_REQUIRED = {"train": ("data_dir",), "sweep-eps": ("data_dir",)}


def validate_config(cfg):
    if cfg.kind is None:
        raise ConfigError("config must set 'kind'")
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown kind {cfg.kind!r}; choose from {KINDS}")
    for key in _REQUIRED.get(cfg.kind, ()):
        if getattr(cfg, key) is None:
            raise ConfigError(f"kind={cfg.kind} requires {key!r} (flag, config file, or environment)")
    return cfg


def write_manifest(path, cfg, version):
    """Resolved config as reparseable key = value text; reruns match byte for byte."""
    lines = [f"version = {version}"]
    for name, value in sorted(cfg.items()):
        key = "lambda" if name == "lam" else name
        if isinstance(value, list):
            lines.append(f"{key} = {','.join(format_cell(v) for v in value)}")
        else:
            lines.append(f"{key} = {format_cell(value)}")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def synthetic_classification(n, n_classes=10, side=28, seed=99, prototype_noise=0.25):
    """Deterministic image-like classification set for tests and demos.

    Each class gets a smooth random prototype image; samples are the
    prototype plus pixel noise, quantized to bytes like a real scan.
    Returns (images uint8 (n, side, side), labels int64).
    """
    rng = SplitMix64(seed)
    proto_rng = rng.split()
    sample_rng = rng.split()
    grid = np.linspace(-1.0, 1.0, side)
    xx, yy = np.meshgrid(grid, grid)
    protos = []
    for _ in range(n_classes):
        cx, cy = proto_rng.uniform_array(2, -0.6, 0.6)
        sx, sy = proto_rng.uniform_array(2, 0.15, 0.5)
        blob = np.exp(-(((xx - cx) / sx) ** 2 + ((yy - cy) / sy) ** 2))
        ridge = 0.4 * np.cos(3.0 * proto_rng.uniform() * (xx + yy))
        protos.append(np.clip(blob + ridge, 0.0, 1.0))
    labels = (np.arange(n) % n_classes).astype(np.int64)
    order = sample_rng.permutation(n)
    labels = labels[order]
    noise = sample_rng.normal_array((n, side, side)) * prototype_noise
    images = np.stack([protos[c] for c in labels]) + noise
    images = np.clip(images, 0.0, 1.0)
    return np.round(images * 255.0).astype(np.uint8), labels


def write_synthetic_idx(directory, n_train=600, n_test=200, side=28, seed=99):
    """Write a small synthetic dataset in the four canonical IDX files."""
    os.makedirs(directory, exist_ok=True)
    train_imgs, train_labels = synthetic_classification(n_train, side=side, seed=seed)
    test_imgs, test_labels = synthetic_classification(n_test, side=side, seed=seed + 1)
    names = {
        "train-images-idx3-ubyte": train_imgs,
        "t10k-images-idx3-ubyte": test_imgs,
    }
    for name, arr in names.items():
        save_idx(IdxTensor(0x08, arr.shape, arr.tobytes()), os.path.join(directory, name))
    for name, arr in (("train-labels-idx1-ubyte", train_labels),
                      ("t10k-labels-idx1-ubyte", test_labels)):
        save_idx(IdxTensor(0x08, (arr.size,), arr.astype(np.uint8).tobytes()),
                 os.path.join(directory, name))
    return directory
