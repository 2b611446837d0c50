"""Volume files (JSON header + raw little-endian f32) and small JSON helpers."""
import json
from pathlib import Path

import numpy as np

from .errors import FileFormatError


def _stem(path):
    path = Path(path)
    if path.suffix in (".json", ".raw"):
        path = path.with_suffix("")
    return path


def write_array(path, dims, spacing, origin, data, meta=None):
    """Write ``data`` of shape ``(nx, ny, nz, c)`` as ``<path>.json`` + ``<path>.raw``."""
    stem = _stem(path)
    data = np.asarray(data)
    if data.ndim == 3:
        data = data[..., None]
    header = {
        "dims": [int(d) for d in dims],
        "spacing": [float(s) for s in spacing],
        "origin": [float(o) for o in origin],
        "dtype": "f32",
        "components": int(data.shape[-1]),
        "order": "x-fastest",
    }
    if meta:
        header["meta"] = meta
    raw = np.ascontiguousarray(data.astype("<f4").transpose(2, 1, 0, 3))
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")
        stem.with_suffix(".raw").write_bytes(raw.tobytes())
    except OSError as exc:
        raise FileFormatError(f"cannot write {stem}: {exc}", path=str(stem)) from exc
    return stem


def read_array(path):
    """Inverse of :func:`write_array`; returns ``(header, data)`` with float64 data."""
    stem = _stem(path)
    header_path = stem.with_suffix(".json")
    raw_path = stem.with_suffix(".raw")
    for p in (header_path, raw_path):
        if not p.exists():
            raise FileFormatError(f"missing file {p}", path=str(p))
    try:
        header = json.loads(header_path.read_text())
        nx, ny, nz = header["dims"]
        comps = int(header["components"])
    except (KeyError, ValueError, TypeError) as exc:
        raise FileFormatError(f"bad volume header {header_path}: {exc}", path=str(header_path)) from exc
    if header.get("dtype") != "f32" or header.get("order", "x-fastest") != "x-fastest":
        raise FileFormatError(f"unsupported dtype/order in {header_path}", path=str(header_path))
    flat = np.frombuffer(raw_path.read_bytes(), dtype="<f4")
    if flat.size != nx * ny * nz * comps:
        raise FileFormatError(
            f"{raw_path} holds {flat.size} values, header expects {nx * ny * nz * comps}",
            path=str(raw_path))
    data = flat.reshape(nz, ny, nx, comps).transpose(2, 1, 0, 3).astype(np.float64)
    return header, data


def write_volume(path, vol):
    return write_array(path, vol.dims, vol.spacing, vol.origin, vol.data)


def read_volume(path):
    from .tensor import TensorVolume

    header, data = read_array(path)
    if data.shape[-1] != 6:
        raise FileFormatError(f"{path} is not a tensor volume", path=str(path))
    return TensorVolume(header["dims"], header["spacing"], header["origin"], data)


def write_mask(path, mask):
    return write_array(path, mask.dims, mask.spacing, mask.origin, mask.data.astype(np.float32))


def read_mask(path):
    from .phantom import BinaryMask

    header, data = read_array(path)
    if data.shape[-1] != 1:
        raise FileFormatError(f"{path} is not a mask", path=str(path))
    return BinaryMask(header["dims"], header["spacing"], header["origin"], data[..., 0] > 0.5)


def dump_json(path, obj):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise FileFormatError(f"cannot write {path}: {exc}", path=str(path)) from exc


def load_json(path):
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"missing file {path}", path=str(path))
    try:
        return json.loads(path.read_text())
    except ValueError as exc:
        raise FileFormatError(f"invalid JSON in {path}: {exc}", path=str(path)) from exc
