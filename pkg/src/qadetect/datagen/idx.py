"""Reader and writer for the IDX binary format used by the MNIST files."""

from __future__ import annotations

import gzip
from pathlib import Path

import numpy as np

from ..errors import FormatError

_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
_CODES = {v.newbyteorder("="): k for k, v in _DTYPES.items()}


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def parse_idx(raw: bytes) -> np.ndarray:
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise FormatError("bad IDX magic number")
    code, ndim = raw[2], raw[3]
    if code not in _DTYPES or ndim == 0:
        raise FormatError(f"unsupported IDX type code {code:#x} / ndim {ndim}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError("truncated IDX header")
    dims = tuple(int(d) for d in np.frombuffer(raw[4:header], dtype=">u4"))
    dtype = _DTYPES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(raw) - header != expected:
        raise FormatError(f"IDX payload is {len(raw) - header} bytes, dims {dims} need {expected}")
    return np.frombuffer(raw[header:], dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def read_idx(path: str | Path) -> np.ndarray:
    path = Path(path)
    with _open(path) as fh:
        return parse_idx(fh.read())


def write_idx(path: str | Path, array: np.ndarray) -> None:
    array = np.asarray(array)
    key = array.dtype.newbyteorder("=")
    if key not in _CODES:
        raise FormatError(f"dtype {array.dtype} has no IDX type code")
    code = _CODES[key]
    header = bytes([0, 0, code, array.ndim]) + np.asarray(array.shape, dtype=">u4").tobytes()
    payload = array.astype(_DTYPES[code]).tobytes()
    path = Path(path)
    opener = (lambda p: gzip.GzipFile(p, "wb", mtime=0)) if path.suffix == ".gz" else (lambda p: open(p, "wb"))
    with opener(path) as fh:
        fh.write(header + payload)
