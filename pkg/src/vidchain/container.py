"""Bit-exact binary tensor containers, dataset manifests, and checkpoints.

Container layout (magic "RCG1"), all integers little-endian:

    magic    4 bytes  b"RCG1"
    version  u32      currently 1
    dtype    u32      1 = float32, 2 = float64
    ndim     u32
    dims     ndim * u64
    payload  row-major little-endian scalars

The first dimension sits at a fixed byte offset, so a writer can stream
frames and patch the final length on close — that is how long generated
videos are written incrementally.

A checkpoint (magic "RCGB") is a JSON config echo followed by named RCG1
blobs; loading verifies the config against the caller's and refuses to mix
incompatible runs.

A dataset manifest is line-oriented text: one tab-separated record per
container with its declared geometry and class label.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ContainerError", "ManifestError", "write_container", "read_container",
    "ContainerWriter", "save_checkpoint", "load_checkpoint",
    "ManifestRecord", "write_manifest", "read_manifest", "validate_manifest",
    "load_dataset",
]

MAGIC = b"RCG1"
BUNDLE_MAGIC = b"RCGB"
VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_TAGS = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


class ContainerError(RuntimeError):
    """Malformed, truncated, or incompatible container data."""


class ManifestError(RuntimeError):
    """Manifest record disagrees with the container it points to."""


def _header(dtype_tag: int, dims) -> bytes:
    return (MAGIC + struct.pack("<III", VERSION, dtype_tag, len(dims))
            + struct.pack(f"<{len(dims)}Q", *dims))


def write_container(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.dtype not in _TAGS:
        raise ContainerError(f"unsupported dtype {array.dtype}; use float32 or float64")
    tag = _TAGS[array.dtype]
    with open(path, "wb") as fh:
        fh.write(_header(tag, array.shape))
        fh.write(np.ascontiguousarray(array, dtype=_DTYPES[tag]).tobytes())


def read_container(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise ContainerError(f"container not found: {path}") from None
    return parse_container(blob, name=str(path))


def parse_container(blob: bytes, name: str = "<bytes>") -> np.ndarray:
    if blob[:4] != MAGIC:
        raise ContainerError(f"{name}: bad magic {blob[:4]!r}")
    version, tag, ndim = struct.unpack_from("<III", blob, 4)
    if version != VERSION:
        raise ContainerError(f"{name}: unsupported version {version}")
    if tag not in _DTYPES:
        raise ContainerError(f"{name}: unknown dtype tag {tag}")
    dims = struct.unpack_from(f"<{ndim}Q", blob, 16)
    dtype = _DTYPES[tag]
    start = 16 + 8 * ndim
    count = int(np.prod(dims)) if ndim else 1
    want = start + count * dtype.itemsize
    if len(blob) != want:
        raise ContainerError(f"{name}: payload is {len(blob) - start} bytes, "
                             f"dims {tuple(dims)} require {count * dtype.itemsize}")
    arr = np.frombuffer(blob, dtype=dtype, count=count, offset=start)
    return arr.reshape(dims).astype(dtype.newbyteorder("="), copy=True)


class ContainerWriter:
    """Streaming writer that appends along axis 0 and patches the final length.

    The header is written up front with a zero leading dimension; `close()`
    (or the context manager exit) seeks back and writes the true count, so a
    crash mid-stream leaves an obviously empty container rather than a lie.
    """

    def __init__(self, path, item_shape, dtype=np.float32):
        dtype = np.dtype(dtype)
        if dtype not in _TAGS:
            raise ContainerError(f"unsupported dtype {dtype}")
        self._dtype = _DTYPES[_TAGS[dtype]]
        self._item_shape = tuple(int(d) for d in item_shape)
        self._count = 0
        self._fh = open(path, "wb")
        self._fh.write(_header(_TAGS[dtype], (0,) + self._item_shape))

    def append(self, item: np.ndarray) -> None:
        item = np.asarray(item)
        if item.shape == self._item_shape:
            item = item[None]
        if item.shape[1:] != self._item_shape:
            raise ContainerError(f"item shape {item.shape[1:]} != declared {self._item_shape}")
        self._fh.write(np.ascontiguousarray(item, dtype=self._dtype).tobytes())
        self._count += item.shape[0]

    def close(self) -> int:
        self._fh.seek(16)  # first dim of the header
        self._fh.write(struct.pack("<Q", self._count))
        self._fh.close()
        return self._count

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(path, config: dict, arrays: dict) -> None:
    cfg_blob = json.dumps(config, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC + struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(cfg_blob)) + cfg_blob)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.asarray(arr, dtype=np.float64)
            blob = (_header(2, arr.shape)
                    + np.ascontiguousarray(arr, dtype="<f8").tobytes())
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_b)) + name_b)
            fh.write(struct.pack("<Q", len(blob)) + blob)


def load_checkpoint(path) -> tuple[dict, dict]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise ContainerError(f"checkpoint not found: {path}") from None
    if blob[:4] != BUNDLE_MAGIC:
        raise ContainerError(f"{path}: not a checkpoint (magic {blob[:4]!r})")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack_from("<I", blob, 8)
    pos = 12
    config = json.loads(blob[pos:pos + cfg_len].decode("utf-8"))
    pos += cfg_len
    (count,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    arrays = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        name = blob[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (blob_len,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        arrays[name] = parse_container(blob[pos:pos + blob_len], name=f"{path}:{name}")
        pos += blob_len
    if pos != len(blob):
        raise ContainerError(f"{path}: {len(blob) - pos} trailing bytes")
    return config, arrays


# -- manifests -------------------------------------------------------------------

@dataclass
class ManifestRecord:
    path: str      # container path relative to the manifest
    frames: int
    height: int
    width: int
    channels: int
    label: int     # class id, -1 for unlabeled


def write_manifest(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# path\tframes\theight\twidth\tchannels\tlabel\n")
        for r in records:
            fh.write(f"{r.path}\t{r.frames}\t{r.height}\t{r.width}\t{r.channels}\t{r.label}\n")


def read_manifest(path) -> list[ManifestRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ManifestError(f"{path}:{lineno}: expected 6 tab-separated fields")
        records.append(ManifestRecord(parts[0], *(int(p) for p in parts[1:])))
    return records


def validate_manifest(path) -> list[ManifestRecord]:
    """Check every record's container exists and matches its declared dims."""
    records = read_manifest(path)
    base = os.path.dirname(os.path.abspath(path))
    for rec in records:
        arr = read_container(os.path.join(base, rec.path))
        declared = (rec.frames, rec.height, rec.width, rec.channels)
        if arr.shape != declared:
            raise ManifestError(
                f"{rec.path}: container shape {arr.shape} != declared {declared}")
    return records


def load_dataset(path) -> tuple[list[np.ndarray], np.ndarray]:
    """Videos (float64 (L,H,W,C) arrays) and labels from a validated manifest."""
    records = validate_manifest(path)
    base = os.path.dirname(os.path.abspath(path))
    videos = [read_container(os.path.join(base, rec.path)).astype(np.float64)
              for rec in records]
    labels = np.array([rec.label for rec in records], dtype=np.int64)
    return videos, labels
