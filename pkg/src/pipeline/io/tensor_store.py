"""
Named tensor bundles stored in the safetensors container format.

Layout: 8-byte little-endian header length N, N bytes of JSON mapping each
tensor name to ``{"dtype", "shape", "data_offsets"}`` (plus an optional
``__metadata__`` string map), then the raw little-endian payload. Only F32
tensors are supported.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from safetensors import SafetensorError, safe_open
from safetensors.numpy import save as serialize_numpy

from ..core.errors import BundleFormatError
from ..logging.logging_config import get_logger
from .jsonl import atomic_open

logger = get_logger(__name__)

SUPPORTED_DTYPE = "F32"
_HEADER_LEN_BYTES = 8
_METADATA_KEY = "__metadata__"


@dataclass
class TensorBundle:
    """name → float32 array, plus string metadata carried in the header."""

    tensors: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.tensors = {
            name: np.ascontiguousarray(arr, dtype=np.float32)
            for name, arr in sorted(self.tensors.items())
        }

    def __len__(self) -> int:
        return len(self.tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    @property
    def names(self) -> list[str]:
        return list(self.tensors)

    def schema(self) -> dict[str, tuple[int, ...]]:
        return {name: tuple(arr.shape) for name, arr in self.tensors.items()}


def load_bundle(path: str | Path, *, allow_nonfinite: bool = False) -> TensorBundle:
    """Read and validate a bundle. NaN/Inf values are rejected unless allowed."""
    p = Path(path)
    header = _read_header(p)

    try:
        with safe_open(str(p), framework="numpy") as fh:
            tensors = {name: fh.get_tensor(name) for name in sorted(fh.keys())}
            metadata = dict(fh.metadata() or {})
    except SafetensorError as exc:
        raise BundleFormatError(f"{p}: {exc}") from exc

    if not allow_nonfinite:
        for name, arr in tensors.items():
            if not np.isfinite(arr).all():
                raise BundleFormatError(f"{p}: non-finite values in tensor '{name}'")

    logger.debug("Loaded %d tensors from %s", len(header), p.name)
    return TensorBundle(tensors=tensors, metadata=metadata)


def save_bundle(bundle: TensorBundle, path: str | Path) -> Path:
    """Serialize canonically (sorted names) and write atomically."""
    payload = serialize_numpy(
        {name: np.ascontiguousarray(arr, dtype=np.float32) for name, arr in bundle.tensors.items()},
        metadata=dict(bundle.metadata) or None,
    )
    with atomic_open(path, "wb") as fh:
        fh.write(payload)
    logger.debug("Saved %d tensors to %s", len(bundle), Path(path).name)
    return Path(path)


def _read_header(p: Path) -> Mapping[str, Any]:
    """Validate the header against the payload before handing off to safetensors."""
    try:
        raw = p.read_bytes()
    except FileNotFoundError:
        raise BundleFormatError(f"bundle not found: {p}") from None
    except OSError as exc:
        raise BundleFormatError(f"cannot read {p}: {exc}") from exc

    if len(raw) < _HEADER_LEN_BYTES:
        raise BundleFormatError(f"{p}: file shorter than the header length field")
    n = int.from_bytes(raw[:_HEADER_LEN_BYTES], "little")
    if len(raw) < _HEADER_LEN_BYTES + n:
        raise BundleFormatError(f"{p}: header shorter than its declared length {n}")
    try:
        header = json.loads(raw[_HEADER_LEN_BYTES : _HEADER_LEN_BYTES + n])
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleFormatError(f"{p}: header is not valid JSON") from exc
    if not isinstance(header, dict):
        raise BundleFormatError(f"{p}: header must be a JSON object")

    payload_len = len(raw) - _HEADER_LEN_BYTES - n
    entries = {k: v for k, v in header.items() if k != _METADATA_KEY}
    for name, info in entries.items():
        if not isinstance(info, dict) or not {"dtype", "shape", "data_offsets"} <= info.keys():
            raise BundleFormatError(f"{p}: malformed header entry for tensor '{name}'")
        if info["dtype"] != SUPPORTED_DTYPE:
            raise BundleFormatError(f"{p}: unsupported dtype {info['dtype']} for tensor '{name}'")
        shape, offsets = info["shape"], info["data_offsets"]
        if not isinstance(shape, list) or not all(_is_count(d) for d in shape):
            raise BundleFormatError(
                f"{p}: tensor '{name}' shape must be a list of non-negative ints"
            )
        if (
            not isinstance(offsets, list)
            or len(offsets) != 2
            or not all(_is_count(o) for o in offsets)
            or offsets[0] > offsets[1]
        ):
            raise BundleFormatError(
                f"{p}: tensor '{name}' data_offsets must be two ints with begin <= end"
            )
        begin, end = offsets
        if end > payload_len:
            raise BundleFormatError(f"{p}: payload shorter than header declares")
        expected = math.prod(shape) * 4
        if end - begin != expected:
            raise BundleFormatError(
                f"{p}: tensor '{name}' spans {end - begin} bytes, shape needs {expected}"
            )
    return entries


def _is_count(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= 0
