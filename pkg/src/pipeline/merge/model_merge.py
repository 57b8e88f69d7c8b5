"""
Parameter-averaging merges of two tensor bundles.

``weighted_merge`` computes ``λ·a + (1-λ)·b`` per element, accumulating in
float64 and casting back to float32. The endpoints λ=1 and λ=0 copy the
corresponding input exactly. ``doge_merge`` is the plain 0.5/0.5 average.
"""

from __future__ import annotations

import fnmatch
from collections.abc import Sequence

import numpy as np

from ..core.errors import MergeSchemaError
from ..io.tensor_store import TensorBundle
from ..logging.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_LAMBDA = 0.7


def weighted_merge(
    a: TensorBundle,
    b: TensorBundle,
    lam: float = DEFAULT_LAMBDA,
    *,
    exclude: Sequence[str] = (),
    labels: tuple[str, str] = ("a", "b"),
) -> TensorBundle:
    """Per-element ``lam * a + (1 - lam) * b``.

    Tensors whose name matches any glob in *exclude* are copied from *a*.
    The result carries a ``merge`` metadata entry such as ``0.7 p10 + 0.3 p2``.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    check_schema(a, b)

    merged: dict[str, np.ndarray] = {}
    excluded = 0
    for name in a.names:
        if any(fnmatch.fnmatchcase(name, pat) for pat in exclude):
            merged[name] = a[name].copy()
            excluded += 1
        elif lam == 1.0:
            merged[name] = a[name].copy()
        elif lam == 0.0:
            merged[name] = b[name].copy()
        else:
            acc = lam * a[name].astype(np.float64) + (1.0 - lam) * b[name].astype(np.float64)
            merged[name] = acc.astype(np.float32)

    logger.info(
        "Merged %d tensors (lambda=%s, %d excluded)", len(merged), _fmt(lam), excluded
    )
    return TensorBundle(tensors=merged, metadata={"merge": merge_label(lam, *labels)})


def doge_merge(
    sft: TensorBundle,
    rm: TensorBundle,
    *,
    exclude: Sequence[str] = (),
    labels: tuple[str, str] = ("sft", "rm"),
) -> TensorBundle:
    """Simple average of a task-tuned and a reasoning-tuned bundle."""
    return weighted_merge(sft, rm, 0.5, exclude=exclude, labels=labels)


def check_schema(a: TensorBundle, b: TensorBundle) -> None:
    """Require identical names, shapes and dtypes."""
    names_a, names_b = set(a.names), set(b.names)
    if names_a != names_b:
        diff = sorted(names_a ^ names_b)
        raise MergeSchemaError(f"tensor names differ: {', '.join(diff)}")
    for name in a.names:
        if a[name].shape != b[name].shape:
            raise MergeSchemaError(
                f"shape mismatch for tensor '{name}': "
                f"{list(a[name].shape)} vs {list(b[name].shape)}"
            )
        if a[name].dtype != b[name].dtype:
            raise MergeSchemaError(f"dtype mismatch for tensor '{name}'")


def merge_label(lam: float, label_a: str, label_b: str) -> str:
    return f"{_fmt(lam)} {label_a} + {_fmt(1.0 - lam)} {label_b}"


def _fmt(x: float) -> str:
    return f"{round(x, 6):g}"
