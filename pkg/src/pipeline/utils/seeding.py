"""
Named random substreams derived from one root seed.

Every random choice in the pipeline draws from a generator keyed by the root
seed plus a path of names (note id, task kind, ...). Results are therefore
independent of processing order and thread count, and any substream can be
regenerated on its own.
"""

import hashlib

import numpy as np


def derive_seed(root: int, *names: object) -> int:
    """Stable 63-bit seed for the substream ``root / names[0] / names[1] ...``."""
    key = "/".join([str(int(root)), *(str(n) for n in names)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def substream(root: int, *names: object) -> np.random.Generator:
    """Numpy generator for a named substream."""
    return np.random.default_rng(derive_seed(root, *names))
