"""Deterministic seed derivation.

All randomness flows from one root seed; each stage (and each article, pair,
etc. within a stage) derives its own sub-seed by name so stages can be rerun
independently with identical results. Uses SHA-256, not hash(), so values are
stable across processes and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive(root: int, *labels) -> int:
    """64-bit sub-seed for (root, label path)."""
    key = "/".join([str(int(root))] + [str(l) for l in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(root: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive(root, *labels))
