"""Deterministic random-stream derivation.

Every random draw in the library flows from a single 64-bit root seed.
Child streams are derived by hashing the root seed together with a tuple
of string/number labels, so independent computations (per radius, per
check, per sample batch) get decorrelated streams that do not depend on
execution order or worker count.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(seed: int, *labels) -> int:
    """Derive a 64-bit child seed from a root seed and a label tuple."""
    tag = repr((int(seed) & _MASK64,) + tuple(_canonical(l) for l in labels))
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(seed: int, *labels) -> np.random.Generator:
    """Counter-based generator (Philox) for the derived child stream."""
    return np.random.Generator(np.random.Philox(key=child_seed(seed, *labels)))


def _canonical(label):
    if isinstance(label, (np.floating, float)):
        return repr(float(label))
    if isinstance(label, (np.integer, int)):
        return repr(int(label))
    return str(label)
