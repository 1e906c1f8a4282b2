"""Block interleaving: k physical blocks of b bins <-> b logical blocks of k uses.

Logical block l collects bin l from every physical block, so within a
logical block the effective noise values come from disjoint physical blocks
and are independent; across logical blocks dependence is expected.  Both
directions are index transposes returning zero-copy views.
"""

from __future__ import annotations

import numpy as np

__all__ = ["interleave", "deinterleave"]


def interleave(m) -> np.ndarray:
    """k x b physical-block matrix -> b x k logical-block matrix (a view)."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D block matrix, got shape {m.shape}")
    return m.T


def deinterleave(m) -> np.ndarray:
    """Exact inverse of :func:`interleave` (also a transpose view)."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D block matrix, got shape {m.shape}")
    return m.T
