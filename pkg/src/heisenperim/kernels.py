"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``HEISENPERIM_PURE=1`` to
force the numpy fallback.  ``HEISENPERIM_THREADS`` caps the worker count used
for chunked mesh evaluation.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("HEISENPERIM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

CHUNK = 1 << 15


def n_workers() -> int:
    raw = os.environ.get("HEISENPERIM_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, min(cap, os.cpu_count() or 1))


def support_max(w, verts) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=float).reshape(-1, 2)
    verts = np.ascontiguousarray(verts, dtype=float)
    return _impl.support_max(w, verts)


def tri_contents(p0, p1, p2, bary, verts=None, radius: float = 0.0) -> np.ndarray:
    """Per-triangle content, evaluated in fixed-size chunks (possibly threaded)."""
    p0, p1, p2 = (np.ascontiguousarray(p, dtype=float) for p in (p0, p1, p2))
    bary = np.ascontiguousarray(bary, dtype=float)
    if verts is None:
        verts = np.zeros((1, 2))
    verts = np.ascontiguousarray(verts, dtype=float)
    n = len(p0)
    starts = list(range(0, n, CHUNK))

    def run(s):
        e = min(n, s + CHUNK)
        return _impl.tri_contents(p0[s:e], p1[s:e], p2[s:e], bary, verts, float(radius))

    workers = min(n_workers(), len(starts))
    if workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, starts))
    return np.concatenate(parts) if parts else np.zeros(0)


def stable_sum(values: np.ndarray) -> float:
    """Chunked sum whose rounding does not depend on worker count."""
    values = np.asarray(values, dtype=float).ravel()
    return math.fsum(float(values[s:s + CHUNK].sum()) for s in range(0, len(values), CHUNK))
