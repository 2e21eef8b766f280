"""Pure numpy versions of the hot loops.  Signatures mirror ``_ckernels``."""
from __future__ import annotations

import numpy as np


def support_max(w: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Row-wise ``max_k <verts[k], w[i]>``."""
    w = np.asarray(w, dtype=float)
    if len(w) == 0:
        return np.zeros(0)
    return np.max(w @ np.asarray(verts, dtype=float).T, axis=1)


def tri_contents(p0, p1, p2, bary, verts, radius: float) -> np.ndarray:
    """Per-triangle content of a flat mesh.

    For every triangle the area vector ``nA`` (|nA| = area) is projected to the
    horizontal frame at each barycentric sample point ``c`` as
    ``(nA_x - c_y nA_z / 2, nA_y + c_x nA_z / 2)`` and passed through the
    support function of the body (vertex list, or disk when ``radius > 0``).
    The mean over samples is returned.
    """
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    p2 = np.asarray(p2, float)
    nA = 0.5 * np.cross(p1 - p0, p2 - p0)
    out = np.zeros(len(p0))
    bary = np.asarray(bary, float)
    for l0, l1, l2 in bary:
        c = l0 * p0 + l1 * p1 + l2 * p2
        px = nA[:, 0] - 0.5 * c[:, 1] * nA[:, 2]
        py = nA[:, 1] + 0.5 * c[:, 0] * nA[:, 2]
        if radius > 0:
            out += radius * np.hypot(px, py)
        else:
            out += np.max(np.outer(px, verts[:, 0]) + np.outer(py, verts[:, 1]), axis=1)
    return out / len(bary)
