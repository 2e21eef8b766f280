"""Adaptive midpoint quadrature over planar quadrilaterals.

Each quadrilateral is the bilinear image of the unit square (corners in the
order p00, p10, p11, p01; triangles are quadrilaterals with p11 == p01).
Cells are split 1:4 until the midpoint value of a cell and the sum over its
four children agree to ``rtol`` times the running integral, weighted by the
cell's share of the total area.  The four cell corners give a second check
(product trapezoid rule): a straight kink can clip a cell without touching any
of the five midpoints, but it always separates some corner from the rest.
For smooth integrands the trapezoid gap is about three times the midpoint gap,
so it is scaled by 1/3.  Work proceeds level by level in array order, so the
result does not depend on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kernels import stable_sum


class QuadratureError(RuntimeError):
    pass


@dataclass
class QuadResult:
    value: float
    error: float
    cells: int
    evaluations: int
    converged: bool
    nodes: Optional[np.ndarray] = field(default=None, repr=False)
    weights: Optional[np.ndarray] = field(default=None, repr=False)


def bilinear(quads: np.ndarray, s: np.ndarray, t: np.ndarray):
    """Map points ``(s, t)`` of the unit square in quad ``q`` to the plane; also |Jacobian|."""
    p00, p10, p11, p01 = quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]
    s = s[:, None]
    t = t[:, None]
    X = (1 - s) * (1 - t) * p00 + s * (1 - t) * p10 + s * t * p11 + (1 - s) * t * p01
    ds = (1 - t) * (p10 - p00) + t * (p11 - p01)
    dt = (1 - s) * (p01 - p00) + s * (p11 - p10)
    J = np.abs(ds[:, 0] * dt[:, 1] - ds[:, 1] * dt[:, 0])
    return X, J


def quad_area(quads: np.ndarray) -> np.ndarray:
    P = np.asarray(quads, float)
    x, y = P[..., 0], P[..., 1]
    return 0.5 * np.abs(np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1))


_CHILD = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
_CORNER = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def integrate(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    quads,
    rtol: float = 1e-4,
    init: int = 8,
    max_level: int = 16,
    max_evals: int = 40_000_000,
    keep_nodes: bool = False,
) -> QuadResult:
    """Integrate ``fn(x, y)`` (vectorised) over the union of quadrilaterals."""
    quads = np.asarray(quads, dtype=float).reshape(-1, 4, 2)
    if not (0 < rtol < 1):
        raise ValueError("rtol must lie in (0, 1)")
    total_area = float(quad_area(quads).sum())
    if total_area <= 0:
        raise QuadratureError("integration domain has zero area")

    g = (np.arange(init) + 0.0) / init
    S0, T0 = np.meshgrid(g, g, indexing="ij")
    nq = len(quads)
    qid = np.repeat(np.arange(nq), init * init)
    s0 = np.tile(S0.ravel(), nq)
    t0 = np.tile(T0.ravel(), nq)
    h = np.full(len(qid), 1.0 / init)

    def evaluate(q, s, t):
        X, J = bilinear(quads[q], s, t)
        v = np.asarray(fn(X[:, 0], X[:, 1]), dtype=float)
        if not np.all(np.isfinite(v)):
            raise QuadratureError("integrand is not finite on the domain")
        return v, J, X

    def trapezoid(q, s, t, h):
        # corners may sit on a singular boundary; such cells skip this check
        ks = (s[:, None] + h[:, None] * _CORNER[None, :, 0]).ravel()
        kt = (t[:, None] + h[:, None] * _CORNER[None, :, 1]).ravel()
        X, J = bilinear(quads[np.repeat(q, 4)], ks, kt)
        with np.errstate(all="ignore"):
            v = np.asarray(fn(X[:, 0], X[:, 1]), dtype=float) * J
        v = v.reshape(-1, 4)
        good = np.all(np.isfinite(v), axis=1)
        out = np.where(good, np.where(good[:, None], v, 0.0).sum(axis=1) * h * h / 4, np.nan)
        return out

    v, J, _ = evaluate(qid, s0 + h / 2, t0 + h / 2)
    coarse = v * J * h * h
    evals = len(qid)
    estimate = float(np.sum(coarse))

    accepted = []
    acc_nodes, acc_w = [], []
    err_total = 0.0
    converged = True
    level = 0
    n_cells = 0
    while len(qid):
        cs = (s0[:, None] + h[:, None] * _CHILD[None, :, 0]).ravel()
        ct = (t0[:, None] + h[:, None] * _CHILD[None, :, 1]).ravel()
        cq = np.repeat(qid, 4)
        cv, cJ, cX = evaluate(cq, cs, ct)
        evals += len(cq)
        hh = np.repeat(h / 2, 4)
        cw = cJ * hh * hh
        child_vals = (cv * cw).reshape(-1, 4)
        fine = child_vals.sum(axis=1)
        trap = trapezoid(qid, s0, t0, h)
        evals += 4 * len(qid)
        diff = np.abs(fine - coarse)
        gap = np.abs(fine - trap) / 3
        diff = np.where(np.isnan(gap), diff, np.maximum(diff, gap))
        active_sum = float(np.sum(fine))
        estimate = sum(accepted) + active_sum
        frac = (cw.reshape(-1, 4).sum(axis=1)) / total_area
        scale = max(abs(estimate), 1e-300)
        ok = diff <= rtol * scale * frac
        if level >= max_level or evals + 32 * int((~ok).sum()) > max_evals:
            if not ok.all():
                converged = False
            ok[:] = True
        accepted.append(stable_sum(fine[ok]))
        err_total += float(np.sum(diff[ok]))
        n_cells += int(ok.sum())
        if keep_nodes:
            okc = np.repeat(ok, 4)
            acc_nodes.append(cX[okc])
            acc_w.append(cw[okc])
        keep = ~ok
        # children of rejected cells become the next level's cells
        qid = np.repeat(qid[keep], 4)
        s0 = (s0[keep][:, None] + h[keep][:, None] * np.array([0.0, 0.5, 0.0, 0.5])[None, :]).ravel()
        t0 = (t0[keep][:, None] + h[keep][:, None] * np.array([0.0, 0.0, 0.5, 0.5])[None, :]).ravel()
        coarse = child_vals[keep].ravel()
        h = np.repeat(h[keep] / 2, 4)
        level += 1
    value = math.fsum(accepted)
    res = QuadResult(value, err_total, n_cells, evals, converged)
    if keep_nodes:
        res.nodes = np.concatenate(acc_nodes) if acc_nodes else np.zeros((0, 2))
        res.weights = np.concatenate(acc_w) if acc_w else np.zeros(0)
    return res


def tensor_nodes(quads, n: int):
    """Fixed midpoint rule with ``n x n`` cells per quadrilateral: nodes and weights."""
    quads = np.asarray(quads, dtype=float).reshape(-1, 4, 2)
    g = (np.arange(n) + 0.5) / n
    S, T = np.meshgrid(g, g, indexing="ij")
    q = np.repeat(np.arange(len(quads)), n * n)
    s = np.tile(S.ravel(), len(quads))
    t = np.tile(T.ravel(), len(quads))
    X, J = bilinear(quads[q], s, t)
    return X, J / (n * n)


def gauss_nodes(quads, order: int = 3):
    """Tensor Gauss-Legendre nodes; exact for polynomials of degree <= 2*order-1 on parallelograms."""
    quads = np.asarray(quads, dtype=float).reshape(-1, 4, 2)
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    S, T = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w).ravel()
    q = np.repeat(np.arange(len(quads)), order * order)
    s = np.tile(S.ravel(), len(quads))
    t = np.tile(T.ravel(), len(quads))
    X, J = bilinear(quads[q], s, t)
    return X, J * np.tile(W, len(quads))
