"""Discrete conormals along the shared polyline, balance residuals and angle tables.

The conormal of sheet k at a polyline vertex is built from that sheet's
triangle fan at the vertex: each triangle contributes the gradient of its
area with respect to the vertex, ``1/2 n_f x (c - b)``, which is the in-plane
outward normal of the opposite edge scaled by half its length. The fan sum is
projected g-orthogonally to the polyline tangent and normalised in g. For a
planar fan with a straight polyline this is the exact outward unit conormal.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import DanglingVertex
from ..metric import MetricField
from .mesh import SheetMeshState


def _metric_at(metric, p):
    if metric is None:
        return np.eye(3)
    return metric(p)


def polyline_tangent(state: SheetMeshState, pos: int) -> np.ndarray:
    P = state.X[state.polyline]
    if len(P) < 2:
        raise DanglingVertex("polyline has fewer than two vertices")
    lo, hi = max(pos - 1, 0), min(pos + 1, len(P) - 1)
    t = P[hi] - P[lo]
    nt = np.linalg.norm(t)
    if nt == 0:
        raise DanglingVertex(f"polyline vertex {pos} has zero tangent")
    return t / nt


def _fan_vector(state: SheetMeshState, k: int, v: int) -> np.ndarray:
    F = state.faces[k]
    rows, cols = np.nonzero(F == v)
    if rows.size == 0:
        raise DanglingVertex(f"vertex {v} has no triangle in sheet {k + 1}")
    X = state.X
    out = np.zeros(3)
    for f, c in zip(rows, cols):
        b, cc = F[f, (c + 1) % 3], F[f, (c + 2) % 3]
        n = np.cross(X[b] - X[v], X[cc] - X[v])
        nn = np.linalg.norm(n)
        if nn == 0:
            continue
        out += 0.5 * np.cross(n / nn, X[cc] - X[b])
    return out


def conormals(state: SheetMeshState, pos: int, metric: Optional[MetricField] = None) -> np.ndarray:
    """Unit outward conormals (q, 3) of every sheet at polyline position ``pos``."""
    v = int(state.polyline[pos])
    T = polyline_tangent(state, pos)
    g = _metric_at(metric, state.X[v])
    out = np.empty((state.q, 3))
    for k in range(state.q):
        eta = _fan_vector(state, k, v)
        eta = eta - (T @ g @ eta) / (T @ g @ T) * T
        nrm = np.sqrt(eta @ g @ eta)
        if nrm == 0:
            raise DanglingVertex(f"sheet {k + 1} has a degenerate fan at vertex {v}")
        out[k] = eta / nrm
    return out


def conormal_balance(state: SheetMeshState, pos: int, theta=None,
                     metric: Optional[MetricField] = None) -> np.ndarray:
    """``sum_k theta_k eta_k`` at polyline position ``pos``."""
    th = state.theta if theta is None else np.asarray(theta, dtype=float)
    return th @ conormals(state, pos, metric)


def balance_residuals(state: SheetMeshState, metric: Optional[MetricField] = None,
                      interior_only: bool = False) -> np.ndarray:
    """Norms of the balance residual at every polyline vertex (g-norm)."""
    idx = range(1, len(state.polyline) - 1) if interior_only else range(len(state.polyline))
    out = []
    for pos in idx:
        r = conormal_balance(state, pos, metric=metric)
        g = _metric_at(metric, state.X[state.polyline[pos]])
        out.append(np.sqrt(r @ g @ r))
    return np.array(out)


def angle_table(state: SheetMeshState, pos: int, metric: Optional[MetricField] = None) -> np.ndarray:
    """Pairwise angles in degrees between the sheet conormals at one polyline vertex."""
    eta = conormals(state, pos, metric)
    g = _metric_at(metric, state.X[state.polyline[pos]])
    c = np.clip(eta @ g @ eta.T, -1.0, 1.0)
    ang = np.degrees(np.arccos(c))
    np.fill_diagonal(ang, 0.0)
    return ang


def angle_report(state: SheetMeshState, metric: Optional[MetricField] = None) -> np.ndarray:
    """Angle tables for every polyline vertex, shape (len(polyline), q, q)."""
    return np.array([angle_table(state, p, metric) for p in range(len(state.polyline))])
