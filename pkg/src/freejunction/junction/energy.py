"""Weighted area of the sheets and its vertex gradient (the discrete first variation)."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .. import kernels
from ..errors import DegenerateTriangle, MeshCollapse
from ..metric import MetricField
from .mesh import AREA_MIN, SheetMeshState

FD_STEP = 1e-6


def _euclidean(metric) -> bool:
    return metric is None or getattr(metric, "is_euclidean", False)


def metric_areas(X: np.ndarray, F: np.ndarray, metric: MetricField) -> np.ndarray:
    """Pulled-back triangle areas by the edge-midpoint rule.

    The area density ``sqrt(det(E^T g E)) / 2`` is averaged over the three edge
    midpoints, which integrates quadratic densities exactly. A one-point
    centroid rule lets the minimiser lower the discrete energy by reshaping
    triangles against a convex density, so it is not used.
    """
    A, B, C = X[F[:, 0]], X[F[:, 1]], X[F[:, 2]]
    return _metric_areas_abc(A, B, C, metric)


def _metric_areas_abc(A, B, C, metric):
    E1, E2 = B - A, C - A
    out = 0.0
    for M in (0.5 * (A + B), 0.5 * (B + C), 0.5 * (C + A)):
        g = metric(M)
        g11 = np.einsum("fi,fij,fj->f", E1, g, E1)
        g12 = np.einsum("fi,fij,fj->f", E1, g, E2)
        g22 = np.einsum("fi,fij,fj->f", E2, g, E2)
        out = out + np.sqrt(np.maximum(g11 * g22 - g12 * g12, 0.0))
    return out / 6.0


def _metric_area_grad(X, F, w, metric, h=FD_STEP):
    P = [X[F[:, i]].copy() for i in range(3)]
    area = _metric_areas_abc(*P, metric)
    grad = np.zeros_like(X)
    for i in range(3):
        for d in range(3):
            P[i][:, d] += h
            ap = _metric_areas_abc(*P, metric)
            P[i][:, d] -= 2 * h
            am = _metric_areas_abc(*P, metric)
            P[i][:, d] += h
            np.add.at(grad[:, d], F[:, i], w * (ap - am) / (2 * h))
    return float(np.sum(w * area)), grad, float(area.min()) if area.size else np.inf


def face_areas(state: SheetMeshState, metric: Optional[MetricField] = None) -> np.ndarray:
    F, _ = state.all_faces()
    if _euclidean(metric):
        return kernels.triangle_areas(state.X, F)
    return metric_areas(state.X, F, metric)


def total_weighted_area(state: SheetMeshState, metric: Optional[MetricField] = None) -> float:
    """``sum_k theta_k |M_k|``; raises DegenerateTriangle for a face of area <= 1e-14."""
    F, w = state.all_faces()
    a = face_areas(state, metric)
    if a.size and a.min() <= AREA_MIN:
        raise DegenerateTriangle(f"triangle area {a.min():.3e} <= {AREA_MIN}")
    return float(np.sum(w * a))


def energy_and_gradient(state: SheetMeshState, metric: Optional[MetricField] = None,
                        X: Optional[np.ndarray] = None):
    """Weighted area and its gradient with respect to every vertex coordinate.

    Raises MeshCollapse when a triangle degenerates.
    """
    X = state.X if X is None else X
    F, w = state.all_faces()
    if _euclidean(metric):
        e, g, amin = kernels.area_and_grad(X, F, w)
    else:
        e, g, amin = _metric_area_grad(X, F, w, metric)
    if amin <= AREA_MIN:
        raise MeshCollapse(f"triangle area {amin:.3e} <= {AREA_MIN}")
    return float(e), g


def dual_areas(state: SheetMeshState, metric: Optional[MetricField] = None) -> np.ndarray:
    """One third of the weighted area of the faces around each vertex."""
    F, w = state.all_faces()
    a = face_areas(state, metric) * w / 3.0
    out = np.zeros(state.nv)
    for i in range(3):
        np.add.at(out, F[:, i], a)
    return out
