"""Ambient metrics in a coordinate chart and the graph quantities built on them.

A metric on R^{n+1} is supplied as a vectorised evaluator ``X -> g(X)`` with
``X`` of shape ``(..., n+1)`` and result ``(..., n+1, n+1)``. Graphs
``z = u(x)`` over R^n are described by their first-order jet ``(x, z, p)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NegativeQuadraticForm, SingularChi

FD_STEP = 1e-5
COND_LIMIT = 1e12
PD_TOL = 1e-12


@dataclass(frozen=True)
class MetricField:
    """Symmetric positive-definite matrix field on R^{n+1}.

    ``derivative(X, axis)`` may supply the analytic partial derivative
    ``d g / d X_axis``; otherwise central differences with step ``FD_STEP``
    are used.
    """

    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    normal_at_origin: bool = False
    derivative: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    name: str = "custom"
    is_euclidean: bool = field(default=False, compare=False)

    @property
    def dim(self) -> int:
        return self.n + 1

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise ValueError(f"points must have {self.dim} coordinates, got shape {X.shape}")
        return np.asarray(self.evaluator(X), dtype=float)

    def d(self, X, axis: int, h: float = FD_STEP) -> np.ndarray:
        """Partial derivative of g with respect to coordinate ``axis``."""
        X = np.asarray(X, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(X, axis), dtype=float)
        e = np.zeros(self.dim)
        e[axis] = h
        return (self(X + e) - self(X - e)) / (2.0 * h)

    def check(self, X) -> None:
        """Raise ValueError if g fails symmetry or positive definiteness at ``X``."""
        g = self(X)
        if not np.array_equal(g, np.swapaxes(g, -1, -2)):
            raise ValueError("metric is not symmetric")
        lo = np.linalg.eigvalsh(g).min()
        scale = max(1.0, float(np.abs(g).max()))
        if lo <= PD_TOL * scale:
            raise ValueError(f"metric is not positive definite (min eigenvalue {lo:.3e})")
        if self.normal_at_origin:
            g0 = self(np.zeros(self.dim))
            if not np.array_equal(g0, np.eye(self.dim)):
                raise ValueError("metric flagged normal at origin but g(0) != I")


def euclidean(n: int) -> MetricField:
    dim = n + 1

    def ev(X):
        return np.broadcast_to(np.eye(dim), X.shape[:-1] + (dim, dim)).copy()

    def dev(X, axis):
        return np.zeros(X.shape[:-1] + (dim, dim))

    return MetricField(n, ev, True, dev, "euclidean", is_euclidean=True)


def constant(matrix) -> MetricField:
    """Constant metric given by a symmetric positive-definite matrix."""
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("constant metric needs a square matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-14):
        raise ValueError("constant metric must be symmetric")
    A = 0.5 * (A + A.T)
    dim = A.shape[0]

    def ev(X):
        return np.broadcast_to(A, X.shape[:-1] + (dim, dim)).copy()

    def dev(X, axis):
        return np.zeros(X.shape[:-1] + (dim, dim))

    normal = bool(np.array_equal(A, np.eye(dim)))
    return MetricField(dim - 1, ev, normal, dev, "constant")


def conformal(n: int, phi: Callable, dphi: Optional[Callable] = None) -> MetricField:
    """``g = exp(2 phi) * I``. ``dphi(X, axis)`` is optional."""
    dim = n + 1
    eye = np.eye(dim)

    def ev(X):
        f = np.exp(2.0 * np.asarray(phi(X), dtype=float))
        return f[..., None, None] * eye

    dev = None
    if dphi is not None:
        def dev(X, axis):
            f = np.exp(2.0 * np.asarray(phi(X), dtype=float))
            df = 2.0 * np.asarray(dphi(X, axis), dtype=float) * f
            return df[..., None, None] * eye

    normal = float(np.asarray(phi(np.zeros(dim)))) == 0.0
    return MetricField(n, ev, normal, dev, "conformal")


def diagonal_polynomial(n: int, coeffs) -> MetricField:
    """Diagonal metric ``g_ii(X) = 1 + sum_d coeffs[i, d] * X_d**2``.

    Quadratic perturbations keep g(0) = I, so the chart is normal at the origin.
    Coefficients must keep the diagonal positive on the region of use.
    """
    dim = n + 1
    c = np.array(coeffs, dtype=float)
    if c.shape != (dim, dim):
        raise ValueError(f"coeffs must have shape {(dim, dim)}")

    def ev(X):
        diag = 1.0 + (X[..., None, :] ** 2 * c).sum(axis=-1)
        out = np.zeros(X.shape[:-1] + (dim, dim))
        idx = np.arange(dim)
        out[..., idx, idx] = diag
        return out

    def dev(X, axis):
        out = np.zeros(X.shape[:-1] + (dim, dim))
        idx = np.arange(dim)
        out[..., idx, idx] = 2.0 * c[:, axis] * X[..., axis, None]
        return out

    return MetricField(n, ev, True, dev, "diagonal_polynomial")


@dataclass(frozen=True)
class GraphJet:
    x: np.ndarray
    z: float
    p: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if x.shape != p.shape:
            raise ValueError("x and p must have the same length")
        if not (np.all(np.isfinite(x)) and np.isfinite(self.z) and np.all(np.isfinite(p))):
            raise ValueError("graph jet entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "z", float(self.z))

    @property
    def point(self) -> np.ndarray:
        return np.append(self.x, self.z)


# batched kernels: g has shape (..., n+1, n+1), p has shape (..., n)

def G_from_metric(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    n = p.shape[-1]
    gt = g[..., :n, :n]
    gc = g[..., :n, n]
    gnn = g[..., n, n]
    G = (gt + gc[..., :, None] * p[..., None, :] + p[..., :, None] * gc[..., None, :]
         + gnn[..., None, None] * p[..., :, None] * p[..., None, :])
    # exact symmetry, rounding in gt may break it
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def chi_system(g: np.ndarray, p: np.ndarray):
    """Matrix ``A_ij = g_ij + g_{j,n+1} p_i`` and right side of the normal-field system."""
    n = p.shape[-1]
    A = g[..., :n, :n] + p[..., :, None] * g[..., None, :n, n]
    b = -g[..., :n, n] - g[..., n, n][..., None] * p
    return A, b


def chi_from_metric(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    A, b = chi_system(g, p)
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond) | (cond > COND_LIMIT)):
        raise SingularChi(f"normal-field system ill-conditioned (cond {np.max(cond):.3e})")
    sol = np.linalg.solve(A, b[..., None])[..., 0]
    return np.concatenate([sol, np.ones(p.shape[:-1] + (1,))], axis=-1)


def assemble_G(metric: MetricField, jet: GraphJet) -> np.ndarray:
    """First fundamental form of the graph in the chart coordinates x."""
    g = metric(jet.point)
    return G_from_metric(g, jet.p)


def solve_chi(metric: MetricField, jet: GraphJet) -> np.ndarray:
    """Normal field (chi^1, ..., chi^n, 1) of the graph at the jet.

    Raises SingularChi (a SingularSystem) when the defining n x n system has
    condition number above ``COND_LIMIT``.
    """
    g = metric(jet.point)
    return chi_from_metric(g, jet.p)


def quad_norm(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    q = np.einsum("...i,...ij,...j->...", v, g, v)
    if np.any(q < -1e-14):
        raise NegativeQuadraticForm(f"v^T g v = {np.min(q):.3e} < 0")
    return np.sqrt(np.maximum(q, 0.0))


def g_norm(metric: MetricField, point, v) -> float:
    """Length of ``v`` in the coordinate metric at ``point``."""
    v = np.asarray(v, dtype=float)
    return float(quad_norm(metric(point), v))
