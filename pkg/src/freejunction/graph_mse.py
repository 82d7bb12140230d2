"""Minimal-surface and junction-balance residuals for graph sheets on grids.

Grids are uniform with spacing ``h``. The last axis is the x_n direction; the
interface gamma is the slice x_n = 0, which is index 0 for a ``'+'`` sheet and
the last index for a ``'-'`` sheet. Residuals use a conservative flux
difference at half-nodes and are second-order consistent.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import SingularG
from .metric import (COND_LIMIT, G_from_metric, MetricField, chi_from_metric,
                     quad_norm)


@dataclass
class GraphFunction:
    values: np.ndarray
    h: float
    origin: np.ndarray
    side: Optional[str] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.origin = np.atleast_1d(np.asarray(self.origin, dtype=float))
        self.h = float(self.h)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.origin.shape != (self.values.ndim,):
            raise ValueError("origin must have one entry per grid axis")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        if self.side not in (None, "+", "-"):
            raise ValueError("side must be '+', '-' or None")
        if self.side == "+" and self.origin[-1] != 0.0:
            raise ValueError("a '+' sheet must start at x_n = 0")
        if self.side == "-":
            # anchor the last axis at gamma so that x_n = 0 exactly on the interface
            self.origin[-1] = -self.h * (self.values.shape[-1] - 1)

    @classmethod
    def from_function(cls, f: Callable, origin, h: float, shape: Sequence[int],
                      side: Optional[str] = None) -> "GraphFunction":
        tmp = cls(np.zeros(tuple(shape)), h, origin, side)
        return cls(f(tmp.coords()), h, tmp.origin, side)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    def axis_coords(self, axis: int) -> np.ndarray:
        N = self.values.shape[axis]
        idx = np.arange(N, dtype=float)
        if axis == self.n - 1 and self.side == "-":
            return (idx - (N - 1)) * self.h
        return self.origin[axis] + self.h * idx

    def coords(self) -> np.ndarray:
        axes = [self.axis_coords(d) for d in range(self.n)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def x_of(self, node) -> np.ndarray:
        return np.array([self.axis_coords(d)[i] for d, i in enumerate(node)])

    @property
    def gamma_index(self) -> int:
        if self.side is None:
            raise ValueError("grid has no interface side")
        return 0 if self.side == "+" else self.values.shape[-1] - 1

    def gamma_values(self) -> np.ndarray:
        return self.values[..., self.gamma_index]


# ---------------------------------------------------------------------------
# stencils


def _shift(a: np.ndarray, off, ndim: int) -> np.ndarray:
    """Interior block of ``a`` (one-node margin) shifted by integer offsets."""
    sl = tuple(slice(1 + o, a.shape[d] - 1 + o) for d, o in enumerate(off))
    return a[sl + (Ellipsis,)] if a.ndim > ndim else a[sl]


def _unit(n, i, v=1):
    e = [0] * n
    e[i] = v
    return e


def _add(a, b):
    return [x + y for x, y in zip(a, b)]


def _face_jet(u, X, h, i, base):
    """Point, height and gradient at the half node ``base + e_i / 2``."""
    n = u.ndim
    ei = _unit(n, i)
    u0 = _shift(u, base, n)
    u1 = _shift(u, _add(base, ei), n)
    z = 0.5 * (u0 + u1)
    p = np.empty(u0.shape + (n,))
    for j in range(n):
        if j == i:
            p[..., j] = (u1 - u0) / h
        else:
            ej, mj = _unit(n, j), _unit(n, j, -1)
            p[..., j] = (_shift(u, _add(base, ej), n) - _shift(u, _add(base, mj), n)
                         + _shift(u, _add(_add(base, ei), ej), n)
                         - _shift(u, _add(_add(base, ei), mj), n)) / (4.0 * h)
    x = _shift(X, base, n).copy()
    x[..., i] += 0.5 * h
    return x, z, p


def _node_jet(u, X, h):
    n = u.ndim
    zero = [0] * n
    p = np.empty(_shift(u, zero, n).shape + (n,))
    for j in range(n):
        p[..., j] = (_shift(u, _unit(n, j), n) - _shift(u, _unit(n, j, -1), n)) / (2.0 * h)
    return _shift(X, zero, n), _shift(u, zero, n), p


def _inv_det(G):
    det = np.linalg.det(G)
    if np.any(~(det > 0)) or np.any(np.linalg.cond(G) > COND_LIMIT):
        raise SingularG("first fundamental form is numerically singular")
    return np.linalg.inv(G), det


def _mse_flux(metric, x, z, p, i):
    n = p.shape[-1]
    g = metric(np.concatenate([x, z[..., None]], axis=-1))
    Ginv, det = _inv_det(G_from_metric(g, p))
    v = g[..., n, n][..., None] * p + g[..., :n, n]
    return np.sqrt(det) * np.einsum("...j,...j->...", Ginv[..., i, :], v)


def _mse_interior(metric: MetricField, u: np.ndarray, X: np.ndarray, h: float) -> np.ndarray:
    n = u.ndim
    if metric.n != n:
        raise ValueError(f"metric is for n = {metric.n}, grid has n = {n}")
    if any(N < 3 for N in u.shape):
        raise ValueError("grid needs at least 3 nodes per axis")
    div = 0.0
    for i in range(n):
        up = _mse_flux(metric, *_face_jet(u, X, h, i, [0] * n), i)
        dn = _mse_flux(metric, *_face_jet(u, X, h, i, _unit(n, i, -1)), i)
        div = div + (up - dn) / h
    x, z, p = _node_jet(u, X, h)
    P = np.concatenate([x, z[..., None]], axis=-1)
    g = metric(P)
    Ginv, det = _inv_det(G_from_metric(g, p))
    dzG = G_from_metric(metric.d(P, n), p)
    lower = 0.5 * np.sqrt(det) * np.einsum("...ij,...ij->...", Ginv, dzG)
    return div - lower


def _neighbourhood(u: GraphFunction, node):
    node = tuple(int(i) for i in node)
    if len(node) != u.n:
        raise ValueError("node index has wrong length")
    for d, i in enumerate(node):
        if not 1 <= i <= u.shape[d] - 2:
            raise ValueError(f"node {node} lacks a one-node margin on axis {d}")
    sl = tuple(slice(i - 1, i + 2) for i in node)
    return u.values[sl], u.coords()[sl]


def mse_residual_grid(metric: MetricField, u: GraphFunction) -> np.ndarray:
    """Residual of the divergence-form minimal surface equation on all interior nodes.

    Returns an array of shape ``tuple(N - 2 for N in u.shape)``.
    """
    return _mse_interior(metric, u.values, u.coords(), u.h)


def mse_residual(metric: MetricField, u: GraphFunction, node) -> float:
    vals, X = _neighbourhood(u, node)
    return float(_mse_interior(metric, vals, X, u.h).reshape(-1)[0])


# prescribed mean curvature (Euclidean ambient only)

def _pmc_interior(u, X, h, Lam):
    n = u.ndim
    div = 0.0
    for i in range(n):
        faces = []
        for base in ([0] * n, _unit(n, i, -1)):
            _, _, p = _face_jet(u, X, h, i, base)
            faces.append(p[..., i] / np.sqrt(1.0 + np.einsum("...j,...j->...", p, p)))
        div = div + (faces[0] - faces[1]) / h
    x, z, _ = _node_jet(u, X, h)
    lam = Lam(x, z) if callable(Lam) else Lam
    return div - lam


def _require_euclidean(metric):
    if metric is not None and not metric.is_euclidean:
        raise ValueError("prescribed-curvature residual is defined for the Euclidean metric only")


def pmc_residual_grid(u: GraphFunction, Lam: Union[float, Callable] = 0.0,
                      metric: Optional[MetricField] = None) -> np.ndarray:
    """``div(Du / sqrt(1 + |Du|^2)) - Lam(x, u)`` on interior nodes.

    Sign convention: the mean curvature is taken with respect to the upward
    normal, so the lower spherical cap ``u = -sqrt(R^2 - |x|^2)`` has
    ``Lam = n / R``.
    """
    _require_euclidean(metric)
    return _pmc_interior(u.values, u.coords(), u.h, Lam)


def pmc_residual(u: GraphFunction, node, Lam: Union[float, Callable] = 0.0,
                 metric: Optional[MetricField] = None) -> float:
    _require_euclidean(metric)
    vals, X = _neighbourhood(u, node)
    return float(np.reshape(_pmc_interior(vals, X, u.h, Lam), -1)[0])


# ---------------------------------------------------------------------------
# junction families


@dataclass
class SheetFamily:
    """Sheets u_1..u_s over the '+' half and u_{s+1}..u_q over the '-' half.

    ``theta`` holds one weight per sheet; each weight is a positive scalar or
    an array over the interface nodes.
    """

    sheets: list
    s: int
    theta: Sequence = field(default_factory=list)
    coincidence_tol: float = 1e-12
    check_origin: bool = False

    def __post_init__(self):
        q = len(self.sheets)
        if q < 3:
            raise ValueError(f"a junction needs q >= 3 sheets, got {q}")
        if not 2 <= self.s < q:
            raise ValueError(f"split index must satisfy 2 <= s < q, got s = {self.s}")
        if len(self.theta) == 0:
            self.theta = [1.0] * q
        if len(self.theta) != q:
            raise ValueError("need one weight per sheet")
        self.theta = [np.asarray(t, dtype=float) for t in self.theta]
        for t in self.theta:
            if np.any(~(t > 0)):
                raise ValueError("weights must be positive")
        ref = self.sheets[0]
        for k, u in enumerate(self.sheets):
            want = "+" if k < self.s else "-"
            if u.side != want:
                raise ValueError(f"sheet {k + 1} must lie on side {want!r}")
            if u.n != ref.n or u.h != ref.h or u.shape[:-1] != ref.shape[:-1]:
                raise ValueError("all sheets must share the interface grid")
            if not np.array_equal(u.origin[:-1], ref.origin[:-1]):
                raise ValueError("all sheets must share the interface grid")
        g0 = ref.gamma_values()
        for k, u in enumerate(self.sheets[1:], start=2):
            gap = np.max(np.abs(u.gamma_values() - g0)) if g0.size else 0.0
            if gap > self.coincidence_tol * max(1.0, float(np.max(np.abs(g0)))):
                raise ValueError(f"sheet {k} does not coincide with sheet 1 on the interface (gap {gap:.3e})")
        if self.check_origin:
            x = ref.coords()[..., ref.gamma_index, :-1]
            i = np.unravel_index(np.argmin(np.sum(x ** 2, axis=-1)), x.shape[:-1])
            for k, u in enumerate(self.sheets, start=1):
                if abs(u.gamma_values()[i]) > self.coincidence_tol:
                    raise ValueError(f"sheet {k} is not normalised to u(0) = 0")

    @property
    def q(self) -> int:
        return len(self.sheets)

    @property
    def n(self) -> int:
        return self.sheets[0].n


def _tangential_derivative(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order derivative along ``axis``: central inside, three-point one-sided at the ends."""
    N = a.shape[axis]
    if N < 3:
        raise ValueError("need at least 3 interface nodes per tangential axis")
    return np.gradient(a, h, axis=axis, edge_order=2)


def _gamma_gradient(u: GraphFunction) -> np.ndarray:
    n = u.n
    v = u.values
    if v.shape[-1] < 3:
        raise ValueError("need at least 3 nodes normal to the interface")
    p = np.empty(v.shape[:-1] + (n,))
    g = u.gamma_values()
    for j in range(n - 1):
        p[..., j] = _tangential_derivative(g, j, u.h)
    if u.side == "+":
        p[..., n - 1] = (-3.0 * v[..., 0] + 4.0 * v[..., 1] - v[..., 2]) / (2.0 * u.h)
    else:
        p[..., n - 1] = (3.0 * v[..., -1] - 4.0 * v[..., -2] + v[..., -3]) / (2.0 * u.h)
    return p


def balance_residual_grid(metric: MetricField, family: SheetFamily) -> np.ndarray:
    """Balance residual pair at every interface node, shape ``gamma_shape + (2,)``.

    Component 0 is the x_n component, component 1 the height component of
    ``sum_{k<=s} theta_k chi_k/|chi_k| - sum_{k>s} theta_k chi_k/|chi_k|``.
    """
    n = family.n
    ref = family.sheets[0]
    x = ref.coords()[..., ref.gamma_index, :]
    out = np.zeros(x.shape[:-1] + (2,))
    for k, u in enumerate(family.sheets):
        p = _gamma_gradient(u)
        P = np.concatenate([x, u.gamma_values()[..., None]], axis=-1)
        g = metric(P)
        chi = chi_from_metric(g, p)
        nrm = quad_norm(g, chi)
        sign = 1.0 if k < family.s else -1.0
        w = sign * family.theta[k] / nrm
        out[..., 0] += w * chi[..., n - 1]
        out[..., 1] += w
    return out


def balance_residual(metric: MetricField, family: SheetFamily, node=()) -> np.ndarray:
    """Balance residual pair at one interface node (index over the first n-1 axes)."""
    node = tuple(int(i) for i in np.atleast_1d(node)) if np.size(node) else ()
    if len(node) != family.n - 1:
        raise ValueError("interface node index must have n - 1 entries")
    return balance_residual_grid(metric, family)[node]


# ---------------------------------------------------------------------------
# CSV exchange


def write_grid_csv(path, u: GraphFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "h", "side", "origin"])
        w.writerow([u.n, repr(u.h), u.side or "none", " ".join(repr(float(o)) for o in u.origin)])
        w.writerow([f"i{d + 1}" for d in range(u.n)] + ["value"])
        for idx in np.ndindex(*u.shape):
            w.writerow(list(idx) + [repr(float(u.values[idx]))])


def read_grid_csv(path) -> GraphFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or [c.strip() for c in rows[0][:3]] != ["n", "h", "side"]:
        raise ValueError(f"{path}: missing 'n,h,side' header")
    n = int(rows[1][0])
    h = float(rows[1][1])
    side = rows[1][2].strip()
    side = None if side == "none" else side
    origin = [float(t) for t in rows[1][3].split()] if len(rows[1]) > 3 and rows[1][3].strip() else [0.0] * n
    data = np.array([[float(c) for c in r] for r in rows[3:] if r], dtype=float)
    idx = data[:, :n].astype(int)
    shape = tuple(idx.max(axis=0) + 1)
    values = np.full(shape, np.nan)
    values[tuple(idx.T)] = data[:, n]
    if np.isnan(values).any():
        raise ValueError(f"{path}: grid has missing nodes")
    return GraphFunction(values, h, origin, side)
