"""Partial Legendre (hodograph) transform straightening the free boundary.

With ``w = u_1 - u_2`` on the '+' half, the map ``x -> y = (x', w(x))`` is
inverted column by column: ``x_n = psi(y', y_n)``. Each x_n column of ``w``
is interpolated by a not-a-knot cubic spline and ``psi`` is the exact inverse
of that interpolant, so forward/inverse round trips are limited only by the
root solve. The '-' half is reached through ``x_n = psi(y) - C y_n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import DegenerateJacobian, InvariantViolation, NotMonotone, OutOfDomain
from .graph_mse import GraphFunction

ROOT_TOL = 1e-15
JAC_TOL = 1e-12


def _column_spline(xn: np.ndarray, vals: np.ndarray) -> CubicSpline:
    """Not-a-knot cubic along the last axis, vectorised over the other axes."""
    cols = vals.reshape(-1, vals.shape[-1]).T  # (Nn, ncol)
    return CubicSpline(xn, cols, axis=0)


def _eval_columns(sp: CubicSpline, x: np.ndarray, nu: int = 0) -> np.ndarray:
    """Evaluate column ``j`` of a vectorised spline at ``x[j, :]``."""
    return _eval_columns_sel(sp.c, sp.x, x, nu)


def _eval_points(sp: CubicSpline, cols: np.ndarray, x: np.ndarray, nu: int = 0) -> np.ndarray:
    """Evaluate column ``cols[i]`` of a vectorised spline at ``x[i]``."""
    return _eval_columns_sel(sp.c[:, :, cols], sp.x, x[:, None], nu)[:, 0]


def _eval_columns_sel(c, knots, x, nu):
    P = len(knots) - 1
    i = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, P - 1)
    t = x - knots[i]
    cols = np.arange(x.shape[0])[:, None]
    cc = c[:, i, cols]
    if nu == 0:
        return ((cc[0] * t + cc[1]) * t + cc[2]) * t + cc[3]
    if nu == 1:
        return (3.0 * cc[0] * t + 2.0 * cc[1]) * t + cc[2]
    raise ValueError("only nu = 0 or 1 supported")


def _min_derivative(sp: CubicSpline) -> np.ndarray:
    """Per-column minimum of the spline derivative (a quadratic on each piece)."""
    c = sp.c
    h = np.diff(sp.x)[:, None]
    A, B, Cc = 3.0 * c[0], 2.0 * c[1], c[2]
    left = Cc
    right = (A * h + B) * h + Cc
    with np.errstate(divide="ignore", invalid="ignore"):
        tv = np.where(A > 0, -B / (2.0 * A), -1.0)
    inside = (tv > 0) & (tv < h)
    vert = np.where(inside, (A * tv + B) * tv + Cc, np.inf)
    return np.minimum(np.minimum(left, right), vert).min(axis=0)


@dataclass
class HodographMap:
    u1: GraphFunction
    u2: GraphFunction
    w_spline: CubicSpline
    yn: np.ndarray        # y_n nodes, yn[0] = 0
    psi: np.ndarray       # shape gamma_shape + (len(yn),)
    dpsi_dyn: np.ndarray  # same shape, from the spline derivative
    C: float

    @property
    def n(self) -> int:
        return self.u1.n

    @property
    def gamma_shape(self):
        return self.u1.shape[:-1]

    @property
    def hy(self) -> float:
        return float(self.yn[1] - self.yn[0])

    @property
    def x_max(self) -> float:
        return float(self.u1.axis_coords(self.n - 1)[-1])

    def y_coords(self) -> np.ndarray:
        tang = [self.u1.axis_coords(d) for d in range(self.n - 1)]
        return np.stack(np.meshgrid(*tang, self.yn, indexing="ij"), axis=-1)

    def _columns(self, pts: np.ndarray) -> np.ndarray:
        """Flat column index for points whose tangential part lies on grid columns."""
        if self.n == 1:
            return np.zeros(pts.shape[:-1], dtype=int)
        idx = []
        for d in range(self.n - 1):
            ax = self.u1.axis_coords(d)
            r = (pts[..., d] - ax[0]) / self.u1.h
            k = np.rint(r).astype(int)
            if np.any(np.abs(r - k) > 1e-9) or np.any(k < 0) or np.any(k >= len(ax)):
                raise OutOfDomain("tangential coordinate is not on a grid column")
            idx.append(k)
        return np.ravel_multi_index(tuple(idx), self.gamma_shape)

    def w(self, x) -> np.ndarray:
        """Interpolated ``w = u_1 - u_2`` at points on grid columns."""
        x = np.asarray(x, dtype=float)
        cols = self._columns(x).reshape(-1)
        xn = x[..., -1].reshape(-1)
        if np.any(xn < -1e-14) or np.any(xn > self.x_max + 1e-12):
            raise OutOfDomain("x_n outside the '+' grid")
        return _eval_points(self.w_spline, cols, xn).reshape(x.shape[:-1])

    def psi_at(self, y) -> np.ndarray:
        """``psi`` at arbitrary y_n on grid columns (root solve on the column spline)."""
        y = np.asarray(y, dtype=float)
        cols = self._columns(y).reshape(-1)
        yn = y[..., -1].reshape(-1)
        sp = self.w_spline
        wn = sp(sp.x)
        sol, _ = kernels.invert_columns(np.ascontiguousarray(sp.c[:, :, cols]), sp.x,
                                        np.ascontiguousarray(wn[:, cols]), yn[:, None].copy(),
                                        ROOT_TOL, 100)
        if np.isnan(sol).any():
            raise OutOfDomain("y_n outside the image of the column")
        return sol[:, 0].reshape(y.shape[:-1])

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = x.copy()
        y[..., -1] = self.w(x)
        return y

    def to_x(self, y, side: str = "+") -> np.ndarray:
        y = np.asarray(y, dtype=float)
        x = y.copy()
        p = self.psi_at(y)
        x[..., -1] = p if side == "+" else p - self.C * y[..., -1]
        return x

    def dpsi(self) -> np.ndarray:
        """Gradient of psi on the y grid, shape gamma_shape + (ny, n)."""
        n = self.n
        out = np.empty(self.psi.shape + (n,))
        for d in range(n - 1):
            out[..., d] = np.gradient(self.psi, self.u1.h, axis=d, edge_order=2)
        out[..., n - 1] = self.dpsi_dyn
        return out


def forward_transform(u1: GraphFunction, u2: GraphFunction, ny: Optional[int] = None,
                      y_max: Optional[float] = None) -> HodographMap:
    """Build the hodograph map from two '+' sheets sharing a grid.

    The y_n range is the largest interval ``[0, y_max]`` contained in the
    image of every column.
    """
    if u1.side != "+" or u2.side != "+":
        raise ValueError("both sheets must live on the '+' half")
    if u1.shape != u2.shape or u1.h != u2.h or not np.array_equal(u1.origin, u2.origin):
        raise ValueError("sheets must share a grid")
    if u1.shape[-1] < 4:
        raise ValueError("need at least 4 nodes along x_n for cubic interpolation")
    w = u1.values - u2.values
    scale = max(1.0, float(np.abs(w).max()))
    if np.abs(w[..., 0]).max() > 1e-12 * scale:
        raise ValueError("u_1 and u_2 must coincide on the interface")
    w = w.copy()
    w[..., 0] = 0.0
    if np.any(np.diff(w, axis=-1) <= 0):
        raise NotMonotone("w = u_1 - u_2 is not strictly increasing along x_n")
    xn = u1.axis_coords(u1.n - 1)
    sp = _column_spline(xn, w)
    if np.any(_min_derivative(sp) <= 0):
        raise NotMonotone("interpolated w has a non-positive x_n derivative")
    wn = sp(xn)  # (Nn, ncol), equals nodal w
    top = float(wn[-1].min())
    if y_max is None:
        y_max = top
    elif y_max > top + 1e-14:
        raise OutOfDomain(f"y_max = {y_max} exceeds the common image {top}")
    ny = ny or u1.shape[-1]
    yn = np.linspace(0.0, y_max, ny)
    ncol = wn.shape[1]
    targets = np.broadcast_to(yn, (ncol, ny)).copy()
    sol, status = kernels.invert_columns(sp.c, sp.x, wn, targets, ROOT_TOL, 100)
    if status or np.isnan(sol).any():
        raise OutOfDomain("root solve left the column range")
    sol[:, 0] = 0.0
    dw = _eval_columns(sp, sol, nu=1)
    psi = sol.reshape(u1.shape[:-1] + (ny,))
    dpsi_dyn = (1.0 / dw).reshape(psi.shape)
    if np.any(dpsi_dyn <= 0):
        raise NotMonotone("psi is not increasing in y_n")
    C = 2.0 * float(dpsi_dyn.max())
    # at every interface node C (a_1 - a_2) > 1, with a_1 - a_2 = 1 / dpsi_dyn(y', 0)
    if np.any(C / dpsi_dyn[..., 0] <= 1.0):
        raise InvariantViolation("C (a_1 - a_2) > 1 fails at the interface")
    return HodographMap(u1, u2, sp, yn, psi, dpsi_dyn, C)


@dataclass(frozen=True)
class ChainRule:
    """x-derivatives in terms of y-derivatives at one y node.

    ``d/dx_i = d/dy_i + tangential[i] * d/dy_n`` for i < n and
    ``d/dx_n = normal * d/dy_n``.
    """

    side: str
    tangential: np.ndarray
    normal: float
    dpsi: np.ndarray

    def apply(self, dy) -> np.ndarray:
        dy = np.asarray(dy, dtype=float)
        out = np.empty_like(dy)
        out[..., :-1] = dy[..., :-1] + self.tangential * dy[..., -1:]
        out[..., -1] = self.normal * dy[..., -1]
        return out

    @property
    def dw_dx(self) -> np.ndarray:
        """Gradient of w in x ('+' side only)."""
        if self.side != "+":
            raise ValueError("w is defined on the '+' side")
        return np.append(self.tangential, self.normal)


def transform_derivatives(hmap: HodographMap, side: str, node) -> ChainRule:
    if side not in ("+", "-"):
        raise ValueError("side must be '+' or '-'")
    node = tuple(int(i) for i in node)
    d = hmap.dpsi()[node]
    den = d[-1] - (hmap.C if side == "-" else 0.0)
    if abs(d[-1]) < JAC_TOL or abs(d[-1] - hmap.C) < JAC_TOL:
        raise DegenerateJacobian(f"D_yn psi = {d[-1]:.3e} is degenerate (C = {hmap.C:.3e})")
    return ChainRule(side, -d[:-1] / den, 1.0 / den, d)


def compose_phi(hmap: HodographMap, u: GraphFunction, k: int, s: int) -> np.ndarray:
    """``phi_k`` on the y grid: ``u_k(y', psi)`` for k <= s, ``u_k(y', psi - C y_n)`` otherwise.

    ``k`` is 1-based. Values are cubic-interpolated along the x_n column.
    """
    plus = k <= s
    want = "+" if plus else "-"
    if u.side != want:
        raise ValueError(f"sheet {k} must be a {want!r} grid")
    if u.shape[:-1] != hmap.gamma_shape or u.h != hmap.u1.h:
        raise ValueError("sheet must share the interface grid of the map")
    xn_tgt = hmap.psi if plus else hmap.psi - hmap.C * hmap.yn
    xn = u.axis_coords(u.n - 1)
    lo, hi = xn[0], xn[-1]
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.any(xn_tgt < lo - tol) or np.any(xn_tgt > hi + tol):
        raise OutOfDomain(f"mapped x_n leaves the source grid [{lo}, {hi}]")
    xn_tgt = np.clip(xn_tgt, lo, hi)
    sp = _column_spline(xn, u.values)
    ncol = sp.c.shape[2]
    vals = _eval_columns(sp, xn_tgt.reshape(ncol, -1))
    return vals.reshape(xn_tgt.shape)
