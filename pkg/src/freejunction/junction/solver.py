"""Weighted-area minimisation with pinned wires and a free shared polyline.

The search direction is L-BFGS on the mobile coordinates with the weighted
cotangent Laplacian of the current mesh as initial inverse Hessian, so an
empty memory gives the harmonic-map (Pinkall-Polthier) step. The Laplacian
is rebuilt every ``refresh_every`` iterations. Steps are accepted by Armijo
backtracking. Near convergence the Armijo decrease drops below the
rounding of the energy, and a step is then accepted when the energy does
not increase, so the recorded trace stays monotone.
"""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import LineSearchFailure, MeshCollapse
from ..metric import MetricField
from .energy import dual_areas, energy_and_gradient
from .mesh import SheetMeshState

NOISE = 1e-14


@dataclass
class OptimizerConfig:
    max_iter: int = 20000
    gtol: float = 1e-7
    memory: int = 10
    c1: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 50
    equalize_every: int = 50
    jitter: float = 0.0
    seed: int = 42
    precondition: bool = True
    refresh_every: int = 10

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        for name in ("gtol", "c1", "shrink"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.c1 < 1 or not self.shrink < 1:
            raise ValueError("c1 and shrink must be below 1")
        if self.refresh_every < 0 or self.equalize_every < 0:
            raise ValueError("refresh_every and equalize_every must be >= 0")
        if self.memory < 1 or self.max_halvings < 1:
            raise ValueError("memory and max_halvings must be >= 1")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")

    @classmethod
    def from_dict(cls, d) -> "OptimizerConfig":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown optimizer options: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraceRow:
    iteration: int
    energy: float
    grad_norm: float
    step: float
    kind: str


@dataclass
class MinimizeResult:
    state: SheetMeshState
    trace: List[TraceRow] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.trace])


def masked_grad_norm(g: np.ndarray, mobile: np.ndarray) -> float:
    """Largest vertex gradient norm over the mobile components."""
    gm = np.where(mobile, g, 0.0)
    return float(np.sqrt((gm * gm).sum(axis=1)).max()) if len(gm) else 0.0


def cotan_laplacian(X, F, w) -> sp.csr_matrix:
    """Weighted cotangent Laplacian, negative cotangents clamped to zero.

    For a mesh with acute angles ``L @ X`` equals the area gradient.
    """
    nv = X.shape[0]
    rows, cols, vals = [], [], []
    for i in range(3):
        a, b, c = F[:, i], F[:, (i + 1) % 3], F[:, (i + 2) % 3]
        e1, e2 = X[b] - X[a], X[c] - X[a]
        cr = np.linalg.norm(np.cross(e1, e2), axis=1)
        cot = np.einsum("ij,ij->i", e1, e2) / np.maximum(cr, 1e-300)
        wt = 0.5 * w * np.maximum(cot, 0.0)
        rows += [b, c, b, c]
        cols += [c, b, b, c]
        vals += [-wt, -wt, wt, wt]
    L = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nv, nv)).tocsr()
    return L


class _Preconditioner:
    """Inverse of the cotangent Laplacian restricted to the mobile coordinates."""

    def __init__(self, X, F, w, mobile):
        L = cotan_laplacian(X, F, w)
        diag = L.diagonal()
        shift = 1e-10 * (diag.mean() if diag.size else 1.0)
        L = (L + sp.identity(L.shape[0]) * shift).tocsc()
        self.mobile = mobile
        self.solvers = []
        cache = {}
        for d in range(3):
            idx = np.nonzero(mobile[:, d])[0]
            key = idx.tobytes()
            if key not in cache:
                cache[key] = splu(L[idx][:, idx].tocsc()) if idx.size else None
            self.solvers.append((idx, cache[key]))

    def __call__(self, r):
        r = r.reshape(-1, 3)
        out = np.zeros_like(r)
        for d, (idx, lu) in enumerate(self.solvers):
            if lu is not None:
                out[idx, d] = lu.solve(r[idx, d])
        return out.ravel()


def _lbfgs_direction(g, S, Y, H0=None):
    d = -g.copy()
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / (y @ s)
        a = rho * (s @ d)
        d -= a * y
        alphas.append((rho, a, s, y))
    if H0 is not None:
        d = H0(d)
    elif S:
        s, y = S[-1], Y[-1]
        d *= (s @ y) / (y @ y)
    for rho, a, s, y in reversed(alphas):
        b = rho * (y @ d)
        d += (a - b) * s
    return d


def equalize_polyline(state: SheetMeshState) -> np.ndarray:
    """Positions with the polyline vertices respaced uniformly in arc length.

    Endpoints stay put. Only coordinates that are mobile change.
    """
    X = state.X.copy()
    P = X[state.polyline]
    if len(P) < 3:
        return X
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return X
    target = np.linspace(0.0, s[-1], len(P))
    newP = np.stack([np.interp(target, s, P[:, d]) for d in range(3)], 1)
    newP[0], newP[-1] = P[0], P[-1]
    mob = state.mobile[state.polyline]
    X[state.polyline] = np.where(mob, newP, P)
    return X


def minimize(state: SheetMeshState, config: Optional[OptimizerConfig] = None,
             metric: Optional[MetricField] = None) -> MinimizeResult:
    """Minimise the weighted area over the mobile vertex coordinates."""
    cfg = config or OptimizerConfig()
    st = state.copy()
    st.validate()
    mask = st.mobile.ravel()
    if cfg.jitter > 0:
        rng = np.random.default_rng(cfg.seed)
        noise = rng.standard_normal(st.X.shape) * cfg.jitter
        st.X = st.X + np.where(st.mobile, noise, 0.0)

    def evaluate(Xflat):
        e, g = energy_and_gradient(st, metric, Xflat.reshape(-1, 3))
        return e, g.ravel() * mask

    x = st.X.ravel().copy()
    E, g = evaluate(x)
    gn = masked_grad_norm(g.reshape(-1, 3), st.mobile)
    res = MinimizeResult(st)
    res.trace.append(TraceRow(0, E, gn, 0.0, "start"))
    S, Y = deque(maxlen=cfg.memory), deque(maxlen=cfg.memory)
    F, w = st.all_faces()
    H0 = None
    it = 0
    while gn >= cfg.gtol and it < cfg.max_iter:
        it += 1
        if H0 is None and cfg.precondition:
            H0 = _Preconditioner(x.reshape(-1, 3), F, w, st.mobile)
        d = _lbfgs_direction(g, list(S), list(Y), H0) * mask
        kind = "lbfgs"
        if not (g @ d < 0):
            d, kind = -g, "descent"
            S.clear(), Y.clear()
        try:
            x_new, E_new, g_new, step = _line_search(evaluate, x, E, g, d, cfg)
        except LineSearchFailure:
            if kind == "descent":
                raise
            S.clear(), Y.clear()
            d, kind = -g, "descent"
            x_new, E_new, g_new, step = _line_search(evaluate, x, E, g, d, cfg)
        s_vec, y_vec = x_new - x, g_new - g
        if s_vec @ y_vec > 1e-12 * np.sqrt((s_vec @ s_vec) * (y_vec @ y_vec)):
            S.append(s_vec)
            Y.append(y_vec)
        x, E, g = x_new, E_new, g_new
        if cfg.equalize_every and it % cfg.equalize_every == 0 and len(st.polyline) > 2:
            st.X = x.reshape(-1, 3)
            xe = equalize_polyline(st).ravel()
            try:
                Ee, ge = evaluate(xe)
            except MeshCollapse:
                Ee = np.inf
            if Ee <= E:
                x, E, g = xe, Ee, ge
                S.clear(), Y.clear()
                kind += "+equalize"
        if cfg.precondition and cfg.refresh_every and it % cfg.refresh_every == 0:
            H0 = None
            S.clear(), Y.clear()
        gn = masked_grad_norm(g.reshape(-1, 3), st.mobile)
        res.trace.append(TraceRow(it, E, gn, step, kind))
    st.X = x.reshape(-1, 3).copy()
    res.state = st
    res.converged = gn < cfg.gtol
    res.iterations = it
    return res


def _line_search(evaluate, x, E, g, d, cfg):
    slope = float(g @ d)
    step = 1.0
    collapsed = False
    for _ in range(cfg.max_halvings + 1):
        xt = x + step * d
        try:
            Et, gt = evaluate(xt)
        except MeshCollapse:
            collapsed = True
            step *= cfg.shrink
            continue
        if Et <= E + cfg.c1 * step * slope:
            return xt, Et, gt, step
        if Et <= E and abs(Et - E) <= NOISE * max(1.0, abs(E)):
            return xt, Et, gt, step
        step *= cfg.shrink
    if collapsed:
        raise MeshCollapse(f"every trial step collapsed a triangle ({cfg.max_halvings} halvings)")
    raise LineSearchFailure(f"no decrease after {cfg.max_halvings} halvings")


def stationarity(state: SheetMeshState, metric: Optional[MetricField] = None):
    """Balance residual on the polyline and gradient density over the free vertices.

    Returns ``(max_balance, max_density)``. The density at a vertex with any
    mobile coordinate is ``|grad| / sqrt(A_v)`` with ``A_v`` its weighted dual
    area, which makes it dimensionless like the unit-conormal residual. The
    polyline counts as interior: it is interior to the union of the sheets.
    """
    from .balance import balance_residuals

    _, g = energy_and_gradient(state, metric)
    A = dual_areas(state, metric)
    free = state.mobile.any(axis=1)
    dens = np.linalg.norm(np.where(state.mobile, g, 0.0), axis=1)[free] / np.sqrt(A[free])
    bal = balance_residuals(state, metric, interior_only=True)
    return (float(bal.max()) if bal.size else 0.0, float(dens.max()) if dens.size else 0.0)
