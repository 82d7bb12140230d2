"""Ellipticity and complementing-condition checks for weighted elliptic systems.

A ``WeightedSystem`` holds the constant-coefficient principal parts of an
Agmon-Douglis-Nirenberg system at one boundary point: ``q`` equations in
``q`` unknowns with weights ``s_k`` (equations) and ``t_j`` (unknowns), and
``m`` boundary rows with weights ``r_h``. Entry ``(k, j)`` of the interior
part is a homogeneous polynomial in D of degree ``s_k + t_j``; boundary entry
``(h, j)`` has degree ``t_j + r_h``. Indices are 0-based in code and 1-based
in system files.

Conventions: ``D_d -> i xi_d`` for the full symbol and, in the half space
``y_n > 0``, ``D_d -> i xi'_d`` (d < n), ``D_n -> -lam`` for the ansatz
``c exp(i xi'.y' - lam y_n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize

from .errors import BadWeights, DimensionMismatch, ParseError, RootMultiplicity

ELLIPTIC_TOL = 1e-10
COERCIVE_TOL = 1e-10
CLUSTER_TOL = 1e-6
KERNEL_TOL = 1e-6
PERTURB = 1e-6

Entry = List[Tuple[Tuple[int, ...], complex]]


@dataclass
class WeightedSystem:
    n: int
    q: int
    m: int
    l: int
    s: List[int]
    t: List[int]
    r: List[int]
    interior: Dict[Tuple[int, int], Entry] = field(default_factory=dict)
    boundary: Dict[Tuple[int, int], Entry] = field(default_factory=dict)

    def add_interior(self, k, j, alpha, value):
        self.interior.setdefault((k, j), []).append((tuple(int(a) for a in alpha), complex(value)))

    def add_boundary(self, h, j, kappa, value):
        self.boundary.setdefault((h, j), []).append((tuple(int(a) for a in kappa), complex(value)))

    def validate(self, coercive: bool = False) -> None:
        if len(self.s) != self.q or len(self.t) != self.q or len(self.r) != self.m:
            raise BadWeights("weight vectors do not match q and m")
        if self.l > 0:
            raise BadWeights(f"l must be <= 0, got {self.l}")
        if max(self.s) != 0:
            raise BadWeights("max_k s_k must be 0")
        if min(self.t) < -self.l:
            raise BadWeights("min_j t_j must be >= -l")
        if min(sk + tj for sk in self.s for tj in self.t) < 0:
            raise BadWeights("min_{k,j} (s_k + t_j) must be >= 0")
        if self.m and min(tj + rh for tj in self.t for rh in self.r) < 0:
            raise BadWeights("min_{j,h} (t_j + r_h) must be >= 0")
        for (k, j), terms in self.interior.items():
            if not (0 <= k < self.q and 0 <= j < self.q):
                raise BadWeights(f"interior entry ({k + 1}, {j + 1}) out of range")
            for alpha, _ in terms:
                if len(alpha) != self.n or min(alpha) < 0:
                    raise BadWeights(f"bad multi-index {alpha}")
                if sum(alpha) != self.s[k] + self.t[j]:
                    raise BadWeights(f"interior entry ({k + 1}, {j + 1}) has order {sum(alpha)}, "
                                     f"expected s_k + t_j = {self.s[k] + self.t[j]}")
        for (h, j), terms in self.boundary.items():
            if not (0 <= h < self.m and 0 <= j < self.q):
                raise BadWeights(f"boundary entry ({h + 1}, {j + 1}) out of range")
            for kappa, _ in terms:
                if len(kappa) != self.n or min(kappa) < 0:
                    raise BadWeights(f"bad multi-index {kappa}")
                if sum(kappa) != self.t[j] + self.r[h]:
                    raise BadWeights(f"boundary entry ({h + 1}, {j + 1}) has order {sum(kappa)}, "
                                     f"expected t_j + r_h = {self.t[j] + self.r[h]}")
        if coercive and 2 * self.m != sum(self.s) + sum(self.t):
            raise BadWeights(f"2m = {2 * self.m} differs from sum s + sum t = {sum(self.s) + sum(self.t)}")

    def row_scale(self) -> float:
        """Product over equations of the largest absolute coefficient in the row."""
        out = 1.0
        for k in range(self.q):
            vals = [abs(v) for (kk, _), terms in self.interior.items() if kk == k for _, v in terms]
            out *= max(vals) if vals else 0.0
        return out


# ---------------------------------------------------------------------------
# symbols


def _monomial(alpha, z):
    """prod_d z[..., d] ** alpha[d] for complex z of shape (..., n)."""
    out = np.ones(z.shape[:-1], dtype=complex)
    for d, a in enumerate(alpha):
        if a:
            out = out * z[..., d] ** a
    return out


def interior_symbol(sys: WeightedSystem, xi) -> np.ndarray:
    """Principal symbol matrix at real frequencies ``xi`` of shape (..., n)."""
    xi = np.asarray(xi, dtype=float)
    z = 1j * xi
    out = np.zeros(xi.shape[:-1] + (sys.q, sys.q), dtype=complex)
    for (k, j), terms in sys.interior.items():
        for alpha, v in terms:
            out[..., k, j] += v * _monomial(alpha, z)
    return out


def _lambda_polys(entries, rows, cols, xi_t):
    """Entry polynomials in lam (lowest degree first) for the half-space ansatz."""
    z = 1j * np.asarray(xi_t, dtype=float)
    mat = [[None] * cols for _ in range(rows)]
    for (a, b), terms in entries.items():
        for alpha, v in terms:
            c = v * (_monomial(alpha[:-1], z) if len(alpha) > 1 else 1.0)
            deg = alpha[-1]
            coef = np.zeros(deg + 1, dtype=complex)
            coef[deg] = c * (-1) ** deg
            mat[a][b] = coef if mat[a][b] is None else P.polyadd(mat[a][b], coef)
    return mat


def _eval_polys(mat, lam):
    rows, cols = len(mat), len(mat[0])
    out = np.zeros((rows, cols), dtype=complex)
    for a in range(rows):
        for b in range(cols):
            if mat[a][b] is not None:
                out[a, b] = P.polyval(lam, mat[a][b])
    return out


def _poly_size(mat, rad):
    """Largest entry bound ``sum_k |c_k| rad^k`` over a polynomial matrix."""
    best = 0.0
    for row in mat:
        for e in row:
            if e is not None:
                best = max(best, float(np.sum(np.abs(e) * rad ** np.arange(len(e)))))
    return best


def poly_det(mat) -> np.ndarray:
    """Determinant of a square matrix of polynomials (Laplace expansion, memoised).

    ``None`` marks a zero entry. Coefficients are lowest degree first.
    """
    q = len(mat)
    memo = {}

    def rec(row, mask):
        if row == q:
            return np.array([1.0 + 0j])
        key = (row, mask)
        if key in memo:
            return memo[key]
        total = np.array([0j])
        pos = 0
        for col in range(q):
            if not mask >> col & 1:
                continue
            if mat[row][col] is not None:
                sub = rec(row + 1, mask & ~(1 << col))
                term = P.polymul(mat[row][col], sub)
                total = P.polyadd(total, -term if pos % 2 else term)
            pos += 1
        memo[key] = total
        return total

    return rec(0, (1 << q) - 1)


def companion_roots(coef) -> np.ndarray:
    """Roots of a polynomial (lowest degree first) as companion-matrix eigenvalues."""
    c = np.asarray(coef, dtype=complex)
    big = np.max(np.abs(c)) if c.size else 0.0
    if big == 0:
        raise ValueError("zero polynomial")
    keep = np.nonzero(np.abs(c) > 1e-14 * big)[0]
    c = c[: keep[-1] + 1]
    d = len(c) - 1
    if d == 0:
        return np.array([], dtype=complex)
    M = np.zeros((d, d), dtype=complex)
    M[1:, :-1] = np.eye(d - 1)
    M[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(M)


# ---------------------------------------------------------------------------
# sampling


def sphere_points(dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform points on the unit sphere in R^dim."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if dim == 3:
        k = np.arange(count) + 0.5
        zc = 1.0 - 2.0 * k / count
        rho = np.sqrt(1.0 - zc ** 2)
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), zc], axis=1)
    pts = np.random.default_rng(0).standard_normal((count, dim))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def default_samples(n: int) -> int:
    return 64 if n <= 4 else 256


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class CheckResult:
    ok: bool
    label: str
    min_ratio: float
    witness: Optional[dict] = None
    notes: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def ellipticity_check(sys: WeightedSystem, samples: Optional[int] = None,
                      refine: bool = True) -> CheckResult:
    """Look for a real unit frequency where the symbol determinant vanishes."""
    sys.validate()
    samples = samples or default_samples(sys.n)
    scale = sys.row_scale()
    if scale == 0:
        return CheckResult(False, "NotElliptic", 0.0, {"xi": np.eye(sys.n)[0], "det": 0.0},
                           ["an equation has no principal part"])
    pts = sphere_points(sys.n, samples)

    def ratio(xi):
        xi = np.asarray(xi, dtype=float)
        xi = xi / np.linalg.norm(xi, axis=-1, keepdims=True)
        return np.abs(np.linalg.det(interior_symbol(sys, xi))) / scale

    vals = ratio(pts)
    order = np.argsort(vals)
    best_xi, best = pts[order[0]], float(vals[order[0]])
    if refine and best > ELLIPTIC_TOL and sys.n > 1:
        for i in order[: min(4, len(order))]:
            res = minimize(lambda v: float(ratio(v)), pts[i], method="Nelder-Mead",
                           options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 200 * sys.n})
            if res.fun < best:
                best, best_xi = float(res.fun), res.x / np.linalg.norm(res.x)
    det = complex(np.linalg.det(interior_symbol(sys, best_xi)))
    if best <= ELLIPTIC_TOL:
        return CheckResult(False, "NotElliptic", best, {"xi": best_xi, "det": det})
    return CheckResult(True, "Elliptic", best)


def _cluster(roots, tol):
    roots = sorted(roots, key=lambda z: (z.real, z.imag))
    groups = []
    for z in roots:
        for g in groups:
            if any(abs(z - w) <= tol * max(1.0, abs(w)) for w in g):
                g.append(z)
                break
        else:
            groups.append([z])
    return groups


def decaying_basis(sys: WeightedSystem, xi_t):
    """Roots with Re > 0 and a basis of exponentially decaying solutions.

    Returns ``(lams, V)`` where column r of ``V`` is the coefficient vector of
    the solution ``V[:, r] exp(i xi'.y' - lams[r] y_n)``. Raises
    RootMultiplicity when a repeated root has fewer independent kernel vectors
    than its multiplicity.
    """
    L = _lambda_polys(sys.interior, sys.q, sys.q, xi_t)
    det = poly_det(L)
    roots = companion_roots(det)
    mag = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    decay = [z for z in roots if z.real > 1e-12 * mag]
    if len(decay) != sys.m:
        raise DimensionMismatch(f"{len(decay)} decaying roots at xi' = {np.round(xi_t, 6).tolist()}, "
                                f"but m = {sys.m} boundary rows")
    lams, cols = [], []
    for g in _cluster(decay, CLUSTER_TOL):
        lam = complex(np.mean(g))
        A = _eval_polys(L, lam)
        _, sv, vh = np.linalg.svd(A)
        mult = len(g)
        top = _poly_size(L, abs(lam))
        if sv[-mult] > KERNEL_TOL * max(top, 1e-300):
            raise RootMultiplicity(f"root {lam:.6g} has multiplicity {mult} "
                                   f"but a smaller kernel (sigma = {sv[-mult]:.2e})")
        for r in range(mult):
            lams.append(lam)
            cols.append(vh[-1 - r].conj())
    return np.array(lams), np.array(cols).T


def _boundary_matrix(sys, xi_t, lams, V):
    Bp = _lambda_polys(sys.boundary, sys.m, sys.q, xi_t)
    out = np.zeros((sys.m, len(lams)), dtype=complex)
    for r, lam in enumerate(lams):
        out[:, r] = _eval_polys(Bp, lam) @ V[:, r]
    return out


def _hadamard_ratio(B):
    norms = np.linalg.norm(B, axis=1)
    if np.any(norms == 0):
        return 0.0
    return float(abs(np.linalg.det(B)) / np.prod(norms))


def complementing_at(sys: WeightedSystem, xi_t):
    """Boundary determinant ratio at one tangential frequency, with its witness data."""
    xi_t = np.asarray(xi_t, dtype=float)
    note = None
    try:
        lams, V = decaying_basis(sys, xi_t)
    except RootMultiplicity:
        bump = PERTURB * np.cos(np.arange(1, len(xi_t) + 1))
        xi_p = xi_t + bump
        xi_p *= np.linalg.norm(xi_t) / np.linalg.norm(xi_p)
        lams, V = decaying_basis(sys, xi_p)
        xi_t, note = xi_p, "repeated root: perturbed xi' by 1e-6"
    B = _boundary_matrix(sys, xi_t, lams, V)
    return _hadamard_ratio(B), B, lams, V, xi_t, note


def complementing_check(sys: WeightedSystem, samples: Optional[int] = None) -> CheckResult:
    """Complementing (coercivity) condition at the boundary point.

    For every sampled unit tangential frequency the decaying solutions of the
    interior system are assembled and the m x m boundary matrix must be
    nonsingular: ``|det B| / prod_h |B_h| > COERCIVE_TOL``.
    """
    sys.validate(coercive=True)
    if sys.n < 2:
        raise BadWeights("the complementing condition needs n >= 2")
    samples = samples or default_samples(sys.n)
    pts = sphere_points(sys.n - 1, samples)
    worst, notes = math.inf, []
    for xi_t in pts:
        ratio, B, lams, V, xi_used, note = complementing_at(sys, xi_t)
        if note and note not in notes:
            notes.append(note)
        if ratio < worst:
            worst = ratio
        if ratio <= COERCIVE_TOL:
            _, _, vh = np.linalg.svd(B)
            null = vh[-1].conj()
            return CheckResult(False, "NotCoercive", ratio,
                               {"xi_t": xi_used, "lambdas": lams, "null": null, "c": V @ null},
                               notes)
    return CheckResult(True, "Coercive", worst, None, notes)


# ---------------------------------------------------------------------------
# system files


def _fmt(v: complex) -> str:
    v = complex(v)
    return repr(v.real) if v.imag == 0 else repr(v).strip("()")


def _fmt_index(idx):
    return ",".join(str(a) for a in idx)


def dumps_system(sys: WeightedSystem, comment: str = "") -> str:
    lines = []
    for c in comment.splitlines():
        lines.append(f"# {c}".rstrip())
    lines += [f"n {sys.n}", f"q {sys.q}", f"m {sys.m}", f"l {sys.l}",
              "s " + " ".join(map(str, sys.s)), "t " + " ".join(map(str, sys.t)),
              "r " + " ".join(map(str, sys.r))]
    for (k, j) in sorted(sys.interior):
        for alpha, v in sys.interior[(k, j)]:
            lines.append(f"L {k + 1} {j + 1} {_fmt_index(alpha)} {_fmt(v)}")
    for (h, j) in sorted(sys.boundary):
        for kappa, v in sys.boundary[(h, j)]:
            lines.append(f"B {h + 1} {j + 1} {_fmt_index(kappa)} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def loads_system(text: str) -> WeightedSystem:
    head, ents = {}, []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        try:
            if key in ("n", "q", "m", "l"):
                if len(tok) != 2:
                    raise ParseError(f"'{key}' takes one integer", ln)
                head[key] = int(tok[1])
            elif key in ("s", "t", "r"):
                head[key] = [int(x) for x in tok[1:]]
            elif key in ("L", "B"):
                if len(tok) != 5:
                    raise ParseError(f"'{key}' entry needs: row col multi-index value", ln)
                idx = tuple(int(x) for x in tok[3].split(","))
                ents.append((ln, key, int(tok[1]) - 1, int(tok[2]) - 1, idx, complex(tok[4])))
            else:
                raise ParseError(f"unknown keyword {key!r}", ln)
        except ValueError as exc:
            raise ParseError(str(exc), ln) from None
    for key in ("n", "q", "m", "s", "t", "r"):
        if key not in head:
            raise ParseError(f"missing '{key}' line")
    sys = WeightedSystem(head["n"], head["q"], head["m"], head.get("l", 0),
                         head["s"], head["t"], head["r"])
    for ln, key, a, b, idx, v in ents:
        if len(idx) != sys.n:
            raise ParseError(f"multi-index {idx} must have n = {sys.n} entries", ln)
        if a < 0 or b < 0:
            raise ParseError("indices are 1-based", ln)
        (sys.add_interior if key == "L" else sys.add_boundary)(a, b, idx, v)
    try:
        sys.validate()
    except BadWeights as exc:
        raise ParseError(str(exc)) from None
    return sys


def read_system(path) -> WeightedSystem:
    with open(path) as fh:
        return loads_system(fh.read())


def write_system(path, sys: WeightedSystem, comment: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(dumps_system(sys, comment))


# ---------------------------------------------------------------------------
# textbook fixtures


def laplacian(n: int) -> Dict[Tuple[int, int], Entry]:
    return {(0, 0): [(tuple(2 if d == i else 0 for d in range(n)), 1.0 + 0j) for i in range(n)]}


def dirichlet_laplace(n: int = 2) -> WeightedSystem:
    sys = WeightedSystem(n, 1, 1, 0, [0], [2], [-2])
    sys.interior = laplacian(n)
    sys.add_boundary(0, 0, (0,) * n, 1.0)
    return sys


def identified_pair(n: int = 2) -> WeightedSystem:
    """Two Laplacians with rows v1 - v2 = 0 and D_n v1 - D_n v2 = 0 (not coercive)."""
    sys = WeightedSystem(n, 2, 2, 0, [0, 0], [2, 2], [-2, -1])
    for k in range(2):
        for i in range(n):
            sys.add_interior(k, k, tuple(2 if d == i else 0 for d in range(n)), 1.0)
    zero = (0,) * n
    dn = tuple(1 if d == n - 1 else 0 for d in range(n))
    sys.add_boundary(0, 0, zero, 1.0)
    sys.add_boundary(0, 1, zero, -1.0)
    sys.add_boundary(1, 0, dn, 1.0)
    sys.add_boundary(1, 1, dn, -1.0)
    return sys


def wave(n: int = 2) -> WeightedSystem:
    """``D_11 - D_22`` (not elliptic)."""
    sys = WeightedSystem(n, 1, 0, 0, [0], [2], [])
    sys.add_interior(0, 0, (2, 0) + (0,) * (n - 2), 1.0)
    sys.add_interior(0, 0, (0, 2) + (0,) * (n - 2), -1.0)
    return sys
