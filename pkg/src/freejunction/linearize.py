"""Principal linearization of the junction system at the origin.

After the hodograph change of variables the linearized unknowns are
``v_1 = phi_2 - a_1 psi`` and ``v_k = phi_k - a_k psi`` (k >= 2), in which the
interior system is diagonal:

    (1 + a_k^2) Lap' v_k + mu_k^2 D_nn v_k = 0,

with ``mu_k = a_1 - a_2`` for k <= s and ``mu_k = (a_1 - a_2) / (1 - C (a_1 - a_2))``
for k > s. Boundary rows on ``y_n = 0``: two first-order balance rows and
``q - 2`` zeroth-order coincidence rows. Slopes and weights are stored
0-based; ``k`` in docstrings is 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adn import WeightedSystem
from .errors import InvariantViolation, ZeroFrequency

EQUAL_TOL = 1e-12


@dataclass(frozen=True)
class JunctionData:
    q: int
    s: int
    a: tuple
    theta: tuple
    C: float

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        object.__setattr__(self, "C", float(self.C))
        self.validate()

    def validate(self) -> None:
        if self.q < 3:
            raise InvariantViolation(f"q >= 3 required, got q = {self.q}")
        if not 2 <= self.s <= self.q - 1:
            raise InvariantViolation(f"2 <= s <= q - 1 required, got s = {self.s}")
        if len(self.a) != self.q or len(self.theta) != self.q:
            raise InvariantViolation("need q slopes and q weights")
        if not all(np.isfinite(self.a)) or not np.isfinite(self.C):
            raise InvariantViolation("slopes and C must be finite")
        if not self.a[0] > self.a[1]:
            raise InvariantViolation(f"a_1 > a_2 fails: a_1 = {self.a[0]!r}, a_2 = {self.a[1]!r}")
        if not self.C * self.delta > 1.0:
            raise InvariantViolation(f"C (a_1 - a_2) > 1 fails: C (a_1 - a_2) = {self.C * self.delta!r}")
        if not all(t > 0 for t in self.theta):
            raise InvariantViolation("theta_k > 0 fails")

    @property
    def delta(self) -> float:
        return self.a[0] - self.a[1]

    @property
    def kappa(self) -> float:
        """``1 - C (a_1 - a_2)``, negative for admissible data."""
        return 1.0 - self.C * self.delta

    @classmethod
    def from_dict(cls, d) -> "JunctionData":
        return cls(int(d["q"]), int(d["s"]), d["a"], d["theta"], d["C"])

    def to_dict(self) -> dict:
        return {"q": self.q, "s": self.s, "a": list(self.a), "theta": list(self.theta), "C": self.C}


@dataclass(frozen=True)
class LinearJunctionSystem:
    data: JunctionData
    tangential: np.ndarray      # 1 + a_k^2
    mu: np.ndarray              # mu_k
    balance_raw: np.ndarray     # (2, q): coefficient of D_n v_k in each balance row
    balance_reduced: np.ndarray  # (2, q): theta a / (1 + a^2), theta / (1 + a^2)
    coincidence: np.ndarray     # (q - 2, q): zeroth-order rows, row for k = 3..q
    basis_map: np.ndarray       # v = basis_map @ (psi, phi_2, ..., phi_q)
    s_weights: tuple
    t_weights: tuple
    r_weights: tuple
    l: int = -1

    @property
    def normal(self) -> np.ndarray:
        return self.mu ** 2

    @property
    def m(self) -> int:
        return self.data.q

    def to_weighted_system(self, n: int = 2) -> WeightedSystem:
        """Constant-coefficient ADN system in ``n`` variables (y_n normal)."""
        if n < 2:
            raise ValueError("n >= 2 required")
        q = self.data.q
        sys = WeightedSystem(n, q, q, self.l, list(self.s_weights), list(self.t_weights),
                             list(self.r_weights))
        for k in range(q):
            for i in range(n - 1):
                sys.add_interior(k, k, _unit(n, i, 2), self.tangential[k])
            sys.add_interior(k, k, _unit(n, n - 1, 2), self.normal[k])
        dn = _unit(n, n - 1, 1)
        zero = (0,) * n
        for h in range(2):
            for j in range(q):
                sys.add_boundary(h, j, dn, self.balance_raw[h, j])
        for r, row in enumerate(self.coincidence):
            for j in np.nonzero(row)[0]:
                sys.add_boundary(2 + r, int(j), zero, row[j])
        sys.validate(coercive=True)
        return sys


def _unit(n, i, p):
    return tuple(p if d == i else 0 for d in range(n))


def principal_linearization(data: JunctionData) -> LinearJunctionSystem:
    data.validate()
    q, s = data.q, data.s
    a = np.array(data.a)
    th = np.array(data.theta)
    d = data.delta
    plus = np.arange(q) < s
    mu = np.where(plus, d, d / data.kappa)
    rho = np.where(plus, 1.0, -1.0 / data.kappa)  # sign and chain-rule factor per side
    w3 = th * rho / (1.0 + a ** 2) ** 1.5
    balance_raw = np.stack([w3 * a, w3])
    balance_reduced = np.stack([th * a / (1 + a ** 2), th / (1 + a ** 2)])
    coin = np.zeros((q - 2, q))
    for k in range(2, q):
        coin[k - 2, 0] = -(a[k] - a[1]) / d
        coin[k - 2, 1] = -(a[0] - a[k]) / d
        coin[k - 2, k] = 1.0
    T = np.zeros((q, q))
    T[0, 0], T[0, 1] = -a[0], 1.0
    for k in range(1, q):
        T[k, 0], T[k, k] = -a[k], 1.0
    return LinearJunctionSystem(
        data, 1.0 + a ** 2, mu, balance_raw, balance_reduced, coin, T,
        (0,) * q, (2,) * q, (-1, -1) + (-2,) * (q - 2))


def decay_exponents(data: JunctionData, xi) -> np.ndarray:
    """Decay rates ``lambda_k`` of ``c_k exp(i xi'.y' - lambda_k y_n)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        raise ZeroFrequency("xi' = 0 has no decaying solutions")
    a = np.array(data.a)
    lam = np.sqrt(1.0 + a ** 2) / data.delta
    lam[data.s:] *= data.C * data.delta - 1.0
    # |xi'| last, so scaling xi' scales lambda exactly
    return lam * r


def coincidence_coefficients(data: JunctionData, c1, c2) -> np.ndarray:
    """``c_k = (a_k - a_2)/(a_1 - a_2) c_1 + (a_1 - a_k)/(a_1 - a_2) c_2``."""
    a = np.array(data.a)
    d = data.delta
    if d == 0:
        raise InvariantViolation("a_1 != a_2 required")
    out = (a - a[1]) / d * c1 + (a[0] - a) / d * c2
    out = out.astype(np.result_type(out, c1, c2))
    out[0], out[1] = c1, c2
    return out


def coercivity_determinant(theta: Sequence[float], a: Sequence[float], check: bool = True) -> float:
    """``D = (a_1 - a_2) [S_0 S_2 - S_1^2]`` with ``S_p = sum theta_k a_k^p / (1 + a_k^2)``.

    The bracket is evaluated through Lagrange's identity,
    ``S_0 S_2 - S_1^2 = 1/2 sum_{j,k} w_j w_k (a_j - a_k)^2``, which is
    nonnegative term by term and exactly zero for equal slopes.
    """
    th = np.asarray(theta, dtype=float)
    a = np.asarray(a, dtype=float)
    if th.shape != a.shape or th.ndim != 1:
        raise ValueError("theta and a must be vectors of the same length")
    if check and not a[0] > a[1]:
        raise InvariantViolation(f"a_1 > a_2 fails: a_1 = {a[0]!r}, a_2 = {a[1]!r}")
    if np.ptp(a) <= EQUAL_TOL:
        return 0.0
    w = th / (1.0 + a ** 2)
    diff = a[:, None] - a[None, :]
    bracket = 0.5 * float(np.sum(w[:, None] * w[None, :] * diff ** 2))
    return (a[0] - a[1]) * bracket


def reduced_balance_matrix(data: JunctionData) -> np.ndarray:
    """2x2 matrix acting on ``(c_1, c_2)`` after the coincidence substitution.

    Rows ``[S_2 - a_2 S_1, a_1 S_1 - S_2]`` and ``[S_1 - a_2 S_0, a_1 S_0 - S_1]``;
    its determinant equals ``coercivity_determinant``.
    """
    a = np.array(data.a)
    w = np.array(data.theta) / (1 + a ** 2)
    S0, S1, S2 = w.sum(), (w * a).sum(), (w * a * a).sum()
    a1, a2 = a[0], a[1]
    return np.array([[S2 - a2 * S1, a1 * S1 - S2], [S1 - a2 * S0, a1 * S0 - S1]])


def raw_balance_matrix(data: JunctionData, xi=1.0) -> np.ndarray:
    """Raw balance rows applied to decaying modes with coincident coefficients.

    Substituting ``v_k = c_k exp(i xi'.y' - lambda_k y_n)`` with ``c`` from
    ``coincidence_coefficients`` gives a 2x2 matrix in ``(c_1, c_2)``; its
    determinant is ``|xi'|^2 / (a_1 - a_2)^4 * D``.
    """
    sysl = principal_linearization(data)
    lam = decay_exponents(data, xi)
    a = np.array(data.a)
    d = data.delta
    E = np.stack([(a - a[1]) / d, (a[0] - a) / d], axis=1)  # c = E @ (c_1, c_2)
    return (sysl.balance_raw * -lam) @ E


def report(data: JunctionData, n: int = 2) -> str:
    """Structured text summary of the linearized system."""
    sysl = principal_linearization(data)
    lam = decay_exponents(data, np.eye(n - 1)[0])
    D = coercivity_determinant(data.theta, data.a)
    lines = ["[junction]",
             f"q = {data.q}", f"s = {data.s}",
             "a = " + " ".join(f"{x:.17g}" for x in data.a),
             "theta = " + " ".join(f"{x:.17g}" for x in data.theta),
             f"C = {data.C:.17g}",
             f"C*(a1-a2) = {data.C * data.delta:.17g}",
             "", "[interior]  (1+a_k^2) Lap' v_k + mu_k^2 D_nn v_k = 0"]
    for k in range(data.q):
        lines.append(f"k = {k + 1}: tangential = {sysl.tangential[k]:.17g}  normal = {sysl.normal[k]:.17g}")
    lines += ["", "[balance rows]  sum_k coef_k D_n v_k = 0"]
    for h in range(2):
        lines.append(f"row {h + 1}: " + " ".join(f"{x:.17g}" for x in sysl.balance_raw[h]))
    lines += ["", "[coincidence rows]  sum_j coef_j v_j = 0"]
    for r, row in enumerate(sysl.coincidence):
        lines.append(f"row {r + 3}: " + " ".join(f"{x:.17g}" for x in row))
    lines += ["", "[weights]",
              "s = " + " ".join(map(str, sysl.s_weights)),
              "t = " + " ".join(map(str, sysl.t_weights)),
              "r = " + " ".join(map(str, sysl.r_weights)),
              f"l = {sysl.l}",
              "", "[decay exponents at |xi'| = 1]"]
    for k in range(data.q):
        lines.append(f"lambda_{k + 1} = {lam[k]:.17g}")
    lines += ["", "[determinant]", f"D = {D:.17g}"]
    return "\n".join(lines) + "\n"
