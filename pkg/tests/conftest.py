import numpy as np
import pytest

from freejunction.linearize import JunctionData


def random_spd(rng, dim, lo=0.3):
    A = rng.standard_normal((dim, dim))
    return A @ A.T + lo * np.eye(dim)


def random_junction(rng, qmax=6):
    """Admissible junction data: a in [-2, 2], a1 - a2 >= 0.2, theta in [0.5, 3], C(a1 - a2) in [1.1, 5]."""
    q = int(rng.integers(3, qmax + 1))
    s = int(rng.integers(2, q))
    while True:
        a = rng.uniform(-2.0, 2.0, q)
        if a[0] - a[1] >= 0.2:
            break
    theta = rng.uniform(0.5, 3.0, q)
    C = rng.uniform(1.1, 5.0) / (a[0] - a[1])
    return JunctionData(q, s, a, theta, C)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def duplicated_coincidence_system(data, n=2):
    """Junction system whose two balance rows are copies of the first coincidence row."""
    from freejunction.adn import WeightedSystem
    from freejunction.linearize import principal_linearization

    base = principal_linearization(data)
    sysw = base.to_weighted_system(n)
    q = data.q
    out = WeightedSystem(n, q, q, sysw.l, list(sysw.s), list(sysw.t), [-2] * q)
    out.interior = {k: list(v) for k, v in sysw.interior.items()}
    zero = (0,) * n
    row = base.coincidence[0]
    for h in range(2):
        for j in np.nonzero(row)[0]:
            out.add_boundary(h, int(j), zero, row[j])
    for (h, j), terms in sysw.boundary.items():
        if h >= 2:
            out.boundary[(h, j)] = list(terms)
    out.validate(coercive=True)
    return out
