import numpy as np
import pytest

from freejunction import adn
from freejunction.errors import BadWeights, DimensionMismatch, ParseError, RootMultiplicity
from freejunction.linearize import JunctionData, coercivity_determinant, principal_linearization

from conftest import duplicated_coincidence_system, random_junction, random_spd

SQ3 = np.sqrt(3.0)


def _idx(n, *pairs):
    a = [0] * n
    for d, p in pairs:
        a[d] += p
    return tuple(a)


def general_system(A_list, rows, n):
    """Decoupled operators sum_ij A_ij D_i D_j v_k with boundary rows.

    ``rows[h]`` is a list of (j, order, vector b, value): order 0 gives
    ``value v_j``, order 1 gives ``value (b . D) v_j``.
    """
    q = len(A_list)
    r = [-2 if all(o == 0 for _, o, _, _ in row) else -1 for row in rows]
    sysw = adn.WeightedSystem(n, q, len(rows), 0, [0] * q, [2] * q, r)
    for k, A in enumerate(A_list):
        for i in range(n):
            for j in range(n):
                if A[i, j] != 0:
                    sysw.add_interior(k, k, _idx(n, (i, 1), (j, 1)), A[i, j])
    for h, row in enumerate(rows):
        for j, order, b, val in row:
            if order == 0:
                sysw.add_boundary(h, j, (0,) * n, val)
            else:
                for d in range(n):
                    if b[d] != 0:
                        sysw.add_boundary(h, j, _idx(n, (d, 1)), val * b[d])
    return sysw


def test_textbook_fixtures():
    assert adn.ellipticity_check(adn.dirichlet_laplace(2)).ok
    r = adn.complementing_check(adn.dirichlet_laplace(2))
    assert r.ok and r.label == "Coercive"
    for n in (2, 3, 4):
        assert adn.complementing_check(adn.dirichlet_laplace(n)).ok
    bad = adn.complementing_check(adn.identified_pair(2))
    assert not bad.ok and bad.label == "NotCoercive"
    c = bad.witness["c"]
    assert abs(abs(c[0]) - abs(c[1])) < 1e-8 and abs(c[0]) > 0.1
    np.testing.assert_allclose(bad.witness["lambdas"], 1.0, atol=1e-8)


def test_wave_not_elliptic():
    r = adn.ellipticity_check(adn.wave(2))
    assert not r.ok and r.label == "NotElliptic"
    xi = r.witness["xi"]
    assert abs(abs(xi[0]) - abs(xi[1])) < 1e-6
    assert abs(r.witness["det"]) < 1e-10


def test_laplacian_symbol():
    sysw = adn.dirichlet_laplace(3)
    xi = np.array([0.3, -1.2, 0.5])
    assert adn.interior_symbol(sysw, xi)[0, 0] == pytest.approx(-(xi @ xi))


def test_poly_det_and_roots():
    # [[1 + x, 2], [x, x^2]] -> x^2 + x^3 - 2x
    mat = [[np.array([1, 1.0]), np.array([2.0])], [np.array([0, 1.0]), np.array([0, 0, 1.0])]]
    np.testing.assert_allclose(adn.poly_det(mat), [0, -2, 1, 1])
    r = np.sort_complex(adn.companion_roots([-2, 1, 1]))
    np.testing.assert_allclose(r, [-2, 1], atol=1e-14)
    assert adn.companion_roots([3.0]).size == 0
    with pytest.raises(ValueError):
        adn.companion_roots([0, 0])


def test_sphere_points():
    for dim in (1, 2, 3, 5):
        p = adn.sphere_points(dim, 32)
        np.testing.assert_allclose(np.linalg.norm(p, axis=1), 1.0)
    assert adn.sphere_points(1, 99).shape == (2, 1)
    assert adn.default_samples(3) == 64 and adn.default_samples(5) == 256


def test_bad_weights():
    sysw = adn.dirichlet_laplace(2)
    sysw.s = [1]
    with pytest.raises(BadWeights):
        sysw.validate()
    sysw = adn.dirichlet_laplace(2)
    sysw.l = 1
    with pytest.raises(BadWeights):
        sysw.validate()
    sysw = adn.dirichlet_laplace(2)
    sysw.r = [-3]
    with pytest.raises(BadWeights):
        sysw.validate()
    sysw = adn.dirichlet_laplace(2)
    sysw.add_boundary(0, 0, (1, 0), 1.0)
    with pytest.raises(BadWeights, match="order"):
        sysw.validate()
    sysw = adn.dirichlet_laplace(2)
    sysw.m, sysw.r = 2, [-2, -2]
    with pytest.raises(BadWeights, match="2m"):
        sysw.validate(coercive=True)
    with pytest.raises(BadWeights):
        adn.complementing_check(sysw)


def test_junction_fixture_coercive():
    d = JunctionData(3, 2, (SQ3, -SQ3, 0.0), (1, 1, 1), 1.0)
    sysw = principal_linearization(d).to_weighted_system(2)
    assert adn.ellipticity_check(sysw).ok
    r = adn.complementing_check(sysw)
    assert r.ok and r.notes == []


def test_duplicated_coincidence_rows():
    d = JunctionData(3, 2, (SQ3, -SQ3, 0.0), (1, 1, 1), 1.0)
    sysw = duplicated_coincidence_system(d)
    try:
        r = adn.complementing_check(sysw)
        assert not r.ok
    except DimensionMismatch:
        pass


def test_dimension_mismatch():
    sysw = adn.dirichlet_laplace(2)
    sysw.m, sysw.r = 2, [-2, -2]
    sysw.s, sysw.t = [0], [2]
    with pytest.raises(DimensionMismatch):
        adn.decaying_basis(sysw, np.array([1.0]))


def test_repeated_roots():
    # two identical decoupled Laplacians: lambda = 1 twice with a 2-d kernel
    sysw = adn.identified_pair(2)
    lams, V = adn.decaying_basis(sysw, np.array([1.0]))
    np.testing.assert_allclose(lams, 1.0)
    assert np.linalg.matrix_rank(V) == 2
    # a Jordan block: [[Lap, D_11], [0, Lap]] has a double root with a 1-d kernel
    n = 2
    sysw = adn.WeightedSystem(n, 2, 2, 0, [0, 0], [2, 2], [-2, -2])
    for k in range(2):
        sysw.add_interior(k, k, (2, 0), 1.0)
        sysw.add_interior(k, k, (0, 2), 1.0)
    sysw.add_interior(0, 1, (2, 0), 1.0)
    sysw.add_boundary(0, 0, (0, 0), 1.0)
    sysw.add_boundary(1, 1, (0, 0), 1.0)
    with pytest.raises(RootMultiplicity):
        adn.decaying_basis(sysw, np.array([1.0]))
    with pytest.raises(RootMultiplicity):
        adn.complementing_check(sysw)


def test_diagonal_closed_form(rng):
    agree = 0
    for i in range(1000):
        q = int(rng.integers(1, 4))
        alpha = rng.uniform(0.2, 3, q)
        beta = rng.uniform(0.2, 3, q)
        A_list = [np.diag([a, b]) for a, b in zip(alpha, beta)]
        orders = rng.integers(0, 2, q)
        coef = rng.standard_normal((q, q))
        if i % 2:
            coef[-1] = coef[0] * rng.uniform(0.5, 2)  # rank deficient in c unless orders differ
        rows = [[(j, int(orders[h]), np.array([0.0, 1.0]), coef[h, j]) for j in range(q)] for h in range(q)]
        sysw = general_system(A_list, rows, 2)
        lam = np.sqrt(alpha / beta)
        B = np.array([[coef[h, j] * (-lam[j] if orders[h] else 1.0) for j in range(q)] for h in range(q)])
        ok = abs(np.linalg.det(B)) / np.prod(np.linalg.norm(B, axis=1)) > adn.COERCIVE_TOL
        assert adn.complementing_check(sysw).ok == ok
        agree += 1
    assert agree == 1000


def test_verdict_invariances(rng):
    n = 3
    for _ in range(20):
        q = 2
        A_list = [random_spd(rng, n) for _ in range(q)]
        rows = [[(0, 0, None, 1.0), (1, 0, None, -1.0)],
                [(0, 1, rng.standard_normal(n), 1.0), (1, 1, rng.standard_normal(n), rng.uniform(0.5, 2))]]
        base = adn.complementing_check(general_system(A_list, rows, n))
        # scale an equation and a boundary row
        c = rng.uniform(0.3, 3)
        scaled = general_system([A_list[0] * c, A_list[1]], [rows[0], [(j, o, b, v * c) for j, o, b, v in rows[1]]], n)
        assert adn.complementing_check(scaled).ok == base.ok
        # scale unknown 1 by c: its coefficients in every row pick up 1/c
        unk = general_system([A_list[0] / c, A_list[1]],
                             [[(j, o, b, v / c if j == 0 else v) for j, o, b, v in row] for row in rows], n)
        assert adn.complementing_check(unk).ok == base.ok
        # rotate the tangential coordinates
        th = rng.uniform(0, 2 * np.pi)
        R = np.eye(n)
        R[:2, :2] = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
        rot = general_system([R.T @ A @ R for A in A_list],
                             [[(j, o, None if b is None else R.T @ b, v) for j, o, b, v in row] for row in rows], n)
        assert adn.complementing_check(rot).ok == base.ok


def test_junction_verdict_matches_determinant(rng):
    for _ in range(1000):
        d = random_junction(rng)
        D = coercivity_determinant(d.theta, d.a)
        r = adn.complementing_check(principal_linearization(d).to_weighted_system(2))
        assert r.ok == (D > 0)


def test_system_file_roundtrip(tmp_path):
    d = JunctionData(4, 2, (1.0, -1.0, 0.5, 0.2), (1, 2, 1, 1), 1.0)
    sysw = principal_linearization(d).to_weighted_system(3)
    text = adn.dumps_system(sysw, comment="junction\nsecond line")
    assert adn.loads_system(text) == sysw
    p = tmp_path / "j.sys"
    adn.write_system(p, sysw)
    assert adn.read_system(p) == sysw
    cplx = adn.dirichlet_laplace(2)
    cplx.add_boundary(0, 0, (0, 0), 0.5j)
    assert adn.loads_system(adn.dumps_system(cplx)) == cplx


@pytest.mark.parametrize("text,line", [
    ("n 2\nq 1\nm 1\nfoo 3\n", 4),
    ("n 2\nq x\n", 2),
    ("n 2\nq 1\nm 1\ns 0\nt 2\nr -2\nL 1 1 2,0,0 1\n", 7),
    ("n 2\nq 1\nm 1\ns 0\nt 2\nr -2\nL 1 1 2,0\n", 7),
    ("n 2\nq 1\nm 1\ns 0\nt 2\nr -2\nB 0 1 0,0 1\n", 7),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as exc:
        adn.loads_system(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_parse_missing_and_bad_weights():
    with pytest.raises(ParseError, match="missing"):
        adn.loads_system("n 2\nq 1\n")
    with pytest.raises(ParseError):
        adn.loads_system("n 2\nq 1\nm 1\ns 0\nt 2\nr -2\nL 1 1 1,0 1\n")


@pytest.mark.parametrize("n", [2, 3])
def test_refinement_finds_off_grid_cone(n):
    # D_11 - 2.7 D_22 vanishes at an angle that no sample hits
    sysw = adn.WeightedSystem(n, 1, 0, 0, [0], [2], [])
    sysw.add_interior(0, 0, (2,) + (0,) * (n - 1), 1.0)
    sysw.add_interior(0, 0, (0, 2) + (0,) * (n - 2), -2.7)
    r = adn.ellipticity_check(sysw, samples=64)
    assert not r.ok
    xi = r.witness["xi"]
    assert abs(xi[0] ** 2 - 2.7 * xi[1] ** 2) < 1e-8
