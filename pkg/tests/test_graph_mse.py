import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freejunction import graph_mse as gm
from freejunction import metric as M
from freejunction.errors import SingularChi

SQ3 = np.sqrt(3.0)


def catenoid(X):
    return np.arccosh(np.sqrt(X[..., 0] ** 2 + X[..., 1] ** 2))


def catenoid_sup(h):
    N = int(round(1.0 / h)) + 1
    u = gm.GraphFunction.from_function(catenoid, [1.5, -0.5], h, (N, N))
    return np.abs(gm.mse_residual_grid(M.euclidean(2), u)).max()


def affine_sheet(slope, side, h=0.1, shape=(5, 6), tang=0.0, c=0.0):
    origin = [-0.2, 0.0]
    return gm.GraphFunction.from_function(
        lambda X: c + tang * X[..., 0] + slope * X[..., 1], origin, h, shape, side)


def family(slopes, theta=(1, 1, 1), s=2, **kw):
    sheets = [affine_sheet(a, "+" if k < s else "-", **kw) for k, a in enumerate(slopes)]
    return gm.SheetFamily(sheets, s, list(theta))


def test_affine_is_minimal():
    for g in (M.euclidean(2), M.constant([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])):
        u = gm.GraphFunction.from_function(lambda X: 0.3 * X[..., 0] - 1.2 * X[..., 1] + 0.5,
                                           [0, 0], 0.1, (9, 7))
        assert np.abs(gm.mse_residual_grid(g, u)).max() < 1e-10


def test_catenoid_second_order():
    r = [catenoid_sup(h) for h in (0.1, 0.05, 0.025)]
    for a, b in zip(r, r[1:]):
        assert 3.2 <= a / b <= 4.8


def test_single_node_matches_grid():
    u = gm.GraphFunction.from_function(catenoid, [1.5, -0.5], 0.1, (11, 11))
    grid = gm.mse_residual_grid(M.euclidean(2), u)
    assert gm.mse_residual(M.euclidean(2), u, (3, 7)) == pytest.approx(grid[2, 6], abs=1e-15)
    with pytest.raises(ValueError):
        gm.mse_residual(M.euclidean(2), u, (0, 4))


def test_conformal_plane():
    # g = exp(2 phi) I: phi = x1 leaves the plane minimal; phi = c z gives -2 c exp(2 c z0)
    u = gm.GraphFunction.from_function(lambda X: 0 * X[..., 0], [0, 0], 0.1, (7, 7))
    g1 = M.conformal(2, lambda X: X[..., 0])
    assert np.abs(gm.mse_residual_grid(g1, u)).max() < 1e-6
    c, z0 = 0.7, 0.3
    g2 = M.conformal(2, lambda X: c * X[..., 2], lambda X, a: c * (a == 2) + 0 * X[..., 0])
    u0 = gm.GraphFunction(np.full((7, 7), z0), 0.1, [0, 0])
    np.testing.assert_allclose(gm.mse_residual_grid(g2, u0), -2 * c * np.exp(2 * c * z0), rtol=1e-6)
    g3 = M.conformal(2, lambda X: c * X[..., 2])  # finite-difference metric derivative
    np.testing.assert_allclose(gm.mse_residual_grid(g3, u0), -2 * c * np.exp(2 * c * z0), rtol=1e-6)


def test_permutation_invariance():
    # swap the two chart axes together with the metric
    A = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]])
    P = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1.0]])
    f = lambda X: 0.2 * X[..., 0] ** 2 - 0.1 * X[..., 0] * X[..., 1] + 0.3 * np.sin(X[..., 1])
    u = gm.GraphFunction.from_function(f, [0, 0], 0.1, (9, 9))
    uT = gm.GraphFunction(u.values.T.copy(), 0.1, [0, 0])
    r1 = gm.mse_residual_grid(M.constant(A), u)
    r2 = gm.mse_residual_grid(M.constant(P @ A @ P), uT)
    assert np.abs(r1 - r2.T).max() < 1e-12


def test_pmc():
    R = 2.0
    cap = lambda X: R - np.sqrt(R * R - X[..., 0] ** 2 - X[..., 1] ** 2)
    for h in (0.1, 0.05):
        N = int(round(1.6 / h)) + 1
        u = gm.GraphFunction.from_function(cap, [-0.8, -0.8], h, (N, N))
        assert np.abs(gm.pmc_residual_grid(u, 2.0 / R)).max() < 5 * h * h
    plane = gm.GraphFunction.from_function(lambda X: 0.4 * X[..., 0], [0, 0], 0.1, (5, 5))
    np.testing.assert_allclose(gm.pmc_residual_grid(plane, 1.0), -1.0, atol=1e-12)
    u = gm.GraphFunction.from_function(catenoid, [1.5, -0.5], 0.1, (11, 11))
    np.testing.assert_allclose(gm.pmc_residual_grid(u, 0.0), gm.mse_residual_grid(M.euclidean(2), u),
                               atol=1e-12)
    assert gm.pmc_residual(u, (4, 4), 0.0) == pytest.approx(gm.mse_residual(M.euclidean(2), u, (4, 4)),
                                                           abs=1e-12)
    with pytest.raises(ValueError):
        gm.pmc_residual_grid(u, 0.0, M.conformal(2, lambda X: X[..., 0]))


def test_balance_120_degrees():
    r = gm.balance_residual_grid(M.euclidean(2), family([SQ3, -SQ3, 0.0]))
    assert np.abs(r).max() < 1e-12


def test_balance_nonzero_example():
    r = gm.balance_residual(M.euclidean(2), family([1.0, 0.0, -1.0]), (2,))
    np.testing.assert_allclose(r, [-np.sqrt(2.0), 1.0], atol=1e-12)


def test_balance_symmetric_pairs():
    # each '-' sheet continues a '+' sheet straight across the interface,
    # so (x_n, z) -> (-x_n, -z) maps the configuration to itself
    fam = gm.SheetFamily([affine_sheet(0.7, "+"), affine_sheet(-0.4, "+"),
                          affine_sheet(0.7, "-"), affine_sheet(-0.4, "-")], 2, [1.3, 0.6, 1.3, 0.6])
    assert np.abs(gm.balance_residual_grid(M.euclidean(2), fam)).max() < 1e-12


def test_balance_homogeneous_in_theta():
    f1 = family([1.2, -0.3, 0.5], theta=(1.0, 2.0, 0.5), tang=0.2)
    f2 = family([1.2, -0.3, 0.5], theta=(3.0, 6.0, 1.5), tang=0.2)
    g = M.constant([[1.2, 0.1, 0.2], [0.1, 0.9, 0.0], [0.2, 0.0, 1.1]])
    np.testing.assert_allclose(gm.balance_residual_grid(g, f2), 3 * gm.balance_residual_grid(g, f1),
                               rtol=1e-14, atol=1e-15)


def _conormal_oracle(a):
    # sheet directions away from the interface in the (x_n, z) plane
    v = np.zeros(2)
    for k, ak in enumerate(a):
        d = np.array([1.0, ak]) if k < 2 else np.array([-1.0, -ak])
        v += d / np.linalg.norm(d)
    return v


def test_balance_zero_iff_conormals_sum_to_zero(rng):
    g = M.euclidean(2)
    hits = 0
    for i in range(1000):
        if i % 4 == 0:
            t = rng.uniform(0.2, np.pi / 2 - 0.2)
            phi = np.array([t, t + 2 * np.pi / 3, t + 4 * np.pi / 3])
            # sheet directions at 120 degrees, sorted onto the two sides
            d = np.stack([np.cos(phi), np.sin(phi)], 1)
            plus = sorted([x for x in d if x[0] > 0], key=lambda x: -x[1] / x[0])
            minus = [x for x in d if x[0] < 0]
            if len(plus) != 2:
                continue
            a = [p[1] / p[0] for p in plus] + [m[1] / m[0] for m in minus]
            hits += 1
        else:
            a = rng.uniform(-3, 3, 3)
        fam = family(a)
        zero = np.abs(gm.balance_residual_grid(g, fam)).max() < 1e-9
        assert zero == (np.linalg.norm(_conormal_oracle(a)) < 1e-9)
    assert hits > 100


def test_family_validation():
    with pytest.raises(ValueError):
        gm.SheetFamily([affine_sheet(1, "+"), affine_sheet(1, "+")], 2, [1, 1])
    with pytest.raises(ValueError):
        family([1.0, -1.0, 0.0], theta=(1, -1, 1))
    sheets = [affine_sheet(1, "+"), affine_sheet(-1, "+"), affine_sheet(0, "-", c=1e-6)]
    with pytest.raises(ValueError):
        gm.SheetFamily(sheets, 2, [1, 1, 1])
    with pytest.raises(ValueError):
        gm.SheetFamily([affine_sheet(1, "+"), affine_sheet(-1, "-"), affine_sheet(0, "-")], 2, [1, 1, 1])
    shifted = [affine_sheet(a, sd, c=0.5) for a, sd in ((1, "+"), (-1, "+"), (0, "-"))]
    gm.SheetFamily(shifted, 2, [1, 1, 1])
    with pytest.raises(ValueError):
        gm.SheetFamily(shifted, 2, [1, 1, 1], check_origin=True)


def test_balance_singular_chi():
    # A = g_tt + p g_t,n+1 vanishes in the normal direction
    g = M.constant([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 2.0]])
    with pytest.raises(SingularChi):
        gm.balance_residual_grid(g, family([-1.0, 0.5, 0.2]))


def test_csv_roundtrip(tmp_path):
    u = gm.GraphFunction.from_function(catenoid, [1.5, -0.5], 0.1, (4, 5), None)
    v = gm.GraphFunction.from_function(lambda X: X[..., 1] ** 2, [0.0, 0.0], 0.25, (3, 4), "-")
    for w in (u, v):
        p = tmp_path / "g.csv"
        gm.write_grid_csv(p, w)
        back = gm.read_grid_csv(p)
        assert np.array_equal(back.values, w.values) and back.h == w.h and back.side == w.side
        assert np.array_equal(back.origin, w.origin)
    p.write_text("bad\n")
    with pytest.raises(ValueError):
        gm.read_grid_csv(p)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 5))
def test_gridfunction_side_anchor(a, b, c, h):
    u = gm.GraphFunction.from_function(lambda X: a + b * X[..., 0] + c * X[..., 1], [0.0, 7.0], h, (3, 4), "-")
    assert u.axis_coords(1)[-1] == 0.0
    assert np.allclose(u.gamma_values(), a + b * u.axis_coords(0))
