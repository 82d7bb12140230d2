import numpy as np
import pytest
from scipy.optimize import brentq

from freejunction import legendre as L
from freejunction.errors import DegenerateJacobian, NotMonotone, OutOfDomain
from freejunction.graph_mse import GraphFunction


def pair(w, u2=lambda X: 0 * X[..., 0], h=0.05, shape=(9, 21), x0=-0.2):
    b = GraphFunction.from_function(u2, [x0, 0.0], h, shape, "+")
    a = GraphFunction(b.values + w(b.coords()), h, b.origin, "+")
    return a, b


def minus(f, h=0.05, shape=(9, 41), x0=-0.2):
    return GraphFunction.from_function(f, [x0, 0.0], h, shape, "-")


def test_identity_transform():
    u1, u2 = pair(lambda X: X[..., 1])
    hm = L.forward_transform(u1, u2)
    np.testing.assert_allclose(hm.psi, np.broadcast_to(hm.yn, hm.psi.shape), atol=1e-15)
    np.testing.assert_allclose(hm.dpsi_dyn, 1.0, atol=1e-13)
    assert hm.C == pytest.approx(2.0)


def test_psi_matches_bisection():
    w = lambda X: 2 * X[..., 1] + X[..., 0] * X[..., 1] ** 2
    u1, u2 = pair(w)
    hm = L.forward_transform(u1, u2)
    Y = hm.y_coords()
    for idx in [(0, 5), (3, 11), (8, 20), (4, 0), (6, 17)]:
        x1, yn = Y[idx][0], Y[idx][1]
        ref = brentq(lambda t: 2 * t + x1 * t * t - yn, -1e-3, 2.0, xtol=1e-15) if yn > 0 else 0.0
        assert abs(hm.psi[idx] - ref) < 1e-10


def test_roundtrip_both_ways():
    u1, u2 = pair(lambda X: 1.2 * X[..., 1] + 0.25 * np.sin(2 * X[..., 1]) * (1 + X[..., 0]),
                  lambda X: -0.4 * X[..., 1] + 0.3 * X[..., 0] ** 2)
    hm = L.forward_transform(u1, u2)
    X = u1.coords()
    Y = hm.forward(X)
    keep = Y[..., -1] <= hm.yn[-1]
    assert np.abs(hm.to_x(Y[keep]) - X[keep]).max() < 1e-10
    Yg = hm.y_coords()
    assert np.abs(hm.forward(hm.to_x(Yg)) - Yg).max() < 1e-10


def test_psi_invariants():
    u1, u2 = pair(lambda X: X[..., 1] + 0.3 * X[..., 1] ** 2 * (1 + X[..., 0]))
    hm = L.forward_transform(u1, u2)
    assert np.all(hm.dpsi_dyn > 0) and np.all(hm.dpsi_dyn < hm.C)
    assert np.all(hm.psi[..., 0] == 0.0)
    # the minus-side map lands in x_n < 0
    xm = hm.psi - hm.C * hm.yn
    assert np.all(xm[..., 1:] < 0)


def test_slope_at_interface():
    h = 1.0 / 160
    u1, u2 = pair(lambda X: 1.2 * X[..., 1] + 0.25 * (1 + 0.2 * X[..., 0]) * np.sin(2 * X[..., 1]),
                  lambda X: -0.7 * X[..., 1], h=h, shape=(11, 161), x0=-0.5)
    hm = L.forward_transform(u1, u2)
    x1 = u1.axis_coords(0)
    a12 = 1.2 + 0.5 * (1 + 0.2 * x1)
    np.testing.assert_allclose(hm.dpsi_dyn[:, 0] * a12, 1.0, atol=1e-8)


def test_not_monotone():
    u1, u2 = pair(lambda X: X[..., 1] - 2 * X[..., 1] ** 2)
    with pytest.raises(NotMonotone):
        L.forward_transform(u1, u2)
    u1, u2 = pair(lambda X: X[..., 1] + 0.1)
    with pytest.raises(ValueError):
        L.forward_transform(u1, u2)


def test_chain_rule_trivial():
    u1, u2 = pair(lambda X: X[..., 1])
    hm = L.forward_transform(u1, u2)
    cp = L.transform_derivatives(hm, "+", (4, 7))
    cm = L.transform_derivatives(hm, "-", (4, 7))
    assert cp.normal == pytest.approx(1.0) and cm.normal == pytest.approx(-1.0)
    np.testing.assert_allclose(cp.tangential, 0.0, atol=1e-12)
    np.testing.assert_allclose(cp.apply([0.3, 0.5]), [0.3, 0.5], atol=1e-12)
    with pytest.raises(ValueError):
        L.transform_derivatives(hm, "x", (0, 0))


def test_chain_rule_recovers_derivatives():
    # phi_k(y) = u_k(y', psi(y)): the table applied to D_y phi_k gives D_x u_k
    w = lambda X: 1.5 * X[..., 1] + 0.2 * X[..., 0] * X[..., 1] + 0.3 * X[..., 1] ** 2
    u1, u2 = pair(w, lambda X: -0.5 * X[..., 1] + 0.1 * X[..., 0] ** 2)
    hm = L.forward_transform(u1, u2)
    phi1 = L.compose_phi(hm, u1, 1, 2)
    node = (4, 8)
    dy = np.array([np.gradient(phi1, u1.h, axis=0)[node], np.gradient(phi1, hm.hy, axis=1)[node]])
    cr = L.transform_derivatives(hm, "+", node)
    x = hm.to_x(hm.y_coords()[node])
    # D u_1 = D w + D u_2
    exact = np.array([0.2 * x[1] + 0.2 * x[0], 1.5 + 0.2 * x[0] + 0.6 * x[1] - 0.5])
    err = np.abs(cr.apply(dy) - exact).max()
    assert err < 5e-3
    np.testing.assert_allclose(cr.dw_dx, [0.2 * x[1], 1.5 + 0.2 * x[0] + 0.6 * x[1]], atol=1e-3)


def test_degenerate_jacobian():
    u1, u2 = pair(lambda X: X[..., 1])
    hm = L.forward_transform(u1, u2)
    bad = L.HodographMap(hm.u1, hm.u2, hm.w_spline, hm.yn, hm.psi, hm.dpsi_dyn, 1.0)
    with pytest.raises(DegenerateJacobian):
        L.transform_derivatives(bad, "-", (2, 3))


def test_compose_phi():
    a1, a2, a3 = 1.0, -1.0, 0.3
    u1, u2 = pair(lambda X: (a1 - a2) * X[..., 1], lambda X: a2 * X[..., 1] + 0.1 * X[..., 0])
    hm = L.forward_transform(u1, u2)
    u3 = minus(lambda X: a3 * X[..., 1] + 0.1 * X[..., 0], shape=(9, 61))
    zero = minus(lambda X: 0 * X[..., 0], shape=(9, 61))
    assert np.all(L.compose_phi(hm, zero, 3, 2) == 0)
    Y = hm.y_coords()
    # affine sheets: psi = y_n / 2, so phi_2 = a2 y_n / 2 + 0.1 y_1, phi_3 = a3 (1/2 - C) y_n + 0.1 y_1
    np.testing.assert_allclose(L.compose_phi(hm, u2, 2, 2), a2 * Y[..., 1] / 2 + 0.1 * Y[..., 0], atol=1e-12)
    np.testing.assert_allclose(L.compose_phi(hm, u3, 3, 2),
                               a3 * (0.5 - hm.C) * Y[..., 1] + 0.1 * Y[..., 0], atol=1e-12)
    p1 = L.compose_phi(hm, u1, 1, 2)
    p2 = L.compose_phi(hm, u2, 2, 2)
    p3 = L.compose_phi(hm, u3, 3, 2)
    np.testing.assert_allclose(p2[:, 0], p3[:, 0], atol=1e-12)
    np.testing.assert_allclose(p1, p2 + Y[..., 1], atol=1e-12)
    with pytest.raises(OutOfDomain):
        L.compose_phi(hm, minus(lambda X: 0 * X[..., 0], shape=(9, 5)), 3, 2)
    with pytest.raises(ValueError):
        L.compose_phi(hm, u2, 3, 2)


def test_one_dimensional():
    u2 = GraphFunction.from_function(lambda X: -X[..., 0], [0.0], 0.1, (11,), "+")
    u1 = GraphFunction(u2.values + 2 * u2.coords()[..., 0] + 0.1 * u2.coords()[..., 0] ** 3, 0.1, [0.0], "+")
    hm = L.forward_transform(u1, u2)
    assert hm.dpsi_dyn[0] == pytest.approx(0.5, abs=1e-12)
    assert abs(hm.forward(hm.to_x(hm.y_coords())) - hm.y_coords()).max() < 1e-12
