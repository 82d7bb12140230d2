"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names at the bottom dispatch on ``_accel.HAVE_NUMBA``. Both paths
accumulate in a fixed order, so each is deterministic on its own; the two
may differ in the last bits.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

# ---------------------------------------------------------------------------
# triangle areas and area gradients (Euclidean)


@njit(cache=True)
def _area_grad_nb(X, F, w):
    nv = X.shape[0]
    grad = np.zeros((nv, 3))
    energy = 0.0
    amin = np.inf
    for f in range(F.shape[0]):
        a = F[f, 0]
        b = F[f, 1]
        c = F[f, 2]
        e1x = X[b, 0] - X[a, 0]
        e1y = X[b, 1] - X[a, 1]
        e1z = X[b, 2] - X[a, 2]
        e2x = X[c, 0] - X[a, 0]
        e2y = X[c, 1] - X[a, 1]
        e2z = X[c, 2] - X[a, 2]
        nx = e1y * e2z - e1z * e2y
        ny = e1z * e2x - e1x * e2z
        nz = e1x * e2y - e1y * e2x
        nn = np.sqrt(nx * nx + ny * ny + nz * nz)
        area = 0.5 * nn
        if area < amin:
            amin = area
        energy += w[f] * area
        if nn == 0.0:
            continue
        s = 0.5 * w[f] / nn
        nx *= s
        ny *= s
        nz *= s
        # grad_a = n x (c - b), grad_b = n x (a - c), grad_c = n x (b - a)
        for v, p, r in ((a, c, b), (b, a, c), (c, b, a)):
            dx = X[p, 0] - X[r, 0]
            dy = X[p, 1] - X[r, 1]
            dz = X[p, 2] - X[r, 2]
            grad[v, 0] += ny * dz - nz * dy
            grad[v, 1] += nz * dx - nx * dz
            grad[v, 2] += nx * dy - ny * dx
    return energy, grad, amin


@njit(cache=True)
def _areas_nb(X, F):
    out = np.empty(F.shape[0])
    for f in range(F.shape[0]):
        a = F[f, 0]
        b = F[f, 1]
        c = F[f, 2]
        e1 = X[b] - X[a]
        e2 = X[c] - X[a]
        nx = e1[1] * e2[2] - e1[2] * e2[1]
        ny = e1[2] * e2[0] - e1[0] * e2[2]
        nz = e1[0] * e2[1] - e1[1] * e2[0]
        out[f] = 0.5 * np.sqrt(nx * nx + ny * ny + nz * nz)
    return out


def _areas_np(X, F):
    N = np.cross(X[F[:, 1]] - X[F[:, 0]], X[F[:, 2]] - X[F[:, 0]])
    return 0.5 * np.sqrt(np.einsum("ij,ij->i", N, N))


def _area_grad_np(X, F, w):
    A, B, C = X[F[:, 0]], X[F[:, 1]], X[F[:, 2]]
    N = np.cross(B - A, C - A)
    nn = np.sqrt(np.einsum("ij,ij->i", N, N))
    area = 0.5 * nn
    energy = float(np.sum(w * area))
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(nn[:, None] > 0, N * (0.5 * w / nn)[:, None], 0.0)
    grad = np.zeros_like(X)
    np.add.at(grad, F[:, 0], np.cross(n, C - B))
    np.add.at(grad, F[:, 1], np.cross(n, A - C))
    np.add.at(grad, F[:, 2], np.cross(n, B - A))
    amin = float(area.min()) if area.size else np.inf
    return energy, grad, amin


# ---------------------------------------------------------------------------
# inversion of monotone piecewise cubics, one column at a time
#
# coef: (4, P, ncol) piece coefficients in powers of (x - knots[i]), highest first
# wnod: (P + 1, ncol) nodal values, strictly increasing along axis 0
# targets: (ncol, m)


@njit(cache=True)
def _invert_columns_nb(coef, knots, wnod, targets, tol, maxit):
    ncol = targets.shape[0]
    m = targets.shape[1]
    P = knots.shape[0] - 1
    out = np.empty((ncol, m))
    status = 0
    for j in range(ncol):
        for t in range(m):
            y = targets[j, t]
            if y < wnod[0, j] - tol or y > wnod[P, j] + tol:
                status = 1
                out[j, t] = np.nan
                continue
            # bisection for the piece (nodal values are increasing)
            lo = 0
            hi = P
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if wnod[mid, j] <= y:
                    lo = mid
                else:
                    hi = mid
            i = lo
            h = knots[i + 1] - knots[i]
            c0 = coef[0, i, j]
            c1 = coef[1, i, j]
            c2 = coef[2, i, j]
            c3 = coef[3, i, j]
            a = 0.0
            b = h
            dw = wnod[i + 1, j] - wnod[i, j]
            s = (y - wnod[i, j]) / dw * h if dw > 0 else 0.0
            s = min(max(s, 0.0), h)
            for _ in range(maxit):
                f = ((c0 * s + c1) * s + c2) * s + c3 - y
                if f == 0.0:
                    break
                if f > 0:
                    b = s
                else:
                    a = s
                df = (3.0 * c0 * s + 2.0 * c1) * s + c2
                if df > 0:
                    sn = s - f / df
                    # converged Newton step: accept before the bracket safeguard
                    if abs(sn - s) <= tol * h:
                        s = min(max(sn, a), b)
                        break
                if df <= 0 or sn <= a or sn >= b:
                    sn = 0.5 * (a + b)
                if abs(sn - s) <= tol * h:
                    s = sn
                    break
                s = sn
            out[j, t] = knots[i] + s
    return out, status


def _invert_columns_np(coef, knots, wnod, targets, tol, maxit):
    ncol, m = targets.shape
    P = knots.shape[0] - 1
    out = np.empty((ncol, m))
    status = 0
    for j in range(ncol):
        y = targets[j]
        bad = (y < wnod[0, j] - tol) | (y > wnod[P, j] + tol)
        if bad.any():
            status = 1
        i = np.clip(np.searchsorted(wnod[:, j], y, side="right") - 1, 0, P - 1)
        h = knots[i + 1] - knots[i]
        c0, c1, c2, c3 = (coef[r, i, j] for r in range(4))
        dw = wnod[i + 1, j] - wnod[i, j]
        s = np.clip(np.where(dw > 0, (y - wnod[i, j]) / np.where(dw > 0, dw, 1.0) * h, 0.0), 0.0, h)
        a = np.zeros_like(s)
        b = h.copy()
        done = np.zeros(s.shape, dtype=bool)
        for _ in range(maxit):
            f = ((c0 * s + c1) * s + c2) * s + c3 - y
            done |= f == 0.0
            b = np.where(~done & (f > 0), s, b)
            a = np.where(~done & (f < 0), s, a)
            df = (3.0 * c0 * s + 2.0 * c1) * s + c2
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = np.where(df > 0, s - f / df, np.nan)
            small = (df > 0) & (np.abs(newton - s) <= tol * h)
            safe = (df <= 0) | (newton <= a) | (newton >= b)
            sn = np.where(safe, 0.5 * (a + b), newton)
            sn = np.where(small, np.clip(newton, a, b), sn)
            conv = small | (np.abs(sn - s) <= tol * h)
            s = np.where(done, s, sn)
            done |= conv
            if done.all():
                break
        out[j] = np.where(bad, np.nan, knots[i] + s)
    return out, status


if HAVE_NUMBA:
    area_and_grad = _area_grad_nb
    triangle_areas = _areas_nb
    invert_columns = _invert_columns_nb
else:
    area_and_grad = _area_grad_np
    triangle_areas = _areas_np
    invert_columns = _invert_columns_np

numpy_kernels = {
    "area_and_grad": _area_grad_np,
    "triangle_areas": _areas_np,
    "invert_columns": _invert_columns_np,
}
numba_kernels = {
    "area_and_grad": _area_grad_nb,
    "triangle_areas": _areas_nb,
    "invert_columns": _invert_columns_nb,
}
