"""Triangulated sheets sharing a boundary polyline.

All sheets index into one global vertex array, so a polyline vertex is stored
once and moves for every sheet at the same time. Each vertex carries a
3-component mobility mask: pinned wire vertices are all False, vertices on a
sliding cap keep their z coordinate.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .. import kernels
from ..errors import DegenerateTriangle

AREA_MIN = 1e-14


@dataclass
class SheetMeshState:
    X: np.ndarray
    faces: List[np.ndarray]
    theta: np.ndarray
    polyline: np.ndarray
    mobile: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.faces = [np.ascontiguousarray(f, dtype=np.int64).reshape(-1, 3) for f in self.faces]
        self.theta = np.asarray(self.theta, dtype=float)
        self.polyline = np.asarray(self.polyline, dtype=np.int64)
        self.mobile = np.asarray(self.mobile, dtype=bool)

    @property
    def q(self) -> int:
        return len(self.faces)

    @property
    def nv(self) -> int:
        return self.X.shape[0]

    def copy(self) -> "SheetMeshState":
        return SheetMeshState(self.X.copy(), [f.copy() for f in self.faces], self.theta.copy(),
                              self.polyline.copy(), self.mobile.copy(), dict(self.meta))

    def all_faces(self):
        """Concatenated faces and the per-face weight."""
        F = np.concatenate(self.faces, axis=0)
        w = np.concatenate([np.full(len(f), t) for f, t in zip(self.faces, self.theta)])
        return F, w

    def sheet_vertices(self, k: int) -> np.ndarray:
        return np.unique(self.faces[k])

    def validate(self) -> None:
        if self.X.ndim != 2 or self.X.shape[1] != 3:
            raise ValueError("vertices must have shape (V, 3)")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("vertex coordinates must be finite")
        if len(self.theta) != self.q:
            raise ValueError("need one weight per sheet")
        if np.any(self.theta <= 0):
            raise ValueError("weights must be positive")
        if self.mobile.shape != self.X.shape:
            raise ValueError("mobility mask must match the vertex array")
        for k, f in enumerate(self.faces):
            if f.size and (f.min() < 0 or f.max() >= self.nv):
                raise ValueError(f"sheet {k + 1} references a missing vertex")
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise DegenerateTriangle(f"sheet {k + 1} has a face with a repeated vertex")
        for k in range(self.q):
            missing = np.setdiff1d(self.polyline, self.faces[k])
            if missing.size:
                raise ValueError(f"polyline vertex {int(missing[0])} is not on sheet {k + 1}")
        F, _ = self.all_faces()
        amin = float(kernels.triangle_areas(self.X, F).min()) if len(F) else np.inf
        if amin <= AREA_MIN:
            raise DegenerateTriangle(f"triangle area {amin:.3e} <= {AREA_MIN}")


# ---------------------------------------------------------------------------
# builders


def _grid_faces(ids: np.ndarray) -> np.ndarray:
    """Split each cell of a 2D vertex-id grid into two triangles."""
    a = ids[:-1, :-1].ravel()
    b = ids[1:, :-1].ravel()
    c = ids[1:, 1:].ravel()
    d = ids[:-1, 1:].ravel()
    return np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])


def flat_square(N: int = 8, theta: float = 1.0) -> SheetMeshState:
    """Unit square in the plane z = 0 with a pinned boundary (one sheet, no polyline)."""
    t = np.linspace(0.0, 1.0, N + 1)
    xx, yy = np.meshgrid(t, t, indexing="ij")
    X = np.stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)], 1)
    ids = np.arange(X.shape[0]).reshape(N + 1, N + 1)
    mobile = np.zeros_like(X, dtype=bool)
    mobile[ids[1:-1, 1:-1].ravel()] = True
    return SheetMeshState(X, [_grid_faces(ids)], [theta], np.array([], dtype=np.int64), mobile,
                          {"kind": "flat_square"})


def strip_junction(angles_deg: Sequence[float], theta: Sequence[float], radius: float = 1.0,
                   height: float = 1.0, n_radial: int = 32, n_vertical: int = 32,
                   sliding_caps: bool = True) -> SheetMeshState:
    """Vertical wires joined to a common straight polyline on the z-axis by ruled strips.

    Wire ``k`` is the segment ``radius (cos phi_k, sin phi_k, z)``, ``0 <= z <= height``.
    With ``sliding_caps`` the top and bottom edges of every strip slide in the
    planes ``z = 0`` and ``z = height``; the minimizer then consists of planar
    strips meeting at the weighted Fermat point of the wire feet.
    """
    phi = np.deg2rad(np.asarray(angles_deg, dtype=float))
    q = len(phi)
    if len(theta) != q:
        raise ValueError("need one weight per wire")
    z = np.linspace(0.0, height, n_vertical + 1)
    X = [np.stack([np.zeros_like(z), np.zeros_like(z), z], 1)]
    poly = np.arange(n_vertical + 1)
    nxt = n_vertical + 1
    faces = []
    s = np.linspace(0.0, 1.0, n_radial + 1)[1:]
    for k in range(q):
        d = radius * np.array([np.cos(phi[k]), np.sin(phi[k])])
        pts = np.empty((n_radial, n_vertical + 1, 3))
        pts[..., 0] = s[:, None] * d[0]
        pts[..., 1] = s[:, None] * d[1]
        pts[..., 2] = z[None, :]
        X.append(pts.reshape(-1, 3))
        ids = np.empty((n_radial + 1, n_vertical + 1), dtype=np.int64)
        ids[0] = poly
        ids[1:] = nxt + np.arange(n_radial * (n_vertical + 1)).reshape(n_radial, n_vertical + 1)
        nxt += n_radial * (n_vertical + 1)
        faces.append(_grid_faces(ids))
    X = np.concatenate(X)
    mobile = np.ones_like(X, dtype=bool)
    zc = X[:, 2]
    cap = (zc == 0.0) | (zc == height)
    if sliding_caps:
        mobile[cap, 2] = False
    else:
        mobile[cap] = False
    r = np.hypot(X[:, 0], X[:, 1])
    mobile[np.isclose(r, radius, rtol=0, atol=1e-12 * radius)] = False
    return SheetMeshState(X, faces, theta, poly, mobile,
                          {"kind": "strip_junction", "angles_deg": [float(a) for a in angles_deg],
                           "radius": radius, "height": height})


def half_disks(angles_deg: Sequence[float], theta: Sequence[float], radius: float = 1.0,
               n_angular: int = 64, n_rings: int = 8) -> SheetMeshState:
    """Half-disks in vertical half-planes sharing the diameter on the z-axis.

    Sheet ``k`` lies in the half-plane through the z-axis at azimuth
    ``phi_k``. Each half-disk uses a polar mesh with ``n_angular`` segments on
    every ring; the outer arc (with the diameter ends) is pinned.
    """
    phi = np.deg2rad(np.asarray(angles_deg, dtype=float))
    q = len(phi)
    if len(theta) != q:
        raise ValueError("need one weight per sheet")
    rad = radius * np.arange(1, n_rings + 1) / n_rings
    alpha = np.pi * np.arange(n_angular + 1) / n_angular
    # shared diameter: z from -radius to radius
    zs = np.concatenate([-rad[::-1], [0.0], rad])
    X = [np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], 1)]
    center = n_rings
    axis_id = {}
    for i in range(n_rings):
        axis_id[(i, 0)] = n_rings + 1 + i          # alpha = 0 -> z = +r
        axis_id[(i, n_angular)] = n_rings - 1 - i  # alpha = pi -> z = -r
    nxt = 2 * n_rings + 1
    faces = []
    for k in range(q):
        u = np.array([np.cos(phi[k]), np.sin(phi[k]), 0.0])
        ids = np.empty((n_rings, n_angular + 1), dtype=np.int64)
        pts = []
        for i in range(n_rings):
            for j in range(n_angular + 1):
                if (i, j) in axis_id:
                    ids[i, j] = axis_id[(i, j)]
                else:
                    ids[i, j] = nxt
                    nxt += 1
                    a = alpha[j]
                    pts.append(rad[i] * (np.sin(a) * u + np.cos(a) * np.array([0.0, 0.0, 1.0])))
        X.append(np.array(pts).reshape(-1, 3))
        fan = np.stack([np.full(n_angular, center), ids[0, :-1], ids[0, 1:]], 1)
        faces.append(np.concatenate([fan, _grid_faces(ids)]) if n_rings > 1 else fan)
    X = np.concatenate(X)
    mobile = np.ones_like(X, dtype=bool)
    r = np.linalg.norm(X, axis=1)
    mobile[np.isclose(r, radius, rtol=0, atol=1e-12 * radius)] = False
    poly = np.arange(2 * n_rings + 1)
    return SheetMeshState(X, faces, theta, poly, mobile,
                          {"kind": "half_disks", "angles_deg": [float(a) for a in angles_deg],
                           "radius": radius})


def build(spec: dict) -> SheetMeshState:
    """Build a state from a JSON-style description (``kind`` plus builder arguments)."""
    spec = dict(spec)
    kind = spec.pop("kind", "strip_junction")
    if kind in ("strip_junction", "y_junction"):
        allowed = {"angles_deg", "theta", "radius", "height", "n_radial", "n_vertical", "sliding_caps"}
        fn = strip_junction
    elif kind == "half_disks":
        allowed = {"angles_deg", "theta", "radius", "n_angular", "n_rings"}
        fn = half_disks
    else:
        raise ValueError(f"unknown mesh kind {kind!r}")
    extra = set(spec) - allowed
    if extra:
        raise ValueError(f"unknown mesh options for {kind}: {sorted(extra)}")
    return fn(**spec)


# ---------------------------------------------------------------------------
# I/O


def write_off(path, X: np.ndarray, F: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(X)} {len(F)} 0\n")
        for p in X:
            fh.write("%.17g %.17g %.17g\n" % tuple(p))
        for f in F:
            fh.write("3 %d %d %d\n" % tuple(f))


def read_off(path):
    with open(path) as fh:
        toks = [ln.split("#", 1)[0].split() for ln in fh]
    toks = [t for t in toks if t]
    if not toks or toks[0][0] != "OFF":
        raise ValueError(f"{path}: not an OFF file")
    nv, nf = int(toks[1][0]), int(toks[1][1])
    X = np.array([[float(v) for v in t[:3]] for t in toks[2:2 + nv]])
    F = []
    for t in toks[2 + nv:2 + nv + nf]:
        if int(t[0]) != 3:
            raise ValueError(f"{path}: only triangles are supported")
        F.append([int(v) for v in t[1:4]])
    return X, np.array(F, dtype=np.int64).reshape(-1, 3)


def save_state(state: SheetMeshState, out_dir) -> List[str]:
    """Write one OFF file per sheet, the polyline, mobility and weights. Returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    local_maps = []
    for k, F in enumerate(state.faces):
        glob = np.unique(F)
        local = np.searchsorted(glob, F)
        p = os.path.join(out_dir, f"sheet_{k + 1}.off")
        write_off(p, state.X[glob], local)
        paths.append(p)
        local_maps.append(glob)
    p = os.path.join(out_dir, "polyline.csv")
    with open(p, "w", newline="\n") as fh:
        fh.write("global," + ",".join(f"sheet_{k + 1}" for k in range(state.q)) + "\n")
        for v in state.polyline:
            loc = [int(np.searchsorted(g, v)) for g in local_maps]
            fh.write(",".join(str(x) for x in [int(v)] + loc) + "\n")
    paths.append(p)
    p = os.path.join(out_dir, "mobility.csv")
    with open(p, "w", newline="\n") as fh:
        fh.write("global,x,y,z\n")
        for v, m in enumerate(state.mobile):
            fh.write("%d,%d,%d,%d\n" % (v, m[0], m[1], m[2]))
    paths.append(p)
    p = os.path.join(out_dir, "sheets.json")
    with open(p, "w", newline="\n") as fh:
        json.dump({"theta": [float(t) for t in state.theta], "nv": state.nv,
                   "global_ids": [g.tolist() for g in local_maps]}, fh, sort_keys=True)
        fh.write("\n")
    paths.append(p)
    return paths


def load_state(out_dir) -> SheetMeshState:
    with open(os.path.join(out_dir, "sheets.json")) as fh:
        info = json.load(fh)
    X = np.full((info["nv"], 3), np.nan)
    faces = []
    for k, glob in enumerate(info["global_ids"]):
        Xk, Fk = read_off(os.path.join(out_dir, f"sheet_{k + 1}.off"))
        glob = np.asarray(glob, dtype=np.int64)
        X[glob] = Xk
        faces.append(glob[Fk])
    poly = np.loadtxt(os.path.join(out_dir, "polyline.csv"), delimiter=",", skiprows=1,
                      dtype=np.int64, ndmin=2)[:, 0]
    mob = np.loadtxt(os.path.join(out_dir, "mobility.csv"), delimiter=",", skiprows=1,
                     dtype=np.int64, ndmin=2)
    mobile = np.zeros((info["nv"], 3), dtype=bool)
    mobile[mob[:, 0]] = mob[:, 1:].astype(bool)
    return SheetMeshState(X, faces, info["theta"], poly, mobile)
