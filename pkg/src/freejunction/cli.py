"""Command-line entry points.

Exit codes: 0 success (or Coercive), 2 checked and failed, 1 error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import adn, graph_mse, legendre, linearize, metric
from .errors import DimensionMismatch, FreeJunctionError
from .junction import (OptimizerConfig, angle_report, balance_residuals, build, minimize,
                       save_state, stationarity)

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


def _out_dir(args):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    return args.out


def _write(out, name, text):
    if out:
        with open(os.path.join(out, name), "w", newline="\n") as fh:
            fh.write(text)


def _fmt_vec(v):
    v = np.atleast_1d(v)
    if np.iscomplexobj(v):
        return "[" + ", ".join(f"{complex(x):.10g}" for x in v) + "]"
    return "[" + ", ".join(f"{float(x):.10g}" for x in v) + "]"


# ---------------------------------------------------------------------------


def cmd_check_coercivity(args) -> int:
    sysw = adn.read_system(args.system)
    lines = []
    ell = adn.ellipticity_check(sysw, samples=args.samples)
    lines.append(f"ellipticity: {ell.label} (min ratio {ell.min_ratio:.3e})")
    code = EXIT_OK
    if not ell.ok:
        lines.append(f"  witness xi = {_fmt_vec(ell.witness['xi'])}  |det| = {abs(ell.witness['det']):.3e}")
        code = EXIT_FAILED
    elif sysw.m == 0:
        lines.append("complementing: skipped (no boundary rows)")
    else:
        try:
            res = adn.complementing_check(sysw, samples=args.samples)
            lines.append(f"complementing: {res.label} (min ratio {res.min_ratio:.3e})")
            for note in res.notes:
                lines.append(f"  note: {note}")
            if not res.ok:
                w = res.witness
                lines.append(f"  witness xi' = {_fmt_vec(w['xi_t'])}")
                lines.append(f"  lambdas = {_fmt_vec(w['lambdas'])}")
                lines.append(f"  null combination = {_fmt_vec(w['null'])}")
                lines.append(f"  coefficients c = {_fmt_vec(w['c'])}")
                code = EXIT_FAILED
        except DimensionMismatch as exc:
            lines.append(f"complementing: NotCoercive ({exc})")
            code = EXIT_FAILED
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write(_out_dir(args), "coercivity.txt", text)
    return code


def cmd_linearize(args) -> int:
    with open(args.junction) as fh:
        data = linearize.JunctionData.from_dict(json.load(fh))
    text = linearize.report(data, n=args.n)
    sysw = linearize.principal_linearization(data).to_weighted_system(args.n)
    sys.stdout.write(text)
    out = _out_dir(args)
    _write(out, "report.txt", text)
    if out:
        adn.write_system(os.path.join(out, "junction.sys"), sysw,
                         comment="linearized junction system (unknowns v_1..v_q)")
    return EXIT_OK


def cmd_solve_junction(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    extra = set(cfg) - {"mesh", "optimizer"}
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    opt = dict(cfg.get("optimizer", {}))
    if args.seed is not None:
        opt["seed"] = args.seed
    opt.setdefault("seed", 42)
    if args.tol is not None:
        opt["gtol"] = args.tol
    ocfg = OptimizerConfig.from_dict(opt)
    state = build(cfg.get("mesh", {}))
    res = minimize(state, ocfg)
    st = res.state
    bal = balance_residuals(st, interior_only=True)
    angles = angle_report(st)
    bmax, dens = stationarity(st)
    inner = angles[1:-1] if len(angles) > 2 else angles
    lines = [f"iterations: {res.iterations}",
             f"converged: {res.converged}",
             f"energy: {res.trace[-1].energy:.12g}",
             f"grad_norm: {res.trace[-1].grad_norm:.3e}",
             f"max|sum theta eta|: {bmax:.3e}",
             f"max gradient density: {dens:.3e}"]
    mid = inner[len(inner) // 2]
    for i in range(st.q):
        for j in range(i + 1, st.q):
            lo, hi = inner[:, i, j].min(), inner[:, i, j].max()
            lines.append(f"angle {i + 1}-{j + 1}: mid {mid[i, j]:.6f} deg  range [{lo:.6f}, {hi:.6f}]")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        save_state(st, out)
        with open(os.path.join(out, "trace.csv"), "w", newline="\n") as fh:
            fh.write("iteration,energy,grad_norm,step,kind\n")
            for r in res.trace:
                fh.write("%d,%.17g,%.17g,%.17g,%s\n" % (r.iteration, r.energy, r.grad_norm, r.step, r.kind))
        with open(os.path.join(out, "angles.csv"), "w", newline="\n") as fh:
            fh.write("position,vertex,sheet_i,sheet_j,angle_deg\n")
            for p, tab in enumerate(angles):
                for i in range(st.q):
                    for j in range(i + 1, st.q):
                        fh.write("%d,%d,%d,%d,%.17g\n" % (p, st.polyline[p], i + 1, j + 1, tab[i, j]))
        with open(os.path.join(out, "balance.csv"), "w", newline="\n") as fh:
            fh.write("position,vertex,residual\n")
            for p, b in enumerate(bal, start=1):
                fh.write("%d,%d,%.17g\n" % (p, st.polyline[p], b))
        _write(out, "report.txt", text)
    return EXIT_OK if res.converged else EXIT_FAILED


def _metric_from_name(name: str, n: int):
    if name == "euclidean":
        return metric.euclidean(n)
    raise ValueError(f"unknown metric {name!r} (available: euclidean)")


def cmd_mse_residual(args) -> int:
    u = graph_mse.read_grid_csv(args.grid)
    g = _metric_from_name(args.metric, u.n)
    if args.lam is None:
        r = graph_mse.mse_residual_grid(g, u)
        label = "minimal surface residual"
    else:
        r = graph_mse.pmc_residual_grid(u, args.lam, g)
        label = f"prescribed mean curvature residual (Lambda = {args.lam:g})"
    sup = float(np.abs(r).max()) if r.size else 0.0
    text = f"{label}: sup {sup:.6e} over {r.size} interior nodes\n"
    code = EXIT_OK
    if args.tol is not None:
        ok = sup <= args.tol
        text += f"tolerance {args.tol:.3e}: {'pass' if ok else 'fail'}\n"
        code = EXIT_OK if ok else EXIT_FAILED
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        res = graph_mse.GraphFunction(r, u.h, u.origin + u.h, None)
        graph_mse.write_grid_csv(os.path.join(out, "residual.csv"), res)
        _write(out, "report.txt", text)
    return code


def cmd_legendre_roundtrip(args) -> int:
    u1 = graph_mse.read_grid_csv(args.u1)
    u2 = graph_mse.read_grid_csv(args.u2)
    hm = legendre.forward_transform(u1, u2)
    X = u1.coords()
    Y = hm.forward(X)
    keep = Y[..., -1] <= hm.yn[-1]
    back = hm.to_x(Y[keep])
    err = float(np.abs(back - X[keep]).max()) if keep.any() else 0.0
    Yg = hm.y_coords()
    fwd = hm.forward(hm.to_x(Yg))
    err_y = float(np.abs(fwd - Yg).max())
    origin = tuple(np.argmin(np.abs(u1.axis_coords(d))) for d in range(u1.n - 1))
    d0 = float(hm.dpsi_dyn[origin + (0,)])
    tol = 1e-10 if args.tol is None else args.tol
    ok = max(err, err_y) <= tol
    text = (f"x -> y -> x max error: {err:.3e}\n"
            f"y -> x -> y max error: {err_y:.3e}\n"
            f"C: {hm.C:.12g}\n"
            f"D_yn psi at interface centre: {d0:.12g}  (1/(a1-a2))\n"
            f"tolerance {tol:.3e}: {'pass' if ok else 'fail'}\n")
    sys.stdout.write(text)
    out = _out_dir(args)
    if out:
        if np.isclose(hm.hy, u1.h, rtol=1e-12, atol=0):
            psi = graph_mse.GraphFunction(hm.psi, u1.h, u1.origin, None)
            graph_mse.write_grid_csv(os.path.join(out, "psi.csv"), psi)
        _write(out, "report.txt", text)
    return EXIT_OK if ok else EXIT_FAILED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freejunction",
                                description="Minimal sheets with a common free boundary: checks and solvers.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="random seed (default 42)")
        sp.add_argument("--tol", type=float, default=None, help="tolerance override")
        sp.add_argument("--samples", type=int, default=None, help="sample count override")

    sp = sub.add_parser("check-coercivity", help="ellipticity and complementing condition of a system file")
    sp.add_argument("system")
    common(sp)
    sp.set_defaults(func=cmd_check_coercivity)

    sp = sub.add_parser("linearize", help="linearized junction system from slopes and weights (JSON)")
    sp.add_argument("junction")
    sp.add_argument("--n", type=int, default=2, help="dimension of the half space (default 2)")
    common(sp)
    sp.set_defaults(func=cmd_linearize)

    sp = sub.add_parser("solve-junction", help="minimise weighted area for a junction config (JSON)")
    sp.add_argument("config")
    common(sp)
    sp.set_defaults(func=cmd_solve_junction)

    sp = sub.add_parser("mse-residual", help="minimal surface residual of a grid CSV")
    sp.add_argument("grid")
    sp.add_argument("--metric", default="euclidean")
    sp.add_argument("--lam", type=float, default=None, help="constant prescribed mean curvature")
    common(sp)
    sp.set_defaults(func=cmd_mse_residual)

    sp = sub.add_parser("legendre-roundtrip", help="hodograph transform round trip for two '+' sheets")
    sp.add_argument("u1")
    sp.add_argument("u2")
    common(sp)
    sp.set_defaults(func=cmd_legendre_roundtrip)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FreeJunctionError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
