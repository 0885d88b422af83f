"""Command-line front end.

Exit status: 0 on success, 1 on invalid input or a violated invariant,
2 on numerical non-convergence.
"""

import argparse
import csv
import io
import json
import os
import re
import sys

import numpy as np

from . import asymptotics, forest, green, spectral, zinv
from .elliptic import complete_integrals
from .expfun import path_data
from .isograph import PRESETS, GraphError, load_graph, preset
from .laplacian import mass

DEFAULTS = {"k": 0.5, "out": ".", "seed": 0}


class ValidationFailure(Exception):
    """An invariant checked by a subcommand does not hold."""


# ---------------------------------------------------------------- output helpers


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return json.dumps(v)
    return str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    _write(path, buf.getvalue())


def write_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"cannot serialise {type(o)}")


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def svg_document(elements, bounds, size=600):
    """SVG 1.1 document with a fixed view box mapping ``bounds = (x0, x1, y0, y1)``."""
    x0, x1, y0, y1 = bounds
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
            f'viewBox="{x0:.6g} {-y1:.6g} {x1 - x0:.6g} {y1 - y0:.6g}">\n'
            f'<g transform="scale(1,-1)">\n')
    return head + "\n".join(elements) + "\n</g>\n</svg>\n"


def svg_polyline(pts, stroke, width, closed=False):
    d = " ".join(f"{x:.6g},{y:.6g}" for x, y in pts)
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{d}" fill="none" stroke="{stroke}" stroke-width="{width:.4g}"/>'


def svg_dots(pts, fill, r):
    return "\n".join(f'<circle cx="{x:.6g}" cy="{y:.6g}" r="{r:.4g}" fill="{fill}"/>' for x, y in pts)


# ---------------------------------------------------------------- config


def _graph(args):
    if args.spec:
        with open(args.spec) as fh:
            obj = json.load(fh)
        return load_graph(obj), obj
    return preset(args.preset or "square"), {}


def _modulus(args, spec_obj):
    if args.k is not None and args.k2 is not None:
        raise ValueError("give either --k or --k2, not both")
    if args.k is not None:
        k = args.k
    elif args.k2 is not None:
        k = float(np.sqrt(args.k2))
    elif "k" in spec_obj:
        k = float(spec_obj["k"])
    else:
        k = DEFAULTS["k"]
    if not 0 < k < 1:
        raise ValueError(f"k must lie in (0, 1), got {k}")
    return complete_integrals(k)


_TUPLE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*(?:,\s*(-?\d+)\s*)?\)")


def parse_vertex(text):
    """``(m,n)`` or ``(i,m,n)`` to a vertex label ``(i, m, n)``."""
    m = _TUPLE.fullmatch(text.strip())
    if not m:
        raise ValueError(f"cannot parse vertex {text!r}")
    a, b, c = m.groups()
    return (0, int(a), int(b)) if c is None else (int(a), int(b), int(c))


def parse_pairs(text):
    """``"(0,0):(3,2);(0,0):(1,0)"`` to a list of vertex pairs."""
    out = []
    for item in text.split(";"):
        if not item.strip():
            continue
        x, y = item.split(":")
        out.append((parse_vertex(x), parse_vertex(y)))
    return out


def parse_directions(text):
    out = []
    for item in text.split(";"):
        a, b = item.split(",")
        out.append((int(a), int(b)))
    return out


def _torus_shape(text):
    a, b = text.lower().split("x")
    return int(a), int(b)


# ---------------------------------------------------------------- subcommands


def cmd_green(args, g, ctx):
    pairs = parse_pairs(args.pairs)
    methods = ["local", "truncated", "fourier", "residue"] if args.method == "all" else [args.method]
    rows = []
    truncated = None
    for x, y in pairs:
        pd = path_data(g, x, y, ctx)
        for method in methods:
            diag = {}
            if method == "local":
                val, info = green.green_local_path(pd, ctx, full_output=True)
                diag = {"nodes": info["nodes"], "imag": info["imag"]}
            elif method == "residue":
                if pd.length and np.any(pd.mult > 1):
                    continue
                val = green.green_residue(pd, ctx)
            elif method == "truncated":
                r0 = max(abs(v) for v in (x[1], x[2], y[1], y[2]))
                if truncated is None or truncated.r0 < r0:
                    r0 = max(r0, max(max(abs(p[1]), abs(p[2]), abs(q[1]), abs(q[2])) for p, q in pairs))
                    truncated = green.TruncatedGreen(g, ctx, r0=r0)
                val = truncated(x, y)
                diag = {"R": truncated.R, "patch_vertices": truncated.patch.n}
            elif method == "fourier":
                val = green.green_fourier(g, x[0], y[0], (x[1] - y[1], x[2] - y[2]), ctx)
            else:
                raise ValueError(f"unknown method {method!r}")
            rows.append({"x": list(x), "y": list(y), "distance": pd.length, "method": method,
                         "value": val, "diagnostics": json.dumps(diag, sort_keys=True)})
    out = os.path.join(args.out, "green.csv")
    write_csv(out, ["x", "y", "distance", "method", "value", "diagnostics"], rows)
    return out


def cmd_asymptotics(args, g, ctx):
    rows = []
    for d in parse_directions(args.directions):
        shift = (d[0] * args.scale, d[1] * args.scale)
        x, y = (0, shift[0], shift[1]), (0, 0, 0)
        sd = asymptotics.saddle_point(g, x, y, ctx)
        rate = sd.chi * sd.length / float(np.hypot(*shift))
        pref = ctx.kprime / (2 * np.sqrt(2 * np.pi * sd.length * sd.chi2)) if sd.chi2 > 1e-8 else float("nan")
        rows.append({"direction": list(d), "u0": sd.u0, "chi": sd.chi, "chi2": sd.chi2, "rate": rate,
                     "amoeba_rate": asymptotics.rate_from_amoeba(g, d, ctx), "prefactor": pref,
                     "steps": sd.length})
    out = os.path.join(args.out, "asymptotics.csv")
    write_csv(out, ["direction", "steps", "u0", "chi", "chi2", "rate", "amoeba_rate", "prefactor"], rows)
    return out


def cmd_sample_forest(args, g, ctx):
    n1, n2 = _torus_shape(args.torus)
    fg = g.torus(n1, n2)
    rng = np.random.Generator(np.random.Philox(args.seed))
    samples = []
    for _ in range(args.samples):
        s = forest.wilson_sample(fg, ctx, rng)
        s.validate()
        samples.append({"edges": [[int(a), int(b)] for a, b in fg.edges[s.edges]],
                        "roots": s.roots.tolist()})
    out = os.path.join(args.out, "forest.json")
    write_json(out, {"torus": [n1, n2], "k": ctx.k, "seed": args.seed, "n_vertices": fg.n,
                     "positions": [[float(p.real), float(p.imag)] for p in fg.positions],
                     "samples": samples})
    pos = np.column_stack([fg.positions.real, fg.positions.imag])
    first = samples[0]
    lines = [svg_polyline([pos[a], pos[b]], "#2a6", 0.06) for a, b in first["edges"]]
    lines.append(svg_dots(pos, "#333", 0.05))
    lines.append(svg_dots(pos[first["roots"]], "#c22", 0.12))
    pad = 0.5
    bounds = (pos[:, 0].min() - pad, pos[:, 0].max() + pad, pos[:, 1].min() - pad, pos[:, 1].max() + pad)
    _write(os.path.join(args.out, "forest.svg"), svg_document(lines, bounds))
    return out


def cmd_marginals(args, g, ctx):
    rows = []
    for j, e in enumerate(g.edges):
        item = forest.periodic_edge_item(g, j, ctx)
        p = forest.marginal([item], forest.periodic_green(g, ctx))
        rows.append({"item": f"edge {j}", "tail": list(item.tail), "head": list(item.head),
                     "probability": p, "closed_form": forest.edge_probability(e.theta_bar, ctx)})
    for i in range(g.n_vertices):
        item = forest.periodic_root_item(g, i, ctx)
        p = forest.marginal([item], forest.periodic_green(g, ctx))
        rows.append({"item": f"root {i}", "tail": list(item.x), "head": list(item.x), "probability": p,
                     "closed_form": forest.root_probability(mass(g, i, ctx), ctx)})
    total = sum(r["probability"] for r in rows)
    if abs(total - g.n_vertices) > 1e-9:
        raise ValidationFailure(f"edge/root identity: sum = {total!r}, expected {g.n_vertices}")
    out = os.path.join(args.out, "marginals.csv")
    write_csv(out, ["item", "tail", "head", "probability", "closed_form"], rows)
    return out


def cmd_amoeba(args, g, ctx):
    sample = spectral.amoeba_sample(g, ctx, grid=args.grid, n_boundary=args.boundary)
    rows = [{"curve": "hole", "log_z": p[0], "log_w": p[1]} for p in sample.hole]
    rows += [{"curve": "outer", "log_z": p[0], "log_w": p[1]} for p in sample.outer]
    out = os.path.join(args.out, "amoeba.csv")
    write_csv(out, ["curve", "log_z", "log_w"], rows)
    R = args.window
    pts = sample.points[np.all(np.abs(sample.points) < R, axis=1)]
    outer = sample.outer
    segments, cur = [], []
    for p in outer:
        if np.all(np.abs(p) < R):
            cur.append(p)
        elif cur:
            segments.append(cur)
            cur = []
    if cur:
        segments.append(cur)
    els = [svg_dots(pts, "#9bd", R / 400)]
    els += [svg_polyline(s, "#036", R / 300) for s in segments if len(s) > 1]
    els.append(svg_polyline(sample.hole, "#c30", R / 250, closed=True))
    _write(os.path.join(args.out, "amoeba.svg"), svg_document(els, (-R, R, -R, R)))
    write_json(os.path.join(args.out, "amoeba.json"), {"k": ctx.k, "hole_area": sample.area})
    return out


def cmd_spectral(args, g, ctx):
    cp = spectral.char_poly(g, ctx)
    rows = []
    for a in range(cp.coeffs.shape[0]):
        for b in range(cp.coeffs.shape[1]):
            if cp.coeffs[a, b] != 0:
                rows.append({"i": a - cp.p_y, "j": b - cp.p_x, "coefficient": cp.coeffs[a, b]})
    write_csv(os.path.join(args.out, "charpoly.csv"), ["i", "j", "coefficient"], rows)
    hull = spectral.support_hull(cp)
    tracks = spectral.newton_polygon_from_tracks(g)
    if sorted(hull) != sorted(tracks):
        raise ValidationFailure("Newton polygon from tracks differs from the support hull")
    out = os.path.join(args.out, "spectral.json")
    write_json(out, {"k": ctx.k, "p_x": g.p_x, "p_y": g.p_y, "support_hull": hull,
                     "polygon_from_tracks": tracks})
    return out


def cmd_free_energy(args, g, ctx):
    closed = forest.free_energy_closed(g, ctx)
    parts = forest.free_energy_closed(g, ctx, parts=True)
    fourier = forest.free_energy_fourier(g, ctx)
    row = {"k": ctx.k, "closed": closed, "closed_by_parts": parts, "fourier": fourier,
           "difference": abs(closed - fourier), "critical": forest.critical_free_energy(g)}
    out = os.path.join(args.out, "free_energy.csv")
    write_csv(out, list(row), [row])
    if row["difference"] > 1e-6:
        raise ValidationFailure(f"closed and Fourier free energies differ by {row['difference']:.2e}")
    return out


def cmd_phase_scan(args, g, ctx):
    grid = np.geomspace(args.kmin, args.kmax, args.points)
    fit = forest.phase_expansion_check(g, grid)
    out = os.path.join(args.out, "phase_scan.json")
    write_json(out, {"k": fit.k, "F_minus_F0": fit.dF, "coef_k2_log_inv_k": fit.c, "coef_k2": fit.b,
                     "rms_residual": fit.residual, "n_vertices": g.n_vertices})
    return out


def cmd_check_zinv(args, g, ctx):
    rng = np.random.Generator(np.random.Philox(args.seed))
    rows = []
    worst = 0.0
    for t in range(args.trials):
        case = zinv.random_case(rng)
        res = zinv.yang_baxter_residuals(case, ctx)
        r0, r1 = zinv.weight_identity_residuals(case, ctx)
        for R, (yb, tr) in res.items():
            rows.append({"trial": t, "case": "R" + (R or "0"), "yb_residual": yb, "transcription_residual": tr,
                         "m0_identity": abs(r0), "m1_identity": float(np.abs(r1).max())})
            worst = max(worst, yb, tr, abs(r0), float(np.abs(r1).max()))
    out = os.path.join(args.out, "zinv.csv")
    write_csv(out, ["trial", "case", "yb_residual", "transcription_residual", "m0_identity", "m1_identity"], rows)
    if worst > 1e-9:
        raise ValidationFailure(f"Yang-Baxter residual {worst:.2e} exceeds 1e-9")
    return out


def selftest_checks(g, ctx):
    """Fast invariant suite; yields ``(name, ok, detail)``."""
    x = (0, 0, 0)
    val = green.green_local(g, x, x, ctx)
    yield "green diagonal", abs(val - green.green_diagonal(ctx)) < 1e-10, val
    s = forest.edge_root_sum(g, ctx)
    yield "edge/root identity", abs(s - g.n_vertices) < 1e-9, s
    cp = spectral.char_poly(g, ctx)
    yield "newton polygon", sorted(spectral.support_hull(cp)) == sorted(spectral.newton_polygon_from_tracks(g)), ""
    recip = float(np.abs(cp.coeffs - cp.coeffs[::-1, ::-1]).max())
    yield "reciprocity", recip < 1e-9 * np.abs(cp.coeffs).max(), recip
    u = np.linspace(0.1, 3.7, 7) + 0.4j
    z, w = spectral.curve_param(g, ctx, u)
    res = float(np.abs(cp(z, w)).max() / np.abs(cp.coeffs).sum())
    yield "spectral curve", res < 1e-8, res
    for th in (0.4, np.pi / 4, 1.2):
        f = green.green_neighbor(th, ctx)
        yield f"neighbour forms {th:.3g}", max(f.values()) - min(f.values()) < 1e-10, f["c"]
    case = zinv.StarTriangleCase([np.pi / 3] * 3, [[np.pi / 3, np.pi / 3]] * 3)
    yb = max(v[0] for v in zinv.yang_baxter_residuals(case, ctx).values())
    yield "yang-baxter", yb < 1e-9, yb


def cmd_selftest(args, g, ctx):
    rows = []
    for name, ok, detail in selftest_checks(g, ctx):
        rows.append({"check": name, "status": "PASS" if ok else "FAIL", "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {_fmt(detail)}")
        if not ok:
            write_csv(os.path.join(args.out, "selftest.csv"), ["check", "status", "detail"], rows)
            raise ValidationFailure(f"selftest: {name}")
    out = os.path.join(args.out, "selftest.csv")
    write_csv(out, ["check", "status", "detail"], rows)
    return out


COMMANDS = {
    "green": cmd_green, "asymptotics": cmd_asymptotics, "sample-forest": cmd_sample_forest,
    "marginals": cmd_marginals, "amoeba": cmd_amoeba, "spectral": cmd_spectral,
    "free-energy": cmd_free_energy, "phase-scan": cmd_phase_scan, "check-zinv": cmd_check_zinv,
    "selftest": cmd_selftest,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESETS, help="built-in periodic graph (default: square)")
    src.add_argument("--spec", help="graph spec JSON: {'tracks': [{'h','v','alpha_bar'}...]} or {'preset'}")
    common.add_argument("--k", type=float, help=f"elliptic modulus in (0,1) (default: {DEFAULTS['k']})")
    common.add_argument("--k2", type=float, help="modulus squared, alternative to --k")
    common.add_argument("--out", default=DEFAULTS["out"], help="output directory (default: .)")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="RNG seed (default: 0)")

    p = argparse.ArgumentParser(prog="isomassive", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("green", parents=[common], help="Green function table")
    s.add_argument("--pairs", default="(0,0):(3,2)", help="pairs '(m,n):(m,n);(i,m,n):(j,m,n)'")
    s.add_argument("--method", default="local", choices=["local", "residue", "truncated", "fourier", "all"])
    s = sub.add_parser("asymptotics", parents=[common], help="saddle-point rate table")
    s.add_argument("--directions", default="1,0;1,1;2,1", help="lattice directions 'a,b;c,d'")
    s.add_argument("--scale", type=int, default=20, help="multiple of each direction used (default: 20)")
    s = sub.add_parser("sample-forest", parents=[common], help="Wilson samples on a torus (JSON + SVG)")
    s.add_argument("--torus", default="6x6", help="torus size in fundamental domains (default: 6x6)")
    s.add_argument("--samples", type=int, default=1)
    sub.add_parser("marginals", parents=[common], help="single edge and root probabilities (CSV)")
    s = sub.add_parser("amoeba", parents=[common], help="amoeba sample (CSV + SVG)")
    s.add_argument("--grid", type=int, default=200)
    s.add_argument("--boundary", type=int, default=2048)
    s.add_argument("--window", type=float, default=3.0, help="half-width of the plotted square")
    sub.add_parser("spectral", parents=[common], help="characteristic polynomial and Newton polygon")
    sub.add_parser("free-energy", parents=[common], help="closed-form and Fourier free energy")
    s = sub.add_parser("phase-scan", parents=[common], help="fit of F^k - F^0 near k = 0")
    s.add_argument("--kmin", type=float, default=0.005)
    s.add_argument("--kmax", type=float, default=0.2)
    s.add_argument("--points", type=int, default=10)
    s = sub.add_parser("check-zinv", parents=[common], help="Yang-Baxter residual table")
    s.add_argument("--trials", type=int, default=20)
    sub.add_parser("selftest", parents=[common], help="fast invariant suite")
    return p


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        g, spec_obj = _graph(args)
        ctx = _modulus(args, spec_obj)
        os.makedirs(args.out, exist_ok=True)
        out = COMMANDS[args.command](args, g, ctx)
    except (green.ConvergenceError, ArithmeticError) as err:
        print(f"error: numerical failure: {err}", file=sys.stderr)
        return 2
    except (ValidationFailure, GraphError, ValueError, KeyError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(out)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
