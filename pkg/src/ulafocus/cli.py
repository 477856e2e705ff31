"""Command-line front end: emits the data behind each beamfocusing figure as CSV/JSON.

Subcommands
  snr-map      exact SNR grid, true kappa-region, finite-M and holographic conics
  feasibility  feasible (theta, rho) intervals and boundary curves per L/lambda
  broadside    broadside feasibility curve, threshold, asymptotes, Fraunhofer trio
  highdl       exact vs large-D/L boundary and deviation stats
  validate     oracle suite; exit 1 on any failure
  replay       rerun a command from its manifest
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import holographic as holo
from .array_model import ArrayConfig, DomainError
from .focusing import PlaneSpec, check_target, focus, snr_grid
from .local_expansion import kappa_conic_yz, quadric_coefficients
from .oracle import densify, hausdorff, true_kappa_region
from .validation import MUTATIONS, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

REPEATABLE = {"target", "l_over_lambda"}


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'y,z', got {text!r}") from None
    return a, b


def _window(text: str) -> tuple[float, float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("expected 'ymin,ymax,zmin,zmax'")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("array")
    g.add_argument("--elements", type=int, default=101, help="number of elements 2M+1 (default 101)")
    sp = g.add_mutually_exclusive_group()
    sp.add_argument("--spacing-lambda", type=float, help="element spacing in wavelengths")
    sp.add_argument("--aperture-lambda", type=float, help="total aperture 2L in wavelengths (default 25)")
    g.add_argument("--wavelength", type=float, default=0.1, help="wavelength in meters")
    g.add_argument("--tpol", type=int, default=3, choices=(1, 2, 3))
    g.add_argument("--power", type=float, default=1.0, help="transmit power P_bar")
    g.add_argument("--noise", type=float, default=1.0, help="noise power sigma^2")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="flat key=value file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ulafocus", description="Beamfocusing regions of a uniform linear array.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("snr-map", help="exact SNR maps with true and approximate kappa-regions")
    _common(p)
    p.add_argument("--target", type=_pair, action="append", help="intended receiver 'y,z' in meters (repeatable)")
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--window", type=_window, help="ymin,ymax,zmin,zmax in meters (default: around each target)")
    p.add_argument("--resolution", type=int, default=200, help="grid points per axis")

    for name, text in (
        ("feasibility", "feasible (theta, rho) intervals"),
        ("highdl", "exact vs large-D/L feasibility boundary"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--l-over-lambda", type=float, action="append", help="half-aperture L/lambda (repeatable)")
        p.add_argument("--theta-points", type=int, default=721)

    p = sub.add_parser("broadside", help="broadside feasibility curve and distance limits")
    _common(p)
    p.add_argument("--l-over-lambda", type=float, action="append")
    p.add_argument("--theta-points", type=int, default=400, help="curve samples over D/L")

    p = sub.add_parser("validate", help="run the oracle suite")
    _common(p)
    p.add_argument("--mutate", choices=MUTATIONS, help="corrupt a closed form (suite must fail)")

    p = sub.add_parser("replay", help="rerun a command from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help="override the output directory")
    return parser


def _config_args(path: str, cli_dests: set[str], parser_for_cmd: argparse.ArgumentParser) -> list[str]:
    known = {a.dest: a for a in parser_for_cmd._actions if a.option_strings}
    out: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known or dest == "config":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if dest in REPEATABLE and dest in cli_dests:
            continue  # command-line list replaces the file's list
        flag = known[dest].option_strings[-1]
        values = [v.strip() for v in value.split(";")] if dest in REPEATABLE else [value]
        for v in values:
            out += [flag, v]
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]
        given = {a.dest for a in sub._actions if any(o in argv for o in a.option_strings)}
        extra = _config_args(args.config, given, sub)
        i = argv.index(args.command) + 1
        args = parser.parse_args(argv[:i] + extra + argv[i:])
    return args


# ---------------------------------------------------------------------------
# helpers


def array_config(args) -> tuple[ArrayConfig, str]:
    n = args.elements
    if n < 3 or n % 2 == 0:
        raise UsageError("--elements must be odd and >= 3")
    lam = args.wavelength
    if args.spacing_lambda is not None:
        cfg = ArrayConfig(M=(n - 1) // 2, delta_t=args.spacing_lambda * lam, wavelength=lam, t_pol=args.tpol,
                          p_bar=args.power, sigma2=args.noise)
        note = f"spacing {args.spacing_lambda} lambda given; aperture follows as 2L = (N-1) spacing"
    else:
        ap = 25.0 if args.aperture_lambda is None else args.aperture_lambda
        cfg = ArrayConfig.from_aperture(n, ap * lam, wavelength=lam, t_pol=args.tpol, p_bar=args.power,
                                        sigma2=args.noise)
        note = f"aperture 2L = {ap} lambda honoured; spacing = 2L/(N-1) = {fmt(cfg.delta_t / lam)} lambda"
    return cfg, note


def write_table(path: Path, columns: list[str], rows, fmt_kind: str, comment: str | None = None) -> Path:
    # stems may contain dots (e.g. L12.5), so append rather than replace a suffix
    path = path.with_name(f"{path.name}.{fmt_kind}")
    if fmt_kind == "csv":
        with path.open("w", newline="") as f:
            if comment:
                f.write(f"# {comment}\n")
            w = csv.writer(f, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(v) for v in r])
    else:
        doc = {"columns": columns, "rows": [[fmt(v) for v in r] for r in rows]}
        if comment:
            doc["comment"] = comment
        path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def write_manifest(out_dir: Path, command: str, args, outputs: list[Path], extra: dict) -> Path:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "manifest")}
    manifest = {
        "command": command,
        "parameters": params,
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        **extra,
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (tuple, np.ndarray)):
        return list(x)
    raise TypeError(type(x))


def _point_rows(pts, curve, layer, L, lam):
    for y, z in pts:
        yield (layer, curve, y, z, y / lam, z / lam, y / L, z / L)


POINT_COLS = ["layer", "curve", "y_m", "z_m", "y_over_lambda", "z_over_lambda", "y_over_L", "z_over_L"]


# ---------------------------------------------------------------------------
# commands


def _auto_window(cfg, r0, q, kappa):
    D = float(np.linalg.norm(r0))
    con = kappa_conic_yz(q, r0, kappa)
    if con.kind == "ellipse":
        P = con.branches[0]
        lo, hi = P.min(0), P.max(0)
        pad = 0.6 * (hi - lo)
        win = [lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1]]
    else:
        win = [r0[1] - 0.3 * D, r0[1] + 0.3 * D, 0.4 * D, 2.5 * D]
    win[2] = max(win[2], 1e-3 * D)
    return tuple(win)


def cmd_snr_map(args) -> int:
    cfg, note = array_config(args)
    if not 0 < args.kappa < 1:
        raise UsageError("--kappa must lie in (0, 1)")
    if args.resolution < 1:
        raise UsageError("--resolution must be >= 1")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    L, lam = cfg.half_aperture, cfg.wavelength
    targets = args.target or [(0.0, 1.5)]
    outputs, metrics = [], []
    for i, (y0, z0) in enumerate(targets):
        r0 = np.array([0.0, y0, z0])
        if z0 <= 0:
            raise DomainError(f"target {i}: z must be positive")
        check_target(cfg, r0)
        fa = focus(cfg, r0)
        q = quadric_coefficients(cfg, r0)
        hq = holo.holographic_coefficients(holo.HolographicConfig(L, lam, y0, z0)).as_quadric()
        win = args.window or _auto_window(cfg, r0, q, args.kappa)
        plane = PlaneSpec(win[0], win[1], win[2], win[3], args.resolution, args.resolution)
        grid = snr_grid(cfg, fa.filt, plane)
        y, z = plane.axes()
        stem = out / f"snr_map_t{i}"
        with np.errstate(divide="ignore", invalid="ignore"):
            db = 10 * np.log10(grid)
        rows = (
            ("exact_snr", y[jj], z[ii], y[jj] / lam, z[ii] / lam, y[jj] / L, z[ii] / L, grid[ii, jj], db[ii, jj])
            for ii in range(len(z)) for jj in range(len(y))
        )
        cols = ["layer", "y_m", "z_m", "y_over_lambda", "z_over_lambda", "y_over_L", "z_over_L", "snr", "snr_db"]
        outputs.append(write_table(stem.with_name(stem.name + "_snr"), cols, rows, args.format))

        rec = {"target": [y0, z0], "snr0": fa.snr0, "snr0_db": 10 * math.log10(fa.snr0), "window": list(win),
               "finite_m_kind": q.kind.value, "holographic_kind": hq.kind.value}
        layers = {}
        if args.resolution >= 2 and win[1] > win[0] and win[3] > win[2]:
            rb = true_kappa_region(cfg, fa.filt, r0, args.kappa, win, args.resolution)
            layers["true_region"] = rb.points
            rec.update(true_region_closed=rb.closed, coarse_grid=rb.coarse)
        else:
            layers["true_region"] = []
            rec["true_region_note"] = "window has a single sample; no contour"
        extent = 3 * max(win[1] - win[0], win[3] - win[2])
        for name, quad in (("finite_m_conic", q), ("holographic_conic", hq)):
            con = kappa_conic_yz(quad, r0, args.kappa, extent=extent)
            layers[name] = con.branches
            rec[name + "_type"] = con.kind
        cell = max((win[1] - win[0]), (win[3] - win[2])) / max(args.resolution - 1, 1)
        if layers["true_region"] and rec.get("true_region_closed"):
            truth = np.vstack(layers["true_region"])
            for name in ("finite_m_conic", "holographic_conic"):
                if layers[name]:
                    pts = np.vstack([densify(b, cell) for b in layers[name]])
                    # compare only inside the window
                    inside = (pts[:, 0] >= win[0]) & (pts[:, 0] <= win[1]) & (pts[:, 1] >= win[2]) & (pts[:, 1] <= win[3])
                    if inside.any():
                        rec[f"hausdorff_{name}_m"] = hausdorff(truth, pts[inside])
                        rec[f"hausdorff_{name}_lambda"] = rec[f"hausdorff_{name}_m"] / lam
        for name in ("true_region", "finite_m_conic", "holographic_conic"):
            rows = [r for c, pts in enumerate(layers[name]) for r in _point_rows(pts, c, name, L, lam)]
            outputs.append(write_table(stem.with_name(f"{stem.name}_{name}"), POINT_COLS, rows, args.format))
        metrics.append(rec)
    extra = {"configuration_note": note, "kappa_db": 10 * math.log10(args.kappa), "targets": metrics}
    outputs.append(write_manifest(out, "snr-map", args, outputs, extra))
    for rec in metrics:
        print(f"target {rec['target']}: {rec['finite_m_kind']}, SNR0 {rec['snr0_db']:.2f} dB")
    return EXIT_OK


def _l_over_lambda(args, default):
    vals = args.l_over_lambda or default
    if any(v <= 0 for v in vals):
        raise UsageError("--l-over-lambda values must be positive")
    return vals


def _theta_grid(n):
    if n < 2:
        raise UsageError("--theta-points must be >= 2")
    return holo.default_theta_grid(n)


def cmd_feasibility(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lam = args.wavelength
    outputs, summary = [], []
    for ll in _l_over_lambda(args, [5.0, 12.5, 25.0]):
        fb = holo.feasibility_boundary(ll, _theta_grid(args.theta_points))
        L = ll * lam
        tag = f"feasibility_L{fmt(ll)}"
        rows = []
        for e in fb.entries:
            for j, (lo, hi) in enumerate(e.rho_intervals):
                rows.append((e.theta, math.degrees(e.theta), j, lo, hi, 1 / hi, 1 / lo, L / hi, L / lo,
                             L / hi / lam, L / lo / lam))
        cols = ["theta_rad", "theta_deg", "interval", "rho_lo", "rho_hi", "d_over_L_min", "d_over_L_max",
                "d_min_m", "d_max_m", "d_min_over_lambda", "d_max_over_lambda"]
        status = "infeasible" if fb.empty else "feasible"
        comment = f"infeasible: no theta admits beamfocusing at L/lambda = {fmt(ll)}" if fb.empty else None
        outputs.append(write_table(out / f"{tag}_intervals", cols, rows, args.format, comment))
        brows = []
        for e in fb.entries:
            for j, (lo, hi) in enumerate(e.rho_intervals):
                for edge, rho in (("far", lo), ("near", hi)):
                    s, c = math.sin(e.theta), math.cos(e.theta)
                    brows.append((edge, j, e.theta, s / rho, c / rho, L * s / rho, L * c / rho))
        bcols = ["edge", "interval", "theta_rad", "y_over_L", "z_over_L", "y_m", "z_m"]
        outputs.append(write_table(out / f"{tag}_boundary", bcols, brows, args.format, comment))
        summary.append({"L_over_lambda": ll, "status": status, "anomalies": fb.anomalies})
        print(f"L/lambda = {fmt(ll)}: {status}" + (f", {len(fb.anomalies)} multi-interval anomalies" if fb.anomalies else ""))
    outputs.append(write_manifest(out, "feasibility", args, outputs, {"summary": summary}))
    return EXIT_OK


def cmd_broadside(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lam = args.wavelength
    rho_star, vmin = holo.broadside_threshold()
    n = max(args.theta_points, 2)
    d_over_L = np.geomspace(1e-2, 1e3, n)
    rho = 1 / d_over_L
    curve = [
        {"d_over_L": float(d), "rho": float(r), "lhs": float(v), "asymptote_far": float(a), "asymptote_near": float(b)}
        for d, r, v, a, b in zip(d_over_L, rho, holo.broadside_lhs(rho), holo.broadside_asymptote_far(rho),
                                 holo.broadside_asymptote_near(rho))
    ]
    limits = []
    for ll in _l_over_lambda(args, [12.5]):
        L = ll * lam
        fr, dmax, dmin = holo.fraunhofer_limits(L, lam)
        roots = holo.broadside_roots(ll)
        rec = {"L_over_lambda": ll, "L_m": L, "d_fraunhofer_m": fr, "d_max_approx_m": dmax, "d_min_approx_m": dmin,
               "d_fraunhofer_over_lambda": fr / lam, "d_max_approx_over_lambda": dmax / lam,
               "d_min_approx_over_lambda": dmin / lam}
        if roots is None:
            rec["status"] = "infeasible"
        else:
            rec.update(status="feasible", d_min_exact_m=L / roots[1], d_max_exact_m=L / roots[0],
                       d_min_exact_over_lambda=L / roots[1] / lam, d_max_exact_over_lambda=L / roots[0] / lam)
        limits.append(rec)
    doc = {"rho_star": rho_star, "value": vmin, "min_aperture_over_lambda": 2 * vmin, "curve": curve,
           "limits": limits}
    path = out / "broadside.json"
    path.write_text(json.dumps(doc, indent=1) + "\n")
    outputs = [path]
    if args.format == "csv":
        cols = ["d_over_L", "rho", "lhs", "asymptote_far", "asymptote_near"]
        outputs.append(write_table(out / "broadside_curve", cols, [[c[k] for k in cols] for c in curve], "csv"))
    outputs.append(write_manifest(out, "broadside", args, outputs, {}))
    print(f"rho* = {rho_star:.6f}, min = {vmin:.6f}, minimum aperture 2L = {2 * vmin:.4f} lambda")
    return EXIT_OK


def cmd_highdl(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs, stats = [], []
    for ll in _l_over_lambda(args, [3.0, 10.0, 25.0]):
        thetas = _theta_grid(args.theta_points)
        rows, devs, devs40 = [], [], []
        for th in thetas:
            e = holo.feasible_rho_intervals(float(th), ll)
            exact = 1 / e.rho_intervals[0][0] if e.rho_intervals else 0.0
            approx = holo.highdl_max_distance(float(th), ll)
            dev = (approx - exact) / exact if exact > 0 else math.nan
            rows.append((th, math.degrees(th), exact, approx, dev))
            if exact > 0:
                devs.append(abs(dev))
                if abs(th) <= math.radians(40) + 1e-12:
                    devs40.append(abs(dev))
        cols = ["theta_rad", "theta_deg", "d_over_L_exact", "d_over_L_series", "rel_deviation"]
        outputs.append(write_table(out / f"highdl_L{fmt(ll)}", cols, rows, args.format))
        rec = {"L_over_lambda": ll, "max_rel_deviation": max(devs, default=math.nan),
               "max_rel_deviation_within_40deg": max(devs40, default=math.nan)}
        stats.append(rec)
        print(f"L/lambda = {fmt(ll)}: max deviation {rec['max_rel_deviation']:.3g} "
              f"({rec['max_rel_deviation_within_40deg']:.3g} for |theta| <= 40 deg)")
    outputs.append(write_manifest(out, "highdl", args, outputs, {"stats": stats}))
    return EXIT_OK


def cmd_validate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_suite(args.seed, args.mutate)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    path = out / "validate_report.json"
    path.write_text(json.dumps({"seed": args.seed, "mutate": args.mutate, "checks": [r.to_dict() for r in results],
                                "failed": failed}, indent=2) + "\n")
    write_manifest(out, "validate", args, [path], {"failed": failed})
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {
    "snr-map": cmd_snr_map,
    "feasibility": cmd_feasibility,
    "broadside": cmd_broadside,
    "highdl": cmd_highdl,
    "validate": cmd_validate,
}


def cmd_replay(args) -> int:
    doc = json.loads(Path(args.manifest).read_text())
    command = doc["command"]
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown command {command!r}")
    params = dict(doc["parameters"])
    for key in ("target",):
        if params.get(key):
            params[key] = [tuple(t) for t in params[key]]
    if params.get("window"):
        params["window"] = tuple(params["window"])
    if args.out_dir:
        params["out_dir"] = args.out_dir
    ns = argparse.Namespace(command=command, config=None, **params)
    return COMMANDS[command](ns)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except (UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "replay":
            return cmd_replay(args)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
