"""Command-line front end.

Subcommands: simulate, estimate, variance, mc, field, replay. Every command
writes a manifest next to its outputs recording the resolved configuration,
input/output paths (with content hashes) and the tool version; `replay
--manifest FILE` re-runs the recorded command and reproduces the outputs
byte for byte.

Exit codes: 0 success, 2 invalid parameters or flags, 3 I/O failure,
4 estimation completed with an identifiability flag, 5 spectral series cap
exceeded, 6 more than half of the Monte Carlo replications failed.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, estimator, model, montecarlo, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FLAGGED = 4
EXIT_SERIES_CAP = 5
EXIT_MC_FAILURE = 6


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, command, argv, resolved, inputs, outputs, started):
    manifest = {
        "command": command,
        "argv": list(argv),
        "resolved": resolved,
        "inputs": [str(p) for p in inputs],
        "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in outputs],
        "version": __version__,
        "duration_s": time.perf_counter() - started,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _model_params(args, need_space=False):
    space = None
    if need_space:
        space = model.ParamSpace(args.a1, args.a2)
    return model.ModelParams(g=args.g, alpha=args.alpha, h=args.h,
                             gamma=args.gamma, space=None), space


def _cmd_simulate(args, argv):
    started = time.perf_counter()
    params, _ = _model_params(args)
    if args.l is not None:
        lmax = args.l
    elif args.schedule is not None:
        lmax = simulate.truncation_schedule(args.n, args.schedule)
    else:
        raise ValueError("one of --l or --schedule is required")
    config = simulate.SimConfig(n=args.n, lmax=lmax, seed=args.seed, init=args.init)
    panel = simulate.simulate_panel(params, config)
    simulate.write_panel_csv(panel, args.out)
    _write_manifest(args.out + ".manifest.json", "simulate", argv,
                    {"params": params.to_json_dict(), "n": args.n, "lmax": lmax,
                     "seed": args.seed, "init": args.init, "out": args.out},
                    [], [args.out], started)
    power = float(np.sum(panel.values**2)) / (panel.n + 1)
    print(f"simulated panel: L={lmax} N={args.n} tracks={panel.n_tracks} "
          f"rows={panel.n_tracks * (panel.n + 1)}")
    print(f"mean square per time slice: {power:.6g}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_estimate(args, argv):
    started = time.perf_counter()
    space = model.ParamSpace(args.a1, args.a2)
    panel = simulate.read_panel_csv(args.infile)
    result = estimator.estimate(panel, space, grid_points=args.grid,
                                refine_tol=args.tol, curve=args.curve is not None)
    if args.h is not None and args.gamma is not None and not result.flags:
        result.std_error_alpha = estimator.std_error_alpha(
            panel, result, h=args.h, gamma=args.gamma)
    outputs = [args.out]
    with open(args.out, "w") as fh:
        json.dump(result.to_json_dict(), fh, indent=1)
        fh.write("\n")
    if args.curve is not None:
        with open(args.curve, "w", newline="") as fh:
            fh.write("alpha,reduced_objective\n")
            for a, v in result.reduced_curve:
                fh.write(f"{a:.17g},{v:.17g}\n")
        outputs.append(args.curve)
    _write_manifest(args.out + ".manifest.json", "estimate", argv,
                    {"infile": args.infile, "a1": args.a1, "a2": args.a2,
                     "grid": args.grid, "tol": args.tol, "h": args.h,
                     "gamma": args.gamma, "curve": args.curve, "out": args.out},
                    [args.infile], outputs, started)
    print(f"alpha_hat={result.alpha_hat:.10g} g_hat={result.g_hat:.10g} "
          f"objective={result.objective_at_opt:.10g} flags={result.flags}")
    if "identifiability" in result.flags:
        print("estimation flagged: identifiability", file=sys.stderr)
        return EXIT_FLAGGED
    return EXIT_OK


def _cmd_variance(args, argv):
    params, _ = _model_params(args)
    report = model.variance_report(params, rel_tol=args.tol)
    print(f"sigma2={report.sigma2:.12g}")
    print(f"sigma={report.sigma:.12g}")
    print(f"series truncated at degree {report.ell_max}")
    return EXIT_OK


def _cmd_mc(args, argv):
    started = time.perf_counter()
    params, space = _model_params(args, need_space=True)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("SPHAR_WORKERS", "1"))
    config = montecarlo.McConfig(
        params=params, space=space,
        n_list=tuple(int(v) for v in args.n_list.split(",")),
        replications=args.r, base_seed=args.seed, schedule=args.schedule,
        grid_points=args.grid, refine_tol=args.tol, workers=workers)
    summary = montecarlo.run_mc(config)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = outdir / "records.csv"
    per_n = outdir / "summary.csv"
    blob = outdir / "summary.json"
    summary.write_records_csv(records)
    summary.write_summary_csv(per_n)
    summary.write_json(blob)
    _write_manifest(outdir / "manifest.json", "mc", argv, config.to_json_dict(),
                    [], [records, per_n, blob], started)
    for lv in summary.levels:
        print(f"N={lv.n} L={lv.lmax} bias={lv.bias_alpha:.5g} "
              f"var_scaled={lv.var_scaled:.5g} target={lv.sigma2_target:.5g} "
              f"coverage={lv.coverage:.3g} excluded={lv.n_excluded}")
    print(f"wrote {records}, {per_n}, {blob}")
    return EXIT_OK


def _cmd_field(args, argv):
    started = time.perf_counter()
    panel = simulate.read_panel_csv(args.infile)
    if not 0 <= args.t <= panel.n:
        raise ValueError(f"--t {args.t} outside the panel range 0..{panel.n}")
    thetas = (np.arange(args.nlat) + 0.5) * math.pi / args.nlat
    phis = np.arange(args.nlon) * 2.0 * math.pi / args.nlon
    from .harmonics import SpherePoint

    grid = [SpherePoint(th, ph) for th in thetas for ph in phis]
    values = simulate.synthesize_field(panel, args.t, grid)
    with open(args.out, "w", newline="") as fh:
        fh.write("theta,phi,value\n")
        for point, v in zip(grid, values):
            fh.write(f"{point.colatitude:.17g},{point.longitude:.17g},{v:.17g}\n")
    _write_manifest(args.out + ".manifest.json", "field", argv,
                    {"infile": args.infile, "t": args.t, "nlat": args.nlat,
                     "nlon": args.nlon, "out": args.out},
                    [args.infile], [args.out], started)
    print(f"wrote {args.out} ({args.nlat}x{args.nlon} grid at t={args.t})")
    return EXIT_OK


def _cmd_replay(args, argv):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    return main(manifest["argv"])


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sphar",
        description="Spherical AR(1) simulation, estimation and Monte Carlo runs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--g", type=float, required=True, help="autoregressive scale in (-1,1), nonzero")
        p.add_argument("--alpha", type=float, required=True, help="autoregressive smoothness > 1")
        p.add_argument("--h", type=float, required=True, help="noise scale > 0")
        p.add_argument("--gamma", type=float, required=True, help="noise smoothness > 2")

    p = sub.add_parser("simulate", help="simulate a coefficient panel to CSV")
    add_model_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of transitions")
    p.add_argument("--l", type=int, help="fixed truncation degree")
    p.add_argument("--schedule", help="truncation rule, e.g. power:0.2")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--init", default="stationary", help="stationary or burnin:B")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate (g, alpha) from a panel file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--h", type=float, help="noise scale for the plug-in standard error")
    p.add_argument("--gamma", type=float, help="noise smoothness for the plug-in standard error")
    p.add_argument("--curve", help="also dump the reduced-objective grid to this CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("variance", help="asymptotic variance of the smoothness estimate")
    add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_variance)

    p = sub.add_parser("mc", help="replicated simulation-estimation experiment")
    add_model_flags(p)
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--a2", type=float, required=True)
    p.add_argument("--n-list", required=True, help="comma-separated sample sizes")
    p.add_argument("--r", type=int, required=True, help="replications per sample size")
    p.add_argument("--schedule", default="power:0.2")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=129)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--workers", type=int, help="default from SPHAR_WORKERS, else 1")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("field", help="synthesize the truncated field on a grid")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--nlat", type=int, required=True)
    p.add_argument("--nlon", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_field)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return args.func(args, argv)
    except model.SeriesConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERIES_CAP
    except montecarlo.McFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MC_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError, simulate.PanelSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
