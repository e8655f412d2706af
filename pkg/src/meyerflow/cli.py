"""Command-line front end.

Subcommands: analyze, norm, heatflow, solve, verify, kernel-probe.
Exit codes: 0 pass, 1 computation failure, 2 usage/schema error,
3 non-contraction.  Reports are JSON (plus CSV tables per --format) and,
unless --no-plot is given, matplotlib figures rendered next to them.
"""

from __future__ import annotations

import argparse
import datetime
import math
import os
import sys
import traceback

import numpy as np

from . import io as mfio
from . import plots
from .config import RunConfig
from .errors import ConfigError, MeyerflowError, NonContractionError
from .lorentz import f_norm, besov_lorentz_norm, truncation_range, workspace_norm
from .lorentz import level_majorant
from .paraproduct import KERNEL_CSV_HEADER
from .semigroup import smoothing_trajectory
from .solver import picard_solve
from .verify import SUITES, kernel_probe_batch, run_suite, distance_sweep

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NO_CONTRACTION = 3


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _load_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.doc["seed"] = int(args.seed)
    return cfg


def _out_dir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _report(path_base, payload, args, tables=None):
    out = {}
    payload = dict(payload)
    payload["timestamp"] = _timestamp()
    json_path = path_base + ".json"
    mfio.write_json_report(json_path, payload)
    out["json"] = json_path
    if tables and args.format == "csv":
        for name, (header, rows) in tables.items():
            csv_path = f"{path_base}_{name}.csv"
            mfio.write_csv_report(csv_path, header, rows)
            out[name] = csv_path
    return out


def cmd_analyze(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    tr = cfg.transform()
    fields, _ = mfio.read_grid_dump(args.input)
    coeffs = tuple(tr.analyze(f) for f in fields)
    coeff_path = os.path.join(out_dir, "coefficients.mwc")
    mfio.write_coeffs(coeff_path, coeffs)
    params = cfg.space_params()
    summary = {
        "input": args.input,
        "coefficients": coeff_path,
        "components": len(coeffs),
        "f_norm": f_norm(coeffs, params),
        "besov_lorentz_norm": besov_lorentz_norm(coeffs, params),
        "params": params.as_dict(),
        "seed": cfg.seed,
    }
    _report(os.path.join(out_dir, "analyze_report"), summary, args)
    if not args.no_plot:
        plots.plot_level_energies(coeffs, out_dir)
    print(f"analyze: wrote {coeff_path} (f_norm={summary['f_norm']:.6g})")
    return EXIT_OK


def cmd_norm(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    params = cfg.space_params()
    header, _ = mfio._read_container(args.input, mfio.COEFF_MAGIC)
    if header.get("kind") == "trajectory":
        traj, _ = mfio.read_trajectory(args.input)
        ws = workspace_norm(traj, params)
        g = level_majorant(traj.states[-1], traj.grid.j_max)
        payload = ws.as_dict(params)
        payload["truncation_range"] = truncation_range(g)
        print(f"norm: workspace={ws.norm:.9g} (A_high={ws.a_high:.4g}, "
              f"A_low={ws.a_low:.4g})")
    else:
        fields, _ = mfio.read_coeffs(args.input)
        value = f_norm(fields, params)
        g = level_majorant(fields, fields[0].grid.j_max)
        payload = {
            "norm": value,
            "besov_lorentz_norm": besov_lorentz_norm(fields, params),
            "A_high": None,
            "A_low": None,
            "params": params.as_dict(),
            "truncation_range": truncation_range(g),
        }
        print(f"norm: f_norm={value:.9g}")
    _report(os.path.join(out_dir, "norm_report"), payload, args)
    return EXIT_OK


def cmd_heatflow(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    tr = cfg.transform()
    fields, _ = mfio.read_coeffs(args.input)
    gamma = cfg.space_params().gamma
    t_grid = cfg.t_grid()
    trajs = [smoothing_trajectory(f, tr, t_grid, gamma) for f in fields]
    merged_states = [
        tuple(traj.states[i][0] for traj in trajs) for i in range(len(t_grid))
    ]
    from .trajectory import Trajectory

    traj = Trajectory(t_grid, merged_states, zero_state=fields)
    traj_path = os.path.join(out_dir, "trajectory.mwc")
    mfio.write_trajectory(traj_path, traj)
    params = cfg.space_params()
    ws = workspace_norm(traj, params)
    payload = ws.as_dict(params)
    payload["trajectory"] = traj_path
    payload["gamma"] = gamma
    _report(os.path.join(out_dir, "heatflow_report"), payload, args)
    if not args.no_plot:
        plots.plot_level_energies(traj.states[-1], out_dir, name="heatflow_levels.png")
    print(f"heatflow: wrote {traj_path} (workspace norm {ws.norm:.6g})")
    return EXIT_OK


def cmd_solve(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    tr = cfg.transform()
    fields, _ = mfio.read_coeffs(args.u0)
    solve_cfg = cfg.solve_config()
    traj, report = picard_solve(tuple(fields), solve_cfg, tr)
    traj_path = os.path.join(out_dir, "solution.mwc")
    mfio.write_trajectory(traj_path, traj)
    payload = report.as_dict()
    payload["trajectory"] = traj_path
    payload["seed"] = cfg.seed
    _report(os.path.join(out_dir, "solve_report"), payload, args)
    if not args.no_plot:
        plots.plot_convergence(payload, out_dir)
    print(
        f"solve: {report.iterations} iterations, residual {report.residual:.3e}, "
        f"workspace norm {report.workspace_norm:.6g}"
    )
    return EXIT_OK


def cmd_verify(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(cfg.seed)
    result = run_suite(args.suite, cfg, rng=rng)
    tables = {}
    for name, rows in (result.get("tables") or {}).items():
        if not rows:
            continue
        if name == "probes":
            tables[name] = (KERNEL_CSV_HEADER, rows)
        else:
            header = list(rows[0].keys())
            tables[name] = (header, [[r[h] for h in header] for r in rows])
    payload = {k: v for k, v in result.items() if k != "tables"}
    payload["seed"] = cfg.seed
    _report(os.path.join(out_dir, f"verify_{args.suite}"), payload, args,
            tables=tables)
    if not args.no_plot:
        plots.plot_suite_summary(result, out_dir)
        if args.suite == "kernel" and "distance_sweep" in (result.get("tables") or {}):
            plots.plot_distance_sweep(result["tables"]["distance_sweep"],
                                      cfg.decay_n(), out_dir)
            plots.plot_probe_ratios(result["tables"].get("probes"), out_dir)
        if args.suite == "semigroup":
            plots.plot_decay_fits(result["tables"].get("decay_fits"), out_dir)
        if args.suite == "solver":
            plots.plot_convergence(result.get("report") or {}, out_dir)
    for check in result["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}: measured {check['measured']:.6g} "
              f"({check['mode']} {check['threshold']:.6g})")
    print(f"suite {args.suite}: {'PASS' if result['passed'] else 'FAIL'}")
    return EXIT_OK if result["passed"] else EXIT_FAILURE


def cmd_kernel_probe(args):
    cfg = _load_config(args)
    out_dir = _out_dir(args)
    gamma = cfg.space_params().gamma
    if gamma > 0.5:
        print("gamma must satisfy gamma <= 1/2 for kernel probes", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(cfg.seed)
    probes, c_fit = kernel_probe_batch(cfg, rng)
    rows = [p.csv_row() for p in probes]
    csv_path = os.path.join(out_dir, "kernel_probes.csv")
    mfio.write_csv_report(csv_path, KERNEL_CSV_HEADER, rows)
    payload = {
        "fitted_c": c_fit,
        "probes": len(rows),
        "max_ratio": max((p.ratio for p in probes), default=0.0),
        "csv": csv_path,
        "seed": cfg.seed,
    }
    if args.sweep:
        slope, sweep_rows = distance_sweep(cfg, rng)
        payload["distance_sweep_slope"] = slope
        if not args.no_plot:
            plots.plot_distance_sweep(sweep_rows, cfg.decay_n(), out_dir)
    _report(os.path.join(out_dir, "kernel_probe_report"), payload, args)
    if not args.no_plot:
        plots.plot_probe_ratios(rows, out_dir)
    print(f"kernel-probe: {len(rows)} probes, fitted c={c_fit:.4g}, "
          f"max ratio {payload['max_ratio']:.4g}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="meyerflow",
        description="Meyer-wavelet harmonic analysis and spectral "
                    "Navier-Stokes mild-solution toolkit",
    )
    parser.add_argument("--config", help="JSON run configuration", default=None)
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured RNG seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--format", choices=("json", "csv"), default="csv",
                        help="tabular output format (reports are always JSON)")
    parser.add_argument("--no-plot", action="store_true",
                        help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="wavelet-analyze a grid dump")
    p.add_argument("input", help="grid dump file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("norm", help="norms of a coefficient or trajectory file")
    p.add_argument("input")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("heatflow", help="smoothing flow of a coefficient file")
    p.add_argument("input")
    p.set_defaults(func=cmd_heatflow)

    p = sub.add_parser("solve", help="Picard iteration from initial data")
    p.add_argument("u0", help="coefficient container with the initial data")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run a module verification suite")
    p.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("kernel-probe", help="kernel coefficient probe batch")
    p.add_argument("--sweep", action="store_true",
                   help="include the large-lattice distance sweep")
    p.set_defaults(func=cmd_kernel_probe)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except NonContractionError as err:
        print(f"non-contraction: {err}", file=sys.stderr)
        return EXIT_NO_CONTRACTION
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as err:
        print(f"missing input: {err}", file=sys.stderr)
        return EXIT_USAGE
    except MeyerflowError as err:
        print(f"computation failed: {err}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception:
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
