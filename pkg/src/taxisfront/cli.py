"""Command-line surface.

Subcommands: simulate, classify, sweep, bisect, verify.  Exit codes:
0 success, 1 failed verification checks, 2 configuration error, 3 instability
or oracle exception, 4 output directory already populated (no --force),
5 bisection bracket ends with the same verdict.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import analysis, checks, output, solver
from .analysis import VerdictKind
from .config import ConfigError, RunConfig, load_config, parse_overrides

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_EXISTS = 4
EXIT_BRACKET = 5

SWEEPABLE = ("a", "b", "c", "m", "q", "r", "d", "mu", "h0", "chi0", "u_m")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxisfront",
        description="Free-boundary predator-prey simulator with prey-taxis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="configuration file (INI sections)")
        sp.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="config override, repeatable")

    sp = sub.add_parser("simulate", help="run and write trajectory/snapshot CSVs + manifest")
    common(sp)
    sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sp = sub.add_parser("classify", help="run and print the spreading/vanishing verdict")
    common(sp)

    sp = sub.add_parser("sweep", help="classify across a parameter grid, write phase.csv")
    common(sp)
    sp.add_argument("--param", required=True, help=f"parameter name, one of {SWEEPABLE}")
    sp.add_argument("--values", required=True,
                    help="comma-separated grid, e.g. 0.2,0.4,0.8")
    sp.add_argument("--force", action="store_true")
    sp.add_argument("--jobs", type=int, default=1, help="concurrent runs")

    sp = sub.add_parser("bisect", help="bisect the front-response threshold mu*")
    common(sp)
    sp.add_argument("--bracket", default=None,
                    help="lo,hi override for the certificate bracket")
    sp.add_argument("--iters", type=int, default=8)

    sp = sub.add_parser("verify", help="run the oracle suite against the config")
    common(sp)
    sp.add_argument("--verbose", action="store_true", help="print worst margins per check")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config, parse_overrides(args.overrides))
    if args.out is not None:
        cfg = replace(cfg,
                      outdir=args.out,
                      resolved=tuple((k, args.out if k == "output.dir" else v)
                                     for k, v in cfg.resolved))
    return cfg


def _prepare_outdir(cfg: RunConfig, force: bool, markers) -> Path:
    outdir = Path(cfg.outdir)
    if not force:
        clashes = [m for m in markers if (outdir / m).exists()]
        if clashes:
            print(f"refusing to overwrite {', '.join(clashes)} in {outdir} "
                  "(use --force)", file=sys.stderr)
            raise SystemExit(EXIT_EXISTS)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def cmd_simulate(args) -> int:
    cfg = _load(args)
    outdir = _prepare_outdir(cfg, args.force, ("trajectory.csv", "manifest.txt"))
    traj = solver.run(cfg.params, cfg.initial, cfg.grid, cfg.controls)
    certs = analysis.certificates(cfg.params, cfg.initial)
    verdict = analysis.classify(traj, certs)
    output.write_trajectory_csv(traj, outdir / "trajectory.csv")
    for snap in traj.snapshots:
        output.write_snapshot_csv(snap, outdir / output.snapshot_filename(snap.t))
    output.write_manifest(outdir / "manifest.txt", cfg.resolved, certs, verdict)
    print(f"wrote {outdir}/trajectory.csv ({traj.t.size} samples, "
          f"{len(traj.snapshots)} snapshots); verdict: {verdict.kind.value}")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _load(args)
    traj = solver.run(cfg.params, cfg.initial, cfg.grid, cfg.controls)
    certs = analysis.certificates(cfg.params, cfg.initial)
    verdict = analysis.classify(traj, certs)
    print(output.format_report(output.certificate_block(certs)
                               + output.verdict_block(verdict)), end="")
    if verdict.kind is VerdictKind.UNDETERMINED:
        print("verdict.hint = raise [numerics] t_max for a definite verdict")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.param not in SWEEPABLE:
        print(f"unknown sweep parameter {args.param!r}; choose from {SWEEPABLE}",
              file=sys.stderr)
        return EXIT_CONFIG
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        print("empty sweep grid", file=sys.stderr)
        return EXIT_CONFIG
    outdir = _prepare_outdir(cfg, args.force, ("phase.csv",))

    def one(value: float):
        params = replace(cfg.params, **{args.param: value})
        traj = solver.run(params, cfg.initial, cfg.grid, cfg.controls)
        certs = analysis.certificates(params, cfg.initial)
        verdict = analysis.classify(traj, certs)
        if verdict.kind is VerdictKind.SPREADING:
            tail = verdict.speed.k if verdict.speed else float("nan")
        else:
            tail = verdict.h_end
        return value, verdict.kind.value, verdict.h_end, tail

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, values))
    else:
        rows = [one(v) for v in values]

    lines = ["param_value,verdict,h_end,k_or_hinf"]
    for value, kind, h_end, tail in rows:
        lines.append(f"{output.fmt(value)},{kind},{output.fmt(h_end)},{output.fmt(tail)}")
    (outdir / "phase.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {outdir}/phase.csv ({len(rows)} points on {args.param})")
    return EXIT_OK


def cmd_bisect(args) -> int:
    cfg = _load(args)
    certs = analysis.certificates(cfg.params, cfg.initial)
    bracket = None
    if args.bracket:
        parts = args.bracket.split(",")
        if len(parts) != 2:
            print("--bracket expects lo,hi", file=sys.stderr)
            return EXIT_CONFIG
        bracket = (float(parts[0]), float(parts[1]))
    try:
        result = analysis.bisect_mu_star(cfg.params, cfg.initial, cfg.grid, cfg.controls,
                                         bracket=bracket, iters=args.iters)
    except analysis.BisectError as exc:
        print(f"bisection failed: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    pairs = [
        ("bisect.mu_lo", result.mu_lo),
        ("bisect.mu_hi", result.mu_hi),
        ("bisect.width", result.mu_hi - result.mu_lo),
        ("bisect.iters", args.iters),
        ("bisect.certificate_mu0", "n/a" if certs.mu0 is None else certs.mu0),
        ("bisect.certificate_mu_upper",
         "n/a" if certs.mu_upper is None else certs.mu_upper),
    ]
    print(output.format_report(pairs), end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args)
    try:
        return _run_verify_suite(cfg, args)
    except Exception as exc:  # any oracle exception
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY


def _run_verify_suite(cfg: RunConfig, args) -> int:
    p, data, grid = cfg.params, cfg.initial, cfg.grid
    results = []

    def record(name, passed, detail):
        results.append((name, passed))
        status = "PASS" if passed else "FAIL"
        line = f"{status} {name}"
        if args.verbose and detail:
            line += f"  [{detail}]"
        print(line)

    rep = checks.eigenmode_decay_check(d=p.d, h0=p.h0, engine="front_fixed")
    record("eigenmode-decay/front-fixed", rep.passed, f"rel_err = {rep.rel_err:.3e}")
    rep = checks.eigenmode_decay_check(d=p.d, h0=p.h0, engine="moving_mesh")
    record("eigenmode-decay/moving-mesh", rep.passed, f"rel_err = {rep.rel_err:.3e}")

    t_cross = min(cfg.controls.t_max, 8.0)
    rep = checks.cross_solver_check(p, data, grid.n, p.h0 / 100.0, t_cross)
    record("cross-solver-agreement", rep.passed,
           f"h diff = {rep.h_rel_diff:.3e}, max_v diff = {rep.maxv_rel_diff:.3e}")

    t_cmp = min(cfg.controls.t_max, 20.0)
    cmp_controls = replace(cfg.controls, t_max=t_cmp,
                           snapshot_times=tuple(t_cmp * k / 4 for k in range(1, 5)))
    full = checks.RunSpec(params=p, data=data)
    rep = checks.comparison_test(
        checks.OrderedPair(lower=full, upper=checks.single_species_majorant(full)),
        grid, cmp_controls)
    record("comparison/single-species-majorant", rep.passed,
           f"worst h margin = {rep.worst_h_margin:.3e}, worst v margin = {rep.worst_v_margin:.3e}")

    cert = analysis.vanishing_certificate(p, data)
    if isinstance(cert, analysis.NotApplicable):
        print(f"SKIP barrier-supersolution  [{cert.reason}]")
        print("SKIP predator-decay  [needs the vanishing fixture]")
    else:
        mu_fix = min(p.mu, 0.9 * cert.mu0)
        p_fix = replace(p, mu=mu_fix)
        t_fix = min(cfg.controls.t_max, 80.0)
        fix_controls = replace(cfg.controls, t_max=t_fix,
                               snapshot_times=tuple(t_fix * k / 8 for k in range(1, 9)))
        rep = checks.barrier_supersolution_test(p_fix, data, grid, fix_controls)
        record("barrier-supersolution", rep.passed,
               f"h margin = {rep.h_margin:.3e}, envelope margin = {rep.envelope_margin:.3e}")

        traj = solver.run(p_fix, data, grid, fix_controls)
        certs_fix = analysis.certificates(p_fix, data)
        rep = checks.predator_decay_test(traj, p_fix, certs_fix)
        detail = (f"rate = {rep.fitted_rate:.3g} vs a/2 = {rep.target_rate:.3g}"
                  if rep.fitted_rate is not None else rep.note)
        record("predator-decay", rep.passed, detail)

    failed = [name for name, ok in results if not ok]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECKS_FAILED
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "classify": cmd_classify,
        "sweep": cmd_sweep,
        "bisect": cmd_bisect,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solver.InstabilityDetected as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY


if __name__ == "__main__":
    sys.exit(main())
