"""Command-line entry point.

Exit codes: 0 success, 2 configuration/parse error, 3 infeasible
scenario, 4 I/O error. All inputs are read and validated before any
output file is written.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from evasion_sim import config as cfgmod
from evasion_sim.camera import size_distribution
from evasion_sim.errors import ConfigError, InfeasibleError
from evasion_sim.evaluation import SIGNIFICANCE_TESTS, ablation_matrix, compare, mph_to_mps, run_eval
from evasion_sim.planning import dump_plan, plan_for
from evasion_sim.reporting import dump_report, dump_trajectory, load_report

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("evasion_sim")


def _write_outputs(out: str | None, files: dict[str, str]) -> None:
    """Write ``{name: text}`` under ``out``, or to stdout when no directory is given."""
    if out is None:
        for name, text in files.items():
            if len(files) > 1:
                sys.stdout.write(f"## {name}\n")
            sys.stdout.write(text)
        return
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        (outdir / name).write_text(text)
        log.info("wrote %s", outdir / name)


def _speeds(args, scenario) -> list[float]:
    return [mph_to_mps(v) for v in args.speed] if args.speed else scenario.speeds_mps


def _labelled(spec: str) -> tuple[str | None, str]:
    label, sep, ref = spec.partition("=")
    return (label, ref) if sep else (None, spec)


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in text).strip("_") or "report"


def _base_config(args, scenario, profile):
    return scenario.to_config(profile, trials=args.trials, base_seed=args.seed,
                              latch_stop=True if args.latch_stop else None,
                              record_trajectory=True if getattr(args, "dump_trajectories", False) else None)


def cmd_simulate(args) -> int:
    scenario = cfgmod.load_scenario(args.scenario)
    if args.profile:
        profiles = [(label, scenario.resolve_profile(ref, Path.cwd())) for label, ref in map(_labelled, args.profile)]
    elif scenario.get("profile") is not None:
        profiles = [(None, scenario.resolve_profile(scenario.get("profile")))]
    else:
        raise ConfigError("no detection profile given (--profile or scenario key 'profile')")
    speeds = _speeds(args, scenario)
    baseline = None
    if args.baseline:
        baseline = run_eval(_base_config(args, scenario, scenario.resolve_profile(args.baseline, Path.cwd())), speeds,
                            args.workers)
    files = {}
    for label, profile in profiles:
        cfg = _base_config(args, scenario, profile)
        report = run_eval(cfg, speeds, args.workers, label)
        if baseline is not None:
            report = compare(baseline, report, args.test)
        files[f"report_{_slug(report.label)}.csv"] = dump_report(report)
        if args.dump_trajectories:
            for v in speeds:
                for i, res in enumerate(report.trials_by_speed[round(v, 9)]):
                    name = f"traj_{_slug(report.label)}_{v / 0.44704:.0f}mph_{cfg.base_seed + i}.csv"
                    files[name] = dump_trajectory(res)
    _write_outputs(args.out, files)
    return EXIT_OK


def cmd_ablate(args) -> int:
    scenario = cfgmod.load_scenario(args.scenario)
    if not args.profile:
        raise ConfigError("ablate needs --profile LABEL=PATH entries")
    profiles = {}
    for spec in args.profile:
        label, ref = _labelled(spec)
        if not label:
            raise ConfigError(f"ablate profiles need labels, got {spec!r}")
        profiles[label] = scenario.resolve_profile(ref, Path.cwd())
    base = _base_config(args, scenario, next(iter(profiles.values())))
    reports = ablation_matrix(profiles, base, _speeds(args, scenario), args.baseline_label, args.workers, args.test)
    files = {f"report_{_slug(label)}.csv": dump_report(rep) for label, rep in reports.items()}
    lines = ["label,speed_mph,violations,trials,rate,p_value"]
    for label, rep in reports.items():
        for r in rep.rows:
            p = "" if r.p_value is None else format(r.p_value, ".6g")
            lines.append(f"{label},{r.speed_mph:.6g},{r.violations},{r.trials},{r.rate:.6g},{p}")
    files["ablation_summary.csv"] = "\n".join(lines) + "\n"
    _write_outputs(args.out, files)
    return EXIT_OK


def cmd_attack_plan(args) -> int:
    scenario = cfgmod.load_scenario(args.scenario)
    ref = args.benign or scenario.get("benign_profile")
    if ref is None:
        raise ConfigError("attack-plan needs a benign profile (--benign or scenario key 'benign_profile')")
    benign = scenario.resolve_profile(ref) if args.benign is None else scenario.resolve_profile(ref, Path.cwd())
    speeds = _speeds(args, scenario)
    if len(speeds) != 1:
        raise ConfigError("attack-plan needs exactly one speed (--speed)")
    n_sizes = args.n_sizes or scenario.get("n_sizes", 8)
    plan = plan_for(scenario.plant, speeds[0], benign, scenario.object, scenario.camera, n_sizes,
                    args.threshold or scenario.d_max_threshold,
                    {"scenario": Path(args.scenario).name, "speed_mph": f"{speeds[0] / 0.44704:.6g}"})
    _write_outputs(args.out, {"plan.csv": dump_plan(plan)})
    return EXIT_OK


def cmd_size_dist(args) -> int:
    scenario = cfgmod.load_scenario(args.scenario)
    speeds = _speeds(args, scenario)
    road = args.road_length if args.road_length is not None else scenario.get("road_length_m", 45.0)
    try:
        dist = size_distribution(scenario.object, scenario.camera, road, speeds[0], args.runs, args.bins, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = ["bin_lo_px,bin_hi_px,count,empirical_fraction,analytic_fraction,analytic_pdf"]
    total, mass = dist.counts.sum(), dist.analytic_mass.sum()
    for lo, hi, c, m, pdf in zip(dist.edges[:-1], dist.edges[1:], dist.counts, dist.analytic_mass,
                                 dist.analytic_pdf):
        rows.append(f"{lo:.6g},{hi:.6g},{c},{c / total:.6g},{m / mass:.6g},{pdf:.6g}")
    summary = (f"# runs: {dist.runs}\n# frames: {dist.total_frames}\n# l1_distance: {dist.l1():.6g}\n")
    _write_outputs(args.out, {"size_distribution.csv": summary + "\n".join(rows) + "\n"})
    return EXIT_OK


def cmd_stats(args) -> int:
    reports = []
    for path in (args.baseline, args.treatment):
        with open(path) as fh:
            reports.append(load_report(fh))
    base, treat = reports
    compared = compare(base, treat, args.test)
    fn = SIGNIFICANCE_TESTS[args.test]
    lines = ["speed_mph,baseline,treatment,p_value"]
    for b, t in zip(base.rows, compared.rows):
        lines.append(f"{t.speed_mph:.6g},{b.violations}/{b.trials},{t.violations}/{t.trials},{t.p_value:.6g}")
    pooled_b = (sum(r.violations for r in base.rows), sum(r.trials for r in base.rows))
    pooled_t = (sum(r.violations for r in treat.rows), sum(r.trials for r in treat.rows))
    lines.append(f"pooled,{pooled_b[0]}/{pooled_b[1]},{pooled_t[0]}/{pooled_t[1]},{fn(pooled_b, pooled_t):.6g}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evasion-sim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, profiles=True):
        sp.add_argument("--scenario", required=True, help="scenario .cfg file")
        sp.add_argument("--speed", type=float, action="append", help="speed in mph (repeatable)")
        sp.add_argument("--out", help="output directory (default: stdout)")
        if profiles:
            sp.add_argument("--profile", action="append", help="[LABEL=]PATH or fixture name (repeatable)")
            sp.add_argument("--trials", type=int)
            sp.add_argument("--seed", type=int)
            sp.add_argument("--latch-stop", action="store_true", help="keep stopping after track deletion")
            sp.add_argument("--workers", type=int, default=1)
            sp.add_argument("--test", choices=sorted(SIGNIFICANCE_TESTS), default="z")

    sp = sub.add_parser("simulate", help="violation rate of one or more profiles")
    common(sp)
    sp.add_argument("--baseline", help="profile to compute p-values against")
    sp.add_argument("--dump-trajectories", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ablate", help="labelled profiles under common random numbers")
    common(sp)
    sp.add_argument("--baseline-label", default="original")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("attack-plan", help="size sampling plan over the critical range")
    common(sp, profiles=False)
    sp.add_argument("--benign", help="benign detection profile (path or fixture name)")
    sp.add_argument("--n-sizes", type=int)
    sp.add_argument("--threshold", type=float, help="benign detection rate defining d_max")
    sp.set_defaults(func=cmd_attack_plan)

    sp = sub.add_parser("size-dist", help="per-frame size histogram vs the analytic density")
    common(sp, profiles=False)
    sp.add_argument("--runs", type=int, default=30)
    sp.add_argument("--bins", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--road-length", type=float, help="override the scenario road length (m)")
    sp.set_defaults(func=cmd_size_dist)

    sp = sub.add_parser("stats", help="p-values between two report files")
    sp.add_argument("baseline")
    sp.add_argument("treatment")
    sp.add_argument("--test", choices=sorted(SIGNIFICANCE_TESTS), default="z")
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
