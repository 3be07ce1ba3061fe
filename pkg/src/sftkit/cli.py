"""Command-line interface.

Subcommands: analyze (full pipeline), simulate (generate trials), golden
(geometry cross-check vectors), and the single stages lft, dominance, sic,
capacity.  Exit codes: 0 ok, 1 usage, 2 I/O failure, 3 schema failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import contrast, curves, geometry, lft, pipeline, simulate, trials

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SCHEMA = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_input_args(p):
    p.add_argument("--config", default=None,
                   help="JSON file of flag defaults (explicit flags win)")
    p.add_argument("--input", required=True, help="trial file (JSON Lines or CSV)")
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--split-alpha", type=float, default=50.0)
    p.add_argument("--split-beta", type=float, default=50.0)
    p.add_argument("--alpha-level1", choices=["low", "high", "auto"], default="low",
                   help="which alpha interval is level 1 (the slower one)")
    p.add_argument("--beta-level1", choices=["low", "high", "auto"], default="low")
    p.add_argument("--response-outlier-k", type=float, default=3.0)
    p.add_argument("--rt-outlier-k", type=float, default=5.0)
    p.add_argument("--no-filters", action="store_true")


def _add_analysis_args(p):
    p.add_argument("--a-cuts", default="50", help="comma-separated response cuts for A")
    p.add_argument("--b-cuts", default="50")
    p.add_argument("--alpha-sig", type=float, default=0.05)
    p.add_argument("--sft-alpha", type=float, default=0.33)
    p.add_argument("--n-perm", type=int, default=10000)
    p.add_argument("--n-boot", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity-rule", choices=["and", "or", "both"], default="both")


def _cuts(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise _UsageError(f"bad cut list: {text!r}") from None


def _load(args) -> trials.TrialSet:
    fmt = None if args.format is None else trials.FileFormat(args.format)
    return trials.load_trials(args.input, fmt)


def _config_from_args(args) -> pipeline.AnalysisConfig:
    levels: tuple[bool, bool] | None
    if args.alpha_level1 == "auto" or args.beta_level1 == "auto":
        levels = None
    else:
        levels = (args.alpha_level1 == "low", args.beta_level1 == "low")
    return pipeline.AnalysisConfig(
        split_alpha=args.split_alpha,
        split_beta=args.split_beta,
        a_cuts=_cuts(args.a_cuts),
        b_cuts=_cuts(args.b_cuts),
        level1_is_low=levels,
        alpha_sig=args.alpha_sig,
        sft_alpha=args.sft_alpha,
        n_perm=args.n_perm,
        n_boot=args.n_boot,
        seed=args.seed,
        response_outlier_k=None if args.no_filters else args.response_outlier_k,
        rt_outlier_k=None if args.no_filters else args.rt_outlier_k,
        capacity_rule=args.capacity_rule,
    )


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit_json(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _prepare(args):
    """Shared front half of the stage commands: load, filter, partition."""
    ts = _load(args)
    if not args.no_filters:
        ts = trials.filter_response_outliers(ts, args.response_outlier_k)
        ts = trials.filter_rt_outliers(ts, args.rt_outlier_k)
    if args.alpha_level1 == "auto" or args.beta_level1 == "auto":
        levels = trials.suggest_level_assignment(ts, args.split_alpha, args.split_beta)
    else:
        levels = (args.alpha_level1 == "low", args.beta_level1 == "low")
    partition = trials.partition_by_condition(ts, args.split_alpha, args.split_beta, levels)
    return ts, partition


def cmd_analyze(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ts = _load(args)
    config = _config_from_args(args)
    result = pipeline.run_analysis(ts, config)

    _emit_json(result.report, out_dir / "report.json")
    (out_dir / "report.txt").write_text(pipeline.format_report(result.report),
                                        encoding="utf-8")
    for cond, rts in result.rt_samples.items():
        if rts.size:
            (out_dir / f"survival_{cond}.csv").write_text(
                curves.curve_to_csv(curves.survival(rts)), encoding="utf-8")
    if result.sic_profile is not None:
        (out_dir / "sic_curve.csv").write_text(contrast.sic_curve_csv(result.sic_profile),
                                               encoding="utf-8")
    if result.joint_tables is not None:
        (out_dir / "joint_tables.csv").write_text(lft.joint_tables_to_csv(result.joint_tables),
                                                  encoding="utf-8")
    if result.repaired_tables is not None:
        (out_dir / "joint_tables_repaired.csv").write_text(
            lft.joint_tables_to_csv(result.repaired_tables), encoding="utf-8")
    for rule, curve in result.capacity_curves.items():
        (out_dir / f"capacity_{rule}.csv").write_text(cap.capacity_curve_csv(curve),
                                                      encoding="utf-8")
    if args.emit_plots:
        from . import plots
        plots.plot_survivals(result.rt_samples, out_dir / "survival.svg")
        if result.sic_profile is not None:
            plots.plot_sic(result.sic_profile, out_dir / "sic.svg")
        for rule, curve in result.capacity_curves.items():
            plots.plot_capacity(curve, rule, out_dir / f"capacity_{rule}.svg")
    sys.stdout.write(pipeline.format_report(result.report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = simulate.ArchitectureModel(
        architecture=simulate.Architecture(args.architecture),
        channel_shape=args.k,
        rate_alpha={1: args.rate1, 2: args.rate2},
        rate_beta={1: args.rate1, 2: args.rate2},
        serial_or_p=args.serial_or_p,
        base_ms=args.base_ms,
        si_violation=args.si_violation,
        shared_sd=args.shared_sd,
    )
    response = simulate.ResponseModel(noise_sd=args.noise_sd,
                                      violation_shift=args.violation_shift)
    design = simulate.DesignSpec(
        alpha_range=(args.factor_min, args.factor_max),
        beta_range=(args.factor_min, args.factor_max),
        split_alpha=args.split, split_beta=args.split,
        n_trials=args.n,
        single_channel_fraction=args.single_fraction,
    )
    ts = simulate.simulate_dataset(model, response, design, args.seed,
                                   include_trajectories=not args.no_trajectories,
                                   experiment_id=args.experiment_id,
                                   subject_id=args.subject_id)
    trials.save_trials(ts, args.out)
    sys.stdout.write(f"wrote {len(ts)} trials to {args.out}\n")
    return EXIT_OK


def cmd_golden(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "shape_points.csv").write_text(geometry.golden_shape_csv(), encoding="utf-8")
    (out_dir / "trackball_steps.csv").write_text(geometry.golden_trackball_csv(),
                                                 encoding="utf-8")
    sys.stdout.write(f"wrote golden vectors to {out_dir}\n")
    return EXIT_OK


def cmd_lft(args) -> int:
    _, partition = _prepare(args)

    def _verdict_at(a_cuts, b_cuts):
        tables = lft.discretize_responses(partition, a_cuts, b_cuts)
        repaired = lft.enforce_marginal_equality(tables)
        return repaired, lft.solve_lft(lft.build_lft_system(repaired))

    out = Path(args.out) if args.out else None
    if args.sweep_cuts:
        # alternative single-cut discretizations; no canonical sweep exists,
        # the caller names the cut positions
        sweep = {}
        for cut in _cuts(args.sweep_cuts):
            try:
                _, verdict = _verdict_at([cut], [cut])
                sweep[repr(cut)] = verdict.feasible
            except ValueError as exc:
                sweep[repr(cut)] = f"repair failed: {exc}"
        _emit_json({"sweep": sweep}, out)
        return EXIT_OK

    repaired, verdict = _verdict_at(_cuts(args.a_cuts), _cuts(args.b_cuts))
    sys.stdout.write(lft.format_joint_tables(repaired))
    _emit_json({
        "feasible": verdict.feasible,
        "residual": verdict.residual,
        "witness": None if verdict.solution is None else verdict.solution.tolist(),
    }, out)
    return EXIT_OK


def cmd_dominance(args) -> int:
    _, partition = _prepare(args)
    rts = contrast.ConditionRts.from_partition(trials.condition_rt_samples(partition))
    report = contrast.dominance_battery(rts, args.alpha_sig)
    out = {"pass": report.passed, "alpha": report.alpha_sig,
           "tests": {k: {"forward": {"statistic": v["forward"].statistic,
                                     "p_value": v["forward"].p_value},
                         "reverse": {"statistic": v["reverse"].statistic,
                                     "p_value": v["reverse"].p_value}}
                     for k, v in report.tests.items()}}
    _emit_json(out, Path(args.out) if args.out else None)
    return EXIT_OK


def cmd_sic(args) -> int:
    _, partition = _prepare(args)
    rts = contrast.ConditionRts.from_partition(trials.condition_rt_samples(partition))
    profile = contrast.permutation_significance(rts, args.n_perm, args.seed)
    call = contrast.classify_architecture(profile, args.sft_alpha)
    out = {"d_plus": profile.d_plus, "p_d_plus": profile.p_d_plus,
           "d_minus": profile.d_minus, "p_d_minus": profile.p_d_minus,
           "mic": profile.mic, "p_mic": profile.p_mic,
           "architecture": call.label.value, "note": call.note}
    _emit_json(out, Path(args.out) if args.out else None)
    if args.curve:
        Path(args.curve).write_text(contrast.sic_curve_csv(profile), encoding="utf-8")
    return EXIT_OK


def cmd_capacity(args) -> int:
    _, partition = _prepare(args)
    rt_samples = trials.condition_rt_samples(partition)
    single_a = np.concatenate([rt_samples[c] for c in trials.SINGLE_ALPHA_CONDITIONS
                               if c in rt_samples] or [np.array([])])
    single_b = np.concatenate([rt_samples[c] for c in trials.SINGLE_BETA_CONDITIONS
                               if c in rt_samples] or [np.array([])])
    if not single_a.size or not single_b.size:
        sys.stderr.write("capacity needs single-channel trials for both factors\n")
        return EXIT_SCHEMA
    double = np.concatenate([rt_samples[c] for c in trials.DOUBLE_CONDITIONS])
    rule = cap.StoppingRule(args.rule)
    curve = cap.capacity_verdict(cap.CapacityInput(double, single_a, single_b, rule),
                                 args.n_boot, args.seed)
    _emit_json({"rule": args.rule, "verdict": curve.verdict.value,
                "n_grid": int(curve.grid.size)},
               Path(args.out) if args.out else None)
    if args.curve:
        Path(args.curve).write_text(cap.capacity_curve_csv(curve), encoding="utf-8")
    return EXIT_OK


def build_parser(config_defaults: dict | None = None) -> _Parser:
    parser = _Parser(prog="sftkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: list[argparse.ArgumentParser] = []

    p = sub.add_parser("analyze", help="full pipeline on a trial file")
    subparsers.append(p)
    _add_input_args(p)
    _add_analysis_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-plots", action="store_true")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="generate trials under a known architecture")
    subparsers.append(p)
    p.add_argument("--architecture", required=True,
                   choices=[a.value for a in simulate.Architecture])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=2, help="channel gamma shape")
    p.add_argument("--rate1", type=float, default=1 / 200.0, help="level-1 (slow) rate, 1/ms")
    p.add_argument("--rate2", type=float, default=1 / 100.0, help="level-2 (fast) rate, 1/ms")
    p.add_argument("--serial-or-p", type=float, default=0.5)
    p.add_argument("--base-ms", type=float, default=200.0)
    p.add_argument("--si-violation", type=float, default=0.0)
    p.add_argument("--shared-sd", type=float, default=0.0)
    p.add_argument("--noise-sd", type=float, default=8.0)
    p.add_argument("--violation-shift", type=float, default=0.0)
    p.add_argument("--single-fraction", type=float, default=0.0)
    p.add_argument("--factor-min", type=float, default=20.0)
    p.add_argument("--factor-max", type=float, default=80.0)
    p.add_argument("--split", type=float, default=50.0)
    p.add_argument("--no-trajectories", action="store_true")
    p.add_argument("--experiment-id", default="sim")
    p.add_argument("--subject-id", default="sim")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("golden", help="write geometry golden vectors")
    subparsers.append(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_golden)

    p = sub.add_parser("lft", help="joint tables, marginal repair, feasibility verdict")
    subparsers.append(p)
    _add_input_args(p)
    p.add_argument("--a-cuts", default="50")
    p.add_argument("--b-cuts", default="50")
    p.add_argument("--sweep-cuts", default=None,
                   help="comma list of alternative cut positions; reports the "
                        "verdict at each single-cut discretization")
    p.add_argument("--out", default=None, help="verdict JSON (stdout if omitted)")
    p.set_defaults(fn=cmd_lft)

    p = sub.add_parser("dominance", help="stochastic dominance battery")
    subparsers.append(p)
    _add_input_args(p)
    p.add_argument("--alpha-sig", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_dominance)

    p = sub.add_parser("sic", help="SIC/MIC with permutation significance")
    subparsers.append(p)
    _add_input_args(p)
    p.add_argument("--n-perm", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sft-alpha", type=float, default=0.33)
    p.add_argument("--out", default=None)
    p.add_argument("--curve", default=None, help="also write the SIC curve CSV here")
    p.set_defaults(fn=cmd_sic)

    p = sub.add_parser("capacity", help="workload capacity coefficient")
    subparsers.append(p)
    _add_input_args(p)
    p.add_argument("--rule", choices=["and", "or"], required=True)
    p.add_argument("--n-boot", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--curve", default=None)
    p.set_defaults(fn=cmd_capacity)

    if config_defaults:
        for sp in subparsers:
            known = {a.dest for a in sp._actions if not a.required}  # noqa: SLF001
            overrides = {k: v for k, v in config_defaults.items() if k in known}
            if overrides:
                sp.set_defaults(**overrides)
    return parser


def _load_config_defaults(argv) -> dict:
    """Pre-scan argv for --config; its JSON object supplies parameter
    defaults (explicit flags win; required path arguments stay on the
    command line)."""
    probe = _Parser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return {}
    path = Path(known.config)
    if not path.exists():
        raise FileNotFoundError(f"no such config file: {path}")
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        raise _UsageError(f"config file is not valid JSON: {path}") from None
    if not isinstance(values, dict):
        raise _UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in values.items()}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser = build_parser(_load_config_defaults(argv))
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except FileNotFoundError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"schema error: {exc}\n")
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
