"""End-to-end analysis: filters, partitioning, marginal selectivity, LFT,
stochastic dominance, SIC/MIC with permutation significance, and capacity.

A failed marginal-selectivity gate skips the LFT (its precondition) but the
contrast stages still run and are flagged as unsupported by selective
influence.  Every number in the report comes from a module operation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import capacity as cap
from . import contrast, curves, lft, trials

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AnalysisConfig:
    split_alpha: float = 50.0
    split_beta: float = 50.0
    a_cuts: tuple[float, ...] = (50.0,)
    b_cuts: tuple[float, ...] = (50.0,)
    level1_is_low: tuple[bool, bool] | None = (True, True)  # None: infer from data
    alpha_sig: float = 0.05
    sft_alpha: float = 0.33
    n_perm: int = 10000
    n_boot: int = 2000
    seed: int = 0
    response_outlier_k: float | None = 3.0
    rt_outlier_k: float | None = 5.0
    filter_order: tuple[str, ...] = ("response", "rt")
    capacity_rule: str = "both"  # and | or | both

    def __post_init__(self):
        for name in ("alpha_sig", "sft_alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.n_perm < 100:
            raise ValueError("n_perm must be at least 100")
        if self.n_boot < 1:
            raise ValueError("n_boot must be positive")
        if set(self.filter_order) - {"response", "rt"}:
            raise ValueError("filter_order entries must be 'response' or 'rt'")
        if self.capacity_rule not in ("and", "or", "both"):
            raise ValueError("capacity_rule must be and, or, or both")


@dataclass
class AnalysisResult:
    report: dict
    partition: dict[str, trials.TrialSet]
    rt_samples: dict[str, np.ndarray]
    sic_profile: contrast.SicProfile | None = None
    capacity_curves: dict[str, cap.CapacityCurve] = field(default_factory=dict)
    joint_tables: dict[str, lft.JointTable] | None = None
    repaired_tables: dict[str, lft.JointTable] | None = None


def _ks_to_dict(res: curves.KsResult) -> dict:
    return {"statistic": res.statistic, "p_value": res.p_value,
            "n1": res.n1, "n2": res.n2, "sided": res.sided.value}


def run_analysis(trial_set: trials.TrialSet, config: AnalysisConfig) -> AnalysisResult:
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n_trials_input": len(trial_set),
        "seed": config.seed,
    }

    filtered = trial_set
    applied = []
    for step in config.filter_order:
        if step == "response" and config.response_outlier_k is not None:
            filtered = trials.filter_response_outliers(filtered, config.response_outlier_k)
            applied.append({"filter": "response", "k": config.response_outlier_k,
                            "removed": filtered.provenance["response_outliers_removed"]})
        elif step == "rt" and config.rt_outlier_k is not None:
            filtered = trials.filter_rt_outliers(filtered, config.rt_outlier_k)
            applied.append({"filter": "rt", "k": config.rt_outlier_k,
                            "removed": filtered.provenance["rt_outliers_removed"]})
    report["filters"] = applied
    report["n_trials_retained"] = len(filtered)

    levels = config.level1_is_low
    if levels is None:
        levels = trials.suggest_level_assignment(filtered, config.split_alpha, config.split_beta)
    report["level1_is_low"] = list(levels)

    partition = trials.partition_by_condition(filtered, config.split_alpha,
                                              config.split_beta, levels)
    report["condition_counts"] = {c: len(ts) for c, ts in partition.items()}
    rt_samples = trials.condition_rt_samples(partition)

    doubles_ok = all(len(partition[c]) for c in trials.DOUBLE_CONDITIONS)
    result = AnalysisResult(report, partition, rt_samples)
    if not doubles_ok:
        report["error"] = "one or more double-channel conditions empty; contrasts skipped"
        return result

    # --- marginal selectivity on raw responses
    response_samples = trials.condition_response_samples(partition)
    ms = lft.marginal_selectivity_battery(response_samples, config.alpha_sig)
    report["marginal_selectivity"] = {
        "tests": {k: _ks_to_dict(v) for k, v in ms.tests.items()},
        "alpha": ms.alpha_sig,
        "bonferroni": ms.bonferroni,
        "pass": ms.passed,
    }

    # --- linear feasibility test (requires the marginal-selectivity gate)
    tables = lft.discretize_responses(partition, config.a_cuts, config.b_cuts)
    result.joint_tables = tables
    if not ms.passed:
        report["lft"] = {"skipped": True,
                         "reason": "marginal selectivity failed; LFT precondition unmet"}
    else:
        try:
            repaired = lft.enforce_marginal_equality(tables)
            system = lft.build_lft_system(repaired)
            verdict = lft.solve_lft(system)
            result.repaired_tables = repaired
            report["lft"] = {
                "skipped": False,
                "feasible": verdict.feasible,
                "residual": verdict.residual,
                "witness": None if verdict.solution is None else verdict.solution.tolist(),
                "method": verdict.method.value,
            }
        except ValueError as exc:
            report["lft"] = {"skipped": True, "reason": f"marginal repair failed: {exc}"}

    # --- stochastic dominance
    cond_rts = contrast.ConditionRts.from_partition(rt_samples)
    dom = contrast.dominance_battery(cond_rts, config.alpha_sig)
    report["dominance"] = {
        "tests": {k: {"forward": _ks_to_dict(v["forward"]),
                      "reverse": _ks_to_dict(v["reverse"])}
                  for k, v in dom.tests.items()},
        "alpha": dom.alpha_sig,
        "pass": dom.passed,
    }

    # --- SIC / MIC and architecture
    profile = contrast.permutation_significance(cond_rts, config.n_perm, config.seed)
    call = contrast.classify_architecture(profile, config.sft_alpha)
    lft_block = report.get("lft", {})
    si_supported = ms.passed and bool(lft_block.get("feasible", False))
    result.sic_profile = profile
    report["sic"] = {
        "d_plus": profile.d_plus, "p_d_plus": profile.p_d_plus,
        "d_minus": profile.d_minus, "p_d_minus": profile.p_d_minus,
        "mic": profile.mic, "p_mic": profile.p_mic,
        "sft_alpha": config.sft_alpha,
        "architecture": call.label.value,
        "note": call.note,
        "selective_influence_supported": si_supported,
        "dominance_held": dom.passed,
    }
    if not si_supported:
        report["sic"]["flag"] = "unsupported by selective influence"

    # --- capacity, when the workload manipulation is present
    single_a = np.concatenate([rt_samples[c] for c in trials.SINGLE_ALPHA_CONDITIONS
                               if c in rt_samples] or [np.array([])])
    single_b = np.concatenate([rt_samples[c] for c in trials.SINGLE_BETA_CONDITIONS
                               if c in rt_samples] or [np.array([])])
    if single_a.size and single_b.size:
        double_rts = np.concatenate([rt_samples[c] for c in trials.DOUBLE_CONDITIONS])
        rules = {"and": [cap.StoppingRule.AND], "or": [cap.StoppingRule.OR],
                 "both": [cap.StoppingRule.AND, cap.StoppingRule.OR]}[config.capacity_rule]
        report["capacity"] = {}
        for rule in rules:
            inp = cap.CapacityInput(double_rts, single_a, single_b, rule)
            curve = cap.capacity_verdict(inp, config.n_boot, config.seed)
            result.capacity_curves[rule.value] = curve
            report["capacity"][rule.value] = {
                "verdict": curve.verdict.value,
                "n_grid": int(curve.grid.size),
            }
    else:
        report["capacity"] = {"skipped": True, "reason": "no single-channel trials"}

    return result


def format_report(report: dict) -> str:
    """Plain-text report: one block per stage."""
    lines = [f"analysis report (schema v{report['schema_version']})",
             f"trials: {report['n_trials_input']} in, {report.get('n_trials_retained', '?')} retained"]
    for f in report.get("filters", []):
        lines.append(f"  filter {f['filter']} (k={f['k']}): removed {f['removed']}")
    counts = report.get("condition_counts", {})
    if counts:
        lines.append("conditions: " + ", ".join(f"{c}={n}" for c, n in counts.items() if n))
    if "error" in report:
        lines.append(f"ERROR: {report['error']}")
        return "\n".join(lines) + "\n"

    ms = report["marginal_selectivity"]
    lines.append(f"marginal selectivity: {'PASS' if ms['pass'] else 'FAIL'} "
                 f"(two-sided KS, alpha = {ms['alpha']}/{ms['bonferroni']})")
    for label, t in ms["tests"].items():
        lines.append(f"  {label}: D = {t['statistic']:.3f} (p = {t['p_value']:.3f})")

    l = report["lft"]
    if l.get("skipped"):
        lines.append(f"LFT: skipped - {l['reason']}")
    else:
        lines.append(f"LFT: {'feasible' if l['feasible'] else 'infeasible'} "
                     f"(residual {l['residual']:.2e})")

    dom = report["dominance"]
    lines.append(f"stochastic dominance: {'PASS' if dom['pass'] else 'FAIL'} "
                 f"(reverse one-tailed KS at alpha = {dom['alpha']}/4)")
    for label, t in dom["tests"].items():
        lines.append(f"  {label}: forward D = {t['forward']['statistic']:.3f} "
                     f"(p = {t['forward']['p_value']:.3f}), reverse D = "
                     f"{t['reverse']['statistic']:.3f} (p = {t['reverse']['p_value']:.3f})")

    s = report["sic"]
    lines.append(f"SIC/MIC (sft alpha = {s['sft_alpha']}): D+ = {s['d_plus']:.3f} "
                 f"(p = {s['p_d_plus']:.3f}), D- = {s['d_minus']:.3f} "
                 f"(p = {s['p_d_minus']:.3f}), MIC = {s['mic']:.2f} (p = {s['p_mic']:.3f})")
    lines.append(f"architecture: {s['architecture']}"
                 + (f" [{s['note']}]" if s.get("note") else ""))
    if "flag" in s:
        lines.append(f"  flag: {s['flag']}")

    capr = report.get("capacity", {})
    if capr.get("skipped"):
        lines.append(f"capacity: skipped - {capr['reason']}")
    else:
        for rule, block in capr.items():
            lines.append(f"capacity C_{rule.upper()}: {block['verdict']} "
                         f"({block['n_grid']} grid points)")
    return "\n".join(lines) + "\n"
