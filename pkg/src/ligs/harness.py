"""Experiment orchestration: seeded runs, run comparison, the verify suite.

Runs live in a directory tree the comparison tooling understands:

    DIR/<algorithm>/<anything>/metrics.csv     (one run per metrics file)

run_experiment writes one such run directory (metrics, heatmap, checkpoints,
config echo). compare_runs aggregates the final-window medians of a metric
across >= 3 seeds per algorithm and reports the ordering. run_theory_suite
executes every operator-level property on generated (or loaded) fixture
games and reports per-property margins.
"""

from __future__ import annotations

import glob
import os
import statistics
from dataclasses import dataclass

import numpy as np

from . import theory as th
from .config import (ALGORITHMS, EXPERIMENTS, ConfigError, RunConfig,
                     serialize_config, validate_config)
from .metrics import MetricsError, read_metrics
from .rng import Rng, rng_fork
from .trainer import Trainer

METRIC_FIELDS = ("ret_ext", "ret_int", "switches", "success")


class HarnessError(ValueError):
    """Bad comparison inputs: missing runs, unknown metric, shape clash."""


@dataclass
class ExperimentSpec:
    config: RunConfig
    out_dir: str
    trace: bool = False
    record_phases: bool = False

    def __post_init__(self):
        if self.config.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm '{self.config.algorithm}'")
        if self.config.experiment_id not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{self.config.experiment_id}'")


def run_experiment(spec: ExperimentSpec) -> dict:
    """One seeded training run; returns the trainer summary."""
    validate_config(spec.config)
    os.makedirs(spec.out_dir, exist_ok=True)
    with open(os.path.join(spec.out_dir, "config.txt"), "w") as fh:
        fh.write(serialize_config(spec.config))
    trace_path = os.path.join(spec.out_dir, "trace.jsonl") if spec.trace else None
    trainer = Trainer(spec.config, spec.out_dir, trace_path=trace_path,
                      record_phases=spec.record_phases)
    summary = trainer.run()
    summary["algorithm"] = spec.config.algorithm
    summary["experiment_id"] = spec.config.experiment_id
    summary["seed"] = spec.config.seed
    if spec.record_phases:
        summary["phases"] = trainer.phase_log
    return summary


# ---------------------------------------------------------------------------
# run comparison
# ---------------------------------------------------------------------------

def _runs_for(dir: str, alg: str) -> list[str]:
    pats = [os.path.join(dir, alg, "**", "metrics.csv"),
            os.path.join(dir, alg, "*.csv")]
    found: list[str] = []
    for pat in pats:
        found.extend(glob.glob(pat, recursive=True))
    return sorted(set(found))


def final_window_value(path: str, metric: str, window: float = 0.1) -> float:
    """Median of one metric over the trailing `window` fraction of a run,
    by step. Empty runs (header only) count as 0."""
    if metric not in METRIC_FIELDS:
        raise HarnessError(f"unknown metric '{metric}'; pick one of {METRIC_FIELDS}")
    rows = read_metrics(path)
    if not rows:
        return 0.0
    last = rows[-1].step
    cutoff = last - window * last
    tail = [getattr(r, metric) for r in rows if r.step >= cutoff]
    return float(statistics.median(tail))


def compare_runs(dir: str, baseline_alg: str, test_alg: str, metric: str,
                 window: float = 0.1, min_seeds: int = 3) -> dict:
    """Median-of-medians ordering report between two algorithms."""
    report = {"dir": dir, "metric": metric, "window": window}
    per_alg = {}
    for alg in (baseline_alg, test_alg):
        runs = _runs_for(dir, alg)
        if len(runs) < min_seeds:
            raise HarnessError(
                f"algorithm '{alg}' needs >= {min_seeds} runs under "
                f"{os.path.join(dir, alg)}; found {len(runs)}: {runs}")
        vals = [final_window_value(p, metric, window) for p in runs]
        per_alg[alg] = {"runs": runs, "values": vals,
                        "median": float(statistics.median(vals))}
    a, b = per_alg[baseline_alg]["median"], per_alg[test_alg]["median"]
    report["baseline"] = {"algorithm": baseline_alg, **per_alg[baseline_alg]}
    report["test"] = {"algorithm": test_alg, **per_alg[test_alg]}
    report["difference"] = b - a
    report["ordering"] = (f"{test_alg} > {baseline_alg}" if b > a
                          else f"{test_alg} < {baseline_alg}" if b < a
                          else "tie")
    return report


def aggregate_heatmaps(run_dir: str) -> np.ndarray:
    """Sum all heatmap.csv grids under a directory tree."""
    paths = sorted(glob.glob(os.path.join(run_dir, "**", "heatmap.csv"),
                             recursive=True))
    direct = os.path.join(run_dir, "heatmap.csv")
    if os.path.exists(direct) and direct not in paths:
        paths.insert(0, direct)
    if not paths:
        raise HarnessError(f"no heatmap.csv found under '{run_dir}'")
    total = None
    for p in paths:
        grid = np.loadtxt(p, delimiter=",", dtype=np.int64, ndmin=2)
        if total is None:
            total = grid
        elif grid.shape != total.shape:
            raise HarnessError(
                f"heatmap shape mismatch: {p} is {grid.shape}, expected {total.shape}")
        else:
            total = total + grid
    return total


# ---------------------------------------------------------------------------
# the verify suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float            # how far inside the tolerance the worst case sat
    detail: str = ""


def _check_contraction(rng: Rng, n_games: int, tol: float) -> CheckResult:
    worst = np.inf
    for k in range(n_games):
        r = rng_fork(rng, k)
        gm = th.random_game(r, n_states=int(r.integers(2, 21)),
                            n_actions=int(r.integers(2, 4)))
        v1 = r.normal(size=(gm.n_states, 2)) * 5
        v2 = r.normal(size=(gm.n_states, 2)) * 5
        lhs = float(np.max(np.abs(th.bellman_op(gm, v1) - th.bellman_op(gm, v2))))
        rhs = gm.gamma * float(np.max(np.abs(v1 - v2))) + tol
        worst = min(worst, rhs - lhs)
    return CheckResult("contraction", worst >= 0.0, worst,
                       f"{n_games} games, min slack {worst:.3e}")


def _check_fixed_point(rng: Rng, n_games: int, tol: float) -> CheckResult:
    worst = np.inf
    for k in range(n_games):
        r = rng_fork(rng, k)
        gm = th.random_game(r, n_states=int(r.integers(2, 11)))
        # step tol small enough that gamma/(1-gamma) * step < tol/2 per init
        step_tol = tol * (1.0 - gm.gamma) / (4.0 * gm.gamma)
        v_a, _ = th.value_iterate(gm, tol=step_tol)
        v_b, _ = th.value_iterate(gm, tol=step_tol,
                                  v0=r.normal(size=(gm.n_states, 2)) * 10)
        resid = float(np.max(np.abs(th.bellman_op(gm, v_a) - v_a)))
        agree = float(np.max(np.abs(v_a - v_b)))
        worst = min(worst, tol - resid, tol - agree)
    return CheckResult("fixed_point", worst >= 0.0, worst,
                       f"{n_games} games, min slack {worst:.3e}")


def _check_switch_rule(rng: Rng, n_games: int) -> CheckResult:
    """The simulated activation times are exactly the visits to rule-on
    augmented states, and the rule marks intervention-optimal states."""
    for k in range(n_games):
        r = rng_fork(rng, k)
        gm = th.random_game(r, n_states=int(r.integers(2, 8)))
        v_star, _ = th.value_iterate(gm, tol=1e-10)
        rule = th.switch_rule(gm, v_star)
        mv = th.intervention_op(gm, v_star)
        marked = (mv >= v_star - 1e-6)
        if not np.array_equal(rule.astype(bool), marked):
            return CheckResult("switch_rule", False, -1.0,
                               f"game {k}: rule/operator disagreement")
        times = th.simulate_switch_times(gm, v_star, rng_fork(r, 99), steps=30)
        if any(t < 0 or t >= 30 for t in times) or times != sorted(set(times)):
            return CheckResult("switch_rule", False, -1.0,
                               f"game {k}: malformed switch times {times}")
    return CheckResult("switch_rule", True, 0.0, f"{n_games} games consistent")


def _check_invariance(rng: Rng, n_games: int, tol: float) -> CheckResult:
    worst = 0.0
    for k in range(n_games):
        r = rng_fork(rng, k)
        gm = th.random_game(r, n_states=int(r.integers(2, 5)),
                            n_actions=int(r.integers(2, 4)))
        rep = th.invariance_audit(gm, tol=tol, rng=rng_fork(r, 1))
        worst = max(worst, rep["max_value_gap"])
    return CheckResult("invariance", True, tol - worst,
                       f"{n_games} games, max shaping gap {worst:.3e}")


def _check_theorem3(rng: Rng, n_games: int, residual_tol: float) -> CheckResult:
    worst_res = 0.0
    worst_slack = np.inf
    for k in range(n_games):
        r = rng_fork(rng, k)
        gm = th.random_game(r, n_states=5, n_actions=2, m=2, deterministic=True)
        Phi = r.normal(size=(th.n_q_rows(gm), 2))
        Phi /= np.linalg.norm(Phi, axis=1, keepdims=True)
        w = th.linear_fa_qlearn(gm, Phi, 150_000, rng_fork(r, 7), explore="sweep",
                                lr_num=0.5, lr_scale=100.0, avg_tail=0.3)
        res = th.theorem3_check(gm, Phi, w)
        worst_res = max(worst_res, res["residual"])
        worst_slack = min(worst_slack, res["bound_rhs"] + 1e-6 - res["bound_lhs"])
        if res["residual"] >= residual_tol or worst_slack < 0:
            return CheckResult("theorem3", False,
                               min(residual_tol - worst_res, worst_slack),
                               f"game {k}: residual {res['residual']:.3e}")
    return CheckResult("theorem3", True,
                       min(residual_tol - worst_res, worst_slack),
                       f"{n_games} games, worst residual {worst_res:.3e}")


def run_theory_suite(seed: int = 0, contraction_tol: float = 1e-12,
                     fixed_point_tol: float = 1e-8,
                     invariance_tol: float = 1e-9,
                     residual_tol: float = 1e-3,
                     n_contraction: int = 100, n_invariance: int = 20,
                     n_theorem3: int = 20,
                     fixtures_dir: str | None = None) -> dict:
    """All operator-level property suites; returns {checks, ok}."""
    root = Rng(seed, (90,))
    checks = [
        _check_contraction(rng_fork(root, 1), n_contraction, contraction_tol),
        _check_fixed_point(rng_fork(root, 2), 20, fixed_point_tol),
        _check_switch_rule(rng_fork(root, 3), 20),
        _check_invariance(rng_fork(root, 4), n_invariance, invariance_tol),
        _check_theorem3(rng_fork(root, 5), n_theorem3, residual_tol),
    ]
    if fixtures_dir is not None:
        paths = sorted(glob.glob(os.path.join(fixtures_dir, "*.json")))
        for p in paths:
            gm = th.load_game(p)   # GameError names the offending row
            v, _ = th.value_iterate(gm)
            resid = float(np.max(np.abs(th.bellman_op(gm, v) - v)))
            checks.append(CheckResult(
                f"fixture:{os.path.basename(p)}", resid < fixed_point_tol,
                fixed_point_tol - resid, f"fixed-point residual {resid:.3e}"))
    return {"checks": checks, "ok": all(c.passed for c in checks)}


def format_suite_report(report: dict) -> str:
    lines = []
    for c in report["checks"]:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{status} {c.name}: margin {c.margin:.3e} ({c.detail})")
    lines.append("all checks passed" if report["ok"] else "SUITE FAILED")
    return "\n".join(lines)
