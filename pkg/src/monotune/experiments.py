"""Experiment runners shared by the service and the CLI: single tuning
runs and budget-matched hypertune-vs-EI comparisons, returned as plain
serializable dicts."""

from __future__ import annotations

import math

import numpy as np

from .config import ExperimentConfig, build_engine_config, build_task
from .engine import RunRecord, Trial, hypertune, run_plain_ei

__all__ = ["run_tune_experiment", "run_compare_experiment", "evals_to_within_1pct"]


def _trial_dict(t: Trial) -> dict:
    return {
        "phase": t.phase,
        "iteration": t.iteration,
        "x_raw": list(t.x_raw),
        "y": t.y if math.isfinite(t.y) else None,
        "incumbent_y": t.incumbent_y if math.isfinite(t.incumbent_y) else None,
        "elapsed_seconds": t.elapsed_seconds,
        "failed": t.failed,
    }


def evals_to_within_1pct(trials: list[Trial], true_optimum: float) -> int | None:
    """Index (1-based) of the first evaluation within 1% of the true
    optimum; None if never reached."""
    threshold = true_optimum - 0.01 * abs(true_optimum)
    for i, t in enumerate(trials):
        if not t.failed and t.y >= threshold:
            return i + 1
    return None


def _run_method(config: ExperimentConfig, task, max_evals=None, time_budget=None,
                iters=None) -> RunRecord:
    engine_cfg = build_engine_config(config)
    if config.method == "hypertune":
        return hypertune(task, engine_cfg)
    return run_plain_ei(
        task, engine_cfg, seed=config.seed,
        max_evals=max_evals, time_budget=time_budget, iters=iters,
    )


def _summary(config: ExperimentConfig, record: RunRecord, helper) -> dict:
    heldout_error = None
    if helper is not None and record.incumbent_x_raw is not None:
        heldout_error = helper.heldout_error(np.asarray(record.incumbent_x_raw))
    return {
        "task": config.task,
        "method": config.method,
        "seed": config.seed,
        "averaged_optimum": list(record.averaged_optimum)
        if record.averaged_optimum is not None
        else None,
        "sign_points": [
            {"x": list(s.x), "dimension": s.d, "sign": s.m} for s in record.sign_points
        ],
        "incumbent_x_raw": list(record.incumbent_x_raw)
        if record.incumbent_x_raw is not None
        else None,
        "incumbent_y": record.incumbent_y if math.isfinite(record.incumbent_y) else None,
        "heldout_error": heldout_error,
        "subset_seconds": record.subset_seconds,
        "main_seconds": record.main_seconds,
        "total_budget_seconds": record.total_seconds,
        "n_trials": len(record.trials),
    }


def run_tune_experiment(config: ExperimentConfig) -> dict:
    """Run one experiment; returns {"trials": [...], "summary": {...}}."""
    task, helper = build_task(config)
    record = _run_method(config, task)
    return {
        "trials": [_trial_dict(t) for t in record.trials],
        "summary": _summary(config, record, helper),
    }


def _comparable(a: ExperimentConfig, b: ExperimentConfig) -> None:
    if a.task != b.task:
        raise ValueError("compare: configs must share the same task")
    if [d.model_dump() for d in a.space] != [d.model_dump() for d in b.space]:
        raise ValueError("compare: configs must share the same space")
    if a.seed != b.seed:
        raise ValueError("compare: configs must share the same seed base")
    if {a.method, b.method} != {"hypertune", "ei"}:
        raise ValueError("compare: need one hypertune config and one ei config")


def run_compare_experiment(
    config_a: ExperimentConfig, config_b: ExperimentConfig, repeats: int
) -> dict:
    """Paired-seed comparison. The EI baseline is capped at the evaluation
    count and the wall seconds HyperTune consumed for the same seed,
    whichever exhausts first."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    _comparable(config_a, config_b)
    ht_cfg = config_a if config_a.method == "hypertune" else config_b
    ei_cfg = config_b if config_a.method == "hypertune" else config_a

    rows = []
    per_method: dict[str, list[dict]] = {"hypertune": [], "ei": []}
    for r in range(repeats):
        seed = ht_cfg.seed + r
        ht = ht_cfg.model_copy(update={"seed": seed})
        ei = ei_cfg.model_copy(update={"seed": seed})
        task, helper = build_task(ht)
        ht_rec = _run_method(ht, task)
        n_evals = len(ht_rec.trials)
        ei_rec = _run_method(
            ei, task, max_evals=n_evals, time_budget=ht_rec.total_seconds,
            iters=n_evals,
        )
        for method, rec, trials in (
            ("hypertune", ht_rec, ht_rec.main_trials()),
            ("ei", ei_rec, ei_rec.trials),
        ):
            heldout = None
            if helper is not None and rec.incumbent_x_raw is not None:
                heldout = helper.heldout_error(np.asarray(rec.incumbent_x_raw))
            evals = (
                evals_to_within_1pct(trials, task.true_optimum)
                if task.true_optimum is not None
                else None
            )
            row = {
                "method": method,
                "seed": seed,
                "evals_to_1pct": evals,
                "final_validation": rec.incumbent_y
                if math.isfinite(rec.incumbent_y)
                else None,
                "heldout_error": heldout,
                "budget_seconds": rec.total_seconds,
            }
            rows.append(row)
            per_method[method].append(row)

    summary = []
    for method in ("hypertune", "ei"):
        entry = {"method": method, "seed": "summary"}
        for col in ("evals_to_1pct", "final_validation", "heldout_error", "budget_seconds"):
            vals = [row[col] for row in per_method[method] if row[col] is not None]
            if not vals:
                entry[col] = ""
                continue
            mean = float(np.mean(vals))
            if len(vals) > 1:
                se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                entry[col] = f"{mean:.6g}±{se:.3g}"
            else:
                entry[col] = f"{mean:.6g}"
        summary.append(entry)
    return {"rows": rows, "summary_rows": summary}
