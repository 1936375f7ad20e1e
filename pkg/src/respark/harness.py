"""Seeded experiment harness: graph generators, the Monte Carlo driver
that reruns the stream pipeline under many tape seeds with full per-step
verification, and report emission.

Experiments run in one of two labeled regimes. "theorem" uses the derived
budget, which exceeds the edge count at desk scale, so every probability
stays 1 and the run checks pipeline exactness. "stress" overrides the
budget downward to make drops actually happen and compares the observed
event rates against the failure-probability targets. The distinction is
recorded in every report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import beta as _beta_dist

from .graph import WeightedGraph, is_connected
from .sparsify import RESISTANCE_MODES, StreamConfig, stream_sparsify
from .tape import RandomTape
from .verify import spectral_check

__all__ = [
    "ExperimentReport",
    "GenerationInfo",
    "GeneratorSpec",
    "TrialError",
    "TrialStepRow",
    "StepStats",
    "clopper_pearson",
    "emit_report",
    "generate",
    "generate_with_info",
    "load_report_json",
    "read_report_rows",
    "run_experiment",
    "tree_first_order",
]

GENERATOR_MODELS = ("path", "cycle", "complete", "erdos-renyi", "barbell")

REPORT_SCHEMA_VERSION = 1

ROW_COLUMNS = (
    "trial",
    "seed",
    "step",
    "copy_count",
    "proj_error_norm",
    "w_norm",
    "budget_n",
    "a_event",
    "b_event",
    "spectral_ok",
    "worst_ratio",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """A seeded graph-generation request.

    Weight range [weight_min, weight_max] is sampled uniformly per edge;
    the degenerate range [1, 1] gives unit weights exactly.
    """

    model: str
    n: int
    p: float | None = None
    weight_min: float = 1.0
    weight_max: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model not in GENERATOR_MODELS:
            raise ValueError(f"model must be one of {GENERATOR_MODELS}, got {self.model!r}")
        if self.n < 2:
            raise ValueError(f"need at least 2 vertices, got n={self.n}")
        if self.model == "erdos-renyi":
            if self.p is None or not 0.0 < self.p <= 1.0:
                raise ValueError(f"erdos-renyi needs edge probability in (0, 1], got {self.p}")
        if not 0.0 < self.weight_min <= self.weight_max:
            raise ValueError(
                f"need 0 < weight_min <= weight_max, got [{self.weight_min}, {self.weight_max}]"
            )


@dataclass(frozen=True)
class GenerationInfo:
    """Adjustments made to satisfy the connectivity invariant."""

    connector_edges: int
    reordered_edges: int


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[ry] = rx
        return True


def tree_first_order(g: WeightedGraph) -> WeightedGraph:
    """Stable reorder putting a spanning forest first.

    Streams whose prefixes are connected keep the per-step projection
    reference well-defined from the first checkpoint on; the experiment
    driver generates graphs in this order.
    """
    uf = _UnionFind(g.n)
    tree, rest = [], []
    for e in g.edges:
        (tree if uf.union(e.u, e.v) else rest).append(e)
    return WeightedGraph(g.n, tuple(tree + rest))


def _pair_topology(spec: GeneratorSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = spec.n
    if spec.model == "path":
        return [(i, i + 1) for i in range(n - 1)]
    if spec.model == "cycle":
        return [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
    if spec.model == "complete":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    if spec.model == "barbell":
        k = n // 2
        left = [(i, j) for i in range(k) for j in range(i + 1, k)]
        right = [(i, j) for i in range(k, n) for j in range(i + 1, n)]
        return left + right + [(max(k - 1, 0), k)]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < spec.p:
                pairs.append((i, j))
    return pairs


def generate_with_info(spec: GeneratorSpec) -> tuple[WeightedGraph, GenerationInfo]:
    """Generate the graph plus a record of connectivity adjustments."""
    rng = np.random.default_rng(spec.seed)
    pairs = _pair_topology(spec, rng)

    uf = _UnionFind(spec.n)
    for u, v in pairs:
        uf.union(u, v)
    reps = sorted({uf.find(i) for i in range(spec.n)})
    connectors = [(reps[i], reps[i + 1]) for i in range(len(reps) - 1)]
    pairs.extend(connectors)

    weights = rng.uniform(spec.weight_min, spec.weight_max, size=len(pairs))
    g = WeightedGraph.from_edges(
        spec.n, [(u, v, float(w)) for (u, v), w in zip(pairs, weights)]
    )
    ordered = tree_first_order(g)
    moved = sum(1 for a, b in zip(g.edges, ordered.edges) if a != b)
    return ordered, GenerationInfo(len(connectors), moved)


def generate(spec: GeneratorSpec) -> WeightedGraph:
    """Connected weighted graph for a GeneratorSpec, deterministic per seed.

    Edges come out spanning-tree first; disconnected draws get minimal
    connector edges appended before reordering.
    """
    g, _ = generate_with_info(spec)
    return g


def clopper_pearson(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for a failure count."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= failures <= trials:
        raise ValueError(f"failures must lie in [0, {trials}], got {failures}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    tail = (1.0 - confidence) / 2.0
    lo = 0.0 if failures == 0 else float(_beta_dist.ppf(tail, failures, trials - failures + 1))
    hi = (
        1.0
        if failures == trials
        else float(_beta_dist.ppf(1.0 - tail, failures + 1, trials - failures))
    )
    return lo, hi


@dataclass(frozen=True)
class TrialStepRow:
    """One (trial, step) measurement; spectral_ok is None on steps whose
    prefix graph is disconnected (no reference to check against)."""

    trial: int
    seed: int
    step: int
    copy_count: int
    proj_error_norm: float
    w_norm: float
    budget_n: int
    a_event: bool
    b_event: bool
    spectral_ok: bool | None
    worst_ratio: float


@dataclass(frozen=True)
class TrialError:
    trial: int
    step: int
    message: str


@dataclass(frozen=True)
class StepStats:
    step: int
    trials: int
    copy_count_mean: float
    copy_count_max: int
    proj_error_mean: float
    proj_error_max: float
    w_norm_mean: float
    w_norm_max: float


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated Monte Carlo outcome.

    Bit-reproducible from (generator, config, block size, mode): the
    wall-clock field is populated at run time but excluded from emitted
    files and from equality, so serialized reports depend only on the
    master seed and parameters.
    """

    generator: GeneratorSpec
    config: StreamConfig
    block_size: int
    resistance_mode: str
    regime: str
    trials: int
    trial_seeds: tuple[int, ...]
    trials_with_a_event: int
    trials_with_b_event: int
    trials_with_error: int
    failed_trials: int
    failure_rate: float
    failure_ci95: tuple[float, float]
    prop1_violations: int
    step_stats: tuple[StepStats, ...]
    rows: tuple[TrialStepRow, ...]
    errors: tuple[TrialError, ...]
    wall_clock_seconds: float = field(default=float("nan"), compare=False)


def _nan_stats(values: Sequence[float]) -> tuple[float, float]:
    finite = [v for v in values if not math.isnan(v)]
    if not finite:
        return float("nan"), float("nan")
    return float(np.mean(finite)), float(np.max(finite))


def _aggregate(
    generator: GeneratorSpec,
    cfg: StreamConfig,
    block_size: int,
    mode: str,
    trial_seeds: Sequence[int],
    rows: Sequence[TrialStepRow],
    errors: Sequence[TrialError],
    wall_clock: float,
) -> ExperimentReport:
    trials = len(trial_seeds)
    a_trials = {r.trial for r in rows if r.a_event}
    b_trials = {r.trial for r in rows if r.b_event}
    err_trials = {e.trial for e in errors}
    failed = a_trials | b_trials | err_trials
    prop1 = sum(
        1
        for r in rows
        if not math.isnan(r.proj_error_norm)
        and r.proj_error_norm <= cfg.eps
        and r.spectral_ok is False
    )
    by_step: dict[int, list[TrialStepRow]] = {}
    for r in rows:
        by_step.setdefault(r.step, []).append(r)
    stats = []
    for step in sorted(by_step):
        group = by_step[step]
        proj_mean, proj_max = _nan_stats([r.proj_error_norm for r in group])
        w_mean, w_max = _nan_stats([r.w_norm for r in group])
        counts = [r.copy_count for r in group]
        stats.append(
            StepStats(
                step=step,
                trials=len(group),
                copy_count_mean=float(np.mean(counts)),
                copy_count_max=int(max(counts)),
                proj_error_mean=proj_mean,
                proj_error_max=proj_max,
                w_norm_mean=w_mean,
                w_norm_max=w_max,
            )
        )
    return ExperimentReport(
        generator=generator,
        config=cfg,
        block_size=block_size,
        resistance_mode=mode,
        regime="stress" if cfg.budget_override is not None else "theorem",
        trials=trials,
        trial_seeds=tuple(int(s) for s in trial_seeds),
        trials_with_a_event=len(a_trials),
        trials_with_b_event=len(b_trials),
        trials_with_error=len(err_trials),
        failed_trials=len(failed),
        failure_rate=len(failed) / trials,
        failure_ci95=clopper_pearson(len(failed), trials),
        prop1_violations=prop1,
        step_stats=tuple(stats),
        rows=tuple(rows),
        errors=tuple(errors),
        wall_clock_seconds=wall_clock,
    )


def run_experiment(
    spec: GeneratorSpec,
    cfg: StreamConfig,
    trials: int,
    block_size: int | None = None,
    resistance_mode: str = "exact",
) -> ExperimentReport:
    """T independent stream runs over one generated graph, fully verified.

    The graph is generated once from spec; trial t reruns the stream under
    tape seed child("trial/t") of cfg.seed. Every step records the
    diagnostics row plus a spectral check of the sparsifier against the
    stream prefix (skipped, with spectral_ok None, while the prefix is
    disconnected). A trial counts as failed when any step raises a_event
    or b_event, or when the run errors; errored trials keep their error
    message and trial index in the report and contribute no rows.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if resistance_mode not in RESISTANCE_MODES:
        raise ValueError(
            f"resistance mode must be one of {RESISTANCE_MODES}, got {resistance_mode!r}"
        )
    start = time.perf_counter()
    g = generate(spec)
    if cfg.n != g.n or cfg.m != g.m:
        raise ValueError(
            f"config (n={cfg.n}, m={cfg.m}) does not match generated graph "
            f"(n={g.n}, m={g.m}); build the config with StreamConfig.for_graph"
        )
    if block_size is None:
        block_size = cfg.budget_n
    master = RandomTape(cfg.seed)
    trial_seeds = [master.child_seed(f"trial/{t}") for t in range(trials)]
    rows: list[TrialStepRow] = []
    errors: list[TrialError] = []
    for t, seed in enumerate(trial_seeds):
        cfg_t = cfg.with_seed(seed)
        trial_rows: list[TrialStepRow] = []

        def collect(step, h, prefix, record, _trial=t, _seed=seed, _rows=trial_rows):
            if is_connected(prefix):
                ok, worst = spectral_check(h, prefix, cfg.eps)
            else:
                ok, worst = None, float("nan")
            _rows.append(
                TrialStepRow(
                    trial=_trial,
                    seed=_seed,
                    step=step,
                    copy_count=record.copy_count,
                    proj_error_norm=record.proj_error_norm,
                    w_norm=record.w_norm,
                    budget_n=record.budget_n,
                    a_event=record.a_event,
                    b_event=record.b_event,
                    spectral_ok=ok,
                    worst_ratio=worst,
                )
            )

        try:
            stream_sparsify(
                g,
                cfg_t,
                block_size=block_size,
                resistance_mode=resistance_mode,
                diagnostics=True,
                on_step=collect,
            )
        except Exception as exc:
            step = getattr(exc, "step", -1)
            errors.append(TrialError(t, int(step), f"{type(exc).__name__}: {exc}"))
            continue
        rows.extend(trial_rows)
    wall = time.perf_counter() - start
    return _aggregate(spec, cfg, block_size, resistance_mode, trial_seeds, rows, errors, wall)


# ---------------------------------------------------------------------------
# serialization


def _generator_dict(spec: GeneratorSpec) -> dict:
    return {
        "model": spec.model,
        "n": spec.n,
        "p": spec.p,
        "weight_min": spec.weight_min,
        "weight_max": spec.weight_max,
        "seed": spec.seed,
    }


def _config_dict(cfg: StreamConfig) -> dict:
    return {
        "eps": cfg.eps,
        "delta": cfg.delta,
        "alpha": cfg.alpha,
        "kappa": cfg.kappa,
        "n": cfg.n,
        "m": cfg.m,
        "seed": cfg.seed,
        "budget_override": cfg.budget_override,
        "budget_n": cfg.budget_n,
    }


def report_to_dict(report: ExperimentReport) -> dict:
    """Stable-ordered plain-dict form, wall clock excluded."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "respark-experiment-report",
        "regime": report.regime,
        "generator": _generator_dict(report.generator),
        "config": _config_dict(report.config),
        "block_size": report.block_size,
        "resistance_mode": report.resistance_mode,
        "trials": report.trials,
        "trial_seeds": list(report.trial_seeds),
        "trials_with_a_event": report.trials_with_a_event,
        "trials_with_b_event": report.trials_with_b_event,
        "trials_with_error": report.trials_with_error,
        "failed_trials": report.failed_trials,
        "failure_rate": report.failure_rate,
        "failure_ci95": list(report.failure_ci95),
        "prop1_violations": report.prop1_violations,
        "step_stats": [
            {
                "step": s.step,
                "trials": s.trials,
                "copy_count_mean": s.copy_count_mean,
                "copy_count_max": s.copy_count_max,
                "proj_error_mean": s.proj_error_mean,
                "proj_error_max": s.proj_error_max,
                "w_norm_mean": s.w_norm_mean,
                "w_norm_max": s.w_norm_max,
            }
            for s in report.step_stats
        ],
        "rows": [
            {
                "trial": r.trial,
                "seed": r.seed,
                "step": r.step,
                "copy_count": r.copy_count,
                "proj_error_norm": r.proj_error_norm,
                "w_norm": r.w_norm,
                "budget_n": r.budget_n,
                "a_event": r.a_event,
                "b_event": r.b_event,
                "spectral_ok": r.spectral_ok,
                "worst_ratio": r.worst_ratio,
            }
            for r in report.rows
        ],
        "errors": [
            {"trial": e.trial, "step": e.step, "message": e.message} for e in report.errors
        ],
    }


def report_from_dict(data: dict) -> ExperimentReport:
    if data.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported report schema version {data.get('schema_version')!r}"
        )
    gen = GeneratorSpec(**data["generator"])
    cfg_data = dict(data["config"])
    budget_n = cfg_data.pop("budget_n")
    cfg = StreamConfig(**cfg_data)
    if cfg.budget_n != budget_n:
        raise ValueError(
            f"stored budget_n={budget_n} disagrees with recomputed {cfg.budget_n}"
        )
    return ExperimentReport(
        generator=gen,
        config=cfg,
        block_size=data["block_size"],
        resistance_mode=data["resistance_mode"],
        regime=data["regime"],
        trials=data["trials"],
        trial_seeds=tuple(data["trial_seeds"]),
        trials_with_a_event=data["trials_with_a_event"],
        trials_with_b_event=data["trials_with_b_event"],
        trials_with_error=data["trials_with_error"],
        failed_trials=data["failed_trials"],
        failure_rate=data["failure_rate"],
        failure_ci95=tuple(data["failure_ci95"]),
        prop1_violations=data["prop1_violations"],
        step_stats=tuple(StepStats(**s) for s in data["step_stats"]),
        rows=tuple(TrialStepRow(**r) for r in data["rows"]),
        errors=tuple(TrialError(**e) for e in data["errors"]),
    )


def emit_report(report: ExperimentReport, path, format: str = "json") -> str:
    """Write the report; JSON carries the whole report (schema versioned),
    CSV carries one row per (trial, step) for external aggregation."""
    path = str(path)
    if format == "json":
        payload = json.dumps(report_to_dict(report), indent=2)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        return path
    if format == "csv":
        import csv as _csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(ROW_COLUMNS)
            for r in report.rows:
                writer.writerow(
                    [
                        r.trial,
                        r.seed,
                        r.step,
                        r.copy_count,
                        repr(r.proj_error_norm),
                        repr(r.w_norm),
                        r.budget_n,
                        str(r.a_event).lower(),
                        str(r.b_event).lower(),
                        "" if r.spectral_ok is None else str(r.spectral_ok).lower(),
                        repr(r.worst_ratio),
                    ]
                )
        return path
    raise ValueError(f"format must be 'json' or 'csv', got {format!r}")


def load_report_json(path) -> ExperimentReport:
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def read_report_rows(path) -> list[TrialStepRow]:
    """Rows back from a CSV emission."""
    import csv as _csv

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        missing = set(ROW_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing report columns {sorted(missing)}")
        for row in reader:
            rows.append(
                TrialStepRow(
                    trial=int(row["trial"]),
                    seed=int(row["seed"]),
                    step=int(row["step"]),
                    copy_count=int(row["copy_count"]),
                    proj_error_norm=float(row["proj_error_norm"]),
                    w_norm=float(row["w_norm"]),
                    budget_n=int(row["budget_n"]),
                    a_event=row["a_event"].strip().lower() == "true",
                    b_event=row["b_event"].strip().lower() == "true",
                    spectral_ok=(
                        None
                        if not row["spectral_ok"].strip()
                        else row["spectral_ok"].strip().lower() == "true"
                    ),
                    worst_ratio=float(row["worst_ratio"]),
                )
            )
    return rows
