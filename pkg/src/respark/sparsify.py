"""Incremental resparsification: budget, config, the per-block step, and
two equivalent stream drivers.

`stream_sparsify` is the block formulation: each step recomputes sampling
probabilities on the current sparsifier plus the new block, thins the
surviving copies by probability ratios, and samples the new edges.
`single_edge_stream` (block size 1) and its generalization
`indicator_stream` keep the full (edge, copy) indicator matrix instead,
with unseen edges conventionally holding probability 1 and all copies
alive. Both consume the same keyed random tape, so for any fixed block
partition they produce bit-identical copy sets; the indicator form
additionally emits complete per-step traces for the analysis instruments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .graph import (
    Edge,
    WeightedGraph,
    build_laplacian,
    laplacian_from_arrays,
    is_connected,
    projection_context,
    pseudo_factorize,
)
from .resistance import (
    AccuracyModel,
    ResistanceEstimate,
    exact_resistances,
    inject_alpha_noise,
    resistances_from_sparsifier,
)
from .tape import RandomTape

__all__ = [
    "ConfigError",
    "EdgeCopy",
    "LoadedSparsifier",
    "RandomTape",
    "Sparsifier",
    "StreamConfig",
    "StreamStepError",
    "StreamTrace",
    "RESISTANCE_MODES",
    "compute_budget",
    "indicator_stream",
    "partition_stream",
    "read_sparsifier",
    "resparsify",
    "single_edge_stream",
    "stream_sparsify",
    "write_sparsifier",
]

RESISTANCE_MODES = ("sparsifier", "exact", "noisy", "nodrop")


class ConfigError(ValueError):
    """A stream configuration violates a precondition."""


class StreamStepError(RuntimeError):
    """A stream run failed at a specific step."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


def _validate_budget_params(eps, delta, alpha, kappa, n, m) -> None:
    if not 0.0 < eps < 1.0:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    if alpha < 1.0:
        raise ConfigError(f"alpha must be >= 1, got {alpha}")
    if kappa < 1.0:
        raise ConfigError(f"kappa must be >= 1, got {kappa}")
    if n < 2:
        raise ConfigError(f"need at least 2 vertices, got {n}")
    if m < 1:
        raise ConfigError(f"need at least 1 edge, got {m}")
    limit = math.sqrt(kappa * n / 3.0)
    if alpha > limit * (1.0 + 1e-12):
        raise ConfigError(
            f"alpha={alpha} violates the precondition alpha <= sqrt(kappa*n/3) = {limit:.6g}"
        )


def compute_budget(
    eps: float, delta: float, alpha: float, kappa: float, n: int, m: int
) -> int:
    """Space budget N = ceil(40 alpha^2 n ln^2(3 kappa m / delta) / eps^2).

    The logarithm is natural: all concentration constants downstream are
    stated in nats.
    """
    _validate_budget_params(eps, delta, alpha, kappa, n, m)
    log_term = math.log(3.0 * kappa * m / delta)
    return math.ceil(40.0 * alpha**2 * n * log_term**2 / eps**2)


@dataclass(frozen=True)
class StreamConfig:
    """All stream parameters plus the derived copy budget.

    budget_n is derived from the other fields unless budget_override is
    given; overridden runs exercise the drop path at desk scale and are
    labeled "stress" (outside theorem constants) by the harness.
    """

    eps: float
    delta: float
    alpha: float
    kappa: float
    n: int
    m: int
    seed: int
    budget_override: int | None = None
    budget_n: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        _validate_budget_params(self.eps, self.delta, self.alpha, self.kappa, self.n, self.m)
        if self.budget_override is not None:
            if int(self.budget_override) < 1:
                raise ConfigError(f"budget override must be >= 1, got {self.budget_override}")
            budget = int(self.budget_override)
        else:
            budget = compute_budget(
                self.eps, self.delta, self.alpha, self.kappa, self.n, self.m
            )
        object.__setattr__(self, "budget_n", budget)
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def for_graph(
        cls,
        g: WeightedGraph,
        eps: float,
        delta: float,
        alpha: float,
        seed: int,
        budget_override: int | None = None,
    ) -> "StreamConfig":
        """Build a config whose n, m, kappa are taken from the graph."""
        w = g.weights()
        if len(w) and w.max() > 1.0:
            warnings.warn(
                f"max edge weight {w.max():.3g} exceeds 1; the budget constants "
                "assume weights at most 1 and are conservative otherwise",
                stacklevel=2,
            )
        kappa = g.kappa()
        if kappa > g.n:
            warnings.warn(
                f"weight spread kappa={kappa:.3g} exceeds n={g.n}; ln(kappa) now "
                "dominates the budget's log factor",
                stacklevel=2,
            )
        return cls(eps, delta, alpha, kappa, g.n, g.m, seed, budget_override)

    def with_seed(self, seed: int) -> "StreamConfig":
        return replace(self, seed=int(seed))


def partition_stream(g: WeightedGraph, block_size: int) -> list[list[int]]:
    """Split the stream into ceil(m / block_size) blocks of edge ids, in order."""
    if block_size < 1:
        raise ValueError(f"block size must be >= 1, got {block_size}")
    return [
        list(range(start, min(start + block_size, g.m)))
        for start in range(0, g.m, block_size)
    ]


@dataclass(frozen=True)
class EdgeCopy:
    edge_id: int
    copy: int
    alive: bool
    p_tilde: float


@dataclass(frozen=True)
class Sparsifier:
    """State after step `step`: surviving copies and their probabilities.

    Treated as immutable; resparsify returns a new instance. p_tilde keeps
    an entry for every edge seen so far, frozen at its last value once the
    edge has no surviving copies (a dead edge never re-enters the graph, so
    its probability is never consulted again). alive maps an edge id to the
    ascending copy indices still present; each such copy carries weight
    a_e / (N * p_tilde[e]).
    """

    config: StreamConfig
    step: int
    n: int
    edges: tuple[Edge, ...]
    arrived: int
    p_tilde: dict[int, float]
    alive: dict[int, np.ndarray]

    @classmethod
    def empty(cls, g: WeightedGraph, cfg: StreamConfig) -> "Sparsifier":
        return cls(cfg, 0, g.n, g.edges, 0, {}, {})

    @property
    def budget_n(self) -> int:
        return self.config.budget_n

    def copy_count(self) -> int:
        return int(sum(len(js) for js in self.alive.values()))

    def copy_weight(self, edge_id: int) -> float:
        return self.edges[edge_id].weight / (self.budget_n * self.p_tilde[edge_id])

    def copies(self) -> list[EdgeCopy]:
        out = []
        for e in sorted(self.alive):
            p = self.p_tilde[e]
            out.extend(EdgeCopy(e, int(j), True, p) for j in self.alive[e])
        return out

    def _merged_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ids = sorted(self.alive)
        us = np.array([self.edges[e].u for e in ids], dtype=int)
        vs = np.array([self.edges[e].v for e in ids], dtype=int)
        ws = np.array([len(self.alive[e]) * self.copy_weight(e) for e in ids])
        return us, vs, ws

    def laplacian(self) -> np.ndarray:
        us, vs, ws = self._merged_arrays()
        return laplacian_from_arrays(self.n, us, vs, ws)

    def to_graph(self) -> WeightedGraph:
        """Alive copies merged into one weighted edge per id."""
        ids = sorted(self.alive)
        return WeightedGraph.from_edges(
            self.n,
            [
                (self.edges[e].u, self.edges[e].v, len(self.alive[e]) * self.copy_weight(e))
                for e in ids
            ],
        )

    def combined_with(self, block: Sequence[int]) -> WeightedGraph:
        """The merged sparsifier plus the raw edges of the next block."""
        ids = sorted(self.alive)
        triples = [
            (self.edges[e].u, self.edges[e].v, len(self.alive[e]) * self.copy_weight(e))
            for e in ids
        ]
        triples.extend(
            (self.edges[e].u, self.edges[e].v, self.edges[e].weight) for e in block
        )
        return WeightedGraph.from_edges(self.n, triples)


def _new_probability(
    weight: float, r_tilde: float, alpha: float, n: int, prev: float
) -> tuple[float, float]:
    # min rule with a defensive clamp to (0, 1]; returns (p_new, ratio)
    raw = min(weight * r_tilde / (alpha * (n - 1)), 1.0)
    p = min(raw, prev)
    ratio = p / prev
    if ratio > 1.0 + 1e-12:
        raise RuntimeError("min rule violated: probability ratio exceeds 1")
    return p, min(ratio, 1.0)


def resparsify(
    h_prev: Sparsifier,
    block: Sequence[int],
    estimates: Sequence[ResistanceEstimate],
    tape: RandomTape,
) -> Sparsifier:
    """One resparsification step: thin survivors, sample the new block.

    Parameters
    ----------
    h_prev : Sparsifier
        The step-(s-1) state.
    block : sequence of int
        Edge ids of the arriving block; must be the next contiguous slice
        of the stream.
    estimates : sequence of ResistanceEstimate
        Must cover every edge that has surviving copies plus every edge of
        the block.
    tape : RandomTape
        Supplies u_{s,e,j}; copy j of edge e survives iff
        u_{s,e,j} <= p_new / p_prev, and new edges start from the
        all-alive, probability-1 convention so the same ratio test
        performs their N Bernoulli(p_new) trials.
    """
    cfg = h_prev.config
    s = h_prev.step + 1
    n, alpha, N = h_prev.n, cfg.alpha, cfg.budget_n
    block = [int(e) for e in block]
    expected = list(range(h_prev.arrived, h_prev.arrived + len(block)))
    if block != expected:
        raise ValueError(f"block must be the next stream slice {expected}, got {block}")
    rmap = {est.edge_id: est.r_tilde for est in estimates}
    needed = sorted(set(h_prev.alive) | set(block))
    missing = [e for e in needed if e not in rmap]
    if missing:
        raise ValueError(f"missing resistance estimates for edges {missing}")

    block_set = set(block)
    p_new: dict[int, float] = dict(h_prev.p_tilde)
    alive_new: dict[int, np.ndarray] = {}
    all_copies = np.arange(N)
    for e in needed:
        prev = h_prev.p_tilde.get(e, 1.0)
        p, ratio = _new_probability(h_prev.edges[e].weight, rmap[e], alpha, n, prev)
        js = h_prev.alive[e] if e not in block_set else all_copies
        u = tape.uniforms(s, e, N)
        kept = js[u[js] <= ratio]
        p_new[e] = p
        if len(kept):
            alive_new[e] = kept
    return Sparsifier(
        config=cfg,
        step=s,
        n=n,
        edges=h_prev.edges,
        arrived=h_prev.arrived + len(block),
        p_tilde=p_new,
        alive=alive_new,
    )


def _step_estimates(
    h_prev: Sparsifier,
    block: Sequence[int],
    g: WeightedGraph,
    mode: str,
    step: int,
) -> list[ResistanceEstimate]:
    """Resistance estimates for alive(H_{s-1}) union block, per the configured mode."""
    cfg = h_prev.config
    targets = sorted(set(h_prev.alive) | set(block))
    if not targets:
        return []
    pairs = [(g.edges[e].u, g.edges[e].v) for e in targets]
    if mode == "nodrop":
        # inflated estimates pin every probability at 1; exercises the
        # exact-reconstruction path
        return [
            ResistanceEstimate(e, cfg.alpha * (cfg.n - 1) / g.edges[e].weight, cfg.alpha)
            for e in targets
        ]
    if mode == "sparsifier":
        combined = h_prev.combined_with(block)
        return resistances_from_sparsifier(combined, pairs, cfg.eps, targets)
    if mode in ("exact", "noisy"):
        prefix = g.prefix(h_prev.arrived + len(block))
        factors = pseudo_factorize(build_laplacian(prefix))
        exact = exact_resistances(factors, pairs, targets)
        if mode == "exact":
            return exact
        model = AccuracyModel(
            cfg.alpha, "injected-noise", RandomTape(cfg.seed).child_seed(f"noise/{step}")
        )
        return inject_alpha_noise(exact, model)
    raise ValueError(f"resistance mode must be one of {RESISTANCE_MODES}, got {mode!r}")


@dataclass
class StreamTrace:
    """Per-step probability and aliveness history of one stream run.

    Row s describes the state after step s (row 0 is the initial state).
    Unseen edges hold the convention p = 1 with all N copies alive, so the
    analysis formulas apply verbatim to every row. copy_steps, when
    recorded, holds the full (m, N) indicator matrix per step.
    """

    n: int
    budget_n: int
    edges: tuple[Edge, ...]
    arrived: list[int]
    p_steps: list[np.ndarray]
    alive_steps: list[np.ndarray]
    copy_steps: list[np.ndarray] | None = None

    @property
    def steps(self) -> int:
        return len(self.arrived) - 1

    def copy_count(self, step: int) -> int:
        seen = self.arrived[step]
        return int(self.alive_steps[step][:seen].sum())

    def max_copy_ratios(self, edge_id: int) -> np.ndarray:
        """max over steps of z_{s,e,j} / p_{s,e} for each copy j of one edge."""
        if self.copy_steps is None:
            raise ValueError("trace was recorded without per-copy indicators")
        ratios = np.stack(
            [zs[edge_id] / ps[edge_id] for zs, ps in zip(self.copy_steps, self.p_steps)]
        )
        return ratios.max(axis=0)


def _empty_trace(g: WeightedGraph, cfg: StreamConfig, with_copies: bool) -> StreamTrace:
    m, N = g.m, cfg.budget_n
    return StreamTrace(
        n=g.n,
        budget_n=N,
        edges=g.edges,
        arrived=[0],
        p_steps=[np.ones(m)],
        alive_steps=[np.full(m, float(N))],
        copy_steps=[np.ones((m, N), dtype=bool)] if with_copies else None,
    )


def _append_block_state(trace: StreamTrace, h: Sparsifier) -> None:
    m, N = len(trace.edges), trace.budget_n
    p = np.ones(m)
    alive = np.full(m, float(N))
    for e, val in h.p_tilde.items():
        p[e] = val
        alive[e] = 0.0
    for e, js in h.alive.items():
        alive[e] = float(len(js))
    trace.arrived.append(h.arrived)
    trace.p_steps.append(p)
    trace.alive_steps.append(alive)


class _DiagnosticsEngine:
    """Per-step measurement of the projection error, variation norm, and counts."""

    def __init__(self, g: WeightedGraph, cfg: StreamConfig):
        from . import verify

        self._verify = verify
        self.g = g
        self.cfg = cfg
        # the variation norm uses one fixed whole-graph reference; building
        # it requires the input graph to be connected
        self.ctx_full = projection_context(g)

    def record(self, trace: StreamTrace, h: Sparsifier, step: int):
        v = self._verify
        prefix = self.g.prefix(h.arrived)
        if is_connected(prefix):
            proj = v.projection_error(h, projection_context(prefix))
        else:
            proj = float("nan")
        w_norm = v.quadratic_variation(trace, self.ctx_full, upto=step)
        return v.DiagnosticsRecord.from_measurements(
            step=step,
            copy_count=h.copy_count(),
            proj_error_norm=proj,
            w_norm=w_norm,
            cfg=self.cfg,
        )


def _check_cfg_matches(g: WeightedGraph, cfg: StreamConfig) -> None:
    if cfg.n != g.n or cfg.m != g.m:
        raise ConfigError(
            f"config (n={cfg.n}, m={cfg.m}) does not match graph (n={g.n}, m={g.m})"
        )
    kappa = g.kappa()
    if abs(cfg.kappa - kappa) > 1e-9 * max(1.0, kappa):
        raise ConfigError(f"config kappa={cfg.kappa} does not match graph kappa={kappa}")


def stream_sparsify(
    g: WeightedGraph,
    cfg: StreamConfig,
    block_size: int | None = None,
    resistance_mode: str = "sparsifier",
    diagnostics: bool = True,
    on_step: Callable | None = None,
) -> tuple[Sparsifier, list]:
    """Run the block-stream driver over the whole edge stream.

    Parameters
    ----------
    g : WeightedGraph
        The input stream; edge order is the arrival order.
    cfg : StreamConfig
        Must match g's n, m, and kappa. cfg.seed keys every random decision,
        so the returned sparsifier is exactly reconstructible from
        (seed, cfg, g).
    block_size : int, optional
        Defaults to the budget N, giving ceil(m/N) blocks.
    resistance_mode : str
        One of RESISTANCE_MODES; "sparsifier" estimates on the running
        sparsifier plus the block, "exact" uses the oracle on the stream
        prefix, "noisy" perturbs the oracle within [1/alpha, alpha],
        "nodrop" pins every probability at 1.
    diagnostics : bool
        Record a DiagnosticsRecord per step. Requires g connected (the
        variation norm needs a whole-graph reference). Steps whose prefix
        graph is disconnected get a NaN projection error and a_event False.
    on_step : callable, optional
        Called as on_step(step, sparsifier, prefix_graph, record) after
        each step; record is None when diagnostics are off.

    Returns
    -------
    (Sparsifier, list of DiagnosticsRecord)
    """
    _check_cfg_matches(g, cfg)
    if block_size is None:
        block_size = cfg.budget_n
    blocks = partition_stream(g, block_size)
    tape = RandomTape(cfg.seed)
    h = Sparsifier.empty(g, cfg)
    trace = _empty_trace(g, cfg, with_copies=False)
    engine = _DiagnosticsEngine(g, cfg) if diagnostics else None
    records: list = []
    for step, block in enumerate(blocks, start=1):
        try:
            estimates = _step_estimates(h, block, g, resistance_mode, step)
            h = resparsify(h, block, estimates, tape)
        except (StreamStepError, ConfigError):
            raise
        except Exception as exc:
            raise StreamStepError(step, str(exc)) from exc
        _append_block_state(trace, h)
        record = engine.record(trace, h, step) if engine else None
        if record is not None:
            records.append(record)
        if on_step is not None:
            on_step(step, h, g.prefix(h.arrived), record)
    return h, records


def indicator_stream(
    g: WeightedGraph,
    cfg: StreamConfig,
    block_size: int = 1,
    resistance_mode: str = "sparsifier",
    diagnostics: bool = True,
    record_copies: bool = True,
    on_step: Callable | None = None,
) -> tuple[Sparsifier, list, StreamTrace]:
    """Indicator-matrix formulation of the same stream computation.

    Keeps the full (m, N) aliveness matrix with the unseen-edge convention
    (probability 1, all copies alive) and updates probabilities only from
    an edge's arrival step on. For any fixed block partition this produces
    exactly the copy sets of stream_sparsify under the same tape; it
    additionally returns the complete per-step trace.
    """
    _check_cfg_matches(g, cfg)
    blocks = partition_stream(g, block_size)
    tape = RandomTape(cfg.seed)
    m, N, alpha, n = g.m, cfg.budget_n, cfg.alpha, cfg.n
    p = np.ones(m)
    Z = np.ones((m, N), dtype=bool)
    h = Sparsifier.empty(g, cfg)
    trace = _empty_trace(g, cfg, with_copies=record_copies)
    engine = _DiagnosticsEngine(g, cfg) if diagnostics else None
    records: list = []
    for step, block in enumerate(blocks, start=1):
        block_set = set(block)
        targets = sorted(set(h.alive) | block_set)
        try:
            estimates = _step_estimates(h, block, g, resistance_mode, step)
            rmap = {est.edge_id: est.r_tilde for est in estimates}
            for e in targets:
                p_next, ratio = _new_probability(
                    g.edges[e].weight, rmap[e], alpha, n, float(p[e])
                )
                u = tape.uniforms(step, e, N)
                Z[e] &= u <= ratio
                p[e] = p_next
        except (StreamStepError, ConfigError):
            raise
        except Exception as exc:
            raise StreamStepError(step, str(exc)) from exc
        arrived = h.arrived + len(block)
        h = _materialize(g, cfg, step, arrived, p, Z)
        trace.arrived.append(arrived)
        trace.p_steps.append(p.copy())
        alive = np.full(m, float(N))
        counts = Z.sum(axis=1).astype(float)
        alive[:arrived] = counts[:arrived]
        trace.alive_steps.append(alive)
        if record_copies:
            trace.copy_steps.append(Z.copy())
        record = engine.record(trace, h, step) if engine else None
        if record is not None:
            records.append(record)
        if on_step is not None:
            on_step(step, h, g.prefix(arrived), record)
    return h, records, trace


def _materialize(
    g: WeightedGraph, cfg: StreamConfig, step: int, arrived: int, p: np.ndarray, Z: np.ndarray
) -> Sparsifier:
    p_tilde = {e: float(p[e]) for e in range(arrived)}
    alive = {}
    for e in range(arrived):
        js = np.flatnonzero(Z[e])
        if len(js):
            alive[e] = js
    return Sparsifier(
        config=cfg, step=step, n=g.n, edges=g.edges, arrived=arrived,
        p_tilde=p_tilde, alive=alive,
    )


def single_edge_stream(
    g: WeightedGraph,
    cfg: StreamConfig,
    resistance_mode: str = "sparsifier",
    diagnostics: bool = True,
    record_copies: bool = True,
    on_step: Callable | None = None,
) -> tuple[Sparsifier, list, StreamTrace]:
    """The single-edge-arrival formulation: indicator_stream with block size 1."""
    return indicator_stream(
        g,
        cfg,
        block_size=1,
        resistance_mode=resistance_mode,
        diagnostics=diagnostics,
        record_copies=record_copies,
        on_step=on_step,
    )


# ---------------------------------------------------------------------------
# sparsifier file format


def write_sparsifier(h: Sparsifier, path) -> None:
    """Write alive copies: header comment, then 'u v weight e j p_tilde' rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# respark sparsifier step={h.step} N={h.budget_n} seed={h.config.seed}\n"
        )
        for c in h.copies():
            e = h.edges[c.edge_id]
            fh.write(
                f"{e.u} {e.v} {h.copy_weight(c.edge_id)!r} {c.edge_id} {c.copy} {c.p_tilde!r}\n"
            )


@dataclass(frozen=True)
class LoadedSparsifier:
    """A sparsifier file read back: enough state to verify against a graph."""

    n: int
    step: int
    budget_n: int
    seed: int
    rows: tuple[tuple[int, int, float, int, int, float], ...]

    def copy_count(self) -> int:
        return len(self.rows)

    def laplacian(self) -> np.ndarray:
        us = np.array([r[0] for r in self.rows], dtype=int)
        vs = np.array([r[1] for r in self.rows], dtype=int)
        ws = np.array([r[2] for r in self.rows])
        return laplacian_from_arrays(self.n, us, vs, ws)


def read_sparsifier(path, n: int | None = None) -> LoadedSparsifier:
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if header is None and "respark sparsifier" in line:
                    header = dict(
                        tok.split("=", 1) for tok in line.split() if "=" in tok
                    )
                continue
            tokens = line.split()
            if len(tokens) != 6:
                raise ValueError(
                    f"{path}:{lineno}: expected 'u v weight e j p_tilde', got {line!r}"
                )
            u, v = int(tokens[0]), int(tokens[1])
            rows.append(
                (u, v, float(tokens[2]), int(tokens[3]), int(tokens[4]), float(tokens[5]))
            )
    if header is None:
        raise ValueError(f"{path}: missing sparsifier header comment")
    if n is None:
        n = 1 + max(max(r[0], r[1]) for r in rows) if rows else 0
    return LoadedSparsifier(
        n=int(n),
        step=int(header.get("step", 0)),
        budget_n=int(header.get("N", 0)),
        seed=int(header.get("seed", 0)),
        rows=tuple(rows),
    )
