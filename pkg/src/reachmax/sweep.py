"""Budget sweeps: every method at every ``k`` in ``1..k_max``, averaged over instances."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import platform
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from .baselines import METHODS as BASELINE_METHODS
from .baselines import BaselineConfig, select
from .greedy import lazy_greedy, simple_greedy
from .io import atomic_write, format_csv, parse_bipartite_file
from .objective import ReachSolver, eval_reach
from .synth import gen_synthetic
from .tags import DEFAULT_EPSILON, TagGraph, fold

GREEDY_METHODS = ("greedy", "lazy-greedy")
ALL_METHODS = GREEDY_METHODS + BASELINE_METHODS


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep. Without ``dataset``, instances come from :func:`gen_synthetic`."""

    k_max: int = 25
    methods: tuple[str, ...] = ALL_METHODS
    seed: int = 0
    n_instances: int = 1
    dataset: str | None = None
    n_items: int = 300
    n_tags: int = 100
    edges_per_item: int = 2
    weight_exponent: float = 1.5
    epsilon: float = DEFAULT_EPSILON
    sigma_weight: float | None = None
    damping: float = 0.85
    workers: int | None = None
    timing: bool = False
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown or not self.methods:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {ALL_METHODS}")
        if self.n_instances < 1:
            raise ValueError("n_instances must be at least 1")

    def config_hash(self) -> str:
        """Digest of everything that affects the f column."""
        d = dataclasses.asdict(self)
        for key in ("out", "timing", "workers"):
            d.pop(key)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass
class MethodRun:
    """One method on one instance: selection, f and cumulative evaluations per k."""

    sets: list[tuple[int, ...]] = field(default_factory=list)
    f: list[float] = field(default_factory=list)
    n_evals: list[int] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    instances: list[dict[str, MethodRun]] = field(default_factory=list)
    failed: str | None = None

    def curve(self, method: str) -> np.ndarray:
        """``(n_instances, k_max)`` array of f values."""
        return np.array([inst[method].f for inst in self.instances])

    def to_csv(self) -> str:
        return format_csv(self.rows, self.metadata)


def instance_seeds(seed: int, n: int) -> list[int]:
    return [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence(seed).spawn(n)]


def _instance(cfg: ExperimentConfig, seed: int) -> TagGraph:
    if cfg.dataset is not None:
        return parse_bipartite_file(cfg.dataset)
    return gen_synthetic(cfg.n_items, cfg.n_tags, cfg.edges_per_item, cfg.weight_exponent, seed,
                         epsilon=cfg.epsilon, sigma_weight=cfg.sigma_weight)


def _run_greedy(method, spec, solver, cands, cfg) -> MethodRun:
    if method == "greedy":
        _, trace = simple_greedy(spec, cfg.k_max, candidates=cands, workers=cfg.workers, solver=solver)
    else:
        _, trace = lazy_greedy(spec, cfg.k_max, candidates=cands, solver=solver)
    run = MethodRun()
    evals = np.cumsum(trace.evals_per_round)
    for k in range(1, cfg.k_max + 1):
        s = trace.prefix(k)
        run.sets.append(s)
        run.f.append(eval_reach(spec, s, solver).f)
        r = min(k, len(trace.evals_per_round)) - 1
        run.n_evals.append(int(evals[r]))
        run.wall_ms.append(1e3 * trace.elapsed[r])
    return run


def _run_baseline(method, g, spec, solver, cfg, seed) -> MethodRun:
    bcfg = BaselineConfig(method=method, damping=cfg.damping, seed=seed)
    run = MethodRun()
    for k in range(1, cfg.k_max + 1):
        t0 = time.perf_counter()
        s = select(method, g, k, bcfg)
        run.wall_ms.append(1e3 * (time.perf_counter() - t0))
        run.sets.append(s)
        run.f.append(eval_reach(spec, s, solver).f)
        run.n_evals.append(0)
    return run


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run every method of ``cfg`` and write the CSV to ``cfg.out`` if set.

    The CSV holds the mean over instances per ``(method, k)``. Wall times
    are written as 0 unless ``cfg.timing`` is set, so repeated runs are
    byte-identical. On error the rows computed so far are written with a
    ``FAILED`` marker row and the exception propagates.
    """
    n_instances = 1 if cfg.dataset is not None else cfg.n_instances
    seeds = instance_seeds(cfg.seed, n_instances)
    result = SweepResult(config=cfg, metadata={
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "instance_seeds": " ".join(map(str, seeds)),
        "n_instances": n_instances,
        "k_max": cfg.k_max,
        "epsilon": cfg.epsilon,
        "methods": " ".join(cfg.methods),
        "dataset": cfg.dataset or "synthetic",
        "env": f"python {platform.python_version()} numpy {np.__version__} scipy {scipy.__version__}",
    })
    current = None
    try:
        for seed in seeds:
            g = _instance(cfg, seed)
            spec = fold(g).spec
            solver = ReachSolver(spec)
            cands = g.candidate_states
            runs: dict[str, MethodRun] = {}
            result.instances.append(runs)
            for method in cfg.methods:
                current = method
                if method in GREEDY_METHODS:
                    runs[method] = _run_greedy(method, spec, solver, cands, cfg)
                else:
                    runs[method] = _run_baseline(method, g, spec, solver, cfg, seed)
        current = None
        _aggregate(result)
    except Exception as exc:
        result.failed = f"{current or 'setup'}: {type(exc).__name__}: {exc}"
        if result.instances:
            _aggregate(result)
        result.rows.append(("FAILED", current or "", "", "", ""))
        result.metadata["error"] = result.failed.replace("\n", " ")
        if cfg.out:
            atomic_write(cfg.out, result.to_csv())
        raise
    if cfg.out:
        atomic_write(cfg.out, result.to_csv())
    return result


def _aggregate(result: SweepResult) -> None:
    cfg = result.config
    result.rows.clear()
    for method in cfg.methods:
        runs = [inst[method] for inst in result.instances if method in inst]
        if not runs:
            continue
        for k in range(cfg.k_max):
            f = float(np.mean([r.f[k] for r in runs]))
            evals = float(np.mean([r.n_evals[k] for r in runs]))
            wall = float(np.mean([r.wall_ms[k] for r in runs])) if cfg.timing else 0
            result.rows.append((method, k + 1, f, wall, int(evals) if evals.is_integer() else evals))
