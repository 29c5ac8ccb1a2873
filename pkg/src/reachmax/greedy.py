"""Budgeted maximisation of the reach probability.

Both optimizers pick, each round, the lowest-index state whose marginal gain
is within ``TIE_TOL`` of the best gain, and stop early once the best gain
drops to ``SATURATION_GAIN``. Gains are always computed as ``f(S | {z})``
from the round's shared base factors via one row replacement, so the two
optimizers compare bit-identical numbers and select identical sets.
"""

from __future__ import annotations

import heapq
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chain import ChainSpec, state_set
from .errors import LazyBoundViolation
from .objective import ReachSolver

TIE_TOL = 1e-12
SATURATION_GAIN = 1e-12
AUDIT_TOL = 1e-10


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("REACHMAX_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class GreedyTrace:
    method: str
    f_initial: float = 0.0
    chosen: list[int] = field(default_factory=list)
    f_values: list[float] = field(default_factory=list)
    gains: list[float] = field(default_factory=list)
    evals_per_round: list[int] = field(default_factory=list)
    elapsed: list[float] = field(default_factory=list)  # cumulative seconds after each round
    n_evals: int = 0
    n_updates: int = 0
    unused_budget: int = 0

    def prefix(self, k: int) -> tuple[int, ...]:
        return tuple(sorted(self.chosen[:k]))


class LazyQueue:
    """Max-queue of stale marginal-gain bounds, ordered by ``(bound, -state)``.

    Each state appears at most once. ``fresh`` holds the states whose key was
    computed against the current selection.
    """

    def __init__(self, states, bound=math.inf):
        self._heap = [(-bound, z) for z in sorted(states)]
        heapq.heapify(self._heap)
        self.fresh: set[int] = set()

    def __len__(self):
        return len(self._heap)

    def new_round(self):
        self.fresh.clear()

    def top(self) -> tuple[int, float]:
        key, z = self._heap[0]
        return z, -key

    def pop(self) -> tuple[int, float]:
        key, z = heapq.heappop(self._heap)
        return z, -key

    def push(self, z: int, bound: float, fresh: bool = False):
        heapq.heappush(self._heap, (-bound, z))
        if fresh:
            self.fresh.add(z)
        else:
            self.fresh.discard(z)

    def pop_at_least(self, threshold: float) -> list[tuple[int, float]]:
        out = []
        while self._heap and -self._heap[0][0] >= threshold:
            out.append(self.pop())
        return out


def _candidates(spec: ChainSpec, candidates):
    if candidates is None:
        return tuple(range(1, spec.n_transient + 1))
    return state_set(candidates, spec.n_transient)


def _pick(gains: dict[int, float]) -> tuple[int, float]:
    best = max(gains.values())
    z = min(z for z, g in gains.items() if g >= best - TIE_TOL)
    return z, best


def _check_budget(k, pool):
    if k < 1:
        raise ValueError("budget k must be at least 1")
    return min(k, len(pool))


def simple_greedy(spec: ChainSpec, k: int, *, candidates=None, workers: int | None = None,
                  solver: ReachSolver | None = None) -> tuple[tuple[int, ...], GreedyTrace]:
    """Evaluate every remaining candidate each round and add the best one.

    Candidate evaluations within a round run on ``workers`` threads
    (default ``$REACHMAX_THREADS`` or 1); the merge is order independent.
    """
    pool = _candidates(spec, candidates)
    budget = _check_budget(k, pool)
    workers = workers or default_workers()
    t0 = time.perf_counter()
    base = solver.with_selection(()) if solver is not None else ReachSolver(spec)
    trace = GreedyTrace("greedy", f_initial=base.f)
    remaining = list(pool)
    executor = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for _ in range(budget):
            v_prev = base.f
            if executor is None:
                ext = [base.extend(z) for z in remaining]
            else:
                ext = list(executor.map(base.extend, remaining))
            trace.n_evals += len(ext)
            trace.n_updates += len(ext)
            trace.evals_per_round.append(len(ext))
            gains = {z: e.f - v_prev for z, e in zip(remaining, ext)}
            z, best = _pick(gains)
            if best <= SATURATION_GAIN:
                trace.elapsed.append(time.perf_counter() - t0)
                break
            base = ext[remaining.index(z)]
            remaining.remove(z)
            trace.chosen.append(z)
            trace.gains.append(gains[z])
            trace.f_values.append(base.f)
            trace.elapsed.append(time.perf_counter() - t0)
    finally:
        if executor is not None:
            executor.shutdown()
    trace.unused_budget = budget - len(trace.chosen)
    return state_set(trace.chosen, spec.n_transient), trace


def lazy_greedy(spec: ChainSpec, k: int, *, candidates=None, audit: bool = False,
                solver: ReachSolver | None = None) -> tuple[tuple[int, ...], GreedyTrace]:
    """CELF: re-evaluate only the state on top of a queue of stale gain bounds.

    Bounds start at infinity. A state whose bound was refreshed this round
    and still sits on top is the greedy choice, since by submodularity no
    stale bound can understate a current gain. With ``audit`` set, every
    acceptance is re-checked against a full scan (not counted in the trace).
    """
    pool = _candidates(spec, candidates)
    budget = _check_budget(k, pool)
    t0 = time.perf_counter()
    base = solver.with_selection(()) if solver is not None else ReachSolver(spec)
    trace = GreedyTrace("lazy-greedy", f_initial=base.f)
    queue = LazyQueue(pool)
    for _ in range(budget):
        v_prev = base.f
        queue.new_round()
        cache: dict[int, ReachSolver] = {}
        evals = 0

        def refresh(z):
            nonlocal evals
            cache[z] = base.extend(z)
            evals += 1
            queue.push(z, cache[z].f - v_prev, fresh=True)

        while True:
            z, bound = queue.top()
            if z not in queue.fresh:
                queue.pop()
                refresh(z)
                continue
            # top is fresh, so `bound` is the best current gain; settle ties by index
            tied = queue.pop_at_least(bound - TIE_TOL)
            z = min(w for w, _ in tied if w in queue.fresh)
            stale = [w for w, _ in tied if w not in queue.fresh and w < z]
            if stale:
                for w, key in tied:
                    if w not in stale:
                        queue.push(w, key, fresh=w in queue.fresh)
                for w in stale:
                    refresh(w)
                continue
            for w, key in tied:
                if w != z:
                    queue.push(w, key, fresh=w in queue.fresh)
            gain = cache[z].f - v_prev
            break

        trace.n_evals += evals
        trace.n_updates += evals
        trace.evals_per_round.append(evals)
        if audit:
            _audit_round(base, queue, z, gain, v_prev, pool, trace.chosen)
        if bound <= SATURATION_GAIN:
            trace.elapsed.append(time.perf_counter() - t0)
            break
        base = cache[z]
        trace.chosen.append(z)
        trace.gains.append(gain)
        trace.f_values.append(base.f)
        trace.elapsed.append(time.perf_counter() - t0)
    trace.unused_budget = budget - len(trace.chosen)
    return state_set(trace.chosen, spec.n_transient), trace


def _audit_round(base, queue, z, gain, v_prev, pool, chosen):
    remaining = [w for w in pool if w not in chosen]
    gains = {w: base.extend(w).f - v_prev for w in remaining}
    expect, best = _pick(gains)
    if expect != z or abs(best - gain) > AUDIT_TOL:
        raise LazyBoundViolation(f"lazy pick {z} (gain {gain!r}) but full scan gives {expect} (gain {best!r})")
    for key, w in queue._heap:
        if -key < gains[w] - AUDIT_TOL:
            raise LazyBoundViolation(f"bound {-key!r} for state {w} below its gain {gains[w]!r}")
