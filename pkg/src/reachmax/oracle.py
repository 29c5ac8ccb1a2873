"""Independent ground truth for the optimizer.

Nothing here touches the LU update kernel: objective values come from dense
LAPACK solves or from simulating walks, optima from enumeration, and the
vertex-cover gadgets have closed-form absorption values.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .chain import ChainSpec, selection_mask, state_set, unreachable_states
from .errors import CombinatorialLimit, InvalidGraph, SingularMatrix

NULL = "null"
SIGMA = "sigma"
MC_CHUNKS = 16


def _dense_system(spec: ChainSpec, s):
    n = spec.n_transient
    mask = selection_mask(n, state_set(s, n))
    rows = np.where(mask[:, None], spec.q.toarray(), spec.q_bar.toarray())
    return np.eye(n) - rows[:, :n], rows[:, spec.sigma_column]


def dense_solve_c(spec: ChainSpec, s) -> np.ndarray:
    m, b = _dense_system(spec, s)
    try:
        c = np.linalg.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(f"dense solve failed: {exc}") from None
    if not np.all(np.isfinite(c)):
        raise SingularMatrix("dense solve produced non-finite values")
    return c


def dense_solve_f(spec: ChainSpec, s) -> float:
    return float(spec.pi @ dense_solve_c(spec, s))


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    n_walks: int
    horizon: int
    seed: int
    hits: int = 0
    truncated: int = 0   # walks still transient at the horizon, counted as misses


def _sampler(spec: ChainSpec, s):
    """CSR rows of rho(S) with per-row cumulative sums offset by the row index."""
    n = spec.n_transient
    mask = selection_mask(n, state_set(s, n)).astype(float)
    rows = sp.csr_matrix(sp.diags(mask) @ spec.q + sp.diags(1.0 - mask) @ spec.q_bar)
    rows.eliminate_zeros()
    rows.sort_indices()
    cum = np.empty_like(rows.data)
    for i in range(n):
        lo, hi = rows.indptr[i], rows.indptr[i + 1]
        cum[lo:hi] = np.cumsum(rows.data[lo:hi]) + i
    return rows, cum


def _walk_chunk(rows, cum, start_cdf, n_walks, horizon, sigma_col, n, seed_seq):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    state = np.searchsorted(start_cdf, rng.random(n_walks) * start_cdf[-1], side="right")
    state = np.minimum(state, n - 1)
    hits = 0
    active = state
    for _ in range(horizon):
        if active.size == 0:
            break
        u = rng.random(active.size)
        idx = np.searchsorted(cum, active + u, side="right")
        # guard against rows summing to slightly under one
        idx = np.minimum(idx, rows.indptr[active + 1] - 1)
        nxt = rows.indices[idx]
        hits += int(np.count_nonzero(nxt == sigma_col))
        active = nxt[nxt < n]
    return hits, int(active.size)


def monte_carlo_f(spec: ChainSpec, s, n_walks: int = 100_000, horizon: int | None = None,
                  seed: int = 0, workers: int = 1) -> McEstimate:
    """Simulate walks from ``pi`` and count absorptions at the target.

    Walks still transient after ``horizon`` steps (default ``100 n``) count as
    misses, so the estimate is biased low by at most the surviving mass.
    Walks are split into a fixed number of chunks with independent Philox
    streams, so the result does not depend on ``workers``.
    """
    if n_walks < 1:
        raise ValueError("n_walks must be positive")
    n = spec.n_transient
    horizon = 100 * n if horizon is None else int(horizon)
    rows, cum = _sampler(spec, s)
    start_cdf = np.cumsum(spec.pi)
    streams = np.random.SeedSequence(seed).spawn(MC_CHUNKS)
    sizes = [n_walks // MC_CHUNKS + (i < n_walks % MC_CHUNKS) for i in range(MC_CHUNKS)]
    jobs = [(rows, cum, start_cdf, m, horizon, spec.sigma_column, n, ss)
            for m, ss in zip(sizes, streams) if m]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _walk_chunk(*a), jobs))
    else:
        parts = [_walk_chunk(*a) for a in jobs]
    hits = sum(h for h, _ in parts)
    truncated = sum(t for _, t in parts)
    p = hits / n_walks
    return McEstimate(estimate=p, stderr=math.sqrt(p * (1 - p) / n_walks), n_walks=n_walks,
                      horizon=horizon, seed=seed, hits=hits, truncated=truncated)


def exhaustive_opt(spec: ChainSpec, k: int, candidates=None, limit: int = 10**6,
                   reverse: bool = False) -> tuple[tuple[int, ...], float]:
    """Best ``k``-subset by enumeration; ties go to the lexicographically smallest set.

    ``reverse`` enumerates in the opposite order (same answer, used to
    cross-check the enumeration itself).
    """
    pool = tuple(range(1, spec.n_transient + 1)) if candidates is None else state_set(candidates, spec.n_transient)
    k = min(k, len(pool))
    count = math.comb(len(pool), k)
    if count > limit:
        raise CombinatorialLimit(f"C({len(pool)}, {k}) = {count} subsets exceeds limit {limit}")
    subsets = list(itertools.combinations(pool, k))
    values = {t: dense_solve_f(spec, t) for t in (reversed(subsets) if reverse else subsets)}
    best = max(values.values())
    winner = min(t for t, v in values.items() if v >= best - 1e-12)
    return winner, values[winner]


def vc_threshold(n: int, k: int, epsilon: float) -> float:
    """Reach value of a size-``k`` vertex cover in the gadget chain."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return 1.0 - (n - k) / n * epsilon


def _normalise_graph(edges, nodes=None):
    adj: dict = {}
    for u, v in edges:
        if u == v:
            raise InvalidGraph(f"self-loop at {u!r}")
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    for u in nodes or ():
        adj.setdefault(u, set())
    if not adj:
        raise InvalidGraph("graph has no vertices")
    isolated = [u for u, nb in adj.items() if not nb]
    if isolated:
        raise InvalidGraph(f"isolated vertices: {sorted(isolated, key=str)[:5]}")
    order = sorted(adj, key=lambda x: (not isinstance(x, (int, np.integer)), x if isinstance(x, (int, np.integer)) else str(x)))
    return order, {u: sorted(adj[u], key=order.index) for u in order}


@dataclass(frozen=True, eq=False)
class VcInstance:
    """Vertex-cover gadget: node ``i`` of ``G`` is transient state ``i`` (1-based, sorted order).

    ``bipartite`` is the tag/item variant: tag states ``1..n`` for nodes, then
    one item state per oriented edge ``(i, j)`` that leads to tag ``j``.
    """

    nodes: tuple
    edges: tuple
    epsilon: float
    chain: ChainSpec
    bipartite: ChainSpec

    @property
    def n(self) -> int:
        return len(self.nodes)

    def threshold(self, k: int) -> float:
        return vc_threshold(self.n, k, self.epsilon)

    def selection(self, cover) -> tuple[int, ...]:
        index = {u: i + 1 for i, u in enumerate(self.nodes)}
        return tuple(sorted(index[u] for u in cover))

    def is_cover(self, cover) -> bool:
        cover = set(cover)
        return all(u in cover or v in cover for u, v in self.edges)


def gen_vertex_cover_instance(edges, epsilon: float, nodes=None) -> VcInstance:
    if not 0 < epsilon < 1:
        raise InvalidGraph("epsilon must lie in (0, 1)")
    order, adj = _normalise_graph(edges, nodes)
    n = len(order)
    index = {u: i + 1 for i, u in enumerate(order)}
    pi = np.full(n, 1.0 / n)

    q = {i: {SIGMA: 1.0} for i in range(1, n + 1)}
    q_bar = {}
    for u in order:
        row = {NULL: epsilon}
        for v in adj[u]:
            row[index[v]] = (1.0 - epsilon) / len(adj[u])
        q_bar[index[u]] = row
    chain = ChainSpec.from_rows(n, (NULL, SIGMA), SIGMA, pi, q, q_bar,
                                state_labels=[str(u) for u in order], renormalize=False)

    arcs = [(u, v) for u in order for v in adj[u]]
    m = n + len(arcs)
    bq, bq_bar = {}, {}
    for u in order:
        bq[index[u]] = {SIGMA: 1.0}
        bq_bar[index[u]] = {}
    labels = [f"tag:{u}" for u in order]
    for a, (u, v) in enumerate(arcs, start=n + 1):
        bq_bar[index[u]][a] = 1.0 / len(adj[u])
        row = {index[v]: 1.0 - epsilon, NULL: epsilon}
        bq[a] = row
        bq_bar[a] = dict(row)
        labels.append(f"item:{u}->{v}")
    bpi = np.zeros(m)
    bpi[:n] = 1.0 / n
    bipartite = ChainSpec.from_rows(m, (NULL, SIGMA), SIGMA, bpi, bq, bq_bar,
                                    state_labels=labels, renormalize=False)
    edge_list = tuple((u, v) for u in order for v in adj[u] if order.index(u) < order.index(v))
    return VcInstance(nodes=tuple(order), edges=edge_list, epsilon=float(epsilon),
                      chain=chain, bipartite=bipartite)


def random_graph(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """G(n, p) on nodes ``1..n``, patched so that no vertex is isolated."""
    edges = {(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if rng.random() < p}
    touched = {u for e in edges for u in e}
    for u in range(1, n + 1):
        if u not in touched:
            v = int(rng.integers(1, n))
            v = v + 1 if v >= u else v
            edges.add((min(u, v), max(u, v)))
            touched.update((u, v))
    return sorted(edges)


def random_chain(n: int, rng: np.random.Generator, *, density: float = 0.3, n_competitors: int = 1,
                 exit_prob: float = 0.7, unlinked: float = 0.1, pi_support: float = 1.0) -> ChainSpec:
    """A random chain satisfying every validation invariant.

    Each unselected row spreads its mass over a few transient states and,
    with probability ``exit_prob``, the competing absorbers. A selected row
    shrinks every non-target entry by its own factor in ``(0, 1]`` and gives
    the freed mass to the target; a fraction ``unlinked`` of states keep
    ``q == q_bar``.
    """
    competitors = tuple(NULL if n_competitors == 1 else f"{NULL}{a}" for a in range(n_competitors))
    absorbing = competitors + (SIGMA,)
    q, q_bar = {}, {}
    exits = rng.random(n) < exit_prob
    exits[rng.integers(n)] = True
    for i in range(1, n + 1):
        m = 1 + rng.binomial(max(n - 1, 0), density)
        targets = rng.choice(np.arange(1, n + 1), size=min(m, n), replace=False)
        w = rng.random(len(targets)) + 0.05
        row = {int(t): float(x) for t, x in zip(targets, w)}
        if exits[i - 1]:
            for a in competitors:
                row[a] = float(rng.random() * 0.5 + 0.05) * len(targets) / len(competitors)
        total = sum(row.values())
        q_bar[i] = {key: v / total for key, v in row.items()}
    # patch rows that cannot reach absorption by pointing them at an exiting state
    exiting = [i for i in range(1, n + 1) if any(isinstance(key, str) for key in q_bar[i])]
    spec = ChainSpec.from_rows(n, absorbing, SIGMA, np.full(n, 1.0 / n), q_bar, q_bar)
    for i0 in unreachable_states(spec.q_bar, n):
        row = q_bar[i0 + 1]
        target = exiting[int(rng.integers(len(exiting)))]
        row = {key: v * 0.5 for key, v in row.items()}
        row[target] = row.get(target, 0.0) + 0.5
        q_bar[i0 + 1] = row
    for i in range(1, n + 1):
        if rng.random() < unlinked:
            q[i] = dict(q_bar[i])
            continue
        shrink = rng.uniform(0.05, 0.95)
        row = {key: v * shrink * rng.uniform(0.6, 1.0) for key, v in q_bar[i].items()}
        row[SIGMA] = 1.0 - sum(row.values())
        q[i] = row
    pi = np.where(rng.random(n) < pi_support, rng.random(n) + 0.01, 0.0)
    if pi.sum() == 0:
        pi[rng.integers(n)] = 1.0
    return ChainSpec.from_rows(n, absorbing, SIGMA, pi / pi.sum(), q, q_bar, renormalize=False)
