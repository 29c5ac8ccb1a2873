"""Heuristic tag selections that the greedy optimizer is compared against.

Every selector returns a sorted tuple of 1-based tag states drawn from the
graph's candidate tags. Rankings break ties (scores within ``TIE_TOL``)
towards the lowest state index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NonConvergence
from .tags import TagGraph, _item_moves, _tag_rows

TIE_TOL = 1e-12
METHODS = ("pagerank", "degree-high", "degree-low", "one-step", "random", "true-tags")


@dataclass(frozen=True)
class BaselineConfig:
    method: str = "pagerank"
    damping: float = 0.85
    seed: int = 0
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.method not in METHODS:
            raise ValueError(f"unknown baseline {self.method!r}; expected one of {METHODS}")


def top_k(scores, states, k: int) -> tuple[int, ...]:
    """The ``k`` highest-scoring states; near-ties go to the lowest index."""
    remaining = sorted((int(z), float(v)) for z, v in zip(states, scores))
    out = []
    for _ in range(min(k, len(remaining))):
        best = max(v for _, v in remaining)
        pick = next(i for i, (_, v) in enumerate(remaining) if v >= best - TIE_TOL)
        out.append(remaining.pop(pick)[0])
    return tuple(sorted(out))


def _check_k(k):
    if k < 1:
        raise ValueError("budget k must be at least 1")


def pagerank_scores(g: TagGraph, damping: float = 0.85, tol: float = 1e-10,
                    max_iter: int = 10_000) -> np.ndarray:
    """PageRank over all tag and item nodes (tags first), target not attached.

    Transitions follow the unselected browsing rows with the exit mass
    dropped, i.e. item rows are renormalised over their tags and links.
    """
    r_bar, _, _ = _tag_rows(g)
    to_tags, to_items, _ = _item_moves(g)
    n_t, n_i = g.n_tags, g.n_items
    p = sp.bmat([[None, r_bar], [to_tags, to_items]], format="csr")
    p = sp.diags(1.0 / np.asarray(p.sum(axis=1)).ravel()) @ p
    pt = sp.csr_matrix(p.T)
    n = n_t + n_i
    x = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        nxt = damping * (pt @ x) + (1.0 - damping) / n
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - x).sum())
        x = nxt
        if residual < tol:
            return x
    raise NonConvergence(f"PageRank did not converge in {max_iter} iterations", residual, max_iter)


def pagerank_select(g: TagGraph, k: int, cfg: BaselineConfig | None = None) -> tuple[int, ...]:
    _check_k(k)
    cfg = cfg or BaselineConfig()
    x = pagerank_scores(g, cfg.damping, cfg.tol, cfg.max_iter)
    states = g.candidate_states
    return top_k(x[np.asarray(states) - 1], states, k)


def degree_select(g: TagGraph, k: int, highest: bool = True) -> tuple[int, ...]:
    """Candidates with the most (or fewest) items."""
    _check_k(k)
    states = g.candidate_states
    deg = g.tag_degree[np.asarray(states) - 1].astype(float)
    return top_k(deg if highest else -deg, states, k)


def one_step_select(g: TagGraph, k: int) -> tuple[int, ...]:
    """Rank by the chance of reaching the new item on the first step."""
    _check_k(k)
    states = g.candidate_states
    _, _, absorb = _tag_rows(g)
    idx = np.asarray(states) - 1
    return top_k(g.pi_tags[idx] * absorb[idx], states, k)


def random_select(g: TagGraph, k: int, seed: int = 0) -> tuple[int, ...]:
    _check_k(k)
    states = np.asarray(g.candidate_states)
    rng = np.random.default_rng(seed)
    return tuple(sorted(int(z) for z in rng.choice(states, min(k, len(states)), replace=False)))


def true_tags_select(g: TagGraph, k: int) -> tuple[int, ...]:
    """The first ``k`` listed true tags that are candidates.

    Returns fewer than ``k`` states when the list is shorter.
    """
    _check_k(k)
    allowed = set(g.candidates)
    listed = [t for t in g.true_tags if t in allowed]
    return tuple(sorted(g.tag_state(t) for t in listed[:k]))


def select(method: str, g: TagGraph, k: int, cfg: BaselineConfig | None = None) -> tuple[int, ...]:
    cfg = cfg or BaselineConfig(method=method)
    if method == "pagerank":
        return pagerank_select(g, k, cfg)
    if method == "degree-high":
        return degree_select(g, k, highest=True)
    if method == "degree-low":
        return degree_select(g, k, highest=False)
    if method == "one-step":
        return one_step_select(g, k)
    if method == "random":
        return random_select(g, k, cfg.seed)
    if method == "true-tags":
        return true_tags_select(g, k)
    raise ValueError(f"unknown baseline {method!r}; expected one of {METHODS}")
