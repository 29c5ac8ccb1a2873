"""Item/tag browsing model and its tags-only folding.

A surfer on tag ``j`` moves to item ``i`` with probability proportional to
the edge weight ``w_ij``; from an item it leaves the system with probability
``epsilon`` and otherwise follows one of the item's tags (or optional direct
item links) uniformly. Tagging the new item with ``j`` inserts it into
``j``'s item list with weight ``sigma_weight``, so the selected row of ``j``
is the unselected row scaled by ``W_j / (W_j + w)`` plus absorption
``w / (W_j + w)`` at the target.

Tags occupy transient states ``1..T`` in both the full chain and the folded
chain, so one selection means the same thing in both.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .chain import ChainSpec
from .errors import InvalidGraph
from .objective import eval_reach

NULL = "null"
SIGMA = "sigma"
DEFAULT_EPSILON = 0.1


@dataclass(frozen=True, eq=False)
class TagGraph:
    """Weighted item/tag incidence structure.

    ``edges`` holds ``(item index, tag index, weight)`` with 0-based indices
    into ``items`` and ``tags``. ``candidates`` and ``true_tags`` are tag
    labels; ``pi_tags`` is a distribution over all tags. ``item_links`` are
    optional directed ``(item, item)`` index pairs.
    """

    items: tuple[str, ...]
    tags: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]
    epsilon: float = DEFAULT_EPSILON
    sigma_weight: float | None = None
    candidates: tuple[str, ...] | None = None
    true_tags: tuple[str, ...] = ()
    pi_tags: np.ndarray | None = None
    item_links: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("items", tuple(map(str, self.items)))
        set_("tags", tuple(map(str, self.tags)))
        if not self.items or not self.tags:
            raise InvalidGraph("graph needs at least one item and one tag")
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        set_("edges", edges)
        n_items, n_tags = len(self.items), len(self.tags)
        if len(set(self.items)) != n_items or len(set(self.tags)) != n_tags:
            raise InvalidGraph("item and tag labels must be unique")
        seen = set()
        for i, j, w in edges:
            if not (0 <= i < n_items and 0 <= j < n_tags):
                raise InvalidGraph(f"edge ({i}, {j}) out of range")
            if not w > 0:
                raise InvalidGraph(f"edge {self.items[i]!r}-{self.tags[j]!r} has non-positive weight {w}")
            if (i, j) in seen:
                raise InvalidGraph(f"duplicate edge {self.items[i]!r}-{self.tags[j]!r}")
            seen.add((i, j))
        if len({i for i, _, _ in edges}) != n_items:
            raise InvalidGraph("every item needs at least one tag")
        if len({j for _, j, _ in edges}) != n_tags:
            raise InvalidGraph("every tag needs at least one item")
        if not 0 < self.epsilon < 1:
            raise InvalidGraph(f"epsilon must lie in (0, 1), got {self.epsilon}")
        for a, b in self.item_links:
            if not (0 <= a < n_items and 0 <= b < n_items) or a == b:
                raise InvalidGraph(f"bad item link ({a}, {b})")
        set_("item_links", tuple(sorted({(int(a), int(b)) for a, b in self.item_links})))

        if self.sigma_weight is None:
            set_("sigma_weight", float(np.median(self.item_weights)))
        if not self.sigma_weight > 0:
            raise InvalidGraph("sigma_weight must be positive")
        index = {t: j for j, t in enumerate(self.tags)}
        for name in ("candidates", "true_tags"):
            labels = getattr(self, name)
            if labels is None:
                continue
            labels = tuple(map(str, labels))
            missing = [t for t in labels if t not in index]
            if missing:
                raise InvalidGraph(f"{name} mentions unknown tags {missing[:5]}")
            set_(name, labels)
        if self.candidates is None:
            set_("candidates", self.tags)
        if len(set(self.candidates)) != len(self.candidates) or not self.candidates:
            raise InvalidGraph("candidates must be a non-empty list of distinct tags")
        if self.pi_tags is None:
            pi = np.zeros(n_tags)
            pi[[index[t] for t in self.candidates]] = 1.0 / len(self.candidates)
        else:
            pi = np.asarray(self.pi_tags, dtype=float)
            if pi.shape != (n_tags,) or (pi < 0).any() or abs(pi.sum() - 1) > 1e-9:
                raise InvalidGraph("pi_tags must be a distribution over the tags")
        pi = pi.copy()
        pi.flags.writeable = False
        set_("pi_tags", pi)

    @classmethod
    def from_edges(cls, triples: Iterable[tuple[str, str, float]], **kwargs) -> "TagGraph":
        """Build from ``(item label, tag label, weight)``; labels keep first-seen order."""
        items: dict[str, int] = {}
        tags: dict[str, int] = {}
        edges = []
        for item, tag, w in triples:
            i = items.setdefault(str(item), len(items))
            j = tags.setdefault(str(tag), len(tags))
            edges.append((i, j, w))
        return cls(items=tuple(items), tags=tuple(tags), edges=tuple(edges), **kwargs)

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def _incidence(self) -> sp.csr_matrix:
        """Tag x item matrix of edge weights."""
        i, j, w = zip(*self.edges)
        return sp.csr_matrix((w, (j, i)), shape=(self.n_tags, self.n_items))

    @property
    def tag_mass(self) -> np.ndarray:
        """``W_j``: total weight of the items under each tag."""
        return np.asarray(self._incidence().sum(axis=1)).ravel()

    @property
    def tag_degree(self) -> np.ndarray:
        return np.bincount([j for _, j, _ in self.edges], minlength=self.n_tags)

    @property
    def item_degree(self) -> np.ndarray:
        return np.bincount([i for i, _, _ in self.edges], minlength=self.n_items)

    @property
    def item_weights(self) -> np.ndarray:
        """Mean incident edge weight per item (the item weight when edges agree)."""
        total = np.bincount([i for i, _, _ in self.edges], weights=[w for _, _, w in self.edges],
                            minlength=self.n_items)
        return total / self.item_degree

    def tag_state(self, tag: str) -> int:
        return self.tags.index(tag) + 1

    @property
    def candidate_states(self) -> tuple[int, ...]:
        return tuple(sorted(self.tag_state(t) for t in self.candidates))

    def labels_of(self, states) -> list[str]:
        return [self.tags[z - 1] for z in states]


def _item_moves(g: TagGraph):
    """Item rows: (item->tag, item->item, item->exit) with ``(1 - eps)`` split over slots."""
    n_i, n_t = g.n_items, g.n_tags
    links_out = np.bincount([a for a, _ in g.item_links], minlength=n_i) if g.item_links else np.zeros(n_i)
    slots = g.item_degree + links_out
    share = (1.0 - g.epsilon) / slots
    rows, cols = zip(*[(i, j) for i, j, _ in g.edges])
    to_tags = sp.csr_matrix((share[list(rows)], (rows, cols)), shape=(n_i, n_t))
    if g.item_links:
        a, b = zip(*g.item_links)
        to_items = sp.csr_matrix((share[list(a)], (a, b)), shape=(n_i, n_i))
    else:
        to_items = sp.csr_matrix((n_i, n_i))
    return to_tags, to_items, np.full(n_i, g.epsilon)


def _tag_rows(g: TagGraph):
    """Unselected tag->item rows, the scale applied on selection, and the target share."""
    inc = g._incidence()
    mass = g.tag_mass
    r_bar = sp.diags(1.0 / mass) @ inc
    scale = mass / (mass + g.sigma_weight)
    absorb = g.sigma_weight / (mass + g.sigma_weight)
    return sp.csr_matrix(r_bar), scale, absorb


def build_bipartite(g: TagGraph) -> ChainSpec:
    """Full chain over tag states ``1..T`` followed by item states ``T+1..T+I``."""
    n_t, n_i = g.n_tags, g.n_items
    n = n_t + n_i
    r_bar, scale, absorb = _tag_rows(g)
    to_tags, to_items, exit_ = _item_moves(g)
    zero_tt = sp.csr_matrix((n_t, n_t))
    col = lambda v: sp.csr_matrix(np.asarray(v, dtype=float).reshape(-1, 1))  # noqa: E731

    item_block = sp.hstack([to_tags, to_items, col(exit_), col(np.zeros(n_i))])
    q_bar = sp.vstack([sp.hstack([zero_tt, r_bar, col(np.zeros(n_t)), col(np.zeros(n_t))]), item_block])
    q = sp.vstack([sp.hstack([zero_tt, sp.diags(scale) @ r_bar, col(np.zeros(n_t)), col(absorb)]), item_block])
    pi = np.concatenate([g.pi_tags, np.zeros(n_i)])
    labels = [f"tag:{t}" for t in g.tags] + [f"item:{i}" for i in g.items]
    return ChainSpec(n_transient=n, absorbing=(NULL, SIGMA), sigma_index=1, pi=pi,
                     q=q, q_bar=q_bar, state_labels=labels)


@dataclass(frozen=True, eq=False)
class FoldedChain:
    """Tags-only chain: the two-step tag -> item -> tag walk collapsed."""

    spec: ChainSpec
    graph: TagGraph
    tag_mass: np.ndarray
    absorption: np.ndarray  # target share of each tag's row once selected

    @property
    def candidates(self) -> tuple[int, ...]:
        return self.graph.candidate_states


def fold(g: TagGraph) -> FoldedChain:
    n_t = g.n_tags
    r_bar, scale, absorb = _tag_rows(g)
    to_tags, to_items, exit_ = _item_moves(g)
    rhs = sp.hstack([to_tags, sp.csr_matrix(exit_.reshape(-1, 1))]).tocsc()
    if g.item_links:
        # eliminate item->item moves: X = (I - P_ii)^{-1} [P_it | exit]
        lu = splu(sp.csc_matrix(sp.identity(g.n_items) - to_items))
        after_item = sp.csr_matrix(lu.solve(rhs.toarray()))
    else:
        after_item = sp.csr_matrix(rhs)
    moves = sp.csr_matrix(r_bar @ after_item)  # tag -> (tag..., exit)
    moves.eliminate_zeros()
    sigma_col = sp.csr_matrix((n_t, 1))
    q_bar = sp.hstack([moves, sigma_col])
    q = sp.hstack([sp.diags(scale) @ moves, sp.csr_matrix(absorb.reshape(-1, 1))])
    spec = ChainSpec(n_transient=n_t, absorbing=(NULL, SIGMA), sigma_index=1, pi=g.pi_tags,
                     q=q, q_bar=q_bar, state_labels=g.tags)
    return FoldedChain(spec=spec, graph=g, tag_mass=g.tag_mass, absorption=absorb)


def fold_equivalence_check(g: TagGraph, s) -> tuple[float, float, float]:
    """Objective on the folded and on the full chain for tag selection ``s``."""
    f_folded = eval_reach(fold(g).spec, s).f
    f_full = eval_reach(build_bipartite(g), s).f
    return f_folded, f_full, abs(f_folded - f_full)
