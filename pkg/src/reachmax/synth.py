"""Synthetic item/tag corpora with heavy-tailed item weights and tag degrees."""

from __future__ import annotations

import numpy as np

from .tags import DEFAULT_EPSILON, TagGraph


def gen_synthetic(n_items: int, n_tags: int, edges_per_item: int, weight_exponent: float, seed: int,
                  *, n_true_tags: int = 5, epsilon: float = DEFAULT_EPSILON,
                  sigma_weight: float | None = None) -> TagGraph:
    """Random tag graph, deterministic per ``seed``.

    Item weights are ``1 + Pareto(weight_exponent)``. Each item picks
    ``edges_per_item`` distinct tags one at a time with probability
    proportional to ``degree + 1``; tags left unused are then given one
    random item. The target's true tags are drawn the same way and listed
    by decreasing degree. Every edge carries its item's weight.
    """
    if n_items < 1 or n_tags < 1 or edges_per_item < 1:
        raise ValueError("sizes must be positive")
    if weight_exponent <= 0:
        raise ValueError("weight_exponent must be positive")
    rng = np.random.default_rng(seed)
    weights = rng.pareto(weight_exponent, n_items) + 1.0
    degree = np.zeros(n_tags)
    per_item = min(edges_per_item, n_tags)
    edges = set()
    for i in range(n_items):
        for _ in range(per_item):
            p = degree + 1.0
            p[[j for (a, j) in edges if a == i]] = 0.0
            j = int(rng.choice(n_tags, p=p / p.sum()))
            edges.add((i, j))
            degree[j] += 1
    for j in np.flatnonzero(degree == 0):
        edges.add((int(rng.integers(n_items)), int(j)))
        degree[j] += 1

    n_true = min(n_true_tags, n_tags)
    p = degree + 1.0
    true_idx = rng.choice(n_tags, size=n_true, replace=False, p=p / p.sum()) if n_true else []
    true_idx = sorted((int(j) for j in true_idx), key=lambda j: (-degree[j], j))

    wi, wt = len(str(n_items - 1)), len(str(n_tags - 1))
    items = tuple(f"i{i:0{wi}d}" for i in range(n_items))
    tags = tuple(f"t{j:0{wt}d}" for j in range(n_tags))
    return TagGraph(items=items, tags=tags,
                    edges=tuple((i, j, float(weights[i])) for i, j in sorted(edges)),
                    epsilon=epsilon, sigma_weight=sigma_weight,
                    true_tags=tuple(tags[j] for j in true_idx))
