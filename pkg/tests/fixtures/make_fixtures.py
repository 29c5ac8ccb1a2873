"""Regenerate the fixture corpus and its frozen dense-solve values.

Run from the repository root: ``python tests/fixtures/make_fixtures.py``.
Expected values come from the dense LAPACK oracle only.
"""

import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

from conftest import make_e1, make_e2  # noqa: E402
from reachmax.io import format_bipartite, format_chain  # noqa: E402
from reachmax.oracle import dense_solve_f, gen_vertex_cover_instance, random_chain  # noqa: E402
from reachmax.synth import gen_synthetic  # noqa: E402
from reachmax.tags import TagGraph, fold  # noqa: E402


def chains():
    yield "e1", make_e1()
    yield "e2", make_e2()
    yield "vc_path", gen_vertex_cover_instance([(1, 2), (2, 3)], 0.1).chain
    yield "vc_triangle", gen_vertex_cover_instance([(1, 2), (2, 3), (1, 3)], 0.1).chain
    yield "vc_path_bipartite", gen_vertex_cover_instance([(1, 2), (2, 3)], 0.1).bipartite
    rng = np.random.default_rng(2024)
    for i in range(16):
        n = int(rng.integers(3, 81))
        kw = {"n_competitors": 1 + i % 3, "pi_support": 1.0 if i % 4 else 0.3,
              "density": float(rng.uniform(0.02, 0.2))}
        yield f"random_{i:02d}", random_chain(n, rng, **kw)
    yield "synthetic_folded", fold(gen_synthetic(300, 100, 2, 1.5, 0)).spec


def selections(spec, rng):
    n = spec.n_transient
    out = [[], list(range(1, n + 1))]
    for _ in range(4):
        size = int(rng.integers(1, min(n, 25) + 1))
        s = sorted(int(z) for z in rng.choice(np.arange(1, n + 1), size, replace=False))
        if s not in out:
            out.append(s)
    return out


def main():
    rng = np.random.default_rng(7)
    expected = {}
    for name, spec in chains():
        (HERE / f"{name}.chain").write_text(format_chain(spec))
        expected[name] = [{"set": s, "f": dense_solve_f(spec, s)} for s in selections(spec, rng)]
    (HERE / "expected_f.json").write_text(json.dumps(expected) + "\n")
    e3 = TagGraph.from_edges([("x", "a", 1.0)], epsilon=0.1, sigma_weight=1.0)
    (HERE / "e3.tsv").write_text(format_bipartite(e3))
    (HERE / "synthetic_small.tsv").write_text(format_bipartite(gen_synthetic(40, 12, 2, 1.5, 5)))


if __name__ == "__main__":
    main()
