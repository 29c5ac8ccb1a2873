from pathlib import Path

import numpy as np
import pytest

from reachmax.errors import ChainValidationError, DuplicateEdge, ParseError
from reachmax.io import (format_bipartite, format_chain, format_csv, parse_bipartite,
                         parse_bipartite_file, parse_chain, parse_chain_file, parse_edge_list,
                         read_csv)
from reachmax.oracle import random_chain

FIXTURES = Path(__file__).parent / "fixtures"

E1_TEXT = """\
CHAIN v1
n_transient 1
absorbing null *sigma   # target marked with a star
PI
1 1
QBAR
1 1 0.5
1 null 0.5
Q
1 1 0.4
1 sigma 0.2
1 null 0.4
"""


class TestChainFormat:
    def test_parse_e1(self, e1):
        spec = parse_chain(E1_TEXT)
        assert spec.n_transient == 1 and spec.absorbing == ("null", "sigma") and spec.sigma == "sigma"
        assert spec.row("q", 1) == e1.row("q", 1)
        assert spec.row("q_bar", 1) == e1.row("q_bar", 1)

    def test_short_row_cites_line(self):
        text = E1_TEXT.replace("1 null 0.5", "1 null 0.3")
        with pytest.raises(ParseError) as err:
            parse_chain(text)
        assert err.value.line == 7
        assert "QBAR row 1" in str(err.value)

    def test_drift_renormalized(self):
        spec = parse_chain(E1_TEXT.replace("1 null 0.5", "1 null 0.5000000001"))
        assert ("q_bar", 1) in spec.renormalized

    @pytest.mark.parametrize("old,new", [
        ("CHAIN v1", "CHAIN v2"),
        ("n_transient 1", "n_transient x"),
        ("absorbing null *sigma", "absorbing null sigma"),
        ("absorbing null *sigma", "absorbing *null *sigma"),
        ("1 sigma 0.2", "1 omega 0.2"),
        ("1 sigma 0.2", "2 sigma 0.2"),
        ("1 sigma 0.2", "1 sigma abc"),
        ("1 sigma 0.2", "1 sigma 0.2 extra"),
        ("Q\n1 1 0.4", "Q\n1 1 0.4\n1 1 0.4"),
    ])
    def test_malformed(self, old, new):
        with pytest.raises(ParseError):
            parse_chain(E1_TEXT.replace(old, new, 1))

    def test_validation_surfaced(self):
        bad = E1_TEXT.replace("1 1 0.4\n1 sigma 0.2", "1 1 0.6\n1 sigma 0.0")
        with pytest.raises(ChainValidationError) as err:
            parse_chain(bad)
        assert "domination" in err.value.report.kinds()
        assert not parse_chain(bad, validate=False).q is None

    def test_round_trip_is_canonical(self, rng):
        for _ in range(10):
            spec = random_chain(int(rng.integers(1, 30)), rng, n_competitors=int(rng.integers(1, 4)))
            text = format_chain(spec)
            again = parse_chain(text)
            assert format_chain(again) == text
            np.testing.assert_array_equal(again.q.toarray(), spec.q.toarray())
            np.testing.assert_array_equal(again.pi, spec.pi)

    def test_fixture_files_are_canonical(self):
        for path in sorted(FIXTURES.glob("*.chain")):
            assert format_chain(parse_chain_file(path)) == path.read_text(), path.name


class TestBipartiteFormat:
    def test_e3(self):
        g = parse_bipartite_file(FIXTURES / "e3.tsv")
        assert g.items == ("x",) and g.tags == ("a",)
        assert g.epsilon == 0.1 and g.sigma_weight == 1.0

    def test_defaults_and_directives(self):
        g = parse_bipartite("x\ta\t1\ny\tb\t2\n")
        assert g.candidates == ("a", "b")
        g = parse_bipartite("CANDIDATES b\nTRUE_TAGS b a\nx\ta\t1\ny\tb\t2\n")
        assert g.candidates == ("b",) and g.true_tags == ("b", "a")

    def test_bad_weight(self):
        with pytest.raises(ParseError) as err:
            parse_bipartite("EPSILON 0.2\nx\ta\tabc\n")
        assert err.value.line == 2

    def test_duplicate_edge(self):
        with pytest.raises(DuplicateEdge) as err:
            parse_bipartite("x\ta\t1\nx\ta\t2\n")
        assert err.value.line == 2

    def test_other_errors(self):
        for text in ("EPSILON\nx\ta\t1\n", "x\ta\n", "# nothing\n", "x\ta\t-1\n", "EPSILON 1\nEPSILON 1\nx\ta\t1\n"):
            with pytest.raises(ParseError):
                parse_bipartite(text)

    def test_round_trip(self):
        g = parse_bipartite_file(FIXTURES / "synthetic_small.tsv")
        assert format_bipartite(parse_bipartite(format_bipartite(g))) == format_bipartite(g)
        assert g.true_tags


class TestEdgeList:
    def test_parse(self):
        assert parse_edge_list("# path\n1 2\n2 3\n") == [(1, 2), (2, 3)]
        assert parse_edge_list("a b\n") == [("a", "b")]
        with pytest.raises(ParseError):
            parse_edge_list("1 2 3\n")


class TestCsv:
    def test_round_trip(self, tmp_path):
        rows = [("greedy", 1, 0.25, 0, 10), ("one-step", 1, 0.125, 1.5, 0)]
        path = tmp_path / "out.csv"
        path.write_text(format_csv(rows, {"seed": 3}))
        meta, parsed = read_csv(path)
        assert meta == {"seed": "3"}
        assert parsed[0] == {"method": "greedy", "k": 1, "f": 0.25, "wall_time_ms": 0.0, "n_evals": 10}
        assert path.read_text().splitlines()[1] == "method,k,f,wall_time_ms,n_evals"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParseError):
            read_csv(path)
