import json
from pathlib import Path

import pytest

from reachmax.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestCli:
    def test_validate_ok(self, capsys):
        code, out, _ = run(capsys, "validate", FIXTURES / "e1.chain")
        assert code == 0 and "well formed" in out

    def test_validate_bipartite(self, capsys):
        assert run(capsys, "validate", FIXTURES / "synthetic_small.tsv")[0] == 0

    def test_validate_violation(self, tmp_path, capsys):
        text = (FIXTURES / "e1.chain").read_text().replace("Q\n1 1 0.40000000000000002\n1 null 0.40000000000000002",
                                                           "Q\n1 1 0.59999999999999998\n1 null 0.20000000000000001")
        path = tmp_path / "bad.chain"
        path.write_text(text)
        code, out, _ = run(capsys, "validate", path)
        assert code == 1 and "domination" in out

    def test_parse_error_exit(self, tmp_path, capsys):
        path = tmp_path / "bad.chain"
        path.write_text("CHAIN v1\nn_transient 1\nabsorbing null *sigma\nPI\n1 1\nQBAR\n1 null 0.8\nQ\n1 sigma 1\n")
        code, _, err = run(capsys, "evaluate", path, "--set", "1")
        assert code == 1 and ":7:" in err

    def test_missing_file_is_runtime(self, tmp_path, capsys):
        assert run(capsys, "evaluate", tmp_path / "nope", "--set", "1")[0] == 2

    @pytest.mark.parametrize("oracle", ["lup", "dense", "mc"])
    def test_evaluate(self, capsys, oracle):
        code, out, _ = run(capsys, "evaluate", FIXTURES / "e1.chain", "--set", "1", "--oracle", oracle,
                           "--walks", "20000")
        payload = json.loads(out)
        assert code == 0
        tol = 4 * payload.get("stderr", 0) or 1e-12
        assert abs(payload["f"] - 1 / 3) <= tol

    def test_evaluate_tag_labels(self, capsys):
        code, out, _ = run(capsys, "evaluate", FIXTURES / "e3.tsv", "--set", "a")
        assert code == 0 and abs(json.loads(out)["f"] - 0.9090909090909091) < 1e-12

    def test_optimize_writes_out(self, tmp_path, capsys):
        out = tmp_path / "res" / "opt.json"
        code, _, _ = run(capsys, "optimize", FIXTURES / "vc_path.chain", "--k", "1", "--method", "greedy",
                         "--out", out)
        payload = json.loads(out.read_text())
        assert code == 0 and payload["set"] == [2]
        assert abs(payload["f"] - 0.9333333333333333) < 1e-12

    def test_optimize_baseline_needs_tags(self, capsys):
        assert run(capsys, "optimize", FIXTURES / "e1.chain", "--k", "1", "--method", "pagerank")[0] == 1
        assert run(capsys, "optimize", FIXTURES / "synthetic_small.tsv", "--k", "2", "--method", "pagerank")[0] == 0

    def test_optimize_too_many_subsets(self, capsys):
        code, _, err = run(capsys, "optimize", FIXTURES / "synthetic_folded.chain", "--k", "10",
                           "--method", "exhaustive")
        assert code == 2 and "CombinatorialLimit" in err

    def test_bad_set(self, capsys):
        assert run(capsys, "evaluate", FIXTURES / "e1.chain", "--set", "7")[0] == 1
        assert run(capsys, "evaluate", FIXTURES / "e1.chain", "--set", "zz")[0] == 1

    def test_fold_check(self, capsys):
        code, out, _ = run(capsys, "fold-check", FIXTURES / "synthetic_small.tsv", "--set", "1,3,5")
        assert code == 0 and json.loads(out)["diff"] <= 1e-9

    def test_gen_vc(self, tmp_path, capsys):
        edges = tmp_path / "g.txt"
        edges.write_text("1 2\n2 3\n")
        out = tmp_path / "vc.chain"
        assert run(capsys, "gen-vc", edges, "--out", out)[0] == 0
        assert out.read_text() == (FIXTURES / "vc_path.chain").read_text()
        assert run(capsys, "gen-vc", edges, "--bipartite", "--out", out)[0] == 0
        assert out.read_text() == (FIXTURES / "vc_path_bipartite.chain").read_text()

    def test_gen_synth_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        for path in (a, b):
            run(capsys, "gen-synth", "--n-items", 30, "--n-tags", 10, "--seed", 4, "--out", path)
        assert a.read_bytes() == b.read_bytes()
        assert run(capsys, "validate", a)[0] == 0

    def test_sweep(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sweep", "--k-max", 2, "--n-items", 40, "--n-tags", 12, "--methods",
                         "greedy,one-step", "--out", out)
        assert code == 0
        assert out.read_text().count("\n") > 4

    def test_sweep_bad_method(self, capsys):
        assert run(capsys, "sweep", "--methods", "magic")[0] == 1
