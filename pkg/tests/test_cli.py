import json

import pytest

from luknet.cli import main
from luknet.graph import graph_from_json
from luknet.network import network_from_json


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_roundtrip_fixture(fixtures_dir, capsys):
    code, out, _ = run(capsys, "roundtrip", str(fixtures_dir / "intro2.json"))
    assert code == 0
    assert "identical" in out


def test_extract_then_construct_files(fixtures_dir, tmp_path, capsys):
    gpath = tmp_path / "g.json"
    code, _, _ = run(capsys, "extract", str(fixtures_dir / "dag.json"), "-o", str(gpath))
    assert code == 0
    g = graph_from_json(gpath.read_text())
    assert g.widths[0] == 2
    npath = tmp_path / "n.json"
    code, _, _ = run(capsys, "construct", str(gpath), "-o", str(npath))
    assert code == 0
    rebuilt = network_from_json(npath.read_text())
    original = network_from_json((fixtures_dir / "dag.json").read_text())
    assert rebuilt == original


def test_extract_degenerate_exits_one(tmp_path, capsys):
    dead = {
        "input_dim": 1,
        "layers": [
            {"weights": [["1"]], "biases": ["-5"], "activation": ["relu"]},
            {"weights": [["1"]], "biases": ["0"], "activation": ["none"]},
        ],
    }
    path = tmp_path / "dead.json"
    path.write_text(json.dumps(dead))
    code, _, err = run(capsys, "extract", str(path), "-o", str(tmp_path / "g.json"))
    assert code == 1
    assert "degenerate" in err


def test_check_equiv_networks(fixtures_dir, capsys):
    code, out, _ = run(
        capsys,
        "check-equiv",
        str(fixtures_dir / "chain6_a.json"),
        str(fixtures_dir / "chain6_b.json"),
        "--grid",
        "12",
    )
    assert code == 0
    assert "equal" in out


def test_check_equiv_counterexample_exits_one(fixtures_dir, capsys):
    code, out, _ = run(
        capsys,
        "check-equiv",
        str(fixtures_dir / "halfgrid_identity.json"),
        str(fixtures_dir / "halfgrid_kinked.json"),
        "--grid",
        "4",
    )
    assert code == 1
    assert "counterexample" in out


def test_check_equiv_formula_against_network(fixtures_dir, tmp_path, capsys):
    fpath = tmp_path / "f.txt"
    fpath.write_text("0\n")
    code, _, _ = run(
        capsys,
        "check-equiv",
        str(fpath),
        str(fixtures_dir / "zero_net.json"),
        "--grid",
        "6",
        "--samples",
        "50",
    )
    assert code == 0


def test_axioms_listing(capsys):
    code, out, _ = run(capsys, "axioms", "--set", "MV")
    assert code == 0
    lines = [l for l in out.strip().splitlines() if l]
    assert len(lines) == 16
    code, out, _ = run(capsys, "axioms", "--set", "MV", "--render-symmetry")
    assert code == 0
    assert "rho(" in out


def test_axioms_sets(capsys):
    for spec, count in (("MVk:1", 18), ("DMV:2", 20)):
        code, out, _ = run(capsys, "axioms", "--set", spec)
        assert code == 0
        assert len(out.strip().splitlines()) == count


def test_bounds_output_and_node(fixtures_dir, capsys):
    code, out, _ = run(capsys, "bounds", str(fixtures_dir / "intro2.json"))
    assert code == 0
    assert "[0, 1]" in out
    code, out, _ = run(
        capsys, "bounds", str(fixtures_dir / "dag.json"), "--node", "1,1"
    )
    assert code == 0
    assert "[-1, 2]" in out


def test_bounds_budget_env(fixtures_dir, capsys, monkeypatch):
    monkeypatch.setenv("LUK_NODE_BUDGET", "1")
    code, _, err = run(capsys, "bounds", str(fixtures_dir / "dag.json"))
    assert code == 1
    assert "budget" in err


def test_rewrite_applies_graph_trace(fixtures_dir, tmp_path, capsys):
    gpath = tmp_path / "g.json"
    code, _, _ = run(capsys, "extract", str(fixtures_dir / "intro2.json"), "-o", str(gpath))
    assert code == 0
    trace = tmp_path / "t.jsonl"
    # [v_out] = x1 becomes not not x1 (certificate dropped).
    trace.write_text('{"axiom": "Ax7", "dir": "LR", "pos": [], "node": [3, 1]}\n')
    out_path = tmp_path / "g2.json"
    code, _, _ = run(capsys, "rewrite", str(gpath), "--trace", str(trace), "-o", str(out_path))
    assert code == 0
    g2 = graph_from_json(out_path.read_text())
    assert g2.node(3, 1).certificate is None
    code, _, err = run(capsys, "construct", str(out_path), "-o", str(tmp_path / "n.json"))
    assert code == 1
    assert "not normal" in err


def test_usage_error_exits_two(fixtures_dir, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{]")
    code, _, err = run(capsys, "check-equiv", str(bad), str(fixtures_dir / "dag.json"))
    assert code == 2


def test_unknown_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
