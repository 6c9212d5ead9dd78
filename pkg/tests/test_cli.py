import io as stdio
import json

import pytest

from necklace import cli
from necklace.complexes import chessboard, dumps_complex


def invoke(argv, capsys, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", stdio.StringIO(stdin))
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_split_beads_with_oracle(capsys):
    code, out, err = invoke(["split", "beads:aabb", "--r", "2", "--oracle"], capsys)
    assert code == 0
    assert "cuts: 1 3" in out and "verdict fair: pass" in out and "verdict oracle_agrees: pass" in out
    assert "wall time" in err and "wall time" not in out


def test_split_json_is_byte_identical(capsys):
    argv = ["split", "beads:aabbabab", "--r", "2", "--equicardinal", "--json"]
    first = invoke(argv, capsys)[1]
    second = invoke(argv, capsys)[1]
    assert first == second
    report = json.loads(first)
    assert report["status"] == "sat" and all(report["verdicts"].values())
    assert report["command"] == argv and "wall_time" not in report


def test_split_unsat_with_tight_budget(capsys):
    code, out, _ = invoke(["split", "beads:aabb", "--r", "2", "--max-cuts", "1", "--oracle"], capsys)
    assert code == 1 and "status: unsat" in out and "oracle: unsat" in out


def test_split_graph_and_family(capsys, tmp_path):
    code, out, _ = invoke(["split", "beads:aaaabbbb", "--r", "4", "--graph", "cube:2"], capsys)
    assert code == 0 and "verdict constraint: pass" in out
    code, out, _ = invoke(["split", "beads:aabbabab", "--r", "2", "--family", "thm32"], capsys)
    assert code == 0
    fam = tmp_path / "fam.txt"
    m = 4  # r = 2, n = 2
    from necklace.complexes import bounded_subsets_complex
    fam.write_text(dumps_complex(bounded_subsets_complex(m, 2)) + "---\n" + dumps_complex(bounded_subsets_complex(m, 2)))
    code, out, _ = invoke(["split", "beads:aabbabab", "--r", "2", "--family", str(fam)], capsys)
    assert code == 0 and "verdict constraint: pass" in out


def test_split_from_stdin(capsys, monkeypatch):
    text = cli.io.beads_instance("abab", 2).dumps()
    code, out, _ = invoke(["split", "-"], capsys, stdin=text, monkeypatch=monkeypatch)
    assert code == 0 and "verdict fair: pass" in out


def test_gen_pipe_verify_connectivity(capsys, monkeypatch):
    code, complex_text, _ = invoke(["gen", "chessboard", "3", "2"], capsys)
    assert code == 0
    code, out, _ = invoke(["verify-connectivity", "--claim", "0", "--p", "2"], capsys,
                          stdin=complex_text, monkeypatch=monkeypatch)
    assert code == 0 and "status: pass" in out and "dim  faces  rank  betti" in out
    code, out, _ = invoke(["verify-connectivity", "--claim", "1", "--p", "2"], capsys,
                          stdin=complex_text, monkeypatch=monkeypatch)
    assert code == 1 and "status: fail" in out


def test_verify_connectivity_from_generator(capsys):
    code, out, _ = invoke(["verify-connectivity", "--gen", "chessboard 5 3", "--claim", "0", "--p", "3", "--json"],
                          capsys)
    report = json.loads(out)
    assert code == 0 and report["result"]["reduced_betti"][:2] == [0, 0]


def test_check_unavoidable(capsys):
    code, out, _ = invoke(["check-unavoidable", "--family", "thm32", "--r", "4", "--n", "2"], capsys)
    assert code == 0 and "status: true" in out and "verdict pigeonhole_agrees: pass" in out


def test_envy_free_measures(capsys, monkeypatch):
    _, text, _ = invoke(["gen", "measures", "2", "1", "--seed", "3"], capsys)
    argv = ["envy-free", "-", "--prefs", "measure:0,1/2,1;3/2,1/2", "--json"]
    code, out, _ = invoke(argv, capsys, stdin=text, monkeypatch=monkeypatch)
    report = json.loads(out)
    assert code == 0 and report["status"] == "solved" and all(report["verdicts"].values())
    assert len(report["result"]["cuts"]) == 2
    _, again, _ = invoke(argv, capsys, stdin=text, monkeypatch=monkeypatch)
    assert again == out


def test_envy_free_binary_and_equicardinal(capsys):
    code, out, _ = invoke(["envy-free", "beads:aabb", "--r", "2", "--prefs", "longest", "--binary", "1"], capsys)
    assert code == 0 and "verdict preferred: pass" in out
    code, out, _ = invoke(["envy-free", "beads:aabb", "--r", "2", "--prefs", "fewest:2", "--equicardinal"], capsys)
    assert code == 0


def test_envy_free_unknown_exits_2(capsys):
    code, out, _ = invoke(["envy-free", "beads:aabb", "--r", "2", "--prefs", "longest", "--time-limit", "0"], capsys)
    assert code == 2 and "status: unknown" in out


def test_ak_demo(capsys):
    code, out, _ = invoke(["ak-demo", "--r", "3", "--prefs", "contains-empty:0.5", "--fuzz", "50"], capsys)
    assert code == 0 and "verdict preferred: pass" in out and "verdict well_defined: pass" in out
    code, out, _ = invoke(["ak-demo", "--r", "2", "--prefs", "threshold:0.9", "--prefs", "any"], capsys)
    assert code == 0


def test_gen_beads_round_trip(capsys, monkeypatch):
    _, text, _ = invoke(["gen", "beads", "3", "2", "2", "--seed", "5"], capsys)
    code, out, _ = invoke(["split", "-", "--oracle"], capsys, stdin=text, monkeypatch=monkeypatch)
    assert code == 0 and "r: 3" in out


@pytest.mark.parametrize("argv,needle", [
    (["split", "beads:aab", "--r", "2"], "divisible"),
    (["frobnicate"], "invalid choice"),
    (["split", "beads:aabb", "--equicardinal", "--graph", "cube:1"], "not allowed"),
    (["envy-free", "beads:aabb", "--prefs", "nope"], "unknown preference"),
    (["verify-connectivity", "/nonexistent/file", "--claim", "0"], "No such file"),
])
def test_errors_exit_1(argv, needle, capsys):
    code, out, err = invoke(argv, capsys)
    assert code == 1 and out == "" and needle in err


def test_parse_error_reports_line_and_column(capsys, tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('# header\n{"type": "allocation", "cuts": ["x/y"], "f": [0, 1]}\n')
    code, _, err = invoke(["split", str(path)], capsys)
    assert code == 1 and "line 2, column 33" in err


def test_capacity_error_names_the_limit(capsys, monkeypatch):
    monkeypatch.setenv("NECKLACE_MAX_ENUMERATION", "10")
    code, _, err = invoke(["check-unavoidable", "--r", "3", "--n", "2"], capsys)
    assert code == 1 and "NECKLACE_MAX_ENUMERATION" in err


def test_run_returns_report():
    report, code, text = cli.run(["verify-connectivity", "--gen", "chessboard 3 2", "--claim", "0"])
    assert code == 0 and report.verdicts == {"claim": True}
    assert text == report.to_text()
    assert dumps_complex(chessboard(3, 2))  # generator and file format agree
