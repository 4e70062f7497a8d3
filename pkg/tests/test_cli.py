import json
from pathlib import Path

import pytest

from recbound.cli import main
from recbound.certify import parse_certificate
from recbound.recfile import parse_machine_report

SMALLMIS = {
    "name": "smallmis",
    "dimension": 2,
    "variables": ["n", "k"],
    "target": [3, 1],
    "terms": {
        "deg0": [[1, 1]],
        "deg1": [[2, 1], [2, 1]],
        "deg2": [[3, 1], [3, 1], [3, 1]],
        "deg3": [[4, 1], [1, 0]],
    },
}

FIB = {
    "name": "fib",
    "dimension": 1,
    "variables": ["n"],
    "target": [1],
    "terms": {"split": [[1], [2]]},
}

INFEASIBLE = {
    "name": "bad",
    "dimension": 1,
    "variables": ["n"],
    "target": [1],
    "terms": {"up": [[-1]]},
}


def write(tmp_path: Path, doc: dict) -> str:
    path = tmp_path / f"{doc['name']}.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_analyze_smallmis(tmp_path, capsys):
    code = main(["analyze", write(tmp_path, SMALLMIS), "--tol", "1e-9"])
    out = capsys.readouterr().out
    assert code == 0
    assert "c = 3" in out
    assert "deg2" in out


def test_analyze_machine_output(tmp_path, capsys):
    code = main(["analyze", write(tmp_path, SMALLMIS), "--out", "machine"])
    out = capsys.readouterr().out
    assert code == 0
    parsed = parse_machine_report(out)
    assert parsed["c"] == pytest.approx(3.0, abs=1e-6)
    assert parsed["terms"]["deg2"]["basis"] is True


def test_analyze_infeasible_exit_code(tmp_path, capsys):
    code = main(["analyze", write(tmp_path, INFEASIBLE)])
    out = capsys.readouterr().out
    assert code == 2
    assert "infeasible" in out


def test_analyze_missing_file(tmp_path, capsys):
    code = main(["analyze", str(tmp_path / "nope.json")])
    assert code == 4


def test_analyze_malformed_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    code = main(["analyze", str(path)])
    err = capsys.readouterr().err
    assert code == 4
    assert "line" in err


def test_analyze_semantic_error(tmp_path, capsys):
    doc = dict(SMALLMIS)
    doc["target"] = [0, 0]
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(doc))
    code = main(["analyze", str(path)])
    assert code == 4


def test_certify_fibonacci(tmp_path, capsys):
    code = main(
        ["certify", write(tmp_path, FIB), "--bits", "64", "--slack", "1e-9"]
    )
    captured = capsys.readouterr()
    assert code == 0
    fields = parse_certificate(captured.out)
    assert fields["bits"] == 64
    # Certified base must be at least the golden ratio.
    assert float(fields["c"]) >= (1 + 5**0.5) / 2


def test_certify_infeasible(tmp_path, capsys):
    code = main(["certify", write(tmp_path, INFEASIBLE)])
    assert code == 2


def test_verify_smallmis(tmp_path, capsys):
    code = main(["verify", write(tmp_path, SMALLMIS), "--n", "8"])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out
    assert out.splitlines()[0] == "n,value,nth_root,log_residual"


def test_verify_rejects_mixed_sign_deltas(tmp_path, capsys):
    doc = {
        "name": "mixed",
        "dimension": 2,
        "variables": ["a", "b"],
        "target": [1, 1],
        "terms": {"t": [[2, -1], [0, 2]]},
    }
    code = main(["verify", write(tmp_path, doc), "--n", "4"])
    assert code == 4


def test_walk_chain(tmp_path, capsys):
    doc = {
        "name": "chain",
        "dimension": 1,
        "variables": ["n"],
        "target": [1],
        "terms": {"step": [[1]]},
    }
    code = main(["walk", write(tmp_path, doc), "--n", "6", "--trials", "50"])
    out = capsys.readouterr().out
    assert code == 0
    assert "lower-bound estimate" in out


def test_cli_determinism(tmp_path, capsys):
    path = write(tmp_path, SMALLMIS)
    main(["analyze", path, "--out", "machine", "--seed", "7"])
    first = capsys.readouterr().out
    main(["analyze", path, "--out", "machine", "--seed", "7"])
    second = capsys.readouterr().out
    assert first == second
