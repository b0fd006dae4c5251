import json

import pytest

from polyzeros import __version__
from polyzeros.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def body(text):
    return [l for l in text.splitlines() if not l.startswith("#")]


def test_headers_and_ehrhart(capsys):
    code, out = run(capsys, "polytope", "ehrhart", "--polytope", "trapezoid_ex2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"# polyzeros {__version__}"
    assert lines[1].startswith("# config: ")
    assert body(out) == ["power,coefficient", "2,3/2", "1,5/2", "0,1"]


def test_polytope_info(capsys):
    code, out = run(capsys, "polytope", "info", "--polytope", "square")
    assert code == 0 and len(body(out)) == 1 + 9


def test_region_grid(capsys):
    code, out = run(capsys, "region", "grid", "--polytope", "square", "--grid", "-1", "1", "5")
    assert code == 0
    rows = body(out)
    assert len(rows) == 1 + 25
    assert any("allowed" in r for r in rows) and any("forbidden" in r for r in rows)


def test_config_round_trip(capsys, tmp_path):
    first = tmp_path / "a.csv"
    code, _ = run(capsys, "bp", "grid", "--polytope", "trapezoid_ex3_2", "--grid", "-1", "1", "4",
                  "--out", str(first))
    assert code == 0
    second = tmp_path / "b.csv"
    code, _ = run(capsys, "bp", "grid", "--config", str(first), "--out", str(second),
                  "--threads", "3")
    assert code == 0
    assert first.read_text() == second.read_text()


def test_json_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "character todd1d", "interval": [0, 1], "N_list": [3],
                               "w": [[0.1]], "orders": [0, 12]}))
    code, out = run(capsys, "character", "todd1d", "--config", str(cfg))
    assert code == 0 and len(body(out)) == 3


@pytest.mark.parametrize("argv", [
    ["bp", "grid", "--polytope", "no_such_polytope"],
    ["bp", "grid", "--tol", "bogus=1"],
    ["bp", "grid", "--tol", "rank"],
    ["szego", "converge", "--N-list", "0"],
])
def test_config_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_unknown_config_field_exit_2(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "bp grid", "colour": "red"}))
    assert main(["bp", "grid", "--config", str(cfg)]) == 2


def test_guard_exit_3(capsys):
    assert main(["szego", "converge", "--polytope", "square", "--rho", "0", "0",
                 "--N-list", "5000"]) == 3


def test_threads_from_environment(capsys, monkeypatch):
    _, a = run(capsys, "region", "grid", "--grid", "-1", "1", "3")
    monkeypatch.setenv("POLYZEROS_THREADS", "2")
    _, b = run(capsys, "region", "grid", "--grid", "-1", "1", "3")
    assert a == b


@pytest.mark.parametrize("argv,rows", [
    (["szego", "converge", "--rho", "0", "0.693", "--N-list", "10", "20"], 2),
    (["szego", "mass-grid", "--grid", "-1", "1", "2", "--N", "10"], 4),
    (["character", "table", "--w", "[1, 1]", "--N-list", "5", "10"], 2),
    (["psi", "grid", "--grid", "-1", "1", "2"], 4),
    (["psi", "rank-map", "--grid", "-1", "1", "2"], 4),
    (["psi", "bk-check", "--resolution", "3"], 1),
    (["ensemble", "m1", "--polytope", '{"m": 1, "p": 4, "vertices": [[1], [3]]}', "--N", "5",
      "--samples", "4", "--bins", "5"], 5),
    (["ensemble", "tentacles", "--N", "5", "--samples", "4", "--facet", "2"], 1),
])
def test_every_subcommand_runs(capsys, tmp_path, argv, rows):
    if argv[0] == "ensemble" and argv[2] == "--polytope":
        path = tmp_path / "seg.json"
        path.write_text(argv[3])
        argv = argv[:3] + [str(path)] + argv[4:]
    code, out = run(capsys, *argv)
    assert code == 0
    assert len(body(out)) - 1 >= rows
