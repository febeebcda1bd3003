import json

import pytest

from partsat.cli import cli_main
from partsat.cnf import CnfFormula, dump_dimacs, load_dimacs, parse_dimacs
from partsat.decomposition import DecompositionSet
from partsat.predictive import exhaustive_total
from partsat.solver import CostMetric


@pytest.fixture
def tiny_cnf(tmp_path):
    path = tmp_path / "tiny.cnf"
    formula = CnfFormula(4, [[1, 2], [-1, 3], [2, -3, 4], [-2, -4]])
    dump_dimacs(formula, path)
    return path, formula


def test_estimate_subcommand(tiny_cnf, capsys):
    path, _ = tiny_cnf
    code = cli_main(["estimate", "--cnf", str(path), "--vars", "1,3",
                     "--n", "100", "--seed", "7", "--metric", "decisions"])
    assert code == 0
    out = capsys.readouterr().out
    doc = json.loads(out.splitlines()[0])
    assert doc["d"] == 2
    assert doc["n_samples"] == 100
    assert doc["status"] == "COMPLETE"
    assert "Avg. time" in out


def test_estimate_writes_run_dir(tiny_cnf, tmp_path, capsys):
    path, _ = tiny_cnf
    out_dir = tmp_path / "run"
    code = cli_main(["estimate", "--cnf", str(path), "--vars", "1,2",
                     "--n", "16", "--metric", "decisions",
                     "--out", str(out_dir)])
    assert code == 0
    assert (out_dir / "report.json").exists()
    assert (out_dir / "config.json").exists()


def test_search_subcommand_counters(tiny_cnf, capsys):
    path, _ = tiny_cnf
    code = cli_main(["search", "--cnf", str(path), "--init-vars", "1,2,3,4",
                     "--n", "8", "--seed", "5", "--metric", "decisions"])
    assert code == 0
    out = capsys.readouterr().out
    assert "traversal: " in out
    # completed + interrupted == |L1| + |L2| at exhaustion
    import re
    match = re.search(r"F finished at (\d+) points, interrupted at (\d+), "
                      r"\|L1\|=(\d+), \|L2\|=(\d+)", out)
    assert match
    completed, interrupted, l1, l2 = map(int, match.groups())
    assert completed + interrupted == l1 + l2


def test_oracle_subcommand(tiny_cnf, capsys):
    path, formula = tiny_cnf
    code = cli_main(["oracle", "--cnf", str(path), "--vars", "1,2",
                     "--metric", "decisions"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out.splitlines()[0])
    assert doc["members"] == 4
    expected = exhaustive_total(formula, DecompositionSet.of([1, 2]),
                                metric=CostMetric.DECISIONS)
    assert doc["total"] == expected


def test_encode_subcommand(tmp_path, capsys):
    base = tmp_path / "inst"
    code = cli_main(["encode", "--generator", "a5_1", "--registers", "5,6,7",
                     "--keystream-bits", "10", "--instance-seed", "3",
                     "--out", str(base)])
    assert code == 0
    formula = load_dimacs(base.with_suffix(".cnf"))
    sidecar = json.loads(base.with_suffix(".json").read_text())
    assert sidecar["generator"]["family"] == "a5_1"
    assert sidecar["state_vars"] == list(range(1, 19))
    assert formula.num_vars == sidecar["num_vars"]
    assert len(sidecar["keystream"]) == 10


def test_verify_supbs_via_generator(capsys):
    code = cli_main(["verify-supbs", "--generator", "bivium",
                     "--registers", "12,11", "--keystream-bits", "10",
                     "--checks", "25"])
    assert code == 0
    assert "verified" in capsys.readouterr().out


def test_verify_supbs_rejects(tmp_path, tiny_cnf, capsys):
    path, _ = tiny_cnf
    code = cli_main(["verify-supbs", "--cnf", str(path), "--vars", "1",
                     "--checks", "50"])
    assert code == 1


def test_search_on_generator_preset(capsys):
    code = cli_main(["search", "--generator", "a5_1", "--registers", "4,5,6",
                     "--keystream-bits", "8", "--n", "16", "--seed", "2",
                     "--metric", "decisions", "--time-limit", "20"])
    assert code == 0
    out = capsys.readouterr().out
    assert "best value:" in out


def test_unreadable_file_fails_cleanly(capsys):
    code = cli_main(["estimate", "--cnf", "/does/not/exist.cnf",
                     "--vars", "1", "--n", "4"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_flags_exit_nonzero():
    with pytest.raises(SystemExit) as exc:
        cli_main(["estimate", "--bogus"])
    assert exc.value.code != 0
