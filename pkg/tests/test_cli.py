import json
import subprocess
import sys

import pytest

from captrans.cli import EXIT_IO, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VALIDATION, run
from captrans.instance import builtin_example, instance_to_dict
from captrans.reporting import read_table
from captrans.scenario import SweepSpec, save_sweep_spec
from captrans.solver.bnb import SolverConfig


@pytest.fixture(scope="module")
def inst_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "inst.json"
    assert run(["example", "--out", str(p), "--periods", "2", "--simulated-periods", "3",
                "--candidates", "1"]) == EXIT_OK
    return p


@pytest.fixture(scope="module")
def solved_dir(inst_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert run(["solve", str(inst_file), "--out", str(out), "--compare", "--gap", "1e-4"]) == EXIT_OK
    return out


def test_solve_writes_reports(solved_dir):
    for name in ("plan.json", "plan_spwt.json", "plan.csv", "levels.csv", "emissions.csv", "manifest.json"):
        assert (solved_dir / name).is_file(), name
    spt = json.loads((solved_dir / "plan.json").read_text())
    spwt = json.loads((solved_dir / "plan_spwt.json").read_text())
    assert spwt["objective"] <= spt["objective"] + 1e-9
    header, rows = read_table(solved_dir / "emissions.csv")
    assert header == ["t", "E_SPT", "E_SPWT"]
    assert len(rows) == 2 and all(r[2] for r in rows)


def test_evaluate(inst_file, solved_dir, tmp_path, capsys):
    code = run(["evaluate", str(inst_file), str(solved_dir / "plan.json"), "--reference",
                str(solved_dir / "plan_spwt.json"), "--out", str(tmp_path), "--beta", "0.5"])
    assert code == EXIT_OK
    assert "tau_0.5" in capsys.readouterr().out
    assert (tmp_path / "levels.csv").is_file()


def test_export_and_import(inst_file, tmp_path):
    lp = tmp_path / "m.lp"
    assert run(["export-lp", str(inst_file), "--out", str(lp)]) == EXIT_OK
    from captrans.solver.external import solve_lp_file

    res = solve_lp_file(lp, tmp_path / "m.sol", gap=1e-6, time_limit=60)
    assert res.solution_path is not None
    assert run(["import-sol", str(inst_file), str(res.solution_path), "--out", str(tmp_path / "imp")]) == EXIT_OK
    assert (tmp_path / "imp" / "plan.json").is_file()


def test_external_engine(inst_file, tmp_path):
    assert run(["solve", str(inst_file), "--out", str(tmp_path), "--engine", "external"]) == EXIT_OK


def sweep_files(tmp_path):
    spec = SweepSpec(base=builtin_example(periods=2, simulated_periods=2), count=2, ep_ratios=(0.5,),
                     ci_ratios=(1.3, 1.6), solver=SolverConfig(gap=1e-3, time_limit=30.0))
    return save_sweep_spec(spec, tmp_path / "spec.json")


def test_sweep_seed_reproducible(tmp_path):
    spec = sweep_files(tmp_path)
    for d in ("a", "b"):
        assert run(["sweep", str(spec), "--out", str(tmp_path / d), "--seed", "5"]) == EXIT_OK
    for name in ("sweep.csv", "tau.csv", "scenarios.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 5
    header, rows = read_table(tmp_path / "a" / "scenarios.csv")
    assert len(rows) == 4


def test_usage_errors(capsys):
    assert run([]) == EXIT_USAGE
    assert run(["frobnicate"]) == EXIT_USAGE
    assert run(["solve"]) == EXIT_USAGE
    assert run(["evaluate", "a", "b", "--out", "x", "--beta", "2"]) == EXIT_USAGE


def test_validation_error(tmp_path, inst_file):
    doc = json.loads(inst_file.read_text())
    doc["machines"][0]["mu"] = 0.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run(["solve", str(bad), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{")
    assert run(["solve", str(garbage), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_missing_file_is_io_error(tmp_path):
    assert run(["solve", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_IO


def test_infeasible_is_solver_failure(tmp_path):
    doc = instance_to_dict(builtin_example(periods=1, simulated_periods=1, candidates_per_technology=1))
    for it in doc["items"]:
        it["d"] = [1e9]
    p = tmp_path / "inf.json"
    p.write_text(json.dumps(doc))
    assert run(["solve", str(p), "--out", str(tmp_path / "o")]) == EXIT_SOLVER


def test_console_script_entry(tmp_path):
    out = tmp_path / "ex.json"
    proc = subprocess.run([sys.executable, "-m", "captrans.cli", "example", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["schema"] == 1
