import json

import numpy as np
import pytest

from captrans.effectiveness import evaluate
from captrans.model import SPT, build
from captrans.reporting import (SWEEP_COLUMNS, ReportBundle, Table, config_hash, emissions_table, fmt,
                                levels_table, load_plan, plan_table, read_table, save_plan, sweep_table,
                                write_reports)
from captrans.solver.bnb import SolverConfig, solve_milp


@pytest.fixture(scope="module")
def solved(small_example):
    model = build(small_example, SPT)
    res = solve_milp(model, SolverConfig(gap=1e-4))
    return model, res.plan


def test_fmt():
    assert fmt(None) == ""
    assert fmt(float("nan")) == ""
    assert fmt(3) == "3"
    assert fmt(True) == "1"
    assert fmt(0.0) == "0"
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt("x") == "x"


def test_twelve_digit_round_trip():
    rng = np.random.default_rng(0)
    for v in rng.uniform(-1e6, 1e6, 200):
        assert float(fmt(v)) == pytest.approx(v, rel=1e-11)


def test_header_only_sweep(tmp_path):
    write_reports(ReportBundle().add(sweep_table([])), tmp_path)
    header, rows = read_table(tmp_path / "sweep.csv")
    assert tuple(header) == SWEEP_COLUMNS
    assert rows == []


def test_row_width_checked():
    with pytest.raises(ValueError):
        Table("t", ("a", "b"), [(1,)]).to_csv()


def test_duplicate_table_rejected():
    b = ReportBundle().add(Table("t", ("a",)))
    with pytest.raises(ValueError):
        b.add(Table("t", ("a",)))


def test_reports_are_byte_identical(solved, small_example, tmp_path):
    model, plan = solved

    def bundle():
        rep = evaluate(plan, small_example)
        return (ReportBundle(seed=3, config={"gap": 1e-4})
                .add(plan_table(plan, small_example)).add(levels_table(rep)).add(emissions_table(rep)))

    write_reports(bundle(), tmp_path / "a")
    write_reports(bundle(), tmp_path / "b")
    for name in ("plan.csv", "levels.csv", "emissions.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["config_hash"] == config_hash({"gap": 1e-4})
    assert {f["file"] for f in manifest["files"]} == {"plan.csv", "levels.csv", "emissions.csv"}


def test_plan_table_values(solved, small_example):
    _, plan = solved
    t = plan_table(plan, small_example)
    assert len(t.rows) == len(small_example.machines) * plan.n_periods
    total = sum(r[7] for r in t.rows)
    assert total == pytest.approx(plan.production.sum())


def test_levels_table_values(solved, small_example, tmp_path):
    _, plan = solved
    rep = evaluate(plan, small_example)
    write_reports(ReportBundle().add(levels_table(rep)), tmp_path)
    header, rows = read_table(tmp_path / "levels.csv")
    assert header == ["t", "R_dirty", "R_clean", "weighted"]
    for row, col in zip(rows, rep.levels.T):
        assert float(row[1]) == pytest.approx(col[0], rel=1e-11, abs=1e-12)


def test_plan_file_round_trip(solved, small_example, tmp_path):
    model, plan = solved
    path = save_plan(plan, model, tmp_path / "plan.json")
    back, _ = load_plan(path, small_example)
    assert back.objective == pytest.approx(plan.objective, rel=1e-12)
    np.testing.assert_array_equal(back.transitions, plan.transitions)


def test_plan_file_rejects_foreign_variables(solved, small_example, tmp_path):
    model, plan = solved
    path = save_plan(plan, model, tmp_path / "plan.json")
    doc = json.loads(path.read_text())
    doc["solution"]["bogus"] = 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_plan(path, small_example)
