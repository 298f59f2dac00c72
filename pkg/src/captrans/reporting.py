"""CSV tables, plan files and the run manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import statespace as ss
from .effectiveness import EffectivenessReport
from .instance import Instance
from .model import MilpModel, Plan, build, decode
from .scenario import THRESHOLDS, CellSummary, ScenarioResult

PLAN_COLUMNS = ("machine", "technology", "t", "transition", "from_shifts", "to_shifts", "class",
                "produced", "maintenances", "remaining_life", "salvaged")
EMISSION_COLUMNS = ("t", "E_SPT", "E_SPWT")
SWEEP_COLUMNS = ("ep_ratio", "ci_ratio", "scenarios", "solved", "P_R_eq_0", "P_R_ge_0.5", "P_R_ge_0.75",
                 "P_R_ge_1", "E_R")
TAU_COLUMNS = ("ep_ratio", "ci_ratio", "beta", "finite", "q1", "median", "q3")
SCENARIO_COLUMNS = ("scenario", "instance", "xi", "ep_ratio", "ci_ratio", "status", "objective", "gap", "R_clean")


def fmt(v: Any) -> str:
    """Numbers with 12 significant digits; missing values as empty fields."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return ""
        if v == 0:
            return "0"
        return "%.12g" % v
    return str(v)


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"{self.name}: row has {len(row)} fields, expected {len(self.columns)}")
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()


def plan_table(plan: Plan, instance: Instance) -> Table:
    t = Table("plan", PLAN_COLUMNS)
    made = plan.production.sum(axis=0)
    maint = plan.maintenance.sum(axis=1) if plan.maintenance.size else np.zeros_like(made)
    for k, m in enumerate(instance.machines):
        for p in range(plan.n_periods):
            e = int(plan.transitions[k, p])
            t.rows.append((m.id, m.technology, p + 1, e, ss.tail(e), ss.head(e), ss.classify(e).value,
                           made[k, p], maint[k, p], plan.remaining_life[k, p], plan.salvaged[k, p]))
    return t


def levels_table(report: EffectivenessReport) -> Table:
    cols = ("t",) + tuple(f"R_{j}" for j in report.technologies) + (("weighted",) if report.gamma is not None else ())
    t = Table("levels", cols)
    weighted = report.weighted
    for p in range(report.levels.shape[1]):
        row = (p + 1,) + tuple(report.levels[:, p])
        if weighted is not None:
            row += (weighted[p],)
        t.rows.append(row)
    return t


def emissions_table(report: EffectivenessReport) -> Table:
    t = Table("emissions", EMISSION_COLUMNS)
    ref = report.reference_emissions
    for p, e in enumerate(report.emissions):
        t.rows.append((p + 1, e, None if ref is None else ref[p]))
    return t


def sweep_table(cells: Sequence[CellSummary]) -> Table:
    t = Table("sweep", SWEEP_COLUMNS)
    for c in cells:
        t.rows.append((c.ep_ratio, c.ci_ratio, c.scenarios, c.solved, c.p_zero)
                      + tuple(c.p_at_least[a] for a in THRESHOLDS) + (c.expected,))
    return t


def tau_table(cells: Sequence[CellSummary]) -> Table:
    t = Table("tau", TAU_COLUMNS)
    for c in cells:
        for b, q in c.tau_quartiles.items():
            if q is not None:
                t.rows.append((c.ep_ratio, c.ci_ratio, b, c.tau_finite[b]) + q)
    return t


def scenario_table(scenarios: Sequence[ScenarioResult]) -> Table:
    betas = sorted({b for s in scenarios for b in s.tau})
    t = Table("scenarios", SCENARIO_COLUMNS + tuple(f"tau_{b:g}" for b in betas))
    for s in scenarios:
        t.rows.append((s.index, s.instance, s.xi, s.ep_ratio, s.ci_ratio, s.status, s.objective, s.gap, s.level)
                      + tuple(s.tau.get(b) for b in betas))
    return t


@dataclass
class ReportBundle:
    tables: list[Table] = field(default_factory=list)
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def add(self, table: Table) -> "ReportBundle":
        if any(t.name == table.name for t in self.tables):
            raise ValueError(f"duplicate table {table.name!r}")
        self.tables.append(table)
        return self


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_reports(bundle: ReportBundle, directory) -> list[Path]:
    """Write one CSV per table plus ``manifest.json``; returns the paths written."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths, files = [], []
    for table in bundle.tables:
        text = table.to_csv()
        p = out / f"{table.name}.csv"
        _write(p, text)
        paths.append(p)
        files.append({"file": p.name, "rows": len(table.rows),
                      "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()})
    manifest = {"schema": 1, "files": files, "seed": bundle.seed, "config": bundle.config,
                "config_hash": config_hash(bundle.config)}
    p = out / "manifest.json"
    _write(p, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    paths.append(p)
    return paths


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ------------------------------------------------------------------ plan files


def plan_to_dict(plan: Plan, model: MilpModel) -> dict:
    if plan.x is None:
        raise ValueError("plan carries no solution vector")
    return {
        "schema": 1,
        "variant": plan.variant,
        "objective": plan.objective,
        "costs": {k: float(v) for k, v in plan.costs.items()},
        "solution": {n: float(v) for n, v in zip(model.names, plan.x) if v != 0.0},
    }


def save_plan(plan: Plan, model: MilpModel, path) -> Path:
    path = Path(path)
    _write(path, json.dumps(plan_to_dict(plan, model), indent=1) + "\n")
    return path


def load_plan(path, instance: Instance) -> tuple[Plan, MilpModel]:
    """Rebuild the model for ``instance`` and re-verify the stored solution against it."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != 1 or "solution" not in doc or "variant" not in doc:
        raise ValueError(f"{path}: not a plan file")
    model = build(instance, doc["variant"])
    pos = {n: j for j, n in enumerate(model.names)}
    x = np.zeros(model.n_vars)
    for name, val in doc["solution"].items():
        if name not in pos:
            raise ValueError(f"{path}: unknown variable {name!r} for this instance")
        x[pos[name]] = float(val)
    return decode(model, x), model
