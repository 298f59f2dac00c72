"""Planning problem parameters.

An :class:`Instance` bundles machines, items, technologies, the planning
horizon and the per-period (present-valued) cost tables.  Instances are
immutable once validated; helpers that "modify" an instance return a new one.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1
EXISTING = "existing"
CANDIDATE = "candidate"


class InstanceError(ValueError):
    """Raised when an instance file cannot be parsed."""


class InstanceValidationError(InstanceError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid instance:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class Machine:
    id: str
    technology: str
    pool: str = CANDIDATE
    useful_life: float = 20000.0
    max_utilization: float = 0.85
    maintenance_interval: float = 5000.0  # FTM_k
    maintenance_durations: tuple[float, ...] = (4.0,)  # RMT_wk, last value repeats
    workers: int = 2
    initial_life: float = 0.0  # RL_k^0
    initial_state: int = 0

    @property
    def is_candidate(self) -> bool:
        return self.pool == CANDIDATE

    @property
    def maintenance_count(self) -> int:
        return maintenance_count_bound(self)

    def maintenance_duration(self, w: int) -> float:
        """Hours taken by the w-th maintenance (1-based)."""
        if not self.maintenance_durations:
            return 0.0
        return float(self.maintenance_durations[min(w, len(self.maintenance_durations)) - 1])


@dataclass(frozen=True)
class Item:
    id: str
    demand: tuple[float, ...]  # d_it over the simulated periods
    rate: tuple[float, ...]  # r_ik per machine; 0 means machine k cannot make i
    emission: tuple[float, ...]  # ep_ik per machine
    holding_emission: float = 0.0
    initial_inventory: float = 0.0


@dataclass(frozen=True)
class Technology:
    id: str
    machines: tuple[str, ...]


@dataclass(frozen=True)
class Horizon:
    periods: int
    simulated_periods: int
    shift_length: float = 2080.0
    allowed_shifts: tuple[int, ...] = (0, 1, 2, 3)
    initial_shifts: int = 0


@dataclass(frozen=True)
class ModelOptions:
    maintenance: bool = True
    single_shift: bool = False


COST_FAMILIES = (
    "investment", "production", "maintenance", "labor", "hiring", "firing",
    "shift_open", "shift_close", "holding", "tax", "salvage",
)


@dataclass(frozen=True, eq=False)
class CostSchedule:
    """Per-period cost tables, already brought to present value.

    Shapes: machine tables are ``(K, T)``; production ``(I, K, T)``; shift
    tables ``(4, T)``; holding ``(I, T)``; tax ``(T,)``.  The tax trajectory is
    used exactly as stored.
    """

    investment: np.ndarray  # CI
    production: np.ndarray  # CP
    maintenance: np.ndarray  # CM (same for every w)
    labor: np.ndarray  # CL
    hiring: np.ndarray  # CA
    firing: np.ndarray  # CF
    shift_open: np.ndarray  # CO
    shift_close: np.ndarray  # CC
    holding: np.ndarray  # CH
    tax: np.ndarray  # CT
    salvage: np.ndarray  # alpha
    discount_rate: float = 0.10
    increasing_tax: bool = False

    def __post_init__(self):
        for name in COST_FAMILIES:
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def base(self, name: str) -> np.ndarray:
        """First-period values C_1 of a family."""
        return getattr(self, name)[..., 0]


@dataclass(frozen=True, eq=False)
class Instance:
    machines: tuple[Machine, ...]
    items: tuple[Item, ...]
    technologies: tuple[Technology, ...]
    horizon: Horizon
    costs: CostSchedule
    options: ModelOptions = field(default_factory=ModelOptions)

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "technologies", tuple(self.technologies))

    @property
    def n_periods(self) -> int:
        """Number of periods in the model (the simulated horizon)."""
        return self.horizon.simulated_periods

    def machine_index(self, machine_id: str) -> int:
        for k, m in enumerate(self.machines):
            if m.id == machine_id:
                return k
        raise KeyError(machine_id)

    def technology_members(self) -> list[list[int]]:
        """Machine indices N_j per technology, in technology order."""
        return [[self.machine_index(mid) for mid in tech.machines] for tech in self.technologies]

    @property
    def demand(self) -> np.ndarray:
        return np.array([it.demand for it in self.items], dtype=float).reshape(len(self.items), -1)

    @property
    def rates(self) -> np.ndarray:
        return np.array([it.rate for it in self.items], dtype=float).reshape(len(self.items), -1)

    @property
    def emissions(self) -> np.ndarray:
        return np.array([it.emission for it in self.items], dtype=float).reshape(len(self.items), -1)

    @property
    def maintenance_counts(self) -> list[int]:
        return [maintenance_count_bound(m) for m in self.machines]

    def replace(self, **changes) -> "Instance":
        inst = dataclasses.replace(self, **changes)
        validate(inst)
        return inst

    def with_costs(self, **changes) -> "Instance":
        return self.replace(costs=dataclasses.replace(self.costs, **changes))


def maintenance_count_bound(machine: Machine) -> int:
    """|W|: enough maintenances to consume the whole useful life."""
    if machine.maintenance_interval <= 0:
        raise ValueError("maintenance interval must be positive")
    return math.ceil(machine.useful_life / machine.maintenance_interval)


def discounted(base, rate: float, periods: int) -> np.ndarray:
    """Expand base values C_1 to C_t = C_1 (1 + rate)^(1 - t) along a new last axis."""
    base = np.asarray(base, dtype=float)
    factors = (1.0 + rate) ** -np.arange(periods, dtype=float)
    return base[..., None] * factors


def candidate_count(peak_hours: float, utilization: float, shift_length: float, max_shifts: int) -> int:
    """Candidate machines to offer per technology so peak demand is always coverable."""
    return math.ceil(peak_hours / (utilization * max_shifts * shift_length)) + 1


# ---------------------------------------------------------------- validation


def validate(inst: Instance) -> Instance:
    errors: list[str] = []
    h = inst.horizon
    T = h.simulated_periods
    K, I = len(inst.machines), len(inst.items)
    if h.periods < 1:
        errors.append("horizon.periods must be >= 1")
    if T < h.periods:
        errors.append("horizon.simulated_periods must be >= periods")
    if not h.shift_length > 0:
        errors.append("horizon.l must be positive")
    if not h.allowed_shifts or not set(h.allowed_shifts) <= {0, 1, 2, 3}:
        errors.append("horizon.shifts must be a non-empty subset of {0,1,2,3}")
    if h.initial_shifts not in (0, 1, 2, 3):
        errors.append("horizon.s0 must be in {0,1,2,3}")

    ids = [m.id for m in inst.machines]
    if len(set(ids)) != len(ids):
        errors.append("machine ids are not unique")
    tech_ids = [t.id for t in inst.technologies]
    if len(set(tech_ids)) != len(tech_ids):
        errors.append("technology ids are not unique")
    for m in inst.machines:
        p = f"machine {m.id!r}"
        if m.pool not in (EXISTING, CANDIDATE):
            errors.append(f"{p}: pool must be 'existing' or 'candidate'")
        if not 0 < m.max_utilization <= 1:
            errors.append(f"{p}: mu must lie in (0, 1]")
        if not 0 < m.maintenance_interval <= m.useful_life:
            errors.append(f"{p}: need 0 < FTM <= v")
        if m.useful_life < 0 or m.initial_life < 0 or any(d < 0 for d in m.maintenance_durations):
            errors.append(f"{p}: durations must be non-negative")
        if m.workers < 0:
            errors.append(f"{p}: O must be non-negative")
        if m.initial_state not in (0, 1, 2, 3):
            errors.append(f"{p}: s0 must be in {{0,1,2,3}}")
        if m.pool == CANDIDATE and m.initial_life != 0:
            errors.append(f"{p}: candidate machines must have RL0 = 0")
        if m.pool == CANDIDATE and m.initial_state != 0:
            errors.append(f"{p}: candidate machines must start in state 0")
        if m.pool == EXISTING and m.initial_state == 0:
            errors.append(f"{p}: existing machines must start operating (s0 > 0)")
        if m.technology not in tech_ids:
            errors.append(f"{p}: unknown technology {m.technology!r}")

    seen: dict[str, str] = {}
    for tech in inst.technologies:
        for mid in tech.machines:
            if mid not in ids:
                errors.append(f"technology {tech.id!r}: unknown machine {mid!r}")
            elif mid in seen:
                errors.append(f"machine {mid!r} belongs to technologies {seen[mid]!r} and {tech.id!r}")
            else:
                seen[mid] = tech.id
    for m in inst.machines:
        if m.id not in seen:
            errors.append(f"machine {m.id!r} belongs to no technology")
        elif seen[m.id] != m.technology:
            errors.append(f"machine {m.id!r}: technology field disagrees with technology {seen[m.id]!r}")

    for it in inst.items:
        p = f"item {it.id!r}"
        if len(it.demand) != T:
            errors.append(f"{p}: demand needs {T} periods, got {len(it.demand)}")
        if any(d < 0 for d in it.demand):
            errors.append(f"{p}: demand must be non-negative")
        if len(it.rate) != K or len(it.emission) != K:
            errors.append(f"{p}: r and ep need one value per machine")
            continue
        if any(r < 0 for r in it.rate):
            errors.append(f"{p}: production rates must be non-negative")
        if any(e < 0 for e in it.emission) or it.holding_emission < 0:
            errors.append(f"{p}: emissions must be non-negative")
        if it.initial_inventory < 0:
            errors.append(f"{p}: I0 must be non-negative")
        if any(d > 0 for d in it.demand) and not any(r > 0 for r in it.rate):
            errors.append(f"{p}: has demand but no machine can produce it")

    c = inst.costs
    shapes = {
        "investment": (K, T), "production": (I, K, T), "maintenance": (K, T), "labor": (K, T),
        "hiring": (K, T), "firing": (K, T), "shift_open": (4, T), "shift_close": (4, T),
        "holding": (I, T), "tax": (T,), "salvage": (K, T),
    }
    for name, shape in shapes.items():
        arr = getattr(c, name)
        if arr.shape != shape:
            errors.append(f"costs.{name}: expected shape {shape}, got {arr.shape}")
        elif not np.all(np.isfinite(arr)):
            errors.append(f"costs.{name}: values must be finite")
    if c.increasing_tax and c.tax.shape == (T,) and np.any(np.diff(c.tax) < 0):
        errors.append("costs.CT must be non-decreasing for an increasing-tax policy")
    if c.discount_rate <= -1:
        errors.append("costs.discount_rate must exceed -1")

    if errors:
        raise InstanceValidationError(errors)
    return inst


# ------------------------------------------------------------ file format

_MACHINE_KEYS = {
    "id": "id", "technology": "technology", "pool": "pool", "v": "useful_life",
    "mu": "max_utilization", "FTM": "maintenance_interval", "RMT": "maintenance_durations",
    "O": "workers", "RL0": "initial_life", "s0": "initial_state",
}
_MACHINE_COSTS = {"CI": "investment", "CM": "maintenance", "CL": "labor", "CA": "hiring",
                  "CF": "firing", "alpha": "salvage"}
_SHIFT_COSTS = {"CO": "shift_open", "CC": "shift_close"}


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InstanceError(f"{path}: cannot parse instance file: {exc}") from exc
    return instance_from_dict(doc)


def save_instance(inst: Instance, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n", encoding="utf-8")
    return path


def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    if not isinstance(doc, Mapping):
        raise InstanceError("instance document must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise InstanceError(f"unsupported or missing schema version: {doc.get('schema')!r}")
    missing = [s for s in ("horizon", "machines", "items", "technologies", "costs") if s not in doc]
    if missing:
        raise InstanceError(f"missing sections: {', '.join(missing)}")
    try:
        return _from_dict(doc)
    except InstanceValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance: {exc!r}") from exc


def _from_dict(doc) -> Instance:
    hd = doc["horizon"]
    horizon = Horizon(
        periods=int(hd["periods"]),
        simulated_periods=int(hd.get("simulated_periods", hd["periods"])),
        shift_length=float(hd.get("l", 2080.0)),
        allowed_shifts=tuple(int(s) for s in hd.get("shifts", (0, 1, 2, 3))),
        initial_shifts=int(hd.get("s0", 0)),
    )
    T = horizon.simulated_periods

    machines = []
    for md in doc["machines"]:
        unknown = set(md) - set(_MACHINE_KEYS)
        if unknown:
            raise InstanceError(f"unknown machine fields: {sorted(unknown)}")
        kwargs = {_MACHINE_KEYS[k]: v for k, v in md.items()}
        rmt = kwargs.get("maintenance_durations")
        if rmt is not None:
            kwargs["maintenance_durations"] = tuple(float(x) for x in (rmt if isinstance(rmt, list) else [rmt]))
        machines.append(Machine(**kwargs))
    mids = [m.id for m in machines]
    tech_of = {m.id: m.technology for m in machines}

    technologies = []
    for td in doc["technologies"]:
        members = td.get("machines")
        if members is None:
            members = [m.id for m in machines if m.technology == td["id"]]
        technologies.append(Technology(id=td["id"], machines=tuple(members)))

    def per_machine(spec):
        """Resolve a scalar or a mapping keyed by machine or technology id."""
        out = []
        for mid in mids:
            if isinstance(spec, Mapping):
                if mid in spec:
                    out.append(spec[mid])
                elif tech_of[mid] in spec:
                    out.append(spec[tech_of[mid]])
                else:
                    out.append(spec.get("*", 0.0))
            else:
                out.append(spec)
        return out

    items = []
    for idoc in doc["items"]:
        items.append(Item(
            id=str(idoc["id"]),
            demand=tuple(float(x) for x in idoc["d"]),
            rate=tuple(float(x) for x in per_machine(idoc["r"])),
            emission=tuple(float(x) for x in per_machine(idoc.get("ep", 0.0))),
            holding_emission=float(idoc.get("eh", 0.0)),
            initial_inventory=float(idoc.get("I0", 0.0)),
        ))
    item_ids = [it.id for it in items]

    cd = doc["costs"]
    rate = float(cd.get("discount_rate", 0.0))

    def row(value):
        if isinstance(value, (list, tuple)):
            arr = np.asarray(value, dtype=float)
            if arr.shape != (T,):
                raise InstanceError(f"explicit cost table needs {T} periods, got {arr.shape}")
            return arr
        return discounted(float(value), rate, T)

    tables: dict[str, np.ndarray] = {}
    for key, name in _MACHINE_COSTS.items():
        spec = cd.get(key, 0.0)
        tables[name] = np.array([row(v) for v in per_machine(spec)]).reshape(len(mids), T)
    for key, name in _SHIFT_COSTS.items():
        spec = cd.get(key, 0.0)
        tables[name] = np.array([row(spec.get(str(s), 0.0) if isinstance(spec, Mapping) else spec)
                                 for s in range(4)])
    ch = cd.get("CH", 0.0)
    tables["holding"] = np.array([row(ch.get(i, 0.0) if isinstance(ch, Mapping) else ch)
                                  for i in item_ids]).reshape(len(items), T)
    cp = cd.get("CP", 0.0)
    prod = []
    for i in item_ids:
        spec = cp.get(i, 0.0) if isinstance(cp, Mapping) else cp
        prod.append([row(v) for v in per_machine(spec)])
    tables["production"] = np.array(prod, dtype=float).reshape(len(items), len(mids), T)
    ct = cd.get("CT", 0.0)
    tables["tax"] = np.asarray(ct, dtype=float) if isinstance(ct, list) else np.full(T, float(ct))

    costs = CostSchedule(**tables, discount_rate=rate, increasing_tax=bool(cd.get("increasing_tax", False)))
    od = doc.get("options", {})
    options = ModelOptions(maintenance=bool(od.get("maintenance", True)),
                           single_shift=bool(od.get("single_shift", False)))
    inst = Instance(machines=tuple(machines), items=tuple(items), technologies=tuple(technologies),
                    horizon=horizon, costs=costs, options=options)
    return validate(inst)


def _compact(arr: np.ndarray, rate: float):
    """Base value if the row follows the discount rule exactly, else the explicit list."""
    base = float(arr[0])
    if np.array_equal(discounted(base, rate, arr.shape[-1]), arr):
        return base
    return [float(x) for x in arr]


def instance_to_dict(inst: Instance) -> dict:
    h, c = inst.horizon, inst.costs
    rate = c.discount_rate
    mids = [m.id for m in inst.machines]
    machines = []
    for m in inst.machines:
        machines.append({
            "id": m.id, "technology": m.technology, "pool": m.pool, "v": m.useful_life,
            "mu": m.max_utilization, "FTM": m.maintenance_interval,
            "RMT": list(m.maintenance_durations), "O": m.workers, "RL0": m.initial_life,
            "s0": m.initial_state,
        })
    items = []
    for i, it in enumerate(inst.items):
        items.append({
            "id": it.id, "d": list(it.demand), "I0": it.initial_inventory,
            "r": dict(zip(mids, it.rate)), "ep": dict(zip(mids, it.emission)), "eh": it.holding_emission,
        })
    costs: dict[str, Any] = {"discount_rate": rate, "increasing_tax": c.increasing_tax}
    for key, name in _MACHINE_COSTS.items():
        costs[key] = {mid: _compact(r, rate) for mid, r in zip(mids, getattr(c, name))}
    for key, name in _SHIFT_COSTS.items():
        costs[key] = {str(s): _compact(r, rate) for s, r in enumerate(getattr(c, name))}
    costs["CH"] = {it.id: _compact(r, rate) for it, r in zip(inst.items, c.holding)}
    costs["CP"] = {it.id: {mid: _compact(r, rate) for mid, r in zip(mids, c.production[i])}
                   for i, it in enumerate(inst.items)}
    costs["CT"] = [float(x) for x in c.tax]
    return {
        "schema": SCHEMA_VERSION,
        "horizon": {"periods": h.periods, "simulated_periods": h.simulated_periods, "l": h.shift_length,
                    "shifts": list(h.allowed_shifts), "s0": h.initial_shifts},
        "technologies": [{"id": t.id, "machines": list(t.machines)} for t in inst.technologies],
        "machines": machines,
        "items": items,
        "costs": costs,
        "options": {"maintenance": inst.options.maintenance, "single_shift": inst.options.single_shift},
    }


# ------------------------------------------------------- illustrative example

EXAMPLE_RATES = (480, 672, 576, 336, 528, 624, 768, 816)
EXAMPLE_HOLDING_EMISSION = (0.023, 0.032, 0.027, 0.016, 0.025, 0.029, 0.036, 0.038)
EXAMPLE_PRODUCTION_COST = (0.075, 0.105, 0.09, 0.053, 0.083, 0.098, 0.12, 0.128)
EXAMPLE_HOLDING_COST = (0.66, 0.92, 0.79, 0.46, 0.72, 0.85, 1.05, 1.12)
EXAMPLE_EMISSION = (0.30, 0.21, 0.25, 0.42, 0.27, 0.23, 0.18, 0.17)
EXAMPLE_DEMAND = (
    (20000, 47726, 63945, 75452, 84378, 91670, 97836, 103178, 107889, 112103, 115916, 119396),
    (28000, 66816, 89522, 105633, 118129, 128339, 136971, 144449, 151045, 156945, 162282, 167155),
    (24000, 57271, 76733, 90542, 101253, 110004, 117404, 123813, 129467, 134524, 139099, 143276),
    (14000, 33408, 44761, 52816, 59064, 64169, 68485, 72224, 75522, 78472, 81141, 83577),
    (22000, 52498, 70339, 82997, 92815, 100837, 107620, 113495, 118678, 123314, 127507, 131336),
    (26000, 62044, 83128, 98087, 109691, 119172, 127187, 134131, 140256, 145734, 150691, 155215),
    (32000, 76361, 102311, 120723, 135004, 146673, 156538, 165084, 172622, 179365, 185465, 191034),
    (34000, 81134, 108706, 128268, 143442, 155840, 166322, 175402, 183411, 190576, 197057, 202974),
)
EXAMPLE_INVESTMENT = {"dirty": 65000.0, "clean": 104000.0}
DEFAULT_CLEAN_EMISSION_RATIO = 0.5


def tax_ramp(periods: int, simulated_periods: int, start: float = 35.0, end: float = 70.0) -> np.ndarray:
    """Linear ramp over the decision periods, held at ``end`` afterwards."""
    ramp = np.linspace(start, end, periods) if periods > 1 else np.array([end])
    return np.concatenate([ramp, np.full(simulated_periods - periods, end)])


def builtin_example(
    periods: int = 8,
    simulated_periods: int = 12,
    candidates_per_technology: int | None = None,
    clean_emission_ratio: float = DEFAULT_CLEAN_EMISSION_RATIO,
) -> Instance:
    """Eight-item example with one dirty and one clean technology.

    The source emission data list one rate per item for both technologies;
    the clean column is scaled by ``clean_emission_ratio`` (0.5 by default).
    """
    if not 1 <= periods <= simulated_periods <= 12:
        raise ValueError("need 1 <= periods <= simulated_periods <= 12")
    T = simulated_periods
    demand = [row[:T] for row in EXAMPLE_DEMAND]
    mu, v, l, ftm = 0.85, 20000.0, 2080.0, 5000.0
    if candidates_per_technology is None:
        peak = max(sum(d[t] / r for d, r in zip(demand, EXAMPLE_RATES)) for t in range(T))
        candidates_per_technology = candidate_count(peak, mu, l, 3)
    prototypes = {
        tech: Machine(id=tech, technology=tech, useful_life=v, max_utilization=mu,
                      maintenance_interval=ftm, maintenance_durations=(4.0,), workers=2)
        for tech in ("dirty", "clean")
    }
    machines, technologies = _replicate(prototypes, {t: candidates_per_technology for t in prototypes})
    K = len(machines)
    ep_scale = {"dirty": 1.0, "clean": clean_emission_ratio}
    items = tuple(
        Item(id=str(i + 1), demand=tuple(float(x) for x in demand[i]),
             rate=(float(EXAMPLE_RATES[i]),) * K,
             emission=tuple(EXAMPLE_EMISSION[i] * ep_scale[m.technology] for m in machines),
             holding_emission=EXAMPLE_HOLDING_EMISSION[i])
        for i in range(8)
    )
    rate = 0.10
    ci = np.array([EXAMPLE_INVESTMENT[m.technology] for m in machines])
    ones_k = np.ones(K)
    costs = CostSchedule(
        investment=discounted(ci, rate, T),
        production=discounted(np.repeat(np.array(EXAMPLE_PRODUCTION_COST)[:, None], K, axis=1), rate, T),
        maintenance=discounted(600.0 * ones_k, rate, T),
        labor=discounted(4500.0 * ones_k, rate, T),
        hiring=discounted(5000.0 * ones_k, rate, T),
        firing=discounted(5000.0 * ones_k, rate, T),
        shift_open=discounted(np.full(4, 5000.0), rate, T),
        shift_close=discounted(np.full(4, 5000.0), rate, T),
        holding=discounted(np.array(EXAMPLE_HOLDING_COST), rate, T),
        tax=tax_ramp(periods, T),
        salvage=discounted(0.8 * ci / v, rate, T),
        discount_rate=rate,
        increasing_tax=True,
    )
    inst = Instance(machines=machines, items=items, technologies=technologies,
                    horizon=Horizon(periods=periods, simulated_periods=T, shift_length=l,
                                    allowed_shifts=(0, 1, 2, 3), initial_shifts=0),
                    costs=costs, options=ModelOptions(maintenance=True, single_shift=False))
    return validate(inst)


def _replicate(prototypes: Mapping[str, Machine], counts: Mapping[str, int]):
    machines: list[Machine] = []
    technologies = []
    for tech, proto in prototypes.items():
        ids = []
        for n in range(counts[tech]):
            mid = f"{tech}-{n + 1}"
            machines.append(dataclasses.replace(proto, id=mid, technology=tech, pool=CANDIDATE,
                                                initial_life=0.0, initial_state=0))
            ids.append(mid)
        technologies.append(Technology(id=tech, machines=tuple(ids)))
    return tuple(machines), tuple(technologies)


# ----------------------------------------------------------------- aggregation


def aggregate_to_single_product(inst: Instance, xi: float, candidates_per_technology: int | None = None) -> Instance:
    """Collapse all items into one equivalent product with demand ``xi * sum_i d_it``.

    Rates, emissions and item costs are averaged with period-1 demand shares.
    Maintenance is switched off and a single work shift is imposed.  Candidate
    machines are regenerated per technology (from the first machine of each
    technology) so that the scaled demand can be met on one shift.
    """
    if not xi > 0:
        raise ValueError("scale factor xi must be positive")
    d = inst.demand
    T = inst.n_periods
    first = d[:, 0]
    weights = first / first.sum() if first.sum() > 0 else np.full(len(inst.items), 1.0 / len(inst.items))
    agg_demand = xi * d.sum(axis=0)

    members = inst.technology_members()
    protos = {tech.id: inst.machines[idx[0]] for tech, idx in zip(inst.technologies, members)}
    proto_k = {tech.id: idx[0] for tech, idx in zip(inst.technologies, members)}
    rates, eps = inst.rates, inst.emissions
    agg_rate = {t: float(weights @ rates[:, k]) for t, k in proto_k.items()}
    agg_ep = {t: float(weights @ eps[:, k]) for t, k in proto_k.items()}

    l = inst.horizon.shift_length
    if candidates_per_technology is None:
        counts = {t: candidate_count(float(agg_demand.max()) / agg_rate[t], protos[t].max_utilization, l, 1)
                  for t in protos}
    else:
        counts = {t: candidates_per_technology for t in protos}
    machines, technologies = _replicate(protos, counts)
    src = [proto_k[m.technology] for m in machines]

    item = Item(
        id="aggregate",
        demand=tuple(float(x) for x in agg_demand),
        rate=tuple(agg_rate[m.technology] for m in machines),
        emission=tuple(agg_ep[m.technology] for m in machines),
        holding_emission=float(weights @ np.array([it.holding_emission for it in inst.items])),
        initial_inventory=xi * sum(it.initial_inventory for it in inst.items),
    )
    c = inst.costs
    costs = dataclasses.replace(
        c,
        investment=c.investment[src], maintenance=c.maintenance[src], labor=c.labor[src],
        hiring=c.hiring[src], firing=c.firing[src], salvage=c.salvage[src],
        production=np.einsum("i,ikt->kt", weights, c.production)[src][None, :, :],
        holding=(weights @ c.holding)[None, :],
    )
    out = Instance(machines=machines, items=(item,), technologies=technologies, horizon=inst.horizon,
                   costs=costs, options=ModelOptions(maintenance=False, single_shift=True))
    assert out.n_periods == T
    return validate(out)


# ------------------------------------------------------------ random instances


def random_instance(rng: np.random.Generator, periods: int = 3, machines: int = 2, items: int = 2,
                    existing: bool | None = None) -> Instance:
    """Small random single-shift instance without maintenance.

    Used for cross-checking solvers; with ``machines=2`` the two machines
    belong to different technologies.  ``existing=None`` lets the generator
    decide whether the first machine is already installed.
    """
    T, K, I = periods, machines, items
    if existing is None:
        existing = bool(rng.random() < 0.3)
    techs = ["dirty", "clean"][:K] if K <= 2 else [f"tech{j + 1}" for j in range(K)]
    life = float(rng.choice([1500.0, 3000.0, 20000.0]))
    ms = []
    for k in range(K):
        pre = existing and k == 0
        ms.append(Machine(id=f"m{k + 1}", technology=techs[k], pool=EXISTING if pre else CANDIDATE,
                          useful_life=life, max_utilization=float(rng.uniform(0.6, 1.0)),
                          maintenance_interval=min(life, 1000.0), workers=int(rng.integers(1, 4)),
                          initial_life=float(rng.uniform(500.0, life)) if pre else 0.0,
                          initial_state=1 if pre else 0))
    rate = rng.uniform(0.5, 2.0, size=(I, K))
    ep = rng.uniform(0.05, 1.0, size=(I, K))
    its = tuple(
        Item(id=f"i{i + 1}", demand=tuple(float(x) for x in np.round(rng.uniform(0.0, 1200.0 / I, T))),
             rate=tuple(float(x) for x in rate[i]), emission=tuple(float(x) for x in ep[i]),
             holding_emission=float(rng.uniform(0.0, 0.1)),
             initial_inventory=float(np.round(rng.uniform(0.0, 100.0))))
        for i in range(I)
    )
    ci = rng.uniform(500.0, 3000.0, size=K)

    def tab(lo, hi, *shape):
        return rng.uniform(lo, hi, size=shape + (T,))

    costs = CostSchedule(
        investment=ci[:, None] * rng.uniform(0.8, 1.0, size=(K, T)),
        production=tab(0.1, 2.0, I, K),
        maintenance=tab(0.0, 100.0, K),
        labor=tab(100.0, 500.0, K),
        hiring=tab(50.0, 300.0, K),
        firing=tab(50.0, 300.0, K),
        shift_open=tab(50.0, 300.0, 4),
        shift_close=tab(50.0, 300.0, 4),
        holding=tab(0.05, 0.5, I),
        tax=np.sort(rng.uniform(0.0, 20.0, size=T)),
        salvage=(ci / life)[:, None] * rng.uniform(0.0, 0.8, size=(K, T)),
        discount_rate=0.0,
        increasing_tax=True,
    )
    members = {t: tuple(m.id for m in ms if m.technology == t) for t in techs}
    inst = Instance(machines=tuple(ms), items=its,
                    technologies=tuple(Technology(id=t, machines=members[t]) for t in techs),
                    horizon=Horizon(periods=T, simulated_periods=T, allowed_shifts=(0, 1),
                                    initial_shifts=1 if existing else 0),
                    costs=costs, options=ModelOptions(maintenance=False, single_shift=True))
    return validate(inst)
