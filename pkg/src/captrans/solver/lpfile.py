"""LP-format export and external solution import.

The exported file uses the common CPLEX-style LP layout (Minimize, Subject
To, Bounds, Binaries, End) with the model's own variable names, so any
external MILP solver can read it and its answer can be mapped back.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..model import MilpModel, Plan, decode

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")
_SENSE_OUT = {"<": "<=", ">": ">=", "=": "="}
_SENSE_IN = {"<=": "<", "=<": "<", "<": "<", ">=": ">", "=>": ">", ">": ">", "=": "="}
_WRAP = 8  # terms per physical line


class LPFormatError(ValueError):
    """Malformed LP or solution file, or names unusable in the LP format."""


def _num(v: float) -> str:
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return "%.17g" % v


def _terms(cols, vals, names) -> list[str]:
    out = []
    for j, v in zip(cols, vals):
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {_num(abs(v))} {names[j]}")
    return out


def _wrap(head: str, terms: list[str], tail: str = "") -> list[str]:
    lines = []
    for n in range(0, max(len(terms), 1), _WRAP):
        chunk = " ".join(terms[n:n + _WRAP])
        lines.append(("   " if n else head) + chunk)
    if tail:
        lines[-1] += tail
    return lines


def check_names(model: MilpModel) -> None:
    """Reject duplicate or unrepresentable variable and row names."""
    for kind, names in (("variable", model.names), ("row", model.row_names)):
        seen = set()
        for name in names:
            if not _NAME.match(name) or name.lower() in ("inf", "infinity", "free"):
                raise LPFormatError(f"{kind} name {name!r} cannot be written in LP format")
            if name in seen:
                raise LPFormatError(f"duplicate {kind} name {name!r}")
            seen.add(name)
    clash = set(model.names) & set(model.row_names)
    if clash:
        raise LPFormatError(f"names used for both rows and variables: {sorted(clash)[:3]}")


def lp_text(model: MilpModel) -> str:
    check_names(model)
    names = model.names
    lines = [f"\\ {model.n_vars} variables, {model.n_rows} rows", "Minimize"]
    nz = np.flatnonzero(model.c)
    obj = _terms(nz, model.c[nz], names)
    if model.offset:
        obj.append(f"{'-' if model.offset < 0 else '+'} {_num(abs(model.offset))}")
    if not obj:
        obj = [f"+ 0 {names[0]}"] if names else []
    lines += _wrap(" obj: ", obj)
    lines.append("Subject To")
    A = sp.csr_matrix(model.A)
    for r in range(model.n_rows):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        terms = _terms(A.indices[lo:hi], A.data[lo:hi], names) or [f"+ 0 {names[0]}"]
        lines += _wrap(f" {model.row_names[r]}: ", terms, f" {_SENSE_OUT[model.sense[r]]} {_num(model.rhs[r])}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        lb, ub = model.lb[j], model.ub[j]
        if math.isinf(lb) and math.isinf(ub):
            lines.append(f" {name} free")
        else:
            lines.append(f" {_num(lb)} <= {name} <= {_num(ub)}")
    bins = [names[j] for j in np.flatnonzero(model.binary)]
    if bins:
        lines.append("Binaries")
        lines += [" " + " ".join(bins[n:n + _WRAP]) for n in range(0, len(bins), _WRAP)]
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass
class ParsedLP:
    names: list[str]
    c: np.ndarray
    offset: float
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    row_names: list[str]
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray


_TOKEN = re.compile(r"\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|<=|>=|=<|=>|[<>=]|[+-]|:|[^\s:<>=+-]+)")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise LPFormatError(f"cannot tokenise {text[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _linear(tokens: list[str]) -> tuple[list[tuple[str, float]], float]:
    terms, const = [], 0.0
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
        elif _is_number(tok) and tok.lower() not in ("inf", "infinity", "nan"):
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = float(tok)
        else:
            terms.append((tok, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
    if coef is not None:
        const += sign * coef
    return terms, const


def parse_lp(text: str) -> ParsedLP:
    """Parse the subset of the LP format written by :func:`lp_text`."""
    section = None
    buf: dict[str, list[str]] = {"obj": [], "con": [], "bnd": [], "bin": []}
    keys = {"minimize": "obj", "subject to": "con", "bounds": "bnd", "binaries": "bin", "binary": "bin"}
    ended = False
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in keys:
            section = keys[low]
            continue
        if low == "end":
            ended = True
            break
        if section is None:
            raise LPFormatError(f"text before the objective section: {line!r}")
        buf[section].append(line)
    if not ended:
        raise LPFormatError("missing End marker")

    names: list[str] = []
    index: dict[str, int] = {}

    def col(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    toks = _tokens(" ".join(buf["obj"]))
    if len(toks) >= 2 and toks[1] == ":":
        toks = toks[2:]
    obj_terms, offset = _linear(toks)
    obj = [(col(n), v) for n, v in obj_terms]

    rows, sense, rhs, row_names = [], [], [], []
    current: list[str] = []
    for line in buf["con"]:
        current.append(line)
        toks = _tokens(" ".join(current))
        ops = [i for i, t in enumerate(toks) if t in _SENSE_IN]
        if not ops or ops[-1] == len(toks) - 1:
            continue
        if len(toks) < 2 or toks[1] != ":":
            raise LPFormatError(f"unnamed row: {' '.join(current)!r}")
        k = ops[-1]
        if len(toks) != k + 2 and not (len(toks) == k + 3 and toks[k + 1] in "+-"):
            raise LPFormatError(f"malformed row: {' '.join(current)!r}")
        terms, const = _linear(toks[2:k])
        val = float("".join(toks[k + 1:]))
        rows.append([(col(n), v) for n, v in terms])
        sense.append(_SENSE_IN[toks[k]])
        rhs.append(val - const)
        row_names.append(toks[0])
        current = []
    if current:
        raise LPFormatError(f"incomplete row: {' '.join(current)!r}")

    bounds: dict[int, tuple[float, float]] = {}
    for line in buf["bnd"]:
        toks = line.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[col(toks[0])] = (-math.inf, math.inf)
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            bounds[col(toks[2])] = (float(toks[0]), float(toks[4]))
        else:
            raise LPFormatError(f"unsupported bound line: {line!r}")
    bins = [col(n) for line in buf["bin"] for n in line.split()]

    n = len(names)
    c = np.zeros(n)
    for j, v in obj:
        c[j] += v
    lb, ub = np.zeros(n), np.full(n, math.inf)
    for j, (lo, hi) in bounds.items():
        lb[j], ub[j] = lo, hi
    binary = np.zeros(n, dtype=bool)
    binary[bins] = True
    data, ri, ci = [], [], []
    for r, terms in enumerate(rows):
        for j, v in terms:
            if v != 0.0:
                ri.append(r)
                ci.append(j)
                data.append(v)
    A = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    A.sum_duplicates()
    return ParsedLP(names, c, offset, A, np.array(sense, dtype="U1"), np.array(rhs), row_names, lb, ub, binary)


def _same_model(model: MilpModel, parsed: ParsedLP) -> list[str]:
    problems = []
    pos = {name: j for j, name in enumerate(parsed.names)}
    missing = [n for n in model.names if n not in pos]
    if missing or len(parsed.names) != model.n_vars:
        return [f"variable set differs ({len(missing)} missing)"]
    perm = np.array([pos[n] for n in model.names])
    if parsed.row_names != list(model.row_names):
        problems.append("row names differ")
    if not np.array_equal(parsed.c[perm], model.c) or parsed.offset != model.offset:
        problems.append("objective differs")
    if not np.array_equal(parsed.lb[perm], model.lb) or not np.array_equal(parsed.ub[perm], model.ub):
        problems.append("bounds differ")
    if not np.array_equal(parsed.binary[perm], model.binary):
        problems.append("binary set differs")
    if not problems:
        A = parsed.A[:, perm].tocsr()
        diff = A - sp.csr_matrix(model.A)
        diff.eliminate_zeros()
        if diff.nnz:
            problems.append("constraint coefficients differ")
        if not np.array_equal(parsed.sense, model.sense) or not np.array_equal(parsed.rhs, model.rhs):
            problems.append("row senses or right-hand sides differ")
    return problems


def export_lp_file(model: MilpModel, path) -> Path:
    """Write ``model`` in LP format and verify the file parses back to the same model."""
    text = lp_text(model)
    problems = _same_model(model, parse_lp(text))
    if problems:
        raise LPFormatError("round-trip check failed: " + "; ".join(problems))
    path = Path(path)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def read_solution(path, model: MilpModel) -> np.ndarray:
    """Read ``name value`` lines into a vector ordered like ``model.names``."""
    pos = {name: j for j, name in enumerate(model.names)}
    x = np.full(model.n_vars, np.nan)
    text = Path(path).read_text(encoding="utf-8")
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LPFormatError(f"line {n}: expected 'name value', got {raw!r}")
        name, val = parts
        if name not in pos:
            raise LPFormatError(f"line {n}: unknown variable {name!r}")
        try:
            x[pos[name]] = float(val)
        except ValueError:
            raise LPFormatError(f"line {n}: bad value {val!r}") from None
    missing = np.flatnonzero(np.isnan(x))
    if missing.size:
        raise LPFormatError(f"solution lacks {missing.size} variables, e.g. {model.names[missing[0]]!r}")
    return x


def write_solution(path, names, values, header: str | None = None) -> Path:
    path = Path(path)
    lines = [f"# {header}"] if header else []
    lines += [f"{n} {_num(float(v))}" for n, v in zip(names, values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def import_external_solution(path, model: MilpModel, tol: float = 1e-6) -> Plan:
    """Load an externally computed solution and re-verify it against every row."""
    x = read_solution(path, model)
    b = model.binary
    near = np.abs(x[b] - np.round(x[b])) <= tol
    xb = x[b]
    xb[near] = np.round(xb[near])
    x[b] = xb
    return decode(model, x, tol=tol)
