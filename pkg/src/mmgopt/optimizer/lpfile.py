"""Read/write the CPLEX-style LP text format (the subset this package emits)."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .model import EQ, GE, LE, LinearProgram

_PER_LINE = 6


def _num(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def _terms(pairs) -> list[str]:
    out = []
    for name, v in pairs:
        sign = "-" if v < 0 else "+"
        out.append(f"{sign} {repr(abs(float(v)))} {name}")
    return out


def _wrap(head: str, terms: list[str]) -> list[str]:
    if not terms:
        return [head + " 0"]
    lines = []
    for k in range(0, len(terms), _PER_LINE):
        chunk = " ".join(terms[k:k + _PER_LINE])
        lines.append((head + " " if k == 0 else "   ") + chunk)
    return lines


def write_lp(lp: LinearProgram, path=None) -> str:
    A = lp.matrix().tocsr()
    names = lp.col_names
    out = [f"\\ {lp.name}", "Minimize"]
    obj = [(names[j], c) for j, c in enumerate(lp.cost) if c != 0.0]
    terms = _terms(obj)
    if lp.obj_offset != 0.0:
        terms.append(("- " if lp.obj_offset < 0 else "+ ") + repr(abs(lp.obj_offset)))
    out += _wrap(" obj:", terms)
    out.append("Subject To")
    for i in range(lp.n_rows):
        s, e = A.indptr[i], A.indptr[i + 1]
        pairs = [(names[j], v) for j, v in zip(A.indices[s:e], A.data[s:e])]
        lines = _wrap(f" {lp.row_names[i]}:", _terms(pairs))
        lines[-1] += f" {lp.sense[i]} {repr(float(lp.rhs[i]))}"
        out += lines
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = lp.lo[j], lp.hi[j]
        if lo == -np.inf and hi == np.inf:
            out.append(f" {name} free")
        else:
            out.append(f" {_num(lo)} <= {name} <= {_num(hi)}")
    bins = [names[j] for j, b in enumerate(lp.binary) if b]
    if bins:
        out.append("Binaries")
        out += [f" {n}" for n in bins]
    out.append("End")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


_SECTIONS = {"minimize": "obj", "subject to": "rows", "bounds": "bounds", "binaries": "bins",
             "binary": "bins", "end": "end"}


def _parse_terms(tokens: list[str]):
    """Yield (name or None, coef) from a flat token list like ['+', '3.0', 'x', '-', '2', 'y']."""
    k = 0
    sign = 1.0
    while k < len(tokens):
        tok = tokens[k]
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            k += 1
            continue
        try:
            coef = float(tok)
        except ValueError:
            yield tok, sign
            sign = 1.0
            k += 1
            continue
        if k + 1 < len(tokens) and tokens[k + 1] not in "+-":
            yield tokens[k + 1], sign * coef
            k += 2
        else:
            yield None, sign * coef
            k += 1
        sign = 1.0


def read_lp(source) -> LinearProgram:
    text = Path(source).read_text() if isinstance(source, (str, Path)) and "\n" not in str(source) \
        else str(source)
    section = None
    name = "lp"
    chunks: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bins": []}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            name = line[1:].strip() or name
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "end":
                break
            continue
        chunks[section].append(line)

    lp = LinearProgram(name)
    cols: dict[str, int] = {}
    cost: dict[str, float] = {}
    offset = 0.0

    def col(n):
        if n not in cols:
            cols[n] = lp.add_col(n, 0.0, np.inf)
        return cols[n]

    # the Bounds section lists every column in order, so register those first
    for line in chunks["bounds"]:
        parts = line.split()
        col(parts[0] if len(parts) == 2 else parts[2])
    # objective
    obj_text = " ".join(chunks["obj"])
    head = obj_text.split()[0] if obj_text.split() else ""
    if head.endswith(":"):
        obj_text = obj_text.split(":", 1)[1]
    for n, v in _parse_terms(obj_text.split()):
        if n is None:
            offset += v
        else:
            cost[n] = cost.get(n, 0.0) + v
            col(n)
    # rows: join continuation lines
    rows: list[str] = []
    for line in chunks["rows"]:
        if re.match(r"^[^\s:]+:", line):
            rows.append(line)
        else:
            rows[-1] += " " + line
    for line in rows:
        rname, body = line.split(":", 1)
        m = re.search(r"(<=|>=|=)\s*(\S+)\s*$", body)
        sense = {"<=": LE, ">=": GE, "=": EQ}[m.group(1)]
        rhs = float(m.group(2))
        coefs: dict[int, float] = {}
        for n, v in _parse_terms(body[: m.start()].split()):
            if n is None or n == "0":
                continue
            j = col(n)
            coefs[j] = coefs.get(j, 0.0) + v
        lp.add_row(coefs, sense, rhs, rname.strip())
    for line in chunks["bounds"]:
        parts = line.split()
        if len(parts) == 2 and parts[1].lower() == "free":
            j = col(parts[0])
            lp.set_bounds(j, -np.inf, np.inf)
        elif len(parts) == 5:
            j = col(parts[2])
            lp.set_bounds(j, float(parts[0]), float(parts[4]))
        else:
            raise ValueError(f"unsupported bound line: {line!r}")
    for line in chunks["bins"]:
        for n in line.split():
            lp.binary[col(n)] = True
    for n, v in cost.items():
        lp.cost[cols[n]] = v
    lp.obj_offset = offset
    return lp
