"""Plain-text algebraic export of the mixed-integer polygon model.

File layout (one item per line, ``#`` starts a comment)::

    MODEL reachset-polygon 1
    PARAM n 4
    PARAM alpha 0.9
    ...
    VAR a_0 continuous -4.0 4.0
    VAR l_3_7_0 binary 0 1
    MINIMIZE +1 z_0_0 +1 z_0_1 ...
    ROW detcon_0 : +1 a_0*b_1 -1 b_0*a_1 >= 1e-06
    ...
    END

A term is ``<coef> <var>`` or ``<coef> <var>*<var>``. Row families:
``detcon_i`` (n rows), ``no1cons_i_k`` (n(n-2) rows), ``lab1_i_j_k`` and
``lab2_i_j_k`` (big-M links), ``zl1_i_j_k`` and ``zl2_i_j`` (logic),
``anchor`` and ``coverage``. Coefficients are written with ``repr`` so the
file round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .model import PolyModel

Term = tuple  # (coef, var) or (coef, var1, var2)


@dataclass(frozen=True)
class Row:
    name: str
    terms: tuple
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class Var:
    name: str
    kind: str  # "continuous" | "binary"
    lo: float
    hi: float


@dataclass(frozen=True)
class ExportedModel:
    params: dict
    variables: tuple
    objective: tuple
    rows: tuple

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def family(self, prefix: str) -> list:
        return [r for r in self.rows if r.name.split("_")[0] == prefix or r.name == prefix]


def _a(k):
    return f"a_{k}"


def _b(k):
    return f"b_{k}"


def build_rows(model: PolyModel) -> ExportedModel:
    """The model as explicit variables, objective and constraint rows."""
    n, eps, cb = model.n, model.eps, model.coeff_bound
    cells = [(int(i), int(j)) for i, j in model.cells]
    offs = model.offsets
    variables = [Var(v(k), "continuous", -cb, cb) for k in range(n) for v in (_a, _b)]
    variables += [Var(f"l_{i}_{j}_{k}", "binary", 0, 1) for i, j in cells for k in range(n)]
    variables += [Var(f"z_{i}_{j}", "binary", 0, 1) for i, j in cells]

    objective = tuple((1, f"z_{i}_{j}") for i, j in cells)
    rows = []
    for i in range(n):
        j = (i + 1) % n
        rows.append(Row(f"detcon_{i}", ((1, _a(i), _b(j)), (-1, _b(i), _a(j))), ">=", eps))
    for i in range(n):
        j = (i + 1) % n
        for k in range(n):
            if k in (i, j):
                continue
            # -a_k (b_i - b_j) + b_k (a_i - a_j) - (a_i b_j - b_i a_j) <= -eps
            terms = ((-1, _a(k), _b(i)), (1, _a(k), _b(j)), (1, _b(k), _a(i)),
                     (-1, _b(k), _a(j)), (-1, _a(i), _b(j)), (1, _b(i), _a(j)))
            rows.append(Row(f"no1cons_{i}_{k}", terms, "<=", -eps))
    for p, (ci, cj) in enumerate(cells):
        dx, dy = float(offs[p, 0]), float(offs[p, 1])
        M1, M2 = float(model.bigM1[p]), float(model.bigM2[p])
        for k in range(n):
            l = f"l_{ci}_{cj}_{k}"
            # l = 1  =>  affine <= 0
            rows.append(Row(f"lab1_{ci}_{cj}_{k}", ((dx, _a(k)), (dy, _b(k)), (M1, l)), "<=", M1 + 1.0))
            # l = 0  =>  affine >= eps
            rows.append(Row(f"lab2_{ci}_{cj}_{k}", ((-dx, _a(k)), (-dy, _b(k)), (-M2, l)), "<=", -1.0 - eps))
        for k in range(n):
            rows.append(Row(f"zl1_{ci}_{cj}_{k}", ((1, f"z_{ci}_{cj}"), (-1, f"l_{ci}_{cj}_{k}")), "<=", 0))
        rows.append(Row(f"zl2_{ci}_{cj}",
                        tuple((1, f"l_{ci}_{cj}_{k}") for k in range(n)) + ((-1, f"z_{ci}_{cj}"),),
                        "<=", n - 1))
    ai, aj = model.anchor_idx
    rows.append(Row("anchor", ((1, f"z_{ai}_{aj}"),), "=", 1))
    rows.append(Row("coverage", tuple((float(w), f"z_{i}_{j}") for (i, j), w in zip(cells, model.weights)),
                    ">=", model.alpha))
    params = {"n": n, "N": model.wg.grid.N, "cells": len(cells), "alpha": model.alpha, "eps": eps,
              "coeff_bound": cb, "anchor_i": ai, "anchor_j": aj,
              "anchor_x": model.anchor_pt[0], "anchor_y": model.anchor_pt[1]}
    return ExportedModel(params, tuple(variables), objective, tuple(rows))


def _fmt_num(x) -> str:
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def _fmt_terms(terms) -> str:
    out = []
    for t in terms:
        coef = _fmt_num(t[0])
        if not coef.startswith("-"):
            coef = "+" + coef
        out.append(f"{coef} {'*'.join(t[1:])}")
    return " ".join(out)


def export_model(model: PolyModel, path) -> Path:
    """Write ``model`` in the documented text format; returns the path."""
    em = build_rows(model)
    path = Path(path)
    with path.open("w") as fh:
        fh.write("MODEL reachset-polygon 1\n")
        for key, val in em.params.items():
            fh.write(f"PARAM {key} {_fmt_num(val)}\n")
        for v in em.variables:
            fh.write(f"VAR {v.name} {v.kind} {_fmt_num(v.lo)} {_fmt_num(v.hi)}\n")
        fh.write(f"MINIMIZE {_fmt_terms(em.objective)}\n")
        for r in em.rows:
            fh.write(f"ROW {r.name} : {_fmt_terms(r.terms)} {r.sense} {_fmt_num(r.rhs)}\n")
        fh.write("END\n")
    return path


def _num(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def _parse_terms(tokens: list) -> tuple:
    if len(tokens) % 2:
        raise ValueError(f"unbalanced term list: {' '.join(tokens)}")
    terms = []
    for c, v in zip(tokens[0::2], tokens[1::2]):
        terms.append((_num(c.lstrip("+")),) + tuple(v.split("*")))
    return tuple(terms)


def read_model(path) -> ExportedModel:
    """Parse a file written by ``export_model``."""
    params, variables, objective, rows = {}, [], None, []
    with Path(path).open() as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("MODEL reachset-polygon"):
        raise ValueError(f"{path}: not a reachset model file")
    for lineno, ln in enumerate(lines[1:], start=2):
        tok = ln.split()
        kind = tok[0]
        if kind == "PARAM":
            params[tok[1]] = _num(tok[2])
        elif kind == "VAR":
            variables.append(Var(tok[1], tok[2], _num(tok[3]), _num(tok[4])))
        elif kind == "MINIMIZE":
            objective = _parse_terms(tok[1:])
        elif kind == "ROW":
            if tok[2] != ":":
                raise ValueError(f"{path}: entry {lineno}: malformed row")
            rows.append(Row(tok[1], _parse_terms(tok[3:-2]), tok[-2], _num(tok[-1])))
        elif kind == "END":
            break
        else:
            raise ValueError(f"{path}: entry {lineno}: unknown keyword {kind!r}")
    if objective is None:
        raise ValueError(f"{path}: missing MINIMIZE line")
    return ExportedModel(params, tuple(variables), objective, tuple(rows))
