"""The mixed-integer polygon-fitting model and its exact evaluation.

The model's binaries are never searched directly: for fixed line coefficients
the big-M rows force ``l[p, k] = [affine_k(p) <= 0]`` and the logic rows force
``z[p] = all_k l[p, k]``, so ``implied_assignment`` is the only integer point
consistent with a given set of lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import DEFAULT_EPS, LinePolygon, affine_forms, is_valid_ngon, _coeffs
from ..kde import WeightedGrid

COVERAGE_ATOL = 1e-12


@dataclass(frozen=True)
class PolyModel:
    """Cells, weights and constants of one polygon-fitting instance.

    ``cells`` lists the grid indices taking part (all ``N*N`` for the full
    model, the sampled subset for a reduced one) in lexicographic order;
    ``weights``, ``bigM1`` and ``bigM2`` are aligned with it.
    """

    wg: WeightedGrid
    n: int
    alpha: float
    anchor_idx: tuple[int, int]
    anchor_pt: tuple[float, float]
    cells: np.ndarray
    weights: np.ndarray
    bigM1: np.ndarray
    bigM2: np.ndarray
    eps: float
    coeff_bound: float

    @property
    def points(self) -> np.ndarray:
        g = self.wg.grid
        return np.column_stack([g.xs[self.cells[:, 0]], g.ys[self.cells[:, 1]]])

    @property
    def offsets(self) -> np.ndarray:
        """Cell coordinates relative to the anchor."""
        return self.points - np.asarray(self.anchor_pt)

    @property
    def is_full(self) -> bool:
        return len(self.cells) == self.wg.grid.N ** 2

    def grid_view(self, values: np.ndarray, fill=np.nan) -> np.ndarray:
        """Scatter a per-cell array back onto the ``N x N`` grid."""
        N = self.wg.grid.N
        out = np.full((N, N) + values.shape[1:], fill, dtype=np.result_type(values, type(fill)))
        out[self.cells[:, 0], self.cells[:, 1]] = values
        return out


def default_coeff_bound(wg: WeightedGrid, anchor_pt) -> float:
    """``4 / d`` with ``d`` the anchor's distance to the grid boundary.

    ``d`` is floored at half a cell so an anchor on the boundary still gets a
    finite box.
    """
    g = wg.grid
    x, y = anchor_pt
    d = min(x - g.xs[0], g.xs[-1] - x, y - g.ys[0], g.ys[-1] - y)
    d = max(d, 0.5 * min(g.dx, g.dy))
    return 4.0 / d


def big_m(offsets: np.ndarray, coeff_bound: float, eps: float) -> np.ndarray:
    """Upper bound on ``|affine form| + eps`` over the coefficient box."""
    return coeff_bound * (np.abs(offsets[:, 0]) + np.abs(offsets[:, 1])) + 1.0 + eps


def _argmax_lex(cells: np.ndarray, weights: np.ndarray) -> int:
    # cells are lexicographically sorted, so the first maximum wins ties
    return int(np.argmax(weights))


def _assemble(wg, cells, weights, n, alpha, eps, coeff_bound) -> PolyModel:
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    order = np.lexsort((cells[:, 1], cells[:, 0]))
    cells, weights = cells[order], weights[order]
    k = _argmax_lex(cells, weights)
    anchor_idx = (int(cells[k, 0]), int(cells[k, 1]))
    anchor_pt = wg.grid.node(*anchor_idx)
    if coeff_bound is None:
        coeff_bound = default_coeff_bound(wg, anchor_pt)
    if not coeff_bound > 0:
        raise ValueError("coeff_bound must be positive")
    g = wg.grid
    offs = np.column_stack([g.xs[cells[:, 0]] - anchor_pt[0], g.ys[cells[:, 1]] - anchor_pt[1]])
    M = big_m(offs, coeff_bound, eps)
    for arr in (cells, weights, M):
        arr.setflags(write=False)
    return PolyModel(wg, int(n), float(alpha), anchor_idx, anchor_pt, cells, weights,
                     M, M, float(eps), float(coeff_bound))


def build_model(wg: WeightedGrid, n: int, alpha: float, eps: float = DEFAULT_EPS,
                coeff_bound: float | None = None) -> PolyModel:
    """Full model over every grid node, anchored at the heaviest node."""
    N = wg.grid.N
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    cells = np.column_stack([I.ravel(), J.ravel()])
    return _assemble(wg, cells, wg.w.ravel(), n, alpha, eps, coeff_bound)


def reduced_model(wg: WeightedGrid, cells, weights, n: int, alpha: float,
                  eps: float = DEFAULT_EPS, coeff_bound: float | None = None) -> PolyModel:
    """Model restricted to ``cells`` carrying the given (renormalised) weights."""
    return _assemble(wg, cells, weights, n, alpha, eps, coeff_bound)


@dataclass(frozen=True)
class Assignment:
    """Binaries over the model's cells: ``l`` is ``(m, n)``, ``z`` is ``(m,)``."""

    l: np.ndarray
    z: np.ndarray

    def z_grid(self, model: PolyModel) -> np.ndarray:
        return model.grid_view(self.z, fill=False)

    def l_grid(self, model: PolyModel) -> np.ndarray:
        return model.grid_view(self.l, fill=False)


def _lines_array(lines) -> np.ndarray:
    if isinstance(lines, LinePolygon):
        return lines.coeffs
    return _coeffs(lines)


def assignment_from_coeffs(coeffs: np.ndarray, model: PolyModel) -> Assignment:
    off = model.offsets
    aff = affine_forms(off[:, 0], off[:, 1], coeffs[:, 0], coeffs[:, 1])
    l = aff <= 0.0
    return Assignment(l, np.all(l, axis=1))


def implied_assignment(lines, model: PolyModel) -> Assignment:
    """The unique ``(l, z)`` the big-M and logic rows allow for these lines."""
    c = _lines_array(lines)
    if len(c) != model.n:
        raise ValueError(f"model has n={model.n} lines, got {len(c)}")
    if not is_valid_ngon(c, model.eps):
        raise ValueError("lines do not pass polygon validation")
    return assignment_from_coeffs(c, model)


def evaluate(lines, model: PolyModel) -> tuple[bool, int, float]:
    """``(feasible, objective, coverage)``; infeasibility is returned, not raised."""
    c = _lines_array(lines)
    asg = assignment_from_coeffs(c, model)
    coverage = float(np.dot(model.weights, asg.z))
    objective = int(np.count_nonzero(asg.z))
    feasible = (len(c) == model.n and is_valid_ngon(c, model.eps)
                and coverage >= model.alpha - COVERAGE_ATOL)
    return bool(feasible), objective, coverage


def within_box(coeffs: np.ndarray, coeff_bound: float) -> bool:
    return bool(np.all(np.abs(coeffs) <= coeff_bound * (1 + 1e-12)))


def level_set_offsets(model: PolyModel) -> np.ndarray:
    """Offsets of the smallest weight superlevel set reaching ``alpha`` in the model."""
    w = model.weights
    order = np.lexsort((model.cells[:, 1], model.cells[:, 0], -w))
    cum = np.cumsum(w[order])
    hit = np.nonzero(cum >= model.alpha - COVERAGE_ATOL)[0]
    k = int(hit[0]) + 1 if len(hit) else len(order)
    return model.offsets[order[:k]]


__all__ = [
    "PolyModel", "Assignment", "build_model", "reduced_model", "implied_assignment",
    "evaluate", "big_m", "default_coeff_bound", "level_set_offsets", "COVERAGE_ATOL",
]
