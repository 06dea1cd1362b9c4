"""Continuous search engine behind both polygon solvers.

Lines are parametrised by normal angle ``phi`` and offset ``h > 0``:
``a = cos(phi) / h``, ``b = sin(phi) / h``. Because the binaries follow from
the lines, the search walks over these ``2n`` numbers only, and every
accepted state is feasible: inside the coefficient box, a valid n-gon,
coverage at least ``alpha``, and no excluded cell closer than ``eps`` to a
line. Within the feasible set it anneals the energy

    count_inside + area_weight * polygon_area / cell_area

with a greedy pass after each restart that drops boundary cells and pulls
every line onto its outermost inside cell. The count objective leaves each
line free inside a gap; the returned polygon places it mid-gap (the largest
margin to both sides) unless ``placement="tight"``. Runs are deterministic
for a given generator; ``deadline`` is a safety cap only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..geometry import affine_forms
from .model import COVERAGE_ATOL, PolyModel, level_set_offsets


@dataclass(frozen=True)
class SearchSettings:
    restarts: int = 6
    iters: int = 2500
    t_start: float = 1.5
    t_end: float = 0.01
    area_weight: float = 0.05
    shift_sigma: float = 0.15
    pivot_sigma: float = 0.25
    placement: str = "mid-gap"
    open_gap: str = "grid"

    def __post_init__(self):
        if self.placement not in ("mid-gap", "tight"):
            raise ValueError(f"placement must be 'mid-gap' or 'tight', got {self.placement!r}")
        if self.open_gap not in ("grid", "cell"):
            raise ValueError(f"open_gap must be 'grid' or 'cell', got {self.open_gap!r}")
        if self.restarts < 0 or self.iters < 0:
            raise ValueError("restarts and iters must be >= 0")


@dataclass
class SearchResult:
    coeffs: np.ndarray | None
    count: int
    coverage: float
    area: float
    evaluations: int
    accepted: int
    budget_hit: bool
    starts_feasible: int
    history: list = field(default_factory=list)


def _valid(a, b, eps) -> bool:
    """Pure-Python determinant and opposite-line checks (fast for small n)."""
    n = len(a)
    D = [a[i] * b[(i + 1) % n] - b[i] * a[(i + 1) % n] for i in range(n)]
    for i in range(n):
        if not D[i] >= eps:
            return False
    for i in range(n):
        j = (i + 1) % n
        dbi = b[i] - b[j]
        dai = a[i] - a[j]
        Di = D[i]
        for k in range(n):
            if k == i or k == j:
                continue
            if not (-a[k] * dbi + b[k] * dai - Di) <= -eps:
                return False
    return True


def _area(a, b) -> float:
    n = len(a)
    xs, ys = [], []
    for i in range(n):
        j = (i + 1) % n
        D = a[i] * b[j] - b[i] * a[j]
        xs.append(-(b[i] - b[j]) / D)
        ys.append((a[i] - a[j]) / D)
    s = 0.0
    for i in range(n):
        j = (i + 1) % n
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * s


def _vertex(a, b, i, j):
    D = a[i] * b[j] - b[i] * a[j]
    return -(b[i] - b[j]) / D, (a[i] - a[j]) / D


class _Walker:
    """Mutable search state over one model."""

    def __init__(self, model: PolyModel, settings: SearchSettings):
        self.m = model
        self.s = settings
        off = model.offsets
        self.dx = np.ascontiguousarray(off[:, 0])
        self.dy = np.ascontiguousarray(off[:, 1])
        self.w = np.asarray(model.weights, dtype=float)
        self.n = model.n
        self.eps = model.eps
        self.cb = model.coeff_bound
        self.alpha = model.alpha - COVERAGE_ATOL
        self.cell_area = model.wg.grid.cell_area
        self.cell_dx, self.cell_dy = model.wg.grid.dx, model.wg.grid.dy
        g = model.wg.grid
        ax, ay = model.anchor_pt
        self.box_dx = np.array([g.xs[0] - ax, g.xs[-1] - ax])
        self.box_dy = np.array([g.ys[0] - ay, g.ys[-1] - ay])
        self.open_gap = settings.open_gap
        self.lam = settings.area_weight / self.cell_area
        self.evals = 0

    # state ---------------------------------------------------------------
    def load(self, phi, h) -> bool:
        self.phi = [float(p) for p in phi]
        self.h = [float(x) for x in h]
        self.a = [math.cos(p) / x for p, x in zip(self.phi, self.h)]
        self.b = [math.sin(p) / x for p, x in zip(self.phi, self.h)]
        if not self._box_ok(self.a, self.b) or not _valid(self.a, self.b, self.eps):
            return False
        aff = affine_forms(self.dx, self.dy, np.array(self.a), np.array(self.b))
        if np.any((aff > 0) & (aff <= self.eps)):
            return False
        self.out = aff > 0
        self.nout = self.out.sum(axis=1)
        inside = self.nout == 0
        self.cov = float(np.dot(self.w, inside))
        self.count = int(np.count_nonzero(inside))
        self.area = _area(self.a, self.b)
        return self.cov >= self.alpha

    def _box_ok(self, a, b) -> bool:
        cb = self.cb * (1 + 1e-12)
        return all(abs(x) <= cb for x in a) and all(abs(x) <= cb for x in b)

    def energy(self, count=None, area=None) -> float:
        return (self.count if count is None else count) + self.lam * (self.area if area is None else area)

    def coeffs(self) -> np.ndarray:
        return np.column_stack([self.a, self.b])

    def key(self):
        return (self.count, self.area)

    # proposals -------------------------------------------------------------
    def propose(self, changes):
        """Evaluate replacing lines ``{k: (phi, h)}``; returns a candidate or None."""
        self.evals += 1
        a, b = list(self.a), list(self.b)
        for k, (p, x) in changes.items():
            if not x > 0:
                return None
            a[k] = math.cos(p) / x
            b[k] = math.sin(p) / x
        if not self._box_ok(a, b) or not _valid(a, b, self.eps):
            return None
        nout = self.nout
        cols = {}
        for k in changes:
            col = self.dx * a[k] + self.dy * b[k] - 1.0
            ok = col > 0
            if np.any(ok & (col <= self.eps)):
                return None
            cols[k] = ok
            nout = nout - self.out[:, k] + ok
        inside = nout == 0
        cov = float(np.dot(self.w, inside))
        if cov < self.alpha:
            return None
        return {"changes": changes, "a": a, "b": b, "cols": cols, "nout": nout,
                "cov": cov, "count": int(np.count_nonzero(inside)), "area": _area(a, b)}

    def commit(self, cand) -> None:
        for k, (p, x) in cand["changes"].items():
            self.phi[k], self.h[k] = p, x
            self.out[:, k] = cand["cols"][k]
        self.a, self.b = cand["a"], cand["b"]
        self.nout = cand["nout"]
        self.cov, self.count, self.area = cand["cov"], cand["count"], cand["area"]

    def proj(self, k) -> np.ndarray:
        return self.dx * math.cos(self.phi[k]) + self.dy * math.sin(self.phi[k])

    def exclude_offset(self, proj_q: float) -> float:
        return proj_q / (1.0 + 2.0 * self.eps)

    def include_offset(self, proj_q: float) -> float:
        return proj_q / (1.0 - self.eps)

    # moves -----------------------------------------------------------------
    def move_shift(self, rng, k, scale):
        return {k: (self.phi[k], self.h[k] * math.exp(scale * self.s.shift_sigma * rng.standard_normal()))}

    def move_pivot(self, rng, k, scale):
        n = self.n
        v0 = _vertex(self.a, self.b, (k - 1) % n, k)
        v1 = _vertex(self.a, self.b, k, (k + 1) % n)
        t = rng.random()
        cx, cy = v0[0] + t * (v1[0] - v0[0]), v0[1] + t * (v1[1] - v0[1])
        p = self.phi[k] + scale * self.s.pivot_sigma * rng.standard_normal()
        return {k: (p, cx * math.cos(p) + cy * math.sin(p))}

    def move_exclude(self, rng, k):
        inside = self.nout == 0
        pr = self.proj(k)
        cand = np.nonzero(inside & (pr > 0))[0]
        if len(cand) == 0:
            return None
        top = cand[np.argsort(-pr[cand], kind="stable")[:4]]
        q = top[rng.integers(len(top))]
        return {k: (self.phi[k], self.exclude_offset(pr[q]))}

    def move_include(self, rng):
        outside = np.nonzero(self.nout > 0)[0]
        if len(outside) == 0:
            return None
        q = outside[rng.integers(len(outside))]
        changes = {}
        for k in np.nonzero(self.out[q])[0]:
            k = int(k)
            pq = self.dx[q] * math.cos(self.phi[k]) + self.dy[q] * math.sin(self.phi[k])
            changes[k] = (self.phi[k], self.include_offset(pq))
        return changes

    # greedy finish -----------------------------------------------------------
    def tighten(self) -> None:
        """Pull each line onto its outermost inside cell (never changes the cell set)."""
        improved = True
        while improved:
            improved = False
            inside = self.nout == 0
            for k in range(self.n):
                pr = self.proj(k)[inside]
                target = max(self.include_offset(float(pr.max())), self.h_min(self.phi[k]))
                if target < self.h[k] * (1 - 1e-12):
                    cand = self.propose({k: (self.phi[k], target)})
                    if cand is not None and cand["count"] == self.count and cand["area"] < self.area:
                        self.commit(cand)
                        improved = True

    def center(self) -> None:
        """Move each line to the middle of its gap.

        The gap runs from the outermost inside cell to the nearest cell that
        only this line excludes, so the inside set is unchanged. When no cell
        bounds it, the gap ends at the farthest grid corner (``open_gap="grid"``)
        or one cell out (``"cell"``). Halves toward the tight position when the
        midpoint breaks validity.
        """
        inside = self.nout == 0
        for k in range(self.n):
            c, s = math.cos(self.phi[k]), math.sin(self.phi[k])
            pr = self.dx * c + self.dy * s
            lo = float(pr[inside].max())
            blockers = self.out[:, k] & (self.nout == 1)
            if np.any(blockers):
                hi = float(pr[blockers].min())
            else:
                hi = self._open_gap_end(lo, c, s)
            target = 0.5 * (lo + hi)
            for _ in range(30):
                if target <= self.h[k]:
                    break
                cand = self.propose({k: (self.phi[k], target)})
                if cand is not None and cand["count"] == self.count:
                    self.commit(cand)
                    break
                target = 0.5 * (target + self.h[k])

    def _open_gap_end(self, lo, c, s) -> float:
        if self.open_gap == "grid":
            # farthest grid corner along the normal
            return max(lo, float(np.max(self.box_dx * c)) + float(np.max(self.box_dy * s)))
        return lo + abs(c) * self.cell_dx + abs(s) * self.cell_dy

    def h_min(self, phi) -> float:
        return max(abs(math.cos(phi)), abs(math.sin(phi))) / self.cb

    def drop_pass(self) -> bool:
        """Greedily remove boundary cells while coverage allows."""
        changed = False
        improved = True
        while improved:
            improved = False
            best = None
            inside = self.nout == 0
            for k in range(self.n):
                pr = self.proj(k)
                cand_idx = np.nonzero(inside & (pr > 0))[0]
                if len(cand_idx) == 0:
                    continue
                q = cand_idx[np.argmax(pr[cand_idx])]
                cand = self.propose({k: (self.phi[k], self.exclude_offset(pr[q]))})
                if cand is None:
                    continue
                if (cand["count"], cand["area"]) < self.key():
                    if best is None or (cand["count"], cand["area"]) < (best["count"], best["area"]):
                        best = cand
            if best is not None:
                self.commit(best)
                improved = changed = True
        return changed


def initial_states(model: PolyModel, restarts: int, rng: np.random.Generator):
    """Support polygons of the alpha level set at ``n`` equally spaced normals.

    The phase of the first normal is stratified over restarts; the last state
    is a regular polygon around every cell, which is always feasible.
    """
    n = model.n
    lev = level_set_offsets(model)
    allp = model.offsets
    out = []
    for r in range(restarts):
        phase = 2 * math.pi * (r + rng.random()) / (n * restarts)
        phi = phase + 2 * math.pi * np.arange(n) / n
        u = np.column_stack([np.cos(phi), np.sin(phi)])
        h = (lev @ u.T).max(axis=0) / (1.0 - model.eps)
        hmin = np.maximum(np.abs(u[:, 0]), np.abs(u[:, 1])) / model.coeff_bound
        out.append((phi, np.maximum(h, hmin * (1 + 1e-9))))
    R = float(np.hypot(allp[:, 0], allp[:, 1]).max())
    phi = 2 * math.pi * np.arange(n) / n
    hmin = 1.0 / model.coeff_bound
    out.append((phi, np.full(n, max(R * 1.001 + 1e-9, hmin))))
    return out


def anneal(walker: _Walker, rng: np.random.Generator, iters: int, settings: SearchSettings,
           deadline: float | None, best: dict) -> tuple[int, bool]:
    accepted = 0
    n = walker.n
    t0, t1 = settings.t_start, settings.t_end
    for it in range(iters):
        if deadline is not None and it % 64 == 0 and time.perf_counter() > deadline:
            return accepted, True
        frac = it / max(iters - 1, 1)
        T = t0 * (t1 / t0) ** frac
        scale = 1.0 - 0.9 * frac
        u = rng.random()
        k = int(rng.integers(n))
        if u < 0.35:
            ch = walker.move_shift(rng, k, scale)
        elif u < 0.7:
            ch = walker.move_pivot(rng, k, scale)
        elif u < 0.9:
            ch = walker.move_exclude(rng, k)
        else:
            ch = walker.move_include(rng)
        if not ch:
            continue
        cand = walker.propose(ch)
        if cand is None:
            continue
        dE = walker.energy(cand["count"], cand["area"]) - walker.energy()
        if dE <= 0 or rng.random() < math.exp(-dE / T):
            walker.commit(cand)
            accepted += 1
            if walker.key() < best["key"]:
                best.update(key=walker.key(), phi=list(walker.phi), h=list(walker.h))
    return accepted, False


def search(model: PolyModel, settings: SearchSettings, rng: np.random.Generator,
           deadline: float | None = None) -> SearchResult:
    walker = _Walker(model, settings)
    best = {"key": (math.inf, math.inf), "phi": None, "h": None}
    accepted = 0
    budget_hit = False
    feasible_starts = 0
    history = []
    for phi, h in initial_states(model, settings.restarts, rng):
        if budget_hit:
            break
        if not walker.load(phi, h):
            continue
        feasible_starts += 1
        walker.tighten()
        if walker.key() < best["key"]:
            best.update(key=walker.key(), phi=list(walker.phi), h=list(walker.h))
        acc, budget_hit = anneal(walker, rng, settings.iters, settings, deadline, best)
        accepted += acc
        # polish from the best state of this run as well as the final one
        for src in ((walker.phi, walker.h), (best["phi"], best["h"])):
            walker.load(*src)
            walker.drop_pass()
            walker.tighten()
            if walker.key() < best["key"]:
                best.update(key=walker.key(), phi=list(walker.phi), h=list(walker.h))
        history.append(best["key"])
    if best["phi"] is None:
        return SearchResult(None, 0, 0.0, 0.0, walker.evals, accepted, budget_hit, feasible_starts, history)
    walker.load(best["phi"], best["h"])
    if settings.placement == "mid-gap":
        walker.center()
    return SearchResult(walker.coeffs(), walker.count, walker.cov, walker.area, walker.evals,
                        accepted, budget_hit, feasible_starts, history)
