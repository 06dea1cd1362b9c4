"""Anchored-line polygons and the planar predicates used to validate them.

A line is stored as ``(a, b)`` meaning ``a (x - x0) + b (y - y0) - 1 = 0`` for
an anchor ``(x0, y0)``; the anchor is always on its strict inner side
(``... - 1 < 0``). ``n`` such lines bound an enclosed convex ``n``-gon around
the anchor whenever consecutive determinants are positive and every vertex
lies strictly inside every non-adjacent line; ``validate_ngon`` checks exactly
that, with a margin ``eps`` standing in for the strict inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_EPS = 1e-6
COLLINEAR_TOL = 1e-9


class ParallelLinesError(ValueError):
    pass


class InvalidPolygonError(ValueError):
    pass


@dataclass(frozen=True)
class AnchoredLine:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a * self.a + self.b * self.b > 0):
            raise ValueError("a line needs a^2 + b^2 > 0")


def _coeffs(lines) -> np.ndarray:
    if isinstance(lines, np.ndarray):
        return np.asarray(lines, dtype=float).reshape(-1, 2)
    return np.array([(ln.a, ln.b) if isinstance(ln, AnchoredLine) else tuple(ln)
                     for ln in lines], dtype=float).reshape(-1, 2)


def pair_det(li: AnchoredLine, lj: AnchoredLine) -> float:
    """``D_ij = a_i b_j - b_i a_j``."""
    return li.a * lj.b - li.b * lj.a


def intersect(li: AnchoredLine, lj: AnchoredLine, anchor=(0.0, 0.0)) -> tuple[float, float]:
    d = pair_det(li, lj)
    if d == 0:
        raise ParallelLinesError(f"lines {li} and {lj} are parallel")
    return (anchor[0] - (li.b - lj.b) / d, anchor[1] + (li.a - lj.a) / d)


@dataclass
class ValidityReport:
    ok: bool
    det_violations: list = field(default_factory=list)   # (i, j, D_ij), 0-based
    no1_violations: list = field(default_factory=list)   # (i, j, k, value)

    def __bool__(self) -> bool:
        return self.ok


def no1_values(coeffs: np.ndarray) -> np.ndarray:
    """``E[i, k] = -a_k (b_i - b_j) + b_k (a_i - a_j) - D_ij`` with ``j = i+1 mod n``.

    ``E[i, k] / D_ij`` is the affine form of line ``k`` at vertex ``V_ij``;
    entries with ``k in {i, j}`` are zero up to roundoff.
    """
    a, b = coeffs[:, 0], coeffs[:, 1]
    aj, bj = np.roll(a, -1), np.roll(b, -1)
    D = a * bj - b * aj
    return -np.outer(b - bj, a) + np.outer(a - aj, b) - D[:, None]


def validate_ngon(lines, eps: float = DEFAULT_EPS) -> ValidityReport:
    """Check the determinant and vertex-inside-opposite-line systems."""
    c = _coeffs(lines)
    n = len(c)
    if n < 3:
        raise ValueError(f"need n >= 3 lines, got {n}")
    a, b = c[:, 0], c[:, 1]
    D = a * np.roll(b, -1) - b * np.roll(a, -1)
    E = no1_values(c)
    rep = ValidityReport(True)
    for i in range(n):
        if not D[i] >= eps:
            rep.det_violations.append((i, (i + 1) % n, float(D[i])))
    for i in range(n):
        j = (i + 1) % n
        for k in range(n):
            if k != i and k != j and not E[i, k] <= -eps:
                rep.no1_violations.append((i, j, k, float(E[i, k])))
    rep.ok = not rep.det_violations and not rep.no1_violations
    return rep


def is_valid_ngon(coeffs: np.ndarray, eps: float = DEFAULT_EPS) -> bool:
    """Allocation-light boolean form of ``validate_ngon`` for search loops."""
    a, b = coeffs[:, 0], coeffs[:, 1]
    n = len(a)
    D = a * np.roll(b, -1) - b * np.roll(a, -1)
    if not np.all(D >= eps):
        return False
    E = no1_values(coeffs)
    idx = np.arange(n)
    E[idx, idx] = -np.inf
    E[idx, (idx + 1) % n] = -np.inf
    return bool(np.all(E <= -eps))


def canonical_order(lines) -> np.ndarray:
    """Permutation sorting lines anticlockwise by the polar angle of ``(a, b)``."""
    c = _coeffs(lines)
    return np.argsort(np.arctan2(c[:, 1], c[:, 0]), kind="stable")


@dataclass(frozen=True)
class VertexChain:
    """Polygon vertices in order, without repeating the first one."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2).copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    def closed(self) -> np.ndarray:
        return np.vstack([self.vertices, self.vertices[:1]])


@dataclass(frozen=True)
class LinePolygon:
    anchor: tuple[float, float]
    lines: tuple[AnchoredLine, ...]
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        object.__setattr__(self, "anchor", (float(self.anchor[0]), float(self.anchor[1])))
        object.__setattr__(self, "lines", tuple(
            ln if isinstance(ln, AnchoredLine) else AnchoredLine(float(ln[0]), float(ln[1]))
            for ln in self.lines))

    @classmethod
    def from_coeffs(cls, anchor, coeffs, eps: float = DEFAULT_EPS,
                    canonicalize: bool = False) -> "LinePolygon":
        c = _coeffs(coeffs)
        if canonicalize:
            c = c[canonical_order(c)]
        return cls(anchor, tuple(AnchoredLine(float(a), float(b)) for a, b in c), eps)

    @property
    def n(self) -> int:
        return len(self.lines)

    @property
    def coeffs(self) -> np.ndarray:
        return _coeffs(self.lines)

    def validate(self) -> ValidityReport:
        return validate_ngon(self.lines, self.eps)

    def affine(self, points) -> np.ndarray:
        """Affine forms, shape ``(len(points), n)``; ``<= 0`` means inner side."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        c = self.coeffs
        return affine_forms(p[:, 0] - self.anchor[0], p[:, 1] - self.anchor[1], c[:, 0], c[:, 1])

    def contains_points(self, points, tol: float = 0.0) -> np.ndarray:
        return np.all(self.affine(points) <= tol, axis=1)


def affine_forms(dx: np.ndarray, dy: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a_k dx + b_k dy - 1`` for every point/line pair; the one shared formula."""
    return dx[:, None] * a[None, :] + dy[:, None] * b[None, :] - 1.0


def vertices(poly: LinePolygon) -> VertexChain:
    """``(V_12, V_23, ..., V_n1)`` for a polygon that passes validation."""
    rep = poly.validate()
    if not rep:
        raise InvalidPolygonError(
            f"lines do not bound a valid {poly.n}-gon: det={rep.det_violations} "
            f"no1={rep.no1_violations}")
    return VertexChain(vertex_array(poly.coeffs, poly.anchor))


def vertex_array(coeffs: np.ndarray, anchor=(0.0, 0.0)) -> np.ndarray:
    """Consecutive-line intersections without validation."""
    a, b = coeffs[:, 0], coeffs[:, 1]
    aj, bj = np.roll(a, -1), np.roll(b, -1)
    D = a * bj - b * aj
    return np.column_stack([anchor[0] - (b - bj) / D, anchor[1] + (a - aj) / D])


def contains(poly: LinePolygon, p, tol: float = 0.0) -> bool:
    return bool(poly.contains_points([p], tol)[0])


def signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def area(chain) -> float:
    """Shoelace area; positive for anticlockwise chains."""
    v = chain.vertices if isinstance(chain, VertexChain) else np.asarray(chain, dtype=float)
    if len(v) < 3:
        raise ValueError(f"area needs at least 3 vertices, got {len(v)}")
    return signed_area(v)


def polygon_area(poly: LinePolygon) -> float:
    return area(vertices(poly))


def clip(p1: VertexChain, p2: VertexChain) -> VertexChain | None:
    """Intersection of two convex anticlockwise polygons (Sutherland-Hodgman).

    Returns ``None`` when the overlap has no area.
    """
    out = [tuple(v) for v in p1.vertices]
    clipper = p2.vertices
    scale = max(np.ptp(p1.vertices, axis=0).max(), np.ptp(clipper, axis=0).max(), 1e-300)
    for k in range(len(clipper)):
        if not out:
            break
        c0, c1 = clipper[k], clipper[(k + 1) % len(clipper)]
        ex, ey = c1[0] - c0[0], c1[1] - c0[1]

        def side(p):
            return ex * (p[1] - c0[1]) - ey * (p[0] - c0[0])

        src, out = out, []
        prev = src[-1]
        sp = side(prev)
        for cur in src:
            sc = side(cur)
            if sc >= 0:
                if sp < 0:
                    out.append(_cross_point(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0:
                out.append(_cross_point(prev, cur, sp, sc))
            prev, sp = cur, sc
    if len(out) < 3:
        return None
    v = np.array(out)
    keep = np.ones(len(v), dtype=bool)
    for i in range(len(v)):
        if np.allclose(v[i], v[i - 1], rtol=0, atol=1e-12 * scale) and i > 0:
            keep[i] = False
    v = v[keep]
    if len(v) >= 3 and np.allclose(v[0], v[-1], rtol=0, atol=1e-12 * scale):
        v = v[:-1]
    if len(v) < 3 or signed_area(v) <= 1e-14 * scale * scale:
        return None
    return VertexChain(v)


def _cross_point(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def jaccard(p1: VertexChain, p2: VertexChain) -> float:
    """``1 - |A n B| / |A u B|`` for convex polygons."""
    a1, a2 = area(p1), area(p2)
    if not (a1 > 0 and a2 > 0):
        raise ValueError("jaccard needs polygons with positive area")
    inter = clip(p1, p2)
    ai = area(inter) if inter is not None else 0.0
    ai = min(ai, a1, a2)
    return float(min(max(1.0 - ai / (a1 + a2 - ai), 0.0), 1.0))


# -- enclosure / non-degeneration validators ---------------------------------

def _norm_points(chain) -> tuple[np.ndarray, float]:
    p = np.asarray(chain, dtype=float).reshape(-1, 2)
    diam = float(np.max(np.ptp(p, axis=0))) if len(p) else 0.0
    return p, (diam if diam > 0 else 1.0)


def _same(p, q, scale) -> bool:
    return abs(p[0] - q[0]) <= COLLINEAR_TOL * scale and abs(p[1] - q[1]) <= COLLINEAR_TOL * scale


def _on_segment(q, p0, p1, scale) -> bool:
    ex, ey = p1[0] - p0[0], p1[1] - p0[1]
    cross = (ex * (q[1] - p0[1]) - ey * (q[0] - p0[0])) / (scale * scale)
    if abs(cross) > COLLINEAR_TOL:
        return False
    dot = ex * (q[0] - p0[0]) + ey * (q[1] - p0[1])
    tol = COLLINEAR_TOL * scale * scale
    return -tol <= dot <= ex * ex + ey * ey + tol


def _distinct(p: np.ndarray, scale: float) -> list:
    out = []
    for q in p:
        if not any(_same(q, r, scale) for r in out):
            out.append(q)
    return out


def check_enclosed(chain: Sequence) -> bool:
    """Digraph enclosure: at least three distinct points, no repeats except a
    closing one, closed, and no point lying on another edge's segment."""
    p, scale = _norm_points(chain)
    if len(p) < 2:
        return False
    if len(_distinct(p, scale)) < 3:
        return False
    if not _same(p[0], p[-1], scale):
        return False
    body = p[:-1]
    for i in range(len(body)):
        for j in range(i + 1, len(body)):
            if _same(body[i], body[j], scale):
                return False
    for k in range(len(p) - 1):
        e0, e1 = p[k], p[k + 1]
        for q in body:
            if _same(q, e0, scale) or _same(q, e1, scale):
                continue
            if _on_segment(q, e0, e1, scale):
                return False
    return True


def check_nondegenerate(chain: Sequence, n: int) -> bool:
    """Exactly ``n`` distinct points and no three consecutive ones collinear,
    wrapping around the closing point."""
    p, scale = _norm_points(chain)
    if len(p) >= 2 and _same(p[0], p[-1], scale):
        p = p[:-1]
    if len(_distinct(p, scale)) != n or len(p) != n:
        return False
    for k in range(n):
        p0, p1, p2 = p[k], p[(k + 1) % n], p[(k + 2) % n]
        cross = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])) / (scale * scale)
        if abs(cross) <= COLLINEAR_TOL:
            return False
    return True


def is_strictly_convex(chain) -> bool:
    """All cross products of consecutive edges strictly positive."""
    v = chain.vertices if isinstance(chain, VertexChain) else np.asarray(chain, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    en = np.roll(e, -1, axis=0)
    return bool(np.all(e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0] > 0))


def point_in_polygon(chain, pts) -> np.ndarray:
    """Even-odd ray casting; independent of the line representation."""
    v = chain.vertices if isinstance(chain, VertexChain) else np.asarray(chain, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = v[:, 0][None, :], v[:, 1][None, :]
    x1, y1 = np.roll(v[:, 0], -1)[None, :], np.roll(v[:, 1], -1)[None, :]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(crosses & (x < xint), axis=1) % 2 == 1


def polygon_to_dict(poly: LinePolygon) -> dict:
    chain = vertices(poly)
    return {
        "anchor": list(poly.anchor),
        "lines": [[ln.a, ln.b] for ln in poly.lines],
        "vertices": chain.vertices.tolist(),
        "area": area(chain),
    }


def polygon_from_dict(d: dict, eps: float = DEFAULT_EPS) -> LinePolygon:
    return LinePolygon.from_coeffs(tuple(d["anchor"]), d["lines"], eps)


def regular_polygon_lines(n: int, radius: float, phase: float = 0.0) -> np.ndarray:
    """Coefficients of a regular n-gon with inradius ``radius`` around the anchor."""
    ang = phase + 2 * math.pi * np.arange(n) / n
    return np.column_stack([np.cos(ang), np.sin(ang)]) / radius
