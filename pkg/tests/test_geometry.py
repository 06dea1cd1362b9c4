import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import shoelace
from reachset.geometry import (AnchoredLine, InvalidPolygonError, LinePolygon, ParallelLinesError,
                               VertexChain, area, canonical_order, check_enclosed,
                               check_nondegenerate, clip, contains, intersect, jaccard,
                               no1_values, pair_det, polygon_from_dict, polygon_to_dict,
                               regular_polygon_lines, validate_ngon, vertices)

SQUARE = [(1, 0), (0, 1), (-1, 0), (0, -1)]
TRIANGLE = [(1, 1), (-1, 1), (0, -1)]


def ray_cast(verts, p):
    # textbook even-odd rule, scalar loop
    x, y = p
    inside = False
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            if x < x0 + (y - y0) * (x1 - x0) / (y1 - y0):
                inside = not inside
    return inside


def cross_products(v):
    e = np.roll(v, -1, axis=0) - v
    en = np.roll(e, -1, axis=0)
    return e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]


@st.composite
def line_sets(draw, n=None):
    n = draw(st.integers(3, 5)) if n is None else n
    gaps = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    ang = draw(st.floats(0, 2 * math.pi)) + np.cumsum(gaps / gaps.sum() * 2 * math.pi)
    h = np.array(draw(st.lists(st.floats(0.1, 10.0), min_size=n, max_size=n)))
    c = np.column_stack([np.cos(ang), np.sin(ang)]) / h[:, None]
    return c[canonical_order(c)]


def _poly(coeffs, anchor=(0.0, 0.0)):
    return LinePolygon.from_coeffs(anchor, coeffs)


def test_pair_det_examples():
    assert pair_det(AnchoredLine(1, 0), AnchoredLine(0, 1)) == 1
    assert pair_det(AnchoredLine(1, 0), AnchoredLine(2, 0)) == 0


COEF = st.floats(-10, 10).filter(lambda x: abs(x) > 1e-3)


@given(st.tuples(*[COEF] * 4))
def test_pair_det_antisymmetric(v):
    li, lj = AnchoredLine(v[0], v[1]), AnchoredLine(v[2], v[3])
    assert pair_det(li, lj) == -pair_det(lj, li)


def test_zero_line_rejected():
    with pytest.raises(ValueError):
        AnchoredLine(0.0, 0.0)


def test_intersect_examples():
    assert intersect(AnchoredLine(1, 0), AnchoredLine(0, 1)) == (1.0, 1.0)
    assert intersect(AnchoredLine(1, 0), AnchoredLine(0, 1), (5, 7)) == (6.0, 8.0)
    with pytest.raises(ParallelLinesError):
        intersect(AnchoredLine(1, 0), AnchoredLine(2, 0))


@given(st.tuples(*[COEF] * 4), st.tuples(st.floats(-100, 100), st.floats(-100, 100)))
def test_intersect_lies_on_both_lines(v, anchor):
    li, lj = AnchoredLine(v[0], v[1]), AnchoredLine(v[2], v[3])
    assume(abs(pair_det(li, lj)) > 1e-3)
    x, y = intersect(li, lj, anchor)
    for ln in (li, lj):
        assert abs(ln.a * (x - anchor[0]) + ln.b * (y - anchor[1]) - 1) <= 1e-9 * (1 + abs(x) + abs(y))


def test_square_validates_with_expected_no1_value():
    assert validate_ngon(SQUARE, 1e-6).ok
    E = no1_values(np.array(SQUARE, float))
    # 1-based (i=1, j=2, k=3) is 0-based (0, 1, 2)
    assert E[0, 2] == -2.0


def test_triangle_validates_with_expected_no1_values():
    assert validate_ngon(TRIANGLE).ok
    E = no1_values(np.array(TRIANGLE, float))
    assert [E[0, 2], E[1, 0], E[2, 1]] == [-4.0, -4.0, -4.0]


def test_duplicate_line_fails_with_named_violations():
    bad = [(1, 0), (0, 1), (1, 0), (0, -1)]
    rep = validate_ngon(bad)
    assert not rep.ok and rep.det_violations and rep.no1_violations
    assert all(len(v) == 3 for v in rep.det_violations)
    assert all(len(v) == 4 for v in rep.no1_violations)


def test_validate_needs_three_lines():
    with pytest.raises(ValueError):
        validate_ngon(SQUARE[:2])


def test_vertices_examples():
    assert vertices(_poly(SQUARE)).vertices.tolist() == [[1, 1], [-1, 1], [-1, -1], [1, -1]]
    assert vertices(_poly(TRIANGLE)).vertices.tolist() == [[0, 1], [-2, -1], [2, -1]]


def test_vertices_of_invalid_set_raise():
    with pytest.raises(InvalidPolygonError):
        vertices(_poly([(1, 0), (1, 0.001), (-1, 0)]))


def test_contains_examples():
    sq = _poly(SQUARE)
    assert contains(sq, (0, 0))
    assert not contains(sq, (1.001, 0), tol=0)
    assert contains(sq, (1.0, 0.0))


def test_area_examples():
    assert area(vertices(_poly(SQUARE))) == 4.0
    tri = [(0, 1), (-2, -1), (2, -1)]
    assert shoelace(tri) == 4.0
    assert area(np.array(tri, float)) == 4.0
    with pytest.raises(ValueError):
        area(np.array(tri[:2], float))


@given(line_sets(), st.floats(0.1, 10))
def test_area_scales_quadratically(c, s):
    assume(validate_ngon(c).ok)
    v = vertices(_poly(c)).vertices
    assert area(v * s) == pytest.approx(s * s * area(v), rel=1e-9)
    assert area(v) == pytest.approx(shoelace(v.tolist()), rel=1e-9)


def _unit_square(ox=0.0, oy=0.0):
    return VertexChain(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float) + [ox, oy])


def test_clip_examples():
    sq = _unit_square()
    same = clip(sq, sq)
    assert area(same) == pytest.approx(1.0)
    assert clip(sq, _unit_square(3, 0)) is None
    assert area(clip(sq, _unit_square(0.5, 0))) == pytest.approx(0.5)


def test_jaccard_examples():
    sq = _unit_square()
    assert jaccard(sq, sq) == 0.0
    assert jaccard(sq, _unit_square(3, 0)) == 1.0
    assert jaccard(sq, _unit_square(0.5, 0)) == pytest.approx(2 / 3)


def test_jaccard_rejects_zero_area():
    flat = VertexChain(np.array([[0, 0], [1, 0], [2, 0]], float))
    with pytest.raises(ValueError):
        jaccard(_unit_square(), flat)


@given(line_sets(), line_sets())
def test_jaccard_symmetric_and_bounded(c1, c2):
    assume(validate_ngon(c1).ok and validate_ngon(c2).ok)
    p, q = vertices(_poly(c1)), vertices(_poly(c2))
    d = jaccard(p, q)
    assert 0.0 <= d <= 1.0
    assert d == pytest.approx(jaccard(q, p), abs=1e-12)
    assert jaccard(p, p) == pytest.approx(0.0, abs=1e-12)


def test_clip_area_against_monte_carlo():
    r = np.random.default_rng(0)
    p = vertices(_poly(regular_polygon_lines(5, 1.0, 0.3)))
    q = vertices(_poly(regular_polygon_lines(3, 0.8, 1.0), anchor=(0.4, 0.2)))
    pts = r.uniform(-2, 2, (400_000, 2))
    # half-plane test against each anticlockwise edge, independent of clip()
    def inside(v):
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        return np.all(e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0] >= 0, axis=1)
    frac = np.mean(inside(p.vertices) & inside(q.vertices))
    se = 16 * math.sqrt(frac * (1 - frac) / len(pts))
    assert abs(area(clip(p, q)) - 16 * frac) <= 4 * se


def test_check_enclosed_examples():
    sq = [(1, 1), (-1, 1), (-1, -1), (1, -1), (1, 1)]
    assert check_enclosed(sq)
    # repeated interior point (revisits vertex 2)
    assert not check_enclosed([(0, 0), (1, 0), (1, 1), (0, 1), (1, 0), (0, 0)])
    # vertex (1, 0) lies on the segment from (0, 0) to (2, 0)
    assert not check_enclosed([(0, 0), (2, 0), (1, 1), (1, 0), (0, 0)])
    assert not check_enclosed(sq[:-1])
    assert not check_enclosed([(0, 0), (1, 0), (0, 0)])


def test_check_nondegenerate_examples():
    sq = [(1, 1), (-1, 1), (-1, -1), (1, -1), (1, 1)]
    assert check_nondegenerate(sq, 4)
    assert not check_nondegenerate(sq, 5)
    # (0, -1) sits on the segment between its neighbours
    assert not check_nondegenerate([(1, 1), (-1, 1), (-1, -1), (0, -1), (1, -1), (1, 1)], 5)


@given(line_sets())
def test_validated_lines_bound_convex_ngon(c):
    assume(validate_ngon(c).ok)
    poly = _poly(c)
    v = vertices(poly).vertices
    chain = np.vstack([v, v[:1]])
    assert check_enclosed(chain)
    assert check_nondegenerate(chain, len(c))
    assert np.all(cross_products(v) > 0)
    assert contains(poly, poly.anchor)


@given(line_sets())
def test_validated_vertices_and_lines_distinct(c):
    assume(validate_ngon(c).ok)
    v = vertices(_poly(c)).vertices
    n = len(c)
    for i in range(n):
        for j in range(i + 1, n):
            assert not np.allclose(v[i], v[j], rtol=0, atol=1e-12)
            assert not np.allclose(c[i], c[j], rtol=0, atol=1e-12)


@given(line_sets(), st.integers(0, 4), st.floats(3.0, 50.0))
def test_rejection_property(c, k, push):
    # moving a line far outward makes it redundant, so a vertex leaves some line
    k %= len(c)
    c = c.copy()
    c[k] /= push
    E = no1_values(c)
    n = len(c)
    viol = [E[i, kk] for i in range(n) for kk in range(n)
            if kk not in (i, (i + 1) % n) and E[i, kk] > 1e-6]
    assume(viol)
    assert not validate_ngon(c).ok
    D = c[:, 0] * np.roll(c[:, 1], -1) - c[:, 1] * np.roll(c[:, 0], -1)
    if np.all(D > 0):
        from reachset.geometry import vertex_array
        v = vertex_array(c)
        chain = np.vstack([v, v[:1]])
        broken = (not check_enclosed(chain) or not check_nondegenerate(chain, n)
                  or not np.all(cross_products(v) > 0))
        assert broken


@given(line_sets(), st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)))
def test_anchor_translation(c, t):
    assume(validate_ngon(c).ok)
    v0 = vertices(_poly(c)).vertices
    v1 = vertices(_poly(c, anchor=t)).vertices
    assert np.allclose(v1, v0 + np.array(t), rtol=0, atol=1e-9 * (1 + np.abs(v0).max() + max(map(abs, t))))
    assert validate_ngon(c).ok == _poly(c, anchor=t).validate().ok


@given(line_sets(), st.integers(0, 2**32))
def test_contains_agrees_with_ray_casting(c, seed):
    assume(validate_ngon(c).ok)
    poly = _poly(c)
    v = vertices(poly).vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    pts = np.random.default_rng(seed).uniform(lo - 1, hi + 1, (200, 2))
    aff = poly.affine(pts)
    for p, a in zip(pts, aff):
        # skip points within roundoff of an edge
        if np.min(np.abs(a)) < 1e-9:
            continue
        assert contains(poly, p) == ray_cast(v.tolist(), p)


def test_dict_round_trip():
    poly = _poly(TRIANGLE, anchor=(3.0, -2.0))
    d = polygon_to_dict(poly)
    back = polygon_from_dict(d)
    assert back.anchor == poly.anchor and np.array_equal(back.coeffs, poly.coeffs)
    assert d["area"] == 4.0


def test_regular_polygon_inradius():
    for n in (3, 4, 5, 8):
        c = regular_polygon_lines(n, 2.0, 0.1)
        assert validate_ngon(c).ok
        v = vertices(_poly(c)).vertices
        expected = n * 4.0 * math.tan(math.pi / n)
        assert area(v) == pytest.approx(expected, rel=1e-12)
