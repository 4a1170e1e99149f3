from fractions import Fraction

import numpy as np
import pytest

from bathykit.calibrate import SurveyPoint
from bathykit.predicates import incircle, orient2d
from bathykit.tin import (AllCollinear, TooFewPoints, delaunay, interpolate, interpolate_many,
                          locate, rasterize)


def circumcircle_ok(xy, tris, rel=1e-9):
    """Brute force: no point strictly inside any circumcircle."""
    for t in tris:
        a, b, c = xy[t]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
        d2 = (xy[:, 0] - ux) ** 2 + (xy[:, 1] - uy) ** 2
        d2[t] = np.inf
        if np.any(d2 < r2 * (1 - rel)):
            return False
    return True


def hull_area(xy):
    """Andrew's monotone chain, then shoelace."""
    pts = sorted(map(tuple, xy))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    h = np.array(lower[:-1] + upper[:-1])
    return 0.5 * abs(np.sum(h[:, 0] * np.roll(h[:, 1], -1) - np.roll(h[:, 0], -1) * h[:, 1]))


def test_predicates_exact_signs():
    assert orient2d(0, 0, 1, 0, 0, 1) > 0
    assert orient2d(0, 0, 1, 1, 2, 2) == 0
    # nearly collinear points where naive float evaluation is unreliable
    a = (0.5, 0.5)
    b = (12.0, 12.0)
    for i in range(50):
        c = (0.5 + i * 2 ** -52, 0.5)
        exact = (Fraction(b[0]) - Fraction(a[0])) * (Fraction(c[1]) - Fraction(a[1])) \
            - (Fraction(b[1]) - Fraction(a[1])) * (Fraction(c[0]) - Fraction(a[0]))
        assert np.sign(orient2d(*a, *b, *c)) == np.sign(exact)
    assert incircle(0, 0, 1, 0, 1, 1, 0, 1) == 0
    assert incircle(0, 0, 1, 0, 0, 1, 0.4, 0.4) > 0


def test_three_points():
    t = delaunay(np.array([[0, 0, 1], [1, 0, 2], [0, 1, 3]], float))
    assert t.n_triangles == 1
    assert t.areas()[0] == pytest.approx(0.5)


def test_square_tie_break():
    sq = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], float)
    t = delaunay(sq)
    assert t.n_triangles == 2
    shared = set(t.triangles[0]) & set(t.triangles[1])
    assert shared == {0, 2}
    # independent of input order: same diagonal between the same points
    t2 = delaunay(sq[[2, 3, 0, 1]])
    shared2 = {tuple(t2.xy[i]) for i in set(t2.triangles[0]) & set(t2.triangles[1])}
    assert len(shared2) == 2


def test_errors():
    with pytest.raises(TooFewPoints):
        delaunay(np.zeros((2, 3)))
    with pytest.raises(AllCollinear):
        delaunay(np.array([[i, 2 * i, 0] for i in range(10)], float))
    with pytest.raises(TooFewPoints):
        delaunay(np.array([[0, 0, 1], [0, 0, 2], [1, 1, 0]], float))


def test_duplicates_merged():
    pts = np.array([[0, 0, 1], [1, 0, 1], [0, 1, 1], [0, 0, 5], [1, 1, 1]], float)
    t = delaunay(pts)
    assert t.duplicates_removed == 1
    assert t.n_vertices == 4
    assert interpolate(t, (0.0, 0.0)) == 1.0


def test_random_sets_empty_circumcircle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        xy = rng.uniform(0, 100, size=(50, 2))
        t = delaunay(np.column_stack([xy, np.zeros(50)]))
        assert np.all(t.areas() > 0)
        assert circumcircle_ok(t.xy, t.triangles)
        assert t.areas().sum() == pytest.approx(hull_area(t.xy), rel=1e-9)
        assert t.n_triangles == 2 * 50 - 2 - len(t.hull_edges())


def test_lattice_degenerate():
    g = np.array([(i, j, 0.0) for i in range(15) for j in range(15)])
    t = delaunay(g)
    assert t.n_triangles == 2 * 14 * 14
    assert np.all(t.areas() > 0)
    assert circumcircle_ok(t.xy, t.triangles)


def test_neighbors_consistent():
    rng = np.random.default_rng(1)
    t = delaunay(np.column_stack([rng.uniform(0, 10, (80, 2)), np.zeros(80)]))
    for ti, tri in enumerate(t.triangles):
        for i in range(3):
            nb = t.neighbors[ti, i]
            if nb < 0:
                continue
            a, b = tri[i], tri[(i + 1) % 3]
            k = list(t.neighbors[nb]).index(ti)
            assert (t.triangles[nb][k], t.triangles[nb][(k + 1) % 3]) == (b, a)


def test_survey_points_input():
    pts = [SurveyPoint(0, 0, 1.0, 0), SurveyPoint(10, 0, 2.0, 1), SurveyPoint(0, 10, 3.0, 2)]
    t = delaunay(pts)
    assert interpolate(t, (2.5, 2.5)) == pytest.approx(1.75)


def contains(xy, tri, q):
    a, b, c = xy[tri]

    def o(p, r):
        return (r[0] - p[0]) * (q[1] - p[1]) - (r[1] - p[1]) * (q[0] - p[0])

    return o(a, b) >= 0 and o(b, c) >= 0 and o(c, a) >= 0


def test_locate_against_brute_force():
    rng = np.random.default_rng(7)
    xy = rng.uniform(0, 50, size=(120, 2))
    t = delaunay(np.column_stack([xy, np.zeros(120)]))
    for q in rng.uniform(-5, 55, size=(1000, 2)):
        hits = [i for i, tri in enumerate(t.triangles) if contains(t.xy, tri, q)]
        got = locate(t, q)
        if hits:
            assert got in hits
        else:
            assert got is None


def test_locate_vertex_and_centroid():
    rng = np.random.default_rng(8)
    t = delaunay(np.column_stack([rng.uniform(0, 50, size=(60, 2)), np.zeros(60)]))
    for v in range(t.n_vertices):
        tri = locate(t, t.xy[v])
        assert v in t.triangles[tri]
    for i, tri in enumerate(t.triangles):
        assert locate(t, t.xy[tri].mean(axis=0)) == i


def test_interpolation_plane_and_vertices():
    t = delaunay(np.array([[0, 0, 1], [1, 0, 2], [0, 1, 3]], float))
    assert interpolate(t, (0.25, 0.25)) == pytest.approx(1.75, abs=1e-15)
    assert interpolate(t, (5, 5)) is None
    rng = np.random.default_rng(9)
    xyz = np.column_stack([rng.uniform(0, 30, (70, 2)), rng.uniform(0, 9, 70)])
    t = delaunay(xyz)
    for v in range(t.n_vertices):
        assert interpolate(t, t.xy[v]) == t.depth[v]


def test_linear_precision():
    rng = np.random.default_rng(10)
    for _ in range(5):
        a, b, c = rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(10, 20)
        xy = rng.uniform(0, 100, (150, 2))
        t = delaunay(np.column_stack([xy, a * xy[:, 0] + b * xy[:, 1] + c]))
        q = rng.uniform(0, 100, (2000, 2))
        z = interpolate_many(t, q[:, 0], q[:, 1])
        inside = ~np.isnan(z)
        assert inside.mean() > 0.8
        assert np.max(np.abs(z[inside] - (a * q[inside, 0] + b * q[inside, 1] + c))) < 1e-9


def test_continuity_across_edges():
    rng = np.random.default_rng(12)
    t = delaunay(np.column_stack([rng.uniform(0, 40, (60, 2)), rng.uniform(0, 5, 60)]))
    for ti, tri in enumerate(t.triangles):
        for i in range(3):
            if t.neighbors[ti, i] < 0:
                continue
            p = 0.3 * t.xy[tri[i]] + 0.7 * t.xy[tri[(i + 1) % 3]]
            expect = 0.3 * t.depth[tri[i]] + 0.7 * t.depth[tri[(i + 1) % 3]]
            assert interpolate(t, p) == pytest.approx(expect, abs=1e-9)


def test_rasterize_flat_triangle():
    t = delaunay(np.array([[0, 0, 2], [10, 0, 2], [0, 10, 2]], float))
    g = rasterize(t, cell_m=1.0)
    assert g.width == 10 and g.height == 10
    assert np.all(g.valid_depths() == 2.0)
    X, Y = g.centers()
    assert np.array_equal(g.mask, X + Y <= 10)


def test_rasterize_mask_fraction():
    rng = np.random.default_rng(13)
    ang = rng.uniform(0, 2 * np.pi, 200)
    xy = np.column_stack([50 + 40 * np.cos(ang), 50 + 25 * np.sin(ang)])
    t = delaunay(np.column_stack([xy, np.ones(200)]))
    cell = 1.0
    g = rasterize(t, cell_m=cell)
    perim = np.sum(np.hypot(*np.diff(np.vstack([t.hull_polygon(), t.hull_polygon()[:1]]), axis=0).T))
    got = g.mask.sum() * cell * cell
    assert abs(got - hull_area(t.xy)) <= 2 * perim * cell


def test_rasterize_boundary():
    t = delaunay(np.array([[0, 0, 3], [20, 0, 3], [20, 20, 3], [0, 20, 3]], float))
    inner = [(5, 5), (15, 5), (15, 15), (5, 15)]
    g = rasterize(t, inner, cell_m=1.0)
    X, Y = g.centers()
    assert g.mask.sum() == 100
    assert np.all((X[g.mask] > 5) & (X[g.mask] < 15) & (Y[g.mask] > 5) & (Y[g.mask] < 15))
