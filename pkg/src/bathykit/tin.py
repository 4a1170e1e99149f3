"""Delaunay TIN over survey soundings, planar interpolation and gridding.

The triangulation is built incrementally (Bowyer-Watson). Instead of a
finite super-triangle the hull is closed with "ghost" triangles that share
a vertex at infinity; this is the limit of an infinitely large
super-triangle and never leaves hull defects behind. Points are inserted
in Hilbert-curve order, so construction is deterministic for a given
input order.

Cocircular configurations are resolved afterwards: any interior edge
whose quadrilateral is exactly cocircular is flipped when the opposite
diagonal has a smaller ``(index sum, smaller index)`` key.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely

from .grid import DepthGrid
from .predicates import incircle, orient2d

GHOST = -1
DUPLICATE_TOL_M = 1e-9
MAX_GRID_CELLS = 10**8


class TriangulationError(ValueError):
    pass


class TooFewPoints(TriangulationError):
    pass


class AllCollinear(TriangulationError):
    pass


@dataclass(eq=False)
class Triangulation:
    """Immutable Delaunay triangulation.

    ``triangles[t]`` lists vertex indices counter-clockwise;
    ``neighbors[t, i]`` is the triangle across the edge from vertex ``i`` to
    vertex ``(i + 1) % 3``, or -1 on the hull. ``source_index`` maps each
    vertex back to its row in the input, and ``duplicates_removed`` counts
    input points merged into an earlier one.
    """

    xy: np.ndarray
    depth: np.ndarray
    triangles: np.ndarray
    neighbors: np.ndarray
    source_index: np.ndarray
    duplicates_removed: int = 0
    _buckets: tuple | None = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.xy)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.xy[self.triangles]
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                      - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def hull_edges(self) -> list[tuple[int, int]]:
        """Hull edges as CCW-directed vertex pairs."""
        out = []
        for t, tri in enumerate(self.triangles):
            for i in range(3):
                if self.neighbors[t, i] < 0:
                    out.append((int(tri[i]), int(tri[(i + 1) % 3])))
        return out

    def hull_polygon(self) -> np.ndarray:
        """Hull vertices in CCW order as an ``(k, 2)`` array."""
        nxt = dict(self.hull_edges())
        start = min(nxt)
        ring = [start]
        v = nxt[start]
        while v != start:
            ring.append(v)
            v = nxt[v]
        return self.xy[ring]


def _as_xyz(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        points = list(points)
        if points and hasattr(points[0], "x_m"):
            arr = np.array([(p.x_m, p.y_m, p.depth_m) for p in points], dtype=float)
        else:
            arr = np.asarray(points, dtype=float)
    arr = arr.reshape(len(arr), -1) if arr.size else np.zeros((0, 3))
    if arr.shape[1] == 2:
        arr = np.column_stack([arr, np.zeros(len(arr))])
    if arr.shape[1] != 3:
        raise TriangulationError("points must be (x, y) or (x, y, depth) rows")
    if not np.all(np.isfinite(arr)):
        raise TriangulationError("non-finite coordinates")
    return arr


def _merge_duplicates(xy: np.ndarray, tol: float) -> np.ndarray:
    """Indices of points to keep: the first of any cluster closer than ``tol``."""
    keep = []
    cells: dict[tuple[int, int], list[int]] = {}
    tol2 = tol * tol
    for i, (x, y) in enumerate(xy.tolist()):
        cx, cy = math.floor(x / tol), math.floor(y / tol)
        dup = False
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in cells.get((cx + dx, cy + dy), ()):
                    if (xy[j, 0] - x) ** 2 + (xy[j, 1] - y) ** 2 <= tol2:
                        dup = True
                        break
                if dup:
                    break
            if dup:
                break
        if not dup:
            cells.setdefault((cx, cy), []).append(i)
            keep.append(i)
    return np.array(keep, dtype=np.int64)


def _hilbert_order(xy: np.ndarray, bits: int = 16) -> np.ndarray:
    lo = xy.min(axis=0)
    span = float(max((xy.max(axis=0) - lo).max(), 1e-300))
    side = (1 << bits) - 1
    q = np.floor((xy - lo) / span * side).astype(np.int64)
    keys = np.empty(len(xy), dtype=np.int64)
    for k, (x, y) in enumerate(q.tolist()):
        d = 0
        s = 1 << (bits - 1)
        while s > 0:
            rx = 1 if x & s else 0
            ry = 1 if y & s else 0
            d += s * s * ((3 * rx) ^ ry)
            if ry == 0:
                if rx == 1:
                    x = side - x
                    y = side - y
                x, y = y, x
            s >>= 1
        keys[k] = d
    return np.argsort(keys, kind="stable")


class _Builder:
    """Mutable Bowyer-Watson state over plain Python lists."""

    def __init__(self, xs: list[float], ys: list[float]):
        self.xs = xs
        self.ys = ys
        self.tv: list[list[int]] = []
        self.tn: list[list[int]] = []
        self.alive: list[bool] = []
        self.free: list[int] = []
        self.last = 0

    def _new(self, a, b, c) -> int:
        if self.free:
            t = self.free.pop()
            self.tv[t] = [a, b, c]
            self.tn[t] = [-1, -1, -1]
            self.alive[t] = True
        else:
            t = len(self.tv)
            self.tv.append([a, b, c])
            self.tn.append([-1, -1, -1])
            self.alive.append(True)
        return t

    def start(self, a, b, c):
        xs, ys = self.xs, self.ys
        if orient2d(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c]) < 0:
            b, c = c, b
        t = self._new(a, b, c)
        g0 = self._new(b, a, GHOST)
        g1 = self._new(c, b, GHOST)
        g2 = self._new(a, c, GHOST)
        self.tn[t] = [g0, g1, g2]
        # ghost (x, y, INF): edges x->y (real side), y->INF, INF->x
        self.tn[g0] = [t, g2, g1]
        self.tn[g1] = [t, g0, g2]
        self.tn[g2] = [t, g1, g0]
        self.last = t

    def _in_circle(self, t, p) -> bool:
        xs, ys = self.xs, self.ys
        a, b, c = self.tv[t]
        px, py = xs[p], ys[p]
        if c == GHOST:
            o = orient2d(xs[a], ys[a], xs[b], ys[b], px, py)
            if o > 0:
                return True
            if o < 0:
                return False
            # collinear with the hull edge: inside only on the open segment
            if xs[a] != xs[b]:
                return min(xs[a], xs[b]) < px < max(xs[a], xs[b])
            return min(ys[a], ys[b]) < py < max(ys[a], ys[b])
        return incircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c], px, py) > 0

    def _locate(self, p) -> int:
        xs, ys = self.xs, self.ys
        px, py = xs[p], ys[p]
        t = self.last
        if not self.alive[t] or GHOST in self.tv[t]:
            t = next(i for i, ok in enumerate(self.alive) if ok and GHOST not in self.tv[i])
        prev = -1
        while True:
            v = self.tv[t]
            if v[2] == GHOST:
                return t
            moved = False
            for i in range(3):
                if self.tn[t][i] == prev:
                    continue
                a, b = v[i], v[(i + 1) % 3]
                if orient2d(xs[a], ys[a], xs[b], ys[b], px, py) < 0:
                    prev, t = t, self.tn[t][i]
                    moved = True
                    break
            if not moved:
                return t

    def insert(self, p):
        t0 = self._locate(p)
        tv, tn = self.tv, self.tn
        cavity = {t0}
        rejected: set[int] = set()
        stack = [t0]
        boundary = []
        while stack:
            t = stack.pop()
            for i in range(3):
                nb = tn[t][i]
                if nb in cavity:
                    continue
                if nb not in rejected:
                    if self._in_circle(nb, p):
                        cavity.add(nb)
                        stack.append(nb)
                        continue
                    rejected.add(nb)
                boundary.append((tv[t][i], tv[t][(i + 1) % 3], nb))
        for t in cavity:
            self.alive[t] = False
            self.free.append(t)
        first: dict[int, tuple[int, int]] = {}
        made = []
        for u, v, nb in boundary:
            if u == GHOST:
                t = self._new(v, p, GHOST)
                edge_out, edge_next, edge_prev = 2, 0, 1
            elif v == GHOST:
                t = self._new(p, u, GHOST)
                edge_out, edge_next, edge_prev = 1, 2, 0
            else:
                t = self._new(u, v, p)
                edge_out, edge_next, edge_prev = 0, 1, 2
            tn[t][edge_out] = nb
            # repoint the outside neighbour's edge (v, u) at the new triangle
            nv = tv[nb]
            for j in range(3):
                if nv[j] == v and nv[(j + 1) % 3] == u:
                    tn[nb][j] = t
                    break
            first[u] = (t, edge_prev)
            made.append((t, v, edge_next))
        # edge (v, p) of each new triangle is edge (p, v) of the one starting at v
        for t, v, edge_next in made:
            m, m_prev = first[v]
            tn[t][edge_next] = m
            tn[m][m_prev] = t
        for t, *_ in made:
            if GHOST not in tv[t]:
                self.last = t
                break


def _flip_cocircular(xs, ys, tris: list[list[int]], nbrs: list[list[int]]):
    """Flip exactly-cocircular interior edges toward the lower-key diagonal."""

    def key(i, j):
        return (i + j, min(i, j))

    changed = True
    while changed:
        changed = False
        for t in range(len(tris)):
            for i in range(3):
                u = nbrs[t][i]
                if u < 0:
                    continue
                a, b, c = tris[t][i], tris[t][(i + 1) % 3], tris[t][(i + 2) % 3]
                j = next(k for k in range(3) if tris[u][k] == b and tris[u][(k + 1) % 3] == a)
                d = tris[u][(j + 2) % 3]
                if key(c, d) >= key(a, b):
                    continue
                if incircle(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c], xs[d], ys[d]) != 0:
                    continue
                # t=(a,b,c), u=(b,a,d)  ->  t=(c,a,d), u=(d,b,c)
                n_bc = nbrs[t][(i + 1) % 3]
                n_ca = nbrs[t][(i + 2) % 3]
                n_ad = nbrs[u][(j + 1) % 3]
                n_db = nbrs[u][(j + 2) % 3]
                tris[t] = [c, a, d]
                tris[u] = [d, b, c]
                nbrs[t] = [n_ca, n_ad, u]
                nbrs[u] = [n_db, n_bc, t]
                for nb, old, new in ((n_ad, u, t), (n_bc, t, u)):
                    if nb >= 0:
                        k = nbrs[nb].index(old)
                        nbrs[nb][k] = new
                changed = True
                break


def delaunay(points) -> Triangulation:
    """Delaunay triangulation of ``(x, y, depth)`` rows or SurveyPoints.

    Points closer than 1e-9 m to an earlier point are dropped (the first
    depth wins); the count is stored on the result.
    """
    xyz = _as_xyz(points)
    if len(xyz) < 3:
        raise TooFewPoints(f"need at least 3 points, got {len(xyz)}")
    keep = _merge_duplicates(xyz[:, :2], DUPLICATE_TOL_M)
    xy = xyz[keep, :2].copy()
    depth = xyz[keep, 2].copy()
    n = len(xy)
    if n < 3:
        raise TooFewPoints(f"only {n} distinct points")
    xs = xy[:, 0].tolist()
    ys = xy[:, 1].tolist()

    order = _hilbert_order(xy).tolist()
    a, b = order[0], order[1]
    third = None
    for k in order[2:]:
        if orient2d(xs[a], ys[a], xs[b], ys[b], xs[k], ys[k]) != 0:
            third = k
            break
    if third is None:
        raise AllCollinear("all points are collinear")

    bld = _Builder(xs, ys)
    bld.start(a, b, third)
    for p in order[2:]:
        if p != third:
            bld.insert(p)

    remap = {}
    tris = []
    for t, (alive, v) in enumerate(zip(bld.alive, bld.tv)):
        if alive and GHOST not in v:
            remap[t] = len(tris)
            tris.append(list(v))
    nbrs = []
    for t in remap:
        nbrs.append([remap.get(u, -1) for u in bld.tn[t]])
    _flip_cocircular(xs, ys, tris, nbrs)

    return Triangulation(
        xy=xy,
        depth=depth,
        triangles=np.array(tris, dtype=np.int64).reshape(-1, 3),
        neighbors=np.array(nbrs, dtype=np.int64).reshape(-1, 3),
        source_index=keep,
        duplicates_removed=len(xyz) - n,
    )


def _orient(px, py, qx, qy, rx, ry):
    return (qx - px) * (ry - py) - (qy - py) * (rx - px)


def _buckets(tri: Triangulation):
    if tri._buckets is None:
        lo = tri.xy.min(axis=0)
        hi = tri.xy.max(axis=0)
        nb = max(1, int(math.sqrt(tri.n_triangles)))
        size = np.maximum((hi - lo) / nb, 1e-12)
        p = tri.xy[tri.triangles]
        tlo = np.floor((p.min(axis=1) - lo) / size).astype(int).clip(0, nb - 1)
        thi = np.floor((p.max(axis=1) - lo) / size).astype(int).clip(0, nb - 1)
        table: dict[tuple[int, int], list[int]] = {}
        for t in range(tri.n_triangles):
            for i in range(tlo[t, 0], thi[t, 0] + 1):
                for j in range(tlo[t, 1], thi[t, 1] + 1):
                    table.setdefault((i, j), []).append(t)
        tri._buckets = (lo, hi, size, nb, table)
    return tri._buckets


def locate(tri: Triangulation, q) -> int | None:
    """Index of the triangle containing ``q`` (boundary inclusive).

    When ``q`` lies on a shared edge or vertex the lowest triangle index
    wins. Returns None outside the hull.
    """
    qx, qy = _xy_of(q)
    lo, hi, size, nb, table = _buckets(tri)
    if not (lo[0] <= qx <= hi[0] and lo[1] <= qy <= hi[1]):
        return None
    i = min(int((qx - lo[0]) // size[0]), nb - 1)
    j = min(int((qy - lo[1]) // size[1]), nb - 1)
    xs, ys = tri.xy[:, 0], tri.xy[:, 1]
    for t in table.get((i, j), ()):
        a, b, c = tri.triangles[t]
        if (
            orient2d(xs[a], ys[a], xs[b], ys[b], qx, qy) >= 0
            and orient2d(xs[b], ys[b], xs[c], ys[c], qx, qy) >= 0
            and orient2d(xs[c], ys[c], xs[a], ys[a], qx, qy) >= 0
        ):
            return int(t)
    return None


def _xy_of(q):
    if hasattr(q, "x_m"):
        return float(q.x_m), float(q.y_m)
    x, y = q
    return float(x), float(y)


def _plane_value(tri: Triangulation, t: int, qx: float, qy: float) -> float:
    a, b, c = tri.triangles[t]
    if tri.depth[a] == tri.depth[b] == tri.depth[c]:
        return tri.depth[a]
    (ax, ay), (bx, by), (cx, cy) = tri.xy[a], tri.xy[b], tri.xy[c]
    area = _orient(ax, ay, bx, by, cx, cy)
    wa = _orient(qx, qy, bx, by, cx, cy) / area
    wb = _orient(ax, ay, qx, qy, cx, cy) / area
    wc = _orient(ax, ay, bx, by, qx, qy) / area
    return wa * tri.depth[a] + wb * tri.depth[b] + wc * tri.depth[c]


def interpolate(tri: Triangulation, q) -> float | None:
    """Planar (barycentric) depth at ``q``; None outside the hull."""
    qx, qy = _xy_of(q)
    t = locate(tri, (qx, qy))
    if t is None:
        return None
    return float(_plane_value(tri, t, qx, qy))


def _cell_values(tri: Triangulation, gx: np.ndarray, gy: np.ndarray, out: np.ndarray):
    """Fill ``out`` (NaN = unset) with TIN depths at cell centres ``gx``, ``gy``.

    Triangles are visited in index order and a cell keeps the first value
    assigned, so shared edges resolve to the lowest triangle index.
    """
    x0, y0 = gx[0], gy[0]
    cell = gx[1] - gx[0] if len(gx) > 1 else (gy[1] - gy[0] if len(gy) > 1 else 1.0)
    nx, ny = len(gx), len(gy)
    P = tri.xy[tri.triangles]
    D = tri.depth[tri.triangles]
    i_lo = np.clip(np.ceil((P[:, :, 0].min(axis=1) - x0) / cell - 1e-9), 0, nx).astype(int)
    i_hi = np.clip(np.floor((P[:, :, 0].max(axis=1) - x0) / cell + 1e-9), -1, nx - 1).astype(int)
    j_lo = np.clip(np.ceil((P[:, :, 1].min(axis=1) - y0) / cell - 1e-9), 0, ny).astype(int)
    j_hi = np.clip(np.floor((P[:, :, 1].max(axis=1) - y0) / cell + 1e-9), -1, ny - 1).astype(int)
    for t in range(len(P)):
        if i_lo[t] > i_hi[t] or j_lo[t] > j_hi[t]:
            continue
        (ax, ay), (bx, by), (cx, cy) = P[t]
        qx = gx[i_lo[t] : i_hi[t] + 1][None, :]
        qy = gy[j_lo[t] : j_hi[t] + 1][:, None]
        area = _orient(ax, ay, bx, by, cx, cy)
        wa = _orient(qx, qy, bx, by, cx, cy) / area
        wb = _orient(ax, ay, qx, qy, cx, cy) / area
        wc = _orient(ax, ay, bx, by, qx, qy) / area
        tol = -1e-12
        inside = (wa >= tol) & (wb >= tol) & (wc >= tol)
        block = out[j_lo[t] : j_hi[t] + 1, i_lo[t] : i_hi[t] + 1]
        fill = inside & np.isnan(block)
        if fill.any():
            if D[t, 0] == D[t, 1] == D[t, 2]:
                block[fill] = D[t, 0]
            else:
                val = wa * D[t, 0] + wb * D[t, 1] + wc * D[t, 2]
                block[fill] = val[fill]


def interpolate_many(tri: Triangulation, x, y) -> np.ndarray:
    """Vectorised :func:`interpolate`; NaN outside the hull."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty(np.broadcast(x, y).shape)
    flat = out.reshape(-1)
    for k, (qx, qy) in enumerate(zip(np.broadcast_to(x, out.shape).ravel(),
                                      np.broadcast_to(y, out.shape).ravel())):
        v = interpolate(tri, (qx, qy))
        flat[k] = np.nan if v is None else v
    return out


def rasterize(tri: Triangulation, boundary=None, cell_m: float = 5.0) -> DepthGrid:
    """Sample the TIN at cell centres over the hull's bounding box.

    Cells outside the hull, or outside ``boundary`` (a sequence of
    ``(x, y)`` vertices) when given, are masked.
    """
    if not cell_m > 0:
        raise ValueError("cell_m must be positive")
    lo = tri.xy.min(axis=0)
    hi = tri.xy.max(axis=0)
    width = max(1, int(math.ceil((hi[0] - lo[0]) / cell_m)))
    height = max(1, int(math.ceil((hi[1] - lo[1]) / cell_m)))
    if width * height > MAX_GRID_CELLS:
        raise ValueError(f"grid of {width}x{height} cells exceeds {MAX_GRID_CELLS}")
    ox = lo[0] + 0.5 * cell_m
    oy = lo[1] + 0.5 * cell_m
    gx = ox + cell_m * np.arange(width)
    gy = oy + cell_m * np.arange(height)
    depths = np.full((height, width), np.nan)
    _cell_values(tri, gx, gy, depths)
    mask = ~np.isnan(depths)
    if boundary is not None:
        poly = shapely.Polygon(np.asarray(boundary, dtype=float))
        inside = shapely.intersects_xy(poly, *np.meshgrid(gx, gy))
        mask &= inside
    depths[~mask] = np.nan
    return DepthGrid(origin=(ox, oy), cell_m=cell_m, depths=depths, mask=mask)
