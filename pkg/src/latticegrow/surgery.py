"""Hole-forcing surgery on a finite planar cluster.

The region between a cluster ``a`` and a contour at lattice distance 40 is
cut into patches by merged geodesics.  Walks started far away are watched
until seven of them visit one patch (the lucky patch) strictly before they
attach; those seven walks, and a few walks whose attachment point would
otherwise drift, get out-and-back loops inserted so that the modified
cluster encloses the point ``w`` next to the cluster in the lucky patch.

Walks are recorded as lattice paths only inside the closed region bounded
by the contour (everything the construction looks at lies there).  Outside
it they move by exact box jumps; a path array carries a ``jump`` flag on
every point that is not one lattice step after its predecessor.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy import ndimage

from .dla2d import (BOX_SIZES, DCAP, DEFAULT_RFACTOR, Cluster2D, NonHittingError, Walker,
                    _box_jump, _is_boundary, _pick_box, box_tables, cluster_from_paths,
                    hole_count)
from .rng import numpy_generator

RADIUS = 40
VISITORS = 7

# clockwise neighbour ring (y axis up), starting west
_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
_INF = math.inf


class DomainError(ValueError):
    pass


class ConstructionInfeasible(ValueError):
    """The cluster is too small for two patches."""


class ConstructionError(RuntimeError):
    """A step the construction guarantees did not go through."""


class NoLuckyPatch(RuntimeError):
    pass


def _nbrs(p):
    x, y = p
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


def _pt(p):
    return (int(p[0]), int(p[1]))


def _as_set(a) -> frozenset:
    if isinstance(a, Cluster2D):
        return frozenset(a.points)
    if isinstance(a, PatchDecomposition):
        return a.cluster
    return frozenset(_pt(p) for p in a)


def _connected(s) -> bool:
    if not s:
        return False
    start = next(iter(s))
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in _nbrs(p):
            if q in s and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(s)


def _outer(s) -> set:
    return {q for p in s for q in _nbrs(p) if q not in s}


def _l1(p, q) -> int:
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


# --------------------------------------------------------------------------
# contour

@dataclass
class Contour:
    """Lattice points xi_0..xi_l of the contour in clockwise order; the
    closing segment runs from xi_l back to xi_0."""

    points: list

    def __post_init__(self):
        self.points = [_pt(p) for p in self.points]
        self.index = {p: j for j, p in enumerate(self.points)}

    def __len__(self) -> int:
        return len(self.points)

    def segments(self) -> list:
        n = len(self.points)
        return [(self.points[j], self.points[(j + 1) % n]) for j in range(n)]

    def arc(self, s: int, e: int) -> list:
        """xi_s..xi_e, indices taken modulo l+1 (so e = l+1 means xi_0)."""
        n = len(self.points)
        return [self.points[j % n] for j in range(s, e + 1)]

    def signed_area(self) -> float:
        p = np.asarray(self.points, dtype=np.float64)
        q = np.roll(p, -1, axis=0)
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))

    def to_json(self) -> dict:
        return {"points": [list(p) for p in self.points],
                "segments": [[list(p), list(q)] for p, q in self.segments()]}


def _distance_grid(A, margin):
    xs = [p[0] for p in A]
    ys = [p[1] for p in A]
    x0, y0 = min(xs) - margin, min(ys) - margin
    occ = np.zeros((max(xs) - x0 + margin + 1, max(ys) - y0 + margin + 1), bool)
    for x, y in A:
        occ[x - x0, y - y0] = True
    d = ndimage.distance_transform_cdt(~occ, metric="taxicab")
    return d, (x0, y0)


def build_contour(a) -> Contour:
    """Clockwise outer boundary of {d(., a) <= 40}, started at z + 40 e2
    with z the leftmost point of maximal height.  Consecutive points differ
    by an axis or a diagonal unit step."""
    A = _as_set(a)
    if not _connected(A):
        raise DomainError("cluster must be nonempty and connected")
    d, (x0, y0) = _distance_grid(A, RADIUS + 2)
    nx, ny = d.shape

    def inside(p):
        i, j = p[0] - x0, p[1] - y0
        return 0 <= i < nx and 0 <= j < ny and d[i, j] <= RADIUS

    ymax = max(p[1] for p in A)
    zx = min(p[0] for p in A if p[1] == ymax)
    start = (zx, ymax + RADIUS)

    def step(p, back):
        k0 = _RING.index((back[0] - p[0], back[1] - p[1]))
        prev = back
        for t in range(1, 9):
            dx, dy = _RING[(k0 + t) % 8]
            c = (p[0] + dx, p[1] + dy)
            if inside(c):
                return c, prev
            prev = c
        raise ConstructionError("isolated contour point")

    first, back = step(start, (start[0] - 1, start[1]))
    pts = [start]
    cur = first
    while True:
        if cur == start and step(cur, back)[0] == first:
            break
        pts.append(cur)
        cur, back = step(cur, back)
        if len(pts) > 8 * d.size:
            raise ConstructionError("contour trace did not close")
    if len(set(pts)) != len(pts):
        raise ConstructionError("contour is not simple")
    for p in pts:
        if d[p[0] - x0, p[1] - y0] != RADIUS:
            raise ConstructionError(f"contour point {p} is not at distance {RADIUS}")
    return Contour(pts)


def contour_points_bruteforce(a) -> set:
    """Points at distance exactly 40 that touch the unbounded component of
    the complement of {d <= 40} (independent of the tracing)."""
    A = _as_set(a)
    d, (x0, y0) = _distance_grid(A, RADIUS + 3)
    lab, _ = ndimage.label(d > RADIUS)
    outside = lab == lab[0, 0]
    out = set()
    for i, j in zip(*np.nonzero(d == RADIUS)):
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if outside[i + di, j + dj]:
                out.add((int(i) + x0, int(j) + y0))
                break
    return out


def _loop_erase(walk) -> list:
    out, where = [], {}
    for p in walk:
        if p in where:
            for q in out[where[p] + 1:]:
                del where[q]
            del out[where[p] + 1:]
        else:
            where[p] = len(out)
            out.append(p)
    return out


def build_hat_gamma(contour: Contour, a=None) -> list:
    """Lattice loop through the contour points with one corner inserted on
    every diagonal step (on the outer side).  At a one-pixel inward notch
    both neighbouring steps insert the same corner; the spike is erased, so
    the notch tip itself is not on the loop (see ``hat_index``)."""
    pts = contour.points
    n = len(pts)
    walk = []
    for j in range(n):
        p, q = pts[j], pts[(j + 1) % n]
        walk.append(p)
        dx, dy = q[0] - p[0], q[1] - p[1]
        if abs(dx) + abs(dy) == 2:
            corner = {(1, 1): (0, 1), (1, -1): (1, 0), (-1, 1): (-1, 0), (-1, -1): (0, -1)}[(dx, dy)]
            walk.append((p[0] + corner[0], p[1] + corner[1]))
    hat = _loop_erase(walk)
    if hat[0] != pts[0]:
        raise ConstructionError("loop erasure removed the start point")
    if a is not None:
        A = np.asarray(sorted(_as_set(a)))
        H = np.asarray(hat)
        dmin = min(int(np.abs(A - h).sum(1).min()) for h in H)
        if dmin < RADIUS:
            raise ConstructionError("hat loop comes closer than the contour distance")
    return hat


def hat_index(contour: Contour, hat) -> dict:
    """Position on the loop of every contour point; an erased notch tip maps
    to its (adjacent) corner."""
    pos = {p: j for j, p in enumerate(hat)}
    out = {}
    for p in contour.points:
        if p in pos:
            out[p] = pos[p]
        else:
            q = next((q for q in _nbrs(p) if q in pos), None)
            if q is None:
                raise ConstructionError(f"contour point {p} is off the hat loop")
            out[p] = pos[q]
    return out


# --------------------------------------------------------------------------
# merged geodesics

def _staircase(xi, y) -> list:
    tx, ty = y[0] - xi[0], y[1] - xi[1]
    sx, sy = (1 if tx > 0 else -1), (1 if ty > 0 else -1)
    ax, ay = abs(tx), abs(ty)
    i = j = 0
    path = [xi]
    while i < ax or j < ay:
        if i == ax:
            j += 1
        elif j == ay:
            i += 1
        elif abs((i + 1) * ay - j * ax) <= abs(i * ay - (j + 1) * ax):
            i += 1
        else:
            j += 1
        path.append((xi[0] + sx * i, xi[1] + sy * j))
    return path


def _geodesic(xi, A_arr) -> list:
    dist = np.abs(A_arr - np.asarray(xi)).sum(1)
    cand = A_arr[dist == dist.min()]
    e = ((cand - np.asarray(xi)) ** 2).sum(1)
    best = min((int(e[k]), int(cand[k, 0]), int(cand[k, 1])) for k in range(len(cand)))
    return _staircase(xi, (best[1], best[2]))


def build_gamma_paths(a, contour: Contour) -> list:
    """gamma(xi_j) for every contour point, merged so that two paths that
    touch stay together.  A merge point on both gamma(xi_i) and gamma(xi_0)
    follows gamma(xi_i)."""
    A = _as_set(a)
    A_arr = np.asarray(sorted(A), dtype=np.int64)
    pts = contour.points
    paths = [_geodesic(pts[0], A_arr)]
    pos = [{p: t for t, p in enumerate(paths[0])}]
    covered = set(paths[0])
    for i in range(len(pts) - 1):
        g = _geodesic(pts[i + 1], A_arr)
        t = next((t for t, p in enumerate(g) if p in covered), None)
        if t is None or t == RADIUS:
            # a shared endpoint in the cluster; nothing to splice
            path = g
        else:
            w = g[t]
            if w in pos[i]:
                base, bp = paths[i], pos[i]
            elif w in pos[0]:
                base, bp = paths[0], pos[0]
            else:
                raise ConstructionError(f"merge point {w} lies on neither neighbouring path")
            path = g[:t] + base[bp[w]:]
        if len(path) != RADIUS + 1:
            raise ConstructionError("merged path has the wrong length")
        paths.append(path)
        pos.append({p: t for t, p in enumerate(path)})
        covered.update(path)
    return paths


def stay_together(paths) -> bool:
    succ = {}
    for path in paths:
        for p, q in zip(path, path[1:]):
            if succ.setdefault(p, q) != q:
                return False
    return True


# --------------------------------------------------------------------------
# distances avoiding the cluster

def _offa_bfs(A, sources, limit=None, bounds=None) -> dict:
    """BFS from ``sources`` through points off A; depth at most ``limit``."""
    dist = {s: 0 for s in sources}
    frontier = list(dist)
    depth = 0
    while frontier and (limit is None or depth < limit):
        depth += 1
        nxt = []
        for p in frontier:
            for q in _nbrs(p):
                if q in dist or q in A:
                    continue
                if bounds is not None and not (bounds[0] <= q[0] <= bounds[1]
                                               and bounds[2] <= q[1] <= bounds[3]):
                    continue
                dist[q] = depth
                nxt.append(q)
        frontier = nxt
    return dist


def _reach(t, dist, A) -> float:
    """Length of the best path from the BFS sources to t whose interior
    avoids A (t itself may lie in A)."""
    if dist.get(t) == 0:
        return 0
    if t not in A:
        return dist.get(t, _INF)
    best = _INF
    for q in _nbrs(t):
        if q in dist and (q not in A or dist[q] == 0):
            best = min(best, dist[q] + 1)
    return best


def constrained_distance(a, source, target, limit=None) -> float:
    """Shortest length of a lattice path from ``source`` (a point or a set)
    to ``target`` whose interior avoids the cluster; inf if there is none
    (or, with ``limit``, none of length <= limit)."""
    A = _as_set(a)
    if len(source) == 2 and isinstance(source[0], (int, np.integer)):
        sources = {_pt(source)}
    else:
        sources = {_pt(p) for p in source}
    targets = {_pt(p) for p in target}
    allp = list(A | sources | targets)
    bounds = (min(p[0] for p in allp) - 1, max(p[0] for p in allp) + 1,
              min(p[1] for p in allp) - 1, max(p[1] for p in allp) + 1)
    dist = _offa_bfs(A, sources, limit, bounds)
    best = min((_reach(t, dist, A) for t in targets), default=_INF)
    if limit is not None and best > limit:
        return _INF
    return best


# --------------------------------------------------------------------------
# separators and patches

@dataclass
class Separators:
    u: list          # contour indices n(0..I); u[I] = l+1 stands for xi_0
    v: list          # contour indices m(1..I)
    I: int
    dropped: int | None  # index of the dropped point u^I

    def to_json(self) -> dict:
        return {"u": self.u, "v": self.v, "I": self.I, "dropped": self.dropped}


def select_separators(a, contour: Contour, gammas) -> Separators:
    """Left-to-right scan for separating paths at mutual distance >= 40."""
    A = _as_set(a)
    l = len(contour) - 1
    ends = [g[-1] for g in gammas]

    def first_v(ui, lo):
        dist = _offa_bfs(A, set(gammas[ui]), RADIUS - 1)
        for c in range(lo, l + 1):
            if _reach(ends[c], dist, A) >= RADIUS:
                return c
        return None

    def first_u(vi, lo):
        dist = _offa_bfs(A, {ends[vi]}, RADIUS - 1)
        for c in range(lo, l + 1):
            if min(_reach(t, dist, A) for t in gammas[c]) >= RADIUS:
                return c
        return None

    u, v = [0], []
    i = 0
    while True:
        c = first_v(u[i], u[i] + 1)
        if c is None:
            dropped = u[i]
            u[i] = l + 1
            break
        v.append(c)
        c2 = first_u(c, c + 1)
        if c2 is None:
            dropped = u[i]
            v.pop()
            u[i] = l + 1
            break
        u.append(c2)
        i += 1
    seps = Separators(u, v, i, dropped)
    if seps.I < 2:
        raise ConstructionInfeasible(f"only {seps.I} patch(es); the cluster is too small")
    return seps


@dataclass
class Patch:
    index: int               # 1-based
    left: int                # contour index of xi^l
    mid: int                 # contour index of xi^m
    right: int               # contour index of xi^r (l+1 means xi_0)
    gamma_minus: list
    gamma_star: list
    gamma_plus: list
    interior: frozenset      # lattice points strictly inside
    closure: frozenset       # lattice points of the closed patch off the cluster

    @property
    def y_star(self):
        return self.gamma_star[-1]

    def to_json(self) -> dict:
        return {"index": self.index, "left": self.left, "mid": self.mid, "right": self.right,
                "gammaMinus": [list(p) for p in self.gamma_minus],
                "gammaStar": [list(p) for p in self.gamma_star],
                "gammaPlus": [list(p) for p in self.gamma_plus],
                "interior": [list(p) for p in sorted(self.interior)]}


@dataclass
class PatchDecomposition:
    cluster: frozenset
    contour: Contour
    gammas: list
    separators: Separators
    patches: list
    _grid: object = field(default=None, repr=False, compare=False)

    @property
    def I(self) -> int:
        return self.separators.I

    def patch(self, i: int) -> Patch:
        return self.patches[i - 1]

    def to_json(self) -> dict:
        return {"cluster": [list(p) for p in sorted(self.cluster)],
                "contour": self.contour.to_json(),
                "paths": [[list(p) for p in g] for g in self.gammas],
                "separators": self.separators.to_json(),
                "patches": [p.to_json() for p in self.patches]}

    def grid(self) -> "_PatchGrid":
        if self._grid is None:
            self._grid = _PatchGrid(self)
        return self._grid


def _mark_path(walls, path, o):
    for p in path:
        walls[2 * (p[0] - o[0]), 2 * (p[1] - o[1])] = True
    for p, q in zip(path, path[1:]):
        walls[p[0] + q[0] - 2 * o[0], p[1] + q[1] - 2 * o[1]] = True


def build_patches(a, contour: Contour, gammas, seps: Separators) -> PatchDecomposition:
    """Patch interiors by flood fill on the doubled lattice."""
    A = _as_set(a)
    if seps.I < 2:
        raise ConstructionInfeasible("need at least two separators")
    xs = [p[0] for p in contour.points]
    ys = [p[1] for p in contour.points]
    o = (min(xs) - 2, min(ys) - 2)
    shape = (2 * (max(xs) - o[0] + 2) + 1, 2 * (max(ys) - o[1] + 2) + 1)
    base = np.zeros(shape, bool)
    for p in A:
        base[2 * (p[0] - o[0]), 2 * (p[1] - o[1])] = True
        for q in ((p[0] + 1, p[1]), (p[0], p[1] + 1)):
            if q in A:
                base[p[0] + q[0] - 2 * o[0], p[1] + q[1] - 2 * o[1]] = True
    patches = []
    for i in range(1, seps.I + 1):
        lft, mid, rgt = seps.u[i - 1], seps.v[i - 1], seps.u[i]
        gm, gs, gp = gammas[lft], gammas[mid], gammas[rgt % len(contour)]
        arc = contour.arc(lft, rgt)
        walls = base.copy()
        for path in (gm, gp, arc):
            _mark_path(walls, path, o)
        seed = gs[1]
        si, sj = 2 * (seed[0] - o[0]), 2 * (seed[1] - o[1])
        if walls[si, sj]:
            raise ConstructionError(f"patch {i}: seed lies on the boundary")
        lab, _ = ndimage.label(~walls)
        comp = lab == lab[si, sj]
        if comp[0, :].any() or comp[-1, :].any() or comp[:, 0].any() or comp[:, -1].any():
            raise ConstructionError(f"patch {i}: region is not enclosed")
        ev = comp[::2, ::2]
        interior = frozenset((int(x) + o[0], int(y) + o[1]) for x, y in zip(*np.nonzero(ev)))
        closure = frozenset((set(interior) | set(gm) | set(gp) | set(arc)) - A)
        patches.append(Patch(i, lft, mid, rgt, gm, gs, gp, interior, closure))
    return PatchDecomposition(A, contour, gammas, seps, patches)


def build_decomposition(a) -> PatchDecomposition:
    A = _as_set(a)
    contour = build_contour(A)
    gammas = build_gamma_paths(A, contour)
    seps = select_separators(A, contour, gammas)
    return build_patches(A, contour, gammas, seps)


def region_inside(contour: Contour) -> frozenset:
    """Lattice points inside or on the contour."""
    xs = [p[0] for p in contour.points]
    ys = [p[1] for p in contour.points]
    o = (min(xs) - 2, min(ys) - 2)
    shape = (2 * (max(xs) - o[0] + 2) + 1, 2 * (max(ys) - o[1] + 2) + 1)
    walls = np.zeros(shape, bool)
    _mark_path(walls, contour.points + [contour.points[0]], o)
    lab, _ = ndimage.label(~walls)
    outside = lab == lab[0, 0]
    ev = ~outside[::2, ::2]
    return frozenset((int(x) + o[0], int(y) + o[1]) for x, y in zip(*np.nonzero(ev)))


class _PatchGrid:
    """Boolean rasters of the patch closures, interiors and the region
    inside the contour, for vectorised hitting times along path arrays."""

    def __init__(self, dec: PatchDecomposition):
        pts = dec.contour.points
        self.R = max(max(abs(x), abs(y)) for x, y in pts)
        self.W = self.R + DCAP + 4
        n = 2 * self.W + 1
        self.n = n
        self.inF = np.zeros((n, n), np.uint8)
        for x, y in region_inside(dec.contour):
            self.inF[x + self.W, y + self.W] = 1
        self.closure = np.zeros((dec.I, n, n), bool)
        self.interior = np.zeros((dec.I, n, n), bool)
        for k, p in enumerate(dec.patches):
            for x, y in p.closure:
                self.closure[k, x + self.W, y + self.W] = True
            for x, y in p.interior:
                self.interior[k, x + self.W, y + self.W] = True
        self.on_contour = np.zeros((n, n), bool)
        for x, y in pts:
            self.on_contour[x + self.W, y + self.W] = True

    def index(self, P):
        i = P[:, 0] + self.W
        j = P[:, 1] + self.W
        ok = (i >= 0) & (i < self.n) & (j >= 0) & (j < self.n)
        return np.where(ok, i, 0), np.where(ok, j, 0), ok

    def occupancy(self, points) -> np.ndarray:
        occ = np.zeros((self.n, self.n), np.uint8)
        for x, y in points:
            occ[x + self.W, y + self.W] = 1
        return occ

    @staticmethod
    def boundary_of(occ) -> np.ndarray:
        o = occ.astype(bool)
        d = ndimage.binary_dilation(o, structure=ndimage.generate_binary_structure(2, 1))
        return d & ~o


def _first(mask_along) -> float:
    k = int(np.argmax(mask_along)) if len(mask_along) else 0
    return k if len(mask_along) and mask_along[k] else _INF


# --------------------------------------------------------------------------
# lucky patch

@dataclass
class LuckyPatch:
    theta: int           # patch index (1-based)
    V: list              # indices (1-based) of the seven visiting paths
    counts: np.ndarray   # counts[j, i-1] = N_{j, D_i}, j = 0..V7
    attach: list         # attach points in the unmodified run, k = 1..V7
    hit_times: list      # index of the attach point along each path

    def to_json(self) -> dict:
        return {"theta": self.theta, "V": self.V, "counts": self.counts.tolist(),
                "attach": [list(p) for p in self.attach]}


def _as_path(p):
    if isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], np.ndarray):
        return p[0].astype(np.int64), p[1].astype(bool)
    P = np.asarray([list(q) for q in p] if not isinstance(p, np.ndarray) else p, dtype=np.int64)
    P = P.reshape(-1, 2)
    J = np.zeros(len(P), bool)
    if len(P):
        steps = np.abs(np.diff(P, axis=0)).sum(1)
        J[0] = True
        J[1:] = steps != 1
    return P, J


def lucky_patch(dec: PatchDecomposition, paths, L: int | None = None) -> LuckyPatch:
    """Run the unmodified growth path by path until some patch has been
    entered by seven paths strictly before they attach."""
    grid = dec.grid()
    occ = grid.occupancy(dec.cluster)
    I = dec.I
    counts = [np.zeros(I, np.int64)]
    attach, hits = [], []
    for k, raw in enumerate(paths, start=1):
        if L is not None and k > L:
            break
        P, _ = _as_path(raw)
        bnd = grid.boundary_of(occ)
        ii, jj, ok = grid.index(P)
        T = _first(bnd[ii, jj] & ok)
        if T == _INF:
            raise NonHittingError(f"path {k} never meets the cluster boundary")
        inc = np.zeros(I, np.int64)
        tau = []
        for d in range(I):
            t = _first(grid.closure[d, ii[:T + 1], jj[:T + 1]] & ok[:T + 1])
            tau.append(t)
            if t < T:
                inc[d] = 1
        N = counts[-1] + inc
        counts.append(N)
        x = _pt(P[T])
        attach.append(x)
        hits.append(T)
        occ[x[0] + grid.W, x[1] + grid.W] = 1
        reached = [d for d in range(I) if inc[d] and N[d] == VISITORS]
        if reached:
            tmin = min(tau[d] for d in reached)
            first = [d for d in reached if tau[d] == tmin]
            if len(first) > 1:
                z = _pt(P[tmin])
                plus = [d for d in first if z in set(dec.patches[d].gamma_plus)]
                first = plus or first
            theta = first[0]
            V = [j for j in range(1, k + 1) if counts[j][theta] > counts[j - 1][theta]]
            return LuckyPatch(theta + 1, V, np.asarray(counts), attach, hits)
    raise NoLuckyPatch("no patch reached seven visitors")


# --------------------------------------------------------------------------
# attach points

# (gamma_36, gamma_37, gamma_38) -> (k2, prefix length, extra points); a point
# (i, c1, c2) is w_i + c1 f1 + c2 f2
_CASES = (
    (((6, 2, 0), (6, 1, 0), (6, 0, 0)), 5, 37, ((5, 1, 0), (5, 0, 0))),
    (((6, 1, 1), (6, 1, 0), (6, 0, 0)), 5, 36, ((5, 0, 0),)),
    (((5, 1, 0), (5, 0, 0), (6, 0, 0)), 6, 36, ((6, 1, 0), (6, 0, 0))),
    (((5, 0, 1), (5, 0, 0), (6, 0, 0)), 4, 36, ((4, 0, 1), (4, 0, 0))),
    (((5, 1, 0), (5, 0, 0), (4, 0, 0)), 6, 36, ((6, 1, 0), (6, 0, 0))),
    (((5, 0, 1), (5, 0, 0), (4, 0, 0)), 4, 36, ((4, 0, 1), (4, 0, 0))),
    (((4, 1, 1), (4, 0, 1), (4, 0, 0)), 5, 36, ((5, 0, 0),)),
    (((4, 0, 2), (4, 0, 1), (4, 0, 0)), 5, 37, ((5, 0, 1), (5, 0, 0))),
)


def _ring(w, y, f1, f2) -> list:
    def at(c1, c2):
        return (w[0] + c1 * f1[0] + c2 * f2[0], w[1] + c1 * f1[1] + c2 * f2[1])
    return [y, at(-1, -1), at(-1, 0), at(-1, 1), at(0, 1), at(1, 1), at(1, 0), at(1, -1)]


@dataclass
class AttachPlan:
    xs: list
    betas: list
    w: tuple
    ring: list        # w_0..w_7
    k1: int
    k2: int
    m1: int
    m2: int
    first: int        # which of k1, k2 is included first
    reflected: bool

    def to_json(self) -> dict:
        return {"x": [list(p) for p in self.xs], "beta": [[list(p) for p in b] for b in self.betas],
                "w": list(self.w), "ring": [list(p) for p in self.ring], "k1": self.k1,
                "k2": self.k2, "m1": self.m1, "m2": self.m2, "first": self.first,
                "reflected": self.reflected}


def attach_points_from_gamma(a, gamma) -> AttachPlan:
    """x_1..x_7 and beta_1..beta_7 for the geodesic ``gamma`` of length 40."""
    A = _as_set(a)
    gamma = [_pt(p) for p in gamma]
    if len(gamma) != RADIUS + 1 or gamma[-1] not in A:
        raise ConstructionError("gamma must have length 40 and end in the cluster")
    y, w = gamma[-1], gamma[-2]
    f2 = (w[0] - y[0], w[1] - y[1])
    f1 = (f2[1], -f2[0])
    ring = _ring(w, y, f1, f2)
    wset = set(ring[1:])
    k1 = next(ring.index(p) for p in gamma if p in wset)
    key = tuple(gamma[36:39])
    match = None
    for sign in (1, -1):
        g1 = (sign * f1[0], sign * f1[1])
        rs = _ring(w, y, g1, f2)

        def at(i, c1, c2):
            return (rs[i][0] + c1 * g1[0] + c2 * f2[0], rs[i][1] + c1 * g1[1] + c2 * f2[1])
        for pat, k2, pre, extra in _CASES:
            if tuple(at(*q) for q in pat) == key:
                k2o = k2 if sign == 1 else 8 - k2
                bt2 = gamma[:pre + 1] + [at(*q) for q in extra]
                match = (k2o, bt2, sign == -1)
                break
        if match:
            break
    if match is None:
        raise ConstructionError(f"no case matches the path end {key}")
    k2, bt2, reflected = match
    bt1 = gamma[:gamma.index(ring[k1]) + 1]
    gset = set(gamma)
    k2_first = any(z != ring[k2] and z not in gset for z in bt2)
    bt = {k1: bt1, k2: bt2}
    outer = _outer(A)
    km, kp = min(k1, k2), max(k1, k2)
    m1 = max((j for j in range(1, km + 1) if ring[j] in outer), default=None)
    m2 = min((j for j in range(kp, 8) if ring[j] in outer), default=None)
    if m1 is None or m2 is None:
        raise ConstructionError("ring does not meet the cluster boundary on both sides")
    xs, betas = [], []
    for j in range(m1, km):          # counterclockwise from w_- down to x
        xs.append(ring[j])
        betas.append(bt[km] + [ring[q] for q in range(km - 1, j - 1, -1)])
    for j in range(m2, kp, -1):      # clockwise from w_+ up to x
        xs.append(ring[j])
        betas.append(bt[kp] + [ring[q] for q in range(kp + 1, j + 1)])
    order = (k2, k1) if k2_first else (k1, k2)
    for k in order:
        xs.append(ring[k])
        betas.append(bt[k])
    outW = _outer(wset)
    n = next(t for t, p in enumerate(gamma) if p in outW)
    for j in range(VISITORS - len(xs)):
        xs.append(gamma[n - j])
        betas.append(gamma[:n - j + 1])
    if len(xs) != VISITORS:
        raise ConstructionError("wrong number of attach points")
    return AttachPlan(xs, betas, w, ring, k1, k2, m1, m2, order[0], reflected)


def choose_attach_points(dec: PatchDecomposition, i: int) -> AttachPlan:
    return attach_points_from_gamma(dec.cluster, dec.patch(i).gamma_star)


def check_attach_plan(a, plan: AttachPlan) -> dict:
    """Sequential attachment and the enclosed point w."""
    A = _as_set(a)
    ok_seq = True
    c = Cluster2D(A)
    for j, b in enumerate(plan.betas):
        c2 = cluster_from_paths(c, [b])
        if c2.points != c.points | {plan.xs[j]}:
            ok_seq = False
            break
        c = c2
    final = A | set(plan.xs)
    holes = hole_count(final).holes
    enclosed = any(plan.w in set(map(tuple, h)) for h in holes)
    near = max(_l1(x, plan.ring[0]) for x in plan.xs)
    return {"sequential": ok_seq, "wInHole": enclosed, "maxDistanceToY": near,
            "distanceOk": near <= 7}


# --------------------------------------------------------------------------
# path helpers

def _lex_shortest(start, allowed, is_target, bounds, limit=None):
    """Lexicographically least shortest path from ``start`` to the nearest
    target; vertices after the start must satisfy ``allowed``."""
    if is_target(start):
        return [start]
    layers = [[start]]
    seen = {start}
    found = []
    while not found:
        nxt = []
        for p in layers[-1]:
            for q in _nbrs(p):
                if q in seen or not (bounds[0] <= q[0] <= bounds[1] and bounds[2] <= q[1] <= bounds[3]):
                    continue
                if not allowed(q):
                    continue
                seen.add(q)
                nxt.append(q)
        if not nxt or (limit is not None and len(layers) > limit):
            return None
        layers.append(nxt)
        found = [q for q in nxt if is_target(q)]
    good = [set() for _ in layers]
    good[-1] = set(found)
    for d in range(len(layers) - 2, -1, -1):
        good[d] = {p for p in layers[d] if any(q in good[d + 1] for q in _nbrs(p))}
    path = [start]
    for d in range(1, len(layers)):
        path.append(min(q for q in _nbrs(path[-1]) if q in good[d]))
    return path


def _hat_part(hat, hpos, p, q, forward: bool) -> list:
    """Part of the loop from p to q (forwards or backwards)."""
    n = len(hat)
    if not forward:
        return _hat_part(hat, hpos, q, p, True)[::-1]
    s, e = hpos[p], hpos[q]
    if e < s:
        e += n
    part = [hat[j % n] for j in range(s, e + 1)]
    if part[0] != p:
        part.insert(0, p)
    if part[-1] != q:
        part.append(q)
    return part


def _join(*parts) -> list:
    out = list(parts[0])
    for part in parts[1:]:
        if part[0] != out[-1]:
            raise ConstructionError("path pieces do not connect")
        out.extend(part[1:])
    return out


# --------------------------------------------------------------------------
# the map phi

@dataclass
class SurgeryPlan:
    theta: int
    V: list
    actions: list        # one dict per path k <= V7
    attach: AttachPlan
    catch_up: list       # loop lengths of catch-up loops
    v_loops: list        # loop lengths of the seven attach loops

    def to_json(self) -> dict:
        return {"theta": self.theta, "V": self.V,
                "actions": [{k: ([list(p) for p in v] if k == "loop" else
                                 (list(v) if isinstance(v, tuple) else v))
                             for k, v in a.items()} for a in self.actions],
                "attach": self.attach.to_json(), "catchUp": self.catch_up,
                "vLoops": self.v_loops}


def phi(dec: PatchDecomposition, paths, L: int | None = None):
    """Return (phi(omega), plan).  Paths beyond V_7 are returned unchanged;
    if a supplied path never meets its cluster boundary the input is
    returned with plan None."""
    A = dec.cluster
    try:
        lp = lucky_patch(dec, paths, L)
    except NonHittingError:
        return [(_as_path(p)) for p in paths], None
    grid = dec.grid()
    D = dec.patch(lp.theta)
    ap = choose_attach_points(dec, lp.theta)
    hat = build_hat_gamma(dec.contour)
    hpos = hat_index(dec.contour, hat)
    xi = dec.contour.points
    nC = len(xi)
    xl, xm, xr = xi[D.left], xi[D.mid], xi[D.right % nC]
    gminus, gplus = set(D.gamma_minus), set(D.gamma_plus)
    hx = [p[0] for p in hat]
    hy = [p[1] for p in hat]
    bounds = (min(hx) - 2, max(hx) + 2, min(hy) - 2, max(hy) + 2)
    outer_a = _outer(A)

    Aw = set(A)
    Ap = set(A)
    occp = grid.occupancy(A)
    out, actions, catch, vloops = [], [], [], []
    V7 = lp.V[-1]
    for k in range(1, V7 + 1):
        P, J = _as_path(paths[k - 1])
        T = lp.hit_times[k - 1]
        x = lp.attach[k - 1]
        bp = grid.boundary_of(occp)
        ii, jj, ok = grid.index(P[:T + 1])
        tphi = _first(bp[ii, jj] & ok)
        tD = _first(grid.closure[lp.theta - 1, ii, jj] & ok)
        if tD < T:
            i = lp.V.index(k)
            z = _pt(P[tD])
            beta = ap.betas[i]
            if z in dec.contour.index:
                rel = (dec.contour.index[z] - D.left) % nC
                forward = rel <= (D.mid - D.left) % nC
                alpha = _join(_hat_part(hat, hpos, z, xm, forward), beta)
                r = [z]
            else:
                if z in gminus:
                    goal, forward = xl, True
                elif z in gplus:
                    goal, forward = xr, False
                else:
                    raise ConstructionError(f"path {k} enters the lucky patch at an interior point")
                bset = {(int(p[0]) - grid.W, int(p[1]) - grid.W) for p in zip(*np.nonzero(bp))}
                r = _lex_shortest(z, lambda q: q not in D.interior and q not in bset and q not in Ap,
                                  lambda q: q == goal, bounds)
                if r is None or z in bset:
                    raise ConstructionError(f"path {k}: no admissible route to the contour")
                alpha = _join(r, _hat_part(hat, hpos, goal, xm, forward), beta)
            at, kind, loop = tD, "attach", alpha
            intended = ap.xs[i]
            vloops.append(2 * (len(alpha) - 1))
        elif tphi == T:
            at, kind, loop, intended = T, "unchanged", [x], x
        elif tphi > T:
            bset = {(int(p[0]) - grid.W, int(p[1]) - grid.W) for p in zip(*np.nonzero(bp))}
            lam = _lex_shortest(x, lambda q: q in Aw and q not in A,
                                lambda q: q in outer_a and q in Aw, bounds)
            if lam is None:
                raise ConstructionError(f"path {k}: no catch-up route")
            j0 = next((j for j, q in enumerate(lam) if q in bset), None)
            if j0 is None:
                raise ConstructionError(f"path {k}: catch-up route misses the modified boundary")
            loop = lam[:j0 + 1]
            at, kind, intended = T, "catch-up", loop[-1]
            catch.append(2 * j0)
        else:
            raise ConstructionError(f"path {k} meets the modified boundary first")
        if kind == "unchanged":
            Pn, Jn = P, J
        else:
            ins = np.asarray(loop[1:] + loop[::-1][1:], dtype=np.int64).reshape(-1, 2)
            Pn = np.concatenate([P[:at + 1], ins, P[at + 1:]])
            Jn = np.concatenate([J[:at + 1], np.zeros(len(ins), bool), J[at + 1:]])
        # actual attachment of the modified path
        ii, jj, ok = grid.index(Pn)
        t = _first(bp[ii, jj] & ok)
        got = _pt(Pn[t]) if t != _INF else None
        actions.append({"k": k, "kind": kind, "index": int(at), "loop": loop,
                        "intended": intended, "attached": got})
        out.append((Pn, Jn))
        Aw.add(x)
        if got is None:
            raise ConstructionError(f"modified path {k} never attaches")
        Ap.add(got)
        occp[got[0] + grid.W, got[1] + grid.W] = 1
    for raw in list(paths)[V7:]:
        out.append(_as_path(raw))
    plan = SurgeryPlan(lp.theta, lp.V, actions, ap, catch, vloops)
    return out, plan


# --------------------------------------------------------------------------
# sampling walks

@nb.njit(cache=True)
def _omega_kernel(g, inF, distF, occ, W, RinfF, R, sizes, tables, px, py, pj, cap):
    """One walk from the far circle until it first steps onto the outer
    boundary of ``occ``; lattice points inside the contour region are
    recorded.  Returns the record length, -1 on budget, -2 if full."""
    nG = inF.shape[0]
    R2 = (2.0 * R) ** 2
    steps = 0
    while True:
        th = 2.0 * math.pi * g.random()
        x = int(np.rint(R * math.cos(th)))
        y = int(np.rint(R * math.sin(th)))
        n = 0
        jumped = True
        while True:
            steps += 1
            if steps > 500_000_000:
                return -1
            i = x + W
            j = y + W
            ing = 0 <= i < nG and 0 <= j < nG
            if ing and inF[i, j]:
                if n >= cap:
                    return -2
                px[n] = x
                py[n] = y
                pj[n] = jumped
                n += 1
                jumped = False
                if _is_boundary(occ, W, x, y):
                    return n
                k = -1
            else:
                jumped = True
                if float(x) * x + float(y) * y > R2:
                    break
                dd = max(abs(x), abs(y)) - RinfF
                if ing and distF[i, j] > dd:
                    dd = distF[i, j]
                k = _pick_box(dd - 1, sizes)
            if k >= 0:
                x, y = _box_jump(g, x, y, k, sizes, tables)
            else:
                d = int(g.random() * 4.0)
                if d == 0:
                    x += 1
                elif d == 1:
                    x -= 1
                elif d == 2:
                    y += 1
                else:
                    y -= 1


class OmegaSampler:
    """Draws the walks omega_1, omega_2, ... of the unmodified growth from
    the cluster, stopping at V_7."""

    def __init__(self, dec: PatchDecomposition, seed: int, stream_id: int = 0,
                 rfactor: float = DEFAULT_RFACTOR, cap: int = 5_000_000):
        self.dec = dec
        self.grid = dec.grid()
        self.g = numpy_generator(seed, stream_id)
        self.seed, self.stream_id = seed, stream_id
        inF = self.grid.inF
        d = ndimage.distance_transform_cdt(1 - inF, metric="chessboard")
        self.distF = np.minimum(d, DCAP).astype(np.int32)
        self.RinfF = self.grid.R
        S = max(abs(x) + abs(y) for x, y in dec.contour.points)
        self.Rlaunch = rfactor * (S + 1)
        self.cap = cap
        self.px = np.zeros(cap, np.int64)
        self.py = np.zeros(cap, np.int64)
        self.pj = np.zeros(cap, np.bool_)
        self.tables = box_tables()

    def walk(self, occ):
        n = _omega_kernel(self.g, self.grid.inF, self.distF, occ, self.grid.W, self.RinfF,
                          self.Rlaunch, BOX_SIZES, self.tables, self.px, self.py, self.pj,
                          self.cap)
        if n < 0:
            raise ConstructionError("walk budget exhausted")
        P = np.stack([self.px[:n], self.py[:n]], axis=1).copy()
        return P, self.pj[:n].copy()

    def sample(self, L: int) -> list:
        dec, grid = self.dec, self.grid
        occ = grid.occupancy(dec.cluster)
        counts = np.zeros(dec.I, np.int64)
        paths = []
        for _ in range(L):
            P, J = self.walk(occ)
            T = len(P) - 1
            ii, jj, ok = grid.index(P)
            for d in range(dec.I):
                if _first(grid.closure[d, ii, jj] & ok) < T:
                    counts[d] += 1
            x = P[T]
            occ[x[0] + grid.W, x[1] + grid.W] = 1
            if not grid.inF[x[0] + grid.W, x[1] + grid.W]:
                raise ConstructionError("cluster reached the contour before V_7")
            paths.append((P, J))
            if counts.max() >= VISITORS:
                return paths
        raise NoLuckyPatch(f"no lucky patch within {L} paths")


# --------------------------------------------------------------------------
# verification

def _clusters_along(A, paths, upto):
    """A_0..A_upto by first boundary hits along ``paths``."""
    c = Cluster2D(A)
    seq = [frozenset(c.points)]
    for k in range(upto):
        P, _ = _as_path(paths[k])
        for p in P:
            p = (int(p[0]), int(p[1]))
            if p in c.boundary:
                c.add(p)
                break
        else:
            raise NonHittingError(f"path {k + 1} never meets the cluster boundary")
        seq.append(frozenset(c.points))
    return seq


def _components(points) -> list:
    pts = set(points)
    out = []
    while pts:
        s = pts.pop()
        comp = {s}
        stack = [s]
        while stack:
            p = stack.pop()
            for q in _nbrs(p):
                if q in pts:
                    pts.discard(q)
                    comp.add(q)
                    stack.append(q)
        out.append(comp)
    return out


def verify_decomposition(dec: PatchDecomposition) -> dict:
    """Exact checks on the geometry: contour distance, merged paths,
    separation, patch properties and the attach plans of every patch."""
    A = dec.cluster
    d, (x0, y0) = _distance_grid(A, RADIUS + 2)
    pts = dec.contour.points
    dist_ok = all(d[p[0] - x0, p[1] - y0] == RADIUS for p in pts)
    simple = len(set(pts)) == len(pts)
    clockwise = dec.contour.signed_area() < 0
    lengths_ok = all(len(g) == RADIUS + 1 and g[-1] in A and g[0] == pts[j]
                     for j, g in enumerate(dec.gammas))
    together = stay_together(dec.gammas)
    c121 = 2 * 121 * 121 + 2 * 121 + 1
    c363 = 2 * 363 * 363 + 2 * 363 + 1
    patches = []
    for p in dec.patches:
        left_arc = dec.contour.arc(p.left, p.mid)
        right_arc = dec.contour.arc(p.mid, p.right)
        xl, xm = pts[p.left], pts[p.mid]
        ap = attach_points_from_gamma(A, p.gamma_star)
        chk = check_attach_plan(A, ap)
        dist = _offa_bfs(A, set(p.gamma_star), 2 * RADIUS)
        via = min(min(_reach(q, dist, A) + RADIUS - t for t, q in enumerate(g))
                  for g in (p.gamma_minus, p.gamma_plus))
        patches.append({
            "index": p.index,
            "leftRadius": max(_l1(q, xl) for q in left_arc),
            "rightRadius": max(_l1(q, xm) for q in right_arc),
            "radiiOk": max(_l1(q, xl) for q in left_arc) <= 121
            and max(_l1(q, xm) for q in right_arc) <= 363,
            "countsOk": len(left_arc) <= c121 and len(right_arc) <= c363,
            "seedInside": p.gamma_star[1] in p.interior,
            "xInInterior": all(x in p.interior for x in ap.xs),
            "sideRouteLength": via,
            "sideRouteOk": via >= 20,
            **chk,
        })
    interiors = [p.interior for p in dec.patches]
    disjoint = all(not (interiors[i] & interiors[j])
                   for i in range(len(interiors)) for j in range(i + 1, len(interiors)))
    inside = region_inside(dec.contour)
    holes = set()
    for h in hole_count(A).holes:
        holes.update(map(tuple, h))
    between = {p for p in inside if p not in A and p not in holes and p not in dec.contour.index}
    covered = set().union(*[p.closure for p in dec.patches])
    report = {
        "size": len(A), "contourPoints": len(pts), "I": dec.I,
        "contourDistanceOk": dist_ok, "contourSimple": simple, "clockwise": clockwise,
        "pathLengthsOk": lengths_ok, "stayTogether": together, "IAtLeast2": dec.I >= 2,
        "interiorsDisjoint": disjoint, "coverOk": between <= covered,
        "patches": patches,
    }
    report["ok"] = bool(dist_ok and simple and clockwise and lengths_ok and together
                        and dec.I >= 2 and disjoint and report["coverOk"]
                        and all(q["sequential"] and q["wInHole"] and q["distanceOk"]
                                for q in patches))
    return report


def verify_surgery(dec: PatchDecomposition, omega, phi_omega, plan: SurgeryPlan,
                   tail=None) -> dict:
    """Recompute both growths from the paths and check the bounds.  ``tail``
    lists the attach points of the unchanged paths after V_7 (grown on the
    modified cluster)."""
    A = dec.cluster
    V7 = plan.V[-1]
    cw = _clusters_along(A, omega, V7)
    cp = _clusters_along(A, phi_omega, V7)
    xs = plan.attach.xs
    sandwich = True
    for k in range(V7 + 1):
        n = sum(1 for v in plan.V if v <= k)
        X = set(xs[:n])
        if not (X <= cp[k] and cp[k] <= cw[k] | X):
            sandwich = False
    comps = _components(cw[V7 - 1] - A) if V7 >= 1 else []
    max_comp = max((len(c) for c in comps), default=0)
    D = dec.patch(plan.theta)
    dist = _offa_bfs(A, set(D.gamma_star), 14)
    others = [p for p in dec.patches if p.index != plan.theta]
    far_ok = True
    for z in cw[V7 - 1] - A:
        if any(z in p.closure for p in others) and _reach(z, dist, A) < 14:
            far_ok = False
    final = set(cp[V7])
    if tail is not None:
        final |= {_pt(p) for p in tail}
    h0 = hole_count(A).count
    hV = hole_count(cp[V7]).count
    hL = hole_count(final).count
    w = plan.attach.w
    w_hole = any(w in set(map(tuple, h)) for h in hole_count(cp[V7]).holes)
    mism = sum(1 for a in plan.actions if a["intended"] != a["attached"])
    rep = {
        "theta": plan.theta, "V": plan.V, "V7": V7,
        "holesBefore": h0, "holesAtV7": hV, "holesFinal": hL, "holeGain": hL - h0,
        "wEnclosed": w_hole,
        "catchUpLoops": plan.catch_up, "catchUpCount": len(plan.catch_up),
        "maxCatchUp": max(plan.catch_up, default=0),
        "vLoopLengths": plan.v_loops, "maxVLoop": max(plan.v_loops, default=0),
        "maxComponentBeforeV7": max_comp, "sandwich": sandwich,
        "farFromLuckyPath": far_ok, "attachMismatches": mism,
        "finalSize": len(final),
    }
    rep["checks"] = {
        "holeGain": hL - h0 >= 1,
        "catchUpLength": rep["maxCatchUp"] <= 12,
        "catchUpCount": rep["catchUpCount"] <= 72,
        "componentSize": max_comp <= 12,
        "sandwich": sandwich,
        "farFromLuckyPath": far_ok,
        "intendedAttach": mism == 0,
    }
    rep["ok"] = all(rep["checks"].values())
    return rep


def grow_tail(points, count: int, seed: int, stream_id: int = 0,
              rfactor: float = DEFAULT_RFACTOR) -> list:
    """Attach points of ``count`` further walks on the cluster ``points``."""
    if count <= 0:
        return []
    c = Cluster2D(points)
    att, _, _ = Walker(c, seed, stream_id, rfactor, "far-circle", True, 1).grow(count)
    return att


def surgery_sample(dec: PatchDecomposition, seed: int, stream_id: int = 0,
                   L: int | None = None, tail: bool = True):
    """Sample omega, apply phi, grow the unchanged tail; returns
    (omega, phi(omega), plan, report)."""
    L = 6 * len(dec.cluster) + 1 if L is None else L
    omega = OmegaSampler(dec, seed, 2 * stream_id).sample(L)
    new, plan = phi(dec, omega, L)
    V7 = plan.V[-1]
    final_pts = _clusters_along(dec.cluster, new, V7)[-1]
    rest = grow_tail(final_pts, L - V7, seed, 2 * stream_id + 1) if tail else []
    rep = verify_surgery(dec, omega, new, plan, rest)
    rep["L"] = L
    return omega, new, plan, rep


def paths_equal(p, q) -> bool:
    if len(p) != len(q):
        return False
    for (P1, J1), (P2, J2) in zip(p, q):
        if P1.shape != P2.shape or not np.array_equal(P1, P2) or not np.array_equal(J1, J2):
            return False
    return True


def plan_is_deterministic(dec: PatchDecomposition, omega) -> bool:
    """phi twice on the same input, and once on paths extended past their
    attachment points, give the same plan and the same prefixes."""
    a1, p1 = phi(dec, omega)
    a2, p2 = phi(dec, omega)
    ext = []
    for P, J in (_as_path(q) for q in omega):
        tail = P[-1] + np.array([[0, 1], [0, 2], [0, 1]])
        ext.append((np.concatenate([P, tail]), np.concatenate([J, np.zeros(3, bool)])))
    a3, p3 = phi(dec, ext)
    same = p1.to_json() == p2.to_json() == p3.to_json()
    return bool(same and paths_equal(a1, a2)
                and all(np.array_equal(x[0], y[0][:len(x[0])]) for x, y in zip(a1, a3)))


def injectivity_spot_check(dec: PatchDecomposition, samples, pairs: int = 50, seed: int = 0) -> dict:
    """Distinct inputs give distinct outputs.  Half of the pairs are two
    different samples; the other half perturb one of the first V_7 paths of
    a sample by a back-and-forth step at its first recorded point."""
    rng = np.random.default_rng(seed)
    distinct = 0
    for t in range(pairs):
        s = samples[int(rng.integers(len(samples)))]
        if t % 2 == 0 and len(samples) > 1:
            other = s
            while other is s:
                other = samples[int(rng.integers(len(samples)))]
        else:
            k = int(rng.integers(len(s)))
            P, J = _as_path(s[k])
            P2 = np.concatenate([P[:1], P[:1] + np.array([[1, 0]]), P])
            J2 = np.concatenate([J[:1], [False, False], J[1:]])
            other = list(s)
            other[k] = (P2, J2)
        a1, _ = phi(dec, s)
        a2, _ = phi(dec, other)
        if not paths_equal(a1, a2):
            distinct += 1
    return {"pairs": pairs, "distinct": distinct, "ok": distinct == pairs}
