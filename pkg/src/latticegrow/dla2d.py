"""Diffusion-limited aggregation on Z^2.

Particles start far away, walk until they first step onto the outer
boundary of the cluster, and stick there.  A walk "from infinity" is
approximated by launching on the lattice circle of radius
``rfactor * (S + L)``, where S is the largest l1 norm in the cluster.  A
walker that leaves the circle of twice that radius is relaunched.  The
first point on the diamond Delta(a, L) = {|x|_1 = S + L} is the entry
point, and the path recorded from there is what the cluster-from-paths
builder replays.

Accelerated walks use exact box jumps.  From the centre of an empty square
of half-width r the walker jumps straight to its exit point, sampled from
the exact exit law (sparse Dirichlet solve, cached per r).  "Faithful"
walks step one site at a time and can record their paths.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage

from .rng import numpy_generator

NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1))
BOX_SIZES = np.array([2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128], np.int64)
DCAP = int(BOX_SIZES[-1]) + 2
DEFAULT_RFACTOR = 8.0


class WalkBudgetError(RuntimeError):
    pass


class NonHittingError(ValueError):
    pass


class DomainError(ValueError):
    pass


def l1(p) -> int:
    return abs(p[0]) + abs(p[1])


def neighbors(p):
    x, y = p
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


# --------------------------------------------------------------------------
# cluster

class Cluster2D:
    """Occupied lattice points with a cached outer boundary."""

    def __init__(self, points=((0, 0),)):
        self.points: set = set()
        self.boundary: set = set()
        self.order: list = []
        self.S = 0
        for p in points:
            p = (int(p[0]), int(p[1]))
            if p not in self.points:
                self._insert(p)

    def _insert(self, p) -> None:
        self.points.add(p)
        self.order.append(p)
        self.boundary.discard(p)
        for q in neighbors(p):
            if q not in self.points:
                self.boundary.add(q)
        self.S = max(self.S, l1(p))

    def add(self, p) -> None:
        p = (int(p[0]), int(p[1]))
        if p not in self.boundary:
            raise DomainError(f"{p} is not on the outer boundary")
        self._insert(p)

    def copy(self) -> "Cluster2D":
        c = Cluster2D.__new__(Cluster2D)
        c.points = set(self.points)
        c.boundary = set(self.boundary)
        c.order = list(self.order)
        c.S = self.S
        return c

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return (p[0], p[1]) in self.points

    def bbox(self):
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return min(xs), max(xs), min(ys), max(ys)

    def recomputed_boundary(self) -> set:
        return {q for p in self.points for q in neighbors(p) if q not in self.points}

    def is_connected(self) -> bool:
        if not self.points:
            return False
        start = next(iter(self.points))
        seen = {start}
        stack = [start]
        while stack:
            p = stack.pop()
            for q in neighbors(p):
                if q in self.points and q not in seen:
                    seen.add(q)
                    stack.append(q)
        return len(seen) == len(self.points)

    def sorted_points(self) -> list:
        return sorted(self.points)

    def to_json(self) -> dict:
        return {"points": [[x, y] for x, y in self.sorted_points()]}

    @classmethod
    def from_json(cls, obj) -> "Cluster2D":
        return cls([tuple(p) for p in obj["points"]])


def delta_set(a: Cluster2D, L: int) -> list:
    """Lattice points of l1 norm S(a) + L."""
    if L < 1:
        raise DomainError("L >= 1 required")
    D = a.S + L
    return [_delta_point(D, k) for k in range(4 * D)]


def _delta_point(D: int, k: int):
    s, t = divmod(k, D)
    if s == 0:
        return (D - t, t)
    if s == 1:
        return (-t, D - t)
    if s == 2:
        return (-D + t, -t)
    return (t, -D + t)


# --------------------------------------------------------------------------
# holes

@dataclass
class HoleReport:
    count: int
    holes: list = field(default_factory=list)  # list of sorted point lists


def _complement_grid(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, y0 = min(xs) - 1, min(ys) - 1
    w, hgt = max(xs) - x0 + 2, max(ys) - y0 + 2
    free = np.ones((w, hgt), dtype=bool)
    for x, y in points:
        free[x - x0, y - y0] = False
    return free, x0, y0


def hole_count(a) -> HoleReport:
    """Finite 4-connected components of the complement (flood fill)."""
    points = a.points if isinstance(a, Cluster2D) else set(map(tuple, a))
    free, x0, y0 = _complement_grid(points)
    lab, n = ndimage.label(free)
    outer = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]])))
    holes = []
    for k in range(1, n + 1):
        if k in outer:
            continue
        ii, jj = np.nonzero(lab == k)
        holes.append(sorted(zip((ii + x0).tolist(), (jj + y0).tolist())))
    holes.sort()
    return HoleReport(len(holes), holes)


def hole_count_unionfind(a) -> int:
    """Independent hole count: union-find over complement cells of the
    inflated bounding box, with a virtual outside node for the frame."""
    points = a.points if isinstance(a, Cluster2D) else set(map(tuple, a))
    free, _, _ = _complement_grid(points)
    w, hgt = free.shape
    parent = list(range(w * hgt + 1))
    outside = w * hgt

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for i in range(w):
        for j in range(hgt):
            if not free[i, j]:
                continue
            k = i * hgt + j
            if i == 0 or j == 0 or i == w - 1 or j == hgt - 1:
                union(k, outside)
            if i + 1 < w and free[i + 1, j]:
                union(k, k + hgt)
            if j + 1 < hgt and free[i, j + 1]:
                union(k, k + 1)
    roots = {find(i * hgt + j) for i in range(w) for j in range(hgt) if free[i, j]}
    roots.discard(find(outside))
    return len(roots)


# --------------------------------------------------------------------------
# exact box-exit laws

@functools.lru_cache(maxsize=None)
def box_exit_side(r: int) -> np.ndarray:
    """P(exit at (r, t)), t = -r+1..r-1, for SRW from the centre of
    {|x|_inf < r}.  The four sides are congruent; corners have mass 0."""
    m = 2 * r - 1
    n = m * m
    I = np.arange(n).reshape(m, m)
    rows, cols = [], []
    for di, dj in NEIGHBORS:
        a = I[max(0, -di):m - max(0, di), max(0, -dj):m - max(0, dj)]
        b = I[max(0, di):m - max(0, -di), max(0, dj):m - max(0, -dj)]
        rows.append(a.ravel())
        cols.append(b.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    A = sp.eye(n, format="csc") - sp.csc_matrix((np.full(len(rows), 0.25), (rows, cols)), shape=(n, n))
    rhs = np.zeros(n)
    rhs[I[r - 1, r - 1]] = 1.0
    G = spla.spsolve(A, rhs).reshape(m, m)
    return G[m - 1, :] / 4.0


@functools.lru_cache(maxsize=1)
def box_tables() -> np.ndarray:
    """Row k: CDF of the exit offset along one side for BOX_SIZES[k]."""
    width = 2 * int(BOX_SIZES[-1]) - 1
    tab = np.ones((len(BOX_SIZES), width))
    for k, r in enumerate(BOX_SIZES):
        side = box_exit_side(int(r))
        c = np.cumsum(side / side.sum())
        tab[k, :len(c)] = c
        tab[k, len(c) - 1:] = 1.0
    return tab


# --------------------------------------------------------------------------
# walker kernel

@nb.njit(cache=True)
def _box_jump(g, x, y, k, sizes, tables):
    r = sizes[k]
    u = g.random()
    m = 2 * r - 1
    lo = 0
    hi = m - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if tables[k, mid] < u:
            lo = mid + 1
        else:
            hi = mid
    t = lo - (r - 1)
    side = int(g.random() * 4.0)
    if side == 0:
        return x + r, y + t
    if side == 1:
        return x - r, y - t
    if side == 2:
        return x - t, y + r
    return x + t, y - r


@nb.njit(cache=True)
def _pick_box(d, sizes):
    # largest tabulated half-width <= d, or -1
    k = -1
    for q in range(sizes.shape[0]):
        if sizes[q] <= d:
            k = q
    return k


@nb.njit(cache=True)
def _is_boundary(occ, W, x, y):
    i = x + W
    j = y + W
    n = occ.shape[0]
    if i < 1 or j < 1 or i >= n - 1 or j >= n - 1:
        return False
    if occ[i, j]:
        return False
    return occ[i + 1, j] or occ[i - 1, j] or occ[i, j + 1] or occ[i, j - 1]


@nb.njit(cache=True)
def _launch(g, D, R, method):
    if method == 0:
        th = 2.0 * math.pi * g.random()
        return int(np.rint(R * math.cos(th))), int(np.rint(R * math.sin(th))), 0
    k = int(g.random() * 4 * D)
    s = k // D
    t = k % D
    if s == 0:
        return D - t, t, 1
    if s == 1:
        return -t, D - t, 1
    if s == 2:
        return -D + t, -t, 1
    return t, -D + t, 1


@nb.njit(cache=True)
def _walk_kernel(g, occ, dist, W, state, nparticles, L, rfactor, method, accel,
                 entry_only, sizes, tables, attach, entry, px, py, plen, cap):
    """Grow up to ``nparticles`` particles; returns number grown, or
    -1 (step budget exceeded) / -2 (path buffer full).  Stops early when the
    cluster approaches the grid edge (caller reallocates).

    state = [S, Rinf, grown]."""
    S = state[0]
    Rinf = state[1]
    nG = occ.shape[0]
    done = 0
    while done < nparticles:
        if Rinf + DCAP + 4 > W:
            break
        D = S + L
        R = rfactor * D
        R2kill = (2.0 * R) ** 2
        x, y, phase = _launch(g, D, R, method)
        steps = 0
        npath = 0
        if phase == 1:
            entry[done, 0] = x
            entry[done, 1] = y
            if cap > 0:
                px[0] = x
                py[0] = y
                npath = 1
        hit = False
        while True:
            if phase == 1:
                if _is_boundary(occ, W, x, y):
                    hit = True
                    break
                if entry_only:
                    break
            steps += 1
            if steps > 200_000_000:
                return -1
            if float(x) * x + float(y) * y > R2kill:
                x, y, phase = _launch(g, D, R, method)
                npath = 0
                if phase == 1:
                    entry[done, 0] = x
                    entry[done, 1] = y
                    if cap > 0:
                        px[0] = x
                        py[0] = y
                        npath = 1
                continue
            if phase == 0:
                n1 = abs(x) + abs(y)
                k = -1
                if accel:
                    k = _pick_box((n1 - D - 1) // 2 + 1, sizes)
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
                if abs(x) + abs(y) <= D:
                    phase = 1
                    entry[done, 0] = x
                    entry[done, 1] = y
                    if cap > 0:
                        px[0] = x
                        py[0] = y
                        npath = 1
                continue
            k = -1
            if accel:
                i = x + W
                j = y + W
                far = max(abs(x), abs(y)) - Rinf
                if 0 <= i < nG and 0 <= j < nG:
                    dd = dist[i, j]
                    if far > dd:
                        dd = far
                else:
                    dd = far
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
                if cap > 0:
                    if npath >= cap:
                        return -2
                    px[npath] = x
                    py[npath] = y
                    npath += 1
        if entry_only:
            attach[done, 0] = x
            attach[done, 1] = y
            done += 1
            continue
        # stick
        attach[done, 0] = x
        attach[done, 1] = y
        plen[done] = npath
        occ[x + W, y + W] = 1
        for i in range(max(0, x + W - DCAP), min(nG, x + W + DCAP + 1)):
            di = abs(i - (x + W))
            for j in range(max(0, y + W - DCAP), min(nG, y + W + DCAP + 1)):
                dj = abs(j - (y + W))
                dd = di if di > dj else dj
                if dd < dist[i, j]:
                    dist[i, j] = dd
        n1 = abs(x) + abs(y)
        if n1 > S:
            S = n1
        ninf = max(abs(x), abs(y))
        if ninf > Rinf:
            Rinf = ninf
        state[0] = S
        state[1] = Rinf
        state[2] += 1
        done += 1
        if cap > 0:
            break
    return done



class Walker:
    """Grid-backed growth engine around a :class:`Cluster2D`."""

    def __init__(self, cluster: Cluster2D, seed: int, stream_id: int = 0,
                 rfactor: float = DEFAULT_RFACTOR, method: str = "far-circle",
                 accel: bool = True, L: int = 1):
        if method not in ("far-circle", "uniform"):
            raise DomainError(f"unknown entry method {method!r}")
        if L < 1:
            raise DomainError("L >= 1 required")
        self.cluster = cluster
        self.g = numpy_generator(seed, stream_id)
        self.rfactor = float(rfactor)
        self.method = 0 if method == "far-circle" else 1
        self.accel = accel
        self.L = L
        self.sizes = BOX_SIZES
        self.tables = box_tables()
        self._alloc()

    def _alloc(self) -> None:
        pts = self.cluster.points
        rinf = max(max(abs(x), abs(y)) for x, y in pts)
        self.W = int(2 * rinf + DCAP + 64)
        n = 2 * self.W + 1
        self.occ = np.zeros((n, n), np.uint8)
        self.dist = np.full((n, n), DCAP, np.int32)
        for x, y in pts:
            self.occ[x + self.W, y + self.W] = 1
        # distance map via a Chebyshev distance transform of the occupancy
        d = ndimage.distance_transform_cdt(1 - self.occ, metric="chessboard")
        self.dist = np.minimum(d, DCAP).astype(np.int32)
        self.state = np.array([self.cluster.S, rinf, 0], np.int64)

    def grow(self, count: int, record: bool = False, cap: int = 20_000_000):
        """Add ``count`` particles; returns (attach points, entries, paths)."""
        attach_all, entry_all, paths = [], [], []
        left = count
        plen = np.zeros(1, np.int64)
        px = py = np.zeros(1, np.int64)
        if record:
            px = np.zeros(cap, np.int64)
            py = np.zeros(cap, np.int64)
        while left > 0:
            batch = 1 if record else left
            att = np.zeros((batch, 2), np.int64)
            ent = np.zeros((batch, 2), np.int64)
            plen = np.zeros(batch, np.int64)
            got = _walk_kernel(self.g, self.occ, self.dist, self.W, self.state, batch,
                               self.L, self.rfactor, self.method, self.accel, False,
                               self.sizes, self.tables, att, ent, px, py, plen,
                               cap if record else 0)
            if got == -1:
                raise WalkBudgetError("walk exceeded its step budget")
            if got == -2:
                raise WalkBudgetError("recorded path exceeded the buffer")
            for k in range(got):
                p = (int(att[k, 0]), int(att[k, 1]))
                self.cluster.add(p)
                attach_all.append(p)
                entry_all.append((int(ent[k, 0]), int(ent[k, 1])))
                if record:
                    n = int(plen[k])
                    paths.append(list(zip(px[:n].tolist(), py[:n].tolist())))
            left -= got
            if got < batch:
                self._alloc()
        return attach_all, entry_all, paths

    def entries(self, count: int) -> np.ndarray:
        """Sample ``count`` entry points on Delta without growing."""
        att = np.zeros((count, 2), np.int64)
        ent = np.zeros((count, 2), np.int64)
        z = np.zeros(1, np.int64)
        _walk_kernel(self.g, self.occ, self.dist, self.W, self.state, count, self.L,
                     self.rfactor, self.method, self.accel, True, self.sizes,
                     self.tables, att, ent, z, z, np.zeros(count, np.int64), 0)
        return ent


def sample_entry_point(a: Cluster2D, L: int, seed: int, method: str = "far-circle",
                       rfactor: float = DEFAULT_RFACTOR, count: int = 1, stream_id: int = 0):
    w = Walker(a, seed, stream_id, rfactor, method, True, L)
    e = w.entries(count)
    return [tuple(map(int, p)) for p in e]


def walk_to_boundary(start, a: Cluster2D, rng=None, cap: int = 10_000_000, steps=None):
    """Plain walk from ``start`` until it first steps onto the outer boundary.

    ``steps`` optionally forces the moves (indices into NEIGHBORS).
    Returns (hit point, path from start to the hit point)."""
    start = (int(start[0]), int(start[1]))
    if start in a.points or start in a.boundary:
        raise DomainError("start must lie outside the cluster and its boundary")
    it = iter(steps) if steps is not None else None
    if it is None and rng is None:
        raise DomainError("need an rng or forced steps")
    x, y = start
    path = [start]
    for _ in range(cap):
        d = next(it) if it is not None else int(rng.integers(4))
        dx, dy = NEIGHBORS[d]
        x += dx
        y += dy
        path.append((x, y))
        if (x, y) in a.boundary:
            return (x, y), path
    raise WalkBudgetError(f"no hit within {cap} steps")


def grow(a: Cluster2D, seed: int, method: str = "far-circle", L: int = 1,
         rfactor: float = DEFAULT_RFACTOR, stream_id: int = 0) -> Cluster2D:
    c = a.copy()
    Walker(c, seed, stream_id, rfactor, method, True, L).grow(1)
    return c


def cluster_from_paths(a: Cluster2D, paths) -> Cluster2D:
    """Add, path by path, the first point of each path on the current outer
    boundary."""
    c = a.copy()
    for k, rho in enumerate(paths):
        for p in rho:
            p = (int(p[0]), int(p[1]))
            if p in c.boundary:
                c.add(p)
                break
        else:
            raise NonHittingError(f"path {k} never meets the cluster boundary")
    return c


# --------------------------------------------------------------------------
# runs

@dataclass
class DLARun:
    trace: list  # rows (n, size, holes, radius)
    cluster: Cluster2D
    attach: list
    entries: list
    paths: list | None
    meta: dict


def run_dla(steps: int, seed: int, entry_method: str = "far-circle", snapshot_every: int = 100,
            L: int = 1, rfactor: float = DEFAULT_RFACTOR, faithful: bool = False,
            record_paths: bool = False, stream_id: int = 0, initial=None) -> DLARun:
    """Grow from {0} (or ``initial``), recording (n, size, holes, radius)
    at n = 0 and every ``snapshot_every`` particles (and at the end)."""
    if steps < 1:
        raise DomainError("steps >= 1 required")
    c = Cluster2D(initial if initial is not None else [(0, 0)])
    n0 = len(c)
    w = Walker(c, seed, stream_id, rfactor, entry_method, not faithful, L)
    trace = [(0, n0, hole_count(c).count, c.S)]
    attach, entries, paths = [], [], [] if record_paths else None
    n = 0
    while n < steps:
        m = min(snapshot_every, steps - n)
        att, ent, pth = w.grow(m, record=record_paths)
        attach += att
        entries += ent
        if record_paths:
            paths += pth
        n += m
        trace.append((n, len(c), hole_count(c).count, c.S))
    meta = {"seed": seed, "streamId": stream_id, "entryMethod": entry_method,
            "rfactor": rfactor, "L": L, "faithful": faithful}
    return DLARun(trace, c, attach, entries, paths, meta)
