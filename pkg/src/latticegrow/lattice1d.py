"""One-dimensional annihilation-creation chain.

Each period adds K particles, one at a time, at sites chosen uniformly
from the boundary of the current set, then deletes K-1 particles chosen
uniformly from the occupied sites.  Gaps carry a new/old label that is
propagated as follows:

* an addition never splits a gap, so whatever is left of a gap keeps
  its label;
* an interior deletion creates or merges a gap, which is old exactly when
  the deleted site touched an old gap;
* deleting an endpoint discards the adjacent gap, if any.

The state is stored as ``(lo, hi, gaps)`` with ``gaps`` a sorted list of
``[left, right, is_new]`` intervals, so a step costs O(G) rather than
O(|a|).

Two stepping backends read the same uniform stream:

``faithful``
    maps each draw through the ordered enumerations of boundary and
    occupied sites used by the explicit coupling construction;
``fast``
    maps each draw to the sites in plain increasing order.

Both give the uniform choice, so they agree in law.  A numba kernel
reproduces ``fast`` bit for bit and drives the long runs.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .rng import UniformStream

COLUMNS = ("period", "size", "L", "G", "G2", "LI", "GI", "G2I",
           "C", "C2", "CI", "CI2", "Ralpha", "Rdelta")
PROXIMITY = 4


class DomainError(ValueError):
    pass


class DataError(ValueError):
    pass


def _key(g):
    return g[0]


# --------------------------------------------------------------------------
# value types

@dataclass(frozen=True)
class SiteSet1D:
    """Finite nonempty set of integers held as its hull and gap list."""

    lo: int
    hi: int
    gaps: tuple  # ((left, right), ...) sorted, maximal runs of empty sites

    @classmethod
    def from_sites(cls, sites: Iterable[int]) -> "SiteSet1D":
        s = sorted(set(int(x) for x in sites))
        if not s:
            raise DomainError("empty site set")
        gaps = []
        for a, b in zip(s, s[1:]):
            if b - a > 1:
                gaps.append((a + 1, b - 1))
        return cls(s[0], s[-1], tuple(gaps))

    @property
    def L(self) -> int:
        return sum(r - l + 1 for l, r in self.gaps)

    def __len__(self) -> int:
        return self.hi - self.lo + 1 - self.L

    def __contains__(self, x: int) -> bool:
        if x < self.lo or x > self.hi:
            return False
        k = bisect.bisect_right(self.gaps, x, key=_key) - 1
        return not (k >= 0 and self.gaps[k][1] >= x)

    def sites(self) -> list[int]:
        return [x for x in range(self.lo, self.hi + 1) if x in self]

    def gap_sites(self) -> list[int]:
        return [x for l, r in self.gaps for x in range(l, r + 1)]

    def check(self) -> None:
        if self.lo > self.hi:
            raise AssertionError("lo > hi")
        prev = self.lo
        for l, r in self.gaps:
            if not (prev < l <= r < self.hi):
                raise AssertionError(f"bad gap {(l, r)}")
            prev = r + 1


@dataclass(frozen=True)
class GapLabeling:
    """1-based indices (left to right) of the gaps labelled new."""

    new: frozenset = frozenset()

    @classmethod
    def none(cls) -> "GapLabeling":
        return cls(frozenset())

    @classmethod
    def full(cls, a: SiteSet1D) -> "GapLabeling":
        return cls(frozenset(range(1, len(a.gaps) + 1)))

    def check(self, a: SiteSet1D) -> None:
        if any(i < 1 or i > len(a.gaps) for i in self.new):
            raise AssertionError("label index out of range")


@dataclass(frozen=True)
class StepAddress:
    n: int
    i: int

    def flat(self, K: int) -> int:
        return step_index(self.n, self.i, K)


def step_index(n: int, i: int, K: int) -> int:
    """f(n, i) = (n-1) kappa + i, with f(0, 0) = 0."""
    kappa = 2 * K - 1
    if n == 0 and i == 0:
        return 0
    if n < 1 or not 0 <= i <= kappa:
        raise DomainError(f"invalid step address ({n}, {i})")
    return (n - 1) * kappa + i


def step_address(m: int, K: int) -> StepAddress:
    """Inverse of :func:`step_index`, using i in 1..kappa for m >= 1."""
    if m < 0:
        raise DomainError("negative step count")
    if m == 0:
        return StepAddress(0, 0)
    kappa = 2 * K - 1
    n, i = divmod(m - 1, kappa)
    return StepAddress(n + 1, i + 1)


# --------------------------------------------------------------------------
# pure statistics

def gap_statistics(a: SiteSet1D) -> tuple[int, int, int]:
    """(G, G2, L) of a nonempty set."""
    if a is None or len(a) == 0:
        raise DomainError("empty site set")
    G = len(a.gaps)
    G2 = sum(1 for l, r in a.gaps if r > l)
    return G, G2, a.L


def _proximity(sites: list[int]) -> tuple[set, set]:
    """Sites with at least one / two others within distance PROXIMITY."""
    c1, c2 = set(), set()
    for k, s in enumerate(sites):
        lo = bisect.bisect_left(sites, s - PROXIMITY)
        hi = bisect.bisect_right(sites, s + PROXIMITY)
        others = hi - lo - 1
        if others >= 1:
            c1.add(s)
        if others >= 2:
            c2.add(s)
    return c1, c2


def proximity_sets(a: SiteSet1D, labeling: GapLabeling | None = None):
    """(C, C2); with a labeling, only new gap sites are considered."""
    if labeling is None:
        sites = a.gap_sites()
    else:
        sites = [x for idx, (l, r) in enumerate(a.gaps, 1) if idx in labeling.new
                 for x in range(l, r + 1)]
    return _proximity(sites)


def h(n: float) -> float:
    """ln n / ln ln n (natural logarithms)."""
    if not n > math.e:
        raise DomainError("h(n) needs n > e")
    return math.log(n) / math.log(math.log(n))


def in_family_G(a: SiteSet1D, K: int) -> bool:
    G, _, L = gap_statistics(a)
    return G <= 10 * K and L <= (K - 1) * len(a)


def in_family_S(a: SiteSet1D, M: int) -> bool:
    n = len(a)
    if n <= math.e:
        return False
    c1, c2 = proximity_sets(a)
    return a.L <= h(n) / M and len(c1) <= 3 and len(c2) <= 1


# --------------------------------------------------------------------------
# mutable chain state

def _pick(u: float, m: int) -> int:
    """Index j in 1..m with (j-1)/m < u <= j/m."""
    j = math.ceil(u * m)
    return 1 if j < 1 else (m if j > m else j)


class ChainState:
    """Mutable (A, I) pair used by the steppers."""

    __slots__ = ("lo", "hi", "gaps")

    def __init__(self, lo: int, hi: int, gaps: list):
        self.lo = lo
        self.hi = hi
        self.gaps = gaps

    @classmethod
    def from_values(cls, a: SiteSet1D, lab: GapLabeling | None = None) -> "ChainState":
        new = lab.new if lab is not None else frozenset()
        gaps = [[l, r, (k in new)] for k, (l, r) in enumerate(a.gaps, 1)]
        return cls(a.lo, a.hi, gaps)

    def copy(self) -> "ChainState":
        return ChainState(self.lo, self.hi, [list(g) for g in self.gaps])

    def siteset(self) -> SiteSet1D:
        return SiteSet1D(self.lo, self.hi, tuple((g[0], g[1]) for g in self.gaps))

    def labeling(self) -> GapLabeling:
        return GapLabeling(frozenset(k for k, g in enumerate(self.gaps, 1) if g[2]))

    # sizes
    def L(self) -> int:
        return sum(g[1] - g[0] + 1 for g in self.gaps)

    def size(self) -> int:
        return self.hi - self.lo + 1 - self.L()

    def occupied(self, x: int) -> bool:
        if x < self.lo or x > self.hi:
            return False
        k = bisect.bisect_right(self.gaps, x, key=_key) - 1
        return not (k >= 0 and self.gaps[k][1] >= x)

    def new_sites(self) -> list[int]:
        return [x for g in self.gaps if g[2] for x in range(g[0], g[1] + 1)]

    def all_sites(self) -> list[int]:
        return [x for g in self.gaps for x in range(g[0], g[1] + 1)]

    # enumerations ---------------------------------------------------------
    def boundary_order(self, faithful: bool) -> list[int]:
        if not faithful:
            out = [self.lo - 1]
            for l, r, _ in self.gaps:
                out.append(l)
                if r > l:
                    out.append(r)
            out.append(self.hi + 1)
            return out
        ci, _ = _proximity(self.new_sites())
        old, new_plain, new_c = [], [], []
        for l, r, is_new in self.gaps:
            pts = (l,) if l == r else (l, r)
            for x in pts:
                if not is_new:
                    old.append(x)
                elif x in ci:
                    new_c.append(x)
                else:
                    new_plain.append(x)
        return old + [self.lo - 1, self.hi + 1] + new_plain + new_c

    def _deletion_classes(self):
        lo, hi = self.lo, self.hi
        vo = set()
        for l, r, is_new in self.gaps:
            if not is_new:
                vo.add(l - 1)
                vo.add(r + 1)
        vo.discard(lo)
        vo.discard(hi)
        vn = set()
        for l, r, is_new in self.gaps:
            if is_new:
                for x in (*range(l - PROXIMITY, l), *range(r + 1, r + PROXIMITY + 1)):
                    if lo < x < hi and x not in vo and self.occupied(x):
                        vn.add(x)
        return sorted(vn), sorted(vo)

    def _kth_free(self, j: int, excluded: list) -> int:
        """j-th (1-based) integer >= lo not covered by sorted intervals."""
        cand = self.lo + j - 1
        for l, r in excluded:
            if l <= cand:
                cand += r - l + 1
            else:
                break
        return cand

    def delete_choice(self, u: float, faithful: bool) -> int:
        n = self.size()
        j = _pick(u, n)
        if not faithful:
            return self._kth_free(j, [(g[0], g[1]) for g in self.gaps])
        vn, vo = self._deletion_classes()
        n_other = n - len(vn) - len(vo) - 2
        if j <= len(vn):
            return vn[j - 1]
        j -= len(vn)
        if j <= n_other:
            pts = sorted(set(vn) | set(vo) | {self.lo, self.hi})
            iv = sorted([(g[0], g[1]) for g in self.gaps] + [(p, p) for p in pts])
            return self._kth_free(j, iv)
        j -= n_other
        if j == 1:
            return self.lo
        if j == 2:
            return self.hi
        return vo[j - 3]

    def add_choice(self, u: float, faithful: bool) -> int:
        order = self.boundary_order(faithful)
        return order[_pick(u, len(order)) - 1]

    # mutations ------------------------------------------------------------
    def apply_add(self, x: int) -> bool:
        """Add site x (must be a boundary site); True if x filled a gap site."""
        if x == self.lo - 1:
            self.lo = x
            return False
        if x == self.hi + 1:
            self.hi = x
            return False
        k = bisect.bisect_right(self.gaps, x, key=_key) - 1
        g = self.gaps[k] if k >= 0 else None
        if g is None or x not in (g[0], g[1]):
            raise DomainError(f"{x} is not a boundary site")
        if g[0] == g[1]:
            del self.gaps[k]
        elif x == g[0]:
            g[0] += 1
        else:
            g[1] -= 1
        return True

    def apply_delete(self, y: int) -> bool:
        """Delete occupied site y; True if y was an interior site."""
        gaps = self.gaps
        if self.lo == self.hi:
            raise DomainError("cannot delete from a singleton")
        if not self.occupied(y):
            raise DomainError(f"{y} is not occupied")
        if y == self.lo:
            if gaps and gaps[0][0] == y + 1:
                self.lo = gaps[0][1] + 1
                del gaps[0]
            else:
                self.lo = y + 1
            return False
        if y == self.hi:
            if gaps and gaps[-1][1] == y - 1:
                self.hi = gaps[-1][0] - 1
                del gaps[-1]
            else:
                self.hi = y - 1
            return False
        k = bisect.bisect_right(gaps, y, key=_key)
        left = gaps[k - 1] if k > 0 and gaps[k - 1][1] == y - 1 else None
        right = gaps[k] if k < len(gaps) and gaps[k][0] == y + 1 else None
        is_new = not ((left is not None and not left[2]) or
                      (right is not None and not right[2]))
        l = left[0] if left is not None else y
        r = right[1] if right is not None else y
        if right is not None:
            del gaps[k]
        if left is not None:
            gaps[k - 1] = [l, r, is_new]
        else:
            gaps.insert(k, [l, r, is_new])
        return True

    def observables(self) -> list[int]:
        L = G2 = LI = GI = G2I = 0
        for l, r, is_new in self.gaps:
            s = r - l + 1
            L += s
            G2 += s >= 2
            if is_new:
                LI += s
                GI += 1
                G2I += s >= 2
        c1, c2 = _proximity(self.all_sites())
        ci1, ci2 = _proximity(self.new_sites())
        size = self.hi - self.lo + 1 - L
        return [size, L, len(self.gaps), G2, LI, GI, G2I,
                len(c1), len(c2), len(ci1), len(ci2)]


# --------------------------------------------------------------------------
# functional single steps

def add_site(a: SiteSet1D, lab: GapLabeling, u: float, faithful: bool = True):
    st = ChainState.from_values(a, lab)
    x = st.add_choice(u, faithful)
    st.apply_add(x)
    return st.siteset(), st.labeling(), x


def delete_site(a: SiteSet1D, lab: GapLabeling, u: float, faithful: bool = True):
    if len(a) < 2:
        raise DomainError("cannot delete from a singleton")
    st = ChainState.from_values(a, lab)
    y = st.delete_choice(u, faithful)
    st.apply_delete(y)
    return st.siteset(), st.labeling(), y


@dataclass
class PeriodObservables:
    size: int
    L: int
    G: int
    G2: int
    LI: int
    GI: int
    G2I: int
    C: int
    C2: int
    CI: int
    CI2: int
    Ralpha: int
    Rdelta: int


def _period(st: ChainState, K: int, draws, faithful: bool, n: int, log: list | None):
    ra = rd = 0
    for i in range(1, 2 * K):
        u = float(draws[i - 1])
        if i <= K:
            x = st.add_choice(u, faithful)
            ra += st.apply_add(x)
            kind = "add"
        else:
            x = st.delete_choice(u, faithful)
            rd += st.apply_delete(x)
            kind = "del"
        if log is not None:
            c1, _ = _proximity(st.all_sites())
            ci, _ = _proximity(st.new_sites())
            log.append({"n": n, "i": i, "kind": kind, "site": x,
                        "C": len(c1), "CI": len(ci),
                        "inC": x in c1, "inCI": x in ci})
    return ra, rd


def run_period(a: SiteSet1D, lab: GapLabeling, stream: UniformStream, K: int,
               faithful: bool = True):
    if K < 2:
        raise DomainError("K >= 2 required")
    st = ChainState.from_values(a, lab)
    draws = stream.take(2 * K - 1)
    ra, rd = _period(st, K, draws, faithful, 1, None)
    obs = PeriodObservables(*st.observables(), ra, rd)
    return st.siteset(), st.labeling(), obs


# --------------------------------------------------------------------------
# traces

@dataclass
class Trace:
    """Per-period observables; row 0 describes the initial state."""

    K: int
    data: np.ndarray  # shape (periods+1, len(COLUMNS)), int64
    steps: list | None = None
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]

    def __len__(self) -> int:
        return len(self.data)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Trace) and self.K == other.K
                and np.array_equal(self.data, other.data) and self.steps == other.steps)


def _as_state(initial, labeling) -> ChainState:
    if initial is None:
        initial = SiteSet1D.from_sites([0])
    elif not isinstance(initial, SiteSet1D):
        initial = SiteSet1D.from_sites(initial)
    if labeling == "full":
        labeling = GapLabeling.full(initial)
    elif labeling is None or labeling == "none":
        labeling = GapLabeling.none()
    labeling.check(initial)
    return ChainState.from_values(initial, labeling)


def run_model(K: int, periods: int, initial=None, labeling=None, seed: int = 0,
              stream_id: int = 0, backend: str = "fast", log_steps: bool = False,
              stream: UniformStream | None = None) -> Trace:
    """Run the chain for ``periods`` periods.

    ``backend`` is ``"fast"`` (numba kernel), ``"python"`` (same law and
    draws as fast, pure Python) or ``"faithful"`` (explicit enumeration).
    A per-step log is only available from the Python backends.
    """
    if K < 2:
        raise DomainError("K >= 2 required")
    if periods < 1:
        raise DomainError("periods >= 1 required")
    st = _as_state(initial, labeling)
    if stream is None:
        stream = UniformStream(seed, stream_id)
    kappa = 2 * K - 1
    meta = {"K": K, "periods": periods, "backend": backend, **stream.metadata()}
    if backend == "fast" and not log_steps:
        from ._kernels import run_fast
        data = run_fast(st, K, periods, stream)
        meta["cursor"] = stream.cursor
        return Trace(K, data, None, meta)
    if backend not in ("fast", "python", "faithful"):
        raise DomainError(f"unknown backend {backend!r}")
    faithful = backend == "faithful"
    rows = np.zeros((periods + 1, len(COLUMNS)), dtype=np.int64)
    rows[0, 1:12] = st.observables()
    log = [] if log_steps else None
    for n in range(1, periods + 1):
        draws = stream.take(kappa)
        ra, rd = _period(st, K, draws, faithful, n, log)
        rows[n, 0] = n
        rows[n, 1:12] = st.observables()
        rows[n, 12] = ra
        rows[n, 13] = rd
    meta["cursor"] = stream.cursor
    tr = Trace(K, rows, log, meta)
    tr.final_state = st
    return tr


# --------------------------------------------------------------------------
# stopping times

_PERIOD_SPECS = {"tau1", "TM2", "tauM", "T_M2", "sigma0", "theta0"}
_STEP_SPECS = {"sigma", "sigma_bar", "S", "S_bar"}


def stopping_time_scan(trace: Trace, spec: str, M: int = 1, N: int | None = None):
    """First index at which ``spec`` fires, or None within the horizon.

    Period specs return a period number.  ``sigma`` and ``S`` return a
    ``StepAddress``; ``sigma_bar``/``S_bar`` return the containing period.
    ``N`` defaults to |A_0|.
    """
    K = trace.K
    N = int(trace.column("size")[0]) if N is None else N
    n = np.arange(len(trace))
    if spec in _PERIOD_SPECS:
        LI, L = trace.column("LI"), trace.column("L")
        hN = h(N) if spec != "theta0" and spec != "sigma0" else None
        if spec == "tau1":
            mask = LI >= ((K - 1) / K + 1) * hN
        elif spec == "TM2":
            mask = L >= ((K - 1) / K + 3 / M) * hN
        elif spec == "tauM":
            mask = (n >= N ** 1.1) & (LI <= hN / M)
        elif spec == "T_M2":
            mask = (n >= N) & (L <= hN / M)
        elif spec == "sigma0":
            mask = (n >= N ** 1.1) & (trace.column("G2I") == 0)
        else:
            mask = LI == L
        hits = np.flatnonzero(mask)
        return int(hits[0]) if len(hits) else None
    if spec in _STEP_SPECS:
        if trace.steps is None:
            raise DataError(f"{spec} needs a per-step log")
        labeled = spec.startswith("sigma")
        ck, ik = ("CI", "inCI") if labeled else ("C", "inC")
        prev = int(trace.column(ck)[0])
        for rec in trace.steps:
            if ck not in rec:
                raise DataError("per-step log lacks proximity data")
            if rec["i"] > K and prev >= 2 and rec[ik]:
                addr = StepAddress(rec["n"], rec["i"])
                return addr.n if spec.endswith("_bar") else addr
            prev = rec[ck]
        return None
    raise DomainError(f"unknown stopping time {spec!r}")


# --------------------------------------------------------------------------
# I/O

def write_steps(path, steps) -> None:
    with open(path, "w") as fh:
        for rec in steps:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_steps(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
