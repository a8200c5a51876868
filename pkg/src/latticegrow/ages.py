"""Age of the oldest particle for K = 2.

With K = 2 each period adds two particles and deletes one particle chosen
uniformly among the |A|+2 present.  Y(x) counts the deletions the particle
at x has survived and O_n = max Y.  The tail of (n - O_n)/sqrt(n) is an
explicit product and converges to exp(-x^2).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numba as nb
import numpy as np

from .lattice1d import ChainState, SiteSet1D
from .rng import UniformStream


class DomainError(ValueError):
    pass


class CapacityError(ValueError):
    pass


class AgeTable:
    """Ages of the present particles, keyed by site.

    Stores the deletion count at each particle's arrival, so advancing all
    ages by one deletion is O(1).
    """

    def __init__(self, sites=()):
        self.deletions = 0
        self.stamp = {x: 0 for x in sites}

    def place(self, x: int) -> None:
        self.stamp[x] = self.deletions

    def remove(self, x: int) -> None:
        del self.stamp[x]
        self.deletions += 1

    def __getitem__(self, x: int) -> int:
        return self.deletions - self.stamp[x]

    def keys(self):
        return self.stamp.keys()

    def as_dict(self) -> dict:
        return {x: self.deletions - s for x, s in self.stamp.items()}

    def oldest(self) -> int:
        return self.deletions - min(self.stamp.values())


def run_with_ages(n: int, seed: int = 0, stream_id: int = 0,
                  stream: UniformStream | None = None, return_table: bool = False):
    """Simulate the K=2 chain from {0} for n periods; return (O_1..O_n).

    The chain is the real lattice process and the age table is keyed by
    site.  Each deletion step ages every survivor by one.
    """
    if n < 1:
        raise DomainError("n >= 1 required")
    st = ChainState.from_values(SiteSet1D.from_sites([0]))
    ages = AgeTable([0])
    stream = stream or UniformStream(seed, stream_id)
    out = np.empty(n, np.int64)
    for m in range(n):
        u = stream.take(3)
        for k in range(2):
            x = st.add_choice(float(u[k]), faithful=False)
            st.apply_add(x)
            ages.place(x)
        y = st.delete_choice(float(u[2]), faithful=False)
        st.apply_delete(y)
        ages.remove(y)
        out[m] = ages.oldest()
    return (out, ages) if return_table else out


@nb.njit(cache=True)
def _oldest_batch(n, draws, out):
    reps = out.shape[0]
    birth = np.empty(n + 2, np.int64)
    for r in range(reps):
        # birth period of each present particle; the initial particle counts
        # with period 1 since it has survived as many deletions
        birth[0] = 1
        size = 1
        for t in range(1, n + 1):
            birth[size] = t
            birth[size + 1] = t
            size += 2
            j = int(math.ceil(draws[r, t - 1] * size))
            if j < 1:
                j = 1
            if j > size:
                j = size
            birth[j - 1] = birth[size - 1]
            size -= 1
        b = birth[0]
        for q in range(1, size):
            if birth[q] < b:
                b = birth[q]
        out[r] = n - b + 1


def oldest_batch(n: int, reps: int, seed: int, stream_id: int = 0) -> np.ndarray:
    """O_n for ``reps`` independent runs without spatial bookkeeping.

    Deletions are uniform over particles and additions never displace a
    particle, so the age process does not depend on the positions.
    """
    stream = UniformStream(seed, stream_id)
    out = np.empty(reps, np.int64)
    chunk = max(1, (1 << 22) // n)
    for s in range(0, reps, chunk):
        m = min(chunk, reps - s)
        _oldest_batch(n, stream.take(m * n).reshape(m, n), out[s:s + m])
    return out


def falling(k: int, i: int) -> int:
    """(k)_i = k (k-1) ... (k-i+1)."""
    r = 1
    for q in range(i):
        r *= k - q
    return r


def survival_exact(i: int, j: int, k: int) -> Fraction:
    """p(i,j,k) = (k)_i / (j+k+1)_i."""
    if i < 1 or min(j, k) < i:
        raise DomainError("need i >= 1 and min(j, k) >= i")
    return Fraction(falling(k, i), falling(j + k + 1, i))


def survival_bruteforce(i: int, j: int, k: int) -> Fraction:
    """Enumerate every deletion choice over k periods starting from A_{j-1}.

    Particles are labelled; marked labels are 0..i-1.  The state records the
    surviving marked labels; each period adds two unmarked particles and
    then deletes each present particle with probability 1/size.
    """
    if i < 1 or min(j, k) < i:
        raise DomainError("need i >= 1 and min(j, k) >= i")
    if j > 8 or k > 8:
        raise CapacityError("brute force limited to j, k <= 8")
    dist = {frozenset(range(i)): Fraction(1)}
    size = j
    for _ in range(k):
        size += 2
        nxt: dict = {}
        for marked, pr in dist.items():
            w = pr / size
            for victim in range(size):
                # labels 0..size-1 index the present particles; marked ones
                # keep their labels, unmarked fill the rest
                key = marked - {victim} if victim in marked else marked
                nxt[key] = nxt.get(key, Fraction(0)) + w
        dist = nxt
        size -= 1
    return dist.get(frozenset(), Fraction(0))


def recurrence_holds(n: int, j: int, m: int) -> bool:
    """p(n,j,m) = n/(j+2) p(n-1,j+1,m-1) + (j+2-n)/(j+2) p(n,j+1,m-1)."""
    lhs = survival_exact(n, j, m)
    a = Fraction(1) if n == 1 else survival_exact(n - 1, j + 1, m - 1)
    b = survival_exact(n, j + 1, m - 1) if m - 1 >= n else Fraction(0)
    return lhs == Fraction(n, j + 2) * a + Fraction(j + 2 - n, j + 2) * b


def tail_exact(n: int, x: float, exact: bool = False):
    """P((n - O_n)/sqrt(n) > x) = prod_{i=1}^{m+2} (n-m-i)/(n+3-i), m = floor(sqrt(n) x)."""
    if n < 1:
        raise DomainError("n >= 1 required")
    if x < 0:
        return Fraction(1) if exact else 1.0
    # scaled samples sit on k/sqrt(n); guard the floor against rounding
    m = math.floor(math.sqrt(n) * x + 1e-9)
    if n - m - (m + 2) <= 0:
        return Fraction(0) if exact else 0.0
    if exact:
        if n > 10 ** 4:
            raise CapacityError("exact mode limited to n <= 10**4")
        r = Fraction(1)
        for i in range(1, m + 3):
            r *= Fraction(n - m - i, n + 3 - i)
        return r
    r = 1.0
    for i in range(1, m + 3):
        r *= (n - m - i) / (n + 3 - i)
    return r


def limit_cdf(x: float) -> float:
    return 1.0 - math.exp(-x * x) if x > 0 else 0.0


def ks_distance(samples, cdf, atoms: bool = False) -> float:
    """sup |F_emp - cdf| over the sample points (both one-sided limits).

    With ``atoms=True`` the law is taken to be discrete with support among the
    samples, so only right-continuous values at distinct points are compared.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if len(x) == 0:
        raise DomainError("no samples")
    m = len(x)
    if atoms:
        v = np.unique(x)
        emp = np.searchsorted(x, v, side="right") / m
        f = np.array([cdf(u) for u in v])
        return float(np.abs(emp - f).max())
    f = np.array([cdf(v) for v in x])
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(0, m) / m
    return float(max(upper.max(), lower.max(), 0.0))


def scaled(n: int, O) -> np.ndarray:
    return (n - np.asarray(O, dtype=np.float64)) / math.sqrt(n)
