"""Stream combinators and path observables used by the coupling arguments.

* ``derive_stream`` pastes two uniform streams together under an adapted
  selection policy.  Policies only see draws through a :class:`PolicyView`,
  whose revelation ledger rejects any look at a draw that has not been
  revealed yet.
* Excursion and K-decrease segmentations of integer series.
* The dominating walk and the overshoot Monte Carlo for the stopped walk.
* The Gamma process of a per-step log, with its increase and decrease
  times, and the d-/a-success marks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numba as nb
import numpy as np
from scipy import stats

from .lattice1d import DataError, h
from .rng import UniformStream


class ContractViolation(RuntimeError):
    """A selection policy looked at a draw that was not yet revealed."""


class ParameterError(ValueError):
    pass


# --------------------------------------------------------------------------
# selection-rule combinator

class _Ledger:
    def __init__(self, stream: UniformStream):
        self.stream = stream
        self.values: list[float] = []

    def reveal(self) -> float:
        u = self.stream.next()
        self.values.append(u)
        return u


class _RevealedSeq(Sequence):
    def __init__(self, ledger: _Ledger, name: str):
        self._ledger = ledger
        self._name = name

    def __len__(self) -> int:
        return len(self._ledger.values)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return self._ledger.values[k]
        n = len(self._ledger.values)
        if k < 0:
            k += n
        if not 0 <= k < n:
            raise ContractViolation(
                f"policy read draw {k} of stream {self._name}, only {n} revealed")
        return self._ledger.values[k]


class PolicyView:
    """What a policy may look at: the revealed prefixes of both streams."""

    def __init__(self, a: _Ledger, b: _Ledger):
        self._ledgers = {"A": a, "B": b}
        self.A = _RevealedSeq(a, "A")
        self.B = _RevealedSeq(b, "B")
        self.emitted: list[tuple[str, int]] = []

    def revealed(self, name: str) -> int:
        return len(self._ledgers[name].values)

    def discard(self, name: str, count: int = 1) -> None:
        """Reveal ``count`` draws of a stream without emitting them."""
        for _ in range(count):
            self._ledgers[name].reveal()


Policy = Callable[[PolicyView], object]


def derive_stream(A: UniformStream, B: UniformStream, policy: Policy, n: int) -> np.ndarray:
    """Emit ``n`` draws, each the next unrevealed draw of the chosen stream.

    ``policy(view)`` returns ``"A"``, ``"B"`` or ``(name, count)``.
    """
    if A.seed == B.seed and A.stream_id == B.stream_id and A._forced is None:
        raise ParameterError("A and B must be distinct streams")
    la, lb = _Ledger(A), _Ledger(B)
    view = PolicyView(la, lb)
    out = np.empty(n)
    k = 0
    while k < n:
        choice = policy(view)
        count = 1
        if isinstance(choice, tuple):
            choice, count = choice
        if choice not in ("A", "B") or count < 1:
            raise ParameterError(f"bad policy decision {choice!r}")
        led = la if choice == "A" else lb
        for _ in range(min(count, n - k)):
            out[k] = led.reveal()
            view.emitted.append((choice, len(led.values) - 1))
            k += 1
    return out


def policy_always_a(view: PolicyView):
    return "A"


def policy_alternate(view: PolicyView):
    return "A" if len(view.emitted) % 2 == 0 else "B"


def policy_b_after_large_a(view: PolicyView):
    """Take B right after an emitted A-draw exceeding 1/2, else A."""
    if view.emitted:
        name, idx = view.emitted[-1]
        if name == "A" and view.A[idx] > 0.5:
            return "B"
    return "A"


def policy_skip_and_burst(view: PolicyView):
    """After a small emitted draw, discard two B-draws and emit three from B."""
    if view.emitted:
        name, idx = view.emitted[-1]
        seq = view.A if name == "A" else view.B
        if seq[idx] < 0.2:
            view.discard("B", 2)
            return ("B", 3)
    return "A"


def policy_peeking(view: PolicyView):
    """Not adapted: reads the next A-draw before choosing."""
    nxt = view.A[view.revealed("A")]
    return "A" if nxt < 0.5 else "B"


ADAPTED_POLICIES = {
    "b_after_large_a": policy_b_after_large_a,
    "alternate": policy_alternate,
    "skip_and_burst": policy_skip_and_burst,
}


def uniformity_tests(seq, bins: int = 100) -> dict:
    """Chi-square over equal bins on (0,1) and lag-1 autocorrelation."""
    x = np.asarray(seq, dtype=np.float64)
    if len(x) < 1000:
        raise ParameterError("need at least 1000 values")
    counts, _ = np.histogram(x, bins=bins, range=(0.0, 1.0))
    chi2, p = stats.chisquare(counts)
    a, b = x[:-1], x[1:]
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        rho = float("nan")
    else:
        rho = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))
    return {"chi2": float(chi2), "p": float(p), "lag1": rho, "n": len(x)}


# --------------------------------------------------------------------------
# segmentations

@dataclass(frozen=True)
class Segment:
    start: int
    length: int
    kind: str  # "excursion" | "truncated" | "decrease" | "incomplete"

    @property
    def indices(self) -> range:
        return range(self.start, self.start + self.length)

    @property
    def complete(self) -> bool:
        return self.kind in ("excursion", "truncated", "decrease")


def excursion_decomposition(series, C: float, stop_index: int | None = None) -> list[Segment]:
    """Excursions at or above ``C``.

    An excursion starts at the first index (not before the previous end,
    and before ``stop_index``) with value >= C, and covers the indices up to
    but excluding the first later value < C.  It is cut at ``stop_index``
    (kind ``truncated``); one that runs off the end of the series is
    ``incomplete``.
    """
    x = list(series)
    end = len(x) if stop_index is None else min(stop_index, len(x))
    out = []
    i = 0
    while i < end:
        if x[i] < C:
            i += 1
            continue
        j = i
        while j < len(x) and x[j] >= C and (stop_index is None or j < stop_index):
            j += 1
        if stop_index is not None and j == stop_index:
            kind = "truncated"
        elif j == len(x):
            kind = "incomplete"
        else:
            kind = "excursion"
        out.append(Segment(i, j - i, kind))
        i = j
    return out


def k_decrease_decomposition(walk, K: int) -> list[Segment]:
    """Successive K-decreases: a segment ends at the first index where the
    walk is at least K below its value at the segment start."""
    x = list(walk)
    out = []
    s = 0
    while s < len(x) - 1:
        j = s + 1
        while j < len(x) and x[j] - x[s] > -K:
            j += 1
        if j < len(x):
            out.append(Segment(s, j - s, "decrease"))
            s = j
        else:
            out.append(Segment(s, len(x) - 1 - s, "incomplete"))
            break
    return out


# --------------------------------------------------------------------------
# walks

def c_preset(name: str, K: int, M: int) -> float:
    """The three instantiations of the free constant c."""
    table = {"c": 22 * K * M, "c1": 4 * M, "c1star": 44 * K * M}
    if name not in table:
        raise ParameterError(f"unknown preset {name!r}")
    return float(table[name])


def dominating_walk(stream: UniformStream, c: float, hN: float, K: int, periods: int) -> np.ndarray:
    """L-hat_n = -n + number of draws <= c/h(N) among the first nK."""
    p = c / hN
    if not 0 < p < 1:
        raise ParameterError("c/h(N) must lie in (0, 1)")
    u = stream.take(periods * K).reshape(periods, K)
    inc = (u <= p).sum(axis=1) - 1
    return np.concatenate([[0], np.cumsum(inc)]).astype(np.int64)


@nb.njit(cache=True)
def _overshoot_kernel(draws, p, up, K, trials, state):
    # state: trials done, hits, current Y, draws into the K-block, block successes
    done, hits, y, k, z = state[0], state[1], state[2], state[3], state[4]
    pos = 0
    n = draws.shape[0]
    while done < trials and pos < n:
        if draws[pos] <= p:
            z += 1
        pos += 1
        k += 1
        if k == K:
            y += z - 1
            z = 0
            k = 0
            if y >= up:
                hits += 1
                done += 1
                y = 0
            elif y <= -K:
                done += 1
                y = 0
    state[0], state[1], state[2], state[3], state[4] = done, hits, y, k, z


def overshoot_walk_mc(p: float, up: float, K: int, trials: int, stream: UniformStream) -> int:
    """Count upward exits of Y_m = Z_{mK} - m (Bernoulli(p) steps for Z),
    stopped at Y >= up or Y <= -K.  Accepts any p in [0, 1]."""
    if not 0 <= p <= 1:
        raise ParameterError("p must lie in [0, 1]")
    state = np.zeros(5, np.int64)
    while state[0] < trials:
        _overshoot_kernel(stream.take(1 << 20), p, math.ceil(up), K, trials, state)
    return int(state[1])


def overshoot_exact(p: float, up: float, K: int) -> float:
    """Exact upward-exit probability of the same stopped walk.

    Solves the absorption equations on the transient states
    -K+1 .. ceil(up)-1 with binomial(K, p) - 1 increments.
    """
    top = math.ceil(up)
    states = list(range(-K + 1, top))
    idx = {s: i for i, s in enumerate(states)}
    A = np.eye(len(states))
    b = np.zeros(len(states))
    pk = stats.binom.pmf(np.arange(K + 1), K, p)
    for s in states:
        for z, q in enumerate(pk):
            t = s + z - 1
            if t >= top:
                b[idx[s]] += q
            elif t > -K:
                A[idx[s], idx[t]] -= q
    return float(np.linalg.solve(A, b)[idx[0]])


def clopper_pearson(hits: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    a = 1 - level
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(a / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(stats.beta.ppf(1 - a / 2, hits + 1, trials - hits))
    return lo, hi


def overshoot_bound(N: float, K: int, eta: float, eps: float) -> float:
    return float(N) ** -(1 + eta * K / (K - 1) - eps)


def overshoot_probability_mc(c: float, N: float, K: int, eta: float, trials: int,
                             seed: int, stream_id: int = 0, eps: float = 0.5) -> dict:
    hN = h(N)
    p = c / hN
    if not 0 <= p < 1:
        raise ParameterError("c/h(N) must lie in [0, 1)")
    if trials < 1:
        raise ParameterError("trials >= 1 required")
    up = (eta + (K - 1) / K) * hN
    hits = overshoot_walk_mc(p, up, K, trials, UniformStream(seed, stream_id))
    lo, hi = clopper_pearson(hits, trials)
    return {"c": c, "N": N, "K": K, "eta": eta, "trials": trials, "hits": hits,
            "estimate": hits / trials, "ciLow": lo, "ciHigh": hi,
            "bound": overshoot_bound(N, K, eta, eps)}


# --------------------------------------------------------------------------
# Gamma process and success marks

@dataclass
class GammaSeries:
    gamma: np.ndarray
    V: list  # V[0] = V_0, V[i] = i-th increase after V_0
    W1: list  # W1[i-1] pairs with V[i]
    W2: list


def gamma_series(steps: list, gamma0: int) -> GammaSeries:
    """Gamma_m = |C^I| after m steps, from a per-step log with ``CI``."""
    g = [int(gamma0)]
    for rec in steps:
        if "CI" not in rec:
            raise DataError("per-step log lacks labelled proximity data")
        g.append(int(rec["CI"]))
    g = np.asarray(g, dtype=np.int64)
    pos = np.flatnonzero(g > 0)
    V, W1, W2 = [], [], []
    if len(pos):
        V.append(int(pos[0]))
        inc = np.flatnonzero(np.diff(g) > 0) + 1
        dec = np.flatnonzero(np.diff(g) < 0) + 1
        zero = np.flatnonzero(g == 0)
        for m in inc[inc > V[0]]:
            V.append(int(m))
            d = dec[dec > m]
            z = zero[zero > m]
            W1.append(int(d[0]) if len(d) else None)
            W2.append(int(z[0]) if len(z) else None)
    return GammaSeries(g, V, W1, W2)


def success_marks(draws, kind: str, N: float, step_kinds=None) -> np.ndarray:
    """Indices of d-successes (deletion steps with u <= ln N / N) or
    a-successes (u > 1 - 1/ln N)."""
    if N < 3:
        raise ParameterError("N >= 3 required")
    u = np.asarray(draws, dtype=np.float64)
    if kind == "d":
        mask = u <= math.log(N) / N
        if step_kinds is not None:
            mask &= np.asarray([k == "del" for k in step_kinds])
    elif kind == "a":
        mask = u > 1 - 1 / math.log(N)
    else:
        raise ParameterError("kind must be 'd' or 'a'")
    return np.flatnonzero(mask)


def step_kinds(K: int, periods: int) -> list[str]:
    """Kind of each step 1..periods*kappa (index 0 = step 1)."""
    one = ["add"] * K + ["del"] * (K - 1)
    return one * periods
