import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticegrow import lattice1d as l1
from latticegrow.lattice1d import GapLabeling, SiteSet1D
from latticegrow.rng import UniformStream


def S(*xs):
    return SiteSet1D.from_sites(xs)


@pytest.mark.parametrize("sites,expected", [
    ((0, 2, 3, 6), (2, 1, 3)),
    ((0,), (0, 0, 0)),
    ((0, 2, 4, 9), (3, 1, 6)),
])
def test_gap_statistics(sites, expected):
    assert l1.gap_statistics(S(*sites)) == expected


def test_proximity_sets():
    # three size-1 gaps {1}, {9}, {17} at mutual distance 8
    three = S(*[x for x in range(19) if x not in (1, 9, 17)])
    assert l1.proximity_sets(three) == (set(), set())
    assert l1.proximity_sets(S(0, 2, 3, 6)) == ({1, 4, 5}, {1, 4, 5})
    a = S(0, 2, 8, 10)
    assert l1.proximity_sets(a, GapLabeling(frozenset({3})))[0] == set()


def test_add_hand_traces():
    a = S(0)
    assert l1.add_site(a, GapLabeling(), 0.3)[2] == -1
    assert l1.add_site(a, GapLabeling(), 0.6)[2] == 1
    b, lab, x = l1.add_site(S(0, 2), GapLabeling(frozenset({1})), 0.5, faithful=False)
    assert x == 1 and b == S(0, 1, 2) and lab.new == frozenset()


def test_delete_hand_traces():
    b, lab, y = l1.delete_site(S(-1, 0, 1), GapLabeling(), 0.9)
    assert y == 1 and b == S(-1, 0) and b.L == 0
    # interior deletion, no old neighbour: new gap
    st = l1.ChainState.from_values(S(0, 1, 2))
    st.apply_delete(1)
    assert st.labeling().new == frozenset({1})
    # next to an old gap: merged gap is old
    st = l1.ChainState.from_values(S(0, 1, 2, 4), GapLabeling())
    st.apply_delete(2)
    assert st.siteset() == S(0, 1, 4) and st.labeling().new == frozenset()


def test_period_hand_trace():
    a, lab, obs = l1.run_period(S(0), GapLabeling(), UniformStream.from_values([0.3, 0.6, 0.9]), 2)
    assert a == S(-1, 0) and obs.L == 0 and obs.Ralpha == 0 and obs.Rdelta == 0


def _oracle_run(K, periods, draws):
    """Plain set simulation of the sorted-order law."""
    A = {0}
    rows = []
    u = iter(draws)
    for _ in range(periods):
        for _ in range(K):
            s = sorted(A)
            bd = sorted({x + d for x in s for d in (-1, 1)} - A)
            bd = [x for x in bd if x < s[0] or x > s[-1] or s[0] < x < s[-1]]
            A.add(bd[l1._pick(next(u), len(bd)) - 1])
        for _ in range(K - 1):
            s = sorted(A)
            A.remove(s[l1._pick(next(u), len(s)) - 1])
        s = sorted(A)
        L = s[-1] - s[0] + 1 - len(s)
        gaps = [b - a - 1 for a, b in zip(s, s[1:]) if b - a > 1]
        rows.append((len(s), L, len(gaps), sum(g >= 2 for g in gaps)))
    return rows


@pytest.mark.parametrize("K", [2, 3, 4])
def test_fast_kernel_matches_set_oracle(K):
    periods = 300
    tr = l1.run_model(K, periods, seed=K)
    draws = UniformStream(K).take(periods * (2 * K - 1))
    want = _oracle_run(K, periods, draws)
    got = [tuple(int(v) for v in row) for row in tr.data[1:, 1:5]]
    assert got == want


@pytest.mark.parametrize("K", [2, 3])
def test_python_backend_equals_kernel(K):
    a = l1.run_model(K, 500, seed=9, backend="fast")
    b = l1.run_model(K, 500, seed=9, backend="python")
    assert np.array_equal(a.data, b.data)


def test_faithful_backend_runs_and_keeps_size():
    tr = l1.run_model(3, 300, seed=1, backend="faithful", labeling="full")
    assert np.array_equal(tr.column("size"), 1 + np.arange(301))


def test_determinism_and_size_column():
    a = l1.run_model(2, 10, seed=3)
    b = l1.run_model(2, 10, seed=3)
    assert a == b
    assert np.array_equal(a.column("size"), 1 + np.arange(11))


def test_L_growth_bound():
    tr = l1.run_model(3, 10 ** 5, seed=1)
    assert tr.column("L").max() <= 2 * 10 ** 5


def test_all_outer_additions_raise_L_by_K_minus_1():
    # additions at u ~ 1 go to max+1; deletion at u = 0.5 is interior
    K = 3
    draws = [0.999, 0.999, 0.999, 0.5, 0.5]
    a, _, obs = l1.run_period(S(0, 1, 2, 3, 4), GapLabeling(), UniformStream.from_values(draws), K)
    assert obs.L == K - 1


def test_h():
    assert l1.h(math.exp(math.e)) == pytest.approx(math.e)
    assert l1.h(100) == pytest.approx(math.log(100) / math.log(math.log(100)))
    assert l1.h(100) == pytest.approx(3.0154, abs=1e-4)
    with pytest.raises(l1.DomainError):
        l1.h(math.e)


def test_families():
    assert l1.in_family_G(S(*range(10)), 2)
    a = S(*([0] + list(range(2, 101))))
    assert len(a) == 100 and a.L == 1
    assert l1.in_family_S(a, 3)
    b = S(*([0, 2] + list(range(4, 102))))
    assert not l1.in_family_S(b, 3)


def test_stopping_times():
    tr = l1.run_model(2, 200, seed=0)
    tr.data[:, l1.COLUMNS.index("LI")] = 0
    assert l1.stopping_time_scan(tr, "tau1", N=100) is None
    tr = l1.run_model(2, 50, initial=[0, 2, 4], labeling="full", seed=0)
    assert l1.stopping_time_scan(tr, "theta0") == 0
    with pytest.raises(l1.DataError):
        l1.stopping_time_scan(tr, "sigma")


def test_sigma_never_fires_without_log_hits():
    tr = l1.run_model(2, 5, seed=1, backend="python", log_steps=True)
    for rec in tr.steps:
        rec["inCI"] = False
    assert l1.stopping_time_scan(tr, "sigma") is None


def test_step_index_roundtrip():
    for K in (2, 3):
        for m in range(0, 60):
            assert l1.step_address(m, K).flat(K) == m


def test_steps_jsonl_roundtrip(tmp_path):
    tr = l1.run_model(2, 20, seed=1, backend="python", log_steps=True)
    p = tmp_path / "s.jsonl"
    l1.write_steps(p, tr.steps)
    assert l1.read_steps(p) == tr.steps


def test_domain_errors():
    with pytest.raises(l1.DomainError):
        l1.run_model(1, 10)
    with pytest.raises(l1.DomainError):
        l1.delete_site(S(0), GapLabeling(), 0.5)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=1, max_size=25), st.floats(0.001, 0.999))
def test_add_then_sizes(sites, u):
    a = S(*sites)
    b, lab, x = l1.add_site(a, GapLabeling.full(a), u)
    assert x not in a and x in b and len(b) == len(a) + 1
    b.check()
    lab.check(b)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=25), st.floats(0.001, 0.999),
       st.booleans())
def test_faithful_and_fast_choose_valid_sites(sites, u, faithful):
    a = S(*sites)
    if len(a) < 2:
        return
    b, _, y = l1.delete_site(a, GapLabeling.full(a), u, faithful)
    assert y in a and y not in b and len(b) == len(a) - 1


def test_faithful_choice_is_uniform():
    a = S(0, 2, 3, 7, 8, 9)
    lab = GapLabeling(frozenset({1}))
    rng = random.Random(0)
    counts = {}
    for _ in range(6000):
        y = l1.delete_site(a, lab, rng.random(), True)[2]
        counts[y] = counts.get(y, 0) + 1
    assert set(counts) == set(a.sites())
    assert max(counts.values()) - min(counts.values()) < 250
