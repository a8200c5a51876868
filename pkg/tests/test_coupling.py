import math

import numpy as np
import pytest

from latticegrow import coupling as cp
from latticegrow.lattice1d import h
from latticegrow.rng import UniformStream


def streams(seed=1):
    return UniformStream(seed, 1), UniformStream(seed, 2)


def test_always_a_is_identity():
    A, B = streams()
    out = cp.derive_stream(A, B, cp.policy_always_a, 500)
    assert np.array_equal(out, UniformStream(1, 1).take(500))


def test_alternate_interleaves():
    A, B = streams()
    out = cp.derive_stream(A, B, cp.policy_alternate, 100)
    a, b = UniformStream(1, 1).take(50), UniformStream(1, 2).take(50)
    assert np.array_equal(out[0::2], a) and np.array_equal(out[1::2], b)


def test_same_stream_rejected():
    with pytest.raises(cp.ParameterError):
        cp.derive_stream(UniformStream(1, 1), UniformStream(1, 1), cp.policy_always_a, 5)


def test_peeking_policy_is_caught():
    A, B = streams()
    with pytest.raises(cp.ContractViolation):
        cp.derive_stream(A, B, cp.policy_peeking, 10)


def test_b_after_large_a_uniform():
    A, B = streams(4)
    t = cp.uniformity_tests(cp.derive_stream(A, B, cp.policy_b_after_large_a, 10 ** 6))
    assert t["p"] > 1e-3 and abs(t["lag1"]) < 5e-3


def test_uniformity_tests_detect_degenerate():
    assert cp.uniformity_tests(np.full(10 ** 4, 0.5))["p"] < 1e-6
    assert cp.uniformity_tests(np.arange(1, 10 ** 4 + 1) / (10 ** 4 + 1))["lag1"] > 0.99
    assert cp.uniformity_tests(UniformStream(2).take(10 ** 6))["p"] > 1e-3


def test_excursions():
    segs = cp.excursion_decomposition((0, 5, 6, 4, 7, 2, 5), 5)
    assert [list(s.indices) for s in segs[:2]] == [[1, 2], [4]]
    assert cp.excursion_decomposition([1, 2, 3], 5) == []
    segs = cp.excursion_decomposition([9, 9, 9, 9], 5, stop_index=3)
    assert len(segs) == 1 and list(segs[0].indices) == [0, 1, 2] and segs[0].kind == "truncated"


def test_k_decreases():
    segs = cp.k_decrease_decomposition((0, 1, -1, 0, -2), 2)
    assert segs[0].start + segs[0].length == 4
    segs = cp.k_decrease_decomposition([0, 1, 2, 3], 2)
    assert len(segs) == 1 and not segs[0].complete
    segs = cp.k_decrease_decomposition([0, -2], 2)
    assert segs[0].length == 1


def test_dominating_walk_extremes():
    n, K = 50, 3
    low = cp.dominating_walk(UniformStream.from_values([0.999] * n * K), 0.5, 10.0, K, n)
    assert np.array_equal(low, -np.arange(n + 1))
    high = cp.dominating_walk(UniformStream.from_values([0.001] * n * K), 5.0, 10.0, K, n)
    assert np.array_equal(high, (K - 1) * np.arange(n + 1))


def test_c_presets():
    assert cp.c_preset("c", 2, 3) == 22 * 2 * 3
    assert cp.c_preset("c1star", 2, 3) == 2 * cp.c_preset("c", 2, 3)


def test_overshoot_degenerate_steps():
    s = UniformStream(1)
    assert cp.overshoot_walk_mc(0.0, 5.0, 2, 1000, s) == 0
    assert cp.overshoot_walk_mc(1.0, 5.0, 2, 1000, s) == 1000
    assert cp.overshoot_exact(1.0, 5.0, 2) == pytest.approx(1.0)
    assert cp.overshoot_exact(0.0, 5.0, 2) == pytest.approx(0.0)


def _gambler(p, up, K):
    """Independent oracle: value iteration on the same stopped walk."""
    top = math.ceil(up)
    v = {s: 0.0 for s in range(-K + 1, top)}
    pk = [math.comb(K, z) * p ** z * (1 - p) ** (K - z) for z in range(K + 1)]
    for _ in range(20000):
        v = {s: sum(q * (1.0 if s + z - 1 >= top else v.get(s + z - 1, 0.0))
                    for z, q in enumerate(pk)) for s in v}
    return v[0]


@pytest.mark.parametrize("p,up,K", [(0.3, 4.0, 2), (0.2, 3.5, 3)])
def test_overshoot_exact_matches_value_iteration(p, up, K):
    assert cp.overshoot_exact(p, up, K) == pytest.approx(_gambler(p, up, K), rel=1e-9)


def test_overshoot_mc_agrees_with_exact():
    p, up, K = 0.3, 4.0, 2
    n = 200_000
    hits = cp.overshoot_walk_mc(p, up, K, n, UniformStream(5))
    q = cp.overshoot_exact(p, up, K)
    assert abs(hits / n - q) < 4 * math.sqrt(q * (1 - q) / n)


def test_overshoot_probability_report():
    r = cp.overshoot_probability_mc(1.0, 1e4, 2, 0.5, 10 ** 5, seed=1)
    assert r["bound"] == pytest.approx(10 ** -6)
    assert r["ciLow"] <= r["estimate"] <= r["ciHigh"]
    assert r["N"] == 1e4 and h(1e4) > 1


def test_success_marks_thresholds():
    N = 100
    assert len(cp.success_marks([0.5] * 10, "d", N)) == 0
    assert len(cp.success_marks([0.5] * 10, "a", N)) == 0
    assert len(cp.success_marks([0.99] * 10, "a", N)) == 10
    kinds = cp.step_kinds(2, 1)
    assert len(cp.success_marks([0.01, 0.5, 0.5], "d", N, kinds)) == 0
    assert list(cp.success_marks([0.5, 0.5, 0.01], "d", N, kinds)) == [2]


def test_gamma_series():
    g = cp.gamma_series([{"CI": 0}] * 5, 0)
    assert g.V == []
    g = cp.gamma_series([{"CI": c} for c in (0, 2, 2, 1, 0)], 0)
    assert g.V == [2] and g.gamma.tolist() == [0, 0, 2, 2, 1, 0]
