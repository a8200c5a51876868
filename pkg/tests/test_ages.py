import math
from fractions import Fraction

import numpy as np
import pytest

from latticegrow import ages


def test_first_oldest_ages():
    seen3 = set()
    for s in range(60):
        O = ages.run_with_ages(3, seed=s)
        assert O[0] == 1 and O[1] == 2
        seen3.add(int(O[2]))
    assert seen3 == {2, 3}


def test_batch_sampler_matches_spatial_run():
    # same law: compare distributions of O_6
    a = np.array([ages.run_with_ages(6, seed=s)[-1] for s in range(3000)])
    b = ages.oldest_batch(6, 20000, seed=1)
    for v in range(3, 7):
        pa, pb = np.mean(a == v), np.mean(b == v)
        assert abs(pa - pb) < 4 * math.sqrt(pb * (1 - pb) / 3000) + 1e-9


def test_survival_values():
    assert ages.survival_exact(1, 2, 3) == Fraction(1, 2)
    assert ages.survival_exact(2, 2, 2) == Fraction(1, 10)
    assert ages.survival_bruteforce(2, 3, 4) == Fraction(3, 14)
    assert ages.survival_exact(2, 3, 4) == Fraction(3, 14)


def test_exact_equals_bruteforce_on_diagonal():
    for j in range(1, 7):
        for i in range(1, j + 1):
            assert ages.survival_bruteforce(i, j, i) == ages.survival_exact(i, j, i)


def test_domain_errors():
    with pytest.raises(ages.DomainError):
        ages.survival_exact(3, 2, 5)
    with pytest.raises(ages.CapacityError):
        ages.survival_bruteforce(1, 9, 9)


def test_recurrence():
    assert all(ages.recurrence_holds(n, j, m) for n in range(1, 8)
               for j in range(n, n + 4) for m in range(n + 1, n + 4))


def test_tail_exact():
    assert ages.tail_exact(4, 0.5) == 0
    assert ages.tail_exact(4, 0.0, exact=True) == Fraction(1, 5)
    n = 10 ** 6
    assert ages.tail_exact(n, 1.0) == pytest.approx(math.exp(-1), abs=5e-3)


def test_tail_exact_matches_survival():
    # the product formula against simulation at small n
    n = 30
    x = ages.scaled(n, ages.oldest_batch(n, 40000, seed=3))
    for t in (0.3, 0.8):
        p = ages.tail_exact(n, t)
        assert abs(np.mean(x > t) - p) < 4 * math.sqrt(p * (1 - p) / 40000) + 1e-9


def test_limit_cdf():
    assert ages.limit_cdf(0) == 0
    assert ages.limit_cdf(math.sqrt(math.log(2))) == pytest.approx(0.5)
    assert ages.limit_cdf(2) == pytest.approx(0.981684, abs=1e-6)


def test_ks_distance():
    med = math.sqrt(math.log(2))
    assert ages.ks_distance([med] * 10, ages.limit_cdf) == pytest.approx(0.5)
    m = 50
    q = [math.sqrt(-math.log(1 - (i - 0.5) / m)) for i in range(1, m + 1)]
    assert ages.ks_distance(q, ages.limit_cdf) <= 1 / (2 * m) + 1e-12


def test_age_table():
    t = ages.AgeTable([0])
    t.place(1)
    t.remove(0)
    assert t[1] == 1 and t.oldest() == 1


def test_tail_exact_on_lattice_points_of_nonsquare_n():
    n = 300
    for k in range(0, 20):
        x = k / math.sqrt(n)
        assert ages.tail_exact(n, x, exact=True) == ages.tail_exact(n, (k + 0.5) / math.sqrt(n),
                                                                   exact=True)


def test_ks_distance_atoms():
    # a fair coin on {0, 1}: perfect sample, zero distance when atoms are honoured
    cdf = lambda v: 0.0 if v < 0 else (0.5 if v < 1 else 1.0)
    assert ages.ks_distance([0, 1], cdf, atoms=True) == 0.0
    assert ages.ks_distance([0, 1], cdf) == pytest.approx(0.5)
