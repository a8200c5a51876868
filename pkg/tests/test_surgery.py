import numpy as np
import pytest
from scipy.sparse import lil_matrix
from scipy.sparse.csgraph import shortest_path

from latticegrow import surgery as sg
from latticegrow.dla2d import hole_count, run_dla


@pytest.fixture(scope="module")
def dec():
    c = run_dla(500, seed=1, snapshot_every=500).cluster
    return sg.build_decomposition(c)


# -- contour ---------------------------------------------------------------

def test_single_point_contour_is_diamond():
    c = sg.build_contour({(0, 0)})
    assert len(c) == 160
    assert set(c.points) == {(x, y) for x in range(-40, 41) for y in range(-40, 41)
                             if abs(x) + abs(y) == 40}
    assert c.points[0] == (0, 40) and c.signed_area() < 0


def test_domino_contour_against_bruteforce():
    a = {(0, 0), (1, 0)}
    c = sg.build_contour(a)
    assert set(c.points) == sg.contour_points_bruteforce(a)
    assert len(c) == 162


def test_dla_contour_against_bruteforce(dec):
    assert set(dec.contour.points) == sg.contour_points_bruteforce(dec.cluster)


def test_hat_loop():
    c = sg.build_contour({(0, 0)})
    hat = sg.build_hat_gamma(c, {(0, 0)})
    assert hat[1] == (1, 40)  # (0,40) -> (1,39) inserts (0,40)+e1
    assert len(hat) == len(set(hat)) == 320
    sq = sg.Contour([(0, 0), (1, 0), (1, -1), (0, -1)])
    assert sg.build_hat_gamma(sq) == sq.points


def test_hat_loop_diagonal_up_right():
    c = sg.Contour([(0, 0), (1, 1), (2, 0), (1, -1)])
    hat = sg.build_hat_gamma(c)
    assert hat[:3] == [(0, 0), (0, 1), (1, 1)]


def test_hat_loop_on_dla(dec):
    hat = sg.build_hat_gamma(dec.contour, dec.cluster)
    assert len(set(hat)) == len(hat)
    pos = sg.hat_index(dec.contour, hat)
    assert set(pos) == set(dec.contour.points)


# -- merged paths ----------------------------------------------------------

def test_first_path_is_straight_descent():
    a = {(0, 0)}
    paths = sg.build_gamma_paths(a, sg.build_contour(a))
    assert paths[0] == [(0, 40 - t) for t in range(41)]
    assert sg.stay_together(paths)


def test_paths_on_dla(dec):
    assert sg.stay_together(dec.gammas)
    A = dec.cluster
    for xi, g in zip(dec.contour.points, dec.gammas):
        assert g[0] == xi and len(g) == 41 and g[-1] in A
        assert all(abs(p[0] - q[0]) + abs(p[1] - q[1]) == 1 for p, q in zip(g, g[1:]))


# -- constrained distance --------------------------------------------------

def _oracle_distance(A, source, targets, pad=3):
    pts = list(A) + [source] + list(targets)
    x0, y0 = min(p[0] for p in pts) - pad, min(p[1] for p in pts) - pad
    nx = max(p[0] for p in pts) + pad - x0 + 1
    ny = max(p[1] for p in pts) + pad - y0 + 1
    idx = lambda p: (p[0] - x0) * ny + (p[1] - y0)
    G = lil_matrix((nx * ny, nx * ny))
    for x in range(x0, x0 + nx):
        for y in range(y0, y0 + ny):
            p = (x, y)
            if p in A and p != source:
                continue
            for q in ((x + 1, y), (x, y + 1), (x - 1, y), (x, y - 1)):
                if x0 <= q[0] < x0 + nx and y0 <= q[1] < y0 + ny:
                    G[idx(p), idx(q)] = 1
    d = shortest_path(G.tocsr(), indices=idx(source), unweighted=True)
    return min(d[idx(t)] for t in targets)


def test_constrained_distance_examples():
    assert sg.constrained_distance({(0, 0)}, (0, 1), [(0, -1), (0, -2)]) == 4
    assert sg.constrained_distance({(0, 0)}, (3, 3), [(3, 3)]) == 0
    ring = {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert sg.constrained_distance(ring, (0, 0), [(5, 5)]) == np.inf


def test_constrained_distance_against_graph_oracle():
    rng = np.random.default_rng(0)
    c = run_dla(80, seed=3, snapshot_every=80).cluster
    A = set(c.points)
    free = [(x, y) for x in range(-8, 9) for y in range(-8, 9) if (x, y) not in A]
    for _ in range(30):
        s = free[rng.integers(len(free))]
        ts = [free[rng.integers(len(free))] for _ in range(2)]
        if rng.random() < 0.5:
            ts.append(next(iter(A)))
        assert sg.constrained_distance(A, s, ts) == _oracle_distance(A, s, ts)


# -- separators and patches ------------------------------------------------

def test_single_point_infeasible():
    with pytest.raises(sg.ConstructionInfeasible):
        sg.build_decomposition({(0, 0)})


def test_segment_gives_two_patches():
    dec = sg.build_decomposition({(x, 0) for x in range(200)})
    assert dec.I >= 2


def test_separators_satisfy_predicate(dec):
    A = dec.cluster
    s = dec.separators
    for i in range(1, s.I + 1):
        y = dec.gammas[s.v[i - 1]][-1]
        assert sg.constrained_distance(A, dec.gammas[s.u[i - 1]], [y]) >= 40


def test_decomposition_verifier(dec):
    rep = sg.verify_decomposition(dec)
    assert rep["ok"], rep


def test_boundary_paths_in_two_patches(dec):
    for i in range(dec.I):
        a, b = dec.patches[i], dec.patches[(i + 1) % dec.I]
        shared = [p for p in a.gamma_plus if p not in dec.cluster]
        assert a.gamma_plus == b.gamma_minus
        assert all(p in a.closure and p in b.closure for p in shared)


def test_decomposition_json(dec):
    d = dec.to_json()
    assert len(d["patches"]) == dec.I and len(d["contour"]["points"]) == len(dec.contour)


# -- attach points ---------------------------------------------------------

FIXTURE_A = {(0, 0), (0, -1), (-1, -1), (-2, -1), (-2, 0), (-2, 1), (-2, 2)}
FIXTURE_G = [(1, y) for y in range(39, 1, -1)] + [(0, 2), (0, 1), (0, 0)]


def test_attach_fixture():
    plan = sg.attach_points_from_gamma(FIXTURE_A, FIXTURE_G)
    r = plan.ring
    assert (plan.m1, plan.m2) == (3, 7)
    assert plan.k2 == 4 and plan.first == 4
    assert plan.xs == [r[3], r[7], r[6], r[4], r[5], FIXTURE_G[36], FIXTURE_G[35]]
    assert plan.xs == [(-1, 2), (1, 0), (1, 1), (0, 2), (1, 2), (1, 3), (1, 4)]
    assert plan.betas[3][-3:] == [FIXTURE_G[36], (0, 3), (0, 2)]
    chk = sg.check_attach_plan(FIXTURE_A, plan)
    assert chk["sequential"] and chk["wInHole"] and chk["distanceOk"]
    holes = hole_count(FIXTURE_A | set(plan.xs)).holes
    assert any((0, 1) in set(map(tuple, h)) for h in holes)


def test_attach_reflected_fixture():
    A = {(-x, y) for x, y in FIXTURE_A}
    G = [(-x, y) for x, y in FIXTURE_G]
    plan = sg.attach_points_from_gamma(A, G)
    assert plan.reflected or plan.k2 in (4, 5, 6)
    chk = sg.check_attach_plan(A, plan)
    assert chk["sequential"] and chk["wInHole"]


def test_attach_on_every_patch(dec):
    for i in range(1, dec.I + 1):
        plan = sg.choose_attach_points(dec, i)
        assert all(x in dec.patch(i).interior for x in plan.xs)
        assert sg.check_attach_plan(dec.cluster, plan)["wInHole"]


# -- lucky patch and phi ---------------------------------------------------

def _seven_into_first_patch(dec):
    D = dec.patch(1)
    z = next(p for p in D.gamma_star[1:] if p in D.interior)
    paths = []
    for _ in range(7):
        # walk down gamma* from the contour, then one step sideways off it
        paths.append(D.gamma_star[:-1] + [D.gamma_star[-1]])
    return paths, z


def test_lucky_patch_simple():
    dec = sg.build_decomposition({(x, 0) for x in range(200)})
    D = dec.patch(1)
    paths = [D.gamma_star for _ in range(7)]
    lp = sg.lucky_patch(dec, paths)
    assert lp.theta == 1 and lp.V == list(range(1, 8))
    assert np.all(np.diff(lp.counts, axis=0) >= 0)


def test_phi_identity_off_xi(dec):
    bad = [[(10 ** 4, 10 ** 4), (10 ** 4 + 1, 10 ** 4)]]
    out, plan = sg.phi(dec, bad)
    assert plan is None and np.array_equal(out[0][0], np.array(bad[0]))


@pytest.fixture(scope="module")
def sampled(dec):
    return [sg.surgery_sample(dec, seed=50 + j, tail=(j == 0)) for j in range(4)]


def test_surgery_reports(sampled):
    for om, new, plan, rep in sampled:
        assert rep["ok"], rep["checks"]
        assert rep["wEnclosed"] and rep["holesAtV7"] >= rep["holesBefore"] + 1
    assert sampled[0][3]["holeGain"] >= 1


def test_phi_paths_attach_where_intended(sampled, dec):
    for om, new, plan, rep in sampled:
        A = sg._clusters_along(dec.cluster, new, plan.V[-1])[-1]
        assert set(plan.attach.xs) <= A


def test_unchanged_paths_are_identical(sampled):
    for om, new, plan, rep in sampled:
        for act, (P0, _), (P1, _) in zip(plan.actions, om, new):
            if act["kind"] == "unchanged":
                assert np.array_equal(P0, P1)
            else:
                assert len(P1) > len(P0)


def test_phi_deterministic_and_prefix_only(sampled, dec):
    assert sg.plan_is_deterministic(dec, sampled[1][0])


def test_injectivity(sampled, dec):
    res = sg.injectivity_spot_check(dec, [s[0] for s in sampled], pairs=10, seed=1)
    assert res["ok"]


def test_plan_json(sampled):
    d = sampled[0][2].to_json()
    assert len(d["attach"]["x"]) == 7 and len(d["V"]) == 7
