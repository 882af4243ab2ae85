import itertools
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snd.transport import (
    BankConfig,
    MetricityWarning,
    SolverError,
    bank_capacities,
    cluster_distances,
    emd,
    emd_alpha,
    emd_alpha_exact,
    emd_exact,
    emd_hat,
    emd_hat_exact,
    emd_star_exact,
    extend_for_emd_star,
    integerize,
    lp_oracle,
    solve_balanced_int,
    solve_transport,
)


def brute_force_cost(s, d, C):
    """Minimum over every integer plan shipping min(sum s, sum d); tiny problems only."""
    s, d = list(s), list(d)
    total = min(sum(s), sum(d))
    k, N = len(s), len(d)
    best = None

    def rec(i, left_s, left_d, shipped, cost):
        nonlocal best
        if i == k * N:
            if shipped == total and (best is None or cost < best):
                best = cost
            return
        r, c = divmod(i, N)
        for a in range(min(left_s[r], left_d[c]) + 1):
            left_s[r] -= a
            left_d[c] -= a
            rec(i + 1, left_s, left_d, shipped + a, cost + a * C[r][c])
            left_s[r] += a
            left_d[c] += a

    rec(0, s, d, 0, 0)
    return best


def random_metric(rng, n, hi=20):
    """L1 distances between distinct random grid points."""
    while True:
        pts = rng.integers(0, hi, (n, 2))
        if len({tuple(x) for x in pts}) == n:
            break
    return np.abs(pts[:, None, :] - pts[None, :, :]).sum(-1).astype(np.int64)


# ---------------------------------------------------------------------------
# solve_transport


def test_swap_example():
    plan = solve_transport([3, 0], [0, 3], [[0, 2], [2, 0]])
    assert plan.cost == 6
    assert plan.shipped == 3


def test_cheap_direction_example():
    assert solve_transport([1, 1], [2, 0], [[0, 5], [1, 0]]).cost == 1


def test_identity_transport():
    D = random_metric(np.random.default_rng(0), 6)
    assert solve_transport([1, 2, 3, 0, 4, 1], [1, 2, 3, 0, 4, 1], D).cost == 0


def test_both_empty_is_zero():
    plan = solve_transport([0, 0], [0, 0], [[0, 1], [1, 0]])
    assert plan.cost == 0 and plan.shipped == 0


def test_brute_force_matches_hand_examples():
    assert brute_force_cost([3, 0], [0, 3], [[0, 2], [2, 0]]) == 6
    assert brute_force_cost([1, 1], [2, 0], [[0, 5], [1, 0]]) == 1


def test_fractional_masses():
    plan = solve_transport([0.5, 0.25], [0, 0.75], [[0, 4], [4, 0]])
    assert plan.cost == Fraction(2)


def test_irrational_mass_rejected():
    with pytest.raises(ValueError):
        integerize([np.pi * 1e-7])


@pytest.mark.parametrize("bad", [[[0, -1], [1, 0]], [[0, 1.5], [1, 0]], [[0, np.inf], [1, 0]]])
def test_bad_costs(bad):
    with pytest.raises(ValueError):
        solve_transport([1, 0], [0, 1], bad)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        solve_transport([1, 0, 0], [0, 1], [[0, 1], [1, 0]])


def test_overflow_guard():
    with pytest.raises(SolverError):
        solve_balanced_int(np.array([1, 1]), np.array([1, 1]), np.array([[0, 2**61], [2**61, 0]]))


@st.composite
def small_problems(draw, max_bins=4, max_mass=4, max_cost=9):
    k = draw(st.integers(1, max_bins))
    N = draw(st.integers(1, max_bins))
    s = draw(st.lists(st.integers(0, max_mass), min_size=k, max_size=k))
    d = draw(st.lists(st.integers(0, max_mass), min_size=N, max_size=N))
    C = draw(st.lists(st.lists(st.integers(0, max_cost), min_size=N, max_size=N), min_size=k, max_size=k))
    return s, d, C


@settings(max_examples=150, deadline=None)
@given(small_problems(max_bins=3, max_mass=3))
def test_solver_matches_enumeration(prob):
    s, d, C = prob
    plan = solve_transport(s, d, C)
    assert plan.cost == brute_force_cost(s, d, C)
    flows = plan.dense((len(s), len(d)))
    assert np.all(flows.sum(axis=1) <= np.array(s) + 1e-12)
    assert np.all(flows.sum(axis=0) <= np.array(d) + 1e-12)
    assert plan.shipped == min(sum(s), sum(d))


@settings(max_examples=100, deadline=None)
@given(small_problems(max_bins=10, max_mass=20, max_cost=50))
def test_solver_matches_lp_oracle(prob):
    s, d, C = prob
    assert solve_transport(s, d, C).cost == lp_oracle(s, d, C).cost


@settings(max_examples=60, deadline=None)
@given(small_problems(max_bins=6, max_mass=10, max_cost=30), st.integers(1, 7))
def test_cost_scale_equivariance(prob, c):
    s, d, C = prob
    a = solve_transport(s, d, C).cost
    b = solve_transport(s, d, (np.array(C) * c).tolist()).cost
    assert b == c * a


def test_oracle_size_guard():
    with pytest.raises(ValueError):
        lp_oracle([1] * 13, [1] * 13, np.zeros((13, 13), int))


def test_oracle_zero_supplies():
    plan = lp_oracle([0, 0], [1, 1], [[1, 1], [1, 1]])
    assert plan.cost == 0 and plan.rows.size == 0


# ---------------------------------------------------------------------------
# EMD, EMD-hat, EMD^alpha


def test_emd_examples():
    assert emd([3, 0], [0, 3], [[0, 2], [2, 0]]) == 2
    assert emd([1, 0], [0, 2], [[0, 1], [1, 0]]) == 1
    assert emd([2, 1], [2, 1], [[0, 1], [1, 0]]) == 0
    assert emd_exact([0, 0], [0, 0], [[0, 1], [1, 0]]) == 0


def test_emd_hat_examples():
    assert emd_hat([1, 0], [0, 2], [[0, 1], [1, 0]], 1) == 2
    D = [[0, 3], [3, 0]]
    assert emd_hat_exact([2, 0], [0, 2], D, 5) == emd_exact([2, 0], [0, 2], D) * 2
    assert emd_hat([1, 0], [0, 3], D, 0) == 3


def test_emd_alpha_examples():
    assert emd_alpha([1, 0], [0, 2], [[0, 1], [1, 0]], 1) == 2
    assert emd_alpha([1, 4], [1, 4], [[0, 1], [1, 0]], 0.5) == 0


def test_emd_alpha_warns_outside_conditions():
    with pytest.warns(MetricityWarning):
        emd_alpha([1, 0], [0, 2], [[0, 1], [1, 0]], 0.25)
    with pytest.warns(MetricityWarning):
        emd_alpha([1, 0, 0], [0, 2, 0], [[0, 1, 5], [1, 0, 1], [5, 1, 0]], 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        emd_alpha([1, 0], [0, 2], [[0, 1], [1, 0]], 0.5)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.fractions(Fraction(1, 2), Fraction(3), max_denominator=1000))
def test_emd_alpha_equals_emd_hat_on_metric(n, seed, alpha):
    rng = np.random.default_rng(seed)
    D = random_metric(rng, n)
    P, Q = rng.integers(0, 6, n), rng.integers(0, 6, n)
    assert emd_alpha_exact(P, Q, D, alpha) == emd_hat_exact(P, Q, D, alpha)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 10]))
def test_equal_bank_append_invariance(n, seed, k):
    rng = np.random.default_rng(seed)
    D = random_metric(rng, n)
    P = rng.integers(0, 6, n)
    Q = rng.permutation(P)
    w = -(-int(D.max()) // 2)
    Dk = np.zeros((n + 1, n + 1), np.int64)
    Dk[:n, :n] = D
    Dk[:n, n] = Dk[n, :n] = w
    base = solve_transport(P, Q, D).cost
    assert solve_transport(np.append(P, k), np.append(Q, k), Dk).cost == base


# ---------------------------------------------------------------------------
# EMD-star


def test_bank_capacities_equal_totals():
    bp, bq, f = bank_capacities(np.array([1, 2]), np.array([2, 1]), np.array([0, 1]), 2, 1)
    assert bp.tolist() == [0, 0] and bq.tolist() == [0, 0] and f == 1


def test_bank_capacities_single_bank():
    bp, bq, f = bank_capacities(np.array([1, 1]), np.array([3, 4]), np.array([0, 0]), 1, 1)
    assert (bp / f).tolist() == [5] and bq.tolist() == [0]


def test_bank_capacities_two_equal_clusters():
    bp, _, f = bank_capacities(np.array([1, 0, 1, 0]), np.array([3, 0, 3, 0]), np.array([0, 0, 1, 1]), 2, 1)
    assert (bp / f).tolist() == [2, 2]


def test_bank_capacities_uniform_when_light_side_empty():
    bp, bq, f = bank_capacities(np.array([0, 0, 0]), np.array([3, 0, 3]), np.array([0, 1, 2]), 3, 2)
    assert (bp / f).tolist() == [1.0] * 6
    assert bq.tolist() == [0] * 6


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_extended_totals_balance(n, n_c, n_b, seed):
    rng = np.random.default_rng(seed)
    n_c = min(n_c, n)
    labels = np.concatenate([np.arange(n_c), rng.integers(0, n_c, n - n_c)])
    P, Q = rng.integers(0, 5, n), rng.integers(0, 5, n)
    ext = extend_for_emd_star(P, Q, random_metric(rng, n), BankConfig(labels, n_b))
    assert ext.supplies.sum() == ext.demands.sum()
    assert Fraction(int(ext.supplies.sum()), ext.scale) == max(P.sum(), Q.sum())
    banks_p, banks_q = ext.supplies[n:], ext.demands[n:]
    assert not (banks_p.any() and banks_q.any())


def test_extended_ground_distance_blocks():
    D = np.array([[0, 1, 5, 6], [1, 0, 4, 5], [5, 4, 0, 1], [6, 5, 1, 0]])
    bank = BankConfig(np.array([0, 0, 1, 1]), 2, np.array([[1, 2], [3, 3]]))
    Dt = extend_for_emd_star([1, 0, 0, 0], [0, 0, 0, 2], D, bank).D
    assert cluster_distances(D, bank.labels, 2).tolist() == [[0, 4], [4, 0]]
    # bin 0 (cluster 0) to bank (1, 0): gamma 3 plus d_01 = 4
    assert Dt[0, 6] == 7 and Dt[6, 0] == 7
    assert Dt[1, 4] == 1 and Dt[1, 5] == 2
    # bank to bank: gamma + gamma' + d, zero on the diagonal
    assert Dt[4, 5] == 3 and Dt[4, 6] == 1 + 3 + 4 and Dt[5, 5] == 0


def test_emd_star_identity_zero():
    D = random_metric(np.random.default_rng(3), 5)
    assert emd_star_exact([1, 2, 0, 1, 3], [1, 2, 0, 1, 3], D, BankConfig.single(5)) == 0


def test_metric_bound_checked():
    D = np.array([[0, 10], [10, 0]])
    with pytest.raises(ValueError, match="below half"):
        emd_star_exact([1, 0], [0, 2], D, BankConfig(np.array([0, 0]), 1, np.array([[4]])), metric=True)


def test_single_bank_matches_emd_hat_with_half_max():
    # one global bank at gamma = max(D) / 2 charges max(D)/2 per unit of mismatch, the same as EMD-hat at alpha = 1/2
    rng = np.random.default_rng(5)
    for _ in range(20):
        D = random_metric(rng, 5) * 2
        P, Q = rng.integers(0, 5, 5), rng.integers(0, 5, 5)
        g = int(D.max()) // 2
        star = emd_star_exact(P, Q, D, BankConfig.single(5, g))
        assert star == emd_hat_exact(P, Q, D, Fraction(1, 2))


def test_emd_star_matches_oracle_on_extended():
    rng = np.random.default_rng(11)
    for _ in range(30):
        D = random_metric(rng, 4)
        labels = np.array([0, 0, 1, 1])
        P, Q = rng.integers(0, 4, 4), rng.integers(0, 4, 4)
        bank = BankConfig(labels, 2)
        ext = extend_for_emd_star(P, Q, D, bank)
        ref = lp_oracle(ext.supplies, ext.demands, ext.D).cost / ext.scale
        assert emd_star_exact(P, Q, D, bank) == ref


def two_cluster_instance():
    """Two 10-node cliques joined by two bridges, unit costs inside, 5 on bridges."""
    n = 20
    D0 = np.full((n, n), 10**3, np.int64)
    for c in (range(10), range(10, 20)):
        for i in c:
            for j in c:
                D0[i, j] = 0 if i == j else 1
    for a, b in ((8, 10), (9, 11)):
        D0[a, b] = D0[b, a] = 5
    # all-pairs shortest paths
    D = D0.copy()
    for k in range(n):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    return D


def test_two_cluster_locality_ordering():
    D = two_cluster_instance()
    G1 = np.zeros(20)
    G1[:10] = 1
    G2 = G1.copy()
    G2[[10, 11]] = 1  # mass spreads across the bridges
    G3 = G1.copy()
    G3[[17, 19]] = 1  # same mass placed deep in the far cluster
    bank = BankConfig.per_bin(20, 2)
    assert emd_star_exact(G1, G2, D, bank) < emd_star_exact(G1, G3, D, bank)
    assert abs(emd_hat(G1, G2, D, 1) - emd_hat(G1, G3, D, 1)) <= 1e-9
    assert abs(emd_alpha(G1, G2, D, 1) - emd_alpha(G1, G3, D, 1)) <= 1e-9


def _triple_instance(seed, single_cluster=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    n_c = 1 if single_cluster else int(rng.integers(1, n + 1))
    labels = np.concatenate([np.arange(n_c), rng.integers(0, n_c, n - n_c)])
    D = random_metric(rng, n)
    # smallest conforming gamma, kept positive so banks never coincide with bins
    half = -(-np.array([D[np.ix_(labels == c, labels == c)].max() for c in range(n_c)]) // 2)
    bank = BankConfig(labels, int(rng.integers(1, 3)), np.maximum(half, 1))
    hs = [rng.integers(0, 4, n) for _ in range(3)]
    return D, bank, hs


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_emd_star_symmetry_and_identity(seed):
    D, bank, (A, B, _) = _triple_instance(seed)
    ab = emd_star_exact(A, B, D, bank, metric=True)
    assert ab == emd_star_exact(B, A, D, bank, metric=True)
    assert (ab == 0) == np.array_equal(A, B)
    assert emd_star_exact(A, A, D, bank, metric=True) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_emd_star_triangle_single_cluster(seed):
    D, bank, (A, B, C) = _triple_instance(seed, single_cluster=True)
    f = lambda x, y: emd_star_exact(x, y, D, bank, metric=True)  # noqa: E731
    assert f(A, C) <= f(A, B) + f(B, C)


@pytest.mark.parametrize("P, Q", list(itertools.product([[0, 0], [2, 1]], [[0, 0], [1, 3]])))
def test_emd_star_small_cases_match_oracle(P, Q):
    D = np.array([[0, 3], [3, 0]])
    bank = BankConfig.single(2)
    ext = extend_for_emd_star(P, Q, D, bank)
    ref = lp_oracle(ext.supplies, ext.demands, ext.D).cost / ext.scale if ext.supplies.sum() else 0
    assert emd_star_exact(P, Q, D, bank) == ref
