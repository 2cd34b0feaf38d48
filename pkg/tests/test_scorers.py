import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from ctxrec.data import SocialGraph, build_frequency_matrix
from ctxrec.geo import equirectangular_km, haversine_km
from ctxrec.scorers import (AmcTransitionGraph, ContextScore, ContextUnavailable, SocialPowerLawModel,
                            amc_score, build_transition_graph, categorical_score, estimate_beta,
                            fcf_score, fit_categorical, fit_fcf, fit_geo_kde, fit_mgm, fit_social,
                            geo_score, mgm_score, silverman_bandwidth, social_score, weighted_std)
from ctxrec.scorers.base import power_law_cdf, power_law_exponent
from ctxrec.scorers.kde import gaussian_kernel_2d

from conftest import make_dataset

E1 = math.e - 1.0


# ---------------------------------------------------------------- ContextScore

def test_context_score_validation():
    assert ContextScore(0.5, "G").value == 0.5
    with pytest.raises(ValueError):
        ContextScore(-1e-9, "G")
    with pytest.raises(ValueError):
        ContextScore(float("nan"), "T")
    with pytest.raises(ValueError):
        ContextScore(0.1, "Q")


# ---------------------------------------------------------------- KDE

def test_kde_single_point_floor():
    d = make_dataset([(0, 0, 1), (0, 0, 2), (0, 0, 3)])
    m = fit_geo_kde(build_frequency_matrix(d), d)
    assert m.h_x[0] == m.h_y[0] == 0.01
    assert m.floored[0]
    # score at the support point is the kernel peak 1/(2 pi h h)
    assert abs(m.scores(0, [0])[0] - 1.0 / (2 * math.pi * 0.01 * 0.01)) < 1e-6


def test_kde_one_support_point_score():
    d = make_dataset([(0, 0, 1)])
    m = fit_geo_kde(build_frequency_matrix(d), d)
    s = geo_score(m, 0, 0)
    assert s.context_tag == "G"
    assert s.value == pytest.approx(1.0 / (2 * math.pi * m.h_x[0] * m.h_y[0]), rel=1e-12)


def test_bandwidth_shrinks_with_n():
    h = silverman_bandwidth(2.0, np.arange(1, 50))
    assert np.all(np.diff(h) < 0)
    assert silverman_bandwidth(0.0, 10) == 0.01


def test_kde_two_points_brute_force():
    coords = {0: (40.0, -74.0), 1: (40.02, -73.97), 2: (40.01, -73.99)}
    d = make_dataset([(0, 0, 1), (0, 0, 2), (0, 1, 3)], coords=coords)
    m = fit_geo_kde(build_frequency_matrix(d), d)
    # independent direct summation with the fitted bandwidths
    lat0 = (2 * 40.0 + 40.02) / 3
    lon0 = (2 * -74.0 + -73.97) / 3
    def xy(lat, lon):
        return equirectangular_km(lat, lon, lat0, lon0)
    pts = [(xy(*coords[0]), 2.0), (xy(*coords[1]), 1.0)]
    hx, hy = m.h_x[0], m.h_y[0]
    q = xy(*coords[2])
    ref = 0.0
    for (px, py), w in pts:
        ref += w * math.exp(-0.5 * (((q[0] - px) / hx) ** 2 + ((q[1] - py) / hy) ** 2)) / (
            2 * math.pi * hx * hy)
    ref /= 3.0
    assert abs(m.scores(0, [2])[0] - ref) < 1e-12
    # hand bandwidths: silverman on the reliability-weighted std over 2 support points
    x = np.array([pts[0][0][0], pts[1][0][0]])
    assert hx == pytest.approx(max(1.06 * weighted_std(x, [2, 1]) * 2 ** -0.2, 0.01), rel=1e-12)


def test_kde_far_query_vanishes():
    coords = {0: (40.0, -74.0), 1: (40.001, -74.001), 2: (45.0, -70.0)}
    d = make_dataset([(0, 0, 1), (0, 1, 2)], coords=coords)
    m = fit_geo_kde(build_frequency_matrix(d), d)
    assert m.scores(0, [2])[0] < 1e-12


def test_kde_homogeneous_in_counts(small_synthetic):
    R = build_frequency_matrix(small_synthetic)
    doubled = make_dataset(
        [(int(u), int(l), int(t)) for u, l, t in zip(small_synthetic.users, small_synthetic.pois,
                                                      small_synthetic.timestamps)] * 2)
    doubled = doubled.__class__.build(
        small_synthetic.user_ids, small_synthetic.poi_ids, small_synthetic.poi_lat,
        small_synthetic.poi_lon, doubled.users, doubled.pois, doubled.timestamps)
    R2 = build_frequency_matrix(doubled)
    assert R2.total == 2 * R.total
    m1, m2 = fit_geo_kde(R, small_synthetic), fit_geo_kde(R2, doubled)
    for u in (0, 5, 17):
        s1, s2 = m1.scores(u), m2.scores(u)
        assert np.allclose(s1, s2, rtol=1e-10, atol=0)
        assert np.array_equal(np.argsort(-s1, kind="stable")[:50], np.argsort(-s2, kind="stable")[:50])


def test_weighted_std_scale_invariant():
    v, w = np.array([0.0, 1.0, 5.0]), np.array([1.0, 2.0, 3.0])
    assert weighted_std(v, w) == pytest.approx(weighted_std(v, 7 * w), rel=1e-13)
    # unit weights reduce to the ordinary n-1 sample std
    assert weighted_std(v, np.ones(3)) == pytest.approx(np.std(v, ddof=1), rel=1e-13)
    assert weighted_std([3.0], [4.0]) == 0.0


def test_universal_kde_shares_bandwidth(small_synthetic):
    R = build_frequency_matrix(small_synthetic)
    m = fit_geo_kde(R, small_synthetic, mode="universal")
    assert np.unique(m.h_x).size == 1 and np.unique(m.h_y).size == 1
    assert m.mode == "universal"
    with pytest.raises(ValueError):
        fit_geo_kde(R, small_synthetic, mode="bogus")


def test_kde_unknown_ids():
    d = make_dataset([(0, 0, 1)])
    m = fit_geo_kde(build_frequency_matrix(d), d)
    with pytest.raises(IndexError):
        geo_score(m, 1, 0)
    with pytest.raises(IndexError):
        geo_score(m, 0, 5)


def test_gaussian_kernel_integrates_to_one():
    g = np.linspace(-8, 8, 801)
    X, Y = np.meshgrid(g, g)
    k = gaussian_kernel_2d(X, Y, 0.7, 1.3)
    assert abs(k.sum() * (g[1] - g[0]) ** 2 - 1.0) < 1e-6


# ---------------------------------------------------------------- power laws

def test_power_law_closed_forms():
    assert power_law_cdf(3.0, 2.0) == 0.75
    assert power_law_cdf(1.0, 2.0) == 0.5
    assert power_law_cdf(0.0, 2.0) == 0.0
    assert power_law_exponent(2.0, 2) == 2.0
    assert power_law_exponent(0.0, 5) is None
    assert np.all(power_law_cdf(np.array([0.0, 3.0]), None) == 0.0)


def test_crafted_e_minus_one_exponent():
    # two pairs with frequency e-1: ln(1 + e - 1) = 1 each, so beta = 1 + 2/2
    log_sum = math.fsum(np.log1p([E1, E1]))
    assert abs(power_law_exponent(log_sum, 2) - 2.0) < 1e-12
    m = SocialPowerLawModel(power_law_exponent(log_sum, 2), sp.csr_matrix(np.array([[E1, E1]])))
    assert abs(m.scores(0, [0])[0] - (1.0 - math.e ** -1.0)) < 1e-12


@given(st.floats(1.01, 10.0), st.floats(0.0, 1e6), st.floats(0.0, 1e6))
def test_power_law_range_and_monotone(e, x1, x2):
    lo, hi = min(x1, x2), max(x1, x2)
    a, b = power_law_cdf(lo, e), power_law_cdf(hi, e)
    assert 0.0 <= a <= b <= 1.0
    # strictly below 1 whenever the tail mass is representable next to 1
    if (1.0 + hi) ** (1.0 - e) > 1e-15:
        assert b < 1.0
    if hi - lo > 1e-6 * (1 + hi) and (1.0 + lo) ** (1.0 - e) > 1e-12:
        assert a < b


# ---------------------------------------------------------------- social

def _social_toy():
    # users 0-1 friends, 1-2 friends; counts below
    d = make_dataset([(0, 0, 1), (1, 0, 1), (1, 0, 2), (1, 1, 3), (2, 2, 1), (2, 2, 2), (2, 2, 3)],
                     social=[(0, 1), (1, 2)])
    return d, build_frequency_matrix(d)


def test_beta_hand_oracle():
    d, R = _social_toy()
    # x[u,l] = sum of friends' counts
    x = np.array([[2, 1, 0], [1, 0, 3], [2, 1, 0]], dtype=float)
    ref = 1.0 + 9 / math.fsum(np.log1p(x).ravel())
    assert abs(estimate_beta(R, d.social) - ref) < 1e-12
    m = fit_social(R, d.social)
    for u in range(3):
        assert np.allclose(m.scores(u), 1 - (1 + x[u]) ** (1 - ref), atol=1e-15, rtol=1e-12)
    assert social_score(m, 1, 2).context_tag == "S"


def test_social_degenerate_no_friends():
    d = make_dataset([(0, 0, 1), (1, 1, 1)])
    R = build_frequency_matrix(d)
    with np.errstate(all="raise"):
        m = fit_social(R, d.social)
        assert m.degenerate and estimate_beta(R, d.social) is None
        assert np.all(m.scores(0) == 0.0)
        assert social_score(m, 1, 0).value == 0.0


def test_beta_decreases_when_frequency_grows():
    d, R = _social_toy()
    b0 = estimate_beta(R, d.social)
    d2 = make_dataset([(int(u), int(l), int(t)) for u, l, t in zip(d.users, d.pois, d.timestamps)]
                      + [(2, 2, 9)], social=[(0, 1), (1, 2)])
    assert estimate_beta(build_frequency_matrix(d2), d2.social) < b0


# ---------------------------------------------------------------- categorical

def test_categorical_hand_oracle():
    d = make_dataset([(0, 0, 1), (0, 0, 2), (1, 0, 1), (1, 1, 2)], categories=[0, 0])
    m = fit_categorical(build_frequency_matrix(d), d)
    assert m.B.tolist() == [[2.0], [2.0]] and m.popularity.tolist() == [3.0, 1.0]
    assert m.H.tolist() == [[3.0, 1.0]]
    assert m.g(0, [0])[0] == 6.0
    gamma = 1.0 + 4.0 / math.fsum([math.log(7), math.log(3), math.log(7), math.log(3)])
    assert abs(m.gamma - gamma) < 1e-12
    ref = 1.0 - 7.0 ** (1.0 - gamma)
    assert abs(categorical_score(m, 0, 0).value - ref) < 1e-12


def test_categorical_needs_categories():
    d = make_dataset([(0, 0, 1)])
    with pytest.raises(ContextUnavailable, match="categorical context unavailable"):
        fit_categorical(build_frequency_matrix(d), d)


def test_categorical_chunking_invariant(small_synthetic):
    R = build_frequency_matrix(small_synthetic)
    a = fit_categorical(R, small_synthetic, chunk=7)
    b = fit_categorical(R, small_synthetic)
    assert abs(a.gamma - b.gamma) < 1e-12
    s = a.scores(3)
    assert np.all((s >= 0) & (s < 1))


# ---------------------------------------------------------------- FCF

def test_fcf_identical_friend():
    d = make_dataset([(0, 0, 1), (0, 1, 2), (0, 1, 3), (0, 1, 4),
                      (1, 0, 1), (1, 1, 2), (1, 1, 3), (1, 1, 4)], social=[(0, 1)])
    R = build_frequency_matrix(d)
    s = fcf_score(R, d.social, 0, 1)
    assert s.context_tag == "FCF" and s.value == pytest.approx(3.0, abs=1e-12)
    m = fit_fcf(R, d.social)
    assert m.similarity(0, 1) == pytest.approx(1.0, abs=1e-15)


def test_fcf_no_friends_zero():
    d = make_dataset([(0, 0, 1), (1, 0, 1)])
    assert fcf_score(build_frequency_matrix(d), d.social, 0, 0).value == 0.0


def test_fcf_similarity_scale_invariant():
    d = make_dataset([(0, 0, 1), (0, 1, 2), (1, 0, 1), (1, 2, 2)], social=[(0, 1)])
    d3 = make_dataset([(0, 0, 1), (0, 1, 2)] + [(1, 0, t) for t in range(3)]
                      + [(1, 2, 10 + t) for t in range(3)], social=[(0, 1)])
    s1 = fit_fcf(build_frequency_matrix(d), d.social).similarity(0, 1)
    s3 = fit_fcf(build_frequency_matrix(d3), d3.social).similarity(0, 1)
    assert s1 == pytest.approx(s3, abs=1e-15)


# ---------------------------------------------------------------- AMC

def test_abab_counts():
    d = make_dataset([(0, 0, 1), (0, 1, 2), (0, 0, 3), (0, 1, 4)])
    g = build_transition_graph(d)
    T = g.tcount.toarray()
    assert T[0, 1] == 2 and T[1, 0] == 1
    assert g.ocount.tolist() == [2.0, 1.0]


def test_single_checkin_no_edges():
    d = make_dataset([(0, 0, 1), (1, 1, 1)])
    assert build_transition_graph(d).tcount.nnz == 0


def test_single_edge_score():
    d = make_dataset([(0, 0, 1), (0, 1, 2), (1, 2, 1)])
    g = build_transition_graph(d)
    assert amc_score(g, [0], 1).value == 1.0
    assert amc_score(g, [0], 2).value == 0.0
    assert amc_score(g, [0], 0).value == 0.0


def test_alpha_zero_equal_weights():
    g = AmcTransitionGraph(sp.csr_matrix((3, 3)), np.zeros(3), 0.0)
    assert np.all(g.history_weights(5) == 1.0)
    w = AmcTransitionGraph(sp.csr_matrix((3, 3)), np.zeros(3), 0.1).history_weights(3)
    assert w.tolist() == [2 ** -0.2, 2 ** -0.1, 1.0]


def test_amc_large_alpha_is_first_order():
    d = make_dataset([(0, 0, 1), (0, 1, 2), (0, 2, 3), (0, 1, 4), (0, 0, 5)])
    g = build_transition_graph(d, alpha=200.0)
    tp = g.transition_probs.toarray()
    assert np.allclose(g.scores([2, 0, 1]), tp[1], atol=1e-12)


def _random_graph(rng, n):
    T = (rng.random((n, n)) < 0.3) * rng.integers(1, 5, (n, n))
    T[np.arange(n), rng.integers(0, n, n)] += 1      # every node has an outgoing edge
    T = sp.csr_matrix(T.astype(float))
    return AmcTransitionGraph(T, np.asarray(T.sum(axis=1)).ravel(), float(rng.uniform(0, 2)))


def test_amc_rows_normalised(rng):
    for _ in range(20):
        g = _random_graph(rng, 12)
        assert np.allclose(np.asarray(g.transition_probs.sum(axis=1)).ravel(), 1.0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 15))
def test_amc_scores_sum_to_one(seed, hist_len):
    rng = np.random.default_rng(seed)
    g = _random_graph(rng, int(rng.integers(2, 30)))
    hist = rng.integers(0, g.n_pois, hist_len)
    assert abs(g.scores(hist).sum() - 1.0) < 1e-9


def test_amc_empty_history():
    g = AmcTransitionGraph(sp.csr_matrix((2, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        g.scores([])


# ---------------------------------------------------------------- MGM

def test_mgm_single_point():
    d = make_dataset([(0, 0, 1), (0, 0, 2)], coords={0: (40.0, -74.0), 1: (40.05, -74.0),
                                                     2: (40.1, -74.0)})
    m = fit_mgm(build_frequency_matrix(d), d)
    assert mgm_score(m, 0, 0).value == 1.0
    s = m.scores(0, [0, 1, 2])
    assert s[0] > s[1] > s[2] > 0


def test_mgm_two_center_mixture():
    # centre A (8 visits around 40.0,-74.0), centre B (2 visits ~ 50 km north)
    coords = {0: (40.0, -74.0), 1: (40.45, -74.0), 2: (40.2, -74.0)}
    d = make_dataset([(0, 0, t) for t in range(8)] + [(0, 1, 100 + t) for t in range(2)], coords=coords)
    m = fit_mgm(build_frequency_matrix(d), d)
    clat, clon, frac, sig = m.centers(0)
    assert frac.tolist() == [0.8, 0.2]
    assert sig.tolist() == [0.5, 0.5]      # single-location centres hit the floor
    # hand mixture with sigma = 1 km centres
    from ctxrec.scorers import MgmModel
    hand = MgmModel(m.poi_lat, m.poi_lon, np.array([0, 2]), clat, clon, frac, np.array([1.0, 1.0]))
    dA = haversine_km(40.2, -74.0, 40.0, -74.0)
    dB = haversine_km(40.2, -74.0, 40.45, -74.0)
    ref = 0.8 * math.exp(-dA ** 2 / 2) + 0.2 * math.exp(-dB ** 2 / 2)
    assert abs(hand.scores(0, [2])[0] - ref) < 1e-9
    # query at centre B itself
    ref_b = 0.8 * math.exp(-haversine_km(40.45, -74, 40, -74) ** 2 / 2) + 0.2
    assert abs(hand.scores(0, [1])[0] - ref_b) < 1e-9


def test_mgm_theta_fallback():
    coords = {i: (40.0 + i, -74.0) for i in range(3)}
    d = make_dataset([(0, 0, 1), (0, 1, 2), (0, 2, 3)], coords=coords)
    m = fit_mgm(build_frequency_matrix(d), d, d_max=1.0, theta=0.5)
    clat, _, frac, _ = m.centers(0)
    assert len(frac) == 1 and frac[0] == 1.0
    assert clat[0] == pytest.approx(41.0)


def test_mgm_in_unit_interval(small_synthetic):
    R = build_frequency_matrix(small_synthetic)
    m = fit_mgm(R, small_synthetic)
    for u in range(0, small_synthetic.n_users, 7):
        s = m.scores(u)
        assert np.all((s >= 0) & (s <= 1))
        _, _, frac, _ = m.centers(u)
        assert np.all(frac >= 0.02) and frac.sum() <= 1 + 1e-12


def test_mgm_relabel_invariant():
    coords = {0: (40.0, -74.0), 1: (40.01, -74.0), 2: (40.3, -74.2)}
    d = make_dataset([(0, 0, 1), (0, 1, 2), (0, 2, 3), (0, 2, 4)], coords=coords)
    perm = [2, 0, 1]                 # new index of old POI i
    inv = {perm[i]: coords[i] for i in range(3)}
    d2 = make_dataset([(0, perm[0], 1), (0, perm[1], 2), (0, perm[2], 3), (0, perm[2], 4)], coords=inv)
    a = fit_mgm(build_frequency_matrix(d), d).scores(0)
    b = fit_mgm(build_frequency_matrix(d2), d2).scores(0)
    assert np.allclose(a, b[perm], atol=1e-12)
