import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import graphs, k4, random_er
from sword.graph import GraphSnapshot
from sword.kpm import (
    MomentVector,
    ProbeSet,
    chebyshev_probe_traces,
    dos_histogram,
    dos_histograms,
    estimate_moments,
    estimate_stream_moments,
    exact_moments,
    gamma_discrepancy,
    jackson_coefficients,
    jackson_damp,
    moment_distance,
    read_moment_cache,
    verify_wasserstein_bound,
    write_moment_cache,
)


def snap(n, edges, t=1):
    return GraphSnapshot.from_edges(t, n, edges)


EDGE = (2, [(0, 1)])


# estimation ----------------------------------------------------------------


def test_zeroth_moment_is_one():
    g = snap(*random_er(30, 0.2, 1))
    Z = ProbeSet(R=7, seed=3).draw(g.n, 1)
    assert np.sum(Z * Z) / (g.n * 7) == 1.0
    assert set(np.unique(Z)) == {-1.0, 1.0}


def test_empty_graph_estimate_is_exact():
    # zero operator: v_1 = 0, so odd moments vanish and v_2 = -z gives T_j(0) exactly
    m = estimate_moments(snap(3, []), K=6, probes=ProbeSet(R=4, seed=0))
    assert m.values.tolist() == [0.0, -1.0, 0.0, 1.0, 0.0, -1.0]


def test_k4_second_moment_concentrates():
    m = estimate_moments(snap(*k4()), K=2, probes=ProbeSet(R=3000, seed=11))
    assert abs(m.values[1] - (-1 / 3)) <= 0.05


@given(graphs(max_n=12), st.integers(0, 1000), st.integers(1, 5))
def test_estimate_matches_matrix_power_oracle(g, seed, R):
    n, edges = g
    s = snap(n, edges)
    probes = ProbeSet(R=R, seed=seed)
    Z = probes.draw(n, 1)
    ref = oracles.hutchinson_moments(oracles.dense_shifted_laplacian(n, edges), Z, 8)
    np.testing.assert_allclose(estimate_moments(s, 8, probes).values, ref, atol=1e-10)


def test_probe_traces_match_single_probe_loop():
    g = snap(*random_er(20, 0.3, 2))
    Z = ProbeSet(R=3, seed=1).draw(20, 1)
    total = sum(chebyshev_probe_traces(g.operator, Z[:, [r]], 5) for r in range(3))
    np.testing.assert_allclose(chebyshev_probe_traces(g.operator, Z, 5), total, atol=1e-12)


def test_estimation_is_deterministic_and_policy_dependent():
    gs = [snap(*random_er(40, 0.1, s), t=s + 1) for s in range(4)]
    a = estimate_stream_moments(gs, 10, ProbeSet(30, 5))
    b = estimate_stream_moments(gs, 10, ProbeSet(30, 5))
    assert np.array_equal(a, b)
    shared = estimate_stream_moments(gs, 10, ProbeSet(30, 5, "shared"))
    assert not np.array_equal(a, shared)
    assert np.array_equal(shared, estimate_stream_moments(gs, 10, ProbeSet(30, 5, "shared")))


def test_parallel_schedule_independent():
    pytest.importorskip("joblib")
    gs = [snap(*random_er(30, 0.2, s), t=s + 1) for s in range(5)]
    a = estimate_stream_moments(gs, 6, ProbeSet(8, 1), n_jobs=1)
    b = estimate_stream_moments(gs, 6, ProbeSet(8, 1), n_jobs=2)
    assert np.array_equal(a, b)


def test_unbiased_over_seeds():
    n, R, seeds = 100, 30, 200
    g = snap(*random_er(n, 0.1, 0))
    exact = exact_moments(g, 8).values
    mean = np.mean([estimate_moments(g, 8, ProbeSet(R, s)).values for s in range(seeds)], axis=0)
    # tolerance 3/sqrt(seeds n R) per coordinate, with the O(1) Frobenius constant for T_j
    assert np.all(np.abs(mean - exact) <= 3 / math.sqrt(seeds * n * R) * 1.5)


def test_bad_probe_policy():
    with pytest.raises(ValueError):
        ProbeSet(R=0)
    with pytest.raises(ValueError):
        ProbeSet(sharing="sometimes")


# exact moments and distances ----------------------------------------------


def test_exact_moment_examples(frozen):
    e = exact_moments(snap(*EDGE), 6).values
    np.testing.assert_allclose(e, [0, 1, 0, 1, 0, 1], atol=1e-12)
    kk = exact_moments(snap(*k4()), 2).values
    assert abs(kk[0]) <= 1e-10 and kk[1] == pytest.approx(-1 / 3, abs=1e-12)
    np.testing.assert_allclose(exact_moments(snap(3, []), 4).values, [0, -1, 0, 1], atol=1e-12)
    for case in frozen["exact_moments_K12"].values():
        got = exact_moments(snap(case["n"], case["edges"]), 12).values
        np.testing.assert_allclose(got, case["moments"], atol=1e-10)


@given(graphs())
def test_exact_first_moment_zero_and_bounded(g):
    m = exact_moments(snap(*g), 10).values
    assert abs(m[0]) <= 1e-10
    assert np.all(np.abs(m) <= 1 + 1e-12)


def test_distance_examples():
    a, b = exact_moments(snap(*EDGE), 2), exact_moments(snap(*k4()), 2)
    assert moment_distance(a, b, 2) == pytest.approx(4 / 3)
    assert gamma_discrepancy(a, b, 2) == pytest.approx(2 / 3)
    assert moment_distance(a, a, 2) == 0 and gamma_discrepancy(a, a, 2) == 0
    assert moment_distance(a, b, 1) == pytest.approx(0, abs=1e-10)
    with pytest.raises(IndexError):
        moment_distance(a, b, 3)


vec = st.lists(st.floats(-1, 1, allow_nan=False), min_size=8, max_size=8).map(np.array)


@given(vec, vec, st.integers(1, 8))
def test_gamma_dominated_by_dk(a, b, k):
    assert gamma_discrepancy(a, b, k) <= moment_distance(a, b, k) + 1e-15
    assert moment_distance(a, b, k) == moment_distance(b, a, k)


# Jackson and DOS -----------------------------------------------------------


def test_jackson_coefficients(frozen):
    np.testing.assert_allclose(jackson_coefficients(8), frozen["jackson_K8"], atol=1e-14)
    assert jackson_coefficients(5)[0] == 1.0
    assert jackson_coefficients(1)[1] == pytest.approx(0.0, abs=1e-15)
    g = jackson_coefficients(50)
    assert np.all(np.diff(g) <= 1e-15) and g[-1] >= 0


def test_jackson_damp_types():
    mv = MomentVector(np.ones(4))
    out = jackson_damp(mv)
    assert isinstance(out, MomentVector)
    np.testing.assert_allclose(out.values, jackson_coefficients(4)[1:])
    np.testing.assert_allclose(jackson_damp(np.ones((3, 4)))[2], jackson_coefficients(4)[1:])


def test_dos_passthrough_and_domain():
    m = np.array([0.1, -0.2, 0.3])
    assert np.array_equal(dos_histogram(m, math.inf).masses, m)
    assert dos_histogram(m).edges is None
    for bad in (1, 0, 2.5):
        with pytest.raises(ValueError):
            dos_histogram(m, bad)


def test_dos_empty_graph_mass_central(frozen):
    m = jackson_damp(exact_moments(snap(3, []), 50))
    h = dos_histogram(m, 8)
    assert h.masses[3] + h.masses[4] >= 0.8
    np.testing.assert_allclose(h.masses, frozen["dos_empty_K50_8bins"], atol=1e-9)
    assert len(h.edges) == 9


@given(graphs(), st.sampled_from([2, 8, 33, 128]))
def test_dos_masses_sum_to_one(g, bins):
    m = jackson_damp(exact_moments(snap(*g), 20))
    assert abs(dos_histogram(m, bins).masses.sum() - 1) <= 1e-6
    rows = dos_histograms(np.vstack([m.values, m.values]), bins)
    assert np.allclose(rows.sum(axis=1), 1)


# bound and cache -----------------------------------------------------------


def test_bound_examples():
    g = snap(*random_er(30, 0.2, 4))
    rep = verify_wasserstein_bound(g, g, 8)
    assert rep.w1 == pytest.approx(0, abs=1e-12) and rep.gamma == 0 and rep.bound_ok
    rep = verify_wasserstein_bound(snap(*EDGE), snap(*k4()), 7)
    assert rep.bound_ok and rep.bound > 2


def test_moment_cache_roundtrip(tmp_path):
    mom = np.random.default_rng(0).uniform(-1, 1, (5, 50))
    p = tmp_path / "m.csv"
    write_moment_cache(p, [1, 2, 3, 5, 8], mom)
    t, back = read_moment_cache(p)
    assert t.tolist() == [1, 2, 3, 5, 8]
    assert np.array_equal(back, mom)
    assert p.read_text().splitlines()[0].split(",")[:3] == ["t", "mu_1", "mu_2"]
    assert len(p.read_text().splitlines()[0].split(",")) == 51
