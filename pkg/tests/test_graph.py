import json
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import wasserstein_distance

import oracles
from conftest import graphs, k4
from sword.graph import (
    DenseLimitError,
    GraphSnapshot,
    SnapshotFormatError,
    dump_snapshot_stream,
    exact_spectrum,
    extract_features,
    load_snapshot_stream,
    matvec,
    w1_sorted,
)


def snap(n, edges, t=1):
    return GraphSnapshot.from_edges(t, n, edges)


def write_lines(tmp_path, lines):
    p = tmp_path / "s.jsonl"
    p.write_text("\n".join(lines) + "\n")
    return p


# loading -------------------------------------------------------------------


def test_load_dedups_and_drops_self_loops(tmp_path, caplog):
    p = write_lines(tmp_path, ['{"t":1,"n":3,"edges":[[0,1],[1,0],[2,2]]}'])
    with caplog.at_level(logging.WARNING):
        (g,) = load_snapshot_stream(p)
    assert g.m == 1
    assert g.edges.tolist() == [[0, 1]]
    assert "1 self-loop" in caplog.text


def test_load_empty_edge_list(tmp_path):
    (g,) = load_snapshot_stream(write_lines(tmp_path, ['{"t":1,"n":5,"edges":[]}']))
    assert g.n == 5 and g.m == 0
    assert g.degree.tolist() == [0] * 5


def test_load_rejects_repeated_timestep(tmp_path):
    p = write_lines(tmp_path, ['{"t":1,"n":2,"edges":[]}', '{"t":1,"n":2,"edges":[]}'])
    with pytest.raises(SnapshotFormatError, match="non-increasing timestep"):
        load_snapshot_stream(p)


def test_load_reports_line_number(tmp_path):
    p = write_lines(tmp_path, ['{"t":1,"n":2,"edges":[]}', '{"t":2,"n":2,'])
    with pytest.raises(SnapshotFormatError, match="line 2"):
        load_snapshot_stream(p)


def test_load_rejects_out_of_range_endpoint(tmp_path):
    p = write_lines(tmp_path, ['{"t":1,"n":2,"edges":[[0,2]]}'])
    with pytest.raises(ValueError):
        load_snapshot_stream(p)


def test_dump_roundtrip(tmp_path):
    gs = [snap(4, [(0, 1), (2, 3)], t=1), snap(4, [(1, 2)], t=3)]
    p = tmp_path / "out.jsonl"
    dump_snapshot_stream(gs, p)
    back = load_snapshot_stream(p)
    assert [g.t for g in back] == [1, 3]
    assert [g.edges.tolist() for g in back] == [g.edges.tolist() for g in gs]
    assert json.loads(p.read_text().splitlines()[0])["n"] == 4


def test_constructor_rejects_raw_duplicates():
    with pytest.raises(ValueError):
        GraphSnapshot(t=1, n=3, edges=np.array([[0, 1], [1, 0]]))


# operator ------------------------------------------------------------------


def test_matvec_single_edge():
    assert matvec(snap(2, [(0, 1)]).operator, np.array([1.0, 0.0])).tolist() == [0.0, -1.0]


def test_matvec_zero_and_isolated():
    g = snap(6, [(0, 1), (1, 2), (3, 4)])
    assert np.all(matvec(g.operator, np.zeros(6)) == 0)
    assert matvec(snap(1, []).operator, np.array([5.0])).tolist() == [0.0]


def test_matvec_dimension_error():
    with pytest.raises(ValueError, match="dimension"):
        matvec(snap(3, [(0, 1)]).operator, np.ones(4))


@given(graphs(max_n=50), st.integers(0, 2**32 - 1))
def test_matvec_matches_dense_reference(g, seed):
    n, edges = g
    x = np.random.default_rng(seed).standard_normal(n)
    ref = oracles.dense_shifted_laplacian(n, edges) @ x
    assert np.max(np.abs(snap(n, edges).operator.matvec(x) - ref), initial=0.0) <= 1e-12


@given(graphs(), st.integers(0, 2**32 - 1))
def test_rayleigh_quotient_bounded(g, seed):
    n, edges = g
    x = np.random.default_rng(seed).standard_normal(n)
    assert abs(x @ snap(n, edges).operator.matvec(x)) <= x @ x + 1e-12


@given(graphs())
def test_spectrum_trace_zero_and_range(g):
    n, edges = g
    eig = exact_spectrum(snap(n, edges))
    assert abs(eig.sum()) <= 1e-8 * n
    assert eig.min() >= -1 - 1e-8 and eig.max() <= 1 + 1e-8
    assert np.all(np.diff(eig) >= 0)


def test_spectrum_examples():
    np.testing.assert_allclose(exact_spectrum(snap(2, [(0, 1)])), [-1, 1], atol=1e-12)
    np.testing.assert_allclose(exact_spectrum(snap(*k4())), [-1, 1 / 3, 1 / 3, 1 / 3], atol=1e-12)
    assert exact_spectrum(snap(3, [])).tolist() == [0.0, 0.0, 0.0]


def test_spectrum_dense_limit():
    with pytest.raises(DenseLimitError):
        exact_spectrum(snap(30, []), limit=10)


# W1 ------------------------------------------------------------------------


def test_w1_examples(frozen):
    assert w1_sorted([0.1, 0.5], [0.1, 0.5]) == 0
    assert w1_sorted([-1, 1], [0, 0]) == pytest.approx(1.0)
    assert w1_sorted([-1, 1, 1], [-1, -1, 1]) == pytest.approx(2 / 3)
    for case in frozen["w1"]:
        assert w1_sorted(case["a"], case["b"]) == pytest.approx(case["w1"], abs=1e-12)


def test_w1_empty_raises():
    with pytest.raises(ValueError):
        w1_sorted([], [0.0])


spectra = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=12)


@given(spectra, spectra)
def test_w1_matches_cdf_oracle_and_scipy(a, b):
    got = w1_sorted(a, b)
    assert got == pytest.approx(oracles.w1_cdf(a, b), abs=1e-10)
    assert got == pytest.approx(wasserstein_distance(a, b), abs=1e-10)
    assert got == pytest.approx(w1_sorted(b, a), abs=1e-12)
    assert 0 <= got <= 2 + 1e-12


@given(spectra, spectra, spectra)
def test_w1_triangle(a, b, c):
    assert w1_sorted(a, c) <= w1_sorted(a, b) + w1_sorted(b, c) + 1e-10


# features ------------------------------------------------------------------


def test_features_examples():
    assert extract_features(snap(5, [])).tolist() == [5, 0, 0, 0, 0, 0, 5, 0]
    np.testing.assert_allclose(extract_features(snap(*k4())), [4, 6, 1, 3, 3, 0, 1, 1])
    f = extract_features(snap(2, [(0, 1)]))
    assert f[2] == 1.0 and f[6] == 1 and f[7] == 0.0


@given(graphs())
def test_features_finite_and_eight(g):
    f = extract_features(snap(*g))
    assert f.shape == (8,) and np.all(np.isfinite(f))
    assert 0 <= f[7] <= 1 + 1e-12
