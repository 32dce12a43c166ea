from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from chaoslab.applications import counterexample_family, second_chaos_family
from chaoslab.gausspoly import ChaosVector, GaussPoly, evaluate, expectation, fourth_moment_delta, variance
from chaoslab.malliavin import gamma
from chaoslab.montecarlo import (
    DensityEstimate,
    SampleBatch,
    ScoreSampler,
    block_bootstrap_se,
    density_distance,
    distribution_distances,
    entropy_fisher,
    estimate_moments,
    estimate_negative_moment,
    hill_tail_index,
    kde_density,
    sample_batch,
    stein_discrepancy,
    total_variation,
)
from chaoslab.montecarlo.density import phi_derivative
from chaoslab.montecarlo.streams import generator, normal_rows, normals, uniforms
from chaoslab.spectral import negative_moment_quadrature
from chaoslab.testing import random_chaos

N1, N2 = GaussPoly.coordinate(1), GaussPoly.coordinate(2)
H2 = GaussPoly.hermite(2, 1)


@pytest.fixture(scope="module")
def gaussian():
    return sample_batch(N1, 1_000_000, seed=123)


def _batch(x, seed=0):
    x = np.asarray(x, dtype=float)
    return SampleBatch(seed=seed, size=x.shape[0], values=x)


# streams

def test_streams_deterministic_and_uniform():
    u = uniforms(1, 0, 0, 100_000)
    assert np.all((u > 0) & (u < 1))
    np.testing.assert_array_equal(u, uniforms(1, 0, 0, 100_000))
    # any window of the stream is the same numbers
    np.testing.assert_array_equal(uniforms(1, 0, 37, 1000), u[37:1037])
    assert stats.kstest(u, "uniform").pvalue > 1e-4


def test_streams_distinct_keys():
    a = normals(1, 0, 0, 1000)
    assert not np.array_equal(a, normals(2, 0, 0, 1000))
    assert not np.array_equal(a, normals(1, 1, 0, 1000))
    r = normal_rows(5, 0, 10, 3, 4)
    np.testing.assert_array_equal(r.ravel(), normals(5, 0, 40, 12))


def test_chunk_generators_do_not_overlap():
    a = generator(1, 0, 0, 1).standard_normal(1000)
    b = generator(1, 0, 1, 1).standard_normal(1000)
    assert np.intersect1d(a, b).size == 0


# sampling

def test_sample_mean_clt_band(gaussian):
    assert abs(gaussian.values.mean()) <= 4 / math.sqrt(1_000_000)


def test_sampling_determinism_and_workers():
    a = sample_batch(H2, 50_000, seed=9, chunk_rows=4096)
    b = sample_batch(H2, 50_000, seed=9, chunk_rows=4096)
    c = sample_batch(H2, 50_000, seed=9, chunk_rows=4096, workers=4)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.values, c.values)
    assert not np.array_equal(a.values, sample_batch(H2, 50_000, seed=10, chunk_rows=4096).values)


def test_gamma_values_match_symbolic():
    F = N1**2 * N2 + 0.5 * N2 - N1
    b = sample_batch(F, 1000, seed=4, wants=("gamma",))
    X = normal_rows(4, 0, 0, 1000, 2)
    np.testing.assert_allclose(b.values, evaluate(F, X), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(b.gamma_values, evaluate(gamma(F, F), X), rtol=1e-12, atol=1e-12)
    assert np.all(b.gamma_values >= -1e-12)


def test_hessian_spectrum_flag():
    F = second_chaos_family(3)
    b = sample_batch(F, 10, seed=1, wants=("hessian_spectrum",))
    assert b.spectra.shape == (10, 3)
    np.testing.assert_allclose(b.spectra[0], np.full(3, 2 / math.sqrt(6)), rtol=1e-12)


def test_overflow_counted_as_nan():
    F = 1e307 * N1**2
    b = sample_batch(F, 200_000, seed=2)
    assert b.nan_count == int(np.isnan(b.values).sum())
    assert b.nan_count > 0
    assert b.finite_values().size == 200_000 - b.nan_count


def test_sample_batch_errors():
    with pytest.raises(ValueError):
        sample_batch(N1, 0, seed=1)
    with pytest.raises(ValueError):
        sample_batch(N1, 10, seed=1, wants=("bogus",))
    with pytest.raises(ValueError):
        sample_batch(N1, 10, seed=1, chunk_rows=6)


def test_sample_csv():
    b = sample_batch(N1, 3, seed=1, wants=("gamma",))
    lines = b.to_csv().splitlines()
    assert lines[0] == "index,value,gamma"
    assert len(lines) == 4
    assert sample_batch(N1, 3, seed=1).to_csv().splitlines()[0] == "index,value"


# moments

def test_moments_first_chaos(gaussian):
    m = estimate_moments(gaussian)
    se = math.sqrt(96 / 1_000_000)  # sd of N^4 - 6N^2 is about sqrt(96)
    assert abs(m["delta"]) <= 5 * se


def test_moments_family_delta():
    n = 10
    F = second_chaos_family(n)
    b = sample_batch(F, 1_000_000, seed=3)
    m = estimate_moments(b)
    exact = fourth_moment_delta(F)
    assert exact == pytest.approx(12 / n, rel=1e-12)
    # bootstrap-free error bar from the fourth-power terms
    c = b.values - b.values.mean()
    se = np.std(c**4 - 6 * c**2) / math.sqrt(c.size)
    assert abs(m["delta"] - exact) <= 5 * se


def test_moments_symbolic_cross_check():
    rng = np.random.default_rng(5)
    for _ in range(3):
        F = random_chaos(rng, 2, max_index=3, terms=3) + random_chaos(rng, 1, max_index=3, terms=2)
        b = sample_batch(F, 400_000, seed=int(rng.integers(1 << 30)))
        m = estimate_moments(b)
        assert m["variance"] == pytest.approx(variance(F), rel=0.02)
        c = b.values - b.values.mean()
        assert abs(m["mean"] - expectation(F)) <= 5 * b.values.std() / math.sqrt(b.size)
        exact = fourth_moment_delta(F)
        se = np.std(c**4 - 6 * variance(F) * c**2) / math.sqrt(c.size)
        assert abs(m["delta"] - exact) <= 6 * se


def test_moments_vector():
    b = sample_batch(ChaosVector.of([N1, N2]), 200_000, seed=6)
    m = estimate_moments(b)
    assert m["variance"].shape == (2, 2)
    assert abs(m["delta"]) < 0.1


# negative moments

def test_negative_moment_first_chaos():
    est = estimate_negative_moment(sample_batch(N1, 1000, seed=1, wants=("gamma",)), 1)
    assert est.estimate == 1.0
    assert not est.divergent


def test_negative_moment_requires_gamma():
    with pytest.raises(ValueError):
        estimate_negative_moment(sample_batch(N1, 1000, seed=1), 1)


def test_negative_moment_against_quadrature():
    rng = np.random.default_rng(7)
    for trial in range(20):
        q = 1 + trial % 2
        k = int(rng.integers(2 * q + 4, 2 * q + 8))
        lam = rng.uniform(0.3, 1.0, size=k)
        F = sum((GaussPoly.coordinate(i + 1) ** 2 - 1.0) * lam[i] for i in range(k))
        b = sample_batch(F, 100_000, seed=trial, wants=("gamma",))
        est = estimate_negative_moment(b, q)
        ref = negative_moment_quadrature(lam, q).value
        assert abs(est.estimate - ref) <= 5 * est.stderr
        assert not est.divergent


def test_negative_moment_counterexample_explodes():
    # the mean is infinite, so the sample mean is driven by its largest terms
    for n in (2, 5):
        b = sample_batch(counterexample_family(n), 200_000, seed=1, wants=("gamma",))
        est = estimate_negative_moment(b, 1)
        assert est.divergent
        assert est.top_decile_share > 0.9
        assert est.tail_index < 1.0


def test_negative_moment_excludes_nonpositive():
    b = SampleBatch(seed=0, size=4, values=np.zeros(4), gamma_values=np.array([1.0, 0.0, -1.0, 4.0]))
    est = estimate_negative_moment(b, 1)
    assert est.excluded == 2 and est.count == 2
    assert est.estimate == pytest.approx(0.625)


def test_hill_tail_index_pareto():
    rng = np.random.default_rng(8)
    x = rng.pareto(0.7, 200_000) + 1
    assert hill_tail_index(x) == pytest.approx(0.7, rel=0.1)


def test_bootstrap_se():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(100_000)
    se = block_bootstrap_se(x, seed=3)
    assert se == block_bootstrap_se(x, seed=3)
    assert se == pytest.approx(1 / math.sqrt(x.size), rel=0.15)


# density

def test_kde_gaussian_sup(gaussian):
    d = kde_density(gaussian, 0)
    assert density_distance(d) <= 0.01
    assert d.integral() == pytest.approx(1.0, abs=0.01)
    assert total_variation(d) < 0.01


def test_kde_first_derivative(gaussian):
    d = kde_density(gaussian, 1)
    assert density_distance(d) <= 0.02


def test_kde_mirror_symmetry():
    x = sample_batch(N1 + 0.3 * N1**2, 20_000, seed=10).values
    for method in ("exact", "binned"):
        a = kde_density(x, 0, bandwidth=0.2, method=method)
        b = kde_density(-x, 0, bandwidth=0.2, method=method)
        np.testing.assert_allclose(a.values, b.values[::-1], atol=1e-12)


def test_kde_binned_matches_exact():
    x = sample_batch(H2, 20_000, seed=11).values
    for q in (0, 1, 2):
        a = kde_density(x, q, method="exact")
        b = kde_density(x, q, method="binned")
        assert np.max(np.abs(a.values - b.values)) <= 1e-3 * np.max(np.abs(a.values))


def test_kde_analytic_derivative():
    x = np.array([-0.4, 0.1, 0.9] * 40)
    h = 0.5
    d = kde_density(x, 2, bandwidth=h, method="exact")
    g = d.grid[:, None]
    ref = np.mean(phi_derivative(2, (g - x[None, :]) / h), axis=1) / h**3
    np.testing.assert_allclose(d.values, ref, atol=1e-12)


def test_kde_small_sample_rejected():
    with pytest.raises(ValueError):
        kde_density(np.zeros(50), 0)


def test_density_distance_synthetic_and_csv():
    grid = np.linspace(-5, 5, 1001)
    d = DensityEstimate(grid, 1, phi_derivative(1, grid), 0.1)
    assert density_distance(d) == 0.0
    lines = d.to_csv().splitlines()
    assert lines[0] == "x,fq_hat,phi_q,abs_diff"
    assert len(lines) == 1002


def test_density_trend_along_family():
    dist = []
    for n in (10, 40, 160):
        b = sample_batch(second_chaos_family(n), 200_000, seed=n)
        dist.append(density_distance(kde_density(b, 0)))
    assert dist[0] > dist[1] > dist[2]


# distances

def test_distribution_distances(gaussian):
    d = distribution_distances(gaussian)
    assert d["kolmogorov"] <= 0.002
    assert distribution_distances(_batch(np.zeros(1000)))["kolmogorov"] == pytest.approx(0.5)
    shifted = distribution_distances(_batch(gaussian.values + 0.3))
    assert shifted["wasserstein1"] == pytest.approx(0.3, abs=0.005)


# Stein discrepancy

def test_stein_examples():
    for n in (5, 20):
        s = stein_discrepancy(ChaosVector.of([second_chaos_family(n)], [2]))
        assert s.method == "symbolic"
        assert float(s) == pytest.approx(math.sqrt(8 / n), rel=1e-10)
    assert float(stein_discrepancy(ChaosVector.of([N1, N2]))) == pytest.approx(0.0, abs=1e-14)
    assert float(stein_discrepancy(ChaosVector.of([H2], [2]))) == pytest.approx(math.sqrt(32))


def test_stein_fallback():
    s = stein_discrepancy(ChaosVector.of([second_chaos_family(8)], [2]), budget=1, samples=200_000, seed=1)
    assert s.method == "monte-carlo"
    assert abs(s.value - 1.0) <= 5 * s.stderr


# entropy and Fisher

def test_entropy_gaussian(gaussian):
    r = entropy_fisher(gaussian)
    assert abs(r["entropy"]) <= 0.01


def test_entropy_scaled_gaussian():
    x = math.sqrt(1.2) * sample_batch(N1, 1_000_000, seed=12).values
    r = entropy_fisher(x)
    assert r["entropy"] == pytest.approx(0.5 * (1.2 - 1 - math.log(1.2)), abs=0.003)


def test_fisher_shifted_gaussian():
    x = sample_batch(N1, 1_000_000, seed=13).values + 0.5
    r = entropy_fisher(x)
    assert r["fisher"] == pytest.approx(0.25, abs=0.02)
    # Pinsker and log-Sobolev ordering within estimator error
    tv = total_variation(kde_density(x, 0))
    assert tv**2 <= 0.5 * r["entropy"] + 0.01
    assert 0.5 * r["entropy"] <= 0.25 * r["fisher"] + 2 * (r["entropy_se"] + r["fisher_se"]) + 0.005


def test_score_pairs_route():
    n = 40
    F = second_chaos_family(n)
    b = sample_batch(ScoreSampler(F, 2), 400_000, seed=14)
    r = entropy_fisher(b, score_pairs=(b.values, b.extras["score"]))
    # quadrature oracle for the family at n = 40 (chaoslab oracle family-entropy)
    assert r["entropy"] == pytest.approx(0.016876335383004946, rel=0.15)
    assert r["fisher"] == pytest.approx(0.1111111111111111, rel=0.15)
