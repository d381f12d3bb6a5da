import numpy as np
import pytest
from scipy import stats

import gpmean as gm
from gpmean import (
    CellQuadrature,
    Observation,
    SeedSpec,
    chol_factor,
    gram,
    sample_observation,
    uniform_grid,
)
from gpmean.errors import NotPositiveSemidefiniteError

from conftest import study_kernel, study_model


@pytest.fixture(scope="module")
def q():
    return CellQuadrature(8)


class TestSeedSpec:
    def test_same_spec_same_stream(self):
        a = SeedSpec(12345, 7).generator().standard_normal(16)
        b = SeedSpec(12345, 7).generator().standard_normal(16)
        np.testing.assert_array_equal(a, b)

    def test_different_reps_differ(self):
        a = SeedSpec(12345, 0).generator().standard_normal(16)
        b = SeedSpec(12345, 1).generator().standard_normal(16)
        assert np.abs(a - b).max() > 1e-3

    def test_negative_rep_rejected(self):
        with pytest.raises(ValueError):
            SeedSpec(1, -1)

    def test_streams_empirically_uncorrelated(self):
        reps = 10_000
        z = np.array(
            [SeedSpec(2024, r).generator().standard_normal(1)[0] for r in range(2 * reps)]
        )
        corr = np.corrcoef(z[0::2], z[1::2])[0, 1]
        assert abs(corr) < 5.0 / np.sqrt(reps)


class TestCholFactor:
    def test_identity_zero_jitter(self):
        L = chol_factor(np.eye(5), jitter_rel=0.0)
        np.testing.assert_array_equal(L, np.eye(5))

    def test_wiener_reconstruction(self):
        g = gram(gm.Wiener(), uniform_grid(3, 0.0, 1.0))
        L = chol_factor(g)
        np.testing.assert_allclose(L @ L.T, g.values, atol=1e-12)

    def test_degenerate_zero_matrix(self):
        jit = 1e-12
        L = chol_factor(np.zeros((4, 4)), jitter_rel=jit)
        np.testing.assert_allclose(L, np.sqrt(jit) * np.eye(4), rtol=1e-12)

    def test_indefinite_matrix_raises(self):
        mat = np.array([[0.0, 1.0], [1.0, 0.0]])  # eigenvalues +-1
        with pytest.raises(NotPositiveSemidefiniteError):
            chol_factor(mat, jitter_rel=1e-12)


class TestSampleObservation:
    def test_zero_noise_is_exact_mean(self, q):
        model, kernel = study_model(), study_kernel()
        grid = uniform_grid(50)
        obs = sample_observation(model, [-4.0], kernel, grid, 0.0, SeedSpec(1, 0), q)
        expected = gm.mean_vector(model, [-4.0], kernel, grid.nodes, q)
        np.testing.assert_array_equal(obs.values, expected)
        assert obs.epsilon == 0.0

    def test_zero_mean_average(self, q):
        # theta0 = 0: average over many replications concentrates at zero
        model, kernel = study_model(), study_kernel()
        grid = uniform_grid(16)
        eps, reps = 0.5, 100_000
        chol = chol_factor(gram(kernel, grid))
        mean0 = np.zeros(grid.n)
        acc = np.zeros(grid.n)
        for r in range(reps):
            obs = sample_observation(
                model, [0.0], kernel, grid, eps, SeedSpec(31, r), q,
                chol=chol, mean=mean0,
            )
            acc += obs.values
        # diagonal of G is < 1, so 4*eps/sqrt(reps) dominates 4 standard errors
        assert np.abs(acc / reps).max() < 4.0 * eps / np.sqrt(reps)

    def test_empirical_covariance_matches_gram(self, q):
        model, kernel = study_model(), study_kernel()
        grid = uniform_grid(100)
        eps, reps = 0.1, 10_000
        g = gram(kernel, grid)
        chol = chol_factor(g)
        mean0 = gm.mean_vector(model, [-4.0], kernel, grid.nodes, q)
        draws = np.empty((reps, grid.n))
        for r in range(reps):
            draws[r] = sample_observation(
                model, [-4.0], kernel, grid, eps, SeedSpec(77, r), q,
                chol=chol, mean=mean0,
            ).values
        emp = np.cov(draws, rowvar=False)
        target = eps**2 * g.values
        gd = np.diag(g.values)
        se = eps**2 * np.sqrt((np.outer(gd, gd) + g.values**2) / reps)
        assert np.all(np.abs(emp - target) <= 5.0 * se)

    def test_gaussianity_at_fixed_node(self, q):
        model, kernel = study_model(), study_kernel()
        grid = uniform_grid(20)
        eps, reps, node = 0.3, 10_000, 9
        g = gram(kernel, grid)
        chol = chol_factor(g)
        mean0 = gm.mean_vector(model, [-4.0], kernel, grid.nodes, q)
        vals = np.empty(reps)
        for r in range(reps):
            obs = sample_observation(
                model, [-4.0], kernel, grid, eps, SeedSpec(13, r), q,
                chol=chol, mean=mean0,
            )
            vals[r] = obs.values[node]
        standardized = (vals - mean0[node]) / (eps * np.sqrt(g.values[node, node]))
        pvalue = stats.kstest(standardized, "norm").pvalue
        assert pvalue > 0.01

    def test_determinism_independent_of_order(self, q):
        model, kernel = study_model(), study_kernel()
        grid = uniform_grid(30)
        chol = chol_factor(gram(kernel, grid))
        mean0 = gm.mean_vector(model, [-4.0], kernel, grid.nodes, q)

        def draw(r):
            return sample_observation(
                model, [-4.0], kernel, grid, 0.1, SeedSpec(5, r), q,
                chol=chol, mean=mean0,
            ).values

        forward = [draw(r) for r in (0, 1, 2)]
        backward = [draw(r) for r in (2, 1, 0)]
        for a, b in zip(forward, backward[::-1]):
            np.testing.assert_array_equal(a, b)

    def test_negative_epsilon_rejected(self, q):
        with pytest.raises(ValueError):
            sample_observation(
                study_model(), [-4.0], study_kernel(), uniform_grid(4), -0.1,
                SeedSpec(1, 0), q,
            )


class TestObservationSerialization:
    def test_csv_roundtrip(self, q, tmp_path):
        obs = sample_observation(
            study_model(), [-4.0], study_kernel(), uniform_grid(10), 0.1,
            SeedSpec(3, 4), q,
        )
        path = tmp_path / "obs.csv"
        obs.to_csv(path)
        back = Observation.from_csv(path, epsilon=0.1)
        np.testing.assert_array_equal(back.values, obs.values)
        np.testing.assert_array_equal(back.grid.t, obs.grid.t)

    def test_json_roundtrip(self, q, tmp_path):
        obs = sample_observation(
            study_model(), [-4.0], study_kernel(), uniform_grid(10), 0.25,
            SeedSpec(3, 4), q,
        )
        path = tmp_path / "obs.json"
        obs.to_json(path)
        back = Observation.from_json(path)
        np.testing.assert_array_equal(back.values, obs.values)
        assert back.epsilon == 0.25

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Observation(grid=uniform_grid(4), values=np.zeros(3), epsilon=0.1)
