"""Tests for problem types, group indexing and config validation."""

import numpy as np
import pytest

from sparsemodes.exceptions import DimensionMismatch, IndexOutOfRange, NonFiniteEntry, ValidationError
from sparsemodes.models import (
    Chain,
    HyperState,
    MMConfig,
    MMVProblem,
    SamplerConfig,
    SliceCoefficients,
    expand_weights,
    group_norms,
    group_view,
    validate_problem,
)


class TestValidateProblem:
    """Test shape and finiteness checks."""

    def test_valid_problem_passes(self, random_problem):
        validate_problem(random_problem)
        assert random_problem.q == 10
        assert random_problem.t == 3
        assert random_problem.m == 8

    def test_column_count_must_match_groups(self):
        problem = MMVProblem(G=np.ones((3, 4)), M=np.ones((3, 1)), n=3, d=1)
        with pytest.raises(DimensionMismatch):
            validate_problem(problem)

    def test_row_count_must_match(self):
        problem = MMVProblem(G=np.ones((3, 4)), M=np.ones((2, 1)), n=4, d=1)
        with pytest.raises(DimensionMismatch) as excinfo:
            validate_problem(problem)
        assert "M" in excinfo.value.message_dict

    def test_nan_in_measurements(self):
        M = np.ones((3, 1))
        M[1, 0] = np.nan
        with pytest.raises(NonFiniteEntry):
            validate_problem(MMVProblem(G=np.ones((3, 2)), M=M, n=2))

    def test_arrays_are_read_only(self, random_problem):
        with pytest.raises(ValueError):
            random_problem.G[0, 0] = 1.0

    def test_vector_measurement_becomes_column(self):
        problem = MMVProblem(G=np.eye(2), M=np.array([1.0, 2.0]), n=2)
        assert problem.M.shape == (2, 1)


class TestGroupIndexing:
    """Test 1-based group access."""

    def test_group_view_rows(self):
        X = np.arange(12.0).reshape(6, 2)
        block = group_view(X, 2, 3)
        np.testing.assert_array_equal(block, X[3:6])

    def test_group_view_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            group_view(np.zeros((6, 1)), 3, 3)

    def test_group_view_zero_index(self):
        with pytest.raises(IndexOutOfRange):
            group_view(np.zeros((6, 1)), 0, 3)

    def test_group_norms(self):
        X = np.array([[3.0, 0.0], [0.0, 4.0], [0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_allclose(group_norms(X, 2), [5.0, 1.0])

    def test_expand_weights(self):
        np.testing.assert_array_equal(expand_weights([1.0, 2.0], 3), [1, 1, 1, 2, 2, 2])


class TestHyperState:
    """Test hyperparameter and weight pairing."""

    def test_from_gamma(self):
        state = HyperState.from_gamma([1.0, 2.0], 0.5)
        np.testing.assert_allclose(state.weights, [0.5, 1.0])

    def test_uniform_has_unit_weights(self):
        state = HyperState.uniform(4, 0.25)
        np.testing.assert_allclose(state.weights, np.ones(4))
        np.testing.assert_allclose(state.gamma, np.full(4, 4.0))

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValidationError):
            HyperState(gamma=np.array([-1.0]), weights=np.array([1.0]))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            HyperState(gamma=np.ones(2), weights=np.ones(3))


class TestConfigValidation:
    """Test config clean() on construction."""

    def test_mm_config_defaults(self):
        config = MMConfig(lam=0.1)
        assert config.p == 0.5
        assert config.k_mm == 100

    def test_mm_config_rejects_bad_values(self):
        with pytest.raises(ValidationError) as excinfo:
            MMConfig(lam=0.0, p=0.3, tau=-1.0)
        assert set(excinfo.value.message_dict) == {"lam", "p", "tau"}

    def test_sampler_config_rejects_zero_k(self):
        with pytest.raises(ValidationError) as excinfo:
            SamplerConfig(k=0, alpha=2.0, beta=1.0)
        assert "k" in excinfo.value.message_dict

    def test_sampler_config_rejects_negative_seed(self):
        with pytest.raises(ValidationError):
            SamplerConfig(k=1, alpha=2.0, beta=1.0, seed=-3)

    def test_for_lambda(self):
        config = SamplerConfig.for_lambda(0.5, d=3, t=2, k=10)
        assert config.alpha == 7.0
        assert config.beta == pytest.approx(16.0)
        assert config.shape_offset(3, 2) == 0.0


class TestSliceCoefficients:
    def test_log_density_splits_into_factors(self):
        coeffs = SliceCoefficients(quad=0.5, lin=-1.0, prior_scale=2.0, prior_offset=3.0)
        z = 0.7
        expected = -0.5 * z**2 + z - 2.0 * np.sqrt(z**2 + 3.0)
        assert coeffs.log_density(z) == pytest.approx(expected)


class TestChain:
    def test_acceptance_rate(self):
        config = SamplerConfig(k=2, alpha=2.0, beta=1.0)
        chain = Chain(np.zeros((2, 1, 1)), np.ones((2, 1)), config, gamma_proposals=4, gamma_accepted=3)
        assert len(chain) == 2
        assert chain.gamma_acceptance_rate == 0.75

    def test_acceptance_rate_without_proposals(self):
        config = SamplerConfig(k=1, alpha=2.0, beta=1.0)
        chain = Chain(np.zeros((1, 1, 1)), np.ones((1, 1)), config)
        assert chain.gamma_acceptance_rate is None
