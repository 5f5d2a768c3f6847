"""Tests for mode optimization, clustering and chain summaries."""

import warnings

import numpy as np
import pytest

from sparsemodes.choices import CovarianceTargetChoices
from sparsemodes.exceptions import DegenerateVariance, EmptyChain, MaxIterationsExceeded, ValidationError
from sparsemodes.explorer import (
    cluster_modes,
    cooccurrence_matrix,
    crossing_statistics,
    explore,
    extract_support,
    objective_histogram,
    optimize_samples,
    sample_covariance,
    switch_statistics,
)
from sparsemodes.grouplasso import lambda_max, objective_l2p
from sparsemodes.mm import mm_solve
from sparsemodes.models import Chain, MMConfig, ModeChain, SamplerConfig


def _mode(n, support, value=1.0):
    X = np.zeros((n, 1))
    for i in support:
        X[i - 1] = value
    return X


def _mode_chain(supports, n=6, objectives=None, uniform=None):
    modes = np.array([_mode(n, support) for support in supports])
    if objectives is None:
        objectives = np.arange(len(supports), dtype=float)
    config = SamplerConfig(k=len(supports), alpha=2.0, beta=1.0)
    chain = Chain(X_samples=modes.copy(), gamma_samples=np.ones((len(supports), n)), config=config)
    return ModeChain(
        modes=modes,
        sources=chain,
        objectives=np.asarray(objectives, dtype=float),
        converged=np.ones(len(supports), dtype=bool),
        uniform_mode=None if uniform is None else _mode(n, uniform),
    )


class TestExtractSupport:
    def test_zero_matrix(self):
        assert extract_support(np.zeros((4, 2))) == ()

    def test_single_group(self):
        assert extract_support(_mode(5, [3])) == (3,)

    def test_relative_threshold(self):
        X = np.zeros((3, 1))
        X[0], X[2] = 1.0, 1e-12
        assert extract_support(X, 1e-8) == (1,)

    def test_grouped(self):
        X = np.zeros((6, 2))
        X[4, 1] = 2.0
        assert extract_support(X, 1e-8, d=2) == (3,)

    def test_negative_threshold(self):
        with pytest.raises(ValidationError):
            extract_support(np.ones((2, 1)), -1.0)


class TestClusterModes:
    """Test support clustering and ordering."""

    def test_identical_modes_form_one_cluster(self):
        summary = cluster_modes(_mode_chain([(2, 4)] * 5))
        assert len(summary.clusters) == 1
        assert summary.clusters[0].frequency == 1.0
        assert summary.clusters[0].support == (2, 4)

    def test_ordering_by_frequency_then_support(self):
        supports = [(3,), (1,), (3,), (2,), (1,), (3,)]
        summary = cluster_modes(_mode_chain(supports))
        assert [cluster.support for cluster in summary.clusters] == [(3,), (1,), (2,)]
        assert [cluster.count for cluster in summary.clusters] == [3, 2, 1]
        assert sum(cluster.frequency for cluster in summary.clusters) == pytest.approx(1.0)

    def test_best_objective_bookkeeping(self):
        summary = cluster_modes(_mode_chain([(1,), (1,), (2,)], objectives=[5.0, 2.0, 7.0]))
        top = summary.clusters[0]
        assert top.best_objective == 2.0
        assert top.best_index == 1

    def test_marks_uniform_cluster(self):
        summary = cluster_modes(_mode_chain([(1,), (1,), (2,)], uniform=(2,)))
        assert summary.marked_uniform_mode == 1

    def test_unvisited_uniform_support(self):
        summary = cluster_modes(_mode_chain([(1,), (1,)], uniform=(5,)))
        assert summary.marked_uniform_mode is None

    def test_to_dict(self):
        summary = cluster_modes(_mode_chain([(1, 2), (1, 2), (3,)]))
        report = summary.to_dict()
        assert report["cluster_count"] == 2
        assert report["clusters"][0]["support"] == [1, 2]
        assert report["mean_switch_steps"] == pytest.approx(1.5)


class TestSwitchStatistics:
    def test_alternating(self):
        assert switch_statistics(_mode_chain([(1,), (2,)] * 4)) == 1.0

    def test_constant(self):
        assert switch_statistics(_mode_chain([(1,)] * 7)) == 7.0

    def test_runs(self):
        assert switch_statistics(_mode_chain([(1,), (1,), (1,), (2,), (2,), (1,)])) == 2.0

    def test_single_mode(self):
        with pytest.raises(EmptyChain):
            switch_statistics(_mode_chain([(1,)]))

    def test_crossing_between_halves(self):
        supports = [(1,), (2,), (4,), (5,), (1, 4), (3,)]
        blocks = [range(1, 4), range(4, 7)]
        # labels 0, 0, 1, 1, mixed, 0
        assert crossing_statistics(_mode_chain(supports), blocks) == pytest.approx(6 / 4)


class TestCooccurrence:
    def test_single_pair(self):
        C = cooccurrence_matrix(_mode_chain([(2, 5)] * 3))
        expected = np.zeros((6, 6))
        expected[np.ix_([1, 4], [1, 4])] = 1.0
        np.testing.assert_array_equal(C, expected)

    def test_disjoint_singletons_are_diagonal(self):
        C = cooccurrence_matrix(_mode_chain([(1,), (2,), (3,), (3,)]))
        np.testing.assert_allclose(C, np.diag([0.25, 0.25, 0.5, 0.0, 0.0, 0.0]))

    def test_symmetric_with_marginal_diagonal(self):
        supports = [(1, 2), (2, 3), (1, 2, 3), (4,)]
        C = cooccurrence_matrix(_mode_chain(supports))
        np.testing.assert_array_equal(C, C.T)
        marginal = [sum(i in s for s in supports) / len(supports) for i in range(1, 7)]
        np.testing.assert_allclose(np.diag(C), marginal)
        assert np.all(C.sum(axis=1) <= 3.0)


class TestSampleCovariance:
    def test_constant_chain_is_degenerate(self):
        config = SamplerConfig(k=4, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=np.ones((4, 3, 1)), gamma_samples=np.ones((4, 3)), config=config)
        with pytest.warns(DegenerateVariance):
            covariance, correlation = sample_covariance(chain)
        np.testing.assert_array_equal(covariance, np.zeros((3, 3)))
        np.testing.assert_array_equal(correlation, np.zeros((3, 3)))

    def test_unit_diagonal(self, rng):
        config = SamplerConfig(k=50, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=rng.standard_normal((50, 4, 1)), gamma_samples=np.ones((50, 4)), config=config)
        covariance, correlation = sample_covariance(chain)
        np.testing.assert_allclose(np.diag(correlation), np.ones(4))
        np.testing.assert_allclose(covariance, np.cov(chain.X_samples[:, :, 0], rowvar=False))

    def test_group_norm_target(self, rng):
        config = SamplerConfig(k=30, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=rng.standard_normal((30, 6, 2)), gamma_samples=np.ones((30, 3)), config=config)
        covariance, _ = sample_covariance(chain, CovarianceTargetChoices.TARGET_GROUP_NORMS)
        assert covariance.shape == (3, 3)

    def test_short_chain(self):
        config = SamplerConfig(k=1, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=np.ones((1, 2, 1)), gamma_samples=np.ones((1, 2)), config=config)
        with pytest.raises(EmptyChain):
            sample_covariance(chain)

    def test_matches_known_covariance(self, rng):
        # estimator within four standard errors of a known covariance
        G =np.array([[1.0, 0.5], [0.0, 1.0]])
        precision = G.T @ G + np.eye(2)
        target = np.linalg.inv(precision)
        draws = rng.multivariate_normal(np.zeros(2), target, size=20000)
        config = SamplerConfig(k=20000, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=draws[:, :, np.newaxis], gamma_samples=np.ones((20000, 2)), config=config)
        covariance, _ = sample_covariance(chain)
        se = np.sqrt((target**2 + np.outer(np.diag(target), np.diag(target))) / (20000 - 1))
        assert np.all(np.abs(covariance - target) < 4.0 * se + 1e-12)


class TestObjectiveHistogram:
    def test_equal_objectives_single_bin(self):
        histogram = objective_histogram(_mode_chain([(1,)] * 4, objectives=[2.0] * 4), bins=5)
        assert np.count_nonzero(histogram.counts) == 1
        assert histogram.counts.sum() == 4

    def test_counts_sum_to_chain_length(self):
        histogram = objective_histogram(_mode_chain([(1,), (2,), (3,)], objectives=[1.0, 4.0, 2.5]), bins=3)
        assert histogram.counts.sum() == 3
        assert histogram.edges[0] == 1.0
        assert len(histogram.rows()) == 3

    def test_invalid_bins(self):
        with pytest.raises(ValidationError):
            objective_histogram(_mode_chain([(1,)]), bins=0)


class TestBestMode:
    def test_chain_mode_wins(self):
        mode_chain = _mode_chain([(1,), (2,), (3,)], objectives=[2.0, 0.5, 1.0], uniform=(4,))
        mode_chain.uniform_objective = 0.7
        best, objective = mode_chain.best_mode()
        assert objective == 0.5
        assert extract_support(best) == (2,)

    def test_uniform_start_counts_as_candidate(self):
        mode_chain = _mode_chain([(1,), (2,)], objectives=[2.0, 1.0], uniform=(4,))
        mode_chain.uniform_objective = 0.25
        best, objective = mode_chain.best_mode()
        assert objective == 0.25
        assert extract_support(best) == (4,)

    def test_ties_go_to_chain(self):
        mode_chain = _mode_chain([(1,)], objectives=[1.0], uniform=(4,))
        mode_chain.uniform_objective = 1.0
        best, _ = mode_chain.best_mode()
        assert extract_support(best) == (1,)


class TestExplore:
    """Test the sampler + MM combination on small problems."""

    def test_forced_uniform_gamma_reproduces_mm(self, scalar_problem):
        lam = 0.3 * lambda_max(scalar_problem.G, scalar_problem.M, scalar_problem.n, scalar_problem.d)
        config = SamplerConfig(k=1, alpha=2.0, beta=4.0 / lam**2)
        chain = Chain(
            X_samples=np.zeros((1, 4, 1)), gamma_samples=np.full((1, 4), 1.0 / lam), config=config
        )
        mm_cfg = MMConfig(lam=lam, eps=1e-12)
        mode_chain = optimize_samples(scalar_problem, chain, lam, mm_cfg)
        reference = mm_solve(scalar_problem, mm_cfg, np.ones(4)).X_hat
        assert len(mode_chain) == 1
        np.testing.assert_allclose(mode_chain.modes[0], reference, atol=1e-10)
        np.testing.assert_allclose(mode_chain.uniform_mode, reference, atol=1e-10)

    def test_modes_are_descent_results(self, example1, rng):
        problem, _ = example1
        lam = 0.2 * lambda_max(problem.G, problem.M, problem.n, problem.d)
        sampler_cfg = SamplerConfig.for_lambda(lam, problem.d, problem.t, k=12, k0=5)
        mm_cfg = MMConfig(lam=lam, eps=1e-10)
        mode_chain = explore(problem, lam, sampler_cfg, mm_cfg, rng=rng)
        assert len(mode_chain) == 12
        for k, mode in enumerate(mode_chain.modes):
            assert mode_chain.objectives[k] == pytest.approx(objective_l2p(problem, mode, lam, 0.5))
        histogram = objective_histogram(mode_chain, lam, bins=4)
        assert histogram.edges[0] == pytest.approx(mode_chain.objectives.min())
        assert histogram.uniform_marker == mode_chain.uniform_objective

    def test_threads_do_not_change_results(self, example2):
        problem, _ = example2
        lam = 0.5 * lambda_max(problem.G, problem.M, problem.n, problem.d)
        sampler_cfg = SamplerConfig.for_lambda(lam, problem.d, problem.t, k=8, seed=5)
        mm_cfg = MMConfig(lam=lam, eps=1e-10)
        serial = explore(problem, lam, sampler_cfg, mm_cfg)
        parallel = explore(problem, lam, sampler_cfg, mm_cfg, threads=4)
        assert serial.modes.tobytes() == parallel.modes.tobytes()
        assert cluster_modes(serial).to_dict() == cluster_modes(parallel).to_dict()

    def test_unconverged_inner_solves_flag_modes(self, example1):
        problem, _ = example1
        lam = 0.2 * lambda_max(problem.G, problem.M, problem.n, problem.d)
        config = SamplerConfig(k=2, alpha=2.0, beta=4.0 / lam**2)
        chain = Chain(
            X_samples=np.zeros((2, problem.q, 1)), gamma_samples=np.full((2, problem.n), 1.0 / lam), config=config
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MaxIterationsExceeded)
            mode_chain = optimize_samples(problem, chain, lam, MMConfig(lam=lam, max_inner=1))
        assert not mode_chain.converged.any()

    def test_rejects_zero_workers(self, scalar_problem):
        config = SamplerConfig(k=1, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=np.zeros((1, 4, 1)), gamma_samples=np.ones((1, 4)), config=config)
        with pytest.raises(ValidationError):
            optimize_samples(scalar_problem, chain, 0.5, MMConfig(lam=0.5), threads=0)

    def test_lambda_mismatch(self, scalar_problem):
        config = SamplerConfig(k=1, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=np.zeros((1, 4, 1)), gamma_samples=np.ones((1, 4)), config=config)
        with pytest.raises(ValidationError):
            optimize_samples(scalar_problem, chain, 0.5, MMConfig(lam=0.4))

    def test_histogram_at_new_lambda(self, scalar_problem):
        lam = 0.3
        config = SamplerConfig(k=2, alpha=2.0, beta=1.0)
        chain = Chain(X_samples=np.zeros((2, 4, 1)), gamma_samples=np.ones((2, 4)), config=config)
        mode_chain = optimize_samples(scalar_problem, chain, lam, MMConfig(lam=lam, eps=1e-10))
        histogram = objective_histogram(mode_chain, 0.6, bins=2)
        recomputed = min(objective_l2p(scalar_problem, mode, 0.6, 0.5) for mode in mode_chain.modes)
        assert histogram.edges[0] == pytest.approx(recomputed)
