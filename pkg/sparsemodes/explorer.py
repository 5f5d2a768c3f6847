"""
Posterior mode exploration: MM solves launched from Gibbs samples, then
clustering of the resulting modes by support.
"""

import logging
import warnings
from itertools import groupby

import numpy as np
from joblib import Parallel, delayed

from .choices import CovarianceTargetChoices
from .constants import DEFAULT_HISTOGRAM_BINS, DEFAULT_TAU_SUPP
from .exceptions import DegenerateVariance, EmptyChain, ValidationError
from .grouplasso import objective_l2p
from .mm import mm_solve, weights_from_gamma
from .models import HyperState, ModeChain, ModeCluster, ModeSummary, ObjectiveHistogram, group_norms
from .sampler import gibbs_sample

logger = logging.getLogger(__name__)

MIXED_BLOCK = -1


def _run_mm(problem, mm_cfg, W0):
    trace = mm_solve(problem, mm_cfg, W0)
    X_hat = trace.X_hat
    return X_hat, objective_l2p(problem, X_hat, mm_cfg.lam, 0.5), trace.converged


def optimize_samples(problem, chain, lam, mm_cfg, threads=1):
    """
    Run MM from ``w = lam * gamma(k)`` for every retained sample of ``chain``.

    Solves are independent and fan out over ``threads`` joblib worker
    processes; results keep the chain order. A reference solve from uniform
    weights ``w = 1`` is stored alongside.

    Returns:
        ModeChain
    """
    if mm_cfg.lam != lam:
        raise ValidationError({"lam": f"MM config uses lam={mm_cfg.lam}, explorer was given {lam}"})
    if threads < 1:
        raise ValidationError({"threads": "at least one worker is required"})
    initial_weights = [weights_from_gamma(gamma, lam) for gamma in chain.gamma_samples]
    initial_weights.append(HyperState.uniform(problem.n, lam).weights)

    if threads > 1:
        results = Parallel(n_jobs=threads, backend="loky")(
            delayed(_run_mm)(problem, mm_cfg, W0) for W0 in initial_weights
        )
    else:
        results = [_run_mm(problem, mm_cfg, W0) for W0 in initial_weights]

    uniform_mode, uniform_objective, _ = results.pop()
    modes = np.array([result[0] for result in results])
    objectives = np.array([result[1] for result in results])
    converged = np.array([result[2] for result in results], dtype=bool)
    if not converged.all():
        logger.warning("%d of %d MM solves did not converge", int((~converged).sum()), len(converged))
    logger.info("Optimized %d samples; best objective %.10g", len(results), objectives.min())
    return ModeChain(
        modes=modes,
        sources=chain,
        objectives=objectives,
        converged=converged,
        d=problem.d,
        uniform_mode=uniform_mode,
        uniform_objective=uniform_objective,
        problem=problem,
        lam=lam,
    )


def explore(problem, lam, sampler_cfg, mm_cfg, rng=None, threads=1, X_init=None, gamma_init=None):
    """
    Sample the posterior with the Gibbs sampler and optimize every sample by MM.

    ``sampler_cfg`` should carry the hyper-prior matching ``lam``
    (``SamplerConfig.for_lambda``).
    """
    chain = gibbs_sample(problem, sampler_cfg, X_init=X_init, gamma_init=gamma_init, rng=rng)
    return optimize_samples(problem, chain, lam, mm_cfg, threads=threads)


def extract_support(X, tau_supp=DEFAULT_TAU_SUPP, d=1):
    """
    1-based locations whose group norm exceeds ``tau_supp`` times the largest group norm.

    Returns:
        Sorted tuple of locations; empty for X = 0
    """
    if tau_supp < 0:
        raise ValidationError({"tau_supp": "must be nonnegative"})
    norms = group_norms(X, d)
    largest = norms.max() if norms.size else 0.0
    if largest == 0:
        return ()
    return tuple(int(i) + 1 for i in np.flatnonzero(norms > tau_supp * largest))


def _supports(mode_chain, tau_supp):
    return [extract_support(mode, tau_supp, mode_chain.d) for mode in mode_chain.modes]


def _mean_run_length(labels):
    if len(labels) < 2:
        raise EmptyChain("at least two modes are needed for switch statistics")
    runs = sum(1 for _ in groupby(labels))
    return len(labels) / runs


def switch_statistics(mode_chain, tau_supp=DEFAULT_TAU_SUPP):
    """Mean number of consecutive steps sharing the same mode support."""
    return _mean_run_length(_supports(mode_chain, tau_supp))


def crossing_statistics(mode_chain, blocks, tau_supp=DEFAULT_TAU_SUPP):
    """
    Mean run length of the block a mode's support lies in.

    Args:
        mode_chain: ModeChain
        blocks: Sequence of collections of 1-based locations, e.g. ``[range(1, 11), range(11, 21)]``
        tau_supp: Relative support threshold

    Returns:
        Average number of steps before the support moves to another block.
        Supports spanning several blocks share the label "mixed".
    """
    blocks = [frozenset(block) for block in blocks]

    def label(support):
        for index, block in enumerate(blocks):
            if set(support) <= block:
                return index
        return MIXED_BLOCK

    return _mean_run_length([label(support) for support in _supports(mode_chain, tau_supp)])


def _indicator(supports, n):
    indicator = np.zeros((len(supports), n))
    for k, support in enumerate(supports):
        indicator[k, [i - 1 for i in support]] = 1.0
    return indicator


def cooccurrence_matrix(mode_chain, tau_supp=DEFAULT_TAU_SUPP):
    """Fraction of modes whose support contains both locations i and j."""
    n = mode_chain.modes.shape[1] // mode_chain.d
    supports = _supports(mode_chain, tau_supp)
    if not supports:
        return np.zeros((n, n))
    indicator = _indicator(supports, n)
    return indicator.T @ indicator / len(supports)


def cluster_modes(mode_chain, tau_supp=DEFAULT_TAU_SUPP):
    """
    Group modes by identical support.

    Clusters are ordered by decreasing frequency, ties by lexicographic
    support. The cluster holding the uniform-initialization mode, if any, is
    reported as ``marked_uniform_mode``.
    """
    supports = _supports(mode_chain, tau_supp)
    total = len(supports)
    members = {}
    for k, support in enumerate(supports):
        members.setdefault(support, []).append(k)

    clusters = []
    for support, indices in members.items():
        best = min(indices, key=lambda k: mode_chain.objectives[k])
        clusters.append(
            ModeCluster(
                support=support,
                count=len(indices),
                frequency=len(indices) / total,
                best_objective=float(mode_chain.objectives[best]),
                best_index=best,
            )
        )
    clusters.sort(key=lambda cluster: (-cluster.count, cluster.support))

    marked = None
    if mode_chain.uniform_mode is not None:
        uniform_support = extract_support(mode_chain.uniform_mode, tau_supp, mode_chain.d)
        marked = next((c for c, cluster in enumerate(clusters) if cluster.support == uniform_support), None)

    logger.info("Found %d distinct supports among %d modes", len(clusters), total)
    return ModeSummary(
        clusters=clusters,
        mean_switch_steps=_mean_run_length(supports) if total >= 2 else None,
        cooccurrence=cooccurrence_matrix(mode_chain, tau_supp),
        marked_uniform_mode=marked,
        total=total,
    )


def sample_covariance(chain, target=CovarianceTargetChoices.TARGET_COEFFICIENTS):
    """
    Unbiased sample covariance and correlation of the retained samples.

    Args:
        chain: Chain
        target: ``coefficients`` (flattened X samples) or ``group_norms``

    Returns:
        (covariance, correlation); zero-variance coordinates get correlation 0
        off the diagonal and on it, with a DegenerateVariance warning.
    """
    K = len(chain)
    if K < 2:
        raise EmptyChain("at least two samples are needed for a sample covariance")
    if target == CovarianceTargetChoices.TARGET_COEFFICIENTS:
        data = chain.X_samples.reshape(K, -1)
    elif target == CovarianceTargetChoices.TARGET_GROUP_NORMS:
        d = chain.X_samples.shape[1] // chain.gamma_samples.shape[1]
        data = np.array([group_norms(X, d) for X in chain.X_samples])
    else:
        raise ValidationError({"target": f"unknown covariance target {target!r}"})

    covariance = np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
    std = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    degenerate = std == 0
    correlation = np.zeros_like(covariance)
    live = ~degenerate
    correlation[np.ix_(live, live)] = covariance[np.ix_(live, live)] / np.outer(std[live], std[live])
    np.fill_diagonal(correlation, np.where(live, 1.0, 0.0))
    if degenerate.any():
        flagged = np.flatnonzero(degenerate).tolist()
        message = f"{int(degenerate.sum())} coordinates have zero sample variance: {flagged}"
        logger.warning(message)
        warnings.warn(message, DegenerateVariance, stacklevel=2)
    return covariance, correlation


def objective_histogram(mode_chain, lam=None, bins=DEFAULT_HISTOGRAM_BINS):
    """
    Histogram of the l2,1/2 objective of every mode.

    Objectives are recomputed when ``lam`` differs from the regularization the
    modes were obtained with. The uniform-initialization objective is carried
    as the marker value.
    """
    if bins < 1:
        raise ValidationError({"bins": "at least one bin is required"})
    objectives = mode_chain.objectives
    marker = mode_chain.uniform_objective
    if lam is not None and lam != mode_chain.lam:
        if mode_chain.problem is None:
            raise ValidationError({"lam": "objectives at a new lambda need the problem"})
        problem = mode_chain.problem
        objectives = np.array([objective_l2p(problem, mode, lam, 0.5) for mode in mode_chain.modes])
        if mode_chain.uniform_mode is not None:
            marker = objective_l2p(problem, mode_chain.uniform_mode, lam, 0.5)
    counts, edges = np.histogram(objectives, bins=bins)
    return ObjectiveHistogram(counts=counts, edges=edges, uniform_marker=marker)
