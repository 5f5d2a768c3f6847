"""
Majorization-minimization for l2,1/2-regularized MMV regression and its
full-MAP counterpart in the hierarchical Bayesian model.

With a Gamma(alpha = d*t + 1, beta = 4 / lam^2) hyper-prior, alternating
minimization over (X, gamma) of the negative log posterior produces the same
weights as MM started from ``w = lam * gamma``.
"""

import logging
import warnings

import numpy as np

from .constants import DEFAULT_EPS, DEFAULT_MAX_INNER, DEFAULT_TAU
from .exceptions import InvalidShape, MaxIterationsExceeded, ValidationError
from .grouplasso import objective_l2p, solve_weighted_l21
from .models import MAPIterate, MAPTrace, MMIterate, MMTrace, expand_weights, group_norms

logger = logging.getLogger(__name__)


def update_weights(X_hat, d, n):
    """MM weights ``w_i = 2 sqrt(||X_[i]||_F)``; zero groups get weight 0."""
    norms = group_norms(X_hat, d)
    if norms.shape != (n,):
        raise ValidationError({"X_hat": f"expected {n} groups, got {norms.shape[0]}"})
    return 2.0 * np.sqrt(norms)


def hbm_params_from_lambda(lam, d, t):
    """Gamma hyper-prior (alpha, beta) under which full-MAP reproduces MM at ``lam``."""
    if not lam > 0:
        raise ValidationError({"lam": "regularization must be positive"})
    return d * t + 1.0, 4.0 / lam**2


def weights_from_gamma(gamma, lam):
    """Initial MM weights ``w_i = lam * gamma_i``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValidationError({"gamma": "hyperparameters must be nonnegative"})
    if not lam > 0:
        raise ValidationError({"lam": "regularization must be positive"})
    return lam * gamma


def _check_convexity(alpha, d, t, p):
    bound = d * t / p + 1.0
    if alpha < bound:
        raise InvalidShape({"alpha": f"alpha={alpha} is below the convexity bound d*t/p + 1 = {bound}"})


def gamma_map_update(X, alpha, beta, p, d, t):
    """
    Minimize the negative log posterior over gamma for fixed X.

    Returns:
        gamma_i = beta * (nu + sqrt(nu^2 + ||X_[i]||_F^p / beta)),
        nu = (alpha - 1 - d*t/p) / 2
    """
    _check_convexity(alpha, d, t, p)
    if not beta > 0:
        raise ValidationError({"beta": "hyper-prior scale must be positive"})
    nu = (alpha - 1.0 - d * t / p) / 2.0
    c = group_norms(X, d) ** p
    return beta * (nu + np.sqrt(nu * nu + c / beta))


def negative_log_posterior(problem, X, gamma, alpha, beta, p=1.0):
    """
    Negative log of the joint (X, gamma) posterior, up to an additive constant.

    Groups with gamma_i = 0 contribute nothing when X_[i] = 0 and +inf otherwise.
    """
    X = np.asarray(X, dtype=float).reshape(problem.q, problem.t)
    gamma = np.asarray(gamma, dtype=float)
    residual = problem.M - problem.G @ X
    c = group_norms(X, problem.d) ** p
    shape = alpha - 1.0 - problem.d * problem.t / p
    positive = gamma > 0
    if np.any(c[~positive] > 0):
        return np.inf
    value = 0.5 * np.sum(residual * residual)
    value += np.sum(c[positive] / gamma[positive] + gamma[positive] / beta)
    if shape != 0:
        if not np.all(positive):
            return np.inf if shape > 0 else -np.inf
        value -= shape * np.sum(np.log(gamma))
    return float(value)


def _scaled_warm_start(X_prev, w, d):
    if X_prev is None:
        return None
    w_diag = expand_weights(w, d)
    scaled = np.zeros_like(X_prev)
    nonzero = w_diag > 0
    scaled[nonzero] = X_prev[nonzero] / w_diag[nonzero, np.newaxis]
    return scaled


def _reweighted_step(problem, w, lam, eps, max_inner, X_prev):
    """One surrogate solve with G~ = G W, warm-started from the previous iterate."""
    return solve_weighted_l21(
        problem, w, lam, eps=eps, max_inner=max_inner, X_init=_scaled_warm_start(X_prev, w, problem.d)
    )


def mm_solve(problem, config, W0):
    """
    Run the l2,1/2 MM (Adaptive Lasso) iterations from initial weights W0.

    Every iteration solves the weighted group lasso with G~ = G W(k-1),
    rescales, and reweights with w_i = 2 sqrt(||X_hat_[i]||_F). Stops when
    successive iterates differ by at most ``config.tau`` in sup-norm or after
    ``config.k_mm`` iterations. With ``config.p == 1`` a single weighted solve
    is performed.

    Returns:
        MMTrace whose iterates are the pairs (X_hat(k), w(k))
    """
    w = np.asarray(W0, dtype=float).reshape(-1)
    if w.shape != (problem.n,) or np.any(w < 0):
        raise ValidationError({"W0": f"expected {problem.n} nonnegative weights"})

    trace = MMTrace()
    X_prev = problem.zeros()
    reached_tau = False
    for k in range(1, config.k_mm + 1):
        result = _reweighted_step(problem, w, config.lam, config.eps, config.max_inner, X_prev if k > 1 else None)
        X_hat = result.X_hat
        if not result.converged:
            trace.inner_failures += 1
        if config.p == 1.0:
            trace.iterates.append(MMIterate(X_hat=X_hat, weights=w))
            trace.objective_l2half.append(objective_l2p(problem, X_hat, config.lam, 0.5))
            trace.converged = result.converged
            trace.outer_iterations = 1
            return trace

        w = update_weights(X_hat, problem.d, problem.n)
        trace.iterates.append(MMIterate(X_hat=X_hat, weights=w))
        trace.objective_l2half.append(objective_l2p(problem, X_hat, config.lam, 0.5))
        trace.outer_iterations = k
        change = np.max(np.abs(X_hat - X_prev))
        logger.debug("MM iteration %d: objective %.10g, change %.3e", k, trace.objective_l2half[-1], change)
        if change <= config.tau:
            reached_tau = True
            break
        X_prev = X_hat

    # converged requires every inner solve to have met its certificate
    trace.converged = reached_tau and trace.inner_failures == 0
    if not reached_tau:
        message = f"MM stopped after {config.k_mm} iterations without reaching tau={config.tau:.1e}"
        logger.warning(message)
        warnings.warn(message, MaxIterationsExceeded, stacklevel=2)
    elif trace.inner_failures:
        logger.warning("MM reached tau but %d inner solves hit the pass limit", trace.inner_failures)
    return trace


def _half_penalty_x_step(problem, gamma, lam, eps, tau, max_inner, X_prev, max_rounds):
    """
    Minimize 1/2 ||M - G X||^2 + sum_i ||X_[i]||^(1/2) / gamma_i by inner MM.

    The first surrogate uses w = lam * gamma; later ones w_i = 2 lam gamma_i sqrt(||X_[i]||).

    Returns:
        (X, number of weighted solves that hit the pass limit)
    """
    w = lam * gamma
    X = X_prev
    failures = 0
    for _ in range(max_rounds):
        result = _reweighted_step(problem, w, lam, eps, max_inner, X)
        failures += not result.converged
        X_next = result.X_hat
        w = 2.0 * lam * gamma * np.sqrt(group_norms(X_next, problem.d))
        if X is not None and np.max(np.abs(X_next - X)) <= tau:
            return X_next, failures
        X = X_next
    return X, failures


def full_map_alternating(
    problem,
    alpha,
    beta,
    p,
    gamma0,
    K,
    eps=DEFAULT_EPS,
    tau=DEFAULT_TAU,
    lam=None,
    max_inner=DEFAULT_MAX_INNER,
):
    """
    Full-MAP estimate of (X, gamma) by alternating minimization.

    The X-step minimizes 1/2 ||M - G X||^2 + sum_i ||X_[i]||^p / gamma_i, written as
    a weighted group lasso with ``w_i = lam * gamma_i`` (only the ratio
    lam / w_i = 1 / gamma_i matters; ``lam`` defaults to 2 / sqrt(beta)).
    The gamma-step is :func:`gamma_map_update`.

    Returns:
        (X, gamma, MAPTrace)
    """
    _check_convexity(alpha, problem.d, problem.t, p)
    gamma = np.asarray(gamma0, dtype=float).reshape(-1)
    if gamma.shape != (problem.n,) or np.any(gamma < 0):
        raise ValidationError({"gamma0": f"expected {problem.n} nonnegative hyperparameters"})
    if lam is None:
        lam = 2.0 / np.sqrt(beta)

    trace = MAPTrace()
    X_prev = problem.zeros()
    X = X_prev
    for k in range(1, K + 1):
        warm = X_prev if k > 1 else None
        if p == 1.0:
            result = _reweighted_step(problem, lam * gamma, lam, eps, max_inner, warm)
            X = result.X_hat
            trace.inner_failures += not result.converged
        else:
            X, failures = _half_penalty_x_step(problem, gamma, lam, eps, tau, max_inner, warm, max_rounds=K)
            trace.inner_failures += failures
            if X is None:
                X = problem.zeros()
        gamma = gamma_map_update(X, alpha, beta, p, problem.d, problem.t)
        trace.iterates.append(MAPIterate(X=X, gamma=gamma))
        trace.neg_log_posterior.append(negative_log_posterior(problem, X, gamma, alpha, beta, p))
        trace.outer_iterations = k
        change = np.max(np.abs(X - X_prev))
        logger.debug("full-MAP round %d: -log posterior %.10g, change %.3e", k, trace.neg_log_posterior[-1], change)
        if change <= tau:
            trace.converged = trace.inner_failures == 0
            break
        X_prev = X

    return X, gamma, trace
