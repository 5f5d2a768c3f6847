"""
Weighted l2,1-regularized least squares solved by block coordinate descent.

The solver works on the rescaled problem

    min_X  1/2 ||M - G W X||_F^2 + lam * sum_i ||X_[i]||_F

with ``W = diag(w ⊗ 1_d)`` and returns ``X_hat = W X``. Groups whose weight
is zero are pruned: they are never updated and stay exactly zero.
"""

import logging
import warnings

import numpy as np

from .constants import DEFAULT_EPS, DEFAULT_MAX_INNER, KKT_TOLERANCE_FACTOR
from .exceptions import DegenerateData, MaxIterationsExceeded, ValidationError
from .models import HyperState, LassoResult, expand_weights, group_norms

logger = logging.getLogger(__name__)


def lambda_max(G, M, n, d):
    """
    Smallest regularization for which the unweighted l2,1 solution is zero.

    Args:
        G: Design matrix (m, q)
        M: Measurements (m, t)
        n: Number of groups
        d: Orientations per group

    Returns:
        max_i ||(G^T M)_[i]||_F
    """
    G = np.asarray(G, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, np.newaxis]
    if G.shape[1] != n * d:
        raise ValidationError({"G": f"expected {n * d} columns, got {G.shape[1]}"})
    value = float(np.max(group_norms(G.T @ M, d)))
    if value == 0.0:
        raise DegenerateData("G^T M is identically zero; every lambda gives the zero solution")
    return value


def group_soft_threshold(B, threshold):
    """
    Proximal operator of ``threshold * ||.||_F``.

    Returns the zero matrix when ||B||_F <= threshold, otherwise B shrunk
    towards zero by ``threshold`` in Frobenius norm.
    """
    if threshold < 0:
        raise ValidationError({"threshold": "must be nonnegative"})
    B = np.asarray(B, dtype=float)
    norm = np.linalg.norm(B)
    if norm <= threshold:
        return np.zeros_like(B)
    return (1.0 - threshold / norm) * B


def objective_l2p(problem, X, lam, p):
    """1/2 ||M - G X||_F^2 + lam * sum_i ||X_[i]||_F^p."""
    if p not in (0.5, 1.0):
        raise ValidationError({"p": "penalty exponent must be 1 or 1/2"})
    X = np.asarray(X, dtype=float).reshape(problem.q, problem.t)
    residual = problem.M - problem.G @ X
    penalty = np.sum(group_norms(X, problem.d) ** p)
    return float(0.5 * np.sum(residual * residual) + lam * penalty)


def kkt_violation(G_tilde, M, X_tilde, lam, d):
    """
    Per-group violation of the l2,1 optimality conditions.

    For an active group the violation is ||(G~^T R)_[i] - lam X_[i] / ||X_[i]|| ||_F,
    for an inactive group it is max(0, ||(G~^T R)_[i]||_F - lam), with
    R = M - G~ X~.
    """
    G_tilde = np.asarray(G_tilde, dtype=float)
    X_tilde = np.asarray(X_tilde, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, np.newaxis]
    n = G_tilde.shape[1] // d
    correlation = (G_tilde.T @ (M - G_tilde @ X_tilde)).reshape(n, -1)
    blocks = X_tilde.reshape(n, -1)
    norms = np.linalg.norm(blocks, axis=1)
    violation = np.empty(n)
    active = norms > 0
    subgradient = lam * blocks[active] / norms[active, np.newaxis]
    violation[active] = np.linalg.norm(correlation[active] - subgradient, axis=1)
    violation[~active] = np.maximum(np.linalg.norm(correlation[~active], axis=1) - lam, 0.0)
    return violation


def _duality_gap(M, G_tilde, X_tilde, residual, lam, d):
    n = G_tilde.shape[1] // d
    primal = 0.5 * np.sum(residual * residual) + lam * np.sum(group_norms(X_tilde, d))
    correlation = np.linalg.norm((G_tilde.T @ residual).reshape(n, -1), axis=1)
    max_correlation = correlation.max() if n else 0.0
    scale = 1.0 if max_correlation <= lam else lam / max_correlation
    theta = scale * residual
    dual = 0.5 * np.sum(M * M) - 0.5 * np.sum((M - theta) ** 2)
    return max(float(primal - dual), 0.0), float(primal)


def _as_weight_vector(weights, n):
    if isinstance(weights, HyperState):
        weights = weights.weights
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if weights.shape != (n,):
        raise ValidationError({"weights": f"expected {n} weights, got {weights.shape[0]}"})
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValidationError({"weights": "weights must be finite and nonnegative"})
    return weights


def solve_weighted_l21(problem, weights, lam, eps=DEFAULT_EPS, max_inner=DEFAULT_MAX_INNER, X_init=None):
    """
    Solve the weighted group lasso by cyclic block coordinate descent.

    Each block update is one proximal gradient step with step size
    1/||G~_[i]||_2^2. Iterations stop once the duality gap is below ``eps`` and
    the largest KKT violation is below ``KKT_TOLERANCE_FACTOR * eps``.

    Args:
        problem: MMVProblem
        weights: HyperState or per-group weights (length n, nonnegative)
        lam: Regularization (> 0)
        eps: Target precision
        max_inner: Maximum number of full passes over the groups
        X_init: Optional warm start in the scaled variables X~

    Returns:
        LassoResult with X_hat = W X~; ``converged`` is False when the pass
        limit was reached (a MaxIterationsExceeded warning is issued).
    """
    if not lam > 0:
        raise ValidationError({"lam": "regularization must be positive"})
    d, n = problem.d, problem.n
    w = _as_weight_vector(weights, n)
    w_diag = expand_weights(w, d)
    M = problem.M
    G_tilde = problem.G * w_diag

    blocks = [G_tilde[:, i * d : (i + 1) * d] for i in range(n)]
    lipschitz = np.array([np.linalg.norm(block, 2) ** 2 for block in blocks])
    active = [i for i in range(n) if w[i] > 0 and lipschitz[i] > 0]

    X_tilde = np.zeros((problem.q, problem.t))
    if X_init is not None:
        X_init = np.asarray(X_init, dtype=float).reshape(problem.q, problem.t)
        for i in active:
            X_tilde[i * d : (i + 1) * d] = X_init[i * d : (i + 1) * d]
    residual = M - G_tilde @ X_tilde

    def _certificate():
        gap, _ = _duality_gap(M, G_tilde, X_tilde, residual, lam, d)
        if gap > eps:
            return gap, False
        return gap, kkt_violation(G_tilde, M, X_tilde, lam, d).max() <= KKT_TOLERANCE_FACTOR * eps

    gap, done = _certificate()
    iterations = 0
    while not done and iterations < max_inner:
        for i in active:
            rows = slice(i * d, (i + 1) * d)
            previous = X_tilde[rows]
            step = previous + blocks[i].T @ residual / lipschitz[i]
            updated = group_soft_threshold(step, lam / lipschitz[i])
            delta = updated - previous
            if np.any(delta):
                residual -= blocks[i] @ delta
                X_tilde[rows] = updated
        iterations += 1
        # refresh the residual to keep the certificate exact
        residual = M - G_tilde @ X_tilde
        gap, done = _certificate()
        logger.debug("BCD pass %d: duality gap %.3e", iterations, gap)

    if not done:
        message = f"group lasso stopped after {iterations} passes with duality gap {gap:.3e} (eps={eps:.1e})"
        logger.warning(message)
        warnings.warn(message, MaxIterationsExceeded, stacklevel=2)

    objective = 0.5 * np.sum(residual * residual) + lam * np.sum(group_norms(X_tilde, d))
    return LassoResult(
        X_hat=w_diag[:, np.newaxis] * X_tilde,
        X_scaled=X_tilde,
        objective=float(objective),
        dual_gap=gap,
        iterations=iterations,
        converged=bool(done),
    )
