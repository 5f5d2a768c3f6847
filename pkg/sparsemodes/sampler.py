"""
Blocked Gibbs sampling of the joint (X, gamma) posterior.

Coefficients are refreshed one at a time by slice sampling their scalar
conditional, hyperparameters by an exact accept-reject sampler for the
density ``exp(-c/x - x/beta)``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import geninvgauss

from .constants import TRUNCNORM_TAIL_CUTOFF
from .exceptions import DegenerateGamma, EmptyInterval, NumericalUnderflow, ValidationError
from .models import Chain, SliceCoefficients, group_norms, group_slice

logger = logging.getLogger(__name__)

SAMPLER_PENALTY_EXPONENT = 1.0


@dataclass
class AcceptanceStats:
    """Proposal and acceptance counters of the hyperparameter sampler."""

    proposals: int = 0
    accepted: int = 0

    @property
    def rate(self):
        if self.proposals == 0:
            return None
        return self.accepted / self.proposals


def precompute_group_gram(G, l, d):
    """
    Rows of the Gram matrix belonging to group ``l`` (1-based).

    Returns:
        (G[:, group l])^T G with shape (d, q)
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[1] // d
    if not 1 <= l <= n:
        raise ValidationError({"l": f"group index {l} outside 1..{n}"})
    return G[:, group_slice(l, d)].T @ G


def sc_coefficients(problem, X, i, j, gamma, group_gram, GtM=None):
    """
    Coefficients of the conditional density of the single entry ``X[i, j]``.

    ``i`` and ``j`` are 0-based row and column indices, ``group_gram`` is the
    output of :func:`precompute_group_gram` for the group containing row ``i``.
    The linear term is the restriction of the likelihood with every other
    entry held fixed: ``lin = -G[:, i]^T (M[:, j] - G[:, -i] X[-i, j])``.
    """
    if not (0 <= i < problem.q and 0 <= j < problem.t):
        raise ValidationError({"index": f"({i}, {j}) outside ({problem.q}, {problem.t})"})
    d = problem.d
    l = i // d
    r = i - l * d
    gamma_l = float(gamma[l])
    if gamma_l <= 0:
        raise DegenerateGamma(f"gamma of group {l + 1} is {gamma_l}; the conditional prior is undefined")

    gram_row = group_gram[r]
    column_sq = gram_row[i]
    correlation = GtM[i, j] if GtM is not None else problem.G[:, i] @ problem.M[:, j]
    lin = -(correlation - gram_row @ X[:, j] + column_sq * X[i, j])

    block = X[l * d : (l + 1) * d]
    offset = max(float(np.sum(block * block)) - X[i, j] ** 2, 0.0)
    return SliceCoefficients(
        quad=0.5 * column_sq,
        lin=float(lin),
        prior_scale=1.0 / gamma_l,
        prior_offset=offset,
        p=SAMPLER_PENALTY_EXPONENT,
    )


def _upper_tail(a, b, rng):
    """Standard normal truncated to [a, b] with 0 <= a < b."""
    if a > TRUNCNORM_TAIL_CUTOFF:
        # exponential proposal with rate a
        span = b - a
        while True:
            u = rng.random()
            z = a - np.log1p(u * np.expm1(-a * span)) / a
            if np.log1p(-rng.random()) <= -0.5 * (z - a) ** 2:
                return z
    sa = special.ndtr(-a)
    sb = special.ndtr(-b)
    return -special.ndtri(sa - rng.random() * (sa - sb))


def _standard_truncated_normal(a, b, rng):
    if a >= 0:
        x = _upper_tail(a, b, rng)
    elif b <= 0:
        x = -_upper_tail(-b, -a, rng)
    else:
        pa = special.ndtr(a)
        pb = special.ndtr(b)
        x = special.ndtri(pa + rng.random() * (pb - pa))
    return float(np.clip(x, a, b))


def sample_truncated_gaussian(quad, lin, lo, hi, rng):
    """
    Exact draw from the density proportional to ``exp(-quad z^2 - lin z)`` on [lo, hi].

    Uses inverse-CDF sampling on the standardized interval and one-sided
    exponential rejection when the interval lies far in a tail.
    """
    if not lo < hi:
        raise EmptyInterval({"interval": f"[{lo}, {hi}] is empty"})
    if not quad > 0:
        raise ValidationError({"quad": "quadratic coefficient must be positive"})
    mu = -lin / (2.0 * quad)
    sigma = 1.0 / np.sqrt(2.0 * quad)
    x = _standard_truncated_normal((lo - mu) / sigma, (hi - mu) / sigma, rng)
    return float(np.clip(mu + sigma * x, lo, hi))


def _truncated_exponential(lin, bound, rng):
    """Draw from ``exp(-lin z)`` on [-bound, bound]."""
    if lin == 0:
        return float(rng.uniform(-bound, bound))
    # inverse CDF relative to the heavier end
    rate = abs(lin)
    z = -bound - np.log1p(-rng.random() * -np.expm1(-2.0 * rate * bound)) / rate
    return float(np.clip(z if lin > 0 else -z, -bound, bound))


def slice_bound(coeffs, log_y):
    """Half-width of the slice ``{z : log p2(z) >= log_y}``."""
    c = coeffs.prior_scale
    if c == 0:
        return np.inf
    with np.errstate(over="ignore"):
        squared = (-log_y / c) ** (2.0 / coeffs.p) - coeffs.prior_offset
    if np.isnan(squared):
        raise NumericalUnderflow(f"slice level {log_y} gives no real bound")
    return float(np.sqrt(max(squared, 0.0)))


def slice_sample_coefficient(coeffs, z0, K_SS, rng):
    """
    Slice-within-Gibbs update of one coefficient.

    Each round draws the level under the prior factor in log space, then a new
    value from the likelihood factor truncated to the slice.

    Args:
        coeffs: SliceCoefficients of the coefficient's conditional
        z0: Current value
        K_SS: Number of slice rounds
        rng: numpy Generator

    Returns:
        The value after the last round
    """
    z = float(z0)
    for _ in range(K_SS):
        log_y = coeffs.log_prior_factor(z) + np.log(1.0 - rng.random())
        bound = max(slice_bound(coeffs, log_y), abs(z))
        if bound <= 0:
            return z
        if coeffs.quad == 0:
            if not np.isfinite(bound):
                raise ValidationError({"coeffs": "flat likelihood and flat prior give an improper conditional"})
            z = _truncated_exponential(coeffs.lin, bound, rng)
        else:
            z = sample_truncated_gaussian(coeffs.quad, coeffs.lin, -bound, bound, rng)
    return z


@dataclass(frozen=True)
class GammaEnvelope:
    x_hat: float
    log_p_hat: float
    x_tilde: float
    log_tail: float
    log_head: float


def gamma_envelope(c, beta):
    """
    Dominating function of ``exp(-c/x - x/beta)`` for c > 0.

    The density peaks at ``x_hat = sqrt(beta c)``. Below ``x_tilde`` it is
    bounded by its peak value, above it by ``exp(-x/beta)``; ``log_head`` and
    ``log_tail`` are the log masses of the two pieces.
    """
    x_hat = np.sqrt(beta * c)
    log_p_hat = -c / x_hat - x_hat / beta
    x_tilde = beta * c / x_hat + x_hat
    return GammaEnvelope(
        x_hat=float(x_hat),
        log_p_hat=float(log_p_hat),
        x_tilde=float(x_tilde),
        log_tail=float(np.log(beta) - x_tilde / beta),
        log_head=float(log_p_hat + np.log(x_tilde)),
    )


def sample_gamma_conditional(c, beta, rng, stats=None):
    """
    Exact draw from ``p(x) ∝ exp(-c/x) exp(-x/beta)`` on (0, inf).

    The proposal is uniform below ``x~ = 2 sqrt(beta c)`` (under the density's
    peak value) and a shifted exponential above it; all branch weights are
    handled as logarithms.

    Args:
        c: Nonnegative scale, typically ||X_[i]||_F^p
        beta: Hyper-prior scale (> 0)
        rng: numpy Generator
        stats: Optional AcceptanceStats updated in place
    """
    if c < 0:
        raise ValidationError({"c": "must be nonnegative"})
    if not beta > 0:
        raise ValidationError({"beta": "must be positive"})
    if c == 0:
        if stats is not None:
            stats.proposals += 1
            stats.accepted += 1
        return float(rng.exponential(beta))

    envelope = gamma_envelope(c, beta)
    log_p_hat, x_tilde = envelope.log_p_hat, envelope.x_tilde
    tail_share = np.exp(envelope.log_tail - np.logaddexp(envelope.log_tail, envelope.log_head))

    while True:
        if stats is not None:
            stats.proposals += 1
        log_u = np.log(1.0 - rng.random())
        w = 1.0 - rng.random()
        if rng.random() < tail_share:
            x = x_tilde - beta * np.log(w)
            accept = log_u < -c / x
        else:
            x = w * x_tilde
            accept = log_u + log_p_hat < -c / x - x / beta
        if accept:
            if stats is not None:
                stats.accepted += 1
            return float(x)


def sample_gamma_conditional_general(c, beta, shape, rng):
    """
    Draw from ``x^shape exp(-c/x - x/beta)``, a generalized inverse Gaussian.

    Falls back to Gamma(shape + 1, beta) when ``c == 0``.
    """
    if c < 0:
        raise ValidationError({"c": "must be nonnegative"})
    if c == 0:
        if shape <= -1:
            raise ValidationError({"shape": "density is not integrable at zero"})
        return float(rng.gamma(shape + 1.0, beta))
    scale = np.sqrt(beta * c)
    draw = geninvgauss.rvs(shape + 1.0, 2.0 * np.sqrt(c / beta), scale=scale, random_state=rng)
    return float(draw)


def _redraw_gamma(X, config, d, t, rng, stats):
    c = group_norms(X, d) ** SAMPLER_PENALTY_EXPONENT
    shape = config.shape_offset(d, t, SAMPLER_PENALTY_EXPONENT)
    if shape == 0:
        return np.array([sample_gamma_conditional(value, config.beta, rng, stats) for value in c])
    return np.array([sample_gamma_conditional_general(value, config.beta, shape, rng) for value in c])


def gibbs_sample(problem, config, X_init=None, gamma_init=None, rng=None):
    """
    Blocked Gibbs sampler alternating coefficient sweeps and hyperparameter redraws.

    Every outer step performs ``config.k_sc`` sweeps, each visiting the groups
    in a fresh random order and slice-updating every entry of the group, then
    redraws all gamma. The first ``config.k0`` states are discarded.

    Args:
        problem: MMVProblem
        config: SamplerConfig
        X_init: Initial coefficients (default zero)
        gamma_init: Initial hyperparameters, positive (default beta)
        rng: numpy Generator; defaults to one seeded with ``config.seed``

    Returns:
        Chain with ``config.k`` retained samples
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    d, n, q, t = problem.d, problem.n, problem.q, problem.t
    X = problem.zeros() if X_init is None else np.array(X_init, dtype=float).reshape(q, t)
    gamma = np.full(n, config.beta) if gamma_init is None else np.array(gamma_init, dtype=float).reshape(-1)
    if gamma.shape != (n,) or np.any(gamma <= 0):
        raise ValidationError({"gamma_init": f"expected {n} positive hyperparameters"})

    GtM = problem.G.T @ problem.M
    acceptance = AcceptanceStats()
    X_samples = np.empty((config.k, q, t))
    gamma_samples = np.empty((config.k, n))

    for step in range(config.k0 + config.k):
        for _ in range(config.k_sc):
            for l in rng.permutation(n) + 1:
                gram = precompute_group_gram(problem.G, l, d)
                for i in range((l - 1) * d, l * d):
                    for j in range(t):
                        coeffs = sc_coefficients(problem, X, i, j, gamma, gram, GtM)
                        X[i, j] = slice_sample_coefficient(coeffs, X[i, j], config.k_ss, rng)
        gamma = _redraw_gamma(X, config, d, t, rng, acceptance)
        if step >= config.k0:
            X_samples[step - config.k0] = X
            gamma_samples[step - config.k0] = gamma
        if (step + 1) % 1000 == 0:
            logger.debug("Gibbs step %d of %d", step + 1, config.k0 + config.k)

    logger.info(
        "Gibbs sampler retained %d samples after %d burn-in steps (gamma acceptance %s)",
        config.k,
        config.k0,
        f"{acceptance.rate:.3f}" if acceptance.rate is not None else "n/a",
    )
    return Chain(
        X_samples=X_samples,
        gamma_samples=gamma_samples,
        config=config,
        seed=config.seed,
        gamma_proposals=acceptance.proposals,
        gamma_accepted=acceptance.accepted,
    )
