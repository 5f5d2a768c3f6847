"""
Seedable synthetic MMV problems.

Designs have Gaussian rows with block-diagonal Toeplitz covariance
``rho^|i-j|`` and unit-norm columns. Noise is i.i.d. Gaussian with standard
deviation ``noise_level * ||G X_true||_inf``.
"""

import logging

import numpy as np
from numpy.random import SeedSequence
from scipy.linalg import block_diag, cholesky, toeplitz

from .constants import EXAMPLE_NOISE_LEVEL, EXAMPLE_RHO_STRONG, EXAMPLE_RHO_WEAK
from .exceptions import IndexOutOfRange, InvalidBlockSpec, InvalidWaveformShape, ValidationError
from .models import GroundTruth, MMVProblem, group_slice

logger = logging.getLogger(__name__)

EXAMPLE_M = 10
EXAMPLE_BLOCK = 10
EXAMPLE_ACTIVE = (5, 15)


def _block_covariance(blocks):
    return block_diag(*[toeplitz(rho ** np.arange(size)) for size, rho in blocks])


def gen_block_gaussian_design(m, q, blocks, seed=None):
    """
    Random design with correlated column blocks.

    Args:
        m: Number of rows
        q: Number of columns
        blocks: List of ``(size, rho)``; sizes must add up to q and 0 <= rho < 1
        seed: int, SeedSequence or Generator

    Returns:
        (m, q) array with unit l2-norm columns
    """
    errors = {}
    if sum(size for size, _ in blocks) != q:
        errors["blocks"] = f"block sizes add up to {sum(size for size, _ in blocks)}, expected {q}"
    if any(size < 1 for size, _ in blocks):
        errors["size"] = "every block needs at least one column"
    if any(not 0 <= rho < 1 for _, rho in blocks):
        errors["rho"] = "correlations must lie in [0, 1)"
    if m < 1:
        errors["m"] = "at least one row is required"
    if errors:
        raise InvalidBlockSpec(errors)

    rng = np.random.default_rng(seed)
    factor = cholesky(_block_covariance(blocks), lower=True)
    G = rng.standard_normal((m, q)) @ factor.T
    return G / np.linalg.norm(G, axis=0)


def _measure(G, X_true, noise_level, rng):
    signal = G @ X_true
    noise_sd = noise_level * float(np.max(np.abs(signal)))
    if noise_sd > 0:
        return signal + rng.normal(0.0, noise_sd, size=signal.shape), noise_sd
    return signal, 0.0


def _streams(seed):
    sequence = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
    design, noise = sequence.spawn(2)
    return sequence.entropy, design, np.random.default_rng(noise)


def _example(G, entropy, noise_rng, noise_level):
    X_true = np.zeros((G.shape[1], 1))
    for location in EXAMPLE_ACTIVE:
        X_true[location - 1] = 1.0
    M, noise_sd = _measure(G, X_true, noise_level, noise_rng)
    problem = MMVProblem(G=G, M=M, n=G.shape[1], d=1)
    truth = GroundTruth(
        X_true=X_true, active_set=EXAMPLE_ACTIVE, noise_level=noise_level, noise_sd=noise_sd, seed=entropy
    )
    return problem, truth


def gen_example1(seed=None, noise_level=EXAMPLE_NOISE_LEVEL):
    """Two column blocks of 10 with correlations 0.5 and 0.95, truth at locations 5 and 15."""
    entropy, design, noise_rng = _streams(seed)
    G = gen_block_gaussian_design(
        EXAMPLE_M, 2 * EXAMPLE_BLOCK, [(EXAMPLE_BLOCK, EXAMPLE_RHO_WEAK), (EXAMPLE_BLOCK, EXAMPLE_RHO_STRONG)], design
    )
    return _example(G, entropy, noise_rng, noise_level)


def gen_example2(seed=None, noise_level=EXAMPLE_NOISE_LEVEL):
    """A 10-column block with correlation 0.95 repeated twice, truth at locations 5 and 15."""
    entropy, design, noise_rng = _streams(seed)
    half = gen_block_gaussian_design(EXAMPLE_M, EXAMPLE_BLOCK, [(EXAMPLE_BLOCK, EXAMPLE_RHO_STRONG)], design)
    return _example(np.hstack([half, half]), entropy, noise_rng, noise_level)


def gen_mmv_simulation(n, d, t, active, m, seed=None, noise_level=EXAMPLE_NOISE_LEVEL, rho=0.0):
    """
    Desk-scale simulation with ``n`` locations of ``d`` orientations and ``t`` time samples.

    Args:
        active: List of ``(location, waveform)`` with 1-based location and (d, t) waveform
        m: Number of sensors
        rho: Toeplitz correlation of the single design block
    """
    if min(n, d, t, m) < 1:
        raise ValidationError({"shape": "n, d, t and m must be positive"})
    X_true = np.zeros((n * d, t))
    locations = []
    for location, waveform in active:
        if not 1 <= location <= n:
            raise IndexOutOfRange(f"location {location} outside 1..{n}")
        if location in locations:
            raise ValidationError({"active": f"location {location} listed twice"})
        waveform = np.asarray(waveform, dtype=float)
        if waveform.ndim == 1 and d == 1:
            waveform = waveform[np.newaxis, :]
        if waveform.shape != (d, t):
            raise InvalidWaveformShape({"waveform": f"expected shape {(d, t)}, got {waveform.shape}"})
        X_true[group_slice(location, d)] = waveform
        locations.append(location)

    entropy, design, noise_rng = _streams(seed)
    G = gen_block_gaussian_design(m, n * d, [(n * d, rho)], design)
    M, noise_sd = _measure(G, X_true, noise_level, noise_rng)
    logger.debug("Simulated problem with m=%d, n=%d, d=%d, t=%d, noise sd %.3g", m, n, d, t, noise_sd)
    # zero waveforms do not count as active
    support = tuple(sorted(loc for loc in locations if np.any(X_true[group_slice(loc, d)])))
    truth = GroundTruth(
        X_true=X_true, active_set=support, noise_level=noise_level, noise_sd=noise_sd, seed=entropy
    )
    return MMVProblem(G=G, M=M, n=n, d=d), truth
