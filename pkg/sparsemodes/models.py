from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import DEFAULT_EPS, DEFAULT_MAX_INNER, DEFAULT_MAX_ITER, DEFAULT_TAU
from .exceptions import DimensionMismatch, IndexOutOfRange, NonFiniteEntry, ValidationError


def _frozen_array(values, ndim):
    array = np.array(values, dtype=float, copy=True)
    if array.ndim == 1 and ndim == 2:
        array = array[:, np.newaxis]
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MMVProblem:
    """
    Multiple measurement vector regression problem ``M = G X + E``.

    X has ``q = d * n`` rows split into ``n`` groups of ``d`` consecutive rows
    and ``t`` columns shared with M. Arrays are copied and made read-only.
    """

    G: np.ndarray
    M: np.ndarray
    n: int
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "G", _frozen_array(self.G, 2))
        object.__setattr__(self, "M", _frozen_array(self.M, 2))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))

    @property
    def m(self):
        return self.G.shape[0]

    @property
    def q(self):
        return self.d * self.n

    @property
    def t(self):
        return self.M.shape[1]

    def zeros(self):
        """Return an all-zero coefficient matrix of shape (q, t)."""
        return np.zeros((self.q, self.t))

    def manifest(self):
        return {"m": self.m, "n": self.n, "d": self.d, "t": self.t, "q": self.q}


def validate_problem(problem):
    """
    Check the shape and finiteness invariants of a problem.

    Raises:
        DimensionMismatch: G does not have d*n columns or G and M disagree on m
        NonFiniteEntry: G or M contains NaN or Inf
    """
    if problem.n < 1 or problem.d < 1:
        raise DimensionMismatch({"n": "group count and orientation count must be positive"})
    if problem.G.ndim != 2 or problem.M.ndim != 2:
        raise DimensionMismatch("G and M must be matrices")
    if problem.G.shape[1] != problem.d * problem.n:
        raise DimensionMismatch(
            {"G": f"expected {problem.d * problem.n} columns (d={problem.d}, n={problem.n}), got {problem.G.shape[1]}"}
        )
    if problem.M.shape[0] != problem.G.shape[0]:
        raise DimensionMismatch({"M": f"expected {problem.G.shape[0]} rows, got {problem.M.shape[0]}"})
    if problem.M.shape[1] < 1:
        raise DimensionMismatch({"M": "at least one column is required"})
    for name in ("G", "M"):
        if not np.all(np.isfinite(getattr(problem, name))):
            raise NonFiniteEntry({name: "contains NaN or infinite entries"})


def group_slice(i, d):
    """Row slice of 1-based group ``i``."""
    return slice((i - 1) * d, i * d)


def group_view(X, i, d):
    """
    Get the d x t block of X belonging to group i.

    Args:
        X: Coefficient matrix of shape (q, t)
        i: 1-based group index
        d: Orientations per group

    Returns:
        View on rows (i-1)*d ... i*d-1 of X
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    n = X.shape[0] // d
    if not 1 <= i <= n:
        raise IndexOutOfRange(f"group index {i} outside [1, {n}]")
    return X[group_slice(i, d)]


def group_norms(X, d):
    """Frobenius norm of every d x t group of X, as a length-n vector."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    return np.linalg.norm(X.reshape(X.shape[0] // d, -1), axis=1)


def expand_weights(weights, d):
    """Repeat each per-group weight d times (the diagonal of ``diag(w ⊗ 1_d)``)."""
    return np.repeat(np.asarray(weights, dtype=float), d)


@dataclass(frozen=True, eq=False)
class HyperState:
    """Per-group hyperparameters gamma and the derived MM weights."""

    gamma: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if gamma.shape != weights.shape:
            raise DimensionMismatch("gamma and weights must have the same length")
        if np.any(gamma < 0) or np.any(weights < 0):
            raise ValidationError({"gamma": "hyperparameters and weights must be nonnegative"})
        object.__setattr__(self, "gamma", _frozen_array(gamma, 1))
        object.__setattr__(self, "weights", _frozen_array(weights, 1))

    @classmethod
    def from_gamma(cls, gamma, lam):
        gamma = np.asarray(gamma, dtype=float)
        return cls(gamma=gamma, weights=lam * gamma)

    @classmethod
    def uniform(cls, n, lam):
        """State matching unit MM weights, i.e. gamma = 1/lambda."""
        return cls(gamma=np.full(n, 1.0 / lam), weights=np.ones(n))

    def expanded(self, d):
        return expand_weights(self.weights, d)


@dataclass(frozen=True)
class MMConfig:
    """Parameters of the MM / Adaptive Lasso iterations."""

    lam: float
    p: float = 0.5
    eps: float = DEFAULT_EPS
    tau: float = DEFAULT_TAU
    k_mm: int = DEFAULT_MAX_ITER
    max_inner: int = DEFAULT_MAX_INNER

    def __post_init__(self):
        self.clean()

    def clean(self):
        errors = {}
        if not self.lam > 0:
            errors["lam"] = "regularization must be positive"
        if self.p not in (0.5, 1.0):
            errors["p"] = "penalty exponent must be 1 or 1/2"
        if not self.eps > 0:
            errors["eps"] = "inner precision must be positive"
        if not self.tau > 0:
            errors["tau"] = "stopping tolerance must be positive"
        if self.k_mm < 1:
            errors["k_mm"] = "at least one outer iteration is required"
        if self.max_inner < 1:
            errors["max_inner"] = "at least one inner pass is required"
        if errors:
            raise ValidationError(errors)


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of the blocked Gibbs sampler."""

    k: int
    alpha: float
    beta: float
    k0: int = 0
    k_sc: int = 1
    k_ss: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        self.clean()

    def clean(self):
        errors = {}
        if self.k0 < 0:
            errors["k0"] = "burn-in must be nonnegative"
        if self.k < 1:
            errors["k"] = "at least one retained sample is required"
        if self.k_sc < 0:
            errors["k_sc"] = "sweep count must be nonnegative"
        if self.k_ss < 1:
            errors["k_ss"] = "at least one slice step is required"
        if not self.beta > 0:
            errors["beta"] = "hyper-prior scale must be positive"
        if self.seed is not None and not 0 <= self.seed < 2**64:
            errors["seed"] = "seed must be a 64-bit unsigned integer"
        if errors:
            raise ValidationError(errors)

    def shape_offset(self, d, t, p=1.0):
        """Exponent ``alpha - 1 - d*t/p`` of gamma in its conditional density."""
        return self.alpha - 1.0 - d * t / p

    @classmethod
    def for_lambda(cls, lam, d, t, **kwargs):
        """Config with the hyper-prior matching MM at regularization ``lam``."""
        from .mm import hbm_params_from_lambda

        alpha, beta = hbm_params_from_lambda(lam, d, t)
        return cls(alpha=alpha, beta=beta, **kwargs)


@dataclass(frozen=True, eq=False)
class LassoResult:
    """Solution of one weighted l2,1 problem."""

    X_hat: np.ndarray
    X_scaled: np.ndarray
    objective: float
    dual_gap: float
    iterations: int
    converged: bool = True


@dataclass(frozen=True, eq=False)
class MMIterate:
    X_hat: np.ndarray
    weights: np.ndarray


@dataclass(eq=False)
class MMTrace:
    """Iterates of the MM algorithm and the l2,1/2 objective along them."""

    iterates: list = field(default_factory=list)
    objective_l2half: list = field(default_factory=list)
    converged: bool = False
    outer_iterations: int = 0
    inner_failures: int = 0

    @property
    def X_hat(self):
        return self.iterates[-1].X_hat

    @property
    def weights(self):
        return self.iterates[-1].weights

    def weight_sequence(self):
        return [iterate.weights for iterate in self.iterates]


@dataclass(frozen=True, eq=False)
class MAPIterate:
    X: np.ndarray
    gamma: np.ndarray


@dataclass(eq=False)
class MAPTrace:
    """Iterates of the full-MAP alternating minimization."""

    iterates: list = field(default_factory=list)
    neg_log_posterior: list = field(default_factory=list)
    converged: bool = False
    outer_iterations: int = 0
    inner_failures: int = 0

    def weight_sequence(self, lam):
        """MM weights ``lam * gamma`` corresponding to every iterate."""
        return [lam * iterate.gamma for iterate in self.iterates]


@dataclass(frozen=True)
class SliceCoefficients:
    """
    Coefficients of a single-component conditional density

    ``exp(-quad z^2 - lin z) * exp(-prior_scale (z^2 + prior_offset)^(p/2))``.
    """

    quad: float
    lin: float
    prior_scale: float
    prior_offset: float
    p: float = 1.0

    def log_density(self, z):
        """Unnormalized log density at z."""
        return self.log_likelihood_factor(z) + self.log_prior_factor(z)

    def log_likelihood_factor(self, z):
        return -self.quad * z * z - self.lin * z

    def log_prior_factor(self, z):
        return -self.prior_scale * (z * z + self.prior_offset) ** (self.p / 2.0)


@dataclass(eq=False)
class Chain:
    """Retained samples of the blocked Gibbs sampler."""

    X_samples: np.ndarray
    gamma_samples: np.ndarray
    config: SamplerConfig
    seed: Optional[int] = None
    gamma_proposals: int = 0
    gamma_accepted: int = 0

    def __len__(self):
        return self.X_samples.shape[0]

    @property
    def gamma_acceptance_rate(self):
        if self.gamma_proposals == 0:
            return None
        return self.gamma_accepted / self.gamma_proposals


@dataclass(eq=False)
class ModeChain:
    """MM-optimized modes launched from every retained chain sample."""

    modes: np.ndarray
    sources: Chain
    objectives: np.ndarray
    converged: np.ndarray
    d: int = 1
    uniform_mode: Optional[np.ndarray] = None
    uniform_objective: Optional[float] = None
    problem: Optional[MMVProblem] = None
    lam: Optional[float] = None

    def __len__(self):
        return self.modes.shape[0]

    def best_mode(self):
        """
        Lowest-objective mode, counting the uniform-start solve as a candidate.

        Returns:
            (mode, objective); ties go to the chain mode
        """
        if len(self) == 0:
            return self.uniform_mode, self.uniform_objective
        index = int(np.argmin(self.objectives))
        mode, objective = self.modes[index], float(self.objectives[index])
        if self.uniform_objective is not None and self.uniform_objective < objective:
            return self.uniform_mode, float(self.uniform_objective)
        return mode, objective


@dataclass(frozen=True, eq=False)
class ObjectiveHistogram:
    """Binned l2,1/2 objective values of a mode chain."""

    counts: np.ndarray
    edges: np.ndarray
    uniform_marker: Optional[float] = None

    def rows(self):
        """(bin_left, bin_right, count) per bin."""
        return [
            (float(self.edges[b]), float(self.edges[b + 1]), int(self.counts[b])) for b in range(len(self.counts))
        ]


@dataclass(frozen=True)
class ModeCluster:
    """Modes sharing one support (1-based location indices)."""

    support: tuple
    count: int
    frequency: float
    best_objective: float
    best_index: int

    def to_dict(self):
        return {
            "support": list(self.support),
            "count": self.count,
            "frequency": self.frequency,
            "best_objective": self.best_objective,
            "best_index": self.best_index,
        }


@dataclass(eq=False)
class ModeSummary:
    """Clustered modes, mixing and co-occurrence statistics of a mode chain."""

    clusters: list
    mean_switch_steps: Optional[float]
    cooccurrence: np.ndarray
    marked_uniform_mode: Optional[int] = None
    total: int = 0

    def to_dict(self):
        return {
            "total": self.total,
            "cluster_count": len(self.clusters),
            "clusters": [cluster.to_dict() for cluster in self.clusters],
            "mean_switch_steps": self.mean_switch_steps,
            "marked_uniform_mode": self.marked_uniform_mode,
        }


@dataclass(eq=False)
class GroundTruth:
    """Coefficients and noise used to generate a synthetic problem."""

    X_true: np.ndarray
    active_set: tuple
    noise_level: float
    noise_sd: float = 0.0
    seed: Optional[int] = None

    def to_dict(self):
        return {
            "active_set": list(self.active_set),
            "amplitudes": np.asarray(self.X_true).tolist(),
            "noise_level": self.noise_level,
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }


@dataclass
class RunManifest:
    """Record of one CLI invocation and the artifacts it produced."""

    command: list
    config: dict
    seeds: list
    inputs: dict
    outputs: dict
    duration_seconds: float
    version: str
    status: str

    def to_dict(self):
        return {
            "command": list(self.command),
            "config": self.config,
            "seeds": list(self.seeds),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_seconds": self.duration_seconds,
            "version": self.version,
            "status": self.status,
        }
