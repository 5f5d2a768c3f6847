"""
On-disk formats: problem directories, CSV tables, NDJSON chains and run manifests.
"""

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .constants import CSV_FLOAT_FORMAT, DESIGN_FILE, MEASUREMENT_FILE, PROBLEM_MANIFEST, TRUTH_FILE
from .exceptions import DimensionMismatch, ValidationError
from .models import MMVProblem, group_norms, validate_problem

logger = logging.getLogger(__name__)


def _to_builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path, data):
    """Write ``data`` as indented JSON with sorted keys."""
    path = Path(path)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, default=_to_builtin) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_matrix(path, values, header=None):
    """Write a 2-D array as comma-separated values with 17 significant digits."""
    path = Path(path)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if header:
        np.savetxt(path, values, fmt=CSV_FLOAT_FORMAT, delimiter=",", header=",".join(header), comments="")
    else:
        np.savetxt(path, values, fmt=CSV_FLOAT_FORMAT, delimiter=",")
    return path


def read_matrix(path, header=False):
    """Read a CSV written by :func:`write_matrix` as a 2-D float array."""
    return np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1 if header else 0)


def file_digest(path):
    """SHA-256 hex digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_problem(problem, directory):
    """
    Store a problem as ``problem.json`` plus ``G.csv`` and ``M.csv``.

    Returns:
        List of written paths
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = dict(problem.manifest(), G=DESIGN_FILE, M=MEASUREMENT_FILE)
    return [
        write_json(directory / PROBLEM_MANIFEST, meta),
        write_matrix(directory / DESIGN_FILE, problem.G),
        write_matrix(directory / MEASUREMENT_FILE, problem.M),
    ]


def read_problem(directory):
    """
    Load and validate a problem directory written by :func:`write_problem`.

    ``m``, ``q`` and ``t`` are optional in ``problem.json`` but must match the
    CSV shapes when present.
    """
    directory = Path(directory)
    meta = read_json(directory / PROBLEM_MANIFEST)
    missing = [key for key in ("n", "d") if key not in meta]
    if missing:
        raise ValidationError({key: f"missing from {PROBLEM_MANIFEST}" for key in missing})
    G = read_matrix(directory / meta.get("G", DESIGN_FILE))
    M = read_matrix(directory / meta.get("M", MEASUREMENT_FILE))
    shapes = {"m": G.shape[0], "q": G.shape[1], "t": M.shape[1]}
    stale = {
        key: f"{PROBLEM_MANIFEST} says {meta[key]}, data files give {value}"
        for key, value in shapes.items()
        if key in meta and meta[key] != value
    }
    if stale:
        raise DimensionMismatch(stale)
    problem = MMVProblem(G=G, M=M, n=meta["n"], d=meta["d"])
    validate_problem(problem)
    return problem


def write_truth(truth, directory):
    return write_json(Path(directory) / TRUTH_FILE, truth.to_dict())


def chain_records(chain, problem, mode_chain=None):
    """
    Yield one record per retained sample.

    ``objective`` is the negative log posterior of the sample; with a mode
    chain, ``mode_objective`` is the l2,1/2 objective of the mode it led to.
    """
    from .mm import negative_log_posterior

    config = chain.config
    for k, (X, gamma) in enumerate(zip(chain.X_samples, chain.gamma_samples)):
        record = {
            "k": k + 1,
            "gamma": gamma.tolist(),
            "X_norms": group_norms(X, problem.d).tolist(),
            "objective": negative_log_posterior(problem, X, gamma, config.alpha, config.beta, 1.0),
        }
        if mode_chain is not None:
            record["mode_objective"] = float(mode_chain.objectives[k])
        yield record


def write_chain(path, chain, problem, mode_chain=None):
    """Write the chain as newline-delimited JSON."""
    path = Path(path)
    with open(path, "w") as handle:
        for record in chain_records(chain, problem, mode_chain):
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def read_chain(path):
    with open(path) as handle:
        return [json.loads(line) for line in handle if line.strip()]


def write_samples(directory, chain):
    """Dump every retained X sample as ``sample_<k>.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = len(str(len(chain)))
    return [write_matrix(directory / f"sample_{k + 1:0{width}d}.csv", X) for k, X in enumerate(chain.X_samples)]


def _location_header(n):
    return [f"loc{i}" for i in range(1, n + 1)]


def write_mode_table(path, summary, n):
    """
    One row per cluster: cluster id, frequency, count, best objective, then a 0/1 column per location.
    """
    rows = []
    for c, cluster in enumerate(summary.clusters):
        indicator = np.zeros(n)
        indicator[[i - 1 for i in cluster.support]] = 1.0
        rows.append(np.concatenate([[c, cluster.frequency, cluster.count, cluster.best_objective], indicator]))
    header = ["cluster", "frequency", "count", "best_objective"] + _location_header(n)
    values = np.array(rows) if rows else np.zeros((0, len(header)))
    return write_matrix(path, values, header=header)


def write_cooccurrence(path, cooccurrence):
    return write_matrix(path, cooccurrence, header=_location_header(cooccurrence.shape[0]))


def write_histogram(path, histogram):
    """Rows ``bin_left, bin_right, count, uniform_marker`` (marker repeated, NaN when absent)."""
    marker = np.nan if histogram.uniform_marker is None else histogram.uniform_marker
    values = np.array([[left, right, count, marker] for left, right, count in histogram.rows()])
    return write_matrix(path, values, header=["bin_left", "bin_right", "count", "uniform_marker"])


def write_modes(directory, mode_chain, summary):
    """
    Write the per-mode group norms and objectives and the best mode of every cluster.

    Returns:
        List of written paths
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    norms = np.array([group_norms(mode, mode_chain.d) for mode in mode_chain.modes])
    written = [
        write_matrix(directory / "group_norms.csv", norms, header=_location_header(norms.shape[1])),
        write_matrix(
            directory / "objectives.csv",
            np.column_stack([mode_chain.objectives, mode_chain.converged.astype(float)]),
            header=["objective", "converged"],
        ),
    ]
    for c, cluster in enumerate(summary.clusters):
        written.append(write_matrix(directory / f"cluster_{c:03d}.csv", mode_chain.modes[cluster.best_index]))
    if mode_chain.uniform_mode is not None:
        written.append(write_matrix(directory / "uniform.csv", mode_chain.uniform_mode))
    return written


def write_manifest(path, manifest):
    return write_json(path, manifest.to_dict())


def read_manifest(path):
    return read_json(path)
