"""
Command-line interface: ``sparse-modes {generate,solve,explore,replay}``.

Every command writes its artifacts and a ``manifest.json`` into its output
directory. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .choices import CovarianceTargetChoices, ExampleChoices, RunStatusChoices, SolveModeChoices
from .constants import EXAMPLE_NOISE_LEVEL, RUN_MANIFEST
from .exceptions import EmptyChain, SparseModesError, ValidationError
from .explorer import cluster_modes, extract_support, objective_histogram, optimize_samples, sample_covariance
from .grouplasso import lambda_max, objective_l2p, solve_weighted_l21
from .mm import full_map_alternating, hbm_params_from_lambda, mm_solve
from .models import HyperState, MMConfig, RunManifest, SamplerConfig
from .sampler import gibbs_sample
from .serializers import (
    file_digest,
    read_json,
    read_manifest,
    read_problem,
    write_chain,
    write_cooccurrence,
    write_histogram,
    write_json,
    write_manifest,
    write_matrix,
    write_mode_table,
    write_modes,
    write_problem,
    write_samples,
    write_truth,
)
from .synth import gen_example1, gen_example2, gen_mmv_simulation
from .utils import get_output_root, get_setting

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunRecorder:
    """Collects the artifacts of one command and writes its manifest."""

    def __init__(self, out, command, config, seeds=(), inputs=None):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = list(command)
        self.config = config
        self.seeds = list(seeds)
        self.inputs = inputs or {}
        self.paths = []
        self.started = time.monotonic()

    def add(self, paths):
        if isinstance(paths, (str, Path)):
            paths = [paths]
        self.paths.extend(Path(path) for path in paths)

    def finish(self, status):
        outputs = {str(path.relative_to(self.out)): file_digest(path) for path in self.paths}
        manifest = RunManifest(
            command=self.command,
            config=self.config,
            seeds=self.seeds,
            inputs=self.inputs,
            outputs=outputs,
            duration_seconds=round(time.monotonic() - self.started, 6),
            version=__version__,
            status=status,
        )
        return write_manifest(self.out / RUN_MANIFEST, manifest)


def _config_echo(args):
    return {key: value for key, value in sorted(vars(args).items()) if key != "func" and value is not None}


def _problem_inputs(directory):
    files = sorted(Path(directory).glob("*.csv")) + sorted(Path(directory).glob("*.json"))
    return {str(path): file_digest(path) for path in files if path.name != RUN_MANIFEST}


def _resolve_lambda(args, problem):
    lam_max = lambda_max(problem.G, problem.M, problem.n, problem.d)
    lam = args.lam if args.lam is not None else args.lambda_ratio * lam_max
    if not lam > 0:
        raise ValidationError({"lambda": "regularization must be positive"})
    logger.info("lambda = %.10g (lambda_max = %.10g)", lam, lam_max)
    return lam, lam_max


def cmd_generate(args, command):
    """Write a synthetic problem directory with its ground truth."""
    recorder = RunRecorder(args.out, command, _config_echo(args), seeds=[args.seed])
    if args.example == ExampleChoices.EXAMPLE_ASYMMETRIC:
        problem, truth = gen_example1(args.seed, noise_level=args.noise_level)
    elif args.example == ExampleChoices.EXAMPLE_DUPLICATED:
        problem, truth = gen_example2(args.seed, noise_level=args.noise_level)
    else:
        spec = read_json(args.mmv)
        recorder.inputs = {str(args.mmv): file_digest(args.mmv)}
        active = [(entry["location"], entry["waveform"]) for entry in spec.get("active", [])]
        problem, truth = gen_mmv_simulation(
            spec["n"],
            spec.get("d", 1),
            spec.get("t", 1),
            active,
            spec["m"],
            seed=args.seed,
            noise_level=args.noise_level,
            rho=spec.get("rho", 0.0),
        )
    recorder.add(write_problem(problem, recorder.out))
    recorder.add(write_truth(truth, recorder.out))
    recorder.finish(RunStatusChoices.STATUS_COMPLETE)
    logger.info("Wrote problem with m=%d, n=%d, d=%d, t=%d to %s", problem.m, problem.n, problem.d, problem.t, args.out)
    return 0


def _mm_config(args, lam, p=0.5):
    return MMConfig(lam=lam, p=p, eps=args.eps, tau=args.tau, k_mm=args.max_iter, max_inner=args.max_inner)


def cmd_solve(args, command):
    """Solve one problem with MM, full-MAP or the convex group lasso."""
    problem = read_problem(args.problem)
    recorder = RunRecorder(args.out, command, _config_echo(args), inputs=_problem_inputs(args.problem))
    lam, lam_max = _resolve_lambda(args, problem)
    trace = {"mode": args.mode, "lambda": lam, "lambda_max": lam_max}

    if args.mode == SolveModeChoices.MODE_MM:
        result = mm_solve(problem, _mm_config(args, lam), np.ones(problem.n))
        X_hat = result.X_hat
        trace.update(
            objective=result.objective_l2half,
            converged=result.converged,
            iterations=result.outer_iterations,
            inner_failures=result.inner_failures,
        )
    elif args.mode == SolveModeChoices.MODE_FULL_MAP:
        alpha, beta = hbm_params_from_lambda(lam, problem.d, problem.t)
        X_hat, gamma, result = full_map_alternating(
            problem,
            alpha,
            beta,
            1.0,
            HyperState.uniform(problem.n, lam).gamma,
            args.max_iter,
            eps=args.eps,
            tau=args.tau,
            lam=lam,
            max_inner=args.max_inner,
        )
        trace.update(
            alpha=alpha,
            beta=beta,
            gamma=gamma,
            objective=[objective_l2p(problem, iterate.X, lam, 0.5) for iterate in result.iterates],
            neg_log_posterior=result.neg_log_posterior,
            inner_failures=result.inner_failures,
            converged=result.converged,
            iterations=result.outer_iterations,
        )
    else:
        result = solve_weighted_l21(problem, np.ones(problem.n), lam, eps=args.eps, max_inner=args.max_inner)
        X_hat = result.X_hat
        trace.update(
            objective=[result.objective],
            dual_gap=result.dual_gap,
            converged=result.converged,
            iterations=result.iterations,
        )

    support = extract_support(X_hat, args.tau_supp, problem.d)
    recorder.add(write_matrix(recorder.out / "X_hat.csv", X_hat))
    recorder.add(write_json(recorder.out / "trace.json", trace))
    recorder.add(write_json(recorder.out / "support.json", {"support": list(support), "tau_supp": args.tau_supp}))
    recorder.finish(RunStatusChoices.STATUS_COMPLETE)
    logger.info("Solved with %s: support %s", args.mode, list(support))
    return 0


def _explore_outputs(args, recorder, problem, lam, lam_max, chain, mode_chain):
    out = recorder.out
    if args.dump_samples:
        recorder.add(write_samples(out / "samples", chain))
    summary = cluster_modes(mode_chain, args.tau_supp)
    recorder.add(write_modes(out / "modes", mode_chain, summary))
    recorder.add(write_chain(out / "chain.ndjson", chain, problem, mode_chain))
    recorder.add(write_mode_table(out / "mode_table.csv", summary, problem.n))
    recorder.add(write_cooccurrence(out / "cooccurrence.csv", summary.cooccurrence))
    recorder.add(write_histogram(out / "objective_hist.csv", objective_histogram(mode_chain, lam, args.bins)))
    try:
        covariance, correlation = sample_covariance(chain, args.covariance)
    except EmptyChain:
        logger.info("Skipping sample covariance for a chain of length %d", len(chain))
    else:
        recorder.add(write_matrix(out / "covariance.csv", covariance))
        recorder.add(write_matrix(out / "correlation.csv", correlation))

    report = summary.to_dict()
    report.update(
        {
            "lambda": lam,
            "lambda_max": lam_max,
            "uniform_objective": mode_chain.uniform_objective,
            "best_objective": mode_chain.best_mode()[1],
            "gamma_acceptance_rate": chain.gamma_acceptance_rate,
            "converged_modes": int(mode_chain.converged.sum()),
        }
    )
    recorder.add(write_json(out / "mode_summary.json", report))
    top = summary.clusters[0]
    logger.info(
        "%d clusters; top support %s with frequency %.3f", len(summary.clusters), list(top.support), top.frequency
    )


def cmd_explore(args, command):
    """Gibbs sampling followed by MM from every sample, with clustering and summaries."""
    problem = read_problem(args.problem)
    recorder = RunRecorder(
        args.out, command, _config_echo(args), seeds=[args.seed], inputs=_problem_inputs(args.problem)
    )
    try:
        lam, lam_max = _resolve_lambda(args, problem)
        sampler_cfg = SamplerConfig.for_lambda(
            lam, problem.d, problem.t, k=args.K, k0=args.K0, k_sc=args.ksc, k_ss=args.kss, seed=args.seed
        )
        chain = gibbs_sample(problem, sampler_cfg, rng=np.random.default_rng(args.seed))
        mode_chain = optimize_samples(problem, chain, lam, _mm_config(args, lam), threads=args.threads)
        _explore_outputs(args, recorder, problem, lam, lam_max, chain, mode_chain)
    except (SparseModesError, OSError):
        recorder.finish(RunStatusChoices.STATUS_INCOMPLETE)
        raise
    recorder.finish(RunStatusChoices.STATUS_COMPLETE)
    return 0


def cmd_replay(args, command):
    """Re-run the command recorded in a manifest."""
    recorded = list(read_manifest(args.manifest)["command"])
    if args.out is not None:
        recorded = _with_out(recorded, str(args.out))
    logger.info("Replaying: %s", " ".join(recorded))
    return main(recorded)


def _with_out(argv, out):
    argv = list(argv)
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out
    else:
        argv += ["--out", out]
    return argv


def _add_lambda_arguments(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--lambda-ratio", type=float, default=0.2, help="regularization as a fraction of lambda_max")
    group.add_argument("--lambda", dest="lam", type=float, help="absolute regularization")


def _add_solver_arguments(parser):
    parser.add_argument("--eps", type=float, default=get_setting("eps"), help="inner solver precision")
    parser.add_argument("--tau", type=float, default=get_setting("tau"), help="outer stopping tolerance")
    parser.add_argument("--max-iter", type=int, default=get_setting("max_iter"), help="outer iteration cap")
    parser.add_argument("--max-inner", type=int, default=get_setting("max_inner"), help="inner pass cap")
    parser.add_argument("--tau-supp", type=float, default=get_setting("tau_supp"), help="relative support threshold")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparse-modes", description="Sparse MMV regression and posterior mode exploration"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser("generate", help="write a synthetic problem")
    source = generate.add_mutually_exclusive_group(required=True)
    source.add_argument("--example", choices=ExampleChoices.values())
    source.add_argument("--mmv", type=Path, help="JSON simulation spec (n, d, t, m, active, rho)")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--noise-level", type=float, default=EXAMPLE_NOISE_LEVEL)
    generate.add_argument("--out", type=Path)
    generate.set_defaults(func=cmd_generate)

    solve = subparsers.add_parser("solve", help="compute a sparse estimate")
    solve.add_argument("--problem", type=Path, required=True)
    _add_lambda_arguments(solve)
    solve.add_argument("--mode", choices=SolveModeChoices.values(), default=SolveModeChoices.MODE_MM)
    _add_solver_arguments(solve)
    solve.add_argument("--out", type=Path)
    solve.set_defaults(func=cmd_solve)

    explore = subparsers.add_parser("explore", help="sample the posterior and cluster its modes")
    explore.add_argument("--problem", type=Path, required=True)
    _add_lambda_arguments(explore)
    explore.add_argument("--K", type=int, default=1000, help="retained samples")
    explore.add_argument("--K0", type=int, default=0, help="burn-in steps")
    explore.add_argument("--ksc", type=int, default=1, help="coefficient sweeps per step")
    explore.add_argument("--kss", type=int, default=1, help="slice rounds per coefficient")
    explore.add_argument("--seed", type=int, default=0)
    explore.add_argument("--threads", type=int, default=1, help="joblib worker processes for the MM solves")
    explore.add_argument("--bins", type=int, default=get_setting("histogram_bins"))
    explore.add_argument(
        "--covariance", choices=CovarianceTargetChoices.values(), default=CovarianceTargetChoices.TARGET_COEFFICIENTS
    )
    explore.add_argument("--dump-samples", action="store_true", help="write every X sample as CSV")
    _add_solver_arguments(explore)
    explore.add_argument("--out", type=Path)
    explore.set_defaults(func=cmd_explore)

    replay = subparsers.add_parser("replay", help="re-run the command recorded in a manifest")
    replay.add_argument("--manifest", type=Path, required=True)
    replay.add_argument("--out", type=Path)
    replay.set_defaults(func=cmd_replay)
    return parser


def _configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    if args.command != "replay" and args.out is None:
        args.out = Path(get_output_root()) / args.command
        argv = _with_out(argv, str(args.out))
    try:
        return args.func(args, argv)
    except (SparseModesError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 1


