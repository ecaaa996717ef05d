"""
Command line interface.

    snmix fit --input data.csv --components 2 --estimator pmle
    snmix sample --preset model1 --n 1000 --seed 3
    snmix study --preset model1 --reps 50 --out results
    snmix me --input data.csv --components 2

Exit codes: 0 success, 1 usage error, 2 input/output error, 3 fit with degeneracy flags (the document is still
written), 4 modified estimator not applicable.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from snmix.bench.presets import model_preset, penalty_comparison_preset, study_names, study_preset
from snmix.bench.study import StudySpec, run_penalty_comparison, run_study
from snmix.core.mixture import SnMixture
from snmix.document import ModelDocument
from snmix.errors import DomainError, InputError, ValidityError
from snmix.io import read_column, write_values
from snmix.registration import make
from snmix.sampler import RngHandle, sample_mixture

logger = logging.getLogger("snmix")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3
EXIT_INVALID = 4


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got {text}")
    return value


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="CSV file with the sample")
    parser.add_argument("--column", default=None, help="column name or zero-based position (first numeric by default)")
    parser.add_argument("--components", "-p", type=_positive_int, required=True, help="number of components")
    parser.add_argument("--algorithm", choices=["ecm", "ecme"], default="ecm")
    parser.add_argument("--starts", type=_positive_int, default=20, help="k-means starts, best objective kept")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=1e-6, help="relative objective change to stop at")
    parser.add_argument("--max-iter", type=_positive_int, default=2000)
    parser.add_argument("--out", default=None, help="output file (standard output by default)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="snmix", description="Penalized estimation of finite skew normal mixtures.")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = commands.add_parser("fit", help="fit a mixture to a sample")
    _add_data_arguments(fit)
    fit.add_argument("--estimator", choices=["mle", "pmle", "mple"], default="pmle")
    fit.add_argument("--c-a", type=float, default=1.0, help="scale penalty strength a_n = c_a / n")
    fit.add_argument("--c-b", type=float, default=0.05, help="shape penalty strength b_n = c_b / log(n)")
    fit.set_defaults(handler=cmd_fit)

    sample = commands.add_parser("sample", help="draw a sample from a mixture")
    source = sample.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="model document (JSON)")
    source.add_argument("--preset", choices=["model1", "model2", "gmix"])
    sample.add_argument("--n", type=_positive_int, required=True)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out", default=None)
    sample.set_defaults(handler=cmd_sample)

    study = commands.add_parser("study", help="run a simulation study")
    spec = study.add_mutually_exclusive_group(required=True)
    spec.add_argument("--preset", choices=study_names())
    spec.add_argument("--spec", help="study specification (JSON)")
    study.add_argument("--reps", type=_positive_int, default=None)
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--out", default=".", help="directory for the CSV and JSON reports")
    study.add_argument("--threads", type=_positive_int, default=1)
    study.set_defaults(handler=cmd_study)

    me = commands.add_parser("me", help="modified MLE with shrunk divergent shapes")
    _add_data_arguments(me)
    me.add_argument("--level", type=_unit_interval, default=0.05)
    me.set_defaults(handler=cmd_me)
    return parser


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
        return
    try:
        with open(path, "w") as f:
            f.write(text + "\n")
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from e


def _estimator(name: str, args: argparse.Namespace, **extra):
    return make(
        name,
        algorithm=args.algorithm.upper(),
        starts=args.starts,
        seed=args.seed,
        rel_tol=args.tol,
        max_iter=args.max_iter,
        **extra,
    )


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit with k-means starts and write the best-objective model document."""
    data = read_column(args.input, args.column)
    extra = {} if args.estimator == "mle" else {"c_a": args.c_a, "c_b": args.c_b}
    estimator = _estimator(args.estimator, args, **extra)
    result = estimator.fit(data, args.components)
    document = ModelDocument.from_fit(
        result, args.estimator, args.algorithm.upper(), estimator.penalty(data), seed=args.seed
    )
    _emit(document.to_json(), args.out)
    if document.degenerate:
        logger.warning("the fit carries degeneracy flags: %s", document.flags)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    """Draw n values, one per line."""
    psi: SnMixture = model_preset(args.preset) if args.preset else ModelDocument.read(args.model).to_mixture()
    values = sample_mixture(psi, args.n, RngHandle(args.seed))
    text = write_values(values, args.out)
    if text is not None:
        sys.stdout.write(text)
    return EXIT_OK


def _study_from_file(path: str) -> StudySpec:
    try:
        with open(path) as f:
            config = json.load(f)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e.msg}", e.lineno) from e
    try:
        config["truth"] = SnMixture.from_dict(config["truth"])
        return StudySpec(**config)
    except (KeyError, TypeError) as e:
        raise InputError(f"invalid study specification: {e}") from e


def cmd_study(args: argparse.Namespace) -> int:
    """Run a study and write <name>.csv and <name>.json into the output directory."""
    if args.preset == "penalty-comparison":
        report = run_penalty_comparison(**penalty_comparison_preset(args.reps), seed=args.seed, threads=args.threads)
    else:
        if args.preset:
            spec = study_preset(args.preset, replications=args.reps, master_seed=args.seed)
        else:
            spec = _study_from_file(args.spec)
            overrides = {"master_seed": args.seed}
            if args.reps is not None:
                overrides["replications"] = args.reps
            spec = replace(spec, **overrides)
        report = run_study(spec, threads=args.threads)
    name = report.meta["name"]
    try:
        os.makedirs(args.out, exist_ok=True)
        report.to_csv(os.path.join(args.out, f"{name}.csv"))
        report.to_json(os.path.join(args.out, f"{name}.json"))
    except OSError as e:
        raise InputError(f"cannot write reports to {args.out}: {e.strerror or e}") from e
    return EXIT_OK


def cmd_me(args: argparse.Namespace) -> int:
    """Fit the MLE, then shrink its divergent shapes."""
    data = read_column(args.input, args.column)
    mle_fit = _estimator("mle", args).fit(data, args.components)
    estimator = _estimator("me", args, level=args.level)
    result = estimator.modify(data, mle_fit)
    document = ModelDocument.from_fit(result, "me", args.algorithm.upper(), estimator.penalty(data), seed=args.seed)
    _emit(document.to_json(), args.out)
    return EXIT_DEGENERATE if document.degenerate else EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.handler(args)
    except InputError as e:
        print(f"snmix: {e}", file=sys.stderr)
        return EXIT_IO
    except ValidityError as e:
        print(f"snmix: {e}", file=sys.stderr)
        return EXIT_INVALID
    except DomainError as e:
        print(f"snmix: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
