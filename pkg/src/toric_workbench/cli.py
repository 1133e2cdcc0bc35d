"""The ``toric-workbench`` command line."""
import argparse
import contextlib
import json
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

from toric_workbench import decoders  # noqa: F401
from toric_workbench.errors import CapacityError, ParameterError, UsageError, WorkbenchError
from toric_workbench.exact import MAX_EXACT_L, decode_mld, exact_distribution, logical_probabilities
from toric_workbench.harness import (
    DEFAULT_P_GRID,
    evaluate,
    parse_p_grid,
    sweep,
    threshold_fit,
    write_points_csv,
    write_reports_csv,
)
from toric_workbench.lattice import Lattice, Syndrome
from toric_workbench.matching import BACKENDS
from toric_workbench.noise import DepolarizingNoise, sample_batch, write_csv
from toric_workbench.registry import registry
from toric_workbench.selfcheck import run_selfcheck

logger = logging.getLogger(__name__)


def _sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated lattice sizes, got '{text}'") from None


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a probability, got '{text}'") from None
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError(f"probability must be in [0, 1), got {value}")
    return value


def _grid(text: str) -> np.ndarray:
    try:
        return parse_p_grid(text)
    except ParameterError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", newline="") as fp:
        yield fp


def _store(args):
    if not getattr(args, "db", None):
        return None
    from toric_workbench.store import ResultStore

    return ResultStore.from_url(args.db)


def _decoder_options(args):
    options = {"matcher": args.matcher}
    if args.model is not None:
        options["model"] = args.model
    return options


def run_sample(args) -> int:
    samples = sample_batch(DepolarizingNoise(args.p, seed=args.seed), Lattice(args.L), args.n)
    with _output(args.out) as fp:
        if args.format == "csv":
            write_csv(samples, fp)
        else:
            rows = [
                {"sx": sx.ravel().tolist(), "sz": sz.ravel().tolist(), "gamma": logical.tolist()}
                for sx, sz, logical in zip(samples.sx, samples.sz, samples.logical)
            ]
            json.dump({"L": args.L, "p": args.p, "seed": args.seed, "samples": rows}, fp)
            fp.write("\n")
    logger.info("Wrote %d samples at L=%d, p=%s.", len(samples), args.L, args.p)
    return 0


def run_oracle(args) -> int:
    if args.L > MAX_EXACT_L:
        raise CapacityError(f"The exact oracle supports L <= {MAX_EXACT_L}, got L={args.L}.")
    lattice = Lattice(args.L)
    noise = DepolarizingNoise(args.p, seed=args.seed)
    if args.syndrome is not None:
        text = args.syndrome.replace(",", "").strip()
        if set(text) - {"0", "1"}:
            raise UsageError(f"Syndrome must be a string of 0/1 bits, got '{args.syndrome}'.")
        s = Syndrome.from_bits([int(b) for b in text], lattice.L)
    else:
        s = sample_batch(noise, lattice, 1)[0].syndrome

    tensor = exact_distribution(s, noise)
    result = {
        "L": args.L,
        "p": args.p,
        "syndrome": s.to_bits().tolist(),
        "tensor": tensor.tolist(),
        "marginals": logical_probabilities(tensor).tolist(),
        "decoded": decode_mld(s, noise).index,
    }
    with _output(args.out) as fp:
        if args.format == "json":
            json.dump(result, fp)
            fp.write("\n")
        else:
            fp.write("class,probability\n")
            for index, value in enumerate(tensor.ravel()):
                fp.write(f"{index},{value!r}\n")
    return 0


def run_eval(args) -> int:
    store = _store(args)
    try:
        report = evaluate(
            args.decoder,
            args.L,
            args.p,
            args.n,
            args.seed,
            workers=args.workers,
            store=store,
            **_decoder_options(args),
        )
    finally:
        if store is not None:
            store.close()
    with _output(args.out) as fp:
        if args.format == "csv":
            write_reports_csv([report], fp)
        else:
            json.dump(report.to_dict(), fp)
            fp.write("\n")
    return 0


def run_train(args) -> int:
    from toric_workbench.training import TrainConfig, save_checkpoint, train

    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    overrides = {"L": args.L, "p_train": args.p, "seed": args.seed, "steps": args.steps, "eval_samples": args.n}
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if overrides:
        config = TrainConfig.from_dict({**config.to_dict(), **overrides})

    if args.log:
        with open(args.log, "w") as log_file:
            result = train(config, log_file=log_file)
    else:
        result = train(config)
    save_checkpoint(result.model, config, args.out)
    logger.info("Saved checkpoint to %s.", args.out)
    return 0


def run_threshold(args) -> int:
    store = _store(args)
    try:
        reports = sweep(
            args.decoder,
            args.L,
            args.p_grid,
            args.n,
            args.seed,
            workers=args.workers,
            store=store,
            **_decoder_options(args),
        )
    finally:
        if store is not None:
            store.close()

    fit = threshold_fit(reports)
    if args.out:
        with _output(args.out) as fp:
            write_points_csv(fit, fp)

    summary = {key: value for key, value in fit.to_dict().items() if key != "points"}
    if args.format == "json":
        json.dump(summary, sys.stdout)
        sys.stdout.write("\n")
    else:
        sys.stdout.write("p_th,residual,degenerate\n")
        sys.stdout.write(f"{fit.p_th!r},{fit.residual!r},{int(fit.degenerate)}\n")
    return 0


def run_selfcheck_command(args) -> int:
    results = run_selfcheck(args.L, samples=args.n, seed=args.seed)
    for result in results:
        print(result)
    return 0 if all(result.passed for result in results) else 1


def _common(
    parser: argparse.ArgumentParser,
    L: Optional[int] = 3,
    p: Optional[float] = 0.1,
    n: Optional[int] = 1000,
    seed: Optional[int] = 0,
    n_help: Optional[str] = "number of samples",
):
    parser.add_argument("--L", type=int, default=L, help="odd lattice size")
    parser.add_argument("--p", type=_probability, default=p, help="depolarizing probability")
    if n_help is not None:
        parser.add_argument("--n", type=int, default=n, help=n_help)
    parser.add_argument("--seed", type=int, default=seed)


def _decoder_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--decoder", choices=registry.names(), default="mwpm")
    parser.add_argument("--model", help="checkpoint for the end decoder")
    parser.add_argument("--matcher", choices=BACKENDS, default="auto", help="auto picks pymatching when installed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--db", help="SQLAlchemy URL of a result store, e.g. sqlite:///results.db")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toric-workbench", description="Toric code decoding workbench.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sample = subparsers.add_parser("sample", help="emit a dataset of (syndrome, logical class) samples")
    _common(sample)
    sample.add_argument("--out")
    sample.add_argument("--format", choices=("csv", "json"), default="csv")
    sample.set_defaults(run=run_sample)

    oracle = subparsers.add_parser("oracle", help="exact logical class distribution of one syndrome")
    _common(oracle, n_help=None)
    oracle.add_argument("--syndrome", help="sx bits then sz bits, row-major")
    oracle.add_argument("--out")
    oracle.add_argument("--format", choices=("csv", "json"), default="json")
    oracle.set_defaults(run=run_oracle)

    evaluate_ = subparsers.add_parser("eval", help="measure the logical accuracy of a decoder")
    _common(evaluate_)
    _decoder_flags(evaluate_)
    evaluate_.add_argument("--out")
    evaluate_.add_argument("--format", choices=("csv", "json"), default="csv")
    evaluate_.set_defaults(run=run_eval)

    train = subparsers.add_parser("train", help="train the equivariant neural decoder")
    _common(train, L=None, p=None, n=None, seed=None, n_help="held-out samples per evaluation (eval_samples)")
    train.add_argument("--config", help="JSON training config")
    train.add_argument("--steps", type=int)
    train.add_argument("--log", help="training log CSV")
    train.add_argument("--out", required=True, help="checkpoint path")
    train.set_defaults(run=run_train)

    threshold = subparsers.add_parser("threshold", help="sweep p over several lattice sizes and fit the threshold")
    threshold.add_argument("--L", type=_sizes, default=[11, 15, 17])
    threshold.add_argument("--p-grid", type=_grid, default=np.linspace(*DEFAULT_P_GRID))
    threshold.add_argument("--n", type=int, default=20000)
    threshold.add_argument("--seed", type=int, default=0)
    _decoder_flags(threshold)
    threshold.add_argument("--out", help="points CSV")
    threshold.add_argument("--format", choices=("csv", "json"), default="csv")
    threshold.set_defaults(run=run_threshold)

    selfcheck = subparsers.add_parser("selfcheck", help="run the invariant suite")
    selfcheck.add_argument("--L", type=_sizes, default=[3, 5, 7])
    selfcheck.add_argument("--n", type=int, default=100)
    selfcheck.add_argument("--seed", type=int, default=0)
    selfcheck.set_defaults(run=run_selfcheck_command)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.run(args)
    except WorkbenchError as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
