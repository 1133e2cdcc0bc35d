"""Accuracy evaluation, parameter sweeps and threshold fitting.

An evaluation of ``n`` samples is cut into fixed-size chunks. Chunk ``i`` is
drawn from stream ``(seed, 0, i)`` whatever the number of workers, and chunk
results are merged in index order, so a report depends only on
``(decoder, L, p, n, seed)``.
"""
import dataclasses
import logging
import math
import time
import warnings
from dataclasses import dataclass
from multiprocessing import Pool
from typing import IO, TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from toric_workbench.errors import CapacityError, DegenerateFitWarning, FitError, ParameterError
from toric_workbench.lattice import Lattice
from toric_workbench.noise import DepolarizingNoise, sample_batch
from toric_workbench.registry import DecoderFactory, Registry, registry as default_registry

if TYPE_CHECKING:
    from toric_workbench.store import ResultStore

logger = logging.getLogger(__name__)

REPORT_VERSION = 1
DEFAULT_CHUNK_SIZE = 1000
DEFAULT_P_GRID = (0.145, 0.18, 21)
# Points measured with zero failures would otherwise get infinite weight.
STD_ERR_FLOOR = 1e-3
FIT_GRID_POINTS = 201
FIT_DEGREE = 3

Point = Tuple[int, float, float, float]


@dataclass(frozen=True)
class EvalReport:
    decoder: str
    L: int
    p: float
    n_samples: int
    p_acc: float
    std_err: float
    wall_time: float
    seed: int = 0

    @classmethod
    def from_counts(cls, decoder: str, L: int, p: float, n: int, correct: int, wall_time: float, seed: int):
        p_acc = correct / n
        return cls(decoder, L, p, n, p_acc, standard_error(p_acc, n), wall_time, seed)

    @property
    def point(self) -> Point:
        return (self.L, self.p, self.p_acc, self.std_err)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def standard_error(p_acc: float, n: int) -> float:
    """Binomial standard error of an accuracy measured on ``n`` samples.

    Examples:
        >>> standard_error(0.5, 100)
        0.05
        >>> standard_error(1.0, 10)
        0.0
    """
    return math.sqrt(p_acc * (1 - p_acc) / n)


REPORT_FIELDS = [f.name for f in dataclasses.fields(EvalReport)]


def write_reports_csv(reports: Iterable[EvalReport], fp: IO[str]) -> None:
    fp.write(f"# toric-workbench eval v{REPORT_VERSION}\n")
    fp.write(",".join(REPORT_FIELDS) + "\n")
    for report in reports:
        fp.write(",".join(str(getattr(report, name)) for name in REPORT_FIELDS) + "\n")


def _resolve(decoder: str, registry: Registry) -> DecoderFactory:
    return registry.get(decoder)


def _check_capacity(decoder: str, factory: DecoderFactory, L: int):
    if factory.max_L is not None and L > factory.max_L:
        raise CapacityError(f"Decoder '{decoder}' supports L <= {factory.max_L}, got L={L}.")


def _chunks(n: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(index, min(chunk_size, n - start)) for index, start in enumerate(range(0, n, chunk_size))]


def _count_correct(decoder, noise: DepolarizingNoise, lattice: Lattice, index: int, size: int) -> int:
    samples = sample_batch(noise, lattice, size, batch=index)
    decoded = decoder.decode_batch(samples.sx, samples.sz)
    return int((np.asarray(decoded) == samples.classes).sum())


def _worker_chunk(args) -> int:
    factory, L, p, seed, options, index, size = args
    lattice = Lattice(L)
    noise = DepolarizingNoise(p, seed=seed)
    return _count_correct(factory(lattice, noise, **options), noise, lattice, index, size)


def evaluate(
    decoder: str,
    L: int,
    p: float,
    n: int,
    seed: int = 0,
    *,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    registry: Optional[Registry] = None,
    store: Optional["ResultStore"] = None,
    **options: Any,
) -> EvalReport:
    """Decode ``n`` fresh samples and report the fraction whose joint class was recovered.

    Decoder ``options`` are handed to the registered constructor. With more than
    one worker each process builds its own decoder per chunk.

    Examples:
        >>> import toric_workbench.decoders
        >>> evaluate("mwpm", 3, 0.0, 50, seed=1).p_acc
        1.0
    """
    registry = registry or default_registry
    factory = _resolve(decoder, registry)
    _check_capacity(decoder, factory, L)
    if n < 1:
        raise ParameterError(f"Number of samples must be at least 1, got {n}.")
    if workers < 1:
        raise ParameterError(f"Number of workers must be at least 1, got {workers}.")
    if chunk_size < 1:
        raise ParameterError(f"Chunk size must be at least 1, got {chunk_size}.")

    if store is not None:
        stored = store.find(decoder, L, p, n, seed)
        if stored is not None:
            logger.info("Reusing stored %s L=%d p=%s: p_acc=%.4f", decoder, L, p, stored.p_acc)
            return stored

    lattice = Lattice(L)
    noise = DepolarizingNoise(p, seed=seed)
    chunks = _chunks(n, chunk_size)

    start = time.perf_counter()
    if workers == 1 or len(chunks) == 1:
        instance = factory(lattice, noise, **options)
        counts = [_count_correct(instance, noise, lattice, index, size) for index, size in chunks]
    else:
        jobs = [(factory, L, p, seed, options, index, size) for index, size in chunks]
        with Pool(min(workers, len(jobs))) as pool:
            counts = pool.map(_worker_chunk, jobs)
    wall_time = time.perf_counter() - start

    report = EvalReport.from_counts(decoder, L, p, n, sum(counts), wall_time, seed)
    logger.info(
        "%s L=%d p=%s n=%d: p_acc=%.4f +/- %.4f (%.1fs)",
        decoder,
        L,
        p,
        n,
        report.p_acc,
        report.std_err,
        wall_time,
    )
    if store is not None:
        store.add(report)
    return report


def sweep(
    decoder: str,
    sizes: Sequence[int],
    ps: Sequence[float],
    n: int,
    seed: int = 0,
    **kwargs: Any,
) -> List[EvalReport]:
    """Evaluate every ``(L, p)`` cell, lattice size major."""
    return [evaluate(decoder, L, float(p), n, seed, **kwargs) for L in sizes for p in ps]


def parse_p_grid(text: str) -> np.ndarray:
    """Parse ``start:stop:count`` into an inclusive linear grid.

    Examples:
        >>> parse_p_grid("0.1:0.2:3").tolist()
        [0.1, 0.15..., 0.2]
        >>> parse_p_grid("0.1:0.2")
        Traceback (most recent call last):
        ...
        toric_workbench.errors.ParameterError: Expected a p-grid as start:stop:count, got '0.1:0.2'.
    """
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParameterError(f"Expected a p-grid as start:stop:count, got '{text}'.") from None
    if count < 1 or not 0 <= start <= stop < 1:
        raise ParameterError(f"p-grid needs 0 <= start <= stop < 1 and count >= 1, got '{text}'.")
    return np.linspace(start, stop, count)


@dataclass(frozen=True)
class ThresholdFit:
    """Result of fitting ``p_acc = f(L * (p - p_th))`` with a cubic ``f``.

    ``coefficients`` run from the cubic term down to the constant, as
    :func:`numpy.polyval` expects them.
    """

    p_th: float
    coefficients: np.ndarray
    residual: float
    points: List[Point]
    degenerate: bool = False

    def scaled(self) -> np.ndarray:
        """``(L * (p - p_th), p_acc)`` for every point, ready for a data-collapse plot."""
        points = np.asarray(self.points, dtype=float)
        return np.stack([points[:, 0] * (points[:, 1] - self.p_th), points[:, 2]], axis=1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_th": self.p_th,
            "coefficients": [float(c) for c in self.coefficients],
            "residual": self.residual,
            "degenerate": self.degenerate,
            "points": [list(point) for point in self.points],
        }


def write_points_csv(fit: ThresholdFit, fp: IO[str]) -> None:
    fp.write(f"# toric-workbench threshold points v{REPORT_VERSION} p_th={fit.p_th!r}\n")
    fp.write("L,p,p_acc,std_err,x\n")
    for (L, p, p_acc, std_err), (x, _) in zip(fit.points, fit.scaled()):
        fp.write(f"{L},{p!r},{p_acc!r},{std_err!r},{float(x)!r}\n")


def _as_point(point: Union[EvalReport, Sequence[float]]) -> Point:
    if isinstance(point, EvalReport):
        return point.point
    L, p, p_acc, std_err = point
    return (int(L), float(p), float(p_acc), float(std_err))


def _weighted_cubic(p_th: float, L: np.ndarray, p: np.ndarray, acc: np.ndarray, w: np.ndarray):
    x = L * (p - p_th)
    coefficients = np.polyfit(x, acc, FIT_DEGREE, w=w)
    residual = float(np.sum((w * (acc - np.polyval(coefficients, x))) ** 2))
    return coefficients, residual


def threshold_fit(points: Iterable[Union[EvalReport, Sequence[float]]]) -> ThresholdFit:
    """Find the ``p_th`` whose rescaled points are best described by one cubic.

    The inner problem is a weighted least-squares cubic for a fixed ``p_th``
    (weights ``1 / std_err``); the outer problem scans ``p_th`` over the measured
    p-range on a grid and refines the best cell with a bounded scalar search.
    When the residual does not depend on ``p_th`` the curves never cross; the
    middle of the range is reported and a :class:`DegenerateFitWarning` is
    emitted.
    """
    rows = [_as_point(point) for point in points]
    if len({row[0] for row in rows}) < 3:
        raise FitError(f"Threshold fit needs at least 3 distinct lattice sizes, got {sorted({r[0] for r in rows})}.")
    if len({row[1] for row in rows}) < 5:
        raise FitError(f"Threshold fit needs at least 5 distinct p values, got {len({r[1] for r in rows})}.")

    data = np.asarray(rows, dtype=float)
    L, p, acc = data[:, 0], data[:, 1], data[:, 2]
    w = 1.0 / np.maximum(data[:, 3], STD_ERR_FLOOR)

    low, high = float(p.min()), float(p.max())
    grid = np.linspace(low, high, FIT_GRID_POINTS)
    residuals = np.array([_weighted_cubic(p_th, L, p, acc, w)[1] for p_th in grid])
    if not np.all(np.isfinite(residuals)):
        raise FitError("Threshold fit produced non-finite residuals; check the accuracies and error bars.")

    scale = max(float(residuals.min()), 1.0)
    if float(np.ptp(residuals)) <= 1e-9 * scale:
        p_th = 0.5 * (low + high)
        coefficients, residual = _weighted_cubic(p_th, L, p, acc, w)
        message = f"Accuracy curves do not cross in [{low}, {high}]; reporting p_th={p_th} without support."
        logger.warning(message)
        warnings.warn(message, DegenerateFitWarning, stacklevel=2)
        return ThresholdFit(p_th, coefficients, residual, rows, degenerate=True)

    best = int(np.argmin(residuals))
    bounds = (grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)])
    refined = minimize_scalar(
        lambda p_th: _weighted_cubic(p_th, L, p, acc, w)[1],
        bounds=bounds,
        method="bounded",
        options={"xatol": 1e-7},
    )
    p_th = float(refined.x) if refined.success and refined.fun <= residuals[best] else float(grid[best])
    coefficients, residual = _weighted_cubic(p_th, L, p, acc, w)
    logger.info("Threshold fit: p_th=%.5f (residual %.4g over %d points).", p_th, residual, len(rows))
    return ThresholdFit(p_th, coefficients, residual, rows)
