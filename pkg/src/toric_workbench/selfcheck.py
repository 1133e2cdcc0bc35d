"""Property checks over the code, the symmetry and the decoders.

Each check draws its own syndromes from a fixed stream so a failing run can be
repeated exactly. ``run_selfcheck`` returns one :class:`CheckResult` per check
and never raises on a failed property.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
import torch

from toric_workbench.exact import MAX_EXACT_L, exact_distribution
from toric_workbench.lattice import Lattice, Syndrome, logical_content, symplectic_product, syndrome
from toric_workbench.matching import DefectGraph, brute_force_matching, matching_weight, min_weight_matching
from toric_workbench.neural import ModelConfig, build_model, encode, predict
from toric_workbench.noise import DepolarizingNoise, sample_batch, stream
from toric_workbench.symmetry import (
    Translation,
    all_twists,
    apply_twist,
    translate_error,
    translate_syndrome,
    twist,
)

logger = logging.getLogger(__name__)

# Dense enough that most syndromes carry defects on several rows and columns.
CHECK_P = 0.2
EXACT_TOLERANCE = 1e-12
NEURAL_TOLERANCE = 1e-5
MAX_BRUTE_FORCE_DEFECTS = 10
_CHECK_MODEL = dict(channels=(8, 16), depth=1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def __str__(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass(frozen=True)
class CheckContext:
    sizes: Sequence[int]
    samples: int
    seed: int

    def errors(self, L: int, worker: int = 0):
        noise = DepolarizingNoise(CHECK_P, seed=self.seed)
        return sample_batch(noise, Lattice(L), self.samples, worker=worker, keep_errors=True)

    def syndromes(self, L: int, worker: int = 0) -> List[Syndrome]:
        return [sample.syndrome for sample in self.errors(L, worker)]


_checks: Dict[str, Callable[[CheckContext], CheckResult]] = {}


def check(name: str):
    def wrapper(fn):
        if name in _checks:
            raise ValueError("Name '{}' is already registered".format(name))
        _checks[name] = fn
        return fn

    return wrapper


def check_names() -> List[str]:
    return list(_checks)


@check("syndrome parity")
def check_parity(ctx: CheckContext) -> CheckResult:
    total = 0
    odd = 0
    for L in ctx.sizes:
        batch = sample_batch(DepolarizingNoise(CHECK_P, seed=ctx.seed), Lattice(L), ctx.samples * 100)
        odd += int(np.count_nonzero(batch.sx.sum(axis=(1, 2)) % 2) + np.count_nonzero(batch.sz.sum(axis=(1, 2)) % 2))
        total += len(batch)
    return CheckResult("syndrome parity", odd == 0, f"{odd} odd-parity grids in {total} samples")


@check("stabilizer invariance")
def check_stabilizer_invariance(ctx: CheckContext) -> CheckResult:
    failures = 0
    compared = 0
    for L in ctx.sizes:
        stabilizers = list(Lattice(L).stabilizers())
        rng = stream(ctx.seed, worker=1)
        for sample in ctx.errors(L):
            e = sample.error
            for index in rng.choice(len(stabilizers), size=min(8, len(stabilizers)), replace=False):
                moved = e * stabilizers[index]
                compared += 1
                if syndrome(moved) != sample.syndrome or logical_content(moved) != sample.logical:
                    failures += 1
    return CheckResult("stabilizer invariance", failures == 0, f"{failures} changes over {compared} products")


@check("commutation")
def check_commutation(ctx: CheckContext) -> CheckResult:
    failures = []
    for L in ctx.sizes:
        lattice = Lattice(L)
        logicals = lattice.logical_operators()
        expected = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
        products = np.array([[symplectic_product(a, b) for b in logicals] for a in logicals])
        if not np.array_equal(products, expected):
            failures.append(f"L={L} logical products {products.tolist()}")
        for op in logicals:
            if syndrome(op).defect_count:
                failures.append(f"L={L} logical with nonzero syndrome")
        for s in lattice.stabilizers():
            if any(symplectic_product(s, op) for op in logicals):
                failures.append(f"L={L} stabilizer anticommutes with a logical")
                break
    return CheckResult("commutation", not failures, "; ".join(failures) or f"L in {list(ctx.sizes)}")


@check("group action")
def check_group_action(ctx: CheckContext) -> CheckResult:
    failures = 0
    compared = 0
    for L in ctx.sizes:
        samples = list(ctx.errors(L))[: max(1, ctx.samples // 10)]
        for sample, g, h in itertools.product(samples, Translation.all(L), [Translation(1, 0), Translation(0, 1)]):
            e = sample.error
            compared += 1
            if syndrome(translate_error(g, e)) != translate_syndrome(g, sample.syndrome):
                failures += 1
            elif translate_syndrome(g + h, sample.syndrome) != translate_syndrome(g, translate_syndrome(h, sample.syndrome)):
                failures += 1
    return CheckResult("group action", failures == 0, f"{failures} mismatches over {compared} cases")


@check("twist homomorphism")
def check_homomorphism(ctx: CheckContext) -> CheckResult:
    L = MAX_EXACT_L
    failures = 0
    compared = 0
    for s in ctx.syndromes(L):
        for g, h in itertools.product(Translation.all(L), repeat=2):
            compared += 1
            if twist(g + h, s) != twist(g, s) @ twist(h, translate_syndrome(-g, s)):
                failures += 1
    return CheckResult("twist homomorphism", failures == 0, f"{failures} mismatches over {compared} (g, h, s)")


@check("twist factorization")
def check_factorization(ctx: CheckContext) -> CheckResult:
    failures = 0
    compared = 0
    for L in ctx.sizes:
        for s in ctx.syndromes(L):
            for g in Translation.all(L):
                compared += 1
                if twist(g, s) != twist(Translation(g.i, 0), s) @ twist(Translation(0, g.j), s):
                    failures += 1
    return CheckResult("twist factorization", failures == 0, f"{failures} mismatches over {compared} cases")


@check("all twists")
def check_all_twists(ctx: CheckContext) -> CheckResult:
    failures = 0
    compared = 0
    for L in sorted(set(ctx.sizes) | {5, 7}):
        for s in ctx.syndromes(L):
            grid = all_twists(s)
            direct = np.array([[twist(Translation(i, j), s).mask for j in range(L)] for i in range(L)])
            compared += 1
            failures += int(not np.array_equal(grid, direct))
    return CheckResult("all twists", failures == 0, f"{failures} mask grids differ over {compared} syndromes")


@check("exact invariance")
def check_exact_invariance(ctx: CheckContext) -> CheckResult:
    L = MAX_EXACT_L
    noise = DepolarizingNoise(0.1)
    worst = 0.0
    for s in ctx.syndromes(L):
        reference = exact_distribution(s, noise)
        for g in Translation.all(L):
            moved = exact_distribution(translate_syndrome(-g, s), noise)
            worst = max(worst, float(np.abs(apply_twist(twist(g, s), moved) - reference).max()))
    return CheckResult("exact invariance", worst <= EXACT_TOLERANCE, f"max deviation {worst:.3g}")


def _neural_deviation(ctx: CheckContext, pooling: str, dtype: torch.dtype = torch.float32) -> float:
    torch.manual_seed(ctx.seed)
    model = build_model(ModelConfig(pooling=pooling, **_CHECK_MODEL), dtype=dtype)
    worst = 0.0
    for L in ctx.sizes:
        nontrivial = [s for s in ctx.syndromes(L) if s.defect_count]
        for s in nontrivial[: max(1, ctx.samples // 10)]:
            group = list(Translation.all(L))
            moved = [translate_syndrome(-g, s) for g in group]
            batch = encode(np.stack([m.sx for m in moved]), np.stack([m.sz for m in moved]), dtype=dtype)
            with torch.no_grad():
                reference = predict(model, encode(s.sx, s.sz, dtype=dtype))[0]
                outputs = predict(model, batch)
            for g, out in zip(group, outputs):
                worst = max(worst, float((apply_twist(twist(g, s), out) - reference).abs().max()))
    return worst


@check("neural invariance")
def check_neural_invariance(ctx: CheckContext) -> CheckResult:
    worst = _neural_deviation(ctx, "twisted")
    return CheckResult("neural invariance", worst <= NEURAL_TOLERANCE, f"max deviation {worst:.3g} (twisted pooling)")


@check("average pooling control")
def check_negative_control(ctx: CheckContext) -> CheckResult:
    worst = _neural_deviation(ctx, "average")
    return CheckResult(
        "average pooling control",
        worst > NEURAL_TOLERANCE,
        f"max deviation {worst:.3g}; plain averaging is expected to break invariance",
    )


@check("decoded class equivariance")
def check_decoded_equivariance(ctx: CheckContext) -> CheckResult:
    torch.manual_seed(ctx.seed)
    model = build_model(ModelConfig(**_CHECK_MODEL), dtype=torch.float64)
    failures = 0
    compared = 0
    for L in ctx.sizes:
        for s in ctx.syndromes(L)[: max(1, ctx.samples // 10)]:
            group = list(Translation.all(L))
            moved = [translate_syndrome(-g, s) for g in group]
            with torch.no_grad():
                decoded = model(*_inputs([s] + moved)).argmax(dim=-1).tolist()
            for g, d in zip(group, decoded[1:]):
                compared += 1
                failures += int(d ^ twist(g, s).mask != decoded[0])
    return CheckResult("decoded class equivariance", failures == 0, f"{failures} mismatches over {compared} cases")


def _inputs(syndromes: List[Syndrome]):
    batch = encode(np.stack([s.sx for s in syndromes]), np.stack([s.sz for s in syndromes]), dtype=torch.float64)
    return batch.syndromes, batch.masks


@check("blossom optimality")
def check_blossom(ctx: CheckContext) -> CheckResult:
    rng = stream(ctx.seed, worker=2)
    failures = 0
    compared = 0
    for L in ctx.sizes:
        cells = [(r, c) for r in range(L) for c in range(L)]
        for _ in range(ctx.samples):
            count = 2 * int(rng.integers(1, MAX_BRUTE_FORCE_DEFECTS // 2 + 1))
            count = min(count, len(cells) - len(cells) % 2)
            picked = rng.choice(len(cells), size=count, replace=False)
            graph = DefectGraph(L, tuple(cells[i] for i in sorted(picked)))
            compared += 1
            failures += int(matching_weight(graph, min_weight_matching(graph)) != brute_force_matching(graph))
    return CheckResult("blossom optimality", failures == 0, f"{failures} suboptimal matchings over {compared} graphs")


def run_selfcheck(sizes: Sequence[int] = (3, 5, 7), samples: int = 100, seed: int = 0) -> List[CheckResult]:
    """Run every registered check; ``sizes`` must be odd lattice sizes."""
    for L in sizes:
        Lattice(L)
    ctx = CheckContext(tuple(sizes), samples, seed)
    results = []
    for name, fn in _checks.items():
        result = fn(ctx)
        log = logger.info if result.passed else logger.error
        log("%s", result)
        results.append(result)
    return results
