"""Tape gradients against central finite differences, op by op.

Every case is checked in float64 on a random linear projection of its
output, so one scalar backward pass covers the full Jacobian.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Iterable, Sequence

import numpy as np
from attrs import Factory, define, evolve, field, frozen, validators
from loguru import logger
from tqdm import tqdm

from pmgan import env
from pmgan.model import ModelConfig, PMGANModel
from pmgan.morph import MorphConfig, morph_features, normalize_map
from pmgan.nn import Linear, ModulatedConv2d, Parameter
from pmgan.numeric import GradTape, Tensor, finite_diff_grad, generator, oracle_precision, ops, relative_error
from pmgan.train import Discriminator, r1_penalty
from pmgan.utils.convert import value_serialize

from .exception import BenchError

MIN_TRIALS = 50
DEFAULT_STEP = 1e-6
MAX_REDRAWS = 20

type CaseFn = Callable[..., Tensor]
type Builder = Callable[[np.random.Generator], tuple[CaseFn, tuple[Tensor, ...]]]
type KinkCheck = Callable[[tuple[Tensor, ...]], bool]
"""True when the drawn inputs sit too close to a non-differentiable point."""


@frozen
class GradCheckCase:
    name: str
    build: Builder
    tolerance: float = 1e-3
    trials: int = field(default=MIN_TRIALS, validator=validators.ge(1))
    step: float = DEFAULT_STEP
    max_coords: int | None = None
    """Finite-difference a random subset of this many coordinates per input."""
    kink: KinkCheck | None = None


@frozen
class CaseResult:
    name: str
    tolerance: float
    trials: int
    max_error: float
    redraws: int = 0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.max_error <= self.tolerance


@frozen
class GradCheckReport:
    results: tuple[CaseResult, ...]
    seed: int

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> tuple[CaseResult, ...]:
        return tuple(result for result in self.results if not result.passed)

    def __getitem__(self, name: str) -> CaseResult:
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_json(self) -> str:
        payload = value_serialize(self)
        for entry, result in zip(payload["results"], self.results, strict=True):
            entry["passed"] = result.passed
        payload["passed"] = self.passed
        return json.dumps(payload, indent=2) + "\n"

    def table(self) -> str:
        width = max([len("case"), *(len(r.name) for r in self.results)])
        lines = [f"{'case':<{width}}  {'max rel err':>12}  {'tol':>8}  {'trials':>6}  status"]
        for r in self.results:
            status = "ok" if r.passed else f"FAIL{f' ({r.error})' if r.error else ''}"
            lines.append(f"{r.name:<{width}}  {r.max_error:>12.3e}  {r.tolerance:>8.1e}  {r.trials:>6}  {status}")
        return "\n".join(lines)


@define
class GradCheckRegistry:
    _cases: dict[str, GradCheckCase] = Factory(dict)

    def register(self, case: GradCheckCase) -> None:
        if case.name in self._cases:
            logger.warning("Overwriting existing grad-check case `{}`", case.name)
        self._cases[case.name] = case

    def get(self, name: str) -> GradCheckCase | None:
        return self._cases.get(name)

    def names(self) -> list[str]:
        return list(self._cases)

    def __len__(self) -> int:
        return len(self._cases)


def _draw(case: GradCheckCase, seed: int, trial: int) -> tuple[CaseFn, tuple[Tensor, ...], int]:
    for redraw in range(MAX_REDRAWS):
        fn, inputs = case.build(generator(seed, "gradcheck", case.name, trial, redraw))
        if case.kink is None or not case.kink(inputs):
            return fn, inputs, redraw
    raise BenchError(f"Could not draw kink-free inputs for `{case.name}` in {MAX_REDRAWS} attempts")


def _trial_error(case: GradCheckCase, fn: CaseFn, inputs: tuple[Tensor, ...], rng: np.random.Generator) -> float:
    with GradTape() as tape:
        tape.watch(*inputs)
        out = fn(*inputs)
        projection = Tensor(rng.standard_normal(out.shape))
        projected = ops.sum(ops.mul(out, projection))
    grads = tape.gradient(projected, inputs)

    worst = 0.0
    for k, x in enumerate(inputs):

        def objective(value: Tensor, k: int = k) -> Tensor:
            args = list(inputs)
            args[k] = value
            return ops.sum(ops.mul(fn(*args), projection))

        coords = None
        if case.max_coords is not None and x.size > case.max_coords:
            coords = np.sort(rng.choice(x.size, case.max_coords, replace=False))
        expected = finite_diff_grad(objective, x, case.step, indices=coords).data.reshape(-1)
        actual = grads[x].data.reshape(-1)
        if coords is not None:
            expected, actual = expected[coords], actual[coords]
        worst = max(worst, relative_error(actual, expected, floor=1e-8))
    return worst


def check_case(case: GradCheckCase, seed: int = 0) -> CaseResult:
    """Worst relative error of one case over its seeded trials. Never raises."""

    worst = 0.0
    redraws = 0
    trial = 0
    try:
        with oracle_precision():
            for trial in range(case.trials):
                fn, inputs, extra = _draw(case, seed, trial)
                redraws += extra
                error = _trial_error(case, fn, inputs, generator(seed, "gradcheck", case.name, trial, "projection"))
                if not math.isfinite(error):
                    raise BenchError(f"Relative error is {error}")
                worst = max(worst, error)
    except Exception as exc:
        logger.opt(exception=exc).warning("Grad-check case `{}` failed in trial {}", case.name, trial)
        return CaseResult(case.name, case.tolerance, trial, worst, redraws, f"{type(exc).__name__}: {exc}")

    result = CaseResult(case.name, case.tolerance, case.trials, worst, redraws)
    if not result.passed:
        logger.warning("Grad-check case `{}`: max error {:.3e} above {:.1e}", case.name, worst, case.tolerance)
    return result


def grad_check_suite(
    registry: GradCheckRegistry | None = None,
    *,
    seed: int = 0,
    names: Iterable[str] | None = None,
) -> GradCheckReport:
    """Run every registered case (or the named subset) and collect the results."""

    registry = registry if registry is not None else default_registry()
    selected = registry.names() if names is None else list(names)
    cases = []
    for name in selected:
        if (case := registry.get(name)) is None:
            raise BenchError(f"Unknown grad-check case `{name}`; known: {', '.join(registry.names())}")
        cases.append(case)

    results = [check_case(case, seed) for case in tqdm(cases, desc="grad-check", disable=env.disable_progress())]
    report = GradCheckReport(tuple(results), seed)
    logger.info("Grad-check: {}/{} cases passed", len(results) - len(report.failures), len(results))
    return report


# --- default cases -------------------------------------------------------------


def _normal(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.standard_normal(shape))


def _near_zero(margin: float) -> KinkCheck:
    def check(inputs: tuple[Tensor, ...]) -> bool:
        return bool(np.any(np.abs(inputs[0].data) < margin))

    return check


def _elementwise(fn: CaseFn) -> Builder:
    return lambda rng: (fn, (_normal(rng, 3, 4),))


def _binary(fn: CaseFn, shape_a: Sequence[int], shape_b: Sequence[int]) -> Builder:
    return lambda rng: (fn, (_normal(rng, *shape_a), _normal(rng, *shape_b)))


def _rsqrt(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    return ops.rsqrt, (Tensor(rng.uniform(0.5, 2.0, size=(3, 4))),)


def _reductions(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    def fn(x: Tensor) -> Tensor:
        moved = ops.transpose(ops.reshape(x, (2, 3, 4)), (2, 0, 1))
        return ops.concat([ops.sum(moved, axis=1), ops.mean(moved, axis=1)], axis=1)

    return fn, (_normal(rng, 6, 4),)


def _indexing(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    def fn(x: Tensor) -> Tensor:
        picked = ops.take(x, [2, 0, 2], axis=0)
        return ops.pad_axis(ops.slice_axis(picked, 1, 1, 3), 2, 1, 1)

    return fn, (_normal(rng, 4, 3, 2),)


def _conv(stride: int, padding: int) -> Builder:
    def build(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
        def fn(x: Tensor, weight: Tensor) -> Tensor:
            return ops.conv2d(x, weight, stride, padding)

        return fn, (_normal(rng, 2, 3, 6, 6), _normal(rng, 4, 3, 3, 3))

    return build


def _modulated_conv(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    def fn(x: Tensor, weight: Tensor, style: Tensor, w: Tensor) -> Tensor:
        layer = ModulatedConv2d(
            Parameter(weight),
            Parameter(Tensor(np.zeros(weight.shape[0]))),
            Linear(Parameter(style), Parameter(Tensor(np.zeros(style.shape[0])))),
        )
        return layer(x, w)

    inputs = (_normal(rng, 2, 3, 5, 5), _normal(rng, 4, 3, 3, 3), _normal(rng, 3, 6) * 0.3, _normal(rng, 2, 6))
    return fn, inputs


def _resample(mode: str, resize: tuple[int, int] | None = None) -> Builder:
    def build(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
        if resize is None:
            return (lambda x: ops.upsample(x, 2, mode)), (_normal(rng, 2, 3, 4, 4),)
        return (lambda x: ops.resize(x, resize, mode)), (_normal(rng, 2, 3, 4, 4),)

    return build


def _grid_sample(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    source = _normal(rng, 2, 3, 6, 6)
    grid = Tensor(rng.uniform(-1.1, 1.1, size=(2, 5, 5, 2)))
    return ops.grid_sample, (source, grid)


def _grid_kink(inputs: tuple[Tensor, ...]) -> bool:
    source, grid = inputs
    height, width = source.shape[-2:]
    px = (grid.data[..., 0] + 1.0) * ((width - 1) / 2)
    py = (grid.data[..., 1] + 1.0) * ((height - 1) / 2)
    margin = 1e-2
    return bool(
        np.any(np.abs(px - np.round(px)) < margin) or np.any(np.abs(py - np.round(py)) < margin)
    )


def _morph_features(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    config = MorphConfig()

    def fn(source: Tensor, raw: Tensor) -> Tensor:
        return morph_features(source, normalize_map(raw, config))

    return fn, (_normal(rng, 1, 2, 8, 8), _normal(rng, 1, 4, 4, 2))


def _r1(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    disc = Discriminator.create(8, rng, channels=2, max_channels=4)

    def fn(real: Tensor, weight: Tensor) -> Tensor:
        disc.from_rgb.weight.assign(weight)
        return r1_penalty(disc, real, 1.0)

    return fn, (_normal(rng, 2, 3, 8, 8), Tensor(disc.from_rgb.weight.value.data))


TINY_MODEL = ModelConfig(
    levels=2,
    latent_dim=8,
    mapping_depth=2,
    reducer_channels=4,
    trunk_channels=8,
    head_channels=8,
    channel_scale=1 / 16,
    num_domains=2,
)
"""Two levels with an 8x8 top, small enough for coordinate-wise finite differences."""


def _tiny_model(rng: np.random.Generator) -> tuple[CaseFn, tuple[Tensor, ...]]:
    model = PMGANModel.create(evolve(TINY_MODEL, seed=int(rng.integers(2**31))))
    z = _normal(rng, 1, model.config.latent_dim)
    head = model.morphnet.heads[0].conv1.weight

    def fn(weight: Tensor) -> Tensor:
        head.assign(weight)
        return ops.concat(list(model.infer(z).domains), axis=1)

    return fn, (head.value,)


def default_registry() -> GradCheckRegistry:
    """Every differentiable primitive plus the layers and paths built from them."""

    registry = GradCheckRegistry()
    cases = [
        GradCheckCase("add", _binary(ops.add, (3, 4), (4,))),
        GradCheckCase("sub", _binary(ops.sub, (3, 1), (3, 4))),
        GradCheckCase("mul", _binary(ops.mul, (2, 3, 4), (3, 1))),
        GradCheckCase("matmul", _binary(ops.matmul, (3, 4), (4, 2))),
        GradCheckCase("square", _elementwise(ops.square)),
        GradCheckCase("rsqrt", _rsqrt),
        GradCheckCase("tanh", _elementwise(ops.tanh)),
        GradCheckCase("sigmoid", _elementwise(ops.sigmoid)),
        GradCheckCase("softplus", _elementwise(ops.softplus)),
        GradCheckCase("leaky_relu", _elementwise(ops.leaky_relu), kink=_near_zero(1e-2)),
        GradCheckCase("reductions", _reductions),
        GradCheckCase("indexing", _indexing),
        GradCheckCase("conv2d", _conv(1, 1)),
        GradCheckCase("conv2d_stride2", _conv(2, 1)),
        GradCheckCase("modulated_conv2d", _modulated_conv),
        GradCheckCase("upsample_bilinear", _resample("bilinear")),
        GradCheckCase("upsample_nearest", _resample("nearest")),
        GradCheckCase("resize_bilinear", _resample("bilinear", (7, 5))),
        GradCheckCase("grid_sample", _grid_sample, kink=_grid_kink),
        GradCheckCase("morph_features", _morph_features),
        GradCheckCase("r1_penalty", _r1),
        GradCheckCase("tiny_model", _tiny_model, tolerance=2e-3, max_coords=8),
    ]
    for case in cases:
        registry.register(case)
    return registry
