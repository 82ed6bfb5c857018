"""Benchmark functions, seeded noise, and convergence studies.

Two smooth benchmark functions with known derivatives drive the end-to-end
checks: differentiate noisy samples, compare against the exact derivative,
and watch the error fall as the noise level does. Errors are reported both
over the full interval and with the startup layer [a, a + 3*alpha] excluded,
because the boundary bias and the noise response scale differently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .differentiate import regularized_derivative
from .errors import UnknownExample
from .grid import GridFunction
from .solve import SqrtDelta, coordinate_alpha


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise description: level delta, generator seed, distribution.

    The only distribution so far is "gaussian_unit" (i.i.d. standard normal
    before scaling by delta). The draw depends on the seed alone, so noise at
    two levels with one seed differs exactly by the ratio of the levels.
    """

    delta: float
    seed: int
    distribution: str = "gaussian_unit"

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.distribution != "gaussian_unit":
            raise ValueError(f"unknown distribution {self.distribution!r}")


@dataclass(frozen=True)
class BenchmarkExample:
    a: float
    b: float
    y: Callable[[np.ndarray], np.ndarray]
    dy: Callable[[np.ndarray], np.ndarray]


def _example1_y(t):
    return np.sin(np.pi * t / 4.0) / (t**3 + 1.0)


def _example1_dy(t):
    den = t**3 + 1.0
    return (np.pi / 4.0) * np.cos(np.pi * t / 4.0) / den \
        - 3.0 * t**2 * np.sin(np.pi * t / 4.0) / den**2


def _example2_y(t):
    return np.cos(np.pi * t / 8.0) * np.exp(-(t**2))


def _example2_dy(t):
    return -np.exp(-(t**2)) * ((np.pi / 8.0) * np.sin(np.pi * t / 8.0)
                               + 2.0 * t * np.cos(np.pi * t / 8.0))


EXAMPLES = {
    1: BenchmarkExample(a=0.0, b=3.0, y=_example1_y, dy=_example1_dy),
    2: BenchmarkExample(a=0.0, b=5.0, y=_example2_y, dy=_example2_dy),
}


def example_function(example_id: int, t):
    """Value and exact derivative of a benchmark function at t.

    Example 1 is sin(pi*t/4) / (t^3 + 1) on [0, 3]; example 2 is
    cos(pi*t/8) * exp(-t^2) on [0, 5]. Raises UnknownExample otherwise.
    """
    try:
        ex = EXAMPLES[example_id]
    except KeyError:
        raise UnknownExample(f"no benchmark example with id {example_id!r}") from None
    t = np.asarray(t, dtype=float)
    return ex.y(t), ex.dy(t)


def example_interval(example_id: int) -> tuple[float, float]:
    """The interval a benchmark function is defined on."""
    try:
        ex = EXAMPLES[example_id]
    except KeyError:
        raise UnknownExample(f"no benchmark example with id {example_id!r}") from None
    return ex.a, ex.b


def add_noise(y: GridFunction, spec: NoiseSpec) -> GridFunction:
    """Add delta-scaled unit noise drawn from the seeded generator.

    With delta = 0 the samples pass through unchanged. The unit draw is made
    regardless, so the noise pattern for a given seed is one fixed vector
    that delta only scales.
    """
    rng = np.random.default_rng(spec.seed)
    unit = rng.standard_normal(y.n)
    return y.with_values(y.values + spec.delta * unit)


@dataclass(frozen=True)
class ExperimentReport:
    """One differentiation run against a benchmark function."""

    example_id: int
    n: int
    delta: float
    alpha: float
    seed: int
    max_error_full: float
    max_error_interior: float
    derivative: GridFunction
    exact_derivative: GridFunction


def run_experiment(example_id: int, delta: float, seed: int, n: int = 512,
                   alpha: float | None = None) -> ExperimentReport:
    """Differentiate one noisy benchmark realization and measure the error.

    Samples the benchmark on n uniform points, adds delta-scaled seeded
    noise, differentiates with the automatic baseline, and compares against
    the exact derivative. ``max_error_interior`` excludes the startup layer
    [a, a + 3*alpha]; ``max_error_full`` does not.

    alpha defaults to sqrt(delta).
    """
    a, b = example_interval(example_id)
    if alpha is None:
        alpha = coordinate_alpha(delta, SqrtDelta())
    ex = EXAMPLES[example_id]
    y = GridFunction.sample(ex.y, a, b, n)
    noisy = add_noise(y, NoiseSpec(delta=delta, seed=seed))
    result = regularized_derivative(noisy, alpha)
    exact = GridFunction.sample(ex.dy, a, b, n)
    err = np.abs(result.derivative.values - exact.values)
    interior = y.t > a + result.boundary_layer_width
    return ExperimentReport(
        example_id=example_id,
        n=n,
        delta=delta,
        alpha=alpha,
        seed=seed,
        max_error_full=float(np.max(err)),
        max_error_interior=float(np.max(err[interior])) if interior.any() else float("nan"),
        derivative=result.derivative,
        exact_derivative=exact,
    )


@dataclass(frozen=True)
class StudyRow:
    """Median errors across seeds at one noise level."""

    delta: float
    alpha: float
    seed_count: int
    median_max_error_full: float
    median_max_error_interior: float


def convergence_study(example_id: int, deltas: Sequence[float], seeds: Sequence[int],
                      n: int = 512) -> list[StudyRow]:
    """Median differentiation errors per noise level, over a set of seeds.

    Medians rather than means: single realizations can park an outlier far
    from the trend, and the point of the study is the trend in delta.

    Raises ValueError when deltas or seeds are empty.
    """
    deltas = [float(d) for d in deltas]
    seeds = [int(s) for s in seeds]
    if not deltas:
        raise ValueError("need at least one delta")
    if not seeds:
        raise ValueError("need at least one seed")
    rows = []
    for delta in deltas:
        reports = [run_experiment(example_id, delta, seed, n=n) for seed in seeds]
        rows.append(StudyRow(
            delta=delta,
            alpha=reports[0].alpha,
            seed_count=len(seeds),
            median_max_error_full=float(np.median([r.max_error_full for r in reports])),
            median_max_error_interior=float(np.median([r.max_error_interior for r in reports])),
        ))
    return rows
