"""Seeded genetic algorithm over polynomial spectral-phase parameters.

Maximizes any scalar evaluator of a :class:`PolynomialPhase` (two-photon
signal for shaper calibration, photoproduct ratio for control runs) with
tournament selection, blend crossover, Gaussian mutation clipped to the
search box, and elitism.  Every random draw derives from
``(seed, generation, individual index)``, so traces are bit-reproducible
and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .pulses import PhaseMask, PolynomialPhase, SpectralGrid, eval_polynomial_phase

PARAM_NAMES = ("a_fs2", "b_fs3", "c_fs4", "omega0")


class EvaluationError(RuntimeError):
    """The evaluator returned a non-finite fitness for some individual."""


@dataclass(frozen=True)
class GAConfig:
    population: int = 40
    generations: int = 60
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    # Per-parameter mutation widths (fs^2, fs^3, fs^4, rad/fs).
    mutation_sigma: tuple[float, float, float, float] = (1.5e3, 3.0e4, 3.0e5, 0.004)
    # Widths anneal geometrically to this fraction by the final generation,
    # trading exploration for endgame precision.
    mutation_floor: float = 0.01
    elite_count: int = 2
    # Closed intervals per parameter, same order as PARAM_NAMES.
    # A and B spans follow the shaper's phase-wrap resolution limit; the
    # same per-pixel limit bounds the quartic term near +-1e6 fs^4.
    bounds: tuple[tuple[float, float], ...] = (
        (-2.0e4, 2.0e4),
        (-4.0e5, 4.0e5),
        (-1.0e6, 1.0e6),
        (2.2, 2.5),
    )
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if self.elite_count >= self.population or self.elite_count < 0:
            raise ValueError("elite_count must be in [0, population)")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if not 0.0 < self.mutation_floor <= 1.0:
            raise ValueError("mutation_floor must be in (0, 1]")
        if len(self.bounds) != 4 or any(lo > hi for lo, hi in self.bounds):
            raise ValueError("bounds must be four non-empty intervals")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")

    def with_omega0_bounds(self, grid: SpectralGrid) -> "GAConfig":
        """Restrict the expansion center to the central 50% of the grid."""
        n = grid.pixel_count
        lo_px, hi_px = n // 4, 3 * n // 4
        om = sorted((float(grid.omega(lo_px)), float(grid.omega(hi_px))))
        b = list(self.bounds)
        b[3] = (om[0], om[1])
        return replace(self, bounds=tuple(b))


@dataclass(frozen=True)
class Individual:
    params: PolynomialPhase
    fitness: float | None = None

    def as_array(self) -> np.ndarray:
        p = self.params
        return np.array([p.a_fs2, p.b_fs3, p.c_fs4, p.omega0])


@dataclass(frozen=True)
class OptimizationTrace:
    """Per-generation statistics plus the overall winner.

    ``best`` is non-decreasing across generations (elitism).  Generation 0
    is the evaluated initial population.
    """

    best: tuple[float, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    best_individual: Individual
    evaluations: int
    seed: int

    @property
    def best_fitness(self) -> float:
        return self.best[-1]


def _rng(seed: int, generation: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(generation, index))
    return np.random.Generator(np.random.PCG64(ss))


def _clip(vec: np.ndarray, bounds: Sequence[tuple[float, float]]) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.clip(vec, lo, hi)


def _evaluate(evaluator, params: PolynomialPhase) -> float:
    fit = float(evaluator(params))
    if not math.isfinite(fit):
        raise EvaluationError(f"evaluator returned non-finite fitness for {params}")
    return fit


def run_ga(evaluator: Callable[[PolynomialPhase], float], config: GAConfig) -> OptimizationTrace:
    """Run the full generational loop and return its trace.

    Exactly ``population`` evaluator calls per generation plus the initial
    population, i.e. ``population * (generations + 1)`` in total.
    """
    pop_n = config.population
    bounds = config.bounds
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    span = hi - lo

    def to_params(vec: np.ndarray) -> PolynomialPhase:
        return PolynomialPhase(float(vec[0]), float(vec[1]), float(vec[2]), float(vec[3]))

    # Generation 0: uniform draws over the box.
    population: list[Individual] = []
    for i in range(pop_n):
        rng = _rng(config.seed, 0, i)
        vec = lo + rng.random(4) * span
        params = to_params(vec)
        population.append(Individual(params, _evaluate(evaluator, params)))
    evaluations = pop_n

    def ranked(pop: list[Individual]) -> list[Individual]:
        return sorted(pop, key=lambda ind: -ind.fitness)

    population = ranked(population)
    best_hist = [population[0].fitness]
    fits = np.array([ind.fitness for ind in population])
    mean_hist = [float(fits.mean())]
    std_hist = [float(fits.std())]

    sigma0 = np.array(config.mutation_sigma)
    for gen in range(1, config.generations + 1):
        anneal = config.mutation_floor ** (gen / config.generations)
        sigma = sigma0 * anneal
        parent_vecs = np.array([ind.as_array() for ind in population])
        parent_fits = np.array([ind.fitness for ind in population])

        offspring: list[Individual] = []
        for i in range(pop_n):
            rng = _rng(config.seed, gen, i)

            def tournament() -> np.ndarray:
                a, b = rng.integers(0, pop_n, size=2)
                return parent_vecs[a] if parent_fits[a] >= parent_fits[b] else parent_vecs[b]

            p1, p2 = tournament(), tournament()
            if rng.random() < config.crossover_rate:
                # Blend (BLX-alpha) crossover.
                alpha = 0.5
                lo_g = np.minimum(p1, p2)
                hi_g = np.maximum(p1, p2)
                width = hi_g - lo_g
                child = lo_g - alpha * width + rng.random(4) * (1 + 2 * alpha) * width
            else:
                child = p1.copy()
            mutate = rng.random(4) < config.mutation_rate
            child = child + mutate * rng.normal(0.0, 1.0, size=4) * sigma
            child = _clip(child, bounds)
            params = to_params(child)
            offspring.append(Individual(params, _evaluate(evaluator, params)))
        evaluations += pop_n

        elites = population[: config.elite_count]
        population = ranked(list(elites) + ranked(offspring)[: pop_n - config.elite_count])
        best_hist.append(population[0].fitness)
        fits = np.array([ind.fitness for ind in population])
        mean_hist.append(float(fits.mean()))
        std_hist.append(float(fits.std()))

    return OptimizationTrace(
        best=tuple(best_hist),
        mean=tuple(mean_hist),
        std=tuple(std_hist),
        best_individual=population[0],
        evaluations=evaluations,
        seed=config.seed,
    )


def best_mask(trace: OptimizationTrace, grid: SpectralGrid) -> PhaseMask:
    """Sample the trace's best individual onto a shaper grid."""
    return eval_polynomial_phase(trace.best_individual.params, grid)


def trace_csv_rows(trace: OptimizationTrace) -> list[tuple[int, float, float, float]]:
    return [
        (g, trace.best[g], trace.mean[g], trace.std[g]) for g in range(len(trace.best))
    ]
