"""Genetic-algorithm engine: determinism, elitism, bounds."""

import numpy as np
import pytest

from pulselab.ga import EvaluationError, GAConfig, PolynomialPhase, best_mask, run_ga
from pulselab.pulses import make_grid

GRID = make_grid(640, 320, 800.0, 0.155)

TOY_CONFIG = GAConfig(population=24, generations=40, seed=3)


def quadratic_bowl(params: PolynomialPhase) -> float:
    return -(params.a_fs2**2 + (params.b_fs3 / 10.0) ** 2 + (params.c_fs4 / 100.0) ** 2)


class TestRunGA:
    def test_convex_toy_converges(self):
        # Scale-matched convex objective: optimum 0 at the origin.
        cfg = GAConfig(population=40, generations=50, seed=1)

        def ev(p):
            return -((p.a_fs2 / 2e4) ** 2 + (p.b_fs3 / 4e5) ** 2 + (p.c_fs4 / 1e6) ** 2)

        trace = run_ga(ev, cfg)
        assert trace.best_fitness > -1e-3

    def test_bit_identical_reruns(self):
        t1 = run_ga(quadratic_bowl, TOY_CONFIG)
        t2 = run_ga(quadratic_bowl, TOY_CONFIG)
        assert t1 == t2

    def test_different_seeds_differ(self):
        t1 = run_ga(quadratic_bowl, TOY_CONFIG)
        t2 = run_ga(quadratic_bowl, GAConfig(population=24, generations=40, seed=4))
        assert t1.best != t2.best or t1.best_individual != t2.best_individual

    def test_elitism_monotone(self):
        trace = run_ga(quadratic_bowl, TOY_CONFIG)
        assert all(b2 >= b1 for b1, b2 in zip(trace.best, trace.best[1:]))

    def test_exact_evaluation_count(self):
        calls = 0

        def counting(p):
            nonlocal calls
            calls += 1
            return quadratic_bowl(p)

        cfg = GAConfig(population=10, generations=7, seed=0)
        trace = run_ga(counting, cfg)
        assert calls == 10 * (7 + 1)
        assert trace.evaluations == calls

    def test_bounds_respected(self):
        cfg = GAConfig(population=16, generations=10, seed=2)
        lo = np.array([b[0] for b in cfg.bounds])
        hi = np.array([b[1] for b in cfg.bounds])

        def checking(p):
            vec = np.array([p.a_fs2, p.b_fs3, p.c_fs4, p.omega0])
            assert np.all(vec >= lo - 1e-12) and np.all(vec <= hi + 1e-12)
            return quadratic_bowl(p)

        run_ga(checking, cfg)

    def test_nonfinite_fitness_raises(self):
        def bad(p):
            return float("nan")

        with pytest.raises(EvaluationError):
            run_ga(bad, GAConfig(population=8, generations=2, seed=0))

    def test_trace_lengths(self):
        trace = run_ga(quadratic_bowl, GAConfig(population=8, generations=5, seed=0))
        assert len(trace.best) == len(trace.mean) == len(trace.std) == 6


class TestBestMask:
    def test_zero_params_zero_mask(self):
        # A trace whose winner is the flat phase yields the zero mask.
        def prefer_origin(p):
            return quadratic_bowl(p) - abs(p.omega0 - GRID.center_omega)

        trace = run_ga(prefer_origin, GAConfig(population=30, generations=40, seed=5))
        mask = best_mask(trace, GRID)
        p = trace.best_individual.params
        d = GRID.omegas - p.omega0
        expected = p.a_fs2 * d**2 + p.b_fs3 * d**3 + p.c_fs4 * d**4
        np.testing.assert_array_equal(mask.values, expected)

    def test_re_evaluation_closure(self):
        trace = run_ga(quadratic_bowl, TOY_CONFIG)
        assert quadratic_bowl(trace.best_individual.params) == trace.best_fitness

    def test_equal_params_equal_masks(self):
        t1 = run_ga(quadratic_bowl, TOY_CONFIG)
        t2 = run_ga(quadratic_bowl, TOY_CONFIG)
        m1, m2 = best_mask(t1, GRID), best_mask(t2, GRID)
        assert np.array_equal(m1.values, m2.values)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            GAConfig(population=2)
        with pytest.raises(ValueError):
            GAConfig(elite_count=40, population=40)
        with pytest.raises(ValueError):
            GAConfig(crossover_rate=1.5)
        with pytest.raises(ValueError):
            GAConfig(bounds=((1.0, -1.0), (-1, 1), (-1, 1), (2, 3)))

    def test_omega0_restriction(self):
        cfg = GAConfig().with_omega0_bounds(GRID)
        lo, hi = cfg.bounds[3]
        assert lo == pytest.approx(float(GRID.omega(480)))
        assert hi == pytest.approx(float(GRID.omega(160)))
        assert lo < GRID.center_omega < hi
