import numpy as np
import pytest

from qtab.search.frontier import (
    FitnessCurve,
    FitnessFitError,
    ParetoFrontier,
    fit_fitness,
    good_point,
)

from helpers import brute_force_frontier, eval_points


class TestFrontierInsert:
    def test_dominated_insert_rejected(self):
        f = ParetoFrontier(eval_points([(22, 0.71)]))
        assert not f.insert(eval_points([(22, 0.70)])[0])
        assert len(f) == 1

    def test_strict_dominance_evicts_old_point(self):
        f = ParetoFrontier(eval_points([(22, 0.71)]))
        assert f.insert(eval_points([(23, 0.72)])[0])
        assert [(p.compression_rate, p.accuracy) for p in f.points] == [(23, 0.72)]

    def test_incomparable_points_coexist(self):
        f = ParetoFrontier(eval_points([(22, 0.71)]))
        assert f.insert(eval_points([(23, 0.65)])[0])
        assert len(f) == 2

    def test_duplicate_objectives_coexist(self):
        f = ParetoFrontier(eval_points([(22, 0.7)]))
        assert f.insert(eval_points([(22, 0.7)])[0])
        assert len(f) == 2

    def test_random_streams_match_brute_force(self, rng):
        for _ in range(10):
            pts = eval_points(
                zip(rng.uniform(5, 30, 200), rng.uniform(0, 1, 200))
            )
            f = ParetoFrontier()
            for p in pts:
                f.insert(p)
            got = sorted((p.compression_rate, p.accuracy) for p in f.points)
            ref = sorted(
                (p.compression_rate, p.accuracy) for p in brute_force_frontier(pts)
            )
            assert got == ref


class TestFitnessFit:
    def test_exact_parabola_recovered(self):
        rates = np.linspace(10, 30, 12)
        accs = -0.001 * rates ** 2 + 0.02 * rates + 0.5
        curve = fit_fitness(eval_points(zip(rates, accs)))
        assert curve.a == pytest.approx(-0.001, abs=1e-9)
        assert curve.b == pytest.approx(0.02, abs=1e-9)
        assert curve.c == pytest.approx(0.5, abs=1e-9)

    def test_three_points_interpolated_exactly(self):
        pts = eval_points([(10, 0.9), (20, 0.7), (28, 0.4)])
        curve = fit_fitness(pts)
        for p in pts:
            assert curve(p.compression_rate) == pytest.approx(p.accuracy, abs=1e-9)

    def test_too_few_points_rejected(self):
        with pytest.raises(FitnessFitError):
            fit_fitness(eval_points([(10, 0.9), (20, 0.7)]))

    def test_duplicate_rates_rejected(self):
        with pytest.raises(FitnessFitError):
            fit_fitness(eval_points([(10, 0.9), (10, 0.7), (20, 0.5)]))

    def test_curve_evaluation_and_serialization(self):
        curve = FitnessCurve(1.0, -2.0, 3.0)
        assert curve(2.0) == 1.0 * 4 - 2.0 * 2 + 3.0
        assert FitnessCurve.from_json_dict(curve.to_json_dict()) == curve


class TestGoodPoint:
    def test_on_curve_is_good(self):
        curve = FitnessCurve(0.0, 0.0, 0.5)
        assert good_point(eval_points([(22, 0.5)])[0], curve)

    def test_two_thousandths_below_is_not_good(self):
        curve = FitnessCurve(0.0, 0.0, 0.5)
        assert not good_point(eval_points([(22, 0.498)])[0], curve)

    def test_half_thousandth_below_is_good(self):
        curve = FitnessCurve(0.0, 0.0, 0.5)
        assert good_point(eval_points([(22, 0.4995)])[0], curve)
