import numpy as np
import pytest
from hypothesis import given, strategies as st

from crnqueues.conservation import RegionVertices
from crnqueues.errors import DegenerateRegionError, InfeasibleThresholdsError
from crnqueues.optimize import (Clamp, CostCoefficients, coefficients, cost, cost_curve,
                                export_cost_curve_csv, optimal_alpha, unconstrained_minimizer)
from crnqueues.synthesis import FeasibleInterval, Thresholds, feasible_interval

from oracles import brute_argmin
from strategies import vertices

V = RegionVertices(1, 3, 5, 2)


def test_cost_examples():
    assert cost(V, 1) == pytest.approx(np.hypot(1, 5))
    assert cost(V, 0) == pytest.approx(np.sqrt(coefficients(V).c3))
    assert cost(V, 0.5) == pytest.approx(4.0311, abs=1e-4)
    assert cost(V, [0, 1]).shape == (2,)
    with pytest.raises(ValueError):
        cost(V, -0.1)


def test_coefficients_example():
    c = coefficients(V)
    assert (c.c1, c.c2, c.c3) == (13, 0, 13)
    assert unconstrained_minimizer(c) == 0


def test_symmetric_vertices_mix_evenly():
    v = RegionVertices(1.0, 4.0, 4.0, 1.0)
    assert unconstrained_minimizer(coefficients(v)) == pytest.approx(0.5)


def test_minimizer_arithmetic():
    assert unconstrained_minimizer(CostCoefficients(13, 13, 1)) == 0.5
    with pytest.raises(DegenerateRegionError):
        CostCoefficients(0, 1, 1)


@given(vertices(), st.floats(0, 1))
def test_cost_square_is_quadratic(v, alpha):
    c = coefficients(v)
    q = c.c1 * alpha**2 - c.c2 * alpha + c.c3
    assert cost(v, alpha) ** 2 == pytest.approx(q, rel=1e-10, abs=1e-10 * c.c3)


def test_clamp_cases():
    v = RegionVertices(1.0, 4.0, 4.0, 1.0)  # beta = 0.5
    mid = optimal_alpha(v, FeasibleInterval(0.1, 0.8, True))
    assert mid.clamped is Clamp.INTERIOR and mid.alpha_min == pytest.approx(0.5)
    assert mid.cost_at_min == pytest.approx(cost(v, 0.5))
    lo = optimal_alpha(v, FeasibleInterval(0.6, 0.8, True))
    assert lo.clamped is Clamp.LOWER and lo.alpha_min == 0.6
    hi = optimal_alpha(v, FeasibleInterval(0.1, 0.3, True))
    assert hi.clamped is Clamp.UPPER and hi.alpha_min == 0.3
    tie = optimal_alpha(v, FeasibleInterval(0.5, 0.8, True))
    assert tie.clamped is Clamp.INTERIOR


def test_infeasible_raises():
    with pytest.raises(InfeasibleThresholdsError):
        optimal_alpha(V, FeasibleInterval(0.6, 0.4, False))


@given(vertices(), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_minimizer_beats_grid(v, wp, ws):
    iv = feasible_interval(v, Thresholds.blended(v, wp, ws))
    if not iv.feasible:
        return
    opt = optimal_alpha(v, iv)
    x, fx, step = brute_argmin(lambda a: cost(v, a), iv.a1, iv.a2, 2001)
    assert abs(opt.alpha_min - x) <= step
    assert opt.cost_at_min <= fx * (1 + 1e-12)


def test_cost_curve(tmp_path):
    a, f = cost_curve(V, 0.1, 0.8)
    assert len(a) == 512 and a[0] == 0.1 and a[-1] == 0.8
    path = tmp_path / "c.csv"
    export_cost_curve_csv(path, V, 0.1, 0.8)
    lines = path.read_text().splitlines()
    assert lines[:2] == ["# crn-queues v1", "alpha,cost"] and len(lines) == 514
