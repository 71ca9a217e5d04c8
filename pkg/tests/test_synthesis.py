import csv

import pytest
from hypothesis import given, strategies as st

from crnqueues.conservation import RegionVertices, region_vertices
from crnqueues.synthesis import (Thresholds, export_region_csv, feasible_interval, frontier_point,
                                 mixed_waiting, region_polyline, unique_alpha_for_target)

from strategies import vertices

V = RegionVertices(1, 3, 5, 2)


def test_mixed_waiting_endpoints_and_mid():
    assert mixed_waiting(V, 1) == (1, 5)
    assert mixed_waiting(V, 0) == (3, 2)
    assert mixed_waiting(V, 0.5) == pytest.approx((2.0, 3.5))
    with pytest.raises(ValueError):
        mixed_waiting(V, 1.5)


def test_fig7_thresholds_interval(htr):
    v = region_vertices(htr)
    iv = feasible_interval(v, Thresholds.blended(v, 0.9, 0.8))
    assert iv.feasible and not iv.boundary
    assert iv.a1 == pytest.approx(0.1, abs=1e-12)
    assert iv.a2 == pytest.approx(0.8, abs=1e-12)
    assert iv.contains(0.5) and not iv.contains(0.1)


def test_tight_thresholds_infeasible():
    th = Thresholds(V.a * 1.01, V.d * 1.01)
    iv = feasible_interval(V, th)
    assert iv.a1 > 0.95 and iv.a2 < 0.05 and not iv.feasible


def test_loose_su_threshold_clamps():
    iv = feasible_interval(V, Thresholds(2.0, 100.0))
    assert iv.a2 == 1.0 and iv.a2_raw > 1 and iv.feasible
    iv = feasible_interval(V, Thresholds(100.0, 100.0))
    assert iv.a1 == 0.0 and iv.a1_raw < 0


def test_boundary_case_flagged():
    # a1 = a2 = 0.5
    iv = feasible_interval(V, Thresholds(2.0, 3.5))
    assert iv.boundary and not iv.feasible


@given(vertices(), st.floats(0, 1), st.floats(0, 1))
def test_interval_membership_matches_thresholds(v, alpha, w):
    th = Thresholds.blended(v, 0.7, 0.6)
    iv = feasible_interval(v, th)
    w_pu, w_su = mixed_waiting(v, alpha)
    inside = w_pu < th.th_pu and w_su < th.th_su
    # away from the edges, membership and threshold satisfaction agree
    if min(abs(alpha - iv.a1), abs(alpha - iv.a2)) > 1e-9:
        assert iv.contains(alpha) == inside


def test_unique_alpha_examples():
    assert unique_alpha_for_target(V, (1, 5)).alpha == 1
    mid = unique_alpha_for_target(V, (2, 3.5))
    assert mid.on_segment and mid.alpha == pytest.approx(0.5)
    off = unique_alpha_for_target(V, (2, 4))
    assert not off.on_segment and off.alpha_pu != off.alpha_su


@given(vertices(), st.floats(0, 1))
def test_unique_alpha_round_trip(v, alpha):
    m = unique_alpha_for_target(v, mixed_waiting(v, alpha))
    assert m.on_segment
    assert m.alpha == pytest.approx(alpha, abs=1e-9)


def test_frontier_limits():
    assert frontier_point(V, Thresholds(V.b, 1.0)).eta == pytest.approx(V.d)
    assert frontier_point(V, Thresholds(V.a, 1.0)).eta == pytest.approx(V.c)


def test_frontier_example():
    f = frontier_point(V, Thresholds(2.0, 4.0))
    assert f.slope_m_prime == pytest.approx(1.5)
    assert f.eta == pytest.approx(3.5)
    assert f.excess_delay_pu == pytest.approx((5 - 4) / 1.5)


def test_frontier_excess_cases():
    assert frontier_point(V, Thresholds(2.0, 6.0)).excess_delay_pu == 0
    assert frontier_point(V, Thresholds(2.0, 3.0)).excess_delay_pu is None
    with pytest.raises(ValueError, match="cannot be met"):
        frontier_point(V, Thresholds(0.5, 3.0))
    with pytest.raises(ValueError, match="non-binding"):
        frontier_point(V, Thresholds(4.0, 3.0))


def test_threshold_validation():
    with pytest.raises(ValueError):
        Thresholds(0, 1)
    with pytest.raises(ValueError):
        Thresholds(1, float("nan"))


def test_region_csv(tmp_path):
    path = tmp_path / "region.csv"
    export_region_csv(path, V, Thresholds(2.0, 4.0))
    lines = path.read_text().splitlines()
    assert lines[0] == "# crn-queues v1"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == len(region_polyline(V, Thresholds(2.0, 4.0)))
    assert rows[0] == {"point": "pu_priority_vertex", "w_pu": "1", "w_su": "5"}
