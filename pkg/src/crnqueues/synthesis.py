"""Achievable region and threshold synthesis for the two-class network.

A mix ``alpha`` in [0, 1] gives the PU class priority a fraction ``alpha`` of the
time, producing waiting times on the segment between the PU-priority corner
(A, C) and the SU-priority corner (B, D).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .conservation import RegionVertices
from .errors import DegenerateRegionError
from .ioutil import write_csv

SEGMENT_RTOL = 1e-9


@dataclass(frozen=True)
class Thresholds:
    th_pu: float
    th_su: float

    def __post_init__(self):
        for v in (self.th_pu, self.th_su):
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"thresholds must be finite and positive, got {v!r}")

    @classmethod
    def blended(cls, v: RegionVertices, pu_weight: float, su_weight: float) -> "Thresholds":
        """th_pu = w*B + (1-w)*A and th_su = w'*C + (1-w')*D."""
        return cls(pu_weight * v.b + (1 - pu_weight) * v.a,
                   su_weight * v.c + (1 - su_weight) * v.d)


@dataclass(frozen=True)
class FeasibleInterval:
    """Open interval (a1, a2) of admissible mixes.

    ``a1`` is clamped below at 0 and ``a2`` above at 1; the unclamped values are
    kept in ``a1_raw``/``a2_raw``. ``boundary`` flags the case a1 == a2, which is
    infeasible under the strict inequalities.
    """

    a1: float
    a2: float
    feasible: bool
    boundary: bool = False
    a1_raw: float | None = None
    a2_raw: float | None = None

    def contains(self, alpha: float) -> bool:
        return self.a1 < alpha < self.a2

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "feasible": self.feasible, "boundary": self.boundary,
                "a1_raw": self.a1_raw, "a2_raw": self.a2_raw}


@dataclass(frozen=True)
class FrontierPoint:
    eta: float
    slope_m_prime: float
    excess_delay_pu: float | None

    def to_dict(self) -> dict:
        return {"eta": self.eta, "m_prime": self.slope_m_prime, "excess_delay_pu": self.excess_delay_pu}


@dataclass(frozen=True)
class SegmentMatch:
    on_segment: bool
    alpha: float | None
    alpha_pu: float | None
    alpha_su: float | None

    def to_dict(self) -> dict:
        return {"on_segment": self.on_segment, "alpha": self.alpha,
                "alpha_pu": self.alpha_pu, "alpha_su": self.alpha_su}


def _check_alpha(alpha):
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")


def mixed_waiting(v: RegionVertices, alpha: float) -> tuple[float, float]:
    _check_alpha(alpha)
    return alpha * v.a + (1 - alpha) * v.b, alpha * v.c + (1 - alpha) * v.d


def feasible_interval(v: RegionVertices, th: Thresholds) -> FeasibleInterval:
    a1_raw = (v.b - th.th_pu) / (v.b - v.a)
    a2_raw = (th.th_su - v.d) / (v.c - v.d)
    lo, hi = max(a1_raw, 0.0), min(a2_raw, 1.0)
    return FeasibleInterval(lo, hi, feasible=lo < hi, boundary=lo == hi, a1_raw=a1_raw, a2_raw=a2_raw)


def unique_alpha_for_target(v: RegionVertices, target: tuple[float, float]) -> SegmentMatch:
    """Mix that reaches ``target = (w_pu, w_su)``, if the target is on the segment."""
    w_pu, w_su = target
    span_pu, span_su = v.b - v.a, v.c - v.d
    if span_pu == 0 and span_su == 0:
        raise DegenerateRegionError("degenerate segment: A == B and C == D")
    alpha_pu = (v.b - w_pu) / span_pu if span_pu != 0 else None
    alpha_su = (w_su - v.d) / span_su if span_su != 0 else None
    # solve on the better-conditioned coordinate, then check both
    alpha = alpha_pu if alpha_su is None or (alpha_pu is not None and abs(span_pu) >= abs(span_su)) else alpha_su
    ok = -SEGMENT_RTOL <= alpha <= 1 + SEGMENT_RTOL
    if ok:
        a = min(max(alpha, 0.0), 1.0)
        got_pu, got_su = mixed_waiting(v, a)
        ok = (math.isclose(got_pu, w_pu, rel_tol=SEGMENT_RTOL, abs_tol=0.0)
              and math.isclose(got_su, w_su, rel_tol=SEGMENT_RTOL, abs_tol=0.0))
        if ok:
            return SegmentMatch(True, a, alpha_pu, alpha_su)
    return SegmentMatch(False, None, alpha_pu, alpha_su)


def frontier_point(v: RegionVertices, th: Thresholds) -> FrontierPoint:
    """Best SU waiting time reachable while the PU waiting time stays at ``th_pu``.

    ``th_pu`` must lie in [A, B]: below A no mix protects the PU class enough,
    above B the PU constraint never binds.
    """
    if th.th_pu < v.a:
        raise ValueError(f"th_pu={th.th_pu:.6g} below A={v.a:.6g}: PU constraint cannot be met")
    if th.th_pu > v.b:
        raise ValueError(f"th_pu={th.th_pu:.6g} above B={v.b:.6g}: PU constraint is non-binding")
    m = (v.c - v.d) / (v.b - v.a)
    eta = m * (v.b - th.th_pu) + v.d
    if th.th_su >= v.c:
        excess = 0.0
    elif th.th_su > eta:
        excess = (v.c - th.th_su) / m
    else:
        excess = None
    return FrontierPoint(eta, m, excess)


def region_polyline(v: RegionVertices, th: Thresholds | None = None) -> list[tuple[str, float, float]]:
    """Candidate corners of the (possibly clipped) achievable region in (W_PU, W_SU).

    Always includes the two priority vertices; with thresholds, adds the
    intersections of each threshold line with the segment and with the other
    threshold, leaving clipping to the plotting side.
    """
    pts = [("pu_priority_vertex", v.a, v.c), ("su_priority_vertex", v.b, v.d)]
    if th is not None:
        a1 = (v.b - th.th_pu) / (v.b - v.a)
        a2 = (th.th_su - v.d) / (v.c - v.d)
        if 0 <= a1 <= 1:
            pts.append(("th_pu_on_segment", *mixed_waiting(v, a1)))
        if 0 <= a2 <= 1:
            pts.append(("th_su_on_segment", *mixed_waiting(v, a2)))
        pts.append(("threshold_corner", th.th_pu, th.th_su))
        pts.append(("th_pu_axis", th.th_pu, 0.0))
        pts.append(("th_su_axis", 0.0, th.th_su))
    return pts


def export_region_csv(path, v: RegionVertices, th: Thresholds | None = None) -> None:
    write_csv(path, ["point", "w_pu", "w_su"], region_polyline(v, th))
