"""Hypothesis strategies shared by the region tests."""

from hypothesis import strategies as st

from crnqueues.conservation import RegionVertices


@st.composite
def vertices(draw, min_gap=1e-3):
    # A < B and D < C, spread over many decades; pairs are kept at least
    # ``min_gap`` apart in relative terms so threshold arithmetic is well conditioned
    a = draw(st.floats(1e-9, 1e3))
    b = a * (1 + draw(st.floats(min_gap, 1e4)))
    d = draw(st.floats(1e-9, 1e3))
    c = d * (1 + draw(st.floats(min_gap, 1e4)))
    return RegionVertices(a, b, c, d)
