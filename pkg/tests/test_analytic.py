import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twohop_aoi import analytic
from twohop_aoi.analytic import SchemeMoments
from twohop_aoi.params import LinkParams, Scheme

from oracles import exact_two_arq, exact_two_noarq

probs = st.floats(min_value=0.01, max_value=1.0, allow_nan=False)


@pytest.mark.parametrize("q,expected", [(1.0, 1.5), (0.5, 2.5), (0.2, 5.5)])
def test_single_noarq(q, expected):
    res = analytic.aoi_single_noarq(q)
    assert res.average_aoi == pytest.approx(expected, abs=1e-12)
    assert res.moments.e_tau_z == res.moments.e_z


@pytest.mark.parametrize("q,expected", [(1.0, 1.5), (0.5, 3.5), (0.2, 9.5)])
def test_single_arq(q, expected):
    res = analytic.aoi_single_arq(q)
    assert res.average_aoi == pytest.approx(expected, abs=1e-12)
    assert res.moments.e_tau_z == pytest.approx(res.moments.e_z**2)


@pytest.mark.parametrize(
    "p1,p2,expected",
    [
        (1.0, 1.0, 3.0),
        # values below come from exact rational evaluation in oracles.py
        (0.2, 0.2, 30.666666666666668),
        (0.7, 0.7, 4.381152460984394),
    ],
)
def test_two_noarq(p1, p2, expected):
    res = analytic.aoi_two_noarq(LinkParams(p1, p2))
    assert res.average_aoi == pytest.approx(expected, abs=1e-12)
    assert float(exact_two_noarq(p1, p2)) == pytest.approx(expected, abs=1e-12)
    assert res.moments.e_tau_z == 2 * res.moments.e_z


@pytest.mark.parametrize(
    "p1,p2,rounded",
    [(0.5, 0.2, 11.07), (0.5, 1.0, 3.83), (0.2, 0.5, 8.07), (1.0, 0.5, 4.83)],
)
def test_two_arq_reported_points(p1, p2, rounded):
    value = analytic.aoi_two_arq(LinkParams(p1, p2)).average_aoi
    assert value == pytest.approx(float(exact_two_arq(p1, p2)), abs=1e-12)
    assert abs(value - rounded) < 0.005


def test_two_arq_moments_decomposition():
    m = analytic.aoi_two_arq(LinkParams(0.5, 0.5)).moments
    assert (m.e_z, m.e_z2, m.e_tau_z) == pytest.approx((4.0, 20.0, 12.0))


@pytest.mark.parametrize(
    "moments,expected",
    [
        (SchemeMoments(2.0, 4.0, 4.0), 3.0),
        (SchemeMoments(6.0, 58.0, 12.0), 2 + 58 / 12),
        (SchemeMoments(4.0, 20.0, 12.0), 5.5),
    ],
)
def test_aoi_from_moments(moments, expected):
    assert analytic.aoi_from_moments(moments) == pytest.approx(expected, abs=1e-12)


def test_from_moments_matches_closed_forms_at_half():
    p = LinkParams(0.5, 0.5)
    assert analytic.aoi_from_moments(analytic.aoi_two_noarq(p).moments) == pytest.approx(
        analytic.aoi_two_noarq(p).average_aoi, abs=1e-12
    )
    assert analytic.aoi_from_moments(analytic.aoi_two_arq(p).moments) == pytest.approx(5.5, abs=1e-12)


@pytest.mark.parametrize(
    "moments",
    [SchemeMoments(0.5, 1.0, 1.0), SchemeMoments(3.0, 4.0, 3.0), SchemeMoments(3.0, 9.0, 2.0)],
)
def test_moment_invariants_enforced(moments):
    with pytest.raises(ValueError):
        analytic.aoi_from_moments(moments)


@pytest.mark.parametrize("fn", [analytic.aoi_single_noarq, analytic.aoi_single_arq])
@pytest.mark.parametrize("q", [0.0, -0.5, 1.01, float("nan")])
def test_single_rejects(fn, q):
    with pytest.raises(ValueError):
        fn(q)


class TestGap:
    @pytest.mark.parametrize("p1", [0.01, 0.3, 0.77, 1.0])
    def test_zero_when_second_hop_perfect(self, p1):
        assert analytic.aoi_gap(LinkParams(p1, 1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_values(self):
        assert analytic.aoi_gap(LinkParams(0.2, 0.2)) == pytest.approx(-17.666666666666668, abs=1e-10)
        assert analytic.aoi_gap(LinkParams(0.7, 0.7)) == pytest.approx(-0.3097238895558223, abs=1e-12)

    @settings(max_examples=300, deadline=None)
    @given(p1=probs, p2=probs)
    def test_never_positive(self, p1, p2):
        params = LinkParams(p1, p2)
        gap = analytic.aoi_gap(params)
        assert gap <= 1e-12
        assert gap == pytest.approx(analytic.aoi_gap_factored(params), rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(q=probs)
def test_single_hop_penalty(q):
    diff = analytic.aoi_single_arq(q).average_aoi - analytic.aoi_single_noarq(q).average_aoi
    assert diff == pytest.approx(1 / q - 1, abs=1e-12)
    assert diff >= -1e-15


@settings(max_examples=200, deadline=None)
@given(scheme=st.sampled_from([Scheme.TWO_NOARQ, Scheme.TWO_ARQ]), p1=probs, p2=probs)
def test_closed_forms_match_exact(scheme, p1, p2):
    value = analytic.aoi(scheme, LinkParams(p1, p2)).average_aoi
    exact = exact_two_arq(p1, p2) if scheme is Scheme.TWO_ARQ else exact_two_noarq(p1, p2)
    assert value == pytest.approx(float(exact), rel=1e-13)


@pytest.mark.parametrize("fn", [analytic.aoi_two_noarq, analytic.aoi_two_arq])
def test_strictly_decreasing(fn):
    grid = np.round(np.arange(1, 100) / 100, 2)
    values = np.array([[fn(LinkParams(a, b)).average_aoi for b in grid] for a in grid])
    assert np.all(np.diff(values, axis=0) < 0), "not decreasing in p1"
    assert np.all(np.diff(values, axis=1) < 0), "not decreasing in p2"


def test_swap_dominance_example():
    low_second = analytic.aoi_two_arq(LinkParams(0.9, 0.5)).average_aoi
    high_second = analytic.aoi_two_arq(LinkParams(0.5, 0.9)).average_aoi
    assert high_second < low_second
    assert low_second - high_second == pytest.approx(1 / 0.5 - 1 / 0.9, abs=1e-12)


def test_dispatch_covers_all_schemes():
    p = LinkParams(0.4, 0.6)
    assert analytic.aoi("single-noarq", p).average_aoi == analytic.aoi_single_noarq(0.4).average_aoi
    assert analytic.aoi("single-arq", p).average_aoi == analytic.aoi_single_arq(0.4).average_aoi
    assert analytic.aoi("two-noarq", p) == analytic.aoi_two_noarq(p)
    assert analytic.aoi("two-arq", p) == analytic.aoi_two_arq(p)
