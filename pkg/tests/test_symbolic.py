from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import rationals, rotations, separated_maps
from oracles import naive_factors, naive_orbit
from pcim_lab import errors
from pcim_lab.map_core import contracted_rotation, validate_pcim
from pcim_lab.symbolic import (
    AffineFit,
    CantorLike,
    ComplexityProfile,
    Completed,
    HitDelta,
    Periodic,
    Undetermined,
    analyze_orbit,
    classify_omega,
    complexity_profile,
    detect_affine,
    itinerary,
    word_set,
)


def profile(values, n_symbols=2):
    return ComplexityProfile(tuple(values), None, 1000, n_symbols)


class TestItinerary:
    def test_e2(self, corpus):
        it = itinerary(corpus["e2"], F(1, 4), 6)
        assert it.symbols == (1, 2, 1, 2, 1, 2)
        assert it.termination == Completed(6)

    def test_hits_delta(self, corpus):
        it = itinerary(corpus["e2"], F(0), 5)
        assert it.symbols == (1,)
        assert it.termination == HitDelta(1, F(1, 2))

    def test_starting_on_cut(self, corpus):
        assert itinerary(corpus["e2"], F(1, 2), 3).termination == HitDelta(0, F(1, 2))

    def test_word_set(self, corpus):
        it = itinerary(corpus["e2"], F(1, 4), 10)
        assert word_set(it, 3) == {(1, 2, 1), (2, 1, 2)}

    def test_word_set_errors(self, corpus):
        with pytest.raises(errors.ItineraryLeftXtilde):
            word_set(itinerary(corpus["e2"], F(0), 5), 1)
        with pytest.raises(errors.PrefixTooShort):
            word_set(itinerary(corpus["e2"], F(1, 4), 3), 4)

    @given(separated_maps(), st.data())
    @settings(max_examples=50, deadline=None)
    def test_word_set_matches_naive(self, m, data):
        x = data.draw(rationals(0, 1, 100))
        it = itinerary(m, x, 120)
        _, syms = naive_orbit(m.definition, x, 120)
        assert list(it.symbols) == syms
        if it.completed:
            for n in (1, 3, 7):
                assert word_set(it, n) == naive_factors(syms, n)


class TestComplexity:
    def test_e2_constant(self, corpus):
        it = itinerary(corpus["e2"], F(1, 4), 200)
        prof = complexity_profile(it, 20)
        assert prof.values == (2,) * 20
        assert prof.affine_fit == AffineFit(1, 0, 2)

    def test_prefix_too_short(self, corpus):
        with pytest.raises(errors.PrefixTooShort):
            complexity_profile(itinerary(corpus["e2"], F(1, 4), 10), 10)

    def test_detect_affine_sturmian_like(self):
        assert detect_affine(profile([2, 3, 4, 5, 6, 7, 8])) == AffineFit(1, 1, 1)

    def test_detect_affine_late_start(self):
        assert detect_affine(profile([2, 4, 5, 5, 5, 5, 5])) == AffineFit(3, 0, 5)

    def test_detect_affine_short_tail(self):
        assert detect_affine(profile([2, 4, 6, 8, 9, 10])) is None

    def test_detect_affine_alpha_out_of_range(self):
        with pytest.raises(errors.AlphaOutOfRange) as info:
            detect_affine(profile([2, 4, 6, 8, 10, 12]))
        assert info.value.alpha == 2

    def test_detect_affine_small_intercept(self):
        # slope 1 with intercept 0 is not the profile of a genuine itinerary
        assert detect_affine(profile([1, 2, 3, 4, 5, 6])) is None

    def test_detect_affine_rejects_tiny_profiles(self):
        with pytest.raises(errors.PrefixTooShort):
            detect_affine(profile([1, 1, 1]))

    @given(separated_maps(max_pieces=3), st.data())
    @settings(max_examples=40, deadline=None)
    def test_complexity_is_nondecreasing_and_bounded(self, m, data):
        x = data.draw(rationals(0, 1, 100))
        it = itinerary(m, x, 400)
        if not it.completed:
            return
        p = complexity_profile(it, 12).values
        N = m.n_pieces
        assert all(a <= b for a, b in zip(p, p[1:]))
        assert all(b <= N * a for a, b in zip(p, p[1:]))
        assert p[0] <= N


class TestClassification:
    def test_e2_cycle(self, corpus):
        for x in (F(1, 4), F(1, 5), F(9, 16)):
            om = classify_omega(corpus["e2"], x)
            assert om == Periodic((F(1, 5), F(3, 5)), 2, om.exact_repeat)

    def test_e1_fixed_point(self, corpus):
        om = classify_omega(corpus["e1"], F(1))
        assert isinstance(om, Periodic) and om.orbit == (F(0),) and om.period == 1

    def test_r1(self, corpus):
        om = classify_omega(corpus["r1"], F(1, 3))
        assert om.orbit == (F(1, 15), F(11, 15))

    def test_r2_period_seven(self, corpus):
        assert classify_omega(corpus["r2"], F(1, 3)).period == 7

    def test_hitting_delta_raises(self, corpus):
        with pytest.raises(errors.ItineraryLeftXtilde):
            classify_omega(corpus["e2"], F(0))

    def test_analysis_profile(self, corpus):
        res = analyze_orbit(corpus["t3"], F(1, 2), 100_000, 40)
        assert res.omega.orbit == (F(8, 17), F(40, 51))
        assert res.profile.affine_fit.alpha == 0
        assert res.profile.p(40) == 2

    def test_long_period_is_not_cantor(self):
        # with a short budget a long cycle can look aperiodic; the engine must not call it a Cantor set falsely
        m = validate_pcim(contracted_rotation(F(3, 4), F(1, 2)))
        om = classify_omega(m, F(1, 3), T=100_000, n_max=40)
        assert isinstance(om, Periodic) and om.period == 27

    def test_str(self):
        assert str(Periodic((F(0),), 1)) == "Periodic(1)"
        assert str(CantorLike(1)) == "CantorLike(1)"
        assert str(Undetermined("x")) == "Undetermined"

    @given(rotations(), st.data())
    @settings(max_examples=30, deadline=None)
    def test_periodic_results_are_exact_cycles(self, params, data):
        m = validate_pcim(contracted_rotation(*params))
        x = data.draw(rationals(0, 1, 50))
        try:
            om = classify_omega(m, x, T=5000, n_max=20)
        except errors.ItineraryLeftXtilde:
            return
        if isinstance(om, Periodic):
            pts, syms = naive_orbit(m.definition, om.orbit[0], om.period)
            assert len(syms) == om.period
            assert pts[-1] == om.orbit[0]
            assert set(pts[:-1]) == set(om.orbit)
