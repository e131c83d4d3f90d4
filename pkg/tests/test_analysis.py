import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from conftest import rotations, separated_maps
from pcim_lab import errors
from pcim_lab.analysis import (
    CantorCandidate,
    approximate_attractor,
    atoms_on_piece,
    box_dimension_estimate,
    check_pseudo_invariant,
    default_seeds,
    entropy_estimate,
    find_basic_pieces,
    grid_cells,
    min_cut_gap,
    parameter_sweep,
    parse_grid,
    require_D_in_Xtilde,
    require_separation,
    shadowing_witness,
    spanning_set,
    sum_formula,
    sweep_cell,
)
from pcim_lab.atoms import generations
from pcim_lab.map_core import Branch, contracted_rotation, make_map, validate_pcim


class TestGuards:
    def test_separation_names_pair(self, corpus):
        with pytest.raises(errors.SeparationRequired) as info:
            require_separation(corpus["v"])
        assert info.value.pair == (1, 2)
        assert "f(X1)" in str(info.value) and "f(X2)" in str(info.value)

    def test_d_check(self, corpus):
        require_D_in_Xtilde(corpus["e2"])

    def test_gated_operations(self, corpus):
        v = corpus["v"]
        with pytest.raises(errors.HypothesisViolation):
            box_dimension_estimate(v, 5)
        with pytest.raises(errors.HypothesisViolation):
            entropy_estimate(v, F(1, 10), 5)
        with pytest.raises(errors.HypothesisViolation):
            spanning_set(v, 3, F(1, 10))
        with pytest.raises(errors.HypothesisViolation):
            find_basic_pieces(v)


class TestBasicPieces:
    def test_e2(self, corpus):
        rep = find_basic_pieces(corpus["e2"], seeds=[F(1, 4), F(9, 16)])
        assert rep.N1 == 1 and rep.N2 == 0
        assert rep.periodic_orbits[0].orbit == (F(1, 5), F(3, 5))

    def test_e1(self, corpus):
        rep = find_basic_pieces(corpus["e1"], seeds=[F(1, 3)])
        assert [p.orbit for p in rep.periodic_orbits] == [(F(0),)]

    def test_r1_default_seeds(self, corpus):
        rep = find_basic_pieces(corpus["r1"])
        assert rep.N1 == 1 and rep.N2 == 0
        assert set(rep.periodic_orbits[0].orbit) == {F(1, 15), F(11, 15)}

    def test_t3_two_pieces(self, corpus):
        rep = find_basic_pieces(corpus["t3"])
        assert sorted(p.period for p in rep.periodic_orbits) == [1, 2]
        assert rep.complete

    def test_skipped_seeds(self, corpus):
        rep = find_basic_pieces(corpus["e2"], seeds=[F(0), F(1, 4)])
        assert [s for s, _ in rep.skipped] == [F(0)]
        assert rep.N1 == 1

    def test_default_seeds_are_midpoints(self, corpus):
        assert set(default_seeds(corpus["e2"], 1)) == {F(5, 8), F(1, 4)}

    def test_atoms_on_piece(self, corpus):
        e2 = find_basic_pieces(corpus["e2"], seeds=[F(1, 4)]).periodic_orbits[0]
        assert atoms_on_piece(corpus["e2"], e2, 5) == 2
        assert atoms_on_piece(corpus["e2"], e2, 1) == 2
        e1 = find_basic_pieces(corpus["e1"], seeds=[F(1, 3)]).periodic_orbits[0]
        assert atoms_on_piece(corpus["e1"], e1, 3) == 1

    @pytest.mark.parametrize("name", ["e1", "e2", "r1", "r2", "t3"])
    def test_periodic_atoms_equal_period(self, separated, name):
        m = separated[name]
        rep = find_basic_pieces(m)
        for p in rep.periodic_orbits:
            assert atoms_on_piece(m, p, 30) == p.period
            assert check_pseudo_invariant(m, p.orbit)

    def test_cantor_candidate_structure(self, corpus):
        # exercise the Cantor branch on a synthetic candidate
        atoms = generations(corpus["e2"], 4)[-1]
        cand = CantorCandidate(F(1, 4), 1, tuple(atoms))
        assert cand.cover_depth == 4
        assert atoms_on_piece(corpus["e2"], cand, 4) == 2


class TestSumFormula:
    @pytest.mark.parametrize("name", ["e1", "e2", "r1", "r2", "t3"])
    def test_holds(self, separated, name):
        m = separated[name]
        rep = find_basic_pieces(m)
        check = sum_formula(m, rep, 20)
        assert check.holds
        assert check.stable_from <= 20

    def test_t3_rows(self, separated):
        m = separated["t3"]
        check = sum_formula(m, find_basic_pieces(m), 10)
        assert check.stable_from == 1
        assert all(r.per_piece == (1, 2) or r.per_piece == (2, 1) for r in check.rows)


class TestDimension:
    def test_e2_d40(self, corpus):
        est = box_dimension_estimate(corpus["e2"], 40)
        row = est.row(40)
        assert row.atom_count == 2 and row.epsilon == F(1, 2**40)
        assert row.d == pytest.approx(1 / 40, abs=1e-12)

    def test_e1_zero(self, corpus):
        assert box_dimension_estimate(corpus["e1"], 10).row(10).d == 0

    def test_decreasing_tail(self, separated):
        for m in separated.values():
            est = box_dimension_estimate(m, 40)
            if est.row(20).d:
                assert est.row(40).d < est.row(20).d

    @given(separated_maps())
    @settings(max_examples=25, deadline=None)
    def test_atoms_witness_scale(self, m):
        est = box_dimension_estimate(m, 12)
        assert all(r.max_diam <= r.epsilon for r in est.rows)


class TestEntropy:
    def test_e2(self, corpus):
        est = entropy_estimate(corpus["e2"], F(1, 10), 100)
        assert est.n0 == 2
        row = est.row(100)
        assert row.r_upper == 2
        assert row.rate == pytest.approx(math.log(2) / 100, abs=1e-12)

    def test_e1(self, corpus):
        est = entropy_estimate(corpus["e1"], F(1, 3), 20)
        assert all(r.r_upper == 1 and r.rate == 0 for r in est.rows)

    def test_epsilon_too_large(self, corpus):
        assert min_cut_gap(corpus["t3"]) == F(1, 3)
        with pytest.raises(errors.EpsilonTooLarge):
            entropy_estimate(corpus["t3"], F(1, 3), 5)
        with pytest.raises(errors.EpsilonTooLarge):
            entropy_estimate(corpus["e2"], F(0), 5)

    def test_bound_rows(self, separated):
        for m in separated.values():
            est = entropy_estimate(m, F(1, 10), 60)
            for r in est.rows:
                assert r.r_upper <= r.affine_bound
                assert r.rate <= math.log(r.affine_bound) / r.n


class TestSpanning:
    def test_e2(self, corpus):
        sp = spanning_set(corpus["e2"], 3, F(1, 10))
        assert len(sp) == 2

    def test_e1(self, corpus):
        sp = spanning_set(corpus["e1"], 5, F(1, 4))
        assert len(sp) == 1

    @pytest.mark.parametrize("name", ["e2", "r2", "t3"])
    def test_shadows_cover_points(self, separated, name):
        m = separated[name]
        sp = spanning_set(m, 4, F(1, 20))
        cover = approximate_attractor(m, sp.n0 + 8)
        for iv in cover.intervals:
            for y in (iv.lo, iv.midpoint, iv.hi):
                assert shadowing_witness(m, sp.points, y, sp.n, sp.epsilon) is not None


class TestPseudoInvariance:
    def test_examples(self, corpus):
        assert check_pseudo_invariant(corpus["e2"], {F(1, 5), F(3, 5)})
        res = check_pseudo_invariant(corpus["e2"], {F(1, 5)})
        assert not res and res.witness == (F(1, 5), F(3, 5))
        assert check_pseudo_invariant(corpus["e2"], set())

    def test_cut_points_use_limits(self, corpus):
        assert not check_pseudo_invariant(corpus["e2"], {F(1, 2)})
        # right limit at the cut 1/2 is 1/2 itself
        m = make_map((0, 1), [F(1, 2)], [Branch(F(1, 2), F(0)), Branch(F(1, 2), F(1, 4))])
        assert check_pseudo_invariant(m, {F(1, 2)})
        assert not check_pseudo_invariant(m, {F(1, 2), F(1, 3)})


class TestSweep:
    def test_grid(self):
        ax = parse_grid("delta=51/100:99/100:49")
        vals = ax.values()
        assert len(vals) == 49 and vals[0] == F(51, 100) and vals[-1] == F(99, 100)
        assert parse_grid("lambda=1/2:1/2:1").name == "lam"
        with pytest.raises(ValueError):
            parse_grid("delta=1/2")

    def test_cells_order(self):
        cells = grid_cells({"lam": F(1, 2)}, [parse_grid("delta=3/5:4/5:3")])
        assert [c["delta"] for c in cells] == [F(3, 5), F(7, 10), F(4, 5)]

    def test_invalid_cell(self):
        row = sweep_cell("contracted_rotation", {"lam": F(1, 2), "delta": F(1, 2)}, 1000, 10)
        assert row.classification == "Invalid"

    def test_rotation_cell(self):
        row = sweep_cell("contracted_rotation", {"lam": F(1, 2), "delta": F(7, 10)}, 2000, 20)
        assert row.classification == "Periodic(2)"
        assert set(row.orbit) == {F(1, 15), F(11, 15)}

    def test_parallel_matches_serial(self):
        axes = [parse_grid("delta=3/5:9/10:4")]
        a = parameter_sweep("contracted_rotation", {"lam": F(1, 2)}, axes, 1000, 10)
        b = parameter_sweep("contracted_rotation", {"lam": F(1, 2)}, axes, 1000, 10, workers=2)
        strip = lambda rows: [(r.params, r.classification, r.orbit) for r in rows]
        assert strip(a) == strip(b)

    @given(rotations())
    @settings(max_examples=20, deadline=None)
    def test_rotation_cells_are_periodic_or_undetermined(self, params):
        lam, delta = params
        row = sweep_cell("contracted_rotation", {"lam": lam, "delta": delta}, 3000, 20)
        assert row.classification.startswith("Periodic") or row.classification == "Undetermined"
        if row.orbit:
            m = validate_pcim(contracted_rotation(lam, delta))
            assert check_pseudo_invariant(m, row.orbit)


@given(separated_maps(max_pieces=3))
@settings(max_examples=25, deadline=None)
def test_sum_formula_on_random_maps(m):
    from hypothesis import assume

    from pcim_lab.map_core import check_D_in_Xtilde

    assume(check_D_in_Xtilde(m, 2000))
    rep = find_basic_pieces(m, seed_depth=6, n_max=15)
    assume(rep.complete and not rep.cantor_candidates)
    check = sum_formula(m, rep, 12)
    assert check.holds, [r for r in check.rows if r.n >= check.stable_from and r.atom_count != r.complexity_sum]
    for p in rep.periodic_orbits:
        assert check_pseudo_invariant(m, p.orbit)
