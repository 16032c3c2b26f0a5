"""Tests for invariant extraction, the one-loop supertrace and Lie graph weights."""

import itertools
import random
from fractions import Fraction

import pytest

from bveff.exceptions import PreconditionError, ResidualTermError
from bveff.feynman import deformation_generator, effective_action
from bveff.frobenius import builtin_algebra, field_index, make_su_n, random_doubled
from bveff.graded import GradedSeries
from bveff.graphs import FeynmanGraph
from bveff.hodge import perturb_iota, random_deformation, random_lambda, relax_homotopy, strict_induction_data
from bveff.invariants import (
    check_r_ansatz,
    check_w_ansatz,
    classes_of_degree,
    compute_invariants,
    darboux_partner,
    eliminated_mc_point,
    equivariance_defect,
    evaluate_at,
    extract_constant_invariant,
    extract_linfty,
    homotopy_jacobi_defect,
    lie_graph_value,
    lie_weight_series,
    maurer_cartan_defect,
    maurer_cartan_samples,
    mc_invariance_check,
    one_loop_supertrace,
    relaxed_series,
    relaxed_two_loop,
    su2_color_count,
    su_n_reference,
    vector_field,
    w_prod,
)
from bveff.rational import to_fraction

SU2 = make_su_n(2)
THETA = FeynmanGraph((0, 0), (0, 0), ((0, 1, 3),))
DUMBBELL = FeynmanGraph((0, 0), (1, 1), ((0, 1, 1),))
K4 = FeynmanGraph((0, 0, 0, 0), (0, 0, 0, 0), tuple((u, v, 1) for u in range(4) for v in range(u + 1, 4)))
NECKLACE = FeynmanGraph((0, 0, 0, 0), (0, 0, 0, 0), ((0, 1, 2), (0, 3, 1), (1, 2, 1), (2, 3, 2)))


def _strict(spec: str):
    C = builtin_algebra(spec)
    return C, strict_induction_data(C)


class TestConstantInvariant:
    """F(hbar) for B1 = 0."""

    def test_su2(self):
        C, data = _strict("ce-su2")
        W = effective_action(C, SU2, data, 3, 3)
        assert extract_constant_invariant(W, data) == {2: Fraction(-3), 3: Fraction(21, 2)}

    def test_su2_four_loops(self):
        C, data = _strict("ce-su2")
        W = effective_action(C, SU2, data, 4, 0)
        assert extract_constant_invariant(W, data)[4] == Fraction(-69)

    def test_reference_series(self):
        assert su_n_reference(2, 4) == {2: Fraction(-3), 3: Fraction(21, 2), 4: Fraction(-69)}
        assert su_n_reference(3, 3) == {2: Fraction(-12), 3: Fraction(63)}

    def test_requires_b1_zero(self):
        C, data = _strict("degree12:3,2")
        W = effective_action(C, SU2, data, 1, 1)
        with pytest.raises(PreconditionError, match="B1 = 0"):
            extract_constant_invariant(W, data)

    def test_residual_term_detected(self):
        C, data = _strict("ce-su2")
        W = effective_action(C, SU2, data, 2, 0)
        broken = W + GradedSeries(W.space, 2, {1: {(0, 1): Fraction(1)}})
        with pytest.raises(ResidualTermError):
            extract_constant_invariant(broken, data)

    @pytest.mark.parametrize("spec", ["ce-su2", "doubled:xy"])
    def test_w_prod_matches_tree_part(self, spec):
        C, data = _strict(spec)
        W = effective_action(C, SU2, data, 2, 3)
        prod = w_prod(C, SU2, data)
        assert W.coefficient(0) == prod
        assert extract_constant_invariant(W, data, prod) == extract_constant_invariant(W, data)

    def test_altered_cubic_term_detected(self):
        C, data = _strict("doubled:xy")
        W = effective_action(C, SU2, data, 2, 3)
        m, c = next(iter(W.coefficient(0).terms.items()))
        broken = W + GradedSeries(W.space, 2, {0: {m: c}})
        # shape alone is fine
        extract_constant_invariant(broken, data)
        with pytest.raises(ResidualTermError, match="W_prod"):
            extract_constant_invariant(broken, data, w_prod(C, SU2, data))

    def test_report_checks_w_prod(self):
        C, data = _strict("doubled:xy")
        _, report = compute_invariants(C, SU2, data, 2, 3)
        assert report.F_series == extract_constant_invariant(effective_action(C, SU2, data, 2, 3), data)

    def test_report(self):
        C, data = _strict("ce-su2")
        _, report = compute_invariants(C, SU2, data, 2, 0)
        assert report.F_series == {2: Fraction(-3)}
        assert report.F1_poly is None


class TestRelaxedTwoLoop:
    """dim(g) A^(1) + B^(2) does not see Lambda."""

    def test_strict_data(self):
        C, data = _strict("doubled:xy")
        W = effective_action(C, SU2, data, 2, 3)
        A, _ = relaxed_series(W, data)
        assert A[1] == 0
        assert relaxed_two_loop(W, SU2.dim, data) == extract_constant_invariant(W, data)[2]

    @pytest.mark.parametrize("seed", range(2))
    @pytest.mark.parametrize("spec,N", [("doubled:xy", 2), ("ce-su2", 3)])
    def test_relaxed_data(self, spec, N, seed):
        g = make_su_n(N)
        C, data = _strict(spec)
        strict = extract_constant_invariant(effective_action(C, g, data, 2, 3), data)[2]
        relaxed = relax_homotopy(data, random_lambda(C, seed))
        W_hat = effective_action(C, g, relaxed, 2, 3)
        assert relaxed_two_loop(W_hat, g.dim, relaxed) == strict

    def test_relaxed_su3_matches_closed_form(self):
        g = make_su_n(3)
        C, data = _strict("ce-su2")
        relaxed = relax_homotopy(data, random_lambda(C, 4))
        W_hat = effective_action(C, g, relaxed, 2, 3)
        assert relaxed_two_loop(W_hat, g.dim, relaxed) == su_n_reference(3, 2)[2] == Fraction(-12)

    def test_needs_two_loops(self):
        C, data = _strict("doubled:xy")
        with pytest.raises(PreconditionError):
            relaxed_two_loop(effective_action(C, SU2, data, 1, 3), SU2.dim, data)


class TestLieGraphs:
    """Lie weights and signed 3-edge-colorings of vacuum graphs."""

    def test_theta(self):
        assert lie_graph_value(THETA, SU2) == 6
        assert su2_color_count(THETA) == 6
        assert lie_graph_value(THETA, make_su_n(3)) == 24

    def test_dumbbell_vanishes(self):
        assert lie_graph_value(DUMBBELL, SU2) == 0
        assert lie_graph_value(DUMBBELL, make_su_n(3)) == 0

    def test_three_loop_colorings(self):
        assert abs(su2_color_count(K4)) == 6
        assert abs(su2_color_count(NECKLACE)) == 12

    def test_color_count_matches_su2_weight(self):
        for graph in (THETA, K4, NECKLACE):
            assert abs(su2_color_count(graph)) == abs(lie_graph_value(graph, SU2))

    def test_preconditions(self):
        with pytest.raises(PreconditionError, match="tadpole"):
            su2_color_count(DUMBBELL)
        with pytest.raises(PreconditionError, match="leaves"):
            lie_graph_value(FeynmanGraph((3,), (0,), ()), SU2)

    @pytest.mark.parametrize("N,loops", [(2, 4), (3, 3)])
    def test_coloring_identity(self, N, loops):
        assert lie_weight_series(make_su_n(N), loops) == su_n_reference(N, loops)


class TestOneLoop:
    """Supertrace formula in the formal case."""

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_wheel_sum(self, seed):
        C = random_doubled(seed)
        data = strict_induction_data(C)
        W = effective_action(C, SU2, data, 1, 4)
        assert one_loop_supertrace(C, SU2, data, 4) == W.coefficient(1)

    def test_degree12(self):
        C, data = _strict("degree12:3,2")
        W = effective_action(C, SU2, data, 1, 3)
        assert one_loop_supertrace(C, SU2, data, 3) == W.coefficient(1)

    def test_zero_at_origin(self):
        C = random_doubled(0)
        data = strict_induction_data(C)
        assert evaluate_at(one_loop_supertrace(C, SU2, data, 4), {}) == 0

    def test_non_formal_rejected(self):
        C, data = _strict("degree12:3,1")
        with pytest.raises(PreconditionError, match="multiplicative"):
            one_loop_supertrace(C, SU2, data, 2)


def _commutes(point, data, g=SU2) -> bool:
    slots = [[point.get(field_index(p, a, g.dim), Fraction(0)) for a in range(g.dim)] for p in classes_of_degree(data, 1)]
    for x, y in itertools.combinations(slots, 2):
        bracket: dict[int, Fraction] = {}
        for a, b in itertools.product(range(g.dim), repeat=2):
            for c, coeff in g.bracket_coefficients(a, b).items():
                bracket[c] = bracket.get(c, Fraction(0)) + x[a] * y[b] * coeff
        if any(bracket.values()):
            return False
    return True


class TestMaurerCartan:
    """Sampling MC points and comparing one-loop parts on them."""

    def test_samples_lie_on_mc(self):
        C, data = _strict("minimal:3,eps")
        points = maurer_cartan_samples(C, SU2, data, 6, seed=1)
        assert len(points) == 6
        assert mc_invariance_check(C, SU2, data, data, 2, points).ok

    @pytest.mark.parametrize("seed", range(3))
    def test_samples_leave_commuting_locus(self, seed):
        C, data = _strict("minimal:3,zero")
        points = maurer_cartan_samples(C, SU2, data, 3, seed=seed)
        assert not _commutes(points[2], data)

    @pytest.mark.parametrize("seed", range(3))
    def test_eliminated_points_are_mc(self, seed):
        C, data = _strict("minimal:4,eps")
        points = maurer_cartan_samples(C, SU2, data, 9, seed=seed)
        assert len(points) == 9
        assert all(maurer_cartan_defect(C, SU2, data, p) == {} for p in points)

    def test_eliminated_point_is_mc(self):
        C, data = _strict("minimal:4,eps")
        point = eliminated_mc_point(C, SU2, data, random.Random(5))
        assert point is not None
        assert maurer_cartan_defect(C, SU2, data, point) == {}

    def test_two_iota_choices_agree(self):
        C = random_doubled(1)
        data = strict_induction_data(C)
        other = strict_induction_data(C, iota=perturb_iota(C, data, seed=4))
        points = maurer_cartan_samples(C, SU2, data, 4, seed=2)
        report = mc_invariance_check(C, SU2, data, other, 4, points)
        assert report.ok
        assert report.polynomial_equal

    @pytest.mark.parametrize("seed", range(2))
    def test_two_dimensional_h1(self, seed):
        C = random_doubled(seed, zeros=1, ones=3)
        data = strict_induction_data(C)
        assert data.betti == (1, 2, 2, 1)
        other = strict_induction_data(C, seed=7, iota=perturb_iota(C, data, seed=seed))
        points = maurer_cartan_samples(C, SU2, data, 20, seed=seed)
        report = mc_invariance_check(C, SU2, data, other, 3, points)
        assert len(report.values) == 20
        assert report.ok
        assert report.polynomial_equal

    def test_off_mc_point_rejected(self):
        C, data = _strict("minimal:3,eps")
        ones = classes_of_degree(data, 1)
        point = {field_index(ones[0], 0, SU2.dim): Fraction(1), field_index(ones[1], 1, SU2.dim): Fraction(1)}
        with pytest.raises(PreconditionError, match="Maurer-Cartan"):
            mc_invariance_check(C, SU2, data, data, 2, [point])


class TestAnsatz:
    """Structure of W and R'."""

    @pytest.mark.parametrize("spec", ["degree12:3,2", "doubled:xy"])
    def test_w_ansatz(self, spec):
        C, data = _strict(spec)
        W = effective_action(C, SU2, data, 2, 3)
        report = check_w_ansatz(W, data, SU2)
        assert report.ok, report.violations

    @pytest.mark.parametrize("kind", ["I", "II"])
    def test_r_ansatz_and_equivariance(self, kind):
        C = random_doubled(0)
        data = strict_induction_data(C)
        R = deformation_generator(C, SU2, data, random_deformation(data, kind, 2), 1, 3)
        report = check_r_ansatz(R, data, SU2)
        assert report.ok, report.violations
        assert equivariance_defect(vector_field(R, data, SU2), data, SU2) == {}


class TestLinfty:
    """Tree-level operations on cohomology."""

    def test_no_unary_operation(self):
        C, data = _strict("degree12:4,2")
        assert extract_linfty(effective_action(C, SU2, data, 0, 3), data, 1) == {}

    def test_binary_operation_is_induced_product(self):
        C, data = _strict("minimal:3,eps")
        table = extract_linfty(effective_action(C, SU2, data, 0, 3), data, 2)
        ones = classes_of_degree(data, 1)
        variables = [(p, a) for p in ones for a in range(SU2.dim)]
        checked = 0
        for (p, a), (q, b), (r, c) in itertools.permutations(variables, 3):
            X = tuple(sorted((field_index(q, b, SU2.dim), field_index(r, c, SU2.dim))))
            iota = data.iota.value
            m = C.pair(iota[:, p], C.multiply(iota[:, q], iota[:, r]))
            partner = darboux_partner(data, p)
            norm = to_fraction(data.induced_pairing[p, partner])
            expected = to_fraction(m) * SU2.f.get((a, b, c), Fraction(0)) / norm
            assert table.get(X, {}).get(field_index(partner, a, SU2.dim), Fraction(0)) == expected
            checked += bool(expected)
        assert checked

    def test_formal_data_has_no_higher_operations(self):
        C = random_doubled(2)
        data = strict_induction_data(C)
        W = effective_action(C, SU2, data, 0, 4)
        assert extract_linfty(W, data, 3) == {}

    @pytest.mark.parametrize("spec", ["minimal:3,eps", "degree12:4,2", "degree12:3,1"])
    def test_homotopy_jacobi(self, spec):
        C, data = _strict(spec)
        assert homotopy_jacobi_defect(effective_action(C, SU2, data, 0, 4)).is_zero()

    def test_arity_checked(self):
        C, data = _strict("minimal:3,eps")
        with pytest.raises(PreconditionError):
            extract_linfty(effective_action(C, SU2, data, 0, 3), data, 0)

    def test_foreign_cohomology_rejected(self):
        C, data = _strict("minimal:3,eps")
        _, other = _strict("minimal:4,eps")
        with pytest.raises(PreconditionError, match="cohomology classes"):
            extract_linfty(effective_action(C, SU2, data, 0, 3), other, 2)
