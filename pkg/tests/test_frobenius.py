"""Tests for dg Frobenius algebras, quadratic Lie algebras and the Chern-Simons action."""

from fractions import Fraction

import pytest

from bveff.exceptions import ParseError, ValidationError
from bveff.frobenius import (
    DgFrobeniusAlgebra,
    QuadraticLieAlgebra,
    antisymmetric_tensor,
    build_cs_action,
    builtin_algebra,
    builtin_lie,
    make_abelian,
    make_broken_jacobi,
    make_ce_su2,
    make_degree12,
    make_doubled,
    make_doubled_xy,
    make_minimal,
    make_su_n,
    mu_preset,
    random_degree12,
    random_doubled,
    validate_frobenius,
    validate_quadratic_lie,
)
from bveff.graded import GradedSeries, bv_laplacian, qme_defect, series_bracket

EPS3 = antisymmetric_tensor({(0, 1, 2): Fraction(1)})


class TestValidateFrobenius:
    """Axiom checks on hand-built algebras."""

    def test_ce_su2_is_valid(self):
        report = validate_frobenius(make_ce_su2())
        assert report.ok
        assert not report.warnings

    def test_zero_pairing_is_degenerate(self):
        C = make_ce_su2()
        broken = DgFrobeniusAlgebra(C.labels, C.degrees, {}, C.product, C.differential, C.unit)
        assert "nondegeneracy" in validate_frobenius(broken).axioms()

    def test_d_squared_violation(self):
        # d e1 = e23 plus a spurious d(e23) = e123
        C = make_ce_su2()
        differential = dict(C.differential)
        differential[(0, 4)] = Fraction(1)
        broken = DgFrobeniusAlgebra(C.labels, C.degrees, C.pairing, C.product, differential, C.unit)
        report = validate_frobenius(broken)
        assert "d-squared" in report.axioms()
        witness = next(v.witness for v in report.violations if v.axiom == "d-squared")
        assert witness == (1, 7)

    def test_asymmetric_differential(self):
        C = make_ce_su2()
        differential = dict(C.differential)
        differential[(1, 2)] = Fraction(1)
        broken = DgFrobeniusAlgebra(C.labels, C.degrees, C.pairing, C.product, differential, C.unit)
        assert "differential-skew" in validate_frobenius(broken).axioms()

    def test_betti_warning(self):
        C = make_doubled_xy()
        degenerate = DgFrobeniusAlgebra(C.labels, C.degrees, C.pairing, C.product, {}, C.unit)
        report = validate_frobenius(degenerate)
        assert report.ok
        assert report.warnings


class TestFixtures:
    """Constructors for the example families."""

    def test_minimal_dimension_zero(self):
        C = make_minimal(0, {})
        assert C.degrees == (0, 3)
        assert validate_frobenius(C).ok

    def test_minimal_eps(self):
        C = make_minimal(3, EPS3)
        assert validate_frobenius(C).ok
        assert C.betti == (1, 3, 3, 1)
        degree_one = C.indices_of_degree(1)
        for (i, j, k), v in C.product.items():
            if {i, j, k} <= set(degree_one):
                assert C.product[(j, i, k)] == -v

    def test_minimal_rejects_symmetric_mu(self):
        with pytest.raises(ValidationError, match="antisymmetric"):
            make_minimal(3, {(0, 1, 2): Fraction(1), (1, 0, 2): Fraction(1)})

    def test_degree12_reduces_to_minimal(self):
        assert dict(make_degree12(3, EPS3, {}).product) == dict(make_minimal(3, EPS3).product)
        assert not make_degree12(3, EPS3, {}).differential

    def test_degree12_identity_is_ce_su2(self):
        C = make_degree12(3, EPS3, {(i, i): Fraction(1) for i in range(3)})
        ce = make_ce_su2()
        assert dict(C.pairing) == dict(ce.pairing)
        assert dict(C.product) == dict(ce.product)
        assert dict(C.differential) == dict(ce.differential)

    @pytest.mark.parametrize("rank", [0, 1, 2, 3])
    def test_degree12_rank_nullity(self, rank):
        C = make_degree12(3, EPS3, {(i, i): Fraction(1) for i in range(rank)})
        assert validate_frobenius(C).ok
        assert C.betti[1] == 3 - rank

    def test_degree12_rejects_asymmetric_delta(self):
        with pytest.raises(ValidationError, match="symmetric"):
            make_degree12(2, {}, {(0, 1): Fraction(1)})

    def test_doubled_trivial(self):
        C = make_doubled(1, 0, {}, {})
        assert C.degrees == (0, 3)

    def test_doubled_xy(self):
        C = make_doubled_xy()
        assert [len(C.indices_of_degree(k)) for k in range(4)] == [2, 1, 1, 2]
        assert C.betti == (1, 0, 0, 1)
        odd = C.indices_of_degree(1)
        assert all(not v for (i, j, k), v in C.product.items() if j in odd and k in odd)

    def test_doubled_leibniz_failure(self):
        # x^2 = x with dx = y breaks d(x^2) = 2 x dx
        with pytest.raises(ValidationError):
            make_doubled(2, 1, {(2, 1): Fraction(1)}, {(1, 1, 1): Fraction(1)})

    def test_ce_su2_differential(self):
        C = make_ce_su2()
        D = C.differential_matrix
        assert (D[4, 1], D[5, 2], D[6, 3]) == (1, 1, 1)
        assert C.betti == (1, 0, 0, 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_fixtures_validate(self, seed):
        assert validate_frobenius(random_degree12(seed)).ok
        C = random_doubled(seed, zeros=1, ones=2)
        assert C.betti == (1, 1, 1, 1)

    @pytest.mark.parametrize(
        "spec,betti",
        [
            ("ce-su2", (1, 0, 0, 1)),
            ("minimal:2,zero", (1, 2, 2, 1)),
            ("degree12:3,2", (1, 1, 1, 1)),
            ("degree12:4,2", (1, 2, 2, 1)),
            ("doubled:trivial", (1, 0, 0, 1)),
            ("doubled:chain2", (1, 0, 0, 1)),
        ],
    )
    def test_builtin_algebras(self, spec, betti):
        C = builtin_algebra(spec)
        assert validate_frobenius(C).ok
        assert C.betti == betti

    def test_builtin_unknown(self):
        with pytest.raises(ParseError, match="Unknown built-in"):
            builtin_algebra("torus")
        with pytest.raises(ParseError):
            builtin_algebra("minimal:three")

    def test_mu_preset_four(self):
        mu = mu_preset(4, "eps")
        assert mu[(0, 1, 3)] == 1
        assert mu[(3, 1, 0)] == -1


class TestLie:
    """Quadratic Lie algebras."""

    def test_su2(self):
        g = make_su_n(2)
        assert validate_quadratic_lie(g).ok
        assert g.contraction_norm() == 6
        for a in range(3):
            for b in range(3):
                total = sum(g.f.get((a, c, d), 0) * g.f.get((b, c, d), 0) for c in range(3) for d in range(3))
                assert total == (2 if a == b else 0)

    @pytest.mark.parametrize("N", [3, 4])
    def test_su_n_normalization(self, N):
        g = make_su_n(N)
        assert g.dim == N * N - 1
        assert validate_quadratic_lie(g).ok
        assert g.contraction_norm() == N * (N * N - 1)

    def test_su_1_rejected(self):
        with pytest.raises(ValidationError, match="N >= 2"):
            make_su_n(1)

    def test_abelian(self):
        assert validate_quadratic_lie(make_abelian(4)).ok

    def test_decomposable_four_dimensional_form_is_lie(self):
        f = antisymmetric_tensor({(0, 1, 2): Fraction(1), (0, 1, 3): Fraction(1)})
        g = QuadraticLieAlgebra(4, f)
        assert validate_quadratic_lie(g).ok

    def test_broken_jacobi(self):
        report = validate_quadratic_lie(make_broken_jacobi())
        assert "jacobi" in report.axioms()

    def test_bad_spec(self):
        with pytest.raises(ParseError):
            builtin_lie("so:3")


class TestChernSimonsAction:
    """Quantum master equation for the abstract Chern-Simons action."""

    def test_abelian_has_no_cubic_term(self):
        action = build_cs_action(make_ce_su2(), make_abelian(2))
        assert action.interaction.is_zero()

    def test_ce_su2_qme(self):
        action = build_cs_action(make_ce_su2(), make_su_n(2))
        s = action.action
        assert series_bracket(s, s).is_zero()
        assert bv_laplacian(action.free_part + action.interaction).is_zero()
        assert qme_defect(s).is_zero()

    def test_free_part_qme(self):
        action = build_cs_action(make_ce_su2(), make_su_n(2))
        s0 = GradedSeries.from_polynomial(action.free_part, 1)
        assert qme_defect(s0).is_zero()

    @pytest.mark.parametrize("spec", ["degree12:3,2", "doubled:xy", "minimal:3,eps"])
    def test_fixture_qme(self, spec):
        action = build_cs_action(builtin_algebra(spec), make_su_n(2))
        assert qme_defect(action.action).is_zero()

    def test_su3_qme(self):
        action = build_cs_action(builtin_algebra("doubled:xy"), make_su_n(3))
        assert qme_defect(action.action).is_zero()

    def test_quadratic_sign(self):
        C = make_ce_su2()
        action = build_cs_action(C, make_su_n(2))
        # w^{e1,a} w^{e1,a}: both coordinates even (ghost 0), coefficient 1/2 (-1)^{1+1} d_11
        key = (3, 3)
        assert action.free_part.terms[key] == Fraction(1, 2)

    def test_broken_jacobi_defect(self):
        action = build_cs_action(make_ce_su2(), make_broken_jacobi(), validate=False)
        assert not qme_defect(action.action).is_zero()

    def test_rejects_invalid_input(self):
        with pytest.raises(ValidationError, match="Jacobi|jacobi"):
            build_cs_action(make_ce_su2(), make_broken_jacobi())
        C = make_doubled_xy()
        degenerate = DgFrobeniusAlgebra(C.labels, C.degrees, C.pairing, C.product, {}, C.unit)
        with pytest.raises(ValidationError, match="B0 = B3 = 1"):
            build_cs_action(degenerate, make_su_n(2))
