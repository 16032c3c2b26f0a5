"""Tests for Feynman rules, graph values, the effective action and its operator-form oracle."""

from fractions import Fraction

import pytest
import sympy

from bveff.exceptions import CapExceededError, PreconditionError
from bveff.feynman import (
    Truncation,
    build_phi_lambda,
    cohomology_space,
    deformation_defect,
    deformation_generator,
    deformation_oracle,
    effective_action,
    evaluate_graph,
    evaluate_marked_graph,
    feynman_rules,
    phi_rules,
    propagator_matrix,
    quadratic_terms,
    relaxation_defect,
    wick_oracle,
)
from bveff.frobenius import (
    builtin_algebra,
    cs_terms,
    make_abelian,
    make_ce_su2,
    make_su_n,
    random_degree12,
    random_doubled,
)
from bveff.graded import qme_defect
from bveff.graphs import FeynmanGraph, Mark, enumerate_graphs
from bveff.hodge import (
    Deformation,
    perturb_iota,
    random_deformation,
    random_lambda,
    relax_homotopy,
    strict_induction_data,
)

SU2 = make_su_n(2)
THETA = FeynmanGraph((0, 0), (0, 0), ((0, 1, 3),))
DUMBBELL = FeynmanGraph((0, 0), (1, 1), ((0, 1, 1),))
STAR = FeynmanGraph((0, 2, 2, 2), (0, 0, 0, 0), ((0, 1, 1), (0, 2, 1), (0, 3, 1)))


def _setup(spec: str, g=SU2, seed: int | None = None):
    C = builtin_algebra(spec) if seed is None else random_doubled(seed)
    return C, g, strict_induction_data(C)


class TestRules:
    """Propagator and quadratic forms."""

    @pytest.mark.parametrize("spec", ["ce-su2", "doubled:xy", "degree12:3,2"])
    def test_quadratic_form_reproduces_free_part(self, spec):
        C = builtin_algebra(spec)
        free, _ = cs_terms(C, SU2)
        assert quadratic_terms(C, SU2, C.differential_matrix, 1) == free

    @pytest.mark.parametrize("spec", ["ce-su2", "doubled:xy", "doubled:chain2", "degree12:4,2"])
    def test_propagator_is_graded_symmetric(self, spec):
        C, _, data = _setup(spec)
        G = propagator_matrix(C, data.homotopy).value
        for i in range(C.dim):
            for j in range(C.dim):
                sign = 1 if C.degrees[i] % 2 else -1
                assert G[j, i] == sign * G[i, j]

    def test_ce_su2_propagator_is_minus_identity_on_support(self):
        C, g, data = _setup("ce-su2")
        rules = feynman_rules(C, g, data)
        assert rules.edge
        for Y, entries in rules.edge.items():
            assert entries == ((Y, Fraction(-1)),)

    def test_cohomology_space_ghosts(self):
        C, g, data = _setup("degree12:4,2")
        space = cohomology_space(data, g)
        assert space.size == data.h_dim * g.dim
        assert sorted(set(space.ghosts)) == [-2, -1, 0, 1]


class TestGraphValues:
    """Values of single graphs and the assembled series."""

    def test_theta_on_su2(self):
        C, g, data = _setup("ce-su2")
        value = evaluate_graph(THETA, feynman_rules(C, g, data))
        assert value.terms == {(): Fraction(-36)}

    def test_two_and_three_loop_constants(self):
        C, g, data = _setup("ce-su2")
        w = effective_action(C, g, data, 3, 0)
        assert w.coefficient(2).terms == {(): Fraction(-3)}
        assert w.coefficient(3).terms == {(): Fraction(21, 2)}

    def test_two_loop_constant_su3(self):
        C = make_ce_su2()
        w = effective_action(C, make_su_n(3), strict_induction_data(C), 2, 0)
        assert w.coefficient(2).terms == {(): Fraction(-12)}

    @pytest.mark.parametrize("graph", [DUMBBELL, FeynmanGraph((1,), (1,), ())])
    def test_tadpoles_vanish(self, graph):
        C, g, data = _setup("doubled:xy")
        assert evaluate_graph(graph, feynman_rules(C, g, data)).is_zero()

    def test_tadpole_flag_does_not_change_w(self):
        C, g, data = _setup("doubled:xy")
        assert effective_action(C, g, data, 2, 1, include_tadpoles=True) == effective_action(C, g, data, 2, 1)

    def test_marked_graph_rejected(self):
        C, g, data = _setup("doubled:xy")
        rules = feynman_rules(C, g, data)
        with pytest.raises(PreconditionError, match="marked"):
            evaluate_graph(FeynmanGraph((3,), (0,), (), Mark("leaf", (0,))), rules)
        with pytest.raises(PreconditionError, match="no mark"):
            evaluate_marked_graph(THETA, rules)

    def test_tree_is_w_prod(self):
        C, g, data = _setup("degree12:3,2")
        rules = feynman_rules(C, g, data)
        [(tree, aut)] = enumerate_graphs(0, 3)
        w = effective_action(C, g, data, 0, 3)
        assert aut == 6
        assert w.coefficient(0) == evaluate_graph(tree, rules) * Fraction(1, 6)

    def test_minimal_algebra_has_only_w_prod(self):
        C, g, data = _setup("minimal:3,eps")
        w = effective_action(C, g, data, 2, 4)
        assert w.orders == [0]
        assert {len(m) for m in w.coefficient(0).terms} == {3}

    @pytest.mark.parametrize("spec", ["doubled:xy", "degree12:3,2", "ce-su2"])
    def test_ghost_number_zero(self, spec):
        C, g, data = _setup(spec)
        w = effective_action(C, g, data, 2, 2)
        for k in w.orders:
            assert w.coefficient(k).ghost_numbers() <= {0}

    def test_corrections_depend_on_degree_one_classes_only(self):
        C, g, data = _setup("doubled:xy")
        w = effective_action(C, g, data, 2, 3)
        for k, terms in w.coefficients.items():
            for m in terms:
                if k == 0 and len(m) == 3:
                    continue
                assert all(data.h_degrees[v // g.dim] == 1 for v in m)

    def test_abelian_coefficients_give_zero(self):
        C = builtin_algebra("doubled:xy")
        data = strict_induction_data(C)
        g = make_abelian(2)
        assert effective_action(C, g, data, 2, 2).is_zero()
        assert wick_oracle(C, g, data, 2, 2).is_zero()

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("BV_MAX_LOOPS", "1")
        C, g, data = _setup("ce-su2")
        with pytest.raises(CapExceededError):
            effective_action(C, g, data, 2, 0)


class TestOracle:
    """Graph sum against the operator form of the fiber integral."""

    @pytest.mark.parametrize(
        "spec,loops,leaves",
        [
            ("ce-su2", 2, 0),
            ("doubled:xy", 2, 2),
            ("doubled:chain2", 1, 3),
            ("degree12:3,2", 1, 3),
            ("minimal:3,eps", 1, 3),
        ],
    )
    def test_agrees_with_graph_sum(self, spec, loops, leaves):
        C, g, data = _setup(spec)
        assert wick_oracle(C, g, data, loops, leaves) == effective_action(C, g, data, loops, leaves)

    @pytest.mark.parametrize("seed", range(10))
    def test_seeded_doubled_algebras(self, seed):
        C, g, data = _setup("", seed=seed)
        assert wick_oracle(C, g, data, 2, 1) == effective_action(C, g, data, 2, 1)

    @pytest.mark.parametrize("seed", range(10))
    def test_seeded_degree12_algebras(self, seed):
        C = random_degree12(seed)
        data = strict_induction_data(C)
        assert wick_oracle(C, SU2, data, 1, 3) == effective_action(C, SU2, data, 1, 3)

    def test_perturbed_iota(self):
        C = builtin_algebra("doubled:xy")
        data = strict_induction_data(C, iota=perturb_iota(C, strict_induction_data(C), seed=2))
        assert wick_oracle(C, SU2, data, 1, 3) == effective_action(C, SU2, data, 1, 3)

    def test_relaxed_homotopy(self):
        C, g, data = _setup("doubled:xy")
        relaxed = relax_homotopy(data, random_lambda(C, 4))
        assert wick_oracle(C, g, relaxed, 2, 1) == effective_action(C, g, relaxed, 2, 1)

    def test_three_loop_su2(self):
        C, g, data = _setup("ce-su2")
        assert wick_oracle(C, g, data, 3, 0) == effective_action(C, g, data, 3, 0)


class TestTruncation:
    def test_weights(self):
        t = Truncation(2, 3)
        assert t.max_weight == 5
        assert t.admits(1, 3)
        assert not t.admits(1, 4)
        assert not t.admits(2, 1)
        assert Truncation(2, 3, leaf_bound=False).admits(0, 5)

    def test_tree_orders(self):
        t = Truncation(1, 3)
        assert t.admits(-1, 3)
        assert not t.admits(-1, 4)


class TestMasterEquation:
    """W satisfies the quantum master equation on cohomology."""

    @pytest.mark.parametrize("spec,loops,leaves", [("doubled:xy", 2, 1), ("degree12:3,2", 1, 1), ("ce-su2", 2, 1)])
    def test_qme(self, spec, loops, leaves):
        C, g, data = _setup(spec)
        w = effective_action(C, g, data, loops, leaves + 2)
        assert qme_defect(w).up_to_degree(leaves).is_zero()


class TestDeformationGenerator:
    """R' from marked graphs and from the operator form."""

    def test_zero_deformation(self):
        C, g, data = _setup("", seed=0)
        assert deformation_generator(C, g, data, Deformation("I"), 1, 2).is_zero()
        assert deformation_generator(C, g, data, Deformation("II"), 1, 2).is_zero()

    @pytest.mark.parametrize("kind", ["I", "II"])
    def test_vanishes_without_degree_one_cohomology(self, kind):
        C, g, data = _setup("ce-su2")
        r = deformation_generator(C, g, data, random_deformation(data, kind, 3), 2, 2)
        assert r.is_zero()

    @pytest.mark.parametrize("kind", ["I", "II"])
    @pytest.mark.parametrize("seed", range(2))
    def test_oracle_agrees(self, seed, kind):
        C, g, data = _setup("", seed=seed)
        deformation = random_deformation(data, kind, 5)
        graphs = deformation_generator(C, g, data, deformation, 1, 2)
        assert deformation_oracle(C, g, data, deformation, 1, 2) == graphs

    @pytest.mark.parametrize("kind", ["I", "II"])
    def test_ghost_number(self, kind):
        C, g, data = _setup("", seed=0)
        r = deformation_generator(C, g, data, random_deformation(data, kind, 7), 1, 3)
        for k in r.orders:
            assert r.coefficient(k).ghost_numbers() <= {-1}

    @pytest.mark.parametrize("kind", ["I", "II"])
    @pytest.mark.parametrize("source", ["doubled:xy", 0, 1, 2, 3, 4])
    def test_w_moves_by_canonical_transformation(self, source, kind):
        if isinstance(source, str):
            C, g, data = _setup(source)
        else:
            C, g, data = _setup("", seed=source)
        deformation = random_deformation(data, kind, 9)
        assert deformation_defect(C, g, data, deformation, 1, 2).is_zero()

    def test_two_loop_covariance(self):
        C, g, data = _setup("", seed=2)
        deformation = random_deformation(data, "I", 9)
        assert deformation_defect(C, g, data, deformation, 2, 2).is_zero()

    def test_relaxed_data_rejected(self):
        C, g, data = _setup("doubled:xy")
        relaxed = relax_homotopy(data, random_lambda(C, 1))
        with pytest.raises(PreconditionError):
            deformation_generator(C, g, relaxed, Deformation("I"), 1, 1)


class TestRelaxedHomotopy:
    """Phi_Lambda and the relaxed/strict identity."""

    def test_zero_lambda(self):
        C, g, data = _setup("doubled:xy")
        assert build_phi_lambda(C, g, data, sympy.zeros(C.dim, C.dim), 2, 1).is_zero()

    def test_three_relaxed_edges_at_a_vertex_vanish(self):
        C, g, _ = _setup("doubled:xy")
        for seed in range(3):
            rules = phi_rules(C, g, random_lambda(C, seed))
            assert evaluate_graph(STAR, rules).is_zero()

    @pytest.mark.parametrize("seed", range(2))
    def test_identity(self, seed):
        C, g, data = _setup("doubled:xy")
        assert relaxation_defect(C, g, data, random_lambda(C, seed), 2, 1).is_zero()
