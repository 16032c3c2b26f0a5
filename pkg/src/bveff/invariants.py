"""Invariants extracted from the effective action: F(hbar), the one-loop supertrace, Lie graph weights."""

import itertools
import random
from collections.abc import Mapping, Sequence
from fractions import Fraction
from typing import NamedTuple

import sympy

from .exceptions import PreconditionError, ResidualTermError
from .feynman import cohomology_space, effective_action, evaluate_graph, feynman_rules
from .frobenius import (
    DgFrobeniusAlgebra,
    QuadraticLieAlgebra,
    ValidationReport,
    antisymmetric_tensor,
    field_index,
)
from .graded import (
    Coeff,
    GradedPolynomial,
    GradedSeries,
    Monomial,
    Terms,
    add_term,
    derive_terms,
    mul_terms,
    series_bracket,
)
from .graphs import FeynmanGraph, enumerate_graphs
from .hodge import InductionData
from .rational import random_rational, sympy_matrix, to_fraction

type Point = dict[int, Fraction]

SU_N_COEFFICIENTS = {
    2: (Fraction(-1, 2), 3, 1),
    3: (Fraction(7, 8), 4, 2),
    4: (Fraction(-23, 8), 5, 3),
}


class InvariantReport(NamedTuple):
    F_series: dict[int, Fraction]
    A_series: dict[int, Fraction]
    B_series: dict[int, Fraction]
    F1_poly: GradedPolynomial | None
    mc_samples: list[tuple[Point, Fraction]]


def classes_of_degree(data: InductionData, k: int) -> list[int]:
    return [p for p, d in enumerate(data.h_degrees) if d == k]


def _variables_of_degree(data: InductionData, g: QuadraticLieAlgebra, degrees: set[int]) -> set[int]:
    return {field_index(p, a, g.dim) for p, d in enumerate(data.h_degrees) if d in degrees for a in range(g.dim)}


# ---------------------------------------------------------------------------
# B1 = 0


def _require_no_degree_one(data: InductionData) -> None:
    if data.betti[1]:
        raise PreconditionError(f"Constant invariants need B1 = 0, got B1 = {data.betti[1]}")


def w_prod(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData) -> GradedPolynomial:
    """S_int(iota(alpha)), the value of the single-vertex tree with three leaves over |Aut|."""
    [(tree, aut)] = enumerate_graphs(0, 3)
    return evaluate_graph(tree, feynman_rules(C, g, data)) * Fraction(1, aut)


def extract_constant_invariant(
    W: GradedSeries, data: InductionData, prod: GradedPolynomial | None = None
) -> dict[int, Fraction]:
    """F^(l) for l >= 2, after checking that W - F is the cubic W_prod term.

    When ``prod`` is given the hbar^0 part of W must equal it exactly; leave it out for W
    truncated below three leaves.
    """
    _require_no_degree_one(data)
    for k, terms in W.coefficients.items():
        for m in terms:
            if not m or (k == 0 and len(m) == 3):
                continue
            raise ResidualTermError(f"W has a term {m} at hbar^{k} outside W_prod + F(hbar)")
    if W.coefficient(0).terms.get(()):
        raise ResidualTermError("W has a constant term at hbar^0")
    if prod is not None and W.coefficient(0) != prod:
        raise ResidualTermError("The hbar^0 part of W differs from W_prod")
    return {k: to_fraction(W.coefficient(k).terms.get((), Fraction(0))) for k in range(2, W.truncation_order + 1)}


def su_n_reference(N: int, max_loops: int) -> dict[int, Fraction]:
    """Closed-form F^(l) for the su(2) Chevalley-Eilenberg algebra with su(N) coefficients, l <= 4."""
    return {
        k: c * (N**a - N**b)
        for k, (c, a, b) in SU_N_COEFFICIENTS.items()
        if k <= max_loops
    }


def relaxed_series(W_hat: GradedSeries, data: InductionData) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """A^(l), B^(l) with W_hat = W_prod + sum_l hbar^l (A^(l) W_prod + B^(l)) on terms of degree <= 3."""
    _require_no_degree_one(data)
    prod = {m: c for m, c in W_hat.coefficient(0).terms.items() if len(m) == 3}
    A: dict[int, Fraction] = {}
    B: dict[int, Fraction] = {}
    for k in range(1, W_hat.truncation_order + 1):
        terms = W_hat.coefficient(k).terms
        cubic = {m: c for m, c in terms.items() if len(m) == 3}
        stray = [m for m in terms if len(m) in (1, 2)]
        if stray:
            raise ResidualTermError(f"Relaxed W has a term {stray[0]} at hbar^{k} outside the ansatz")
        ratio = Fraction(0)
        if cubic:
            if not prod:
                raise ResidualTermError(f"Cubic terms at hbar^{k} but W_prod vanishes")
            m0 = next(iter(prod))
            ratio = to_fraction(cubic.get(m0, Fraction(0))) / to_fraction(prod[m0])
        proportional = set(cubic) <= set(prod) and all(
            to_fraction(cubic.get(m, Fraction(0))) == ratio * to_fraction(c) for m, c in prod.items()
        )
        if not proportional:
            raise ResidualTermError(f"Cubic terms at hbar^{k} are not proportional to W_prod")
        A[k] = ratio
        B[k] = to_fraction(terms.get((), Fraction(0)))
    return A, B


def relaxed_two_loop(W_hat: GradedSeries, dim_g: int, data: InductionData) -> Fraction:
    """dim(g) A^(1) + B^(2), which equals the strict F^(2)."""
    if W_hat.truncation_order < 2:
        raise PreconditionError("The two-loop invariant needs W through hbar^2")
    A, B = relaxed_series(W_hat, data)
    return dim_g * A[1] + B[2]


# ---------------------------------------------------------------------------
# formal case: one-loop supertrace and Maurer-Cartan points

type PolyMatrix = dict[int, dict[int, Terms]]


def _poly_matmul(a: PolyMatrix, b: PolyMatrix, parity: Sequence[int], max_degree: int) -> PolyMatrix:
    out: PolyMatrix = {}
    for i, row in a.items():
        target: dict[int, Terms] = {}
        for k, x in row.items():
            for j, y in b.get(k, {}).items():
                entry = target.setdefault(j, {})
                for m, c in mul_terms(x, y, parity).items():
                    if len(m) <= max_degree:
                        add_term(entry, m, c)
        cleaned = {j: t for j, t in target.items() if t}
        if cleaned:
            out[i] = cleaned
    return out


def _iota_column(data: InductionData, p: int) -> sympy.Matrix:
    return data.iota.value[:, p]


def check_formal(C: DgFrobeniusAlgebra, data: InductionData) -> None:
    """K(iota(a) iota(b)) = 0 on degree-one classes."""
    K = data.homotopy.value
    ones = classes_of_degree(data, 1)
    for p, q in itertools.combinations_with_replacement(ones, 2):
        product = C.multiply(_iota_column(data, p), _iota_column(data, q))
        if any(x != 0 for x in K * product):
            raise PreconditionError(
                f"iota is not multiplicative on H^1: K(iota({data.labels[p]}) iota({data.labels[q]})) != 0"
            )


def _adjoint_matrix(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData) -> PolyMatrix:
    """l(iota(alpha_(1)), -) on C (x) g with entries linear in alpha_(1)."""
    ad: PolyMatrix = {}
    for p in classes_of_degree(data, 1):
        column = _iota_column(data, p)
        for J in range(C.dim):
            product = C.multiply(column, C.basis_vector(J))
            for K in range(C.dim):
                if product[K, 0] == 0:
                    continue
                value = to_fraction(product[K, 0])
                for a, b in itertools.product(range(g.dim), repeat=2):
                    for c, coeff in g.bracket_coefficients(a, b).items():
                        row = ad.setdefault(field_index(K, c, g.dim), {})
                        add_term(row.setdefault(field_index(J, b, g.dim), {}), (field_index(p, a, g.dim),), value * coeff)
    return ad


def one_loop_supertrace(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, order: int
) -> GradedPolynomial:
    """1/2 Str log(1 + K l(iota(alpha_(1)), -)) through degree ``order`` in alpha_(1).

    The supertrace weighs the C-degree of each basis element; the homotopy is whichever
    one the data carries.
    """
    check_formal(C, data)
    space = cohomology_space(data, g)
    parity = space.parity
    K = data.homotopy.value
    ad = _adjoint_matrix(C, g, data)
    k_ad: PolyMatrix = {}
    for I in range(C.dim):
        for L in range(C.dim):
            if K[I, L] == 0:
                continue
            factor = to_fraction(K[I, L])
            for a in range(g.dim):
                for col, terms in ad.get(field_index(L, a, g.dim), {}).items():
                    entry = k_ad.setdefault(field_index(I, a, g.dim), {}).setdefault(col, {})
                    for m, c in terms.items():
                        add_term(entry, m, c * factor)
    out: Terms = {}
    power: PolyMatrix = {i: {i: {(): Fraction(1)}} for i in range(C.dim * g.dim)}
    for k in range(1, order + 1):
        power = _poly_matmul(power, k_ad, parity, order)
        if not power:
            break
        weight = Fraction(1 if k % 2 else -1, 2 * k)
        for i, row in power.items():
            diagonal = row.get(i)
            if not diagonal:
                continue
            sign = -1 if C.degrees[i // g.dim] % 2 else 1
            for m, c in diagonal.items():
                add_term(out, m, c * weight * sign)
    return GradedPolynomial(space, out)


def mc_structure(C: DgFrobeniusAlgebra, data: InductionData) -> dict[tuple[int, int, int], Fraction]:
    """mu_ijk = pi(iota_i, iota_j iota_k) on degree-one classes."""
    ones = classes_of_degree(data, 1)
    mu = {}
    for i, j, k in itertools.product(ones, repeat=3):
        value = C.pair(_iota_column(data, i), C.multiply(_iota_column(data, j), _iota_column(data, k)))
        if value != 0:
            mu[(i, j, k)] = to_fraction(value)
    return mu


def maurer_cartan_defect(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, point: Mapping[int, Fraction]
) -> dict[tuple[int, int], Fraction]:
    """Components (i, c) of sum_jk mu_ijk [alpha^j, alpha^k]."""
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j, k), mu in mc_structure(C, data).items():
        for a, b in itertools.product(range(g.dim), repeat=2):
            x = point.get(field_index(j, a, g.dim))
            y = point.get(field_index(k, b, g.dim))
            if not x or not y:
                continue
            for c, coeff in g.bracket_coefficients(a, b).items():
                out[(i, c)] = out.get((i, c), Fraction(0)) + mu * x * y * coeff
    return {key: v for key, v in out.items() if v}


MC_ELIMINATION_ATTEMPTS = 8


def eliminated_mc_point(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, rng: random.Random
) -> Point | None:
    """Sparse MC point: one slot gets a random value on at most two Lie directions, another slot is solved exactly.

    With a single fixed slot the MC equations are linear in the solved slot (mu_ijj = 0 on odd classes);
    free parameters of the solution are drawn at random, so the point usually leaves the commuting locus.
    """
    ones = classes_of_degree(data, 1)
    if not ones:
        return None
    mu = mc_structure(C, data)
    for _ in range(MC_ELIMINATION_ATTEMPTS):
        target = rng.choice(ones)
        others = [j for j in ones if j != target]
        fixed: Point = {}
        if others:
            slot = rng.choice(others)
            for a in rng.sample(range(g.dim), min(2, g.dim)):
                fixed[field_index(slot, a, g.dim)] = random_rational(rng)

        linear: dict[tuple[int, int], dict[int, Fraction]] = {}
        constant: dict[tuple[int, int], Fraction] = {}
        for (i, j, k), m in mu.items():
            for a, b in itertools.product(range(g.dim), repeat=2):
                for c, coeff in g.bracket_coefficients(a, b).items():
                    row = linear.setdefault((i, c), {})
                    if j == target and k != target:
                        x = fixed.get(field_index(k, b, g.dim))
                        if x:
                            row[a] = row.get(a, Fraction(0)) + m * x * coeff
                    elif k == target and j != target:
                        x = fixed.get(field_index(j, a, g.dim))
                        if x:
                            row[b] = row.get(b, Fraction(0)) + m * x * coeff
                    elif j != target and k != target:
                        x = fixed.get(field_index(j, a, g.dim))
                        y = fixed.get(field_index(k, b, g.dim))
                        if x and y:
                            constant[(i, c)] = constant.get((i, c), Fraction(0)) + m * x * y * coeff

        keys = sorted(set(linear) | set(constant))
        if keys:
            A = sympy_matrix(len(keys), g.dim, {(r, a): v for r, key in enumerate(keys) for a, v in linear.get(key, {}).items()})
            rhs = sympy_matrix(len(keys), 1, {(r, 0): -constant.get(key, Fraction(0)) for r, key in enumerate(keys)})
            try:
                solution, params = A.gauss_jordan_solve(rhs)
            except ValueError:
                continue
            values = {}
            for p in params:
                v = random_rational(rng)
                values[p] = sympy.Rational(v.numerator, v.denominator)
            solved = [to_fraction(solution[a].subs(values)) for a in range(g.dim)]
        else:
            solved = [random_rational(rng) for _ in range(g.dim)]

        point = dict(fixed)
        point.update({field_index(target, a, g.dim): v for a, v in enumerate(solved) if v})
        if not maurer_cartan_defect(C, g, data, point):
            return point
    return None


def maurer_cartan_samples(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, count: int, seed: int
) -> list[Point]:
    """Rational points of MC, cycling through commuting tuples alpha^j = c_j x, single-slot points
    and eliminated sparse points; an elimination that finds nothing falls back to a commuting tuple.
    """
    rng = random.Random(seed)
    ones = classes_of_degree(data, 1)
    if not ones:
        return []
    points: list[Point] = []
    while len(points) < count:
        kind = len(points) % 3
        if kind == 2:
            eliminated = eliminated_mc_point(C, g, data, rng)
            if eliminated is not None:
                points.append(eliminated)
                continue
        x = [random_rational(rng, nonzero=False) for _ in range(g.dim)]
        if kind == 1:
            slots = {rng.choice(ones): Fraction(1)}
        else:
            slots = {j: random_rational(rng) for j in ones}
        point = {
            field_index(j, a, g.dim): c * x[a] for j, c in slots.items() for a in range(g.dim) if c * x[a]
        }
        if maurer_cartan_defect(C, g, data, point):
            raise ResidualTermError(f"Generated point {point} is not Maurer-Cartan")
        points.append(point)
    return points


def evaluate_at(p: GradedPolynomial, point: Mapping[int, Fraction]) -> Fraction:
    """Value at a point of the even coordinates; other variables are set to zero."""
    total = Fraction(0)
    for m, c in p.terms.items():
        value = to_fraction(c)
        for v in m:
            value *= point.get(v, Fraction(0))
            if not value:
                break
        total += value
    return total


class McReport(NamedTuple):
    values: list[tuple[Point, Fraction, Fraction]]
    polynomial_equal: bool

    @property
    def ok(self) -> bool:
        return all(a == b for _, a, b in self.values)


def mc_invariance_check(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data1: InductionData,
    data2: InductionData,
    order: int,
    samples: Sequence[Mapping[int, Fraction]],
) -> McReport:
    """Compare the one-loop parts of two formal induction data on MC points."""
    if data1.h_degrees != data2.h_degrees:
        raise PreconditionError("Induction data identify different cohomology layouts")
    first = one_loop_supertrace(C, g, data1, order)
    second = one_loop_supertrace(C, g, data2, order)
    values = []
    for point in samples:
        if maurer_cartan_defect(C, g, data1, point):
            raise PreconditionError(f"Sample {dict(point)} is not on the Maurer-Cartan set")
        values.append((dict(point), evaluate_at(first, point), evaluate_at(second, point)))
    return McReport(values, first == second)


# ---------------------------------------------------------------------------
# structure of W and R'


def check_w_ansatz(W: GradedSeries, data: InductionData, g: QuadraticLieAlgebra) -> ValidationReport:
    """W - W_prod depends on alpha_(1) only, and its F part is ad-invariant."""
    report = ValidationReport()
    outside = _variables_of_degree(data, g, {0, 2, 3})
    for k, terms in W.coefficients.items():
        for m in terms:
            if k == 0 and len(m) == 3:
                continue
            if outside.intersection(m):
                report.add("w-ansatz", m, f"term at hbar^{k} involves a class outside H^1")
    ones = classes_of_degree(data, 1)
    parity = W.space.parity
    for k, terms in W.coefficients.items():
        f_part = {m: c for m, c in terms.items() if not (k == 0 and len(m) == 3)}
        for x in range(g.dim):
            defect: Terms = {}
            for i, b in itertools.product(ones, range(g.dim)):
                for c, coeff in g.bracket_coefficients(x, b).items():
                    derivative = derive_terms(f_part, field_index(i, c, g.dim), parity)
                    for m, v in mul_terms({(field_index(i, b, g.dim),): coeff}, derivative, parity).items():
                        add_term(defect, m, v)
            if defect:
                report.add("ad-invariance", (k, x), f"F at hbar^{k} is not invariant under t{x}")
    return report


def check_r_ansatz(R: GradedSeries, data: InductionData, g: QuadraticLieAlgebra) -> ValidationReport:
    """R' is linear in alpha_(2) and free of alpha_(0), alpha_(3)."""
    report = ValidationReport()
    twos = _variables_of_degree(data, g, {2})
    outside = _variables_of_degree(data, g, {0, 3})
    for k, terms in R.coefficients.items():
        for m in terms:
            if outside.intersection(m):
                report.add("r-ansatz", m, f"term at hbar^{k} involves alpha_(0) or alpha_(3)")
            if sum(1 for v in m if v in twos) != 1:
                report.add("r-linear", m, f"term at hbar^{k} is not linear in alpha_(2)")
    return report


def darboux_partner(data: InductionData, p: int) -> int:
    induced = data.induced_pairing
    for q in classes_of_degree(data, 3 - data.h_degrees[p]):
        if induced[p, q] != 0:
            return q
    raise PreconditionError(f"Class {data.labels[p]} has no Darboux partner")


def vector_field(
    R: GradedSeries, data: InductionData, g: QuadraticLieAlgebra
) -> dict[tuple[int, int], GradedSeries]:
    """G^{ia} = sum_b g^{ab} dR'/d alpha_(2)^{jb}, j the Darboux partner of the degree-one class i."""
    parity = R.space.parity
    out = {}
    for i in classes_of_degree(data, 1):
        j = darboux_partner(data, i)
        for a in range(g.dim):
            orders: dict[int, Terms] = {}
            for k, terms in R.coefficients.items():
                target = orders.setdefault(k, {})
                for b, h in g.inverse_rows.get(a, ()):
                    for m, c in derive_terms(terms, field_index(j, b, g.dim), parity).items():
                        add_term(target, m, c * h)
            out[(i, a)] = GradedSeries(R.space, R.truncation_order, orders)
    return out


def equivariance_defect(
    G: Mapping[tuple[int, int], GradedSeries], data: InductionData, g: QuadraticLieAlgebra
) -> dict[tuple[int, int, int], GradedSeries]:
    """sum_j <[X, alpha^j], d/d alpha^j> G^i - [X, G^i] for every basis element X = t_x and class i."""
    ones = classes_of_degree(data, 1)
    out = {}
    for x in range(g.dim):
        for i in ones:
            components: dict[int, dict[int, Terms]] = {}
            for a in range(g.dim):
                series = G[(i, a)]
                parity = series.space.parity
                for k, terms in series.coefficients.items():
                    target = components.setdefault(a, {}).setdefault(k, {})
                    for j, b in itertools.product(ones, range(g.dim)):
                        for c, coeff in g.bracket_coefficients(x, b).items():
                            derivative = derive_terms(terms, field_index(j, c, g.dim), parity)
                            for m, v in mul_terms({(field_index(j, b, g.dim),): coeff}, derivative, parity).items():
                                add_term(target, m, v)
                    for c, coeff in g.bracket_coefficients(x, a).items():
                        rotated = components.setdefault(c, {}).setdefault(k, {})
                        for m, v in terms.items():
                            add_term(rotated, m, -v * coeff)
            for c, orders in components.items():
                series = GradedSeries(G[(i, c)].space, G[(i, c)].truncation_order, orders)
                if not series.is_zero():
                    out[(x, i, c)] = series
    return out


# ---------------------------------------------------------------------------
# tree level: L-infinity operations


def extract_linfty(W: GradedSeries, data: InductionData, arity: int) -> dict[Monomial, dict[int, Coeff]]:
    """Components of l_n on cohomology, read off the degree n + 1 tree part of W.

    Row X lists l_n(e_X1, ..., e_Xn) in the Darboux basis of ``data``: the coefficient of
    d_X1 ... d_Xn d_Y W_tree = pi'(e_Y, l_n(e_X)) lands on the partner of Y, divided by
    pi'(e_Y, partner). l_1 is always empty.
    """
    if arity < 1:
        raise PreconditionError(f"L-infinity operations have arity >= 1, got {arity}")
    lie_dim, rest = divmod(W.space.size, data.h_dim)
    if rest or not lie_dim:
        raise PreconditionError(f"W has {W.space.size} variables, not a multiple of {data.h_dim} cohomology classes")
    induced = data.induced_pairing
    partner: dict[int, tuple[int, Fraction]] = {}
    for p in range(data.h_dim):
        q = darboux_partner(data, p)
        partner[p] = (q, to_fraction(induced[p, q]))
    parity = W.space.parity
    table: dict[Monomial, dict[int, Coeff]] = {}
    for m, c in W.coefficient(0).terms.items():
        if len(m) != arity + 1:
            continue
        for y in sorted(set(m)):
            p, a = divmod(y, lie_dim)
            q, norm = partner[p]
            z = field_index(q, a, lie_dim)
            for rest_m, v in derive_terms({m: c}, y, parity).items():
                multiplicity = 1
                for var in set(rest_m):
                    for k in range(2, rest_m.count(var) + 1):
                        multiplicity *= k
                entry = table.setdefault(rest_m, {})
                entry[z] = entry.get(z, Fraction(0)) + to_fraction(v) * multiplicity / norm
    return {x: {z: v for z, v in row.items() if v} for x, row in table.items() if any(row.values())}


def homotopy_jacobi_defect(W: GradedSeries, degree: int = 4) -> GradedPolynomial:
    """1/2 {W_tree, W_tree} through ``degree``; vanishes when the extracted l_n form an L-infinity algebra."""
    tree = GradedSeries(W.space, 0, {0: W.coefficients.get(0, {})})
    bracket = series_bracket(tree, tree).scale(Fraction(1, 2)).up_to_degree(degree)
    return bracket.coefficient(0)


# ---------------------------------------------------------------------------
# Lie graph weights


def _contract(graph: FeynmanGraph, f: Mapping[tuple[int, int, int], Fraction], inverse: Mapping[tuple[int, int], Fraction]) -> Fraction:
    """Contraction of f at every vertex (darts in layout order) along the internal edges."""
    if graph.leaf_count:
        raise PreconditionError(f"Graph {graph.encoding} has leaves")
    partner = graph.layout.partner
    entries = [(key, v) for key, v in f.items() if v]
    open_darts: list[int] = []
    states: dict[tuple[int, ...], Fraction] = {(): Fraction(1)}
    for u in range(graph.vertex_count):
        darts = (3 * u, 3 * u + 1, 3 * u + 2)
        keep = [d for d in open_darts if partner[d] not in darts]
        new = [d for d in darts if partner[d] // 3 > u]
        new_open = keep + new
        updated: dict[tuple[int, ...], Fraction] = {}
        for key, w in states.items():
            assigned = dict(zip(open_darts, key, strict=True))
            for labels, v in entries:
                weight = w * v
                local = dict(zip(darts, labels, strict=True))
                for d in darts:
                    e = partner[d]
                    if e in assigned:
                        weight *= inverse.get((assigned[e], local[d]), Fraction(0))
                    elif e in local and d < e:
                        weight *= inverse.get((local[d], local[e]), Fraction(0))
                    if not weight:
                        break
                if not weight:
                    continue
                merged = assigned | local
                new_key = tuple(merged[d] for d in new_open)
                updated[new_key] = updated.get(new_key, Fraction(0)) + weight
        states = {k: v for k, v in updated.items() if v}
        open_darts = new_open
    return states.get((), Fraction(0))


EPSILON_TENSOR = antisymmetric_tensor({(0, 1, 2): Fraction(1)})
IDENTITY_3 = {(a, a): Fraction(1) for a in range(3)}


def lie_graph_value(graph: FeynmanGraph, g: QuadraticLieAlgebra) -> Fraction:
    """L^g of a vacuum graph; the sign follows the dart order of the canonical layout."""
    return _contract(graph, g.f, g.inverse_metric)


def su2_color_count(graph: FeynmanGraph) -> Fraction:
    """Proper 3-edge-colorings, each signed by the orientation of the colors at every vertex."""
    if graph.has_tadpole:
        raise PreconditionError(f"Graph {graph.encoding} has a tadpole")
    return _contract(graph, EPSILON_TENSOR, IDENTITY_3)


def lie_weight_series(g: QuadraticLieAlgebra, max_loops: int) -> dict[int, Fraction]:
    """sum over vacuum graphs of (-1)^(l+1) L^su(2) L^g / |Aut|, the CE-su(2) invariant with g coefficients."""
    out = {}
    for loops in range(2, max_loops + 1):
        total = Fraction(0)
        for graph, aut in enumerate_graphs(loops, 0):
            if graph.has_tadpole:
                continue
            total += su2_color_count(graph) * lie_graph_value(graph, g) / aut
        out[loops] = total if loops % 2 else -total
    return out


# ---------------------------------------------------------------------------
# report


def invariant_report(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    W: GradedSeries,
    samples: int = 0,
    seed: int = 0,
    prod: GradedPolynomial | None = None,
) -> InvariantReport:
    """Whatever invariants the Betti numbers and the data mode allow; ``prod`` as in extract_constant_invariant."""
    F: dict[int, Fraction] = {}
    A: dict[int, Fraction] = {}
    B: dict[int, Fraction] = {}
    F1 = None
    mc: list[tuple[Point, Fraction]] = []
    if data.betti[1] == 0:
        if data.mode == "relaxed":
            A, B = relaxed_series(W, data)
        else:
            F = extract_constant_invariant(W, data, prod)
    elif data.mode == "strict" and W.truncation_order >= 1:
        order = max((len(m) for m in W.coefficient(1).terms), default=0)
        try:
            F1 = one_loop_supertrace(C, g, data, order)
        except PreconditionError:
            F1 = None
        if F1 is not None:
            for point in maurer_cartan_samples(C, g, data, samples, seed):
                mc.append((point, evaluate_at(F1, point)))
    return InvariantReport(F, A, B, F1, mc)


def compute_invariants(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    max_loops: int,
    max_leaves: int,
    samples: int = 0,
    seed: int = 0,
) -> tuple[GradedSeries, InvariantReport]:
    W = effective_action(C, g, data, max_loops, max_leaves)
    prod = w_prod(C, g, data) if max_leaves >= 3 else None
    return W, invariant_report(C, g, data, W, samples, seed, prod)
