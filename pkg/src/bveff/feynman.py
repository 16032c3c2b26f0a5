"""Feynman rules, graph values and the effective action on cohomology.

Fields w^{Ia} are split as iota(alpha) + w'' and the fiber is integrated out with the
propagator M^{(Ia)(Jb)} = G^{IJ} g^{ab}, where G = -K pi^{-1} s and s_J = (-1)^(|J|+1).

Graph values come from symbolic Wick contraction: every dart gets its own copy of the field
coordinates, vertices are the trilinear part of S_int on their three darts, and each internal
edge applies sum M^{XY} d_X d_Y across its two darts. All Koszul signs therefore come from the
polynomial arithmetic in ``graded``. The operator form exp(hbar/2 M d d) exp(S_int/hbar) of the
same integral is kept as an independent oracle.
"""

import itertools
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import NamedTuple

import sympy

from .config import check_caps
from .exceptions import PreconditionError, ResidualTermError
from .frobenius import DgFrobeniusAlgebra, QuadraticLieAlgebra, cs_terms, field_index, field_space
from .graded import (
    Coeff,
    GradedPolynomial,
    GradedSeries,
    Monomial,
    Terms,
    Variable,
    VariableSpace,
    add_term,
    add_terms,
    derive_terms,
    monomial_parity,
    mul_monomials,
    mul_terms,
    normal_form,
    scale_terms,
    series_bracket,
    series_laplacian,
    substitute_terms,
)
from .graphs import FeynmanGraph, enumerate_graphs, enumerate_marked_graphs, graph_classes
from .hodge import Deformation, InductionData, JetMatrix, deform, relax_homotopy
from .rational import to_fraction

type Propagator = Mapping[int, tuple[tuple[int, Coeff], ...]]
type HbarTerms = dict[int, Terms]


@dataclass(frozen=True, eq=False)
class FeynmanRules:
    """Decorations of leaves, internal edges, vertices and marks.

    ``leaf`` maps a field coordinate X to its image on the external space (iota(alpha)^X),
    ``edge`` lists the propagator by columns, Y -> ((X, M^{XY}), ...), and ``vertex`` is the
    cubic interaction in field coordinates. A marked edge carries 1/2 pi(w, d dk d w); a
    marked leaf carries pi(w, d dI alpha) stored as X -> coefficient of w^X.
    """

    external: VariableSpace
    field_parity: tuple[int, ...]
    leaf: Mapping[int, Terms]
    edge: Propagator
    vertex: Terms
    marked_edge: Terms = field(default_factory=dict)
    marked_leaf: Mapping[int, Terms] = field(default_factory=dict)

    @property
    def field_count(self) -> int:
        return len(self.field_parity)

    @cached_property
    def support(self) -> frozenset[int]:
        """Field coordinates touched by the propagator."""
        out = set(self.edge)
        for entries in self.edge.values():
            out.update(x for x, _ in entries)
        return frozenset(out)


def cohomology_space(data: InductionData, g: QuadraticLieAlgebra) -> VariableSpace:
    """Coordinates alpha^{pa} of ghost number 1 - |p| with sigma' = pi' (x) g."""
    variables = tuple(
        Variable(f"a[{data.labels[p]}|{a}]", 1 - data.h_degrees[p]) for p in range(data.h_dim) for a in range(g.dim)
    )
    induced = data.induced_pairing
    pairing = {}
    for p, q in itertools.product(range(data.h_dim), repeat=2):
        if induced[p, q] == 0:
            continue
        value = to_fraction(induced[p, q])
        for (a, b), m in g.metric_entries.items():
            pairing[(field_index(p, a, g.dim), field_index(q, b, g.dim))] = value * m
    return VariableSpace(variables, pairing)


def propagator_matrix(C: DgFrobeniusAlgebra, homotopy: JetMatrix) -> JetMatrix:
    """G = -K pi^{-1} s with s = diag((-1)^(|J|+1))."""
    s = sympy.diag(*[-1 if k % 2 == 0 else 1 for k in C.degrees])
    return (-homotopy) @ (C.pairing_inverse * s)


def _propagator_columns(G: JetMatrix, g: QuadraticLieAlgebra) -> dict[int, tuple[tuple[int, Coeff], ...]]:
    columns: dict[int, list[tuple[int, Coeff]]] = {}
    rows, cols = G.shape
    for I, J in itertools.product(range(rows), range(cols)):
        entry = G.entry(I, J)
        if not entry:
            continue
        for (a, b), h in g.inverse_metric.items():
            columns.setdefault(field_index(J, b, g.dim), []).append((field_index(I, a, g.dim), entry * h))
    return {Y: tuple(sorted(v, key=lambda t: t[0])) for Y, v in sorted(columns.items())}


def _field_parity(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra) -> tuple[int, ...]:
    return tuple((1 - C.degrees[I]) % 2 for I in range(C.dim) for _ in range(g.dim))


def _leaf_images(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData) -> dict[int, Terms]:
    images: dict[int, Terms] = {}
    for I, p in itertools.product(range(C.dim), range(data.h_dim)):
        c = data.iota.entry(I, p)
        if not c:
            continue
        for a in range(g.dim):
            images.setdefault(field_index(I, a, g.dim), {})[(field_index(p, a, g.dim),)] = c
    return images


def quadratic_terms(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, A: sympy.Matrix, k: int) -> Terms:
    """1/2 pi(w, A w) for a degree-k endomorphism A, in field coordinates."""
    lowered = C.pairing_matrix * A
    parity = _field_parity(C, g)
    half = Fraction(1, 2)
    out: Terms = {}
    for I, J in itertools.product(range(C.dim), repeat=2):
        if lowered[I, J] == 0:
            continue
        value = to_fraction(lowered[I, J])
        sign = -1 if ((1 - C.degrees[I]) * (C.degrees[J] + k)) % 2 else 1
        for (a, b), m in g.metric_entries.items():
            nf = normal_form((field_index(I, a, g.dim), field_index(J, b, g.dim)), parity)
            if nf is None:
                continue
            key, koszul = nf
            add_term(out, key, half * sign * koszul * value * m)
    return out


def _marked_leaf_terms(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, delta_iota: sympy.Matrix
) -> dict[int, Terms]:
    """pi(w, d dI alpha) = sum_X w^X phi_X(alpha)."""
    lowered = C.pairing_matrix * C.differential_matrix * delta_iota
    out: dict[int, Terms] = {}
    for I, p in itertools.product(range(C.dim), range(data.h_dim)):
        if lowered[I, p] == 0:
            continue
        value = to_fraction(lowered[I, p])
        sign = -1 if ((1 - C.degrees[I]) * data.h_degrees[p]) % 2 else 1
        for (a, b), m in g.metric_entries.items():
            add_term(out.setdefault(field_index(I, a, g.dim), {}), (field_index(p, b, g.dim),), sign * value * m)
    return {X: t for X, t in out.items() if t}


def feynman_rules(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    deformation: Deformation | None = None,
) -> FeynmanRules:
    _, cubic = cs_terms(C, g)
    rules = FeynmanRules(
        cohomology_space(data, g),
        _field_parity(C, g),
        _leaf_images(C, g, data),
        _propagator_columns(propagator_matrix(C, data.homotopy), g),
        cubic,
    )
    if deformation is None:
        return rules
    D = C.differential_matrix
    marked_edge: Terms = {}
    marked_leaf: dict[int, Terms] = {}
    if deformation.kind == "I" and deformation.kappa is not None:
        marked_edge = quadratic_terms(C, g, D * deformation.kappa * D, 0)
    if deformation.kind == "II" and deformation.delta_iota is not None:
        marked_leaf = _marked_leaf_terms(C, g, data, deformation.delta_iota)
    return replace(rules, marked_edge=marked_edge, marked_leaf=marked_leaf)


def phi_rules(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, lam: sympy.Matrix) -> FeynmanRules:
    """Rules with identity leaves and d Lambda d edges; graph values are functions of the fields."""
    space = field_space(C, g)
    _, cubic = cs_terms(C, g)
    D = C.differential_matrix
    edge = _propagator_columns(propagator_matrix(C, JetMatrix.lift(D * lam * D)), g)
    leaf = {X: {(X,): Fraction(1)} for X in range(space.size)}
    return FeynmanRules(space, space.parity, leaf, edge, cubic)


# ---------------------------------------------------------------------------
# graph values


def _partials(terms: Mapping[Monomial, Coeff], block: range, parity: Sequence[int]) -> dict[int, Terms]:
    """Left derivatives with respect to every variable of ``block``, in one pass."""
    out: dict[int, Terms] = {}
    for m, c in terms.items():
        odd_before = 0
        previous = None
        for pos, v in enumerate(m):
            if v in block and v != previous:
                rest = m[:pos] + m[pos + 1 :]
                if parity[v]:
                    coeff = -c if odd_before & 1 else c
                else:
                    coeff = c * m.count(v)
                add_term(out.setdefault(v, {}), rest, coeff)
            previous = v
            odd_before += parity[v]
    return {v: t for v, t in out.items() if t}


class _DartCopies:
    """External coordinates followed by one copy of the field coordinates per dart."""

    def __init__(self, rules: FeynmanRules, darts: int):
        self.rules = rules
        self.offset = rules.external.size
        self.parity = rules.external.parity + rules.field_parity * darts

    def var(self, dart: int, X: int) -> int:
        return self.offset + dart * self.rules.field_count + X

    def block(self, dart: int) -> range:
        return range(self.var(dart, 0), self.var(dart + 1, 0))

    def internal(self, dart: int) -> dict[int, Terms]:
        return {X: {(self.var(dart, X),): Fraction(1)} for X in self.rules.support}

    def vertex(self, images: Sequence[Mapping[int, Terms]]) -> Terms:
        """Trilinear part of S_int(w_0 + w_1 + w_2) with w_k replaced by ``images[k]``."""
        out: Terms = {}
        for m, c in self.rules.vertex.items():
            for perm in itertools.permutations(range(3)):
                factors = [images[perm[i]].get(m[i]) for i in range(3)]
                if not all(factors):
                    continue
                product = mul_terms(mul_terms(factors[0], factors[1], self.parity), factors[2], self.parity)
                for mm, cc in product.items():
                    add_term(out, mm, cc * c)
        return out

    def bilinear(self, terms: Terms, first: int, second: int) -> Terms:
        """Bilinear part of q(w_first + w_second) for a quadratic q."""
        out: Terms = {}
        for m, c in terms.items():
            x, y = m
            for a, b in ((first, second), (second, first)):
                product = mul_terms({(self.var(a, x),): c}, {(self.var(b, y),): Fraction(1)}, self.parity)
                for mm, cc in product.items():
                    add_term(out, mm, cc)
        return out

    def close(self, terms: Terms, d: int, e: int) -> Terms:
        """sum M^{XY} d_{X,d} d_{Y,e} applied to ``terms``."""
        out: Terms = {}
        base = self.var(e, 0)
        for y_var, part in _partials(terms, self.block(e), self.parity).items():
            for X, c in self.rules.edge.get(y_var - base, ()):
                for m, v in derive_terms(part, self.var(d, X), self.parity).items():
                    add_term(out, m, v * c)
        return out

    def join(self, a: Terms, b: Terms, pairs: Sequence[tuple[int, int]]) -> Terms:
        """Product a * b with the edges ``pairs`` (dart of a, dart of b) contracted."""
        if not pairs:
            return mul_terms(a, b, self.parity)
        (d, e), rest = pairs[0], pairs[1:]
        a_parts = _partials(a, self.block(d), self.parity)
        if not a_parts:
            return {}
        b_parts = _partials(b, self.block(e), self.parity)
        base_d, base_e = self.var(d, 0), self.var(e, 0)
        field_parity = self.rules.field_parity
        out: Terms = {}
        for y_var, b_y in b_parts.items():
            Y = y_var - base_e
            for X, c in self.rules.edge.get(Y, ()):
                a_x = a_parts.get(base_d + X)
                if a_x is None:
                    continue
                # d_X d_Y (A B) = (-1)^{|Y| |A|} (d_X A)(d_Y B)
                if field_parity[Y]:
                    a_x = {
                        m: -v if (monomial_parity(m, self.parity) + field_parity[X]) & 1 else v
                        for m, v in a_x.items()
                    }
                for m, v in self.join(scale_terms(a_x, c), b_y, rest).items():
                    add_term(out, m, v)
        return out


def _evaluate(rules: FeynmanRules, graph: FeynmanGraph) -> Terms:
    layout = graph.layout
    vertex_darts = 3 * graph.vertex_count
    slot = vertex_darts + graph.leaf_count
    copies = _DartCopies(rules, slot + 2)
    kind = graph.mark.kind if graph.mark is not None else None
    marked_edge = frozenset(layout.marked_darts) if kind == "edge" else frozenset()
    marked_leaf = layout.marked_darts[0] if kind == "leaf" else None

    def image(dart: int) -> Mapping[int, Terms]:
        if layout.partner[dart] >= vertex_darts and dart != marked_leaf:
            return rules.leaf
        return copies.internal(dart)

    acc: Terms = {(): Fraction(1)}
    for u in range(graph.vertex_count):
        darts = layout.vertex_darts(u)
        q = copies.vertex([image(d) for d in darts])
        pairs = []
        for d in darts:
            e = layout.partner[d]
            if e >= vertex_darts or frozenset((d, e)) == marked_edge:
                continue
            if e // 3 == u:
                if d < e:
                    q = copies.close(q, d, e)
            elif e // 3 < u:
                pairs.append((e, d))
        acc = copies.join(acc, q, pairs)
        if not acc:
            return {}
    if kind == "edge":
        a, b = layout.marked_darts
        insertion = copies.bilinear(dict(rules.marked_edge), slot, slot + 1)
        acc = copies.join(acc, insertion, [(a, slot), (b, slot + 1)])
    elif kind == "leaf":
        insertion: Terms = {}
        for X, phi in rules.marked_leaf.items():
            for m, c in mul_terms({(copies.var(slot, X),): Fraction(1)}, phi, copies.parity).items():
                add_term(insertion, m, c)
        acc = copies.join(acc, insertion, [(marked_leaf, slot)])
    return acc


def evaluate_graph(graph: FeynmanGraph, rules: FeynmanRules) -> GradedPolynomial:
    """Value of one labeled realization of an unmarked graph (before the 1/|Aut| factor)."""
    if graph.mark is not None:
        raise PreconditionError(f"Graph {graph.encoding} is marked; use evaluate_marked_graph")
    return GradedPolynomial(rules.external, _evaluate(rules, graph))


def evaluate_marked_graph(graph: FeynmanGraph, rules: FeynmanRules) -> GradedPolynomial:
    if graph.mark is None:
        raise PreconditionError(f"Graph {graph.encoding} carries no mark")
    return GradedPolynomial(rules.external, _evaluate(rules, graph))


class GraphContribution(NamedTuple):
    graph: FeynmanGraph
    aut: int
    value: GradedPolynomial


def graph_contributions(
    rules: FeynmanRules, max_loops: int, max_leaves: int, include_tadpoles: bool = False
) -> list[GraphContribution]:
    check_caps(max_loops, max_leaves)
    out = []
    for loops in range(max_loops + 1):
        for leaves in range(max_leaves + 1):
            for graph, aut in enumerate_graphs(loops, leaves, include_tadpoles):
                out.append(GraphContribution(graph, aut, evaluate_graph(graph, rules)))
    return out


def marked_contributions(
    rules: FeynmanRules, max_loops: int, max_leaves: int, include_tadpoles: bool = False
) -> list[GraphContribution]:
    check_caps(max_loops, max_leaves)
    kinds = [kind for kind, terms in (("leaf", rules.marked_leaf), ("edge", rules.marked_edge)) if terms]
    out = []
    for loops in range(max_loops + 1):
        for leaves in range(max_leaves + 1):
            for kind in kinds:
                for graph, aut in enumerate_marked_graphs(loops, leaves, kind, include_tadpoles):
                    out.append(GraphContribution(graph, aut, evaluate_marked_graph(graph, rules)))
    return out


def assemble(contributions: Sequence[GraphContribution], space: VariableSpace, max_loops: int) -> GradedSeries:
    """sum over classes of hbar^l value / |Aut|."""
    orders: HbarTerms = {}
    for item in sorted(contributions, key=lambda c: (c.graph.loops, c.graph.leaf_count, c.graph.encoding)):
        target = orders.setdefault(item.graph.loops, {})
        for m, c in item.value.terms.items():
            add_term(target, m, c * Fraction(1, item.aut))
    return GradedSeries(space, max_loops, orders)


def effective_action(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    max_loops: int,
    max_leaves: int,
    include_tadpoles: bool = False,
) -> GradedSeries:
    """W(alpha) = sum_l hbar^l sum_Gamma W_Gamma / |Aut(Gamma)|, truncated at (max_loops, max_leaves)."""
    rules = feynman_rules(C, g, data)
    contributions = graph_contributions(rules, max_loops, max_leaves, include_tadpoles)
    return assemble(contributions, rules.external, max_loops)


def deformation_generator(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    deformation: Deformation,
    max_loops: int,
    max_leaves: int,
    include_tadpoles: bool = False,
) -> GradedSeries:
    """R'(alpha) as the sum over graphs with one marked leaf or one marked internal edge."""
    deform(data, deformation)
    rules = feynman_rules(C, g, data, deformation)
    contributions = marked_contributions(rules, max_loops, max_leaves, include_tadpoles)
    return assemble(contributions, rules.external, max_loops)


# ---------------------------------------------------------------------------
# operator form


@dataclass(frozen=True)
class Truncation:
    """Which terms (hbar^p, external degree n) of exp(W / hbar) are kept.

    With ``leaf_bound`` the terms needed for W up to hbar^loops and degree leaves are
    p <= loops - 1 + (leaves - n) // 3 and n <= leaves; without it only the weight
    2p + n <= 2 (loops - 1) + leaves is bounded. Both conditions are inherited by every
    factor of a kept product, so truncating partial products is exact.
    """

    loops: int
    leaves: int
    leaf_bound: bool = True

    @property
    def max_weight(self) -> int:
        return 2 * (self.loops - 1) + self.leaves

    def admits(self, p: int, n: int) -> bool:
        if 2 * p + n > self.max_weight:
            return False
        if not self.leaf_bound:
            return True
        return n <= self.leaves and p <= self.loops - 1 + (self.leaves - n) // 3


def _series_product(
    a: Mapping[int, Mapping[Monomial, Coeff]],
    b: Mapping[int, Mapping[Monomial, Coeff]],
    parity: Sequence[int],
    accept: Callable[[int, Monomial], bool],
    scale: Coeff = Fraction(1),
) -> HbarTerms:
    out: HbarTerms = {}
    for (qa, ta), (qb, tb) in itertools.product(a.items(), b.items()):
        q = qa + qb
        target = out.setdefault(q, {})
        for m1, c1 in ta.items():
            for m2, c2 in tb.items():
                product = mul_monomials(m1, m2, parity)
                if product is None:
                    continue
                m, sign = product
                if not accept(q, m):
                    continue
                c = c1 * c2 * scale
                add_term(target, m, c if sign > 0 else -c)
    return {q: t for q, t in out.items() if t}


def _accumulate(total: HbarTerms, part: Mapping[int, Mapping[Monomial, Coeff]], scale: Coeff = Fraction(1)) -> None:
    for q, terms in part.items():
        target = total.setdefault(q, {})
        for m, c in terms.items():
            add_term(target, m, c * scale)


class _Fiber:
    """External coordinates followed by one copy w'' of the field coordinates."""

    def __init__(self, rules: FeynmanRules, truncation: Truncation):
        self.rules = rules
        self.truncation = truncation
        self.offset = rules.external.size
        self.parity = rules.external.parity + rules.field_parity
        self.external_parity = rules.external.parity
        self.images: dict[int, Terms] = {}
        for X in range(rules.field_count):
            image = dict(rules.leaf.get(X, {}))
            if X in rules.support:
                image[(self.offset + X,)] = Fraction(1)
            self.images[X] = image

    def substitute(self, terms: Mapping[Monomial, Coeff]) -> Terms:
        """w -> leaf image + w''."""
        return substitute_terms(terms, self.images, self.parity)

    def admissible(self, q: int, m: Monomial) -> bool:
        external = sum(1 for v in m if v < self.offset)
        if self.truncation.leaf_bound and external > self.truncation.leaves:
            return False
        return 2 * q + len(m) <= self.truncation.max_weight

    def exponential(self, interaction: Mapping[int, Mapping[Monomial, Coeff]], start: Terms) -> HbarTerms:
        """start * exp(I / hbar) with I = sum_j hbar^j I_j, truncated by weight."""
        factor: HbarTerms = {}
        for j, terms in interaction.items():
            for m in terms:
                if 2 * (j - 1) + len(m) < 1:
                    raise PreconditionError(f"Interaction term of degree {len(m)} at hbar^{j} has no perturbative weight")
            if terms:
                factor[j - 1] = self.substitute(terms)
        current: HbarTerms = {0: dict(start)}
        total: HbarTerms = {0: dict(start)}
        k = 0
        while current:
            k += 1
            current = _series_product(current, factor, self.parity, self.admissible, Fraction(1, k))
            _accumulate(total, current)
        return total

    def laplace(self, terms: Terms) -> Terms:
        """1/2 sum M^{XY} d_X d_Y on the fiber copy."""
        out: Terms = {}
        half = Fraction(1, 2)
        for Y, entries in self.rules.edge.items():
            dy = derive_terms(terms, self.offset + Y, self.parity)
            if not dy:
                continue
            for X, c in entries:
                for m, v in derive_terms(dy, self.offset + X, self.parity).items():
                    add_term(out, m, v * c * half)
        return out

    def contract(self, series: HbarTerms) -> HbarTerms:
        """exp(hbar * laplace) followed by w'' = 0."""
        out: HbarTerms = {}
        for q, terms in series.items():
            current = terms
            j = 0
            while current:
                weight = Fraction(1, factorial(j))
                for m, c in current.items():
                    if (not m or m[-1] < self.offset) and self.truncation.admits(q + j, len(m)):
                        add_term(out.setdefault(q + j, {}), m, c * weight)
                current = self.laplace({m: c for m, c in current.items() if m and m[-1] >= self.offset})
                j += 1
        return {p: t for p, t in out.items() if t}

    def accept(self, p: int, m: Monomial) -> bool:
        return self.truncation.admits(p, len(m))

    def integral(self, interaction: Mapping[int, Mapping[Monomial, Coeff]], insertion: Terms | None = None) -> HbarTerms:
        start = self.substitute(insertion) if insertion is not None else {(): Fraction(1)}
        return self.contract(self.exponential(interaction, start))

    def fluctuation(self, z: HbarTerms) -> HbarTerms:
        one = z.get(0, {}).get((), Fraction(0))
        if one != 1:
            raise ResidualTermError(f"Fiber integral is not normalised: constant term {one}")
        u = {p: {m: c for m, c in t.items() if p or m} for p, t in z.items()}
        return {p: t for p, t in u.items() if t}

    def log(self, z: HbarTerms) -> HbarTerms:
        """log(z) for z = 1 + u, truncated."""
        u = self.fluctuation(z)
        result: HbarTerms = {}
        power: HbarTerms = {0: {(): Fraction(1)}}
        r = 0
        while True:
            r += 1
            power = _series_product(power, u, self.external_parity, self.accept)
            if not power:
                return result
            _accumulate(result, power, Fraction(1 if r % 2 else -1, r))

    def inverse(self, z: HbarTerms) -> HbarTerms:
        """1 / z for z = 1 + u, truncated."""
        u = self.fluctuation(z)
        result: HbarTerms = {0: {(): Fraction(1)}}
        power: HbarTerms = {0: {(): Fraction(1)}}
        r = 0
        while True:
            r += 1
            power = _series_product(power, u, self.external_parity, self.accept)
            if not power:
                return result
            _accumulate(result, power, Fraction(-1 if r % 2 else 1))


def _marked_insertion(rules: FeynmanRules, fiber: _Fiber) -> Terms:
    """1/2 pi(w, d dk d w) + pi(w, d dI alpha) with w -> leaf image + w''."""
    insertion = fiber.substitute(rules.marked_edge)
    for X, phi in rules.marked_leaf.items():
        for m, c in mul_terms(fiber.images[X], phi, fiber.parity).items():
            add_term(insertion, m, c)
    return insertion


def induce(
    rules: FeynmanRules,
    interaction: Mapping[int, Mapping[Monomial, Coeff]],
    max_loops: int,
    max_leaves: int,
) -> GradedSeries:
    """hbar log of exp(hbar/2 M d d) exp(I / hbar) at w = leaf image, for I = sum_j hbar^j I_j."""
    check_caps(max_loops, max_leaves)
    fiber = _Fiber(rules, Truncation(max_loops, max_leaves))
    log_z = fiber.log(fiber.integral(interaction))
    return GradedSeries(rules.external, max_loops, {p + 1: t for p, t in log_z.items()}).require_nonnegative()


def wick_oracle(
    C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData, max_loops: int, max_leaves: int
) -> GradedSeries:
    """The effective action from its operator form."""
    rules = feynman_rules(C, g, data)
    return induce(rules, {0: rules.vertex}, max_loops, max_leaves)


def deformation_oracle(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    deformation: Deformation,
    max_loops: int,
    max_leaves: int,
) -> GradedSeries:
    """R' = exp(-W/hbar) times the fiber integral of exp(S/hbar) with the gauge-fixing insertion."""
    check_caps(max_loops, max_leaves)
    deform(data, deformation)
    rules = feynman_rules(C, g, data, deformation)
    fiber = _Fiber(rules, Truncation(max_loops + 1, max_leaves))
    interaction = {0: rules.vertex}
    z = fiber.integral(interaction)
    y = fiber.integral(interaction, _marked_insertion(rules, fiber))
    product = _series_product(y, fiber.inverse(z), fiber.external_parity, fiber.accept)
    return GradedSeries(rules.external, max_loops, product).require_nonnegative()


def deformation_defect(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    deformation: Deformation,
    max_loops: int,
    max_leaves: int,
) -> GradedSeries:
    """dW/deps - {W, R'} - hbar Delta R' through (max_loops, max_leaves); zero when W moves canonically.

    Both sides are computed one leaf order higher so the bracket sees every term that
    contributes below ``max_leaves``.
    """
    extended = max_leaves + 1
    check_caps(max_loops, extended)
    moved = effective_action(C, g, deform(data, deformation), max_loops, extended)
    w, dw = moved.split_jet()
    r = deformation_generator(C, g, data, deformation, max_loops, extended)
    change = series_bracket(w, r) + series_laplacian(r).shift(1)
    return (dw - change.truncate(max_loops)).up_to_degree(max_leaves)


# ---------------------------------------------------------------------------
# relaxed homotopies


def build_phi_lambda(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    lam: sympy.Matrix,
    max_loops: int,
    max_leaves: int,
) -> GradedSeries:
    """Phi_Lambda(w) = sum over graphs with d Lambda d edges and every leaf left as w, excluding the bare vertex.

    Only the terms of ghost order j <= max_loops and degree m + 2 j <= 2 max_loops + max_leaves
    can reach W through (max_loops, max_leaves), so those are the ones kept.
    """
    check_caps(max_loops, max_leaves)
    relax_homotopy(data, lam)
    rules = phi_rules(C, g, lam)
    orders: HbarTerms = {}
    for loops in range(max_loops + 1):
        for leaves in range(2 * max_loops + max_leaves - 2 * loops + 1):
            if (loops, leaves) == (0, 3):
                continue
            for graph, aut in graph_classes(loops, leaves):
                target = orders.setdefault(loops, {})
                for m, c in _evaluate(rules, graph).items():
                    add_term(target, m, c * Fraction(1, aut))
    return GradedSeries(rules.external, max_loops, orders)


def relaxation_defect(
    C: DgFrobeniusAlgebra,
    g: QuadraticLieAlgebra,
    data: InductionData,
    lam: sympy.Matrix,
    max_loops: int,
    max_leaves: int,
) -> GradedSeries:
    """Ind with the relaxed homotopy minus Ind with the strict one applied to S + Phi_Lambda."""
    relaxed = relax_homotopy(data, lam)
    phi = build_phi_lambda(C, g, data, lam, max_loops, max_leaves)
    rules = feynman_rules(C, g, data)
    interaction = {k: dict(v) for k, v in phi.coefficients.items()}
    interaction[0] = add_terms(interaction.get(0, {}), rules.vertex)
    return wick_oracle(C, g, relaxed, max_loops, max_leaves) - induce(rules, interaction, max_loops, max_leaves)
