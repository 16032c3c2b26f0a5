"""Graded-commutative polynomials with Koszul signs, odd symplectic spaces and the BV operators.

Monomials are sorted tuples of variable indices; odd variables occur at most once.
Coefficients are exact: ``Fraction`` or ``JetScalar`` (first-order jets a + b*eps).
The raw ``*_terms`` helpers work on plain ``{monomial: coeff}`` dicts and a parity
list, so the Feynman layer can reuse them on auxiliary variables.
"""

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

import networkx as nx

from .exceptions import PreconditionError, ResidualTermError, ValidationError
from .rational import sympy_matrix, to_fraction


@dataclass(frozen=True)
class JetScalar:
    """Exact first-order jet ``value + derivative * eps`` with ``eps**2 = 0``."""

    value: Fraction
    derivative: Fraction = Fraction(0)

    @staticmethod
    def _lift(other) -> "JetScalar | None":
        if isinstance(other, JetScalar):
            return other
        if isinstance(other, int | Fraction):
            return JetScalar(Fraction(other))
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return JetScalar(self.value + o.value, self.derivative + o.derivative)

    __radd__ = __add__

    def __neg__(self) -> "JetScalar":
        return JetScalar(-self.value, -self.derivative)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return JetScalar(self.value - o.value, self.derivative - o.derivative)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return JetScalar(self.value * o.value, self.value * o.derivative + self.derivative * o.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if o.value == 0:
            raise ZeroDivisionError("jet division by a pure infinitesimal")
        return JetScalar(self.value / o.value, (self.derivative * o.value - self.value * o.derivative) / o.value**2)

    def __eq__(self, other) -> bool:
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.value == o.value and self.derivative == o.derivative

    def __hash__(self) -> int:
        if self.derivative == 0:
            return hash(self.value)
        return hash((self.value, self.derivative))

    def __bool__(self) -> bool:
        return bool(self.value) or bool(self.derivative)

    def __repr__(self) -> str:
        return f"{self.value} + {self.derivative}ε"


EPSILON = JetScalar(Fraction(0), Fraction(1))

type Coeff = Fraction | JetScalar
type Monomial = tuple[int, ...]
type Terms = dict[Monomial, Coeff]


def value_part(c: Coeff) -> Fraction:
    return c.value if isinstance(c, JetScalar) else c


def derivative_part(c: Coeff) -> Fraction:
    return c.derivative if isinstance(c, JetScalar) else Fraction(0)


def split_jet_terms(terms: Mapping[Monomial, Coeff]) -> tuple[Terms, Terms]:
    """Split jet-valued terms into their value and eps-derivative parts."""
    values: Terms = {}
    derivatives: Terms = {}
    for m, c in terms.items():
        add_term(values, m, value_part(c))
        add_term(derivatives, m, derivative_part(c))
    return values, derivatives


# ---------------------------------------------------------------------------
# raw term arithmetic


def add_term(out: Terms, m: Monomial, c: Coeff) -> None:
    if not c:
        return
    total = out.get(m)
    total = c if total is None else total + c
    if total:
        out[m] = total
    else:
        out.pop(m, None)


def add_terms(a: Mapping[Monomial, Coeff], b: Mapping[Monomial, Coeff]) -> Terms:
    out = dict(a)
    for m, c in b.items():
        add_term(out, m, c)
    return out


def scale_terms(a: Mapping[Monomial, Coeff], s: Coeff) -> Terms:
    if not s:
        return {}
    out: Terms = {}
    for m, c in a.items():
        add_term(out, m, c * s)
    return out


def normal_form(seq: Sequence[int], parity: Sequence[int]) -> tuple[Monomial, int] | None:
    """Sort a product of variables, returning the sorted monomial and the Koszul sign.

    Returns None when an odd variable repeats (the product vanishes).
    """
    odd = [v for v in seq if parity[v]]
    if len(set(odd)) != len(odd):
        return None
    inversions = sum(1 for i, x in enumerate(odd) for y in odd[i + 1 :] if x > y)
    return tuple(sorted(seq)), -1 if inversions & 1 else 1


def mul_monomials(m1: Monomial, m2: Monomial, parity: Sequence[int]) -> tuple[Monomial, int] | None:
    odd2 = [y for y in m2 if parity[y]]
    if not odd2:
        return tuple(sorted(m1 + m2)), 1
    odd1 = [x for x in m1 if parity[x]]
    if not odd1:
        return tuple(sorted(m1 + m2)), 1
    if set(odd1).intersection(odd2):
        return None
    crossings = sum(1 for x in odd1 for y in odd2 if x > y)
    return tuple(sorted(m1 + m2)), -1 if crossings & 1 else 1


def mul_terms(a: Mapping[Monomial, Coeff], b: Mapping[Monomial, Coeff], parity: Sequence[int]) -> Terms:
    out: Terms = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            product = mul_monomials(m1, m2, parity)
            if product is None:
                continue
            m, sign = product
            c = c1 * c2
            add_term(out, m, c if sign > 0 else -c)
    return out


def derive_terms(terms: Mapping[Monomial, Coeff], v: int, parity: Sequence[int]) -> Terms:
    """Graded left derivative with respect to variable ``v``."""
    out: Terms = {}
    for m, c in terms.items():
        if v not in m:
            continue
        pos = m.index(v)
        rest = m[:pos] + m[pos + 1 :]
        if parity[v]:
            before = sum(parity[x] for x in m[:pos])
            add_term(out, rest, -c if before & 1 else c)
        else:
            add_term(out, rest, c * m.count(v))
    return out


def substitute_terms(
    terms: Mapping[Monomial, Coeff],
    images: Mapping[int, Mapping[Monomial, Coeff]],
    parity: Sequence[int],
) -> Terms:
    """Substitute every variable by a polynomial image (parity-preserving), in monomial order."""
    out: Terms = {}
    cache: dict[Monomial, Terms] = {(): {(): Fraction(1)}}
    for m, c in terms.items():
        if m not in cache:
            acc: Terms = {(): Fraction(1)}
            for i, v in enumerate(m):
                prefix = m[: i + 1]
                if prefix in cache:
                    acc = cache[prefix]
                    continue
                acc = mul_terms(acc, images[v], parity)
                cache[prefix] = acc
        for mm, cc in cache[m].items():
            add_term(out, mm, cc * c)
    return out


def monomial_parity(m: Monomial, parity: Sequence[int]) -> int:
    return sum(parity[v] for v in m) & 1


def split_by_parity(terms: Mapping[Monomial, Coeff], parity: Sequence[int]) -> tuple[Terms, Terms]:
    even: Terms = {}
    odd: Terms = {}
    for m, c in terms.items():
        (odd if monomial_parity(m, parity) else even)[m] = c
    return even, odd


def variables_of(terms: Mapping[Monomial, Coeff]) -> set[int]:
    return {v for m in terms for v in m}


# ---------------------------------------------------------------------------
# variable spaces


@dataclass(frozen=True)
class Variable:
    label: str
    ghost: int

    @property
    def parity(self) -> int:
        return self.ghost % 2


@dataclass(frozen=True, eq=False)
class VariableSpace:
    """Graded coordinates with an odd symplectic pairing.

    ``pairing`` holds the symmetric matrix sigma on index pairs (both orders stored).
    The BV bivector used by the Laplacian is its inverse.
    """

    variables: tuple[Variable, ...]
    pairing: Mapping[tuple[int, int], Fraction]
    darboux_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        n = len(self.variables)
        for (i, j), value in self.pairing.items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"Pairing entry ({i}, {j}) outside the variable range")
            if not value:
                continue
            if self.pairing.get((j, i)) != value:
                raise ValidationError(f"Pairing is not symmetric at ({i}, {j})")
            gi, gj = self.variables[i].ghost, self.variables[j].ghost
            if gi + gj != -1:
                raise ValidationError(
                    f"Paired variables {self.variables[i].label}, {self.variables[j].label} "
                    f"have ghost numbers {gi} + {gj} != -1"
                )
        seen: set[int] = set()
        for i, j in self.darboux_pairs:
            if i in seen or j in seen:
                raise ValidationError(f"Variable appears in more than one Darboux pair: ({i}, {j})")
            seen.update((i, j))

    @classmethod
    def from_darboux(cls, variables: Iterable[Variable], pairs: Iterable[tuple[int, int]]) -> "VariableSpace":
        pairs = tuple(pairs)
        pairing = {}
        for i, j in pairs:
            pairing[(i, j)] = Fraction(1)
            pairing[(j, i)] = Fraction(1)
        return cls(tuple(variables), pairing, pairs)

    @property
    def size(self) -> int:
        return len(self.variables)

    @cached_property
    def parity(self) -> tuple[int, ...]:
        return tuple(v.parity for v in self.variables)

    @cached_property
    def ghosts(self) -> tuple[int, ...]:
        return tuple(v.ghost for v in self.variables)

    @cached_property
    def bivector(self) -> dict[int, list[tuple[int, Fraction]]]:
        """Rows of the inverse pairing, inverted block by block over connected components."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.size))
        graph.add_edges_from((i, j) for (i, j), value in self.pairing.items() if value)
        rows: dict[int, list[tuple[int, Fraction]]] = {}
        for component in nx.connected_components(graph):
            block = sorted(component)
            if len(block) == 1 and not self.pairing.get((block[0], block[0])):
                raise ValidationError(f"Degenerate pairing: variable {self.variables[block[0]].label} is unpaired")
            pos = {v: k for k, v in enumerate(block)}
            local = {
                (pos[i], pos[j]): value
                for (i, j), value in self.pairing.items()
                if value and i in pos and j in pos
            }
            matrix = sympy_matrix(len(block), len(block), local)
            if matrix.det() == 0:
                raise ValidationError(f"Degenerate pairing on variables {block}")
            inverse = matrix.inv()
            for a, i in enumerate(block):
                entries = [(j, to_fraction(inverse[a, b])) for b, j in enumerate(block) if inverse[a, b] != 0]
                if entries:
                    rows[i] = entries
        return rows

    def compatible(self, other: "VariableSpace") -> bool:
        return self is other or (self.variables == other.variables and dict(self.pairing) == dict(other.pairing))

    def monomial_ghost(self, m: Monomial) -> int:
        return sum(self.ghosts[v] for v in m)

    def index(self, label: str) -> int:
        for i, v in enumerate(self.variables):
            if v.label == label:
                return i
        raise ValidationError(f"Unknown variable {label!r}")


def laplacian_terms(terms: Mapping[Monomial, Coeff], space: VariableSpace) -> Terms:
    """Delta f = 1/2 sum c^{XY} d_X d_Y f."""
    parity = space.parity
    bivector = space.bivector
    out: Terms = {}
    present = variables_of(terms)
    half = Fraction(1, 2)
    for y in sorted(present):
        partners = [(x, c) for x, c in bivector.get(y, ()) if x in present]
        if not partners:
            continue
        dy = derive_terms(terms, y, parity)
        for x, c in partners:
            for m, value in derive_terms(dy, x, parity).items():
                add_term(out, m, value * (c * half))
    return out


def bracket_terms(f: Mapping[Monomial, Coeff], g: Mapping[Monomial, Coeff], space: VariableSpace) -> Terms:
    """{f, g} = sum c^{XY} (-1)^{|f| |X|} d_X f d_Y g, term by term in the parity of f."""
    parity = space.parity
    bivector = space.bivector
    out: Terms = {}
    g_vars = variables_of(g)
    g_derivatives: dict[int, Terms] = {}
    f_even, f_odd = split_by_parity(f, parity)
    for f_part, f_parity in ((f_even, 0), (f_odd, 1)):
        if not f_part:
            continue
        for x in sorted(variables_of(f_part)):
            partners = [(y, c) for y, c in bivector.get(x, ()) if y in g_vars]
            if not partners:
                continue
            dx = derive_terms(f_part, x, parity)
            if f_parity and parity[x]:
                dx = scale_terms(dx, Fraction(-1))
            for y, c in partners:
                if y not in g_derivatives:
                    g_derivatives[y] = derive_terms(g, y, parity)
                for m, value in mul_terms(dx, g_derivatives[y], parity).items():
                    add_term(out, m, value * c)
    return out


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True, eq=False)
class GradedPolynomial:
    space: VariableSpace
    terms: Mapping[Monomial, Coeff]

    def __post_init__(self):
        parity = self.space.parity
        cleaned: Terms = {}
        for m, c in self.terms.items():
            if list(m) != sorted(m):
                raise ValidationError(f"Monomial {m} is not in canonical order")
            odd = [v for v in m if parity[v]]
            if len(set(odd)) != len(odd):
                raise ValidationError(f"Odd variable repeated in monomial {m}")
            if c:
                cleaned[m] = c
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def constant(cls, space: VariableSpace, c: Coeff) -> "GradedPolynomial":
        return cls(space, {(): c})

    @classmethod
    def variable(cls, space: VariableSpace, v: int, c: Coeff = Fraction(1)) -> "GradedPolynomial":
        return cls(space, {(v,): c})

    def _check(self, other: "GradedPolynomial") -> None:
        if not self.space.compatible(other.space):
            raise ValidationError("Polynomials live over different variable spaces")

    def __add__(self, other: "GradedPolynomial") -> "GradedPolynomial":
        self._check(other)
        return GradedPolynomial(self.space, add_terms(self.terms, other.terms))

    def __neg__(self) -> "GradedPolynomial":
        return GradedPolynomial(self.space, scale_terms(self.terms, Fraction(-1)))

    def __sub__(self, other: "GradedPolynomial") -> "GradedPolynomial":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GradedPolynomial):
            return poly_mul(self, other)
        if isinstance(other, int | Fraction | JetScalar):
            return GradedPolynomial(self.space, scale_terms(self.terms, other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, int | Fraction | JetScalar):
            return GradedPolynomial(self.space, scale_terms(self.terms, other))
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.space.compatible(other.space) and dict(self.terms) == dict(other.terms)

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not self.terms

    def ghost_numbers(self) -> set[int]:
        return {self.space.monomial_ghost(m) for m in self.terms}

    def degree_in(self, variables: Iterable[int]) -> set[int]:
        """Total degrees of the terms in the given set of variables."""
        chosen = set(variables)
        return {sum(1 for v in m if v in chosen) for m in self.terms}


def poly_mul(p: GradedPolynomial, q: GradedPolynomial) -> GradedPolynomial:
    p._check(q)
    return GradedPolynomial(p.space, mul_terms(p.terms, q.terms, p.space.parity))


def left_derivative(p: GradedPolynomial, v: int) -> GradedPolynomial:
    if not 0 <= v < p.space.size:
        raise ValidationError(f"Unknown variable index {v}")
    return GradedPolynomial(p.space, derive_terms(p.terms, v, p.space.parity))


def bv_laplacian(p: GradedPolynomial, vs: VariableSpace | None = None) -> GradedPolynomial:
    space = vs or p.space
    if not space.compatible(p.space):
        raise ValidationError("Laplacian taken over a different variable space")
    return GradedPolynomial(p.space, laplacian_terms(p.terms, space))


def antibracket(p: GradedPolynomial, q: GradedPolynomial, vs: VariableSpace | None = None) -> GradedPolynomial:
    p._check(q)
    space = vs or p.space
    return GradedPolynomial(p.space, bracket_terms(p.terms, q.terms, space))


# ---------------------------------------------------------------------------
# series in hbar


@dataclass(frozen=True, eq=False)
class GradedSeries:
    """Truncated power series in hbar with polynomial coefficients; negative powers allowed."""

    space: VariableSpace
    truncation_order: int
    coefficients: Mapping[int, Mapping[Monomial, Coeff]]

    def __post_init__(self):
        cleaned = {
            k: dict(terms)
            for k, terms in sorted(self.coefficients.items())
            if k <= self.truncation_order and any(terms.values())
        }
        for terms in cleaned.values():
            for m in [m for m, c in terms.items() if not c]:
                del terms[m]
        object.__setattr__(self, "coefficients", cleaned)

    @classmethod
    def from_polynomial(cls, p: GradedPolynomial, truncation_order: int, order: int = 0) -> "GradedSeries":
        return cls(p.space, truncation_order, {order: dict(p.terms)})

    @classmethod
    def zero(cls, space: VariableSpace, truncation_order: int) -> "GradedSeries":
        return cls(space, truncation_order, {})

    def coefficient(self, k: int) -> GradedPolynomial:
        return GradedPolynomial(self.space, self.coefficients.get(k, {}))

    @property
    def orders(self) -> list[int]:
        return sorted(self.coefficients)

    def is_zero(self) -> bool:
        return not self.coefficients

    def _combine(self, other: "GradedSeries", sign: int) -> "GradedSeries":
        if not self.space.compatible(other.space):
            raise ValidationError("Series live over different variable spaces")
        order = min(self.truncation_order, other.truncation_order)
        out = {k: dict(v) for k, v in self.coefficients.items()}
        for k, terms in other.coefficients.items():
            out[k] = add_terms(out.get(k, {}), terms if sign > 0 else scale_terms(terms, Fraction(-1)))
        return GradedSeries(self.space, order, out)

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        return self._combine(other, 1)

    def __sub__(self, other: "GradedSeries") -> "GradedSeries":
        return self._combine(other, -1)

    def __neg__(self) -> "GradedSeries":
        return self.scale(Fraction(-1))

    def scale(self, s: Coeff) -> "GradedSeries":
        return GradedSeries(
            self.space, self.truncation_order, {k: scale_terms(v, s) for k, v in self.coefficients.items()}
        )

    def shift(self, k: int) -> "GradedSeries":
        """Multiply by hbar**k."""
        return GradedSeries(
            self.space, self.truncation_order, {order + k: v for order, v in self.coefficients.items()}
        )

    def truncate(self, order: int) -> "GradedSeries":
        return GradedSeries(self.space, min(order, self.truncation_order), self.coefficients)

    def __mul__(self, other: "GradedSeries") -> "GradedSeries":
        if not self.space.compatible(other.space):
            raise ValidationError("Series live over different variable spaces")
        order = min(self.truncation_order, other.truncation_order)
        out: dict[int, Terms] = {}
        parity = self.space.parity
        for i, a in self.coefficients.items():
            for j, b in other.coefficients.items():
                if i + j > order:
                    continue
                out[i + j] = add_terms(out.get(i + j, {}), mul_terms(a, b, parity))
        return GradedSeries(self.space, order, out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedSeries):
            return NotImplemented
        if not self.space.compatible(other.space):
            return False
        order = min(self.truncation_order, other.truncation_order)
        mine = {k: v for k, v in self.coefficients.items() if k <= order}
        theirs = {k: v for k, v in other.coefficients.items() if k <= order}
        return mine == theirs

    __hash__ = None  # type: ignore[assignment]

    def require_nonnegative(self) -> "GradedSeries":
        negative = [k for k in self.coefficients if k < 0]
        if negative:
            raise ResidualTermError(f"Uncancelled negative hbar powers: {negative}")
        return self

    def map_terms(self, fn) -> "GradedSeries":
        return GradedSeries(self.space, self.truncation_order, {k: fn(v) for k, v in self.coefficients.items()})

    def up_to_degree(self, degree: int) -> "GradedSeries":
        """Drop monomials of total degree above ``degree``."""
        return self.map_terms(lambda terms: {m: c for m, c in terms.items() if len(m) <= degree})

    def split_jet(self) -> tuple["GradedSeries", "GradedSeries"]:
        """Value and eps-derivative parts of a jet-valued series."""
        values: dict[int, Terms] = {}
        derivatives: dict[int, Terms] = {}
        for k, terms in self.coefficients.items():
            values[k], derivatives[k] = split_jet_terms(terms)
        return (
            GradedSeries(self.space, self.truncation_order, values),
            GradedSeries(self.space, self.truncation_order, derivatives),
        )


def series_laplacian(s: GradedSeries) -> GradedSeries:
    return s.map_terms(lambda terms: laplacian_terms(terms, s.space))


def series_bracket(s: GradedSeries, t: GradedSeries) -> GradedSeries:
    if not s.space.compatible(t.space):
        raise ValidationError("Series live over different variable spaces")
    order = min(s.truncation_order, t.truncation_order)
    out: dict[int, Terms] = {}
    for i, a in s.coefficients.items():
        for j, b in t.coefficients.items():
            if i + j <= order:
                out[i + j] = add_terms(out.get(i + j, {}), bracket_terms(a, b, s.space))
    return GradedSeries(s.space, order, out)


def series_exp(x: GradedSeries, max_power: int) -> GradedSeries:
    """sum_{k <= max_power} x^k / k!; exact when x is nilpotent of that order."""
    result = GradedSeries(x.space, x.truncation_order, {0: {(): Fraction(1)}})
    power = result
    for k in range(1, max_power + 1):
        power = power * x
        if power.is_zero():
            break
        result = result + power.scale(Fraction(1, factorial(k)))
    return result


def canonical_transform(s: GradedSeries, r: GradedSeries, vs: VariableSpace | None = None) -> GradedSeries:
    """S + {S, R} + hbar Delta R."""
    space = vs or s.space
    if not space.compatible(s.space) or not space.compatible(r.space):
        raise ValidationError("Canonical transformation across different variable spaces")
    ghosts = {space.monomial_ghost(m) for terms in r.coefficients.values() for m in terms}
    if ghosts - {-1}:
        raise PreconditionError(f"Generator must have ghost number -1, found {sorted(ghosts)}")
    return (s + series_bracket(s, r) + series_laplacian(r).shift(1)).truncate(s.truncation_order)


def qme_defect(s: GradedSeries, vs: VariableSpace | None = None) -> GradedSeries:
    """1/2 {S, S} + hbar Delta S, truncated at the order of S."""
    space = vs or s.space
    if not space.compatible(s.space):
        raise ValidationError("QME defect taken over a different variable space")
    half_bracket = series_bracket(s, s).scale(Fraction(1, 2))
    return (half_bracket + series_laplacian(s).shift(1)).truncate(s.truncation_order)
