"""dg Frobenius algebras, quadratic Lie algebras and the abstract Chern-Simons action.

Structure constants are stored as sparse dicts of exact rationals:

* ``pairing[(I, J)] = pi(e_I, e_J)``
* ``product[(I, J, K)] = pi(e_I, e_J e_K)`` (every permutation stored)
* ``differential[(I, J)] = pi(e_I, d e_J)``
"""

import itertools
import random
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

import sympy

from .exceptions import ParseError, ValidationError
from .graded import GradedPolynomial, GradedSeries, Terms, Variable, VariableSpace, add_term, normal_form
from .rational import random_rational, sympy_matrix, to_fraction


class Violation(NamedTuple):
    axiom: str
    witness: tuple[int, ...]
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, axiom: str, witness: Iterable[int], detail: str) -> None:
        self.violations.append(Violation(axiom, tuple(witness), detail))

    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def raise_if_failed(self, what: str) -> None:
        if self.violations:
            first = self.violations[0]
            raise ValidationError(
                f"{what} violates {len(self.violations)} axiom check(s); first: {first.axiom} "
                f"at {first.witness}: {first.detail}"
            )


def koszul_sign(degrees: Iterable[int], perm: tuple[int, ...]) -> int:
    """Sign of reordering graded elements into the order ``perm``."""
    degs = list(degrees)
    sign = 1
    for a, b in itertools.combinations(range(len(perm)), 2):
        if perm[a] > perm[b] and degs[perm[a]] % 2 and degs[perm[b]] % 2:
            sign = -sign
    return sign


def fill_graded_symmetric(
    entries: Mapping[tuple[int, int, int], Fraction], degrees: tuple[int, ...]
) -> dict[tuple[int, int, int], Fraction]:
    """Close a cubic tensor under the Koszul-signed action of S3."""
    out: dict[tuple[int, int, int], Fraction] = {}
    for key, value in entries.items():
        if not value:
            continue
        key_degrees = [degrees[i] for i in key]
        for perm in itertools.permutations(range(3)):
            target = tuple(key[p] for p in perm)
            signed = value * koszul_sign(key_degrees, perm)
            existing = out.get(target)
            if existing is not None and existing != signed:
                raise ValidationError(f"Product entries {key} and {target} are inconsistent with graded symmetry")
            out[target] = signed
    return out


def fill_symmetric_pairing(entries: Mapping[tuple[int, int], Fraction]) -> dict[tuple[int, int], Fraction]:
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j), value in entries.items():
        if not value:
            continue
        for key in ((i, j), (j, i)):
            if out.get(key, value) != value:
                raise ValidationError(f"Pairing entries ({i}, {j}) and ({j}, {i}) disagree")
            out[key] = value
    return out


def fill_skew_differential(
    entries: Mapping[tuple[int, int], Fraction], degrees: tuple[int, ...]
) -> dict[tuple[int, int], Fraction]:
    """Complete d_IJ using pi(da, b) + (-1)^|a| pi(a, db) = 0, i.e. d_JI = (-1)^(|I|+1) d_IJ."""
    out: dict[tuple[int, int], Fraction] = {}
    for (i, j), value in entries.items():
        if not value:
            continue
        mirrored = value if degrees[i] % 2 else -value
        for key, v in (((i, j), value), ((j, i), mirrored)):
            if out.get(key, v) != v:
                raise ValidationError(f"Differential entries ({i}, {j}) and ({j}, {i}) violate skew-adjointness")
            out[key] = v
    return out


# ---------------------------------------------------------------------------
# dg Frobenius algebras


@dataclass(frozen=True, eq=False)
class DgFrobeniusAlgebra:
    labels: tuple[str, ...]
    degrees: tuple[int, ...]
    pairing: Mapping[tuple[int, int], Fraction]
    product: Mapping[tuple[int, int, int], Fraction]
    differential: Mapping[tuple[int, int], Fraction]
    unit: int
    name: str = "algebra"

    @property
    def dim(self) -> int:
        return len(self.degrees)

    def indices_of_degree(self, k: int) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == k]

    @cached_property
    def pairing_matrix(self) -> sympy.Matrix:
        return sympy_matrix(self.dim, self.dim, dict(self.pairing))

    @cached_property
    def pairing_inverse(self) -> sympy.Matrix:
        if self.pairing_matrix.rank() < self.dim:
            raise ValidationError(f"Pairing of {self.name} is degenerate")
        return self.pairing_matrix.inv()

    @cached_property
    def differential_matrix(self) -> sympy.Matrix:
        """Matrix of d acting on coordinates: column J holds d e_J."""
        return self.pairing_inverse * sympy_matrix(self.dim, self.dim, dict(self.differential))

    @cached_property
    def left_multiplication(self) -> tuple[sympy.Matrix, ...]:
        """L_J with L_J[L, K] the e_L-coefficient of e_J e_K."""
        tensors = []
        for j in range(self.dim):
            lowered = {(i, k): v for (i, jj, k), v in self.product.items() if jj == j}
            tensors.append(self.pairing_inverse * sympy_matrix(self.dim, self.dim, lowered))
        return tuple(tensors)

    def multiply(self, a: sympy.Matrix, b: sympy.Matrix) -> sympy.Matrix:
        """Product of two coordinate vectors."""
        out = sympy.zeros(self.dim, 1)
        for j in range(self.dim):
            if a[j, 0] != 0:
                out += a[j, 0] * (self.left_multiplication[j] * b)
        return out

    def pair(self, a: sympy.Matrix, b: sympy.Matrix) -> sympy.Rational:
        return (a.T * self.pairing_matrix * b)[0, 0]

    def basis_vector(self, i: int) -> sympy.Matrix:
        v = sympy.zeros(self.dim, 1)
        v[i, 0] = 1
        return v

    @cached_property
    def betti(self) -> tuple[int, int, int, int]:
        d = self.differential_matrix
        ranks = []
        for k in range(4):
            cols = self.indices_of_degree(k)
            ranks.append(d.extract(list(range(self.dim)), cols).rank() if cols else 0)
        return tuple(len(self.indices_of_degree(k)) - ranks[k] - (ranks[k - 1] if k else 0) for k in range(4))  # type: ignore[return-value]


def validate_frobenius(C: DgFrobeniusAlgebra) -> ValidationReport:
    report = ValidationReport()
    degrees = C.degrees
    n = C.dim

    for i, d in enumerate(degrees):
        if d not in (0, 1, 2, 3):
            report.add("degree-range", (i,), f"basis element {C.labels[i]} has degree {d}")
    if not 0 <= C.unit < n or degrees[C.unit] != 0:
        report.add("unit", (C.unit,), "unit index must point at a degree-0 basis element")
        return report

    for (i, j), v in C.pairing.items():
        if v and degrees[i] + degrees[j] != 3:
            report.add("pairing-degree", (i, j), f"pi({C.labels[i]}, {C.labels[j]}) = {v} but degrees sum to {degrees[i] + degrees[j]}")
        if C.pairing.get((j, i), Fraction(0)) != v:
            report.add("pairing-symmetry", (i, j), "pi is not graded symmetric")
    if C.pairing_matrix.rank() < n:
        null = C.pairing_matrix.nullspace()[0]
        witness = tuple(k for k in range(n) if null[k, 0] != 0)
        report.add("nondegeneracy", witness, "pairing matrix is singular")
        return report

    for (i, j), v in C.differential.items():
        if v and degrees[i] + degrees[j] != 2:
            report.add("differential-degree", (i, j), f"d_({i},{j}) = {v} does not have degree +1")
        mirrored = C.differential.get((j, i), Fraction(0))
        expected = v if degrees[i] % 2 else -v
        if mirrored != expected:
            report.add("differential-skew", (i, j), "pi(da, b) + (-1)^|a| pi(a, db) != 0")

    D = C.differential_matrix
    D2 = D * D
    for r, c in itertools.product(range(n), range(n)):
        if D2[r, c] != 0:
            report.add("d-squared", (c, r), f"d(d {C.labels[c]}) has {C.labels[r]}-component {D2[r, c]}")
            break

    for (i, j, k), v in C.product.items():
        if v and degrees[i] + degrees[j] + degrees[k] != 3:
            report.add("product-degree", (i, j, k), f"m_({i},{j},{k}) = {v} has wrong total degree")
        key_degrees = [degrees[i], degrees[j], degrees[k]]
        for perm in itertools.permutations(range(3)):
            target = tuple((i, j, k)[p] for p in perm)
            if C.product.get(target, Fraction(0)) != v * koszul_sign(key_degrees, perm):
                report.add("cyclicity", (i, j, k), f"m is not graded symmetric under {perm}")
                break

    L = C.left_multiplication
    if L[C.unit] != sympy.eye(n):
        diff = L[C.unit] - sympy.eye(n)
        col = next(c for c in range(n) if any(diff[r, c] != 0 for r in range(n)))
        report.add("unit", (C.unit, col), f"1 * {C.labels[col]} != {C.labels[col]}")

    for j, k in itertools.product(range(n), range(n)):
        lhs = L[j] * L[k]
        rhs = sympy.zeros(n, n)
        for q in range(n):
            coeff = L[j][q, k]
            if coeff != 0:
                rhs += coeff * L[q]
        if lhs != rhs:
            col = next(c for c in range(n) if any((lhs - rhs)[r, c] != 0 for r in range(n)))
            report.add("associativity", (j, k, col), "(ab)c != a(bc)")

    for j in range(n):
        sign = -1 if degrees[j] % 2 else 1
        lhs = D * L[j] - sign * L[j] * D
        rhs = sympy.zeros(n, n)
        for q in range(n):
            if D[q, j] != 0:
                rhs += D[q, j] * L[q]
        if lhs != rhs:
            col = next(c for c in range(n) if any((lhs - rhs)[r, c] != 0 for r in range(n)))
            report.add("leibniz", (j, col), "d(ab) != (da)b + (-1)^|a| a(db)")

    if report.ok:
        b = C.betti
        if b[0] != 1 or b[3] != 1:
            report.warnings.append(f"Betti numbers {b}: B0 = B3 = 1 is required for the Chern-Simons action")
    return report


def check_antisymmetric(mu: Mapping[tuple[int, int, int], Fraction], size: int) -> None:
    for (i, j, k), v in mu.items():
        if not all(0 <= x < size for x in (i, j, k)):
            raise ValidationError(f"mu index {(i, j, k)} out of range")
        if v and len({i, j, k}) < 3:
            raise ValidationError(f"mu{(i, j, k)} must vanish on repeated indices")
        for perm in itertools.permutations(range(3)):
            target = tuple((i, j, k)[p] for p in perm)
            if mu.get(target, Fraction(0)) != v * koszul_sign((1, 1, 1), perm):
                raise ValidationError(f"mu is not totally antisymmetric at {(i, j, k)} -> {target}")


def antisymmetric_tensor(entries: Mapping[tuple[int, int, int], Fraction]) -> dict[tuple[int, int, int], Fraction]:
    """Totally antisymmetric completion of the given entries."""
    return fill_graded_symmetric(entries, (1,) * (1 + max((max(k) for k in entries), default=0)))


def _minimal_parts(dimV: int, mu: Mapping[tuple[int, int, int], Fraction]):
    check_antisymmetric(mu, dimV)
    labels = ("1", *(f"e{i + 1}" for i in range(dimV)), *(f"e^{i + 1}" for i in range(dimV)), "v")
    degrees = (0, *([1] * dimV), *([2] * dimV), 3)
    top = 2 * dimV + 1
    pairing = {(0, top): Fraction(1)}
    product: dict[tuple[int, int, int], Fraction] = {(0, 0, top): Fraction(1)}
    for i in range(dimV):
        pairing[(1 + i, 1 + dimV + i)] = Fraction(1)
        product[(0, 1 + i, 1 + dimV + i)] = Fraction(1)
    for (i, j, k), v in mu.items():
        if i < j < k and v:
            product[(1 + k, 1 + i, 1 + j)] = v
    return labels, degrees, fill_symmetric_pairing(pairing), fill_graded_symmetric(product, degrees)


def make_minimal(dimV: int, mu: Mapping[tuple[int, int, int], Fraction]) -> DgFrobeniusAlgebra:
    labels, degrees, pairing, product = _minimal_parts(dimV, mu)
    return DgFrobeniusAlgebra(labels, degrees, pairing, product, {}, 0, name=f"minimal:{dimV}")


def make_degree12(
    dimV: int,
    mu: Mapping[tuple[int, int, int], Fraction],
    delta: Mapping[tuple[int, int], Fraction],
    name: str | None = None,
) -> DgFrobeniusAlgebra:
    """Minimal algebra with d e_i = sum_j delta_ij e^j."""
    for (i, j), v in delta.items():
        if delta.get((j, i), Fraction(0)) != v:
            raise ValidationError(f"delta must be symmetric, entry {(i, j)} differs from {(j, i)}")
    labels, degrees, pairing, product = _minimal_parts(dimV, mu)
    differential = {(1 + j, 1 + i): v for (i, j), v in delta.items() if v}
    return DgFrobeniusAlgebra(labels, degrees, pairing, product, differential, 0, name=name or f"degree12:{dimV}")


def make_ce_su2() -> DgFrobeniusAlgebra:
    """Chevalley-Eilenberg complex of su(2)."""
    labels = ("1", "e1", "e2", "e3", "e23", "e31", "e12", "e123")
    degrees = (0, 1, 1, 1, 2, 2, 2, 3)
    pairing = fill_symmetric_pairing(
        {(0, 7): Fraction(1), (1, 4): Fraction(1), (2, 5): Fraction(1), (3, 6): Fraction(1)}
    )
    product = fill_graded_symmetric(
        {
            (0, 0, 7): Fraction(1),
            (0, 1, 4): Fraction(1),
            (0, 2, 5): Fraction(1),
            (0, 3, 6): Fraction(1),
            (3, 1, 2): Fraction(1),  # e1 e2 = e12, paired with e3
        },
        degrees,
    )
    # d e1 = e23, d e2 = e31, d e3 = e12
    differential = {(1, 1): Fraction(1), (2, 2): Fraction(1), (3, 3): Fraction(1)}
    return DgFrobeniusAlgebra(labels, degrees, pairing, product, differential, 0, name="ce-su2")


def make_doubled(
    V0dim: int,
    V1dim: int,
    d_V: Mapping[tuple[int, int], Fraction],
    m_V: Mapping[tuple[int, int, int], Fraction],
    name: str = "doubled",
) -> DgFrobeniusAlgebra:
    """C = V + V*[-3] for a unital commutative dga V in degrees 0, 1 (index 0 is the unit of V).

    ``d_V[(Q, J)]`` is the e_Q-coefficient of d e_J; ``m_V[(J, K, Q)]`` the e_Q-coefficient of e_J e_K.
    """
    n = V0dim + V1dim
    v_degrees = (0,) * V0dim + (1,) * V1dim
    def star(p: int) -> int:
        return 2 * n - 1 - p

    v_labels = [f"x{i}" if i else "1" for i in range(V0dim)] + [f"y{i + 1}" for i in range(V1dim)]
    if V0dim == 2 and V1dim == 1:
        v_labels = ["1", "x", "y"]
    labels = tuple(v_labels + [f"{v_labels[star(s)]}*" for s in range(n, 2 * n)])
    degrees = (0,) * V0dim + (1,) * V1dim + (2,) * V1dim + (3,) * V0dim

    mult: dict[tuple[int, int, int], Fraction] = {}
    for p in range(n):
        mult[(0, p, p)] = Fraction(1)
        mult[(p, 0, p)] = Fraction(1)
    for (j, k, q), v in m_V.items():
        if not v:
            continue
        if 0 in (j, k):
            raise ValidationError("Products with the unit of V are implied and must not be listed")
        if v_degrees[j] + v_degrees[k] != v_degrees[q]:
            raise ValidationError(f"Product entry {(j, k, q)} has the wrong degree")
        mirrored = -v if v_degrees[j] and v_degrees[k] else v
        for key, value in (((j, k, q), v), ((k, j, q), mirrored)):
            if mult.get(key, value) != value:
                raise ValidationError(f"Product of V is not graded commutative at {key}")
            mult[key] = value
    for (q, j), v in d_V.items():
        if v and not (v_degrees[j] == 0 and v_degrees[q] == 1):
            raise ValidationError(f"Differential entry {(q, j)} of V must map degree 0 to degree 1")

    # unit of V times itself already gives m_{1*, 1, 1}
    pairing = fill_symmetric_pairing({(p, star(p)): Fraction(1) for p in range(n)})
    product = fill_graded_symmetric({(star(q), j, k): v for (j, k, q), v in mult.items() if j <= k}, degrees)
    differential = fill_skew_differential({(star(q), j): v for (q, j), v in d_V.items() if v}, degrees)
    algebra = DgFrobeniusAlgebra(labels, degrees, pairing, product, differential, 0, name=name)
    report = validate_frobenius(algebra)
    if not report.ok:
        report.raise_if_failed(f"Doubled algebra {name}")
    return algebra


# ---------------------------------------------------------------------------
# named fixtures


def mu_preset(dimV: int, preset: str) -> dict[tuple[int, int, int], Fraction]:
    if preset == "zero" or dimV < 3:
        return {}
    if preset != "eps":
        raise ParseError(f"Unknown mu preset {preset!r} (expected 'zero' or 'eps')")
    entries = {(0, 1, 2): Fraction(1)}
    if dimV >= 4:
        entries[(0, 1, 3)] = Fraction(1)
    return antisymmetric_tensor(entries)


def make_doubled_xy() -> DgFrobeniusAlgebra:
    return make_doubled(2, 1, {(2, 1): Fraction(1)}, {}, name="doubled:xy")


def make_doubled_chain(length: int) -> DgFrobeniusAlgebra:
    d_V = {(1 + length + i, 1 + i): Fraction(1) for i in range(length)}
    return make_doubled(1 + length, length, d_V, {}, name=f"doubled:chain{length}")


def builtin_algebra(spec: str) -> DgFrobeniusAlgebra:
    """Resolve a built-in fixture name such as ``ce-su2``, ``minimal:3,eps``, ``degree12:4,2`` or ``doubled:xy``."""
    kind, _, args = spec.partition(":")
    try:
        if kind == "ce-su2" and not args:
            return make_ce_su2()
        if kind == "minimal":
            dim_text, _, preset = args.partition(",")
            dimV = int(dim_text)
            return make_minimal(dimV, mu_preset(dimV, preset or "eps"))
        if kind == "degree12":
            dim_text, _, rank_text = args.partition(",")
            dimV, rank = int(dim_text), int(rank_text or dim_text)
            if not 0 <= rank <= dimV:
                raise ParseError(f"rank {rank} must lie between 0 and {dimV}")
            delta = {(i, i): Fraction(1) for i in range(rank)}
            return make_degree12(dimV, mu_preset(dimV, "eps"), delta, name=f"degree12:{dimV},{rank}")
        if kind == "doubled":
            if args == "trivial":
                return make_doubled(1, 0, {}, {}, name="doubled:trivial")
            if args == "xy":
                return make_doubled_xy()
            if args.startswith("chain"):
                return make_doubled_chain(int(args.removeprefix("chain") or 1))
    except ValueError as e:
        raise ParseError(f"Invalid fixture arguments in {spec!r}: {e}") from e
    raise ParseError(f"Unknown built-in algebra {spec!r}")


def random_degree12(seed: int, dimV: int = 3) -> DgFrobeniusAlgebra:
    rng = random.Random(seed)
    delta: dict[tuple[int, int], Fraction] = {}
    for i in range(dimV):
        for j in range(i, dimV):
            v = random_rational(rng, nonzero=False)
            if v:
                delta[(i, j)] = delta[(j, i)] = v
    mu = {}
    if dimV >= 3:
        mu = antisymmetric_tensor({key: random_rational(rng) for key in itertools.combinations(range(dimV), 3)})
    return make_degree12(dimV, mu, delta, name=f"random-degree12:{seed}")


def random_doubled(seed: int, zeros: int = 1, ones: int = 2) -> DgFrobeniusAlgebra:
    """Doubled algebra of V = span(1, x_i) + span(y_j) with random injective d x_i; B1 = ones - zeros."""
    if zeros > ones:
        raise ValidationError("d: V^0/R -> V^1 cannot be injective when zeros > ones")
    rng = random.Random(seed)
    while True:
        entries = {(1 + zeros + q, 1 + i): random_rational(rng, nonzero=False) for i in range(zeros) for q in range(ones)}
        matrix = sympy.Matrix(zeros, ones, lambda i, q: entries[(1 + zeros + q, 1 + i)])
        if matrix.rank() == zeros:
            break
    d_V = {k: v for k, v in entries.items() if v}
    return make_doubled(1 + zeros, ones, d_V, {}, name=f"random-doubled:{seed}")


# ---------------------------------------------------------------------------
# quadratic Lie algebras


@dataclass(frozen=True, eq=False)
class QuadraticLieAlgebra:
    """Lie algebra with invariant metric g; ``f[(a, b, c)] = g([t_a, t_b], t_c)`` (all permutations stored)."""

    dim: int
    f: Mapping[tuple[int, int, int], Fraction]
    metric: Mapping[tuple[int, int], Fraction] | None = None
    name: str = "lie"

    @cached_property
    def metric_entries(self) -> dict[tuple[int, int], Fraction]:
        if self.metric is None:
            return {(a, a): Fraction(1) for a in range(self.dim)}
        return {k: v for k, v in self.metric.items() if v}

    @cached_property
    def inverse_metric(self) -> dict[tuple[int, int], Fraction]:
        matrix = sympy_matrix(self.dim, self.dim, self.metric_entries)
        if matrix.rank() < self.dim:
            raise ValidationError(f"Metric of {self.name} is degenerate")
        inverse = matrix.inv()
        return {
            (a, b): to_fraction(inverse[a, b]) for a in range(self.dim) for b in range(self.dim) if inverse[a, b] != 0
        }

    @cached_property
    def inverse_rows(self) -> dict[int, list[tuple[int, Fraction]]]:
        rows: dict[int, list[tuple[int, Fraction]]] = {}
        for (a, b), v in sorted(self.inverse_metric.items()):
            rows.setdefault(a, []).append((b, v))
        return rows

    def bracket_coefficients(self, a: int, b: int) -> dict[int, Fraction]:
        """[t_a, t_b] = sum_c coeff[c] t_c."""
        out: dict[int, Fraction] = {}
        for e in range(self.dim):
            v = self.f.get((a, b, e))
            if not v:
                continue
            for c, g in self.inverse_rows.get(e, ()):
                out[c] = out.get(c, Fraction(0)) + v * g
        return {c: v for c, v in out.items() if v}

    def contraction_norm(self) -> Fraction:
        """sum f_abc f^abc with indices raised by the inverse metric."""
        raised: dict[tuple[int, int, int], Fraction] = {}
        for (a, b, c), v in self.f.items():
            for a2, ga in self.inverse_rows.get(a, ()):
                for b2, gb in self.inverse_rows.get(b, ()):
                    for c2, gc in self.inverse_rows.get(c, ()):
                        raised[(a2, b2, c2)] = raised.get((a2, b2, c2), Fraction(0)) + v * ga * gb * gc
        return sum((v * raised.get(k, Fraction(0)) for k, v in self.f.items()), Fraction(0))


def validate_quadratic_lie(g: QuadraticLieAlgebra) -> ValidationReport:
    report = ValidationReport()
    for (a, b), v in g.metric_entries.items():
        if g.metric_entries.get((b, a), Fraction(0)) != v:
            report.add("metric-symmetry", (a, b), "metric is not symmetric")
    try:
        _ = g.inverse_metric
    except ValidationError as e:
        report.add("metric-nondegeneracy", (), str(e))
        return report
    for (a, b, c), v in g.f.items():
        if not all(0 <= x < g.dim for x in (a, b, c)):
            report.add("index-range", (a, b, c), "structure constant index out of range")
            return report
        for perm in itertools.permutations(range(3)):
            target = tuple((a, b, c)[p] for p in perm)
            if g.f.get(target, Fraction(0)) != v * koszul_sign((1, 1, 1), perm):
                report.add("antisymmetry", (a, b, c), f"f is not totally antisymmetric under {perm}")
                break
    # [[a, b], c] + [[b, c], a] + [[c, a], b] = 0
    for a, b, c in itertools.combinations(range(g.dim), 3):
        total: dict[int, Fraction] = {}
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            for e, v in g.bracket_coefficients(x, y).items():
                for d, w in g.bracket_coefficients(e, z).items():
                    total[d] = total.get(d, Fraction(0)) + v * w
        bad = [d for d, v in total.items() if v]
        if bad:
            report.add("jacobi", (a, b, c, bad[0]), f"Jacobiator of (t{a}, t{b}, t{c}) has t{bad[0]}-component")
    return report


def make_su_n(N: int) -> QuadraticLieAlgebra:
    """su(N) with sum f_abc f^abc = N (N^2 - 1).

    N = 2 uses the orthonormal basis (f = epsilon). For N >= 3 the structure constants are
    taken in the split basis E_ij (i != j), H_k = E_kk - E_k+1,k+1 of the complexification with
    the metric -2 tr(xy); every contraction agrees with the compact form and stays rational.
    """
    if N < 2:
        raise ValidationError(f"su(N) needs N >= 2, got {N}")
    if N == 2:
        return QuadraticLieAlgebra(3, antisymmetric_tensor({(0, 1, 2): Fraction(1)}), None, name="su:2")
    basis: list[sympy.Matrix] = []
    for i, j in itertools.permutations(range(N), 2):
        m = sympy.zeros(N, N)
        m[i, j] = 1
        basis.append(m)
    for k in range(N - 1):
        m = sympy.zeros(N, N)
        m[k, k] = 1
        m[k + 1, k + 1] = -1
        basis.append(m)

    def form(x: sympy.Matrix, y: sympy.Matrix) -> Fraction:
        return to_fraction(-2 * (x * y).trace())

    dim = len(basis)
    metric = {(a, b): form(basis[a], basis[b]) for a in range(dim) for b in range(dim)}
    f: dict[tuple[int, int, int], Fraction] = {}
    for a, b in itertools.combinations(range(dim), 2):
        commutator = basis[a] * basis[b] - basis[b] * basis[a]
        for c in range(dim):
            v = form(commutator, basis[c])
            if v:
                f[(a, b, c)] = v
                f[(b, a, c)] = -v
    return QuadraticLieAlgebra(dim, f, {k: v for k, v in metric.items() if v}, name=f"su:{N}")


def make_abelian(dim: int) -> QuadraticLieAlgebra:
    return QuadraticLieAlgebra(dim, {}, None, name=f"abelian:{dim}")


def make_broken_jacobi() -> QuadraticLieAlgebra:
    """Totally antisymmetric f with f_123 = f_145 = 1 in dim 5; Jacobi fails on (t2, t3, t4)."""
    return QuadraticLieAlgebra(
        5, antisymmetric_tensor({(0, 1, 2): Fraction(1), (0, 3, 4): Fraction(1)}), None, name="broken-jacobi"
    )


def builtin_lie(spec: str) -> QuadraticLieAlgebra:
    """Resolve ``su:N`` or ``abelian:n``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "su":
            return make_su_n(int(arg))
        if kind == "abelian":
            return make_abelian(int(arg))
    except ValueError as e:
        raise ParseError(f"Invalid Lie algebra spec {spec!r}: {e}") from e
    raise ParseError(f"Unknown Lie algebra spec {spec!r} (expected su:N or abelian:n)")


# ---------------------------------------------------------------------------
# the Chern-Simons action


@dataclass(frozen=True, eq=False)
class BvAction:
    algebra: DgFrobeniusAlgebra
    lie: QuadraticLieAlgebra
    space: VariableSpace
    free_part: GradedPolynomial
    interaction: GradedPolynomial

    @property
    def action(self) -> GradedSeries:
        return GradedSeries(self.space, 1, {0: dict((self.free_part + self.interaction).terms)})


def field_index(I: int, a: int, lie_dim: int) -> int:
    return I * lie_dim + a


def field_space(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra) -> VariableSpace:
    """Coordinates w^{Ia} of ghost number 1 - |I| with sigma = pi (x) g."""
    variables = tuple(
        Variable(f"w[{C.labels[I]}|{a}]", 1 - C.degrees[I]) for I in range(C.dim) for a in range(g.dim)
    )
    pairing = {
        (field_index(I, a, g.dim), field_index(J, b, g.dim)): p * m
        for (I, J), p in C.pairing.items()
        if p
        for (a, b), m in g.metric_entries.items()
    }
    return VariableSpace(variables, pairing)


def cs_terms(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra) -> tuple[Terms, Terms]:
    """Quadratic and cubic parts of S = 1/2 pi(w, dw) + 1/6 pi(w, l(w, w)) in the w^{Ia} coordinates."""
    degrees = C.degrees
    parity = [(1 - degrees[I]) % 2 for I in range(C.dim) for _ in range(g.dim)]
    quadratic: Terms = {}
    half = Fraction(1, 2)
    for (I, J), d in C.differential.items():
        if not d:
            continue
        sign = 1 if degrees[I] % 2 else -1
        for (a, b), m in g.metric_entries.items():
            x, y = field_index(I, a, g.dim), field_index(J, b, g.dim)
            nf = normal_form((x, y), parity)
            if nf is None:
                continue
            key, koszul = nf
            add_term(quadratic, key, half * sign * koszul * d * m)
    cubic: Terms = {}
    sixth = Fraction(1, 6)
    for (I, J, K), mval in C.product.items():
        if not mval:
            continue
        sign = -1 if (degrees[J] * (degrees[K] + 1)) % 2 else 1
        for (a, b, c), fval in g.f.items():
            seq = (field_index(I, a, g.dim), field_index(J, b, g.dim), field_index(K, c, g.dim))
            nf = normal_form(seq, parity)
            if nf is None:
                continue
            key, koszul = nf
            add_term(cubic, key, sixth * sign * koszul * mval * fval)
    return quadratic, cubic


def build_cs_action(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, validate: bool = True) -> BvAction:
    if validate:
        report = validate_frobenius(C)
        report.raise_if_failed(f"Algebra {C.name}")
        validate_quadratic_lie(g).raise_if_failed(f"Lie algebra {g.name}")
        if C.betti[0] != 1 or C.betti[3] != 1:
            raise ValidationError(f"Algebra {C.name} has Betti numbers {C.betti}; B0 = B3 = 1 is required")
    space = field_space(C, g)
    quadratic, cubic = cs_terms(C, g)
    return BvAction(C, g, space, GradedPolynomial(space, quadratic), GradedPolynomial(space, cubic))
