"""Cohomology, induction data (iota, K) and their deformations.

All maps are sympy matrices acting on coordinate columns in the basis of the algebra.
Induction data always carry first-order jets (``JetMatrix``); undeformed data have a
zero tangent.
"""

import random
from collections.abc import Callable
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Literal, NamedTuple

import sympy

from .exceptions import PreconditionError, ValidationError
from .frobenius import DgFrobeniusAlgebra, ValidationReport
from .graded import EPSILON, Coeff, JetScalar
from .rational import random_rational, to_fraction


@dataclass(frozen=True, eq=False)
class JetMatrix:
    """Matrix ``value + eps * tangent`` with ``eps**2 = 0``."""

    value: sympy.Matrix
    tangent: sympy.Matrix

    @classmethod
    def lift(cls, m: "sympy.Matrix | JetMatrix") -> "JetMatrix":
        if isinstance(m, JetMatrix):
            return m
        return cls(m, sympy.zeros(*m.shape))

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __add__(self, other) -> "JetMatrix":
        o = JetMatrix.lift(other)
        return JetMatrix(self.value + o.value, self.tangent + o.tangent)

    def __sub__(self, other) -> "JetMatrix":
        o = JetMatrix.lift(other)
        return JetMatrix(self.value - o.value, self.tangent - o.tangent)

    def __neg__(self) -> "JetMatrix":
        return JetMatrix(-self.value, -self.tangent)

    def __matmul__(self, other) -> "JetMatrix":
        o = JetMatrix.lift(other)
        return JetMatrix(self.value * o.value, self.value * o.tangent + self.tangent * o.value)

    def scale(self, c) -> "JetMatrix":
        return JetMatrix(self.value * c, self.tangent * c)

    def map(self, fn: Callable[[sympy.Matrix], sympy.Matrix]) -> "JetMatrix":
        """Apply a linear map to both parts."""
        return JetMatrix(fn(self.value), fn(self.tangent))

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.value) and all(x == 0 for x in self.tangent)

    @property
    def is_jet(self) -> bool:
        return any(x != 0 for x in self.tangent)

    def entry(self, i: int, j: int) -> Coeff:
        v = to_fraction(self.value[i, j])
        t = self.tangent[i, j]
        if t == 0:
            return v
        return JetScalar(v, to_fraction(t))

    def first_nonzero(self) -> tuple[int, int] | None:
        rows, cols = self.shape
        for i in range(rows):
            for j in range(cols):
                if self.value[i, j] != 0 or self.tangent[i, j] != 0:
                    return i, j
        return None


def _sign_of_degree(k: int) -> int:
    return -1 if (k * (k - 1) // 2) % 2 else 1


def graded_transpose(
    X: sympy.Matrix,
    k: int,
    src_pairing: sympy.Matrix,
    tgt_pairing: sympy.Matrix,
    tgt_degrees: tuple[int, ...],
) -> sympy.Matrix:
    """Transpose of a degree-k map X: src -> tgt with respect to the pairings.

    Defined by pi_src(X^T a, b) = s(k) (-1)^(|a| k) pi_tgt(a, X b) with s(k) = (-1)^(k(k-1)/2);
    with this sign (XY)^T = Y^T X^T, and d, K are skew: X^T = -X.
    """
    S = sympy.diag(*[(-1) ** ((deg * k) % 2) for deg in tgt_degrees])
    return _sign_of_degree(k) * src_pairing.inv() * X.T * tgt_pairing * S


def transpose_endo(C: DgFrobeniusAlgebra, X, k: int):
    fn = lambda m: graded_transpose(m, k, C.pairing_matrix, C.pairing_matrix, C.degrees)  # noqa: E731
    if isinstance(X, JetMatrix):
        return X.map(fn)
    return fn(X)


def graded_map_mask(src_degrees, tgt_degrees, shift: int) -> list[tuple[int, int]]:
    """Matrix positions (row, col) of a map raising degree by ``shift``."""
    return [(i, j) for i, di in enumerate(tgt_degrees) for j, dj in enumerate(src_degrees) if di == dj + shift]


def _random_sympy(rng: random.Random) -> sympy.Rational:
    v = random_rational(rng, nonzero=False)
    return sympy.Rational(v.numerator, v.denominator)


def random_graded_map(rng: random.Random, src_degrees, tgt_degrees, shift: int) -> sympy.Matrix:
    m = sympy.zeros(len(tgt_degrees), len(src_degrees))
    for i, j in graded_map_mask(src_degrees, tgt_degrees, shift):
        m[i, j] = _random_sympy(rng)
    return m


def _columns_of_degree(C: DgFrobeniusAlgebra, k: int) -> list[sympy.Matrix]:
    return [C.basis_vector(i) for i in C.indices_of_degree(k)]


def _greedy_extend(start: list[sympy.Matrix], candidates: list[sympy.Matrix]) -> list[sympy.Matrix]:
    """Candidates that extend the span of ``start``, taken in order."""
    chosen: list[sympy.Matrix] = []
    current = list(start)
    rank = sympy.Matrix.hstack(*current).rank() if current else 0
    for v in candidates:
        trial = sympy.Matrix.hstack(*current, v)
        r = trial.rank()
        if r > rank:
            chosen.append(v)
            current.append(v)
            rank = r
    return chosen


class Cohomology(NamedTuple):
    betti: tuple[int, int, int, int]
    iota: sympy.Matrix

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(k for k in range(4) for _ in range(self.betti[k]))


def compute_cohomology(C: DgFrobeniusAlgebra) -> Cohomology:
    D = C.differential_matrix
    reps: list[sympy.Matrix] = []
    betti = []
    for k in range(4):
        cols = C.indices_of_degree(k)
        closed: list[sympy.Matrix] = []
        if cols:
            restricted = D.extract(list(range(C.dim)), cols)
            for v in restricted.nullspace():
                full = sympy.zeros(C.dim, 1)
                for pos, idx in enumerate(cols):
                    full[idx, 0] = v[pos, 0]
                closed.append(full)
        exact = [D * e for e in _columns_of_degree(C, k - 1)] if k else []
        exact = [v for v in exact if any(x != 0 for x in v)]
        unit = C.basis_vector(C.unit)
        if k == 0 and all(x == 0 for x in D * unit):
            closed = [unit, *closed]
        chosen = _greedy_extend(exact, closed)
        betti.append(len(chosen))
        reps.extend(chosen)
    iota = sympy.Matrix.hstack(*reps) if reps else sympy.zeros(C.dim, 0)
    return Cohomology(tuple(betti), iota)  # type: ignore[arg-type]


Mode = Literal["strict", "relaxed"]


@dataclass(frozen=True, eq=False)
class InductionData:
    algebra: DgFrobeniusAlgebra
    iota: JetMatrix
    homotopy: JetMatrix
    h_degrees: tuple[int, ...]
    mode: Mode = "strict"
    base_homotopy: JetMatrix | None = None
    lam: sympy.Matrix | None = None

    @property
    def betti(self) -> tuple[int, int, int, int]:
        return tuple(self.h_degrees.count(k) for k in range(4))  # type: ignore[return-value]

    @property
    def h_dim(self) -> int:
        return len(self.h_degrees)

    @cached_property
    def labels(self) -> tuple[str, ...]:
        counters = dict.fromkeys(range(4), 0)
        out = []
        for k in self.h_degrees:
            counters[k] += 1
            out.append(f"e{k}" if k in (0, 3) else f"e{k}_{counters[k]}")
        return tuple(out)

    @cached_property
    def induced_pairing(self) -> sympy.Matrix:
        v = self.iota.value
        return v.T * self.algebra.pairing_matrix * v

    @cached_property
    def iota_transpose(self) -> JetMatrix:
        C = self.algebra
        return self.iota.map(lambda m: graded_transpose(m, 0, self.induced_pairing, C.pairing_matrix, C.degrees))

    @cached_property
    def projector(self) -> JetMatrix:
        return self.iota @ self.iota_transpose

    @property
    def is_jet(self) -> bool:
        return self.iota.is_jet or self.homotopy.is_jet


def _check_iota(C: DgFrobeniusAlgebra, iota: sympy.Matrix) -> tuple[int, ...]:
    cohomology_betti = C.betti
    D = C.differential_matrix
    if any(x != 0 for x in D * iota):
        raise ValidationError("iota is not a cochain map: d iota != 0")
    degrees = []
    for j in range(iota.shape[1]):
        col_degrees = {C.degrees[i] for i in range(C.dim) if iota[i, j] != 0}
        if len(col_degrees) != 1:
            raise ValidationError(f"iota column {j} is not homogeneous")
        degrees.append(col_degrees.pop())
    if tuple(degrees.count(k) for k in range(4)) != cohomology_betti:
        raise ValidationError(f"iota has {iota.shape[1]} columns of degrees {degrees}, Betti numbers are {cohomology_betti}")
    exact = sympy.Matrix.hstack(*[D * C.basis_vector(i) for i in range(C.dim)])
    if sympy.Matrix.hstack(exact, iota).rank() != exact.rank() + iota.shape[1]:
        raise ValidationError("iota columns are not independent in cohomology")
    return tuple(degrees)


def seed_homotopy(C: DgFrobeniusAlgebra, iota: sympy.Matrix, seed: int | None = None) -> sympy.Matrix:
    """A chain homotopy K0 with dK0 + K0d = 1 - P0 for some projector P0 onto im(iota).

    W is grown from ker(iota^T) by pivot extension over im(d); a seed adds random exact and
    harmonic components to W, which breaks the symmetry of K0.
    """
    degrees = _check_iota(C, iota)
    D = C.differential_matrix
    h_pairing = iota.T * C.pairing_matrix * iota
    iota_t = graded_transpose(iota, 0, h_pairing, C.pairing_matrix, C.degrees)
    rng = random.Random(seed) if seed is not None else None
    complement: list[sympy.Matrix] = []
    for k in range(4):
        cols = C.indices_of_degree(k)
        if not cols:
            continue
        exact = [D * e for e in _columns_of_degree(C, k - 1)] if k else []
        exact = [v for v in exact if any(x != 0 for x in v)]
        kernel = []
        for v in iota_t.extract(list(range(iota_t.shape[0])), cols).nullspace():
            full = sympy.zeros(C.dim, 1)
            for pos, idx in enumerate(cols):
                full[idx, 0] = v[pos, 0]
            kernel.append(full)
        w_k = _greedy_extend(exact, kernel)
        if rng is not None:
            harmonic = [iota[:, j] for j in range(iota.shape[1]) if degrees[j] == k]
            basis_exact = _greedy_extend([], exact)
            w_k = [
                w + sum((_random_sympy(rng) * v for v in basis_exact + harmonic), sympy.zeros(C.dim, 1))
                for w in w_k
            ]
        complement.extend(w_k)
    images = [D * w for w in complement]
    blocks = [iota] + images + complement
    T = sympy.Matrix.hstack(*blocks)
    if T.shape != (C.dim, C.dim) or T.rank() < C.dim:
        raise ValidationError("Could not split the algebra into harmonic, exact and coexact parts")
    target = sympy.Matrix.hstack(sympy.zeros(C.dim, iota.shape[1]), *complement, sympy.zeros(C.dim, len(complement)))
    return target * T.inv()


def build_homotopy(C: DgFrobeniusAlgebra, iota: sympy.Matrix, seed: int | None = None) -> InductionData:
    """Strict induction data through the chain K0 -> K1 -> K2 -> K3."""
    degrees = _check_iota(C, iota)
    D = C.differential_matrix
    K0 = seed_homotopy(C, iota, seed)
    data = InductionData(C, JetMatrix.lift(iota), JetMatrix.lift(sympy.zeros(C.dim, C.dim)), degrees)
    P = data.projector.value
    one = sympy.eye(C.dim)
    K1 = (K0 - transpose_endo(C, K0, -1)) / 2
    K2 = (one - P) * K1 * (one - P)
    K3 = K2 * D * K2
    return replace(data, homotopy=JetMatrix.lift(K3))


def darboux_basis(C: DgFrobeniusAlgebra, data: InductionData) -> InductionData:
    """Reorder and rescale the cohomology basis so that pi'(e0, e3) = 1 and pi'(e1_i, e2_j) = delta_ij."""
    if data.betti[0] != 1 or data.betti[3] != 1:
        raise PreconditionError(f"Darboux basis needs B0 = B3 = 1, got {data.betti}")
    iota = data.iota.value
    order = sorted(range(data.h_dim), key=lambda j: data.h_degrees[j])
    iota = iota.extract(list(range(C.dim)), order)
    degrees = tuple(sorted(data.h_degrees))
    pairing = iota.T * C.pairing_matrix * iota
    ones = [j for j, k in enumerate(degrees) if k == 1]
    twos = [j for j, k in enumerate(degrees) if k == 2]
    if ones:
        P = pairing.extract(ones, twos)
        if P.rank() < len(ones):
            raise ValidationError("Induced pairing between H1 and H2 is degenerate")
        new_twos = iota.extract(list(range(C.dim)), twos) * P.inv()
        for pos, j in enumerate(twos):
            iota[:, j] = new_twos[:, pos]
    top = degrees.index(3)
    scale = (iota[:, 0].T * C.pairing_matrix * iota[:, top])[0, 0]
    if scale == 0:
        raise ValidationError("Induced pairing between H0 and H3 is degenerate")
    iota[:, top] = iota[:, top] / scale
    if data.iota.is_jet:
        raise PreconditionError("Darboux normalisation is applied before deformations")
    return InductionData(C, JetMatrix.lift(iota), data.homotopy, degrees, data.mode, data.base_homotopy, data.lam)


def strict_induction_data(C: DgFrobeniusAlgebra, seed: int | None = None, iota: sympy.Matrix | None = None) -> InductionData:
    if iota is None:
        iota = compute_cohomology(C).iota
    return darboux_basis(C, build_homotopy(C, iota, seed))


def perturb_iota(C: DgFrobeniusAlgebra, data: InductionData, seed: int) -> sympy.Matrix:
    """iota + d eta for a random eta of degree -1; another representative of the same classes."""
    eta = random_graded_map(random.Random(seed), data.h_degrees, C.degrees, -1)
    return data.iota.value + C.differential_matrix * eta


# ---------------------------------------------------------------------------
# verification


def _record(report: ValidationReport, axiom: str, defect: JetMatrix, detail: str) -> None:
    position = defect.first_nonzero()
    if position is not None:
        report.add(axiom, position, detail)


def verify_induction_data(C: DgFrobeniusAlgebra, data: InductionData) -> ValidationReport:
    report = ValidationReport()
    D = JetMatrix.lift(C.differential_matrix)
    K = data.homotopy
    iota = data.iota
    one = sympy.eye(C.dim)
    P = data.projector
    _record(report, "cochain", D @ iota, "d iota != 0")
    _record(report, "homotopy", D @ K + K @ D - (JetMatrix.lift(one) - P), "dK + Kd != 1 - P'")
    _record(report, "skew", K + transpose_endo(C, K, -1), "pi(Ka, b) != (-1)^|a| pi(a, Kb)")
    _record(report, "K-iota", K @ iota, "K iota != 0")
    _record(report, "projector", data.iota_transpose @ iota - JetMatrix.lift(sympy.eye(data.h_dim)), "iota^T iota != 1")
    Pi = JetMatrix.lift(C.pairing_matrix)
    if data.mode == "strict":
        _record(report, "K-squared", K @ K, "K^2 != 0")
        exact = D @ K
        coexact = K @ D

        def gram(a: JetMatrix, b: JetMatrix) -> JetMatrix:
            return a.map(lambda m: m.T) @ Pi @ b

        _record(report, "hodge-orthogonality", gram(P, exact), "harmonic and exact parts are not orthogonal")
        _record(report, "hodge-orthogonality", gram(P, coexact), "harmonic and coexact parts are not orthogonal")
        _record(report, "hodge-orthogonality", gram(exact, exact), "exact part is not isotropic")
        _record(report, "hodge-orthogonality", gram(coexact, coexact), "coexact part is not isotropic")
    else:
        base = data.base_homotopy
        if base is None:
            report.add("relaxed", (), "relaxed data without a strict homotopy")
        else:
            _record(report, "projection", K @ D @ K - base, "K^ d K^ != K")
    return report


# ---------------------------------------------------------------------------
# deformations and relaxation


@dataclass(frozen=True)
class Deformation:
    kind: Literal["I", "II"]
    kappa: sympy.Matrix | None = None
    delta_iota: sympy.Matrix | None = None


def _require_zero(m: sympy.Matrix, message: str) -> None:
    if any(x != 0 for x in m):
        raise ValidationError(message)


def deform(data: InductionData, deformation: Deformation, eps: JetScalar = EPSILON) -> InductionData:
    """First-order deformation of strict data; the result carries eps-tangents."""
    if eps.value != 0:
        raise PreconditionError("Only infinitesimal deformations are supported")
    if data.mode != "strict":
        raise PreconditionError("Deformations act on strict induction data")
    C = data.algebra
    D = C.differential_matrix
    K = data.homotopy.value
    t = sympy.Rational(eps.derivative.numerator, eps.derivative.denominator)
    exact_proj = D * K
    coexact_proj = K * D
    if deformation.kind == "I":
        kappa = deformation.kappa if deformation.kappa is not None else sympy.zeros(C.dim, C.dim)
        _require_zero(kappa + transpose_endo(C, kappa, -2), "delta kappa is not skew")
        _require_zero(kappa - coexact_proj * kappa * exact_proj, "delta kappa must map d-exact to K-exact elements")
        tangent = data.homotopy.tangent + t * (D * kappa - kappa * D)
        return replace(data, homotopy=JetMatrix(data.homotopy.value, tangent))
    delta = deformation.delta_iota if deformation.delta_iota is not None else sympy.zeros(C.dim, data.h_dim)
    _require_zero(delta - coexact_proj * delta, "delta I must land in the K-exact part")
    delta_t = graded_transpose(delta, -1, data.induced_pairing, C.pairing_matrix, C.degrees)
    iota = data.iota.value
    iota_t = data.iota_transpose.value
    new_iota = JetMatrix(iota, data.iota.tangent + t * D * delta)
    new_k = JetMatrix(K, data.homotopy.tangent + t * (iota * delta_t - delta * iota_t))
    return replace(data, iota=new_iota, homotopy=new_k)


def random_deformation(data: InductionData, kind: Literal["I", "II"], seed: int) -> Deformation:
    """delta kappa = K Z K with Z skew of degree 0, or delta I = K X for X: H -> C of degree 0."""
    C = data.algebra
    rng = random.Random(seed)
    K = data.homotopy.value
    if kind == "I":
        Y = random_graded_map(rng, C.degrees, C.degrees, 0)
        Z = (Y - transpose_endo(C, Y, 0)) / 2
        return Deformation("I", kappa=K * Z * K)
    X = random_graded_map(rng, data.h_degrees, C.degrees, 0)
    return Deformation("II", delta_iota=K * X)


def relax_homotopy(data: InductionData, lam: sympy.Matrix) -> InductionData:
    """K^ = K + d Lambda d for a skew Lambda: C^3 -> C^0."""
    C = data.algebra
    if data.mode != "strict":
        raise PreconditionError("Only strict data can be relaxed")
    allowed = set(graded_map_mask(C.degrees, C.degrees, -3))
    for i in range(C.dim):
        for j in range(C.dim):
            if lam[i, j] != 0 and (i, j) not in allowed:
                raise ValidationError(f"Lambda entry ({i}, {j}) does not map C^3 to C^0")
    _require_zero(lam + transpose_endo(C, lam, -3), "Lambda is not skew")
    D = C.differential_matrix
    relaxed = data.homotopy + JetMatrix.lift(D * lam * D)
    return replace(data, homotopy=relaxed, mode="relaxed", base_homotopy=data.homotopy, lam=lam)


def random_lambda(C: DgFrobeniusAlgebra, seed: int) -> sympy.Matrix:
    X = random_graded_map(random.Random(seed), C.degrees, C.degrees, -3)
    return (X - transpose_endo(C, X, -3)) / 2


def project_homotopy(data: InductionData) -> JetMatrix:
    """K^ d K^, which recovers the strict homotopy of relaxed data."""
    D = JetMatrix.lift(data.algebra.differential_matrix)
    return data.homotopy @ D @ data.homotopy


def fraction_matrix(m: sympy.Matrix) -> list[list[Fraction]]:
    return [[to_fraction(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]
