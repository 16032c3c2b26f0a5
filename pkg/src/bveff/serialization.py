"""JSON and Markdown formats: algebra and Lie specs, series, induction data, graph breakdowns and run reports."""

import json
from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any, NotRequired, TypedDict

import sympy

from .exceptions import ParseError, ReportError, ValidationError
from .feynman import GraphContribution
from .frobenius import (
    DgFrobeniusAlgebra,
    QuadraticLieAlgebra,
    ValidationReport,
    antisymmetric_tensor,
    builtin_algebra,
    builtin_lie,
    fill_graded_symmetric,
    fill_skew_differential,
    fill_symmetric_pairing,
    make_su_n,
)
from .graded import Coeff, GradedPolynomial, GradedSeries, JetScalar
from .hodge import InductionData
from .invariants import InvariantReport
from .rational import format_rational, parse_rational, to_fraction

SCHEMA = "bv-effective/1"
SKIPPED = "skipped: "


class TermEntry(TypedDict):
    monomial: list[int]
    coeff: str


class SeriesOrder(TypedDict):
    hbar_order: int
    terms: list[TermEntry]


class SeriesDict(TypedDict):
    variables: list[str]
    truncation_order: int
    orders: list[SeriesOrder]


class AlgebraSpec(TypedDict):
    degrees: list[int]
    pairing: list[list[Any]]
    product: list[list[Any]]
    differential: list[list[Any]]
    unit: int
    labels: NotRequired[list[str]]
    name: NotRequired[str]


class LieSpec(TypedDict, total=False):
    builtin: str
    n: int
    dim: int
    f: list[list[Any]]
    metric: list[list[Any]]


class InductionExport(TypedDict):
    mode: str
    h_degrees: list[int]
    labels: list[str]
    iota: list[list[Any]]
    homotopy: list[list[Any]]
    lam: NotRequired[list[list[Any]]]


class GraphEntry(TypedDict):
    graph: str
    l: int  # noqa: E741
    n: int
    aut: int
    value: list[TermEntry]


class McSample(TypedDict):
    point: dict[str, str]
    value: str


class InvariantDict(TypedDict):
    F: dict[str, str]
    A: dict[str, str]
    B: dict[str, str]
    reference: dict[str, str]
    F1: list[TermEntry] | None
    mc_samples: list[McSample]


class Fixture(TypedDict):
    algebra: str
    lie: str
    betti: list[int]
    mode: str


class RunReport(TypedDict):
    schema: str
    command: str
    fixture: Fixture
    seed: int
    loops: int
    leaves: int
    tadpoles: bool
    effective_action: SeriesDict
    invariants: InvariantDict
    graphs: list[GraphEntry]


class OrderVerdict(TypedDict):
    order: int
    left: str
    right: str
    equal: bool


class CompareReport(TypedDict):
    schema: str
    command: str
    fixture: Fixture
    left: str
    right: str
    quantity: str
    orders: list[OrderVerdict]
    equal: bool
    degenerate: bool


class CheckResult(TypedDict):
    check: str
    fixture: str
    ok: bool
    witness: str


class VerifyReport(TypedDict):
    schema: str
    command: str
    suite: str
    seed: int
    results: list[CheckResult]
    ok: bool


# ---------------------------------------------------------------------------
# coefficients, polynomials and series


def format_coeff(c: Coeff) -> str:
    if isinstance(c, JetScalar):
        if not c.derivative:
            return format_rational(c.value)
        return f"{format_rational(c.value)}+({format_rational(c.derivative)})eps"
    return format_rational(c)


def terms_to_json(terms: Mapping[tuple[int, ...], Coeff]) -> list[TermEntry]:
    return [{"monomial": list(m), "coeff": format_coeff(c)} for m, c in sorted(terms.items())]


def polynomial_to_json(p: GradedPolynomial) -> list[TermEntry]:
    return terms_to_json(p.terms)


def series_to_json(s: GradedSeries) -> SeriesDict:
    return {
        "variables": [v.label for v in s.space.variables],
        "truncation_order": s.truncation_order,
        "orders": [{"hbar_order": k, "terms": terms_to_json(terms)} for k, terms in s.coefficients.items()],
    }


def series_from_json(data: SeriesDict, like: GradedSeries) -> GradedSeries:
    """Read a series back onto the variable space of ``like``."""
    try:
        labels = [v.label for v in like.space.variables]
        if data["variables"] != labels:
            raise ParseError("Series variables do not match the target space")
        orders = {
            entry["hbar_order"]: {tuple(t["monomial"]): parse_rational(t["coeff"]) for t in entry["terms"]}
            for entry in data["orders"]
        }
        return GradedSeries(like.space, data["truncation_order"], orders)
    except (KeyError, TypeError) as e:
        raise ParseError(f"Malformed series: {e}") from e


def _rational_map(values: Mapping[int, Fraction]) -> dict[str, str]:
    return {str(k): format_rational(v) for k, v in sorted(values.items())}


# ---------------------------------------------------------------------------
# algebra and Lie specs


def _triplets(entries: Mapping[tuple[int, ...], Fraction], keep) -> list[list[Any]]:
    return [[*key, format_rational(v)] for key, v in sorted(entries.items()) if v and keep(key)]


def _read_entries(rows: Iterable[Sequence[Any]], arity: int, size: int, what: str) -> dict[Any, Fraction]:
    out: dict[Any, Fraction] = {}
    for row in rows:
        if len(row) != arity + 1:
            raise ParseError(f"{what} entry {row!r} must have {arity} indices and a value")
        key = tuple(int(i) for i in row[:arity])
        if any(not 0 <= i < size for i in key):
            raise ParseError(f"{what} entry {row!r} has an index out of range")
        out[key] = parse_rational(row[arity])
    return out


def algebra_to_spec(C: DgFrobeniusAlgebra) -> AlgebraSpec:
    return {
        "name": C.name,
        "labels": list(C.labels),
        "degrees": list(C.degrees),
        "pairing": _triplets(C.pairing, lambda k: k[0] <= k[1]),
        "product": _triplets(C.product, lambda k: k[0] <= k[1] <= k[2]),
        "differential": _triplets(C.differential, lambda k: k[0] <= k[1]),
        "unit": C.unit,
    }


def algebra_from_spec(spec: Mapping[str, Any], name: str = "algebra") -> DgFrobeniusAlgebra:
    try:
        degrees = tuple(int(d) for d in spec["degrees"])
        if not degrees:
            raise ParseError("Algebra spec has no basis")
        if any(d not in (0, 1, 2, 3) for d in degrees):
            raise ParseError(f"Degrees must lie in 0..3, got {list(degrees)}")
        size = len(degrees)
        labels = tuple(spec.get("labels") or (f"b{i}" for i in range(size)))
        if len(labels) != size:
            raise ParseError(f"Expected {size} labels, got {len(labels)}")
        pairing = fill_symmetric_pairing(_read_entries(spec.get("pairing", []), 2, size, "Pairing"))
        product = fill_graded_symmetric(_read_entries(spec.get("product", []), 3, size, "Product"), degrees)
        differential = fill_skew_differential(
            _read_entries(spec.get("differential", []), 2, size, "Differential"),
            degrees,
        )
        unit = int(spec["unit"])
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Malformed algebra spec: {e}") from e
    if not 0 <= unit < size or degrees[unit] != 0:
        raise ValidationError(f"Unit index {unit} must point at a degree-0 basis element")
    return DgFrobeniusAlgebra(labels, degrees, pairing, product, differential, unit, name=spec.get("name", name))


def lie_to_spec(g: QuadraticLieAlgebra) -> LieSpec:
    spec: LieSpec = {"dim": g.dim, "f": _triplets(g.f, lambda k: k[0] < k[1] < k[2])}
    if g.metric is not None:
        spec["metric"] = _triplets(g.metric_entries, lambda k: k[0] <= k[1])
    return spec


def lie_from_spec(spec: Mapping[str, Any], name: str = "lie") -> QuadraticLieAlgebra:
    try:
        if "builtin" in spec:
            if spec["builtin"] != "su":
                raise ParseError(f"Unknown built-in Lie algebra {spec['builtin']!r}")
            return make_su_n(int(spec["n"]))
        dim = int(spec["dim"])
        f = antisymmetric_tensor(_read_entries(spec.get("f", []), 3, dim, "Structure constant"))
        metric = None
        if "metric" in spec:
            metric = fill_symmetric_pairing(_read_entries(spec["metric"], 2, dim, "Metric"))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Malformed Lie spec: {e}") from e
    return QuadraticLieAlgebra(dim, f, metric, name=name)


def _read_json(path: Path, what: str) -> Any:
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except (json.JSONDecodeError, OSError, UnicodeDecodeError) as e:
        raise ParseError(f"Failed to read or parse {what} file {path}: {e}") from e


def write_json(path: Path, payload: Mapping[str, Any] | Sequence[Any]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            json.dump(payload, f, indent=4, ensure_ascii=False)
    except OSError as e:
        raise ReportError(f"Failed to write {path}: {e}") from e


def load_algebra(path: Path) -> DgFrobeniusAlgebra:
    spec = _read_json(path, "algebra")
    if not isinstance(spec, dict):
        raise ParseError(f"Algebra file {path} must hold a JSON object")
    return algebra_from_spec(spec, name=path.stem)


def resolve_algebra(path: Path | None, builtin: str | None) -> DgFrobeniusAlgebra:
    if (path is None) == (builtin is None):
        raise ParseError("Give exactly one of an algebra file or --builtin")
    if path is not None:
        return load_algebra(path)
    return builtin_algebra(builtin)  # type: ignore[arg-type]


def resolve_lie(spec: str) -> QuadraticLieAlgebra:
    """``su:N``, ``abelian:n`` or a path to a Lie spec file."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        data = _read_json(path, "Lie algebra")
        if not isinstance(data, dict):
            raise ParseError(f"Lie algebra file {path} must hold a JSON object")
        return lie_from_spec(data, name=path.stem)
    return builtin_lie(spec)


# ---------------------------------------------------------------------------
# induction data and graphs


def _matrix_triplets(m: sympy.Matrix) -> list[list[Any]]:
    return [
        [i, j, format_rational(to_fraction(m[i, j]))]
        for i in range(m.shape[0])
        for j in range(m.shape[1])
        if m[i, j] != 0
    ]


def induction_to_json(data: InductionData) -> InductionExport:
    out: InductionExport = {
        "mode": data.mode,
        "h_degrees": list(data.h_degrees),
        "labels": list(data.labels),
        "iota": _matrix_triplets(data.iota.value),
        "homotopy": _matrix_triplets(data.homotopy.value),
    }
    if data.lam is not None:
        out["lam"] = _matrix_triplets(data.lam)
    return out


def graph_breakdown(contributions: Iterable[GraphContribution]) -> list[GraphEntry]:
    rows = sorted(contributions, key=lambda c: (c.graph.loops, c.graph.leaf_count, c.graph.encoding))
    return [
        {
            "graph": c.graph.encoding,
            "l": c.graph.loops,
            "n": c.graph.leaf_count,
            "aut": c.aut,
            "value": polynomial_to_json(c.value),
        }
        for c in rows
    ]


def validation_to_json(report: ValidationReport) -> list[dict[str, Any]]:
    return [{"axiom": v.axiom, "witness": list(v.witness), "detail": v.detail} for v in report.violations]


# ---------------------------------------------------------------------------
# run reports


def fixture_of(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, data: InductionData) -> Fixture:
    return {"algebra": C.name, "lie": g.name, "betti": list(data.betti), "mode": data.mode}


def invariants_to_json(report: InvariantReport, reference: Mapping[int, Fraction]) -> InvariantDict:
    return {
        "F": _rational_map(report.F_series),
        "A": _rational_map(report.A_series),
        "B": _rational_map(report.B_series),
        "reference": _rational_map(reference),
        "F1": polynomial_to_json(report.F1_poly) if report.F1_poly is not None else None,
        "mc_samples": [
            {"point": _rational_map(point), "value": format_rational(value)} for point, value in report.mc_samples
        ],
    }


def build_run_report(
    fixture: Fixture,
    W: GradedSeries,
    invariants: InvariantDict,
    graphs: list[GraphEntry],
    seed: int,
    loops: int,
    leaves: int,
    tadpoles: bool,
) -> RunReport:
    return {
        "schema": SCHEMA,
        "command": "compute",
        "fixture": fixture,
        "seed": seed,
        "loops": loops,
        "leaves": leaves,
        "tadpoles": tadpoles,
        "effective_action": series_to_json(W),
        "invariants": invariants,
        "graphs": graphs,
    }


def _markdown_rational_table(title: str, values: Mapping[str, str]) -> list[str]:
    if not values:
        return []
    lines = [f"### {title}", "", "| order | value |", "| --- | --- |"]
    lines += [f"| {k} | {v} |" for k, v in values.items()]
    return [*lines, ""]


def render_markdown(report: Mapping[str, Any]) -> str:
    """Markdown rendering of a compute, compare or verify report."""
    fixture = report["fixture"] if "fixture" in report else None
    lines = [f"# bveff {report['command']} report", "", f"- schema: `{report['schema']}`"]
    if fixture is not None:
        betti = ", ".join(str(b) for b in fixture["betti"])
        lines += [
            f"- algebra: `{fixture['algebra']}`",
            f"- Lie algebra: `{fixture['lie']}`",
            f"- Betti numbers: ({betti})",
            f"- induction data: {fixture['mode']}",
        ]
    if "seed" in report:
        lines.append(f"- seed: {report['seed']}")
    lines.append("")
    if report["command"] == "compute":
        inv = report["invariants"]
        lines += _markdown_rational_table("F(hbar)", inv["F"])
        lines += _markdown_rational_table("Reference series", inv["reference"])
        lines += _markdown_rational_table("A(hbar)", inv["A"])
        lines += _markdown_rational_table("B(hbar)", inv["B"])
        if inv["F1"] is not None:
            lines += ["### One-loop part on H^1", "", f"{len(inv['F1'])} terms", ""]
        if report["graphs"]:
            lines += ["### Graphs", "", "| graph | l | n | aut | terms |", "| --- | --- | --- | --- | --- |"]
            lines += [
                f"| `{row['graph']}` | {row['l']} | {row['n']} | {row['aut']} | {len(row['value'])} |"
                for row in report["graphs"]
            ]
            lines.append("")
    elif report["command"] == "compare":
        lines += [
            f"Comparing `{report['quantity']}`: {report['left']} vs {report['right']}",
            "",
            "| order | left | right | equal |",
            "| --- | --- | --- | --- |",
        ]
        lines += [
            f"| {o['order']} | {o['left']} | {o['right']} | {'yes' if o['equal'] else 'no'} |"
            for o in report["orders"]
        ]
        lines += ["", f"**{'equal' if report['equal'] else 'different'}**"]
        if report["degenerate"]:
            lines.append("(degenerate: both sides use the same induction data)")
        lines.append("")
    elif report["command"] == "verify":
        lines += ["| check | fixture | result | witness |", "| --- | --- | --- | --- |"]
        lines += [
            f"| {r['check']} | `{r['fixture']}` | {_verify_result(r)} | {r['witness']} |"
            for r in report["results"]
        ]
        lines.append("")
    return "\n".join(lines)


def _verify_result(result: CheckResult) -> str:
    if not result["ok"]:
        return "FAIL"
    return "skip" if result["witness"].startswith(SKIPPED) else "pass"


def write_report(path: Path, report: Mapping[str, Any], fmt: str) -> None:
    if fmt == "json":
        write_json(path, report)
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_markdown(report), encoding="utf-8")
    except OSError as e:
        raise ReportError(f"Failed to write {path}: {e}") from e
