"""Command implementations behind the CLI: compute, verify, compare and graphs."""

from collections.abc import Callable
from dataclasses import replace
from fractions import Fraction

from .config import RunConfig, check_caps
from .exceptions import BVError, ParseError, PreconditionError, PropertyFailure, ReportError, ValidationError
from .feynman import (
    assemble,
    deformation_defect,
    deformation_generator,
    effective_action,
    feynman_rules,
    graph_contributions,
    relaxation_defect,
    wick_oracle,
)
from .frobenius import (
    DgFrobeniusAlgebra,
    QuadraticLieAlgebra,
    build_cs_action,
    builtin_algebra,
    make_broken_jacobi,
    random_degree12,
    random_doubled,
    validate_frobenius,
    validate_quadratic_lie,
)
from .graded import GradedSeries, qme_defect
from .graphs import (
    dump_lines,
    enumerate_graphs,
    enumerate_marked_graphs,
    graph_classes,
    labeled_matching_count,
    labeling_group_order,
)
from .hodge import (
    InductionData,
    JetMatrix,
    perturb_iota,
    random_deformation,
    random_lambda,
    relax_homotopy,
    seed_homotopy,
    strict_induction_data,
    verify_induction_data,
)
from .invariants import (
    check_formal,
    check_r_ansatz,
    check_w_ansatz,
    extract_constant_invariant,
    invariant_report,
    maurer_cartan_samples,
    mc_invariance_check,
    one_loop_supertrace,
    relaxed_two_loop,
    su_n_reference,
    w_prod,
)
from .output import console, debug, error, graph_table, info, series_table, step, success, verdict_table, warning
from .rational import format_rational
from .serialization import (
    SCHEMA,
    SKIPPED,
    CheckResult,
    CompareReport,
    OrderVerdict,
    RunReport,
    VerifyReport,
    build_run_report,
    fixture_of,
    format_coeff,
    graph_breakdown,
    invariants_to_json,
    resolve_algebra,
    resolve_lie,
    validation_to_json,
    write_json,
    write_report,
)

FAULTS = ("broken-jacobi", "broken-homotopy")
SUITES = ("qme", "oracle", "deformation", "relaxed", "formal", "graphs", "invariance", "all")
COMPARISONS = ("homotopy", "iota", "relaxed")


def _lie(cfg: RunConfig) -> QuadraticLieAlgebra:
    if cfg.inject_fault is not None and cfg.inject_fault not in FAULTS:
        raise ParseError(f"Unknown fault {cfg.inject_fault!r}; expected one of {', '.join(FAULTS)}")
    if cfg.inject_fault == "broken-jacobi":
        warning("Injecting fault: Lie algebra with a failing Jacobi identity")
        return make_broken_jacobi()
    return resolve_lie(cfg.lie_spec)


def _first_term(s: GradedSeries) -> str:
    for k, terms in s.coefficients.items():
        for m, c in terms.items():
            return f"hbar^{k} {list(m)}: {format_coeff(c)}"
    return ""


def _validated(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> None:
    reports = {"algebra": validate_frobenius(C), "lie": validate_quadratic_lie(g)}
    failed = {what: report for what, report in reports.items() if not report.ok}
    if not failed:
        build_cs_action(C, g)
        return
    for what, report in failed.items():
        for v in report.violations:
            error(f"{what}: {v.axiom} at {list(v.witness)}: {v.detail}")
    if cfg.output_path is not None:
        write_json(
            cfg.output_path,
            {
                "schema": SCHEMA,
                "command": cfg.command,
                "violations": {what: validation_to_json(report) for what, report in failed.items()},
            },
        )
    first = next(iter(failed.values())).violations[0]
    raise ValidationError(f"Input fails validation: {first.axiom} at {list(first.witness)}: {first.detail}")


def _reference(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, loops: int) -> dict[int, Fraction]:
    kind, _, arg = g.name.partition(":")
    if C.name != "ce-su2" or kind != "su":
        return {}
    return su_n_reference(int(arg), loops) if int(arg) <= 3 else {}


# ---------------------------------------------------------------------------
# compute


def run_compute(cfg: RunConfig) -> RunReport:
    C = resolve_algebra(cfg.algebra_path, cfg.builtin)
    g = _lie(cfg)
    step(f"Validating {C.name} with coefficients {g.name} ...")
    _validated(C, g, cfg)
    check_caps(cfg.loops, cfg.leaves)
    data = strict_induction_data(C)
    info(f"Betti numbers {data.betti}, cohomology basis {', '.join(data.labels)}")

    step(f"Evaluating graphs through hbar^{cfg.loops} with at most {cfg.leaves} leaves ...")
    rules = feynman_rules(C, g, data)
    contributions = graph_contributions(rules, cfg.loops, cfg.leaves, cfg.tadpoles)
    for item in contributions:
        debug(f"{item.graph.encoding} aut={item.aut}: {len(item.value.terms)} terms")
    W = assemble(contributions, rules.external, cfg.loops)
    prod = w_prod(C, g, data) if cfg.leaves >= 3 else None
    invariants = invariant_report(C, g, data, W, cfg.samples, cfg.seed, prod)
    reference = _reference(C, g, cfg.loops)

    if invariants.F_series:
        console.print(series_table("🧾 Constant invariant F(hbar)", invariants.F_series, reference))
    elif invariants.F1_poly is not None:
        info(f"One-loop part on H^1 has {len(invariants.F1_poly.terms)} terms")
        for point, value in invariants.mc_samples:
            debug(f"F1 at {point}: {format_rational(value)}")
    else:
        info("No invariant applies to this input; only W is reported")

    report = build_run_report(
        fixture_of(C, g, data),
        W,
        invariants_to_json(invariants, reference),
        graph_breakdown(contributions),
        cfg.seed,
        cfg.loops,
        cfg.leaves,
        cfg.tadpoles,
    )
    if cfg.output_path is not None:
        write_report(cfg.output_path, report, cfg.fmt)
        success(f"Report written to {cfg.output_path}")
    else:
        success(f"W has {sum(len(t) for t in W.coefficients.values())} terms")
    return report


# ---------------------------------------------------------------------------
# verify

type Check = Callable[[], str]


def _skip(name: str, reason: str) -> list[tuple[str, Check]]:
    return [(name, lambda: SKIPPED + reason)]


def _fixtures(seed: int) -> list[DgFrobeniusAlgebra]:
    names = ["ce-su2", "doubled:xy", "doubled:chain2", "degree12:3,2", "degree12:3,1", "minimal:3,eps"]
    return [*(builtin_algebra(n) for n in names), random_doubled(seed), random_degree12(seed)]


def _data(C: DgFrobeniusAlgebra, cfg: RunConfig) -> InductionData:
    data = strict_induction_data(C)
    if cfg.inject_fault == "broken-homotopy":
        K0 = seed_homotopy(C, data.iota.value, cfg.seed + 1)
        return replace(data, homotopy=JetMatrix.lift(K0))
    return data


def _zero(s: GradedSeries, what: str) -> str:
    witness = _first_term(s)
    return f"{what}: {witness}" if witness else ""


def _qme_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    loops = 2 if data.betti[1] == 0 else 1

    def action() -> str:
        return _zero(qme_defect(build_cs_action(C, g, validate=False).action), "QME defect of S")

    def induction() -> str:
        report = verify_induction_data(C, data)
        return "" if report.ok else f"{report.violations[0].axiom}: {report.violations[0].detail}"

    def induced() -> str:
        W = effective_action(C, g, data, loops, 3)
        return _zero(qme_defect(W).up_to_degree(1), "QME defect of W")

    return [("qme-action", action), ("induction-data", induction), ("qme-effective", induced)]


def _oracle_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    loops, leaves = (2, 0) if C.name == "ce-su2" else (1, 2)

    def oracle() -> str:
        difference = wick_oracle(C, g, data, loops, leaves) - effective_action(C, g, data, loops, leaves)
        return _zero(difference, "graphs - oracle")

    return [("oracle", oracle)]


def _deformation_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    checks: list[tuple[str, Check]] = []
    for kind in ("I", "II"):
        deformation = random_deformation(data, kind, cfg.seed)

        def covariance(deformation=deformation) -> str:
            if data.betti[1] == 0:
                return _zero(deformation_generator(C, g, data, deformation, 1, 2), "R' on B1 = 0")
            defect = deformation_defect(C, g, data, deformation, 1, 2)
            if not defect.is_zero():
                return _zero(defect, "dW - {W, R'} - hbar Delta R'")
            report = check_r_ansatz(deformation_generator(C, g, data, deformation, 1, 2), data, g)
            return "" if report.ok else report.violations[0].detail

        checks.append((f"deformation-{kind}", covariance))
    return checks


def _relaxed_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    lam = random_lambda(C, cfg.seed)
    if data.betti[1]:
        return _skip("relaxed", "relaxed invariants need B1 = 0")
    if not any(x != 0 for x in lam):
        return _skip("relaxed", f"Lambda vanishes for seed {cfg.seed}")

    def identity() -> str:
        return _zero(relaxation_defect(C, g, data, lam, 2, 1), "Ind(S + Phi) - relaxed W")

    def two_loop() -> str:
        strict = extract_constant_invariant(effective_action(C, g, data, 2, 3), data, w_prod(C, g, data))[2]
        relaxed = relax_homotopy(data, lam)
        value = relaxed_two_loop(effective_action(C, g, relaxed, 2, 3), g.dim, relaxed)
        return "" if value == strict else f"two-loop invariant {format_rational(value)} != {format_rational(strict)}"

    return [("relaxed-identity", identity), ("relaxed-two-loop", two_loop)]


def _formal_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    if not data.betti[1]:
        return _skip("one-loop-supertrace", "no degree-one cohomology")
    try:
        check_formal(C, data)
    except PreconditionError as e:
        return _skip("one-loop-supertrace", str(e))

    def supertrace() -> str:
        W = effective_action(C, g, data, 1, 3)
        difference = one_loop_supertrace(C, g, data, 3) - W.coefficient(1)
        return _zero(GradedSeries.from_polynomial(difference, 0), "supertrace - wheels")

    def ansatz() -> str:
        report = check_w_ansatz(effective_action(C, g, data, 1, 3), data, g)
        return "" if report.ok else report.violations[0].detail

    return [("one-loop-supertrace", supertrace), ("w-ansatz", ansatz)]


def _invariance_checks(C: DgFrobeniusAlgebra, g: QuadraticLieAlgebra, cfg: RunConfig) -> list[tuple[str, Check]]:
    data = _data(C, cfg)
    other = strict_induction_data(C, iota=perturb_iota(C, data, cfg.seed))

    def constant() -> str:
        left = extract_constant_invariant(effective_action(C, g, data, 2, 0), data)
        right = extract_constant_invariant(effective_action(C, g, other, 2, 0), other)
        return "" if left == right else f"F differs: {left} vs {right}"

    def one_loop() -> str:
        points = maurer_cartan_samples(C, g, data, 4, cfg.seed)
        report = mc_invariance_check(C, g, data, other, 3, points)
        bad = [p for p, a, b in report.values if a != b]
        return f"F1 differs at {bad[0]}" if bad else ""

    if data.betti[1] == 0:
        return [("invariance-F", constant)]
    try:
        check_formal(C, data)
        check_formal(C, other)
    except PreconditionError as e:
        return _skip("invariance-F1", str(e))
    return [("invariance-F1", one_loop)]


def _graph_checks() -> list[tuple[str, Check]]:
    checks: list[tuple[str, Check]] = []
    for loops in range(4):
        for leaves in range(4):

            def identity(loops=loops, leaves=leaves) -> str:
                rows = graph_classes(loops, leaves, include_tadpoles=True)
                total = sum(Fraction(labeling_group_order(graph), aut) for graph, aut in rows)
                expected = labeled_matching_count(loops, leaves)
                return "" if total == expected else f"sum V! 6^V n!/|Aut| = {total}, labeled count {expected}"

            checks.append((f"labeled-count l={loops} n={leaves}", identity))
    return checks


SUITE_CHECKS = {
    "qme": _qme_checks,
    "oracle": _oracle_checks,
    "deformation": _deformation_checks,
    "relaxed": _relaxed_checks,
    "formal": _formal_checks,
    "invariance": _invariance_checks,
}


def _run_check(name: str, fixture: str, check: Check) -> CheckResult:
    try:
        witness = check()
    except BVError as e:
        witness = f"{type(e).__name__}: {e}"
    if witness.startswith(SKIPPED):
        warning(f"{name} on {fixture}: {witness}")
        return {"check": name, "fixture": fixture, "ok": True, "witness": witness}
    if witness:
        error(f"{name} on {fixture}: {witness}")
    else:
        debug(f"{name} on {fixture}: ok")
    return {"check": name, "fixture": fixture, "ok": not witness, "witness": witness}


def run_verify(cfg: RunConfig) -> VerifyReport:
    if cfg.suite not in SUITES:
        raise ParseError(f"Unknown suite {cfg.suite!r}; expected one of {', '.join(SUITES)}")
    g = _lie(cfg)
    suites = [s for s in SUITES if s != "all"] if cfg.suite == "all" else [cfg.suite]
    results: list[CheckResult] = []
    for suite in suites:
        step(f"Running the {suite} suite ...")
        if suite == "graphs":
            results += [_run_check(name, "graphs", check) for name, check in _graph_checks()]
            continue
        for C in _fixtures(cfg.seed):
            for name, check in SUITE_CHECKS[suite](C, g, cfg):
                results.append(_run_check(name, C.name, check))
    failures = [r for r in results if not r["ok"]]
    report: VerifyReport = {
        "schema": SCHEMA,
        "command": "verify",
        "suite": cfg.suite,
        "seed": cfg.seed,
        "results": results,
        "ok": not failures,
    }
    if cfg.output_path is not None:
        write_report(cfg.output_path, report, cfg.fmt)
    if failures:
        first = failures[0]
        raise PropertyFailure(
            f"{len(failures)} of {len(results)} checks failed; first: {first['check']} on {first['fixture']}: "
            f"{first['witness']}"
        )
    skipped = sum(1 for r in results if r["witness"].startswith(SKIPPED))
    success(f"All {len(results) - skipped} checks passed, {skipped} skipped")
    return report


# ---------------------------------------------------------------------------
# compare


def _second_data(C: DgFrobeniusAlgebra, data: InductionData, cfg: RunConfig) -> InductionData:
    if cfg.against == "homotopy":
        return strict_induction_data(C, seed=cfg.seed)
    if cfg.against == "iota":
        return strict_induction_data(C, iota=perturb_iota(C, data, cfg.seed))
    if cfg.against == "relaxed":
        return relax_homotopy(data, random_lambda(C, cfg.seed))
    raise ParseError(f"Unknown comparison {cfg.against!r}; expected one of {', '.join(COMPARISONS)}")


def _verdict(order: int, left: Fraction, right: Fraction) -> OrderVerdict:
    return {"order": order, "left": format_rational(left), "right": format_rational(right), "equal": left == right}


def _same_data(a: InductionData, b: InductionData) -> bool:
    return a.iota.value == b.iota.value and a.homotopy.value == b.homotopy.value


def run_compare(cfg: RunConfig) -> CompareReport:
    C = resolve_algebra(cfg.algebra_path, cfg.builtin)
    g = _lie(cfg)
    _validated(C, g, cfg)
    check_caps(cfg.loops, cfg.leaves)
    data = strict_induction_data(C)
    other = _second_data(C, data, cfg)
    degenerate = _same_data(data, other)
    if degenerate:
        warning("Both induction data coincide; the comparison is degenerate")

    orders: list[OrderVerdict] = []
    if data.betti[1] == 0 and cfg.against == "relaxed":
        if cfg.loops < 2:
            raise PreconditionError("The relaxed comparison needs --loops >= 2")
        step("Comparing the strict F^(2) with dim(g) A^(1) + B^(2) ...")
        left = extract_constant_invariant(effective_action(C, g, data, 2, 3), data, w_prod(C, g, data))[2]
        right = relaxed_two_loop(effective_action(C, g, other, 2, 3), g.dim, other)
        orders.append(_verdict(2, left, right))
        quantity = "two-loop invariant"
    elif data.betti[1] == 0:
        step("Comparing F(hbar) ...")
        left_series = extract_constant_invariant(effective_action(C, g, data, cfg.loops, cfg.leaves), data)
        right_series = extract_constant_invariant(effective_action(C, g, other, cfg.loops, cfg.leaves), other)
        for k in sorted(left_series):
            a, b = left_series[k], right_series.get(k, Fraction(0))
            orders.append(_verdict(k, a, b))
        quantity = "F(hbar)"
    else:
        if other.mode != "strict":
            raise PreconditionError("The one-loop comparison needs strict induction data on both sides")
        step("Comparing the one-loop part on Maurer-Cartan points ...")
        points = maurer_cartan_samples(C, g, data, max(cfg.samples, 20), cfg.seed)
        mc = mc_invariance_check(C, g, data, other, max(cfg.leaves, 3), points)
        for i, (_, a, b) in enumerate(mc.values):
            orders.append(_verdict(i, a, b))
        quantity = "F1 on MC" + (" (polynomials equal)" if mc.polynomial_equal else "")

    equal = all(o["equal"] for o in orders)
    console.print(verdict_table(quantity, orders))
    report: CompareReport = {
        "schema": SCHEMA,
        "command": "compare",
        "fixture": fixture_of(C, g, data),
        "left": "strict",
        "right": cfg.against,
        "quantity": quantity,
        "orders": orders,
        "equal": equal,
        "degenerate": degenerate,
    }
    if cfg.output_path is not None:
        write_report(cfg.output_path, report, cfg.fmt)
    if not equal:
        raise PropertyFailure(f"Invariants differ between strict and {cfg.against} induction data")
    success("Invariants agree")
    return report


# ---------------------------------------------------------------------------
# graphs


def show_graphs(cfg: RunConfig) -> list[str]:
    if cfg.marked not in (None, "leaf", "edge"):
        raise ParseError(f"--marked must be leaf or edge, got {cfg.marked!r}")
    check_caps(cfg.loops, cfg.leaves)
    rows = []
    for loops in range(cfg.loops + 1):
        for leaves in range(cfg.leaves + 1):
            if cfg.marked is None:
                rows += enumerate_graphs(loops, leaves, cfg.tadpoles)
            else:
                rows += enumerate_marked_graphs(loops, leaves, cfg.marked, cfg.tadpoles)  # type: ignore[arg-type]
    lines = dump_lines(rows)
    console.print(graph_table(lines))
    if cfg.output_path is not None:
        try:
            cfg.output_path.parent.mkdir(parents=True, exist_ok=True)
            cfg.output_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise ReportError(f"Failed to write {cfg.output_path}: {e}") from e
        success(f"Wrote {len(lines)} classes to {cfg.output_path}")
    return lines
