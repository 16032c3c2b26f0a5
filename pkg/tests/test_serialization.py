"""Tests for spec files, series JSON and report rendering."""

import json
from fractions import Fraction

import pytest

from bveff.exceptions import ParseError, ValidationError
from bveff.feynman import effective_action, feynman_rules, graph_contributions
from bveff.frobenius import builtin_algebra, make_su_n, validate_frobenius
from bveff.graded import JetScalar
from bveff.hodge import random_lambda, relax_homotopy, strict_induction_data
from bveff.invariants import invariant_report, su_n_reference
from bveff.serialization import (
    SCHEMA,
    algebra_from_spec,
    algebra_to_spec,
    build_run_report,
    fixture_of,
    format_coeff,
    graph_breakdown,
    induction_to_json,
    invariants_to_json,
    lie_from_spec,
    load_algebra,
    render_markdown,
    resolve_algebra,
    resolve_lie,
    series_from_json,
    series_to_json,
    write_json,
    write_report,
)

SU2 = make_su_n(2)


def test_format_coeff():
    assert format_coeff(Fraction(-3)) == "-3"
    assert format_coeff(Fraction(21, 2)) == "21/2"
    assert format_coeff(Fraction(4, -6)) == "-2/3"
    assert format_coeff(JetScalar(Fraction(1), Fraction(2))) == "1+(2)eps"
    assert format_coeff(JetScalar(Fraction(5, 3))) == "5/3"


class TestAlgebraSpec:
    """Algebra spec files with sparse triplets."""

    @pytest.mark.parametrize("spec", ["ce-su2", "doubled:xy", "degree12:4,2"])
    def test_spec_reproduces_structure_constants(self, spec):
        C = builtin_algebra(spec)
        loaded = algebra_from_spec(algebra_to_spec(C))
        assert loaded.degrees == C.degrees
        assert dict(loaded.pairing) == dict(C.pairing)
        assert dict(loaded.product) == dict(C.product)
        assert dict(loaded.differential) == dict(C.differential)
        assert loaded.unit == C.unit

    def test_load_file(self, tmp_path):
        path = tmp_path / "ce.json"
        write_json(path, algebra_to_spec(builtin_algebra("ce-su2")))
        C = load_algebra(path)
        assert C.name == "ce-su2"
        assert validate_frobenius(C).ok

    def test_name_defaults_to_file_stem(self, tmp_path):
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps({"degrees": [0, 3], "pairing": [[0, 1, "1"]], "product": [[0, 0, 1, "1"]], "unit": 0}))
        C = load_algebra(path)
        assert C.name == "tiny"
        assert C.betti == (1, 0, 0, 1)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        with pytest.raises(ParseError, match="Failed to read or parse"):
            load_algebra(path)

    @pytest.mark.parametrize(
        "spec,match",
        [
            ({"degrees": [], "unit": 0}, "no basis"),
            ({"degrees": [0, 4], "unit": 0}, "0..3"),
            ({"degrees": [0, 3], "pairing": [[0, 2, "1"]], "unit": 0}, "out of range"),
            ({"degrees": [0, 3], "pairing": [[0, 1]], "unit": 0}, "indices and a value"),
            ({"degrees": [0, 3], "pairing": [[0, 1, "x"]], "unit": 0}, "Invalid rational"),
            ({"degrees": [0, 3]}, "Malformed"),
        ],
    )
    def test_malformed_specs(self, spec, match):
        with pytest.raises(ParseError, match=match):
            algebra_from_spec(spec)

    def test_unit_must_have_degree_zero(self):
        with pytest.raises(ValidationError, match="Unit"):
            algebra_from_spec({"degrees": [0, 3], "pairing": [[0, 1, "1"]], "unit": 1})

    def test_exactly_one_source(self, tmp_path):
        with pytest.raises(ParseError, match="exactly one"):
            resolve_algebra(None, None)
        with pytest.raises(ParseError, match="exactly one"):
            resolve_algebra(tmp_path / "a.json", "ce-su2")


class TestLieSpec:
    def test_builtin(self):
        g = lie_from_spec({"builtin": "su", "n": 3})
        assert g.dim == 8

    def test_structure_constants_are_completed(self):
        g = lie_from_spec({"dim": 3, "f": [[0, 1, 2, "1"]]})
        assert g.f[(1, 0, 2)] == -1
        assert g.f[(2, 0, 1)] == 1

    def test_file(self, tmp_path):
        path = tmp_path / "so3.json"
        write_json(path, {"dim": 3, "f": [[0, 1, 2, "1"]]})
        g = resolve_lie(str(path))
        assert g.name == "so3"
        assert dict(g.f) == dict(SU2.f)

    def test_unknown(self):
        with pytest.raises(ParseError):
            resolve_lie("e8")
        with pytest.raises(ParseError):
            lie_from_spec({"builtin": "so", "n": 3})


class TestSeries:
    """GradedSeries JSON."""

    def test_ce_su2_constants(self):
        C = builtin_algebra("ce-su2")
        W = effective_action(C, SU2, strict_induction_data(C), 2, 0)
        payload = series_to_json(W)
        assert payload["truncation_order"] == 2
        assert payload["orders"] == [{"hbar_order": 2, "terms": [{"monomial": [], "coeff": "-3"}]}]

    def test_read_back(self):
        C = builtin_algebra("doubled:xy")
        W = effective_action(C, SU2, strict_induction_data(C), 1, 3)
        assert series_from_json(json.loads(json.dumps(series_to_json(W))), W) == W

    def test_read_back_checks_variables(self):
        C = builtin_algebra("doubled:xy")
        W = effective_action(C, SU2, strict_induction_data(C), 1, 3)
        payload = series_to_json(W)
        payload["variables"] = payload["variables"][1:]
        with pytest.raises(ParseError, match="variables"):
            series_from_json(payload, W)


class TestReports:
    """Per-graph breakdown, induction data export and run reports."""

    def test_graph_breakdown(self):
        C = builtin_algebra("ce-su2")
        rules = feynman_rules(C, SU2, strict_induction_data(C))
        rows = graph_breakdown(graph_contributions(rules, 2, 0))
        theta = [row for row in rows if row["graph"] == "0.0,0.0|0-1x3"]
        assert theta == [{"graph": "0.0,0.0|0-1x3", "l": 2, "n": 0, "aut": 12, "value": [{"monomial": [], "coeff": "-36"}]}]
        assert [row["l"] for row in rows] == sorted(row["l"] for row in rows)

    def test_induction_export(self):
        C = builtin_algebra("doubled:xy")
        data = strict_induction_data(C)
        strict = induction_to_json(data)
        assert strict["mode"] == "strict"
        assert "lam" not in strict
        assert strict["h_degrees"] == list(data.h_degrees)
        relaxed = induction_to_json(relax_homotopy(data, random_lambda(C, 0)))
        assert relaxed["mode"] == "relaxed"
        assert "lam" in relaxed

    def _report(self):
        C = builtin_algebra("ce-su2")
        data = strict_induction_data(C)
        rules = feynman_rules(C, SU2, data)
        contributions = graph_contributions(rules, 2, 0)
        W = effective_action(C, SU2, data, 2, 0)
        invariants = invariants_to_json(invariant_report(C, SU2, data, W), su_n_reference(2, 2))
        return build_run_report(fixture_of(C, SU2, data), W, invariants, graph_breakdown(contributions), 0, 2, 0, False)

    def test_run_report(self):
        report = self._report()
        assert report["schema"] == SCHEMA == "bv-effective/1"
        assert report["fixture"] == {"algebra": "ce-su2", "lie": "su:2", "betti": [1, 0, 0, 1], "mode": "strict"}
        assert report["invariants"]["F"] == {"2": "-3"}
        assert report["invariants"]["reference"] == {"2": "-3"}
        assert report["invariants"]["F1"] is None

    def test_json_file(self, tmp_path):
        path = tmp_path / "out" / "report.json"
        write_report(path, self._report(), "json")
        loaded = json.loads(path.read_text(encoding="utf-8"))
        assert loaded["schema"] == SCHEMA
        assert path.read_text(encoding="utf-8").startswith('{\n    "schema"')

    def test_markdown(self, tmp_path):
        text = render_markdown(self._report())
        assert text.startswith("# bveff compute report")
        assert "| 2 | -3 |" in text
        assert "`0.0,0.0|0-1x3`" in text
        path = tmp_path / "report.md"
        write_report(path, self._report(), "markdown")
        assert path.read_text(encoding="utf-8") == text
