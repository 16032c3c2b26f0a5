"""Tests for console helpers and the command tables."""

from fractions import Fraction
from pathlib import Path

import pytest
import regex
from rich.console import Console

from bveff import output
from bveff.output import graph_table, series_table, verdict_table

SOURCES = Path(__file__).parent.parent / "src" / "bveff"
# status helpers add their own symbol; a second one in the message is redundant
REDUNDANT_SYMBOL = regex.compile(r"^\s*(?:success|error|warning|info|step|debug)\(.*?\p{So}")


def _render(table) -> str:
    console = Console(width=200, record=True)
    console.print(table)
    return console.export_text()


class TestTables:
    """Tables printed by compute, compare and graphs."""

    def test_series_table(self):
        text = _render(series_table("F", {3: Fraction(21, 2), 2: Fraction(-3)}, {2: Fraction(-3)}))
        assert text.index("hbar^2") < text.index("hbar^3")
        assert "21/2" in text
        row = next(line for line in text.splitlines() if "hbar^3" in line)
        assert " - " in row

    @pytest.mark.parametrize("equal,shown", [(True, "yes"), (False, "no")])
    def test_verdict_table(self, equal, shown):
        orders = [{"order": 2, "left": "-3", "right": "-3" if equal else "-4", "equal": equal}]
        text = _render(verdict_table("F(hbar)", orders))
        assert "F(hbar)" in text
        assert shown in text

    def test_graph_table(self):
        text = _render(graph_table(["2 0 2 3 0.0,0.0|0-1x3 12"]))
        assert "0.0,0.0|0-1x3" in text
        assert "12" in text


class TestStatusLines:
    """Emoji-prefixed status helpers."""

    def test_debug_needs_verbose(self, capsys):
        output.set_verbose(False)
        output.debug("hidden")
        assert "hidden" not in capsys.readouterr().out
        output.set_verbose(True)
        try:
            output.debug("shown")
            assert "shown" in capsys.readouterr().out
        finally:
            output.set_verbose(False)

    def test_sources_do_not_repeat_symbols(self):
        offending = [
            f"{path.name}:{i}: {line.strip()}"
            for path in sorted(SOURCES.rglob("*.py"))
            for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1)
            if REDUNDANT_SYMBOL.search(line)
        ]
        assert offending == []
