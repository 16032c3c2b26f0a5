"""Console output: status lines and the tables the commands print."""

from collections.abc import Mapping, Sequence
from fractions import Fraction

from rich.console import Console
from rich.table import Table

from .rational import format_rational

console = Console()

_verbose = False


def set_verbose(enabled: bool) -> None:
    global _verbose
    _verbose = enabled


def success(message: str, pre: str = "", post: str = "") -> None:
    console.print(f"{pre}✅  {message}{post}", style="bold green")


def error(message: str, pre: str = "", post: str = "") -> None:
    console.print(f"{pre}❌  {message}{post}", style="bold red")


def warning(message: str, pre: str = "", post: str = "") -> None:
    console.print(f"{pre}⚠️  {message}{post}", style="bold yellow")


def info(message: str, pre: str = "", post: str = "") -> None:
    console.print(f"{pre}ℹ️  {message}{post}", style="cyan")


def step(message: str, pre: str = "", post: str = "") -> None:
    console.print(f"{pre}🧮  {message}{post}", style="blue")


def debug(message: str, pre: str = "", post: str = "") -> None:
    if _verbose:
        console.print(f"{pre}🔍  {message}{post}", style="dim")


def create_table(title: str, *columns: str) -> Table:
    table = Table(title=title, show_header=True, header_style="bold magenta")
    for column in columns:
        table.add_column(column, style="cyan")
    return table


def series_table(title: str, values: Mapping[int, Fraction], reference: Mapping[int, Fraction]) -> Table:
    """hbar^k rows with the computed value and the closed form, "-" where none is known."""
    table = create_table(title, "Order", "Value", "Reference")
    for k, value in sorted(values.items()):
        expected = reference.get(k)
        table.add_row(f"hbar^{k}", format_rational(value), "-" if expected is None else format_rational(expected))
    return table


def verdict_table(quantity: str, orders: Sequence[Mapping[str, object]]) -> Table:
    """One row per compared order; mismatches are shown in red."""
    table = create_table(f"⚖️ {quantity}", "Order", "Left", "Right", "Equal")
    for o in orders:
        equal = "yes" if o["equal"] else "[bold red]no[/bold red]"
        table.add_row(str(o["order"]), str(o["left"]), str(o["right"]), equal)
    return table


def graph_table(lines: Sequence[str]) -> Table:
    """Rows of ``l n V E encoding aut`` lines."""
    table = create_table("🕸️ Graph classes", "l", "n", "V", "E", "Encoding", "|Aut|")
    for line in lines:
        table.add_row(*line.split(" "))
    return table
