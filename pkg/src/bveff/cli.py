import sys
from pathlib import Path
from typing import Annotated

import typer

from . import commands
from .config import Command, RunConfig, load_defaults
from .exceptions import BVError
from .output import set_verbose

app = typer.Typer(
    name="bveff",
    help="Exact BV effective actions for abstract Chern-Simons theories",
    add_completion=True,
    rich_markup_mode="rich",
)

AlgebraArg = Annotated[Path | None, typer.Argument(help="Algebra spec file (JSON)")]
BuiltinOpt = Annotated[
    str | None,
    typer.Option("-b", "--builtin", help="Built-in algebra: ce-su2, minimal:3,eps, degree12:4,2, doubled:xy, ..."),
]
LieOpt = Annotated[str, typer.Option("--lie", help="Lie algebra: su:N, abelian:n or a spec file")]
LoopsOpt = Annotated[int | None, typer.Option("-L", "--loops", help="Highest power of hbar")]
LeavesOpt = Annotated[int | None, typer.Option("-n", "--leaves", help="Highest number of leaves")]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="Seed for randomized data")]
TadpolesOpt = Annotated[bool | None, typer.Option("--tadpoles/--no-tadpoles", help="Also evaluate tadpole graphs")]
OutputOpt = Annotated[Path | None, typer.Option("-o", "--output", help="Report file")]
FormatOpt = Annotated[str | None, typer.Option("--format", help="Report format: json or markdown")]
VerboseOpt = Annotated[bool, typer.Option("-v", "--verbose", help="Show debug output")]


def _config(command: Command, **options) -> RunConfig:
    defaults = load_defaults()
    resolved = {
        "loops": defaults.loops,
        "leaves": defaults.leaves,
        "seed": defaults.seed,
        "tadpoles": defaults.tadpoles,
        "fmt": defaults.fmt,
    }
    resolved.update({k: v for k, v in options.items() if v is not None})
    if resolved["fmt"] not in ("json", "markdown"):
        raise typer.BadParameter(f"Unknown report format {resolved['fmt']!r}", param_hint="--format")
    verbose = bool(resolved.pop("verbose", False)) or defaults.verbose
    set_verbose(verbose)
    return RunConfig(command=command, verbose=verbose, **resolved)


@app.command()
def compute(
    algebra: AlgebraArg = None,
    builtin: BuiltinOpt = None,
    lie: LieOpt = "su:2",
    loops: LoopsOpt = None,
    leaves: LeavesOpt = None,
    seed: SeedOpt = None,
    tadpoles: TadpolesOpt = None,
    samples: Annotated[int, typer.Option("--samples", help="Maurer-Cartan sample points for the one-loop part")] = 0,
    output: OutputOpt = None,
    fmt: FormatOpt = None,
    verbose: VerboseOpt = False,
):
    """Compute W and its invariants"""
    try:
        cfg = _config(
            "compute",
            algebra_path=algebra,
            builtin=builtin,
            lie_spec=lie,
            loops=loops,
            leaves=leaves,
            seed=seed,
            tadpoles=tadpoles,
            samples=samples,
            output_path=output,
            fmt=fmt,
            verbose=verbose,
        )
        commands.run_compute(cfg)
    except BVError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=e.exit_code) from e


@app.command()
def verify(
    suite: Annotated[
        str,
        typer.Option("--suite", help="qme, oracle, deformation, relaxed, formal, graphs, invariance or all"),
    ] = "all",
    lie: LieOpt = "su:2",
    seed: SeedOpt = None,
    inject_fault: Annotated[
        str | None, typer.Option("--inject-fault", help="broken-jacobi or broken-homotopy")
    ] = None,
    output: OutputOpt = None,
    fmt: FormatOpt = None,
    verbose: VerboseOpt = False,
):
    """Run the property suites over the built-in and seeded fixtures"""
    try:
        cfg = _config(
            "verify",
            suite=suite,
            lie_spec=lie,
            seed=seed,
            inject_fault=inject_fault,
            output_path=output,
            fmt=fmt,
            verbose=verbose,
        )
        commands.run_verify(cfg)
    except BVError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=e.exit_code) from e


@app.command()
def compare(
    algebra: AlgebraArg = None,
    builtin: BuiltinOpt = None,
    lie: LieOpt = "su:2",
    against: Annotated[
        str, typer.Option("--against", help="Second data: homotopy (seeded complement), iota (perturbed) or relaxed")
    ] = "homotopy",
    loops: LoopsOpt = None,
    leaves: LeavesOpt = None,
    seed: SeedOpt = None,
    samples: Annotated[int, typer.Option("--samples", help="Maurer-Cartan sample points when B1 > 0")] = 20,
    output: OutputOpt = None,
    fmt: FormatOpt = None,
    verbose: VerboseOpt = False,
):
    """Compare invariants under two choices of induction data"""
    try:
        cfg = _config(
            "compare",
            algebra_path=algebra,
            builtin=builtin,
            lie_spec=lie,
            against=against,
            loops=loops,
            leaves=leaves,
            seed=seed,
            samples=samples,
            output_path=output,
            fmt=fmt,
            verbose=verbose,
        )
        commands.run_compare(cfg)
    except BVError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=e.exit_code) from e


@app.command()
def graphs(
    loops: LoopsOpt = None,
    leaves: LeavesOpt = None,
    marked: Annotated[str | None, typer.Option("--marked", help="Mark one leaf or one internal edge")] = None,
    tadpoles: TadpolesOpt = None,
    output: OutputOpt = None,
    verbose: VerboseOpt = False,
):
    """List graph classes as `l n V E encoding aut` lines"""
    try:
        cfg = _config(
            "graphs",
            loops=loops,
            leaves=leaves,
            marked=marked,
            tadpoles=tadpoles,
            output_path=output,
            verbose=verbose,
        )
        commands.show_graphs(cfg)
    except BVError as e:
        typer.secho(f"Error: {e}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=e.exit_code) from e


def main() -> None:
    """Main entry point for the CLI."""
    try:
        app()
    except KeyboardInterrupt:
        typer.secho("\nOperation cancelled by user.", fg=typer.colors.YELLOW, err=True)
        sys.exit(130)
    except Exception as e:
        if not isinstance(e, (typer.Exit, BVError)):
            typer.secho(f"Unexpected error: {e}", fg=typer.colors.RED, err=True)
            sys.exit(1)


if __name__ == "__main__":
    main()
