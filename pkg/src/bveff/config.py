import configparser
import os
from pathlib import Path
from typing import Literal, NamedTuple

from .exceptions import CapExceededError, ConfigError

_default_config_path = Path.home() / ".bveffconfig"

_config_file_str = os.environ.get("BVEFF_CONFIG_FILE", _default_config_path)

CONFIG_FILE = Path(_config_file_str)

HARD_LOOP_CAP = 6
HARD_LEAF_CAP = 6

Command = Literal["compute", "verify", "compare", "graphs"]
ReportFormat = Literal["json", "markdown"]


class Defaults(NamedTuple):
    loops: int = 2
    leaves: int = 0
    seed: int = 0
    tadpoles: bool = False
    fmt: ReportFormat = "json"
    verbose: bool = False


class RunConfig(NamedTuple):
    command: Command
    algebra_path: Path | None = None
    builtin: str | None = None
    lie_spec: str = "su:2"
    loops: int = 2
    leaves: int = 0
    seed: int = 0
    tadpoles: bool = False
    output_path: Path | None = None
    fmt: ReportFormat = "json"
    suite: str = "all"
    inject_fault: str | None = None
    verbose: bool = False
    marked: str | None = None
    against: str = "homotopy"
    samples: int = 0


def loop_cap() -> int:
    """Loop cap, lowered or restored by ``BV_MAX_LOOPS`` but never above the hard cap."""
    raw = os.environ.get("BV_MAX_LOOPS")
    if raw is None:
        return HARD_LOOP_CAP
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"BV_MAX_LOOPS must be an integer, got {raw!r}") from e
    return max(0, min(value, HARD_LOOP_CAP))


def check_caps(loops: int, leaves: int) -> None:
    if loops < 0 or leaves < 0:
        raise CapExceededError(f"Loop and leaf orders must be non-negative, got L={loops}, n={leaves}")
    cap = loop_cap()
    if loops > cap:
        raise CapExceededError(f"Loop order {loops} exceeds the cap {cap}")
    if leaves > HARD_LEAF_CAP:
        raise CapExceededError(f"Leaf order {leaves} exceeds the cap {HARD_LEAF_CAP}")


def save_defaults(defaults: Defaults):
    try:
        _config = configparser.ConfigParser()
        _config["defaults"] = {
            "loops": str(defaults.loops),
            "leaves": str(defaults.leaves),
            "seed": str(defaults.seed),
            "tadpoles": str(defaults.tadpoles).lower(),
            "format": defaults.fmt,
            "verbose": str(defaults.verbose).lower(),
        }
        CONFIG_FILE.parent.mkdir(parents=True, exist_ok=True)
        with CONFIG_FILE.open("w", encoding="utf-8") as configfile:
            _config.write(configfile)
    except Exception as e:
        raise ConfigError(f"Failed to save configuration: {e}") from e


def load_defaults() -> Defaults:
    if not CONFIG_FILE.exists():
        return Defaults()

    parser = configparser.ConfigParser()
    try:
        _ = parser.read(CONFIG_FILE, encoding="utf-8")
        if not parser.has_section("defaults"):
            return Defaults()
        section = parser["defaults"]
        base = Defaults()
        fmt = section.get("format", base.fmt)
        if fmt not in ("json", "markdown"):
            raise ConfigError(f"Unknown report format in configuration: {fmt!r}")
        return Defaults(
            loops=section.getint("loops", base.loops),
            leaves=section.getint("leaves", base.leaves),
            seed=section.getint("seed", base.seed),
            tadpoles=section.getboolean("tadpoles", base.tadpoles),
            fmt=fmt,
            verbose=section.getboolean("verbose", base.verbose),
        )
    except (ValueError, KeyError, configparser.Error) as e:
        raise ConfigError(f"Failed to load configuration: {e}") from e
