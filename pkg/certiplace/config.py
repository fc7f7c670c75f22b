"""
Generator configuration

Flat ``key = value`` config files are read with python-dotenv; command-line overrides win
over file values, and environment variables supply the remaining defaults.
"""
import logging
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

from dotenv import dotenv_values

from .core import DegreeHistogram, ModuleKind, Region
from .errors import ConfigError


logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "CERTIPLACE_OUTPUT_DIR"
SEED_ENV = "CERTIPLACE_SEED"

# Requested white space "max": plan_grid clamps it to the most the grid cap allows.
MAX_WHITE_SPACE = 1.0

# Per-bin BFS iteration limits the white space insertion accepts
BFS_LIMIT_RANGE = (200, 800)

# Share of nets per degree when no histogram is configured
_DEFAULT_DEGREE_SHARES = {
    2: 0.58, 3: 0.18, 4: 0.09, 5: 0.05, 6: 0.03, 7: 0.02, 8: 0.02, 9: 0.01, 12: 0.01, 16: 0.01,
}


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, ".")


def default_seed() -> int:
    value = os.environ.get(SEED_ENV, "0")
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {value!r}")


def default_histogram(std_cells: int) -> DegreeHistogram:
    """Typical standard-cell degree mix, roughly one net per cell"""
    return DegreeHistogram(
        {degree: max(1, int(share * std_cells)) for degree, share in _DEFAULT_DEGREE_SHARES.items()}
    )


@dataclass(frozen=True)
class MacroSpec:
    """Macro footprint in region coordinates; (x, y) is the lower-left corner"""
    id: str
    x: float
    y: float
    width: float
    height: float
    fixed: bool = True

    @property
    def xh(self) -> float:
        return self.x + self.width

    @property
    def yh(self) -> float:
        return self.y + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _as_int(value: Any, key: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}")


def _as_float(value: Any, key: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}")


def parse_white_space(value: Any) -> float:
    if isinstance(value, str) and value.strip().lower() == "max":
        return MAX_WHITE_SPACE
    return _as_float(value, "white_space")


def parse_region(value: Any) -> Region:
    """``xl,yl,xh,yh`` or a 4-sequence"""
    parts = value.split(",") if isinstance(value, str) else list(value)
    if len(parts) != 4:
        raise ConfigError(f"region needs 4 numbers, got {value!r}")
    xl, yl, xh, yh = (_as_float(p, "region") for p in parts)
    return Region(xl, yl, xh, yh)


def parse_degrees(value: Any) -> DegreeHistogram:
    """``2:300,3:120`` or a degree -> count mapping"""
    if isinstance(value, DegreeHistogram):
        return value.copy()
    if isinstance(value, Mapping):
        items = value.items()
    else:
        items = []
        for token in str(value).split(","):
            token = token.strip()
            if not token:
                continue
            if ":" not in token:
                raise ConfigError(f"degree entry {token!r} is not degree:count")
            items.append(tuple(token.split(":", 1)))
    counts = {}
    for degree, count in items:
        counts[_as_int(degree, "degrees")] = _as_int(count, "degrees")
    try:
        return DegreeHistogram(counts)
    except ValueError as e:
        raise ConfigError(str(e))


def parse_macros(value: Any) -> List[MacroSpec]:
    """``id:x,y,w,h[:fixed|movable];...`` or a list of dicts"""
    if not value:
        return []
    if not isinstance(value, str):
        return [
            MacroSpec(
                str(m["id"]), float(m["x"]), float(m["y"]),
                float(m["width"]), float(m["height"]), bool(m.get("fixed", True)),
            )
            for m in value
        ]
    macros = []
    for record in value.split(";"):
        record = record.strip()
        if not record:
            continue
        parts = record.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"macro record {record!r} is not id:x,y,w,h[:fixed]")
        numbers = parts[1].split(",")
        if len(numbers) != 4:
            raise ConfigError(f"macro {parts[0]} needs x,y,w,h")
        x, y, w, h = (_as_float(n, "macros") for n in numbers)
        fixed = True
        if len(parts) == 3:
            flag = parts[2].strip().lower()
            if flag not in ("fixed", "movable"):
                raise ConfigError(f"macro {parts[0]}: unknown flag {parts[2]!r}")
            fixed = flag == "fixed"
        macros.append(MacroSpec(parts[0].strip(), x, y, w, h, fixed))
    return macros


@dataclass
class MsConfig:
    """
    Parameters of the mixed-size generator.

    Lengths in ``region`` and ``macros`` are real region coordinates; everything the
    generator builds lives on a grid of ``max_grid_cells`` cells at most.
    """
    name: str = "ms_bench"
    seed: int = 0
    region: Region = field(default_factory=lambda: Region(0.0, 0.0, 100.0, 100.0))
    std_cells: int = 1000
    degrees: Optional[DegreeHistogram] = None
    white_space: float = 0.10
    utilization: Optional[float] = None
    bin_rows: int = 10
    max_grid_cells: int = 2 ** 24
    bfs_iteration_limit: int = 400
    big_net_threshold: int = 500
    slack: int = 1
    quad_tree_depth: int = 6
    window_radius: int = 8
    nonlocal_chains: int = 0
    chain_span: float = 0.1
    pads: int = 0
    pack: bool = False
    row_height: float = 1.0
    macros: List[MacroSpec] = field(default_factory=list)
    source: Optional[str] = None

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "MsConfig":
        """Build a config from strings (config files, CLI) or native values (manifests)"""
        unknown = set(values) - set(cls.keys())
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        config = cls()
        for key, value in values.items():
            if value is None:
                continue
            if key == "name":
                config.name = str(value)
            elif key == "region":
                config.region = parse_region(value)
            elif key == "degrees":
                config.degrees = parse_degrees(value)
            elif key == "macros":
                config.macros = parse_macros(value)
            elif key == "white_space":
                config.white_space = parse_white_space(value)
            elif key in ("utilization", "chain_span", "row_height"):
                setattr(config, key, _as_float(value, key))
            elif key == "pack":
                config.pack = _as_bool(value)
            elif key == "source":
                config.source = str(value) or None
            else:
                setattr(config, key, _as_int(value, key))
        return config

    def to_mapping(self) -> Dict[str, Any]:
        """JSON-friendly form accepted back by from_mapping"""
        region = self.region
        return {
            "name": self.name,
            "seed": self.seed,
            "region": [region.xl, region.yl, region.xh, region.yh],
            "std_cells": self.std_cells,
            "degrees": {str(k): v for k, v in self.histogram().items()},
            "white_space": self.white_space,
            "utilization": self.utilization,
            "bin_rows": self.bin_rows,
            "max_grid_cells": self.max_grid_cells,
            "bfs_iteration_limit": self.bfs_iteration_limit,
            "big_net_threshold": self.big_net_threshold,
            "slack": self.slack,
            "quad_tree_depth": self.quad_tree_depth,
            "window_radius": self.window_radius,
            "nonlocal_chains": self.nonlocal_chains,
            "chain_span": self.chain_span,
            "pads": self.pads,
            "pack": self.pack,
            "row_height": self.row_height,
            "macros": [
                {"id": m.id, "x": m.x, "y": m.y, "width": m.width, "height": m.height,
                 "fixed": m.fixed}
                for m in self.macros
            ],
            "source": self.source,
        }

    def histogram(self) -> DegreeHistogram:
        if self.degrees is None:
            return default_histogram(self.std_cells)
        return self.degrees.copy()

    def validate(self) -> None:
        region = self.region
        if region.width <= 0 or region.height <= 0:
            raise ConfigError("region must have positive width and height")
        if self.std_cells < 1:
            raise ConfigError("std_cells must be at least 1")
        if self.max_grid_cells < self.std_cells:
            raise ConfigError("max_grid_cells must be at least std_cells")
        if not 0.0 <= self.white_space <= MAX_WHITE_SPACE:
            raise ConfigError("white_space must be in [0, 1] or 'max'")
        if self.utilization is not None and not 0.0 < self.utilization <= 1.0:
            raise ConfigError("utilization must be in (0, 1]")
        if self.bin_rows < 1:
            raise ConfigError("bin_rows must be at least 1")
        low, high = BFS_LIMIT_RANGE
        if not low <= self.bfs_iteration_limit <= high:
            raise ConfigError(f"bfs_iteration_limit must be in [{low}, {high}], "
                              f"got {self.bfs_iteration_limit}")
        if self.big_net_threshold < 2:
            raise ConfigError("big_net_threshold must be at least 2")
        if self.slack < 0 or self.quad_tree_depth < 0 or self.window_radius < 1:
            raise ConfigError("slack and quad_tree_depth must be >= 0, window_radius >= 1")
        if self.nonlocal_chains < 0 or self.pads < 0:
            raise ConfigError("nonlocal_chains and pads must be non-negative")
        if not 0.0 < self.chain_span <= 1.0:
            raise ConfigError("chain_span must be in (0, 1]")
        if self.row_height <= 0:
            raise ConfigError("row_height must be positive")
        for degree in self.histogram().degrees():
            if degree < 2:
                raise ConfigError(f"degree histogram has nets of degree {degree}")
        ids = set()
        for m in self.macros:
            if m.id in ids:
                raise ConfigError(f"duplicate macro id {m.id}")
            ids.add(m.id)
            if m.width <= 0 or m.height <= 0:
                raise ConfigError(f"macro {m.id} has non-positive size")
            if m.x < region.xl or m.y < region.yl or m.xh > region.xh or m.yh > region.yh:
                raise ConfigError(f"macro {m.id} lies outside the region")


@dataclass
class McConfig:
    """Parameters of the netlist rewriter that makes a given placement optimal"""
    name: str = "mc_bench"
    seed: int = 0
    max_chains_per_terminal: int = 4
    min_terminal_distance: float = 0.0
    snap: bool = False

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "McConfig":
        unknown = set(values) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        config = cls()
        for key, value in values.items():
            if value is None:
                continue
            if key == "name":
                config.name = str(value)
            elif key == "snap":
                config.snap = _as_bool(value)
            elif key == "min_terminal_distance":
                config.min_terminal_distance = _as_float(value, key)
            else:
                setattr(config, key, _as_int(value, key))
        return config

    def to_mapping(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self) -> None:
        if self.max_chains_per_terminal < 1:
            raise ConfigError("max_chains_per_terminal must be at least 1")
        if self.min_terminal_distance < 0:
            raise ConfigError("min_terminal_distance must be non-negative")


def read_config_file(path) -> Dict[str, str]:
    """Flat key/value pairs of a config file; blank values are dropped"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return {k.strip(): v for k, v in dotenv_values(path).items() if v not in (None, "")}


def _apply_source(config: MsConfig, explicit: set) -> MsConfig:
    """Take region, macros, degree histogram and N_sc from a Bookshelf design"""
    from .bookshelf_io import extract_degree_histogram, parse_bundle

    bundle = parse_bundle(config.source)
    netlist, placement = bundle.netlist, bundle.placement
    if "region" not in explicit and bundle.region is not None:
        config.region = bundle.region
    if "degrees" not in explicit:
        config.degrees = extract_degree_histogram(netlist)
    if "std_cells" not in explicit:
        config.std_cells = sum(
            1 for m in netlist.modules.values() if m.kind is ModuleKind.STANDARD_CELL
        )
    if "macros" not in explicit:
        macros = []
        for m in netlist.modules.values():
            if m.kind is not ModuleKind.MACRO or m.id not in placement.positions:
                continue
            cx, cy = placement.positions[m.id]
            macros.append(
                MacroSpec(m.id, cx - m.width / 2, cy - m.height / 2, m.width, m.height,
                          not m.movable)
            )
        config.macros = macros
    if "row_height" not in explicit and bundle.row_height:
        config.row_height = bundle.row_height
    logger.info("config source %s: %d std cells, %d macros, %d nets",
                config.source, config.std_cells, len(config.macros), len(netlist.nets))
    return config


def load_ms_config(path=None, overrides: Optional[Mapping[str, Any]] = None) -> MsConfig:
    """
    Resolve an MsConfig from a config file, overrides and the environment.

    Args:
        path: Optional key/value config file
        overrides: Values that win over the file (None values are ignored)

    Returns:
        Validated MsConfig

    Example:
        >>> config = load_ms_config("ms.cfg", {"white_space": "0.2", "seed": 7})
    """
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "seed" not in values:
        values["seed"] = default_seed()
    config = MsConfig.from_mapping(values)
    if config.source:
        config = _apply_source(config, set(values))
    config.validate()
    return config


def load_mc_config(path=None, overrides: Optional[Mapping[str, Any]] = None) -> McConfig:
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "seed" not in values:
        values["seed"] = default_seed()
    config = McConfig.from_mapping(values)
    config.validate()
    return config
