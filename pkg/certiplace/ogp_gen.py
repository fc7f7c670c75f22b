"""
Optimal-global-placement benchmarks

Coarsens a certified placement by moving modules to the centers of uniform bins, so
detailed placers can be scored on how much of the certified optimum they recover.
"""
import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .bookshelf_io import BenchmarkBundle, write_bundle
from .certificate import OptimalityCertificate
from .core import ModuleKind, Placement
from .errors import ConfigError


logger = logging.getLogger(__name__)


class SnapMode(str, Enum):
    FIX_MACROS = "fix-macros"
    MOVE_ALL = "move-all"


@dataclass(frozen=True)
class BinGrid:
    """Uniform bins of ``width`` x ``height`` grid units starting at the origin"""
    width: int
    height: int
    origin: Tuple[float, float] = (0.0, 0.0)
    unit: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"bins must be at least 1x1, got {self.width}x{self.height}")

    @property
    def label(self) -> str:
        return f"{self.width}x{self.height}"

    def _index(self, value: float, origin: float, size: float) -> int:
        """Bin index of a coordinate; coordinates on a bin edge go to the lower bin"""
        position = (value - origin) / size
        index = math.ceil(position - 1e-9) - 1
        return max(index, 0)

    def containing(self, point: Tuple[float, float]) -> Tuple[int, int]:
        w, h = self.width * self.unit, self.height * self.unit
        return (self._index(point[0], self.origin[0], w),
                self._index(point[1], self.origin[1], h))

    def center(self, index: Tuple[int, int]) -> Tuple[float, float]:
        w, h = self.width * self.unit, self.height * self.unit
        return (self.origin[0] + (index[0] + 0.5) * w, self.origin[1] + (index[1] + 0.5) * h)

    def nearest_center(self, point: Tuple[float, float]) -> Tuple[float, float]:
        w, h = self.width * self.unit, self.height * self.unit
        i = max(0, round((point[0] - self.origin[0]) / w - 0.5))
        j = max(0, round((point[1] - self.origin[1]) / h - 0.5))
        return self.center((int(i), int(j)))


def parse_bins(value: str) -> List[Tuple[int, int]]:
    """
    Parse ``1x1,2x2,4x4`` into (width, height) pairs.

    Example:
        >>> parse_bins("1x1,2x3")
        [(1, 1), (2, 3)]
    """
    sizes = []
    for item in str(value).split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            w, h = item.split("x")
            sizes.append((int(w), int(h)))
        except ValueError:
            raise ConfigError(f"bad bin size {item!r}, expected WxH")
    if not sizes:
        raise ConfigError("no bin sizes given")
    return sizes


def snap_to_bins(bundle: BenchmarkBundle, bins: BinGrid, mode: SnapMode) -> Placement:
    """
    Move every movable module to the center of the bin holding its center.

    Modules sharing a bin end up stacked concentrically; no legalization is done. With
    FIX_MACROS macros keep their positions; with MOVE_ALL movable macros go to the
    nearest bin center.
    """
    netlist, placement = bundle.netlist, bundle.placement
    snapped = placement.copy()
    if bins.width == 1 and bins.height == 1:
        return snapped
    for module in netlist.modules.values():
        if not module.movable or module.id not in placement.positions:
            continue
        position = placement.positions[module.id]
        if module.kind is ModuleKind.MACRO:
            if mode is SnapMode.FIX_MACROS:
                continue
            snapped.positions[module.id] = bins.nearest_center(position)
        else:
            snapped.positions[module.id] = bins.center(bins.containing(position))
    logger.debug("snap_to_bins %s (%s)", bins.label, mode.value)
    return snapped


def max_displacement(before: Placement, after: Placement) -> float:
    """Largest per-axis move of any module"""
    moves = [
        max(abs(x - before.positions[m][0]), abs(y - before.positions[m][1]))
        for m, (x, y) in after.positions.items()
    ]
    return max(moves) if moves else 0.0


@dataclass
class OgpItem:
    bins: str
    mode: str
    aux: str
    max_displacement: float


def ogp_sweep(
    bundle: BenchmarkBundle,
    certificate: OptimalityCertificate,
    sizes: Sequence[Tuple[int, int]],
    mode: SnapMode,
    out_dir,
    certificate_path: Optional[str] = None,
) -> Dict[str, object]:
    """
    Write one OGP bundle per bin size, plus ``<name>.ogp.json`` listing them.

    The manifest carries the source certificate reference and ratio so downstream
    detailed-placement results can be turned into quality ratios.

    Returns:
        The manifest dictionary
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    region = bundle.netlist.region
    origin = (region.xl, region.yl) if region is not None else (0.0, 0.0)
    unit = bundle.placement.grid_unit
    items: List[OgpItem] = []
    for w, h in sizes:
        bins = BinGrid(w, h, origin, unit)
        placement = snap_to_bins(bundle, bins, mode)
        name = f"{bundle.name}_ogp_{bins.label}"
        derived = BenchmarkBundle(name, bundle.netlist, placement, bundle.rows)
        paths = write_bundle(derived, out_dir / name)
        moved = max_displacement(bundle.placement, placement)
        items.append(OgpItem(bins.label, mode.value, str(paths["aux"]), moved))
        logger.info("ogp %s: max displacement %s", name, moved)

    manifest = {
        "source": bundle.name,
        "certificate": certificate_path,
        "rho": certificate.ratio,
        "bound_total": certificate.bound_in_placement_units,
        "mode": mode.value,
        "benchmarks": [item.__dict__ for item in items],
    }
    manifest_path = out_dir / f"{bundle.name}.ogp.json"
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest
