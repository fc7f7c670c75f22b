"""
Placement grid for the mixed-size generator

Grid planning from area fractions, macro snapping and white-space insertion that keeps
the occupied part of the grid 4-connected.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .config import MsConfig, MacroSpec
from .core import GridPoint, Rect, Region, UnionFind
from .errors import GridPlanError, WhiteSpaceShortfall


logger = logging.getLogger(__name__)

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class CellState(IntEnum):
    UNASSIGNED = 0
    WHITE_SPACE = 1
    STANDARD_CELL = 2
    MACRO_INTERIOR = 3
    MACRO_BOUNDARY = 4


@dataclass
class GridPlan:
    """
    Outcome of the grid arithmetic.

    ``n_g`` is the planned cell count; ``width * height`` >= ``n_g`` is the realized grid.
    """
    n_g: int
    width: int
    height: int
    n_sc: int
    phi_mac: float
    phi_sc: float
    phi_ws: float
    n_ws: int
    cap: int
    requested_ws: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


@dataclass
class GridMacro:
    id: str
    rect: Rect
    fixed: bool
    spec: Optional[MacroSpec] = None


@dataclass
class SnapReport:
    kept: List[GridMacro] = field(default_factory=list)
    discarded: List[Tuple[str, str]] = field(default_factory=list)


def _grid_shape(n_g: int, aspect: float) -> Tuple[int, int]:
    """(W, H) with W * H >= n_g and W / H close to the region aspect ratio"""
    guess = math.sqrt(n_g / aspect)
    best = None
    for h in range(max(1, int(guess) - 2), int(math.ceil(guess)) + 3):
        w = max(1, -(-n_g // h))
        key = (abs(w / h - aspect), w * h)
        if best is None or key < best[0]:
            best = (key, w, h)
    return best[1], best[2]


def plan_grid(config: MsConfig) -> GridPlan:
    """
    Apply the grid arithmetic: macro fraction, white-space clamp, cell count and shape.

    Raises:
        GridPlanError: no area is left for standard cells
    """
    region = config.region
    area = region.area
    phi_mac = sum(m.area for m in config.macros) / area
    if phi_mac >= 1.0:
        raise GridPlanError(f"macros cover {phi_mac:.3f} of the region")

    n_sc = config.std_cells
    cap = config.max_grid_cells
    phi_ws = min(config.white_space, 1.0 - phi_mac - n_sc / cap)
    phi_sc = 1.0 - phi_mac - phi_ws
    if phi_sc <= 0 or phi_ws < -1e-12:
        raise GridPlanError(
            f"no room for {n_sc} standard cells: phi_mac={phi_mac:.3f}, phi_ws={phi_ws:.3f}"
        )
    phi_ws = max(phi_ws, 0.0)

    n_g = int(math.ceil(n_sc / phi_sc - 1e-9))
    if n_g > cap:
        n_g = cap
        phi_sc = n_sc / n_g
        phi_ws = 1.0 - phi_mac - phi_sc
        if phi_ws < -1e-12:
            raise GridPlanError(f"{n_sc} standard cells do not fit in {cap} grid cells")
    n_ws = int(round(phi_ws * n_g))

    width, height = _grid_shape(n_g, region.width / region.height)
    plan = GridPlan(n_g, width, height, n_sc, phi_mac, phi_sc, phi_ws, n_ws, cap,
                    config.white_space)
    logger.info("plan_grid: %dx%d grid, phi_mac=%.3f phi_sc=%.3f phi_ws=%.3f",
                width, height, phi_mac, phi_sc, phi_ws)
    return plan


class Grid:
    """
    Occupancy raster indexed ``[y, x]``.

    ``state`` holds CellState codes, ``macro_index`` the position of the owning macro in
    ``macros`` (-1 elsewhere), ``pin_used`` whether a macro-boundary slot carries a pin.
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise GridPlanError(f"grid must be at least 1x1, got {width}x{height}")
        self.width = width
        self.height = height
        self.state = np.zeros((height, width), dtype=np.int8)
        self.macro_index = np.full((height, width), -1, dtype=np.int32)
        self.pin_used = np.zeros((height, width), dtype=bool)
        self.macros: List[GridMacro] = []

    def __repr__(self) -> str:
        return f"Grid<{self.width}x{self.height}, macros={len(self.macros)}>"

    @property
    def size(self) -> int:
        return self.width * self.height

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def cell(self, x: int, y: int) -> CellState:
        return CellState(int(self.state[y, x]))

    def neighbors(self, x: int, y: int) -> Iterator[GridPoint]:
        for dx, dy in _STEPS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < self.width and 0 <= ny < self.height:
                yield GridPoint(nx, ny)

    def count(self, state: CellState) -> int:
        return int(np.count_nonzero(self.state == state))

    def occupied_mask(self) -> np.ndarray:
        return self.state != CellState.WHITE_SPACE

    def macro_mask(self) -> np.ndarray:
        return self.macro_index >= 0

    def component_count(self) -> int:
        """4-connected components of the non-white cells"""
        _, count = ndimage.label(self.occupied_mask())
        return int(count)

    def macro_at(self, x: int, y: int) -> Optional[GridMacro]:
        index = int(self.macro_index[y, x])
        return self.macros[index] if index >= 0 else None

    def boundary_cells(self, macro: GridMacro) -> List[GridPoint]:
        rect = macro.rect
        return [
            c for c in rect.cells()
            if c.x in (rect.lo.x, rect.hi.x) or c.y in (rect.lo.y, rect.hi.y)
        ]

    def place_macro(self, macro: GridMacro) -> None:
        rect = macro.rect
        index = len(self.macros)
        self.macros.append(macro)
        window = (slice(rect.lo.y, rect.hi.y + 1), slice(rect.lo.x, rect.hi.x + 1))
        self.macro_index[window] = index
        self.state[window] = CellState.MACRO_BOUNDARY
        if rect.width > 2 and rect.height > 2:
            self.state[rect.lo.y + 1:rect.hi.y, rect.lo.x + 1:rect.hi.x] = CellState.MACRO_INTERIOR

    def assign_standard_cells(self) -> int:
        """Turn every unassigned cell into a standard cell; returns the count"""
        mask = self.state == CellState.UNASSIGNED
        self.state[mask] = CellState.STANDARD_CELL
        return int(np.count_nonzero(mask))

    def is_slot(self, x: int, y: int) -> bool:
        """True for a standard cell or an unused macro-boundary pin slot"""
        s = self.state[y, x]
        if s == CellState.STANDARD_CELL:
            return True
        return s == CellState.MACRO_BOUNDARY and not self.pin_used[y, x]

    def slot_mask(self) -> np.ndarray:
        return (self.state == CellState.STANDARD_CELL) | (
            (self.state == CellState.MACRO_BOUNDARY) & ~self.pin_used
        )

    def copy(self) -> "Grid":
        other = Grid(self.width, self.height)
        other.state = self.state.copy()
        other.macro_index = self.macro_index.copy()
        other.pin_used = self.pin_used.copy()
        other.macros = list(self.macros)
        return other


def snap_macros(macros: Sequence[MacroSpec], grid: Grid, region: Region) -> SnapReport:
    """
    Map real macro boxes onto grid rectangles by scaling and truncation.

    A macro covering x in [x0, x1) of the region occupies columns floor(fx0) ..
    floor(fx1) - 1 where fx is the coordinate scaled to grid units. Macros truncated to
    nothing, and macros overlapping an earlier one, are discarded and reported.
    """
    report = SnapReport()
    sx = grid.width / region.width
    sy = grid.height / region.height
    for spec in macros:
        lo_x = int(math.floor((spec.x - region.xl) * sx + 1e-9))
        lo_y = int(math.floor((spec.y - region.yl) * sy + 1e-9))
        hi_x = min(int(math.floor((spec.xh - region.xl) * sx + 1e-9)), grid.width) - 1
        hi_y = min(int(math.floor((spec.yh - region.yl) * sy + 1e-9)), grid.height) - 1
        if hi_x < lo_x or hi_y < lo_y:
            report.discarded.append((spec.id, "truncated to zero size"))
            continue
        rect = Rect(GridPoint(lo_x, lo_y), GridPoint(hi_x, hi_y))
        clash = next((m for m in report.kept if m.rect.overlaps(rect)), None)
        if clash is not None:
            report.discarded.append((spec.id, f"overlaps {clash.id} on the grid"))
            continue
        macro = GridMacro(spec.id, rect, spec.fixed, spec)
        grid.place_macro(macro)
        report.kept.append(macro)
    logger.info("snap_macros: %d macros, %d discarded", len(report.kept), len(report.discarded))
    for macro_id, reason in report.discarded:
        logger.warning("macro %s discarded: %s", macro_id, reason)
    return report


def _joined(open_mask: np.ndarray, starts: Sequence[Tuple[int, int]], bounds) -> bool:
    """
    True iff all start cells are connected through open cells inside bounds.

    One breadth-first search runs per start cell, interleaved; searches that meet are
    merged, and a merged group that runs out of frontier proves a disconnection.
    """
    x0, y0, x1, y1 = bounds
    k = len(starts)
    groups = UnionFind(k)
    owner: Dict[Tuple[int, int], int] = {}
    frontiers = []
    for i, start in enumerate(starts):
        owner[start] = i
        frontiers.append(deque([start]))

    while groups.count() > 1:
        for i in range(k):
            queue = frontiers[i]
            if not queue:
                continue
            x, y = queue.popleft()
            for dx, dy in _STEPS:
                nx, ny = x + dx, y + dy
                if nx < x0 or nx > x1 or ny < y0 or ny > y1 or not open_mask[ny, nx]:
                    continue
                j = owner.get((nx, ny))
                if j is None:
                    owner[(nx, ny)] = i
                    queue.append((nx, ny))
                else:
                    groups.union(i, j)
        if groups.count() == 1:
            return True
        closed: Dict[int, bool] = {}
        for i in range(k):
            root = groups.find(i)
            closed[root] = closed.get(root, True) and not frontiers[i]
        if any(closed.values()):
            return False
    return True


def _neighbors_joined(grid: Grid, open_mask: np.ndarray, x: int, y: int, radius: int) -> bool:
    # (x, y) must already be closed in open_mask
    starts = [(n.x, n.y) for n in grid.neighbors(x, y) if open_mask[n.y, n.x]]
    if len(starts) <= 1:
        return True
    window = (max(0, x - radius), max(0, y - radius),
              min(grid.width - 1, x + radius), min(grid.height - 1, y + radius))
    if _joined(open_mask, starts, window):
        return True
    return _joined(open_mask, starts, (0, 0, grid.width - 1, grid.height - 1))


def removal_keeps_connectivity(grid: Grid, x: int, y: int, window_radius: int = 8) -> bool:
    """
    True iff the non-white 4-neighbors of (x, y) stay connected without (x, y).

    Tries a search bounded to a square window first and falls back to the whole grid.
    """
    open_mask = grid.state != CellState.WHITE_SPACE
    open_mask[y, x] = False
    return _neighbors_joined(grid, open_mask, x, y, window_radius)


class _Remover:
    """Whitens cells against a live occupancy mask kept in step with the grid"""

    def __init__(self, grid: Grid, window_radius: int):
        self.grid = grid
        self.radius = window_radius
        self.open_mask = grid.state != CellState.WHITE_SPACE

    def try_remove(self, x: int, y: int) -> bool:
        self.open_mask[y, x] = False
        if not _neighbors_joined(self.grid, self.open_mask, x, y, self.radius):
            self.open_mask[y, x] = True
            return False
        self.grid.state[y, x] = CellState.WHITE_SPACE
        return True


def insert_white_space(
    grid: Grid,
    n_ws: int,
    rng: np.random.Generator,
    window_radius: int = 8,
    columns: Optional[Tuple[int, int]] = None,
) -> int:
    """
    Whiten n_ws unassigned cells in random order, skipping any cell whose removal would
    disconnect its occupied neighbors.

    Args:
        grid: Grid with macros snapped
        n_ws: Number of white-space cells to insert
        rng: Seeded generator
        window_radius: Half-size of the local connectivity window
        columns: Optional [start, stop) column range the white space is confined to

    Returns:
        Number of cells whitened (= n_ws)

    Raises:
        WhiteSpaceShortfall: every candidate was examined and n_ws was not reached
    """
    if n_ws <= 0:
        return 0
    candidates = grid.state == CellState.UNASSIGNED
    if columns is not None:
        allowed = np.zeros_like(candidates)
        allowed[:, columns[0]:columns[1]] = True
        candidates &= allowed
    ys, xs = np.nonzero(candidates)
    order = rng.permutation(len(xs))
    remover = _Remover(grid, window_radius)

    remaining = n_ws
    for i in order:
        if remaining == 0:
            break
        if remover.try_remove(int(xs[i]), int(ys[i])):
            remaining -= 1
    if remaining:
        raise WhiteSpaceShortfall(remaining)
    logger.info("insert_white_space: %d cells whitened, %d candidates", n_ws, len(xs))
    return n_ws


@dataclass
class BinFill:
    """White-space outcome of one utilization bin"""
    bin: Tuple[int, int]
    free_cells: int
    movable_cells: int
    target: int
    inserted: int
    attempts: int

    @property
    def residual(self) -> int:
        return self.target - self.inserted


def insert_white_space_per_bin(
    grid: Grid,
    bin_cells: int,
    utilization: float,
    iteration_limit: int,
    rng: np.random.Generator,
    window_radius: int = 8,
) -> List[BinFill]:
    """
    Insert white space bin by bin so each square bin approaches a utilization target.

    A bin's free area excludes fixed macros; its movable area is every other non-white
    cell. The bin gets round(movable - utilization * free) white cells, tried in random
    order with at most ``iteration_limit`` connectivity checks. Shortfalls are returned,
    not raised.
    """
    remover = _Remover(grid, window_radius)
    fixed = np.zeros(grid.state.shape, dtype=bool)
    for macro in grid.macros:
        if macro.fixed:
            r = macro.rect
            fixed[r.lo.y:r.hi.y + 1, r.lo.x:r.hi.x + 1] = True

    fills = []
    for by in range(0, grid.height, bin_cells):
        for bx in range(0, grid.width, bin_cells):
            window = (slice(by, by + bin_cells), slice(bx, bx + bin_cells))
            free = int(np.count_nonzero(~fixed[window]))
            key = (bx // bin_cells, by // bin_cells)
            if free == 0:
                continue
            movable = int(np.count_nonzero(~fixed[window] & remover.open_mask[window]))
            target = max(0, int(round(movable - utilization * free)))
            ys, xs = np.nonzero(grid.state[window] == CellState.UNASSIGNED)
            order = rng.permutation(len(xs))
            inserted = attempts = 0
            for i in order:
                if inserted >= target or attempts >= iteration_limit:
                    break
                attempts += 1
                if remover.try_remove(bx + int(xs[i]), by + int(ys[i])):
                    inserted += 1
            fills.append(BinFill(key, free, movable, target, inserted, attempts))

    short = [f for f in fills if f.residual > 0]
    logger.info("insert_white_space_per_bin: %d bins, %d short by %d cells in total",
                len(fills), len(short), sum(f.residual for f in short))
    return fills
