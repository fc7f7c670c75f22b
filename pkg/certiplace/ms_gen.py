"""
Mixed-size benchmark generator

Builds a netlist of locally optimal nets around a grid placement of standard cells and
macros, so the shipped placement carries an explicit HPWL suboptimality bound.
Stages: plan the grid, snap macros, insert white space, build a connected backbone,
optionally thread nonlocal monotone chains between fixed terminals, then fill the
remaining degree budget with local nets.
"""
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bookshelf_io import BenchmarkBundle, uniform_rows
from .certificate import NetRecord, OptimalityCertificate
from .config import MsConfig
from .core import (
    DegreeHistogram,
    GridPoint,
    Module,
    ModuleKind,
    MonotoneChain,
    Net,
    Netlist,
    Pin,
    Placement,
    Rect,
    Region,
    connectivity_check,
    grid_hpwl,
    min_hpwl,
)
from .errors import CertificationError, GridPlanError, NetBudgetExhausted
from .grid import (
    CellState,
    Grid,
    GridPlan,
    SnapReport,
    BinFill,
    insert_white_space,
    insert_white_space_per_bin,
    plan_grid,
    snap_macros,
)


logger = logging.getLogger(__name__)

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_ORDERS = list(itertools.permutations(_STEPS))
_DIRECTIONS = "nsew"


@dataclass(frozen=True)
class SeedBox:
    """Seed pins of a local net and the rectangle grown around them"""
    rect: Rect
    pins: Tuple[GridPoint, ...]
    sequence: str = ""

    @classmethod
    def from_pins(cls, pins: Sequence[Sequence[int]]) -> "SeedBox":
        points = tuple(GridPoint(int(p[0]), int(p[1])) for p in pins)
        lo = GridPoint(min(p.x for p in points), min(p.y for p in points))
        hi = GridPoint(max(p.x for p in points), max(p.y for p in points))
        return cls(Rect(lo, hi), points)


@dataclass
class GridNet:
    """A generated net in grid coordinates, with its certified bound"""
    cells: List[GridPoint]
    hpwl: int
    bound: int
    chain: Optional[str] = None
    box: Optional[SeedBox] = None
    bridge: bool = False

    @property
    def degree(self) -> int:
        return len(self.cells)


@dataclass
class ChainBuild:
    id: str
    nets: List[GridNet]
    path: List[GridPoint]


def split_big_nets(hist: DegreeHistogram, threshold: int) -> DegreeHistogram:
    """Replace every degree above threshold by near-equal parts of at most threshold pins"""
    result = DegreeHistogram()
    for degree, count in hist.items():
        if degree <= threshold:
            result.increment(degree, count)
            continue
        parts = -(-degree // threshold)
        base, extra = divmod(degree, parts)
        for i in range(parts):
            result.increment(base + (1 if i < extra else 0), count)
    return result


class LocalNetGrower:
    """
    Quad-tree growth of optimal-HPWL nets on a grid.

    Keeps a live mask of available pin locations (standard cells and unused macro
    boundary slots); macro slots leave the mask once a net takes them.
    """

    def __init__(self, grid: Grid, rng: np.random.Generator, depth: int = 6, slack: int = 1):
        self.grid = grid
        self.rng = rng
        self.depth = depth
        self.slack = slack
        self.slots = grid.slot_mask()

    def consume(self, cells: Sequence[GridPoint]) -> None:
        grid = self.grid
        for c in cells:
            if 0 <= c.x < grid.width and 0 <= c.y < grid.height \
                    and grid.state[c.y, c.x] == CellState.MACRO_BOUNDARY:
                grid.pin_used[c.y, c.x] = True
                self.slots[c.y, c.x] = False

    def grow(
        self, seed: SeedBox, hist: DegreeHistogram, maximize: bool = False
    ) -> Optional[GridNet]:
        """
        Largest optimal-HPWL net containing the seed pins.

        With ``maximize`` the degree is only capped by the largest degree left in the
        histogram (the backbone settles the budget afterwards); otherwise the degree
        must still be owed by the histogram. Consumed macro slots are marked.
        """
        floor = max(2, len(seed.pins))
        dmax = hist.max_degree(min_degree=2)
        if dmax < floor:
            return None
        reach = min_hpwl(dmax) + self.slack
        grid = self.grid
        r = seed.rect
        x0, y0 = max(0, r.lo.x - reach), max(0, r.lo.y - reach)
        x1, y1 = min(grid.width - 1, r.hi.x + reach), min(grid.height - 1, r.hi.y + reach)

        window = self.slots[y0:y1 + 1, x0:x1 + 1]
        prefix = np.zeros((window.shape[0] + 1, window.shape[1] + 1), dtype=np.int64)
        prefix[1:, 1:] = window.cumsum(axis=0).cumsum(axis=1)
        table = prefix.tolist()
        open_cells = window.tolist()

        def count(box):
            bx0, by0, bx1, by1 = box
            return (table[by1 + 1][bx1 + 1] - table[by0][bx1 + 1]
                    - table[by1 + 1][bx0] + table[by0][bx0])

        seed_box = (r.lo.x - x0, r.lo.y - y0, r.hi.x - x0, r.hi.y - y0)
        limits = (0, 0, x1 - x0, y1 - y0)

        candidates = []
        for order, (box, sequence) in enumerate(self._boxes(seed_box, limits, count, dmax)):
            w = box[2] - box[0] + 1
            h = box[3] - box[1] + 1
            cap = min(count(box), dmax)
            t = cap if maximize else hist.largest_at_most(cap, min_degree=floor)
            if t < floor or min_hpwl(t) + self.slack < w + h - 2:
                continue
            candidates.append((-t, w + h, order, box, sequence, t))
        candidates.sort()

        seeds = [(p.x - x0, p.y - y0) for p in seed.pins]
        for _, _, _, box, sequence, t in candidates:
            picked = self._select(seeds, box, t, open_cells)
            if picked is None:
                continue
            cells = [GridPoint(x + x0, y + y0) for x, y in picked]
            self.consume(cells)
            grown = SeedBox(
                Rect(GridPoint(box[0] + x0, box[1] + y0), GridPoint(box[2] + x0, box[3] + y0)),
                seed.pins,
                sequence,
            )
            return GridNet(cells, grid_hpwl(cells), min_hpwl(t), box=grown)
        return None

    def _boxes(self, seed_box, limits, count, dmax):
        """Enlarged boxes, pruned by capacity; full branching to ``depth`` levels, then
        single most promising direction"""
        slack = self.slack
        lx0, ly0, lx1, ly1 = limits
        sx0, sy0, sx1, sy1 = seed_box

        def feasible(box):
            w = box[2] - box[0] + 1
            h = box[3] - box[1] + 1
            return w + h - 2 <= min_hpwl(max(1, min(count(box), dmax))) + slack

        seen = set()
        out = []
        level = [(0, 0, 0, 0)]
        deepest: List[Tuple[tuple, str]] = []
        for depth in range(self.depth + 1):
            following = set()
            current = []
            for n, s, e, w in level:
                box = (sx0 - w, sy0 - s, sx1 + e, sy1 + n)
                if box[0] < lx0 or box[1] < ly0 or box[2] > lx1 or box[3] > ly1:
                    continue
                if box in seen:
                    continue
                seen.add(box)
                if not feasible(box):
                    continue
                sequence = "n" * n + "s" * s + "e" * e + "w" * w
                out.append((box, sequence))
                current.append((box, sequence))
                following.update(
                    ((n + 1, s, e, w), (n, s + 1, e, w), (n, s, e + 1, w), (n, s, e, w + 1))
                )
            if not following:
                return out
            level = sorted(following)
            deepest = current

        box, sequence = max(deepest, key=lambda item: count(item[0]))
        while True:
            best = None
            for d in _DIRECTIONS:
                grown, strip = _enlarge(box, d)
                if grown[0] < lx0 or grown[1] < ly0 or grown[2] > lx1 or grown[3] > ly1:
                    continue
                gain = count(strip)
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, d, grown)
            if best is None:
                break
            _, d, grown = best
            if grown in seen or not feasible(grown):
                break
            seen.add(grown)
            box, sequence = grown, sequence + d
            out.append((box, sequence))
        return out

    def _select(self, seeds, box, t, open_cells) -> Optional[List[Tuple[int, int]]]:
        """Breadth-first pins from the seeds inside box; None if fewer than t are reachable"""
        bx0, by0, bx1, by1 = box
        order = _ORDERS[int(self.rng.integers(len(_ORDERS)))]
        picked = list(seeds)
        taken = set(seeds)
        queue = list(seeds)
        head = 0
        while head < len(queue) and len(picked) < t:
            x, y = queue[head]
            head += 1
            for dx, dy in order:
                nx, ny = x + dx, y + dy
                if nx < bx0 or nx > bx1 or ny < by0 or ny > by1 or (nx, ny) in taken:
                    continue
                if not open_cells[ny][nx]:
                    continue
                taken.add((nx, ny))
                queue.append((nx, ny))
                picked.append((nx, ny))
                if len(picked) == t:
                    break
        if len(picked) < t:
            return None
        return picked


def _enlarge(box, direction):
    x0, y0, x1, y1 = box
    if direction == "n":
        return (x0, y0, x1, y1 + 1), (x0, y1 + 1, x1, y1 + 1)
    if direction == "s":
        return (x0, y0 - 1, x1, y1), (x0, y0 - 1, x1, y0 - 1)
    if direction == "e":
        return (x0, y0, x1 + 1, y1), (x1 + 1, y0, x1 + 1, y1)
    return (x0 - 1, y0, x1, y1), (x0 - 1, y0, x0 - 1, y1)


def grow_local_net(
    seed: SeedBox,
    grid: Grid,
    hist: DegreeHistogram,
    rng: np.random.Generator,
    depth: int = 6,
    slack: int = 1,
) -> Optional[GridNet]:
    """
    Highest-degree optimal-HPWL net around a seed whose degree the histogram still owes.

    Convenience wrapper over LocalNetGrower for single use; the histogram is not changed.

    Example:
        >>> net = grow_local_net(SeedBox.from_pins([(5, 5)]), grid, hist, rng)
    """
    return LocalNetGrower(grid, rng, depth, slack).grow(seed, hist)


@dataclass
class BackboneReport:
    nets: List[GridNet] = field(default_factory=list)
    compromises: int = 0
    bridges: int = 0


def _charge(hist: DegreeHistogram, degree: int) -> bool:
    """Take a net of this degree out of the budget; True when the compromise rule fired"""
    if hist[degree] > 0:
        hist.decrement(degree)
        return False
    k = hist.smallest_above(degree)
    if k is None:
        raise NetBudgetExhausted(f"no net of degree >= {degree} left in the histogram")
    hist.decrement(k)
    hist.increment(k - degree)
    return True


def build_backbone(
    grid: Grid,
    hist: DegreeHistogram,
    rng: np.random.Generator,
    grower: Optional[LocalNetGrower] = None,
) -> BackboneReport:
    """
    Minimal connected set of local nets covering every standard cell and macro.

    Grows outward from a random first net: each step joins an unconnected module b on
    the frontier to an adjacent connected pin location c with the largest optimal net
    containing both. A net whose degree the histogram does not owe takes its pins from
    the smallest larger degree k, returning a net of degree k - |e| to the budget.

    Raises:
        NetBudgetExhausted: the histogram runs dry before every module is connected
    """
    grower = grower or LocalNetGrower(grid, rng)
    report = BackboneReport()
    width, height = grid.width, grid.height
    size = width * height

    unit_np = np.full((height, width), -1, dtype=np.int64)
    std = grid.state == CellState.STANDARD_CELL
    unit_np[std] = np.arange(size, dtype=np.int64).reshape(height, width)[std]
    mask = grid.macro_mask()
    unit_np[mask] = size + grid.macro_index[mask]
    unit = unit_np.tolist()
    total_units = int(np.count_nonzero(std)) + len(grid.macros)
    if total_units <= 1:
        return report

    macro_cells = [grid.boundary_cells(m) for m in grid.macros]
    connected = bytearray(size + len(grid.macros))
    queued = bytearray(size + len(grid.macros))
    frontier: List[int] = []
    joined = 0

    def unit_cells(u: int) -> List[GridPoint]:
        if u < size:
            return [GridPoint(u % width, u // width)]
        return macro_cells[u - size]

    def commit(net: GridNet) -> None:
        nonlocal joined
        if _charge(hist, net.degree):
            report.compromises += 1
        report.nets.append(net)
        for c in net.cells:
            u = unit[c.y][c.x]
            if connected[u]:
                continue
            connected[u] = 1
            joined += 1
            for cell in unit_cells(u):
                for n in grid.neighbors(cell.x, cell.y):
                    v = unit[n.y][n.x]
                    if v >= 0 and not connected[v] and not queued[v]:
                        queued[v] = 1
                        frontier.append(v)

    if hist.remaining(2) == 0:
        raise NetBudgetExhausted("degree histogram is empty")
    ys, xs = np.nonzero(grower.slots)
    first = None
    for i in rng.permutation(len(xs)):
        first = grower.grow(SeedBox.from_pins([(int(xs[i]), int(ys[i]))]), hist, maximize=True)
        if first is not None:
            break
    if first is None:
        raise GridPlanError("no two adjacent pin locations on the grid")
    commit(first)

    while joined < total_units:
        if not frontier:
            raise GridPlanError("occupied grid cells are not connected")
        if hist.remaining(2) == 0:
            raise NetBudgetExhausted(
                f"histogram exhausted with {total_units - joined} modules unconnected"
            )
        pick = int(rng.integers(len(frontier)))
        frontier[pick], frontier[-1] = frontier[-1], frontier[pick]
        b = frontier.pop()
        if connected[b]:
            continue

        pair = None
        for cell in unit_cells(b):
            if not grower.slots[cell.y, cell.x]:
                continue
            for n in grid.neighbors(cell.x, cell.y):
                v = unit[n.y][n.x]
                if v >= 0 and connected[v] and grower.slots[n.y, n.x]:
                    pair = (cell, n)
                    break
            if pair:
                break

        net = None
        if pair is not None:
            net = grower.grow(SeedBox.from_pins(pair), hist, maximize=True)
        if net is None:
            net = _bridge(grid, grower, unit, connected, unit_cells(b))
            report.bridges += 1
        commit(net)

    logger.info("build_backbone: %d nets, %d compromises, %d bridge nets",
                len(report.nets), report.compromises, report.bridges)
    return report


def _bridge(grid, grower, unit, connected, cells) -> GridNet:
    """Two-pin net from a free slot of b to the nearest connected slot, through occupied cells"""
    starts = [c for c in cells if grower.slots[c.y, c.x]]
    if not starts:
        raise GridPlanError("module has no free pin location to connect")
    seen = set(starts)
    queue = list(starts)
    origin = {c: c for c in starts}
    head = 0
    while head < len(queue):
        c = queue[head]
        head += 1
        for n in grid.neighbors(c.x, c.y):
            if n in seen or grid.state[n.y, n.x] == CellState.WHITE_SPACE:
                continue
            seen.add(n)
            origin[n] = origin[c]
            v = unit[n.y][n.x]
            if v >= 0 and connected[v] and grower.slots[n.y, n.x]:
                cells = [origin[c], n]
                grower.consume(cells)
                return GridNet(cells, grid_hpwl(cells), min_hpwl(2), bridge=True)
            queue.append(n)
    raise GridPlanError("occupied grid cells are not connected")


def fill_nets(
    grid: Grid,
    hist: DegreeHistogram,
    rng: np.random.Generator,
    grower: Optional[LocalNetGrower] = None,
    max_rounds: int = 8,
) -> List[GridNet]:
    """
    Spend the rest of the degree budget on local nets grown at random locations.

    Each round visits the available locations in random order; a location where no
    owed degree fits, or which only reproduces an existing pin set, is retired. Stops
    when the budget is spent, no location is left, or a round adds nothing.
    """
    grower = grower or LocalNetGrower(grid, rng)
    nets: List[GridNet] = []
    seen_sets = set()
    ys, xs = np.nonzero(grower.slots)
    pool = [GridPoint(int(x), int(y)) for x, y in zip(xs, ys)]

    for _ in range(max_rounds):
        if hist.remaining(2) == 0 or not pool:
            break
        added = 0
        keep = []
        for i in rng.permutation(len(pool)):
            p = pool[i]
            if hist.remaining(2) == 0:
                keep.append(p)
                continue
            if not grower.slots[p.y, p.x]:
                continue
            net = grower.grow(SeedBox.from_pins([p]), hist)
            if net is None:
                continue
            key = frozenset(net.cells)
            if key in seen_sets:
                continue
            seen_sets.add(key)
            hist.decrement(net.degree)
            nets.append(net)
            keep.append(p)
            added += 1
        pool = sorted(keep)
        if added == 0:
            break

    if hist.remaining(2):
        logger.warning("fill_nets: %d nets of the histogram could not be placed",
                       hist.remaining(2))
    logger.info("fill_nets: %d local nets", len(nets))
    return nets


def pad_cells(width: int, height: int, count: int) -> List[GridPoint]:
    """Pad sites one grid unit outside the core, spread evenly around its perimeter"""
    if count <= 0:
        return []
    ring = ([GridPoint(x, -1) for x in range(width)]
            + [GridPoint(width, y) for y in range(height)]
            + [GridPoint(x, height) for x in range(width - 1, -1, -1)]
            + [GridPoint(-1, y) for y in range(height - 1, -1, -1)])
    step = len(ring) / count
    picked = []
    for i in range(count):
        cell = ring[int(i * step) % len(ring)]
        if cell not in picked:
            picked.append(cell)
    return picked


def pair_terminals(terminals: Sequence[GridPoint], center: Tuple[float, float]):
    """Antipodal pairs: sort by angle around the center, pair i with i + n // 2"""
    ordered = sorted(
        terminals, key=lambda t: (math.atan2(t.y + 0.5 - center[1], t.x + 0.5 - center[0]), t)
    )
    half = len(ordered) // 2
    return [(ordered[i], ordered[i + half]) for i in range(half)]


def add_nonlocal_chains(
    grid: Grid,
    terminals: Sequence[GridPoint],
    hist: DegreeHistogram,
    rng: np.random.Generator,
    count: int,
    span: float = 0.1,
    grower: Optional[LocalNetGrower] = None,
) -> List[ChainBuild]:
    """
    Thread monotone chains of nets between far-apart fixed terminals.

    Consecutive corner pins sit at randomized distances of about ``span`` of the grid
    width and height, each inside the bounding box of the current corner and the end
    terminal; each net then takes random extra pins from its own box, so its corners
    stay an equivalent edge. Net degrees come out of the histogram.
    """
    if count <= 0:
        return []
    if len(terminals) < 2:
        logger.warning("add_nonlocal_chains: %d terminals, no chain built", len(terminals))
        return []
    grower = grower or LocalNetGrower(grid, rng)
    std = grid.state == CellState.STANDARD_CELL
    pairs = pair_terminals(terminals, (grid.width / 2, grid.height / 2))
    pairs = [pairs[i] for i in rng.permutation(len(pairs))]
    span_x = max(1, int(round(span * grid.width)))
    span_y = max(1, int(round(span * grid.height)))

    chains: List[ChainBuild] = []
    for start, end in pairs:
        if len(chains) == count:
            break
        if abs(start.x - end.x) + abs(start.y - end.y) < 2:
            continue
        chain_id = f"chain{len(chains)}"
        budget = hist.copy()
        built = _thread_chain(grid, std, start, end, budget, rng, span_x, span_y, chain_id)
        if built is None:
            logger.warning("chain %s -> %s abandoned: histogram ran out", start, end)
            continue
        for net in built.nets:
            hist.decrement(net.degree)
            grower.consume(net.cells)
        chains.append(built)

    if len(chains) < count:
        logger.warning("add_nonlocal_chains: %d of %d chains built", len(chains), count)
    logger.info("add_nonlocal_chains: %d chains, %d nets",
                len(chains), sum(len(c.nets) for c in chains))
    return chains


def _clip(value: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, value))


def _thread_chain(grid, std, start, end, budget, rng, span_x, span_y, chain_id):
    sx = 1 if end.x >= start.x else -1
    sy = 1 if end.y >= start.y else -1
    path = [start]
    nets: List[GridNet] = []
    current = start
    while current != end:
        dx = min(abs(end.x - current.x), int(rng.integers((span_x + 1) // 2, 3 * span_x // 2 + 2)))
        dy = min(abs(end.y - current.y), int(rng.integers((span_y + 1) // 2, 3 * span_y // 2 + 2)))
        target = (current.x + sx * dx, current.y + sy * dy)
        nxt = end
        if (dx, dy) != (abs(end.x - current.x), abs(end.y - current.y)):
            nxt = _nearest_std(grid, std, current, end, target) or end

        lo_x = _clip(min(current.x, nxt.x), 0, grid.width - 1)
        hi_x = _clip(max(current.x, nxt.x), 0, grid.width - 1)
        lo_y = _clip(min(current.y, nxt.y), 0, grid.height - 1)
        hi_y = _clip(max(current.y, nxt.y), 0, grid.height - 1)
        ys, xs = np.nonzero(std[lo_y:hi_y + 1, lo_x:hi_x + 1])
        extras = [
            GridPoint(int(x) + lo_x, int(y) + lo_y) for x, y in zip(xs, ys)
            if (int(x) + lo_x, int(y) + lo_y) not in ((current.x, current.y), (nxt.x, nxt.y))
        ]
        degree = _draw_degree(budget, rng)
        if degree == 0:
            return None
        if degree - 2 > len(extras):
            degree = budget.largest_at_most(len(extras) + 2)
            if degree == 0:
                return None
        budget.decrement(degree)
        chosen = sorted(rng.choice(len(extras), size=degree - 2, replace=False).tolist()) \
            if degree > 2 else []
        cells = [current, nxt] + [extras[i] for i in chosen]
        length = abs(nxt.x - current.x) + abs(nxt.y - current.y)
        nets.append(GridNet(cells, length, length, chain=chain_id))
        path.append(nxt)
        current = nxt
    return ChainBuild(chain_id, nets, path)


def _draw_degree(budget: DegreeHistogram, rng) -> int:
    items = budget.items()
    items = [(d, c) for d, c in items if d >= 2]
    if not items:
        return 0
    counts = np.array([c for _, c in items], dtype=np.float64)
    index = int(rng.choice(len(items), p=counts / counts.sum()))
    return items[index][0]


def _nearest_std(grid, std, current, end, target) -> Optional[GridPoint]:
    """Standard cell nearest to target inside the box of (current, end), other than current"""
    lo_x = _clip(min(current.x, end.x), 0, grid.width - 1)
    hi_x = _clip(max(current.x, end.x), 0, grid.width - 1)
    lo_y = _clip(min(current.y, end.y), 0, grid.height - 1)
    hi_y = _clip(max(current.y, end.y), 0, grid.height - 1)
    ys, xs = np.nonzero(std[lo_y:hi_y + 1, lo_x:hi_x + 1])
    if len(xs) == 0:
        return None
    xs = xs + lo_x
    ys = ys + lo_y
    distance = np.abs(xs - target[0]) + np.abs(ys - target[1])
    distance[(xs == current.x) & (ys == current.y)] = np.iinfo(np.int64).max
    best = int(np.argmin(distance))
    if xs[best] == current.x and ys[best] == current.y:
        return None
    return GridPoint(int(xs[best]), int(ys[best]))


@dataclass
class MsBenchmark:
    """Everything generate_ms produces"""
    netlist: Netlist
    placement: Placement
    certificate: OptimalityCertificate
    plan: GridPlan
    grid: Grid
    snap: SnapReport
    bin_fills: List[BinFill] = field(default_factory=list)

    def bundle(self) -> BenchmarkBundle:
        region = self.netlist.region
        return BenchmarkBundle(
            name=self.certificate.name,
            netlist=self.netlist,
            placement=self.placement,
            rows=uniform_rows(region, self.placement.row_height, self.placement.row_height),
        )


class _Assembler:
    """Turns grid nets into modules, pins and a placement scaled by the row height"""

    def __init__(self, grid: Grid, unit: float):
        self.grid = grid
        self.unit = unit
        self.netlist = Netlist(region=Region(0.0, 0.0, grid.width * unit, grid.height * unit))
        self.placement = Placement(grid_unit=unit, row_height=unit)
        self.cell_module: Dict[Tuple[int, int], str] = {}
        self.pads: Dict[GridPoint, str] = {}

        ys, xs = np.nonzero(grid.state == CellState.STANDARD_CELL)
        order = np.lexsort((xs, ys))
        for k, i in enumerate(order):
            x, y = int(xs[i]), int(ys[i])
            module_id = f"c{k}"
            self.netlist.add_module(Module(module_id, ModuleKind.STANDARD_CELL, unit, unit))
            self.placement.positions[module_id] = ((x + 0.5) * unit, (y + 0.5) * unit)
            self.cell_module[(x, y)] = module_id

        for macro in grid.macros:
            r = macro.rect
            annotations = ("terminal",) if macro.fixed else ()
            self.netlist.add_module(
                Module(macro.id, ModuleKind.MACRO, r.width * unit, r.height * unit,
                       not macro.fixed, annotations)
            )
            self.placement.positions[macro.id] = (
                (r.lo.x + r.hi.x + 1) / 2 * unit, (r.lo.y + r.hi.y + 1) / 2 * unit
            )

    def pin(self, cell: GridPoint) -> Pin:
        unit = self.unit
        grid = self.grid
        if not grid.in_bounds(cell.x, cell.y):
            pad = self.pads.get(cell)
            if pad is None:
                pad = f"p{len(self.pads)}"
                self.pads[cell] = pad
                self.netlist.add_module(
                    Module(pad, ModuleKind.TERMINAL, unit, unit, False, ("terminal",))
                )
                self.placement.positions[pad] = ((cell.x + 0.5) * unit, (cell.y + 0.5) * unit)
            return Pin(pad)
        module_id = self.cell_module.get((cell.x, cell.y))
        if module_id is not None:
            return Pin(module_id)
        macro = grid.macro_at(cell.x, cell.y)
        if macro is None:
            raise CertificationError(f"net pin on empty grid cell {cell}")
        cx, cy = self.placement.positions[macro.id]
        return Pin(macro.id, (cell.x + 0.5) * unit - cx, (cell.y + 0.5) * unit - cy)

    def add_net(self, net_id: str, net: GridNet) -> None:
        self.netlist.add_net(Net(net_id, [self.pin(c) for c in net.cells]))


def generate_ms(config: MsConfig) -> MsBenchmark:
    """
    Generate a mixed-size benchmark with its optimality certificate.

    Runs plan_grid, snap_macros, white-space insertion (global, or per bin when a
    utilization target is set), build_backbone, add_nonlocal_chains and fill_nets,
    then assembles and verifies the netlist. The same config and seed always produce
    the same benchmark.

    Raises:
        GridPlanError, WhiteSpaceShortfall, NetBudgetExhausted, CertificationError
    """
    started = time.time()
    config.validate()
    rng = np.random.default_rng(config.seed)

    plan = plan_grid(config)
    grid = Grid(plan.width, plan.height)
    snap = snap_macros(config.macros, grid, config.region)

    bin_fills: List[BinFill] = []
    if config.utilization is not None:
        bin_fills = insert_white_space_per_bin(
            grid, config.bin_rows, config.utilization, config.bfs_iteration_limit, rng,
            config.window_radius,
        )
    else:
        free = grid.size - int(np.count_nonzero(grid.macro_mask()))
        n_ws = free - config.std_cells
        if n_ws < 0:
            raise GridPlanError(
                f"{config.std_cells} standard cells do not fit in {free} non-macro cells"
            )
        columns = (grid.width // 2, grid.width) if config.pack else None
        insert_white_space(grid, n_ws, rng, config.window_radius, columns)
    n_sc = grid.assign_standard_cells()

    target = split_big_nets(config.histogram(), config.big_net_threshold)
    hist = target.copy()
    grower = LocalNetGrower(grid, rng, config.quad_tree_depth, config.slack)
    backbone = build_backbone(grid, hist, rng, grower)

    chains: List[ChainBuild] = []
    if config.nonlocal_chains:
        terminals = pad_cells(grid.width, grid.height, config.pads)
        for macro in grid.macros:
            if macro.fixed:
                r = macro.rect
                for corner in (r.lo, r.hi, GridPoint(r.lo.x, r.hi.y), GridPoint(r.hi.x, r.lo.y)):
                    if grower.slots[corner.y, corner.x] and corner not in terminals:
                        terminals.append(corner)
        chains = add_nonlocal_chains(grid, terminals, hist, rng, config.nonlocal_chains,
                                     config.chain_span, grower)
    filled = fill_nets(grid, hist, rng, grower)

    unit = config.row_height
    assembler = _Assembler(grid, unit)
    records: List[NetRecord] = []
    cert_chains: List[MonotoneChain] = []
    bridge_ids: List[str] = []
    index = 0

    def emit(net: GridNet) -> str:
        nonlocal index
        net_id = f"n{index}"
        index += 1
        assembler.add_net(net_id, net)
        records.append(NetRecord(net_id, net.degree, net.hpwl, net.bound, net.chain))
        if net.bridge:
            bridge_ids.append(net_id)
        return net_id

    for net in backbone.nets:
        emit(net)
    for chain in chains:
        net_ids = [emit(net) for net in chain.nets]
        path = [((c.x + 0.5) * unit, (c.y + 0.5) * unit) for c in chain.path]
        cert_chains.append(MonotoneChain(chain.id, net_ids, path))
    for net in filled:
        emit(net)

    netlist, placement = assembler.netlist, assembler.placement
    certificate = OptimalityCertificate(
        name=config.name,
        seed=config.seed,
        records=records,
        chains=cert_chains,
        grid=(grid.width, grid.height),
        grid_unit=unit,
        parameters={
            **config.to_mapping(),
            "plan": plan.to_dict(),
            "std_cells_placed": n_sc,
            "discarded_macros": [m for m, _ in snap.discarded],
            "compromises": backbone.compromises,
            "bridge_nets": backbone.bridges,
            "bridge_net_ids": bridge_ids,
        },
        unmet={k: v for k, v in hist.items()},
        generator="ms",
    )
    certificate.verify(netlist, placement)

    if config.utilization is not None:
        from .evaluation import UtilizationGrid, bin_overflow

        util = UtilizationGrid.for_netlist(netlist, placement, config.bin_rows, config.utilization)
        certificate.sov_per_bin = bin_overflow(placement, netlist, util).sov_per_bin

    components = connectivity_check(netlist).component_count
    logger.info("generate_ms %s: %d modules, %d nets, rho=%.4f, %d components, %.2f s",
                config.name, len(netlist.modules), len(netlist.nets), certificate.ratio,
                components, time.time() - started)
    return MsBenchmark(netlist, placement, certificate, plan, grid, snap, bin_fills)
