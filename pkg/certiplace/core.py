"""
Netlist and placement model

Hypergraph netlists, module-center placements, half-perimeter wirelength (HPWL)
arithmetic, the t-pin lower bound, equivalent edges and monotone-chain predicates.
Everything else in the package is built on these types.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from .errors import CertiplaceError, NotGridIntegralError, UnplacedPinError


logger = logging.getLogger(__name__)

Point = Tuple[float, float]

_EPS = 1e-9


class GridPoint(NamedTuple):
    """Integer grid-cell coordinate; the cell center is a candidate pin location"""
    x: int
    y: int


@dataclass(frozen=True)
class Rect:
    """Inclusive rectangle of grid cells"""
    lo: GridPoint
    hi: GridPoint

    def __post_init__(self):
        if self.lo.x > self.hi.x or self.lo.y > self.hi.y:
            raise ValueError(f"empty rectangle {self.lo} .. {self.hi}")

    @classmethod
    def spanning(cls, a: Sequence[int], b: Sequence[int]) -> "Rect":
        """Smallest rectangle containing both grid points"""
        return cls(
            GridPoint(min(a[0], b[0]), min(a[1], b[1])),
            GridPoint(max(a[0], b[0]), max(a[1], b[1])),
        )

    @property
    def width(self) -> int:
        return self.hi.x - self.lo.x + 1

    @property
    def height(self) -> int:
        return self.hi.y - self.lo.y + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def half_perimeter(self) -> int:
        """HPWL of pins placed on opposite corners of the rectangle"""
        return (self.hi.x - self.lo.x) + (self.hi.y - self.lo.y)

    def contains(self, p: Sequence[float]) -> bool:
        return self.lo.x <= p[0] <= self.hi.x and self.lo.y <= p[1] <= self.hi.y

    def overlaps(self, other: "Rect") -> bool:
        return not (
            other.lo.x > self.hi.x
            or other.hi.x < self.lo.x
            or other.lo.y > self.hi.y
            or other.hi.y < self.lo.y
        )

    def cells(self) -> Iterator[GridPoint]:
        for y in range(self.lo.y, self.hi.y + 1):
            for x in range(self.lo.x, self.hi.x + 1):
                yield GridPoint(x, y)


@dataclass(frozen=True)
class Region:
    """Placement region in real (physical) coordinates"""
    xl: float
    yl: float
    xh: float
    yh: float

    @property
    def width(self) -> float:
        return self.xh - self.xl

    @property
    def height(self) -> float:
        return self.yh - self.yl

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def half_perimeter(self) -> float:
        return self.width + self.height


class ModuleKind(str, Enum):
    STANDARD_CELL = "StandardCell"
    MACRO = "Macro"
    TERMINAL = "Terminal"


@dataclass
class Module:
    """
    A placeable object of the netlist.

    Args:
        id: Unique module name
        kind: Standard cell, macro (taller than one row) or fixed terminal
        width: Width in placement units
        height: Height in placement units
        movable: False for fixed objects (Bookshelf ``terminal``)
        annotations: Trailing tokens of the Bookshelf node record, kept verbatim
    """
    id: str
    kind: ModuleKind
    width: float
    height: float
    movable: bool = True
    annotations: Tuple[str, ...] = ()

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Pin:
    """Connection of a net to a module, offset from the module center"""
    module: str
    dx: float = 0.0
    dy: float = 0.0
    direction: str = "B"


@dataclass
class Net:
    id: str
    pins: List[Pin]

    @property
    def degree(self) -> int:
        return len(self.pins)

    @property
    def modules(self) -> List[str]:
        return [p.module for p in self.pins]


class Netlist:
    """
    Hypergraph of modules and nets over a placement region.

    Modules keep insertion order; nets keep insertion order and are addressable by id.
    """

    def __init__(
        self,
        modules: Iterable[Module] = (),
        nets: Iterable[Net] = (),
        region: Optional[Region] = None,
    ):
        self.modules: Dict[str, Module] = {}
        self.nets: List[Net] = []
        self._net_index: Dict[str, int] = {}
        self.region = region
        for module in modules:
            self.add_module(module)
        for net in nets:
            self.add_net(net)

    def __repr__(self) -> str:
        return f"Netlist<modules={len(self.modules)}, nets={len(self.nets)}>"

    def add_module(self, module: Module) -> None:
        if module.id in self.modules:
            raise CertiplaceError(f"duplicate module id {module.id}")
        self.modules[module.id] = module

    def add_net(self, net: Net) -> None:
        if net.id in self._net_index:
            raise CertiplaceError(f"duplicate net id {net.id}")
        for pin in net.pins:
            if pin.module not in self.modules:
                raise CertiplaceError(f"net {net.id} references unknown module {pin.module}")
        self._net_index[net.id] = len(self.nets)
        self.nets.append(net)

    def replace_net(self, net: Net) -> None:
        """Swap in a new pin list for an existing net id, keeping its position"""
        try:
            index = self._net_index[net.id]
        except KeyError:
            raise CertiplaceError(f"unknown net {net.id}")
        for pin in net.pins:
            if pin.module not in self.modules:
                raise CertiplaceError(f"net {net.id} references unknown module {pin.module}")
        self.nets[index] = net

    def net(self, net_id: str) -> Net:
        try:
            return self.nets[self._net_index[net_id]]
        except KeyError:
            raise CertiplaceError(f"unknown net {net_id}")

    def has_net(self, net_id: str) -> bool:
        return net_id in self._net_index

    def module(self, module_id: str) -> Module:
        try:
            return self.modules[module_id]
        except KeyError:
            raise CertiplaceError(f"unknown module {module_id}")

    @property
    def num_pins(self) -> int:
        return sum(net.degree for net in self.nets)

    def movable_ids(self) -> List[str]:
        return [m.id for m in self.modules.values() if m.movable]

    def fixed_ids(self) -> List[str]:
        return [m.id for m in self.modules.values() if not m.movable]

    def cell_degrees(self) -> Dict[str, int]:
        """Number of nets containing each module"""
        degrees = {module_id: 0 for module_id in self.modules}
        for net in self.nets:
            for module_id in set(net.modules):
                degrees[module_id] += 1
        return degrees

    def copy(self) -> "Netlist":
        return Netlist(
            list(self.modules.values()),
            [Net(n.id, list(n.pins)) for n in self.nets],
            self.region,
        )


@dataclass
class Placement:
    """
    Module centers in region coordinates.

    ``grid_unit`` turns coordinates into grid units for certificate arithmetic; it is
    the row height for generated and parsed placements.
    """
    positions: Dict[str, Point] = field(default_factory=dict)
    orientations: Dict[str, str] = field(default_factory=dict)
    grid_unit: float = 1.0
    row_height: float = 1.0

    def location(self, module_id: str) -> Point:
        try:
            return self.positions[module_id]
        except KeyError:
            raise UnplacedPinError(module_id)

    def copy(self) -> "Placement":
        return Placement(
            dict(self.positions), dict(self.orientations), self.grid_unit, self.row_height
        )


class UnionFind:
    """
    Disjoint sets over 0..n-1 with path halving and union by rank.
    """

    def __init__(self, n: int):
        self._parent = list(range(n))
        self._rank = [0] * n
        self._count = n

    def count(self) -> int:
        """Number of disjoint sets"""
        return self._count

    def find(self, x: int) -> int:
        parent = self._parent
        while x != parent[x]:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def linked(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; returns False when they were already joined"""
        i = self.find(x)
        j = self.find(y)
        if i == j:
            return False
        if self._rank[i] < self._rank[j]:
            i, j = j, i
        self._parent[j] = i
        if self._rank[i] == self._rank[j]:
            self._rank[i] += 1
        self._count -= 1
        return True


class DegreeHistogram:
    """
    Target number of nets per net degree (N_#).

    Acts as a mutable budget during generation: generators decrement the entry of
    every net they emit. Zero entries are not stored.
    """

    def __init__(self, counts: Optional[Mapping[int, int]] = None):
        self._counts: Dict[int, int] = {}
        for degree, count in (counts or {}).items():
            self[int(degree)] = int(count)

    @classmethod
    def from_degrees(cls, degrees: Iterable[int]) -> "DegreeHistogram":
        hist = cls()
        for degree in degrees:
            hist.increment(degree)
        return hist

    def __getitem__(self, degree: int) -> int:
        return self._counts.get(degree, 0)

    def __setitem__(self, degree: int, count: int) -> None:
        if count < 0:
            raise ValueError(f"negative count {count} for degree {degree}")
        if count == 0:
            self._counts.pop(degree, None)
        else:
            self._counts[degree] = count

    def __eq__(self, other) -> bool:
        if not isinstance(other, DegreeHistogram):
            return NotImplemented
        return self._counts == other._counts

    def __repr__(self) -> str:
        return f"DegreeHistogram({dict(self.items())})"

    def __bool__(self) -> bool:
        return bool(self._counts)

    def increment(self, degree: int, n: int = 1) -> None:
        self[degree] = self[degree] + n

    def decrement(self, degree: int, n: int = 1) -> None:
        if self[degree] < n:
            raise ValueError(f"histogram has no net of degree {degree} left")
        self[degree] = self[degree] - n

    def items(self) -> List[Tuple[int, int]]:
        return sorted(self._counts.items())

    def degrees(self) -> List[int]:
        return sorted(self._counts)

    def to_dict(self) -> Dict[int, int]:
        return dict(self.items())

    def copy(self) -> "DegreeHistogram":
        return DegreeHistogram(self._counts)

    def max_degree(self, min_degree: int = 1) -> int:
        """Largest degree with a nonzero count (0 when none is left)"""
        candidates = [d for d in self._counts if d >= min_degree]
        return max(candidates) if candidates else 0

    def largest_at_most(self, limit: int, min_degree: int = 2) -> int:
        """Largest degree in [min_degree, limit] with a nonzero count, or 0"""
        candidates = [d for d in self._counts if min_degree <= d <= limit]
        return max(candidates) if candidates else 0

    def smallest_above(self, degree: int) -> Optional[int]:
        candidates = [d for d in self._counts if d > degree]
        return min(candidates) if candidates else None

    def remaining(self, min_degree: int = 2) -> int:
        """Number of nets still owed at degree >= min_degree"""
        return sum(c for d, c in self._counts.items() if d >= min_degree)

    @property
    def total_nets(self) -> int:
        return sum(self._counts.values())

    @property
    def total_pins(self) -> int:
        return sum(d * c for d, c in self._counts.items())


class Direction(str, Enum):
    """Direction of a monotone chain through an equivalent edge"""
    LL_UR = "LL->UR"
    LR_UL = "LR->UL"


@dataclass(frozen=True)
class EquivalentEdge:
    """
    Pin pair of a placed net whose bounding box equals the net's bounding box.

    ``pins`` indexes ``net.pins``; ``directions`` lists the chain directions the edge
    can serve (both for axis-parallel edges).
    """
    start: Point
    end: Point
    pins: Tuple[int, int]
    directions: FrozenSet[Direction]

    def oriented(self, direction: Direction) -> Tuple[Point, Point, int, int]:
        """Endpoints ordered along ``direction`` as (start, end, start pin, end pin)"""
        if direction is Direction.LL_UR:
            key = lambda p: (p[0], p[1])  # noqa: E731
        else:
            key = lambda p: (-p[0], p[1])  # noqa: E731
        if key(self.start) <= key(self.end):
            return self.start, self.end, self.pins[0], self.pins[1]
        return self.end, self.start, self.pins[1], self.pins[0]


@dataclass
class MonotoneChain:
    """
    Netwise path of nets whose equivalent edges form a monotone path.

    ``path`` holds the vertices v_0 .. v_n of the equivalent path; net i spans
    ``path[i]`` to ``path[i + 1]``.
    """
    id: str
    nets: List[str]
    path: List[Point]

    @property
    def terminals(self) -> Tuple[Point, Point]:
        return self.path[0], self.path[-1]

    @property
    def terminal_hpwl(self) -> float:
        return manhattan(self.path[0], self.path[-1])


@dataclass
class ChainReport:
    valid: bool
    length: float
    terminal_hpwl: float
    reason: str = ""


@dataclass
class ConnectivityReport:
    connected: bool
    component_count: int


def manhattan(a: Sequence[float], b: Sequence[float]) -> float:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=_EPS)


def _same_point(a: Sequence[float], b: Sequence[float]) -> bool:
    return _close(a[0], b[0]) and _close(a[1], b[1])


def pin_location(pin: Pin, placement: Placement, net_id: Optional[str] = None) -> Point:
    try:
        cx, cy = placement.positions[pin.module]
    except KeyError:
        raise UnplacedPinError(pin.module, net_id)
    return cx + pin.dx, cy + pin.dy


def net_points(net: Net, placement: Placement) -> List[Point]:
    """Resolved pin coordinates of a net"""
    return [pin_location(pin, placement, net.id) for pin in net.pins]


def hpwl(net: Net, placement: Placement) -> float:
    """
    Half-perimeter of the bounding box of a net's pins.

    Args:
        net: Net with at least one pin
        placement: Placement covering every module of the net

    Returns:
        (max x - min x) + (max y - min y) over the resolved pin coordinates

    Example:
        >>> hpwl(Net("n", [Pin("a"), Pin("b")]), Placement({"a": (0, 0), "b": (3, 4)}))
        7
    """
    points = net_points(net, placement)
    if not points:
        return 0
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def net_hpwls(netlist: Netlist, placement: Placement) -> np.ndarray:
    """HPWL of every net, in netlist order, as a float64 array"""
    xs: List[float] = []
    ys: List[float] = []
    counts: List[int] = []
    positions = placement.positions
    for net in netlist.nets:
        counts.append(len(net.pins))
        for pin in net.pins:
            try:
                cx, cy = positions[pin.module]
            except KeyError:
                raise UnplacedPinError(pin.module, net.id)
            xs.append(cx + pin.dx)
            ys.append(cy + pin.dy)

    result = np.zeros(len(counts), dtype=np.float64)
    sizes = np.asarray(counts, dtype=np.int64)
    nonempty = sizes > 0
    if not nonempty.any():
        return result
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    starts = (np.cumsum(sizes) - sizes)[nonempty]
    result[nonempty] = (
        np.maximum.reduceat(x, starts)
        - np.minimum.reduceat(x, starts)
        + np.maximum.reduceat(y, starts)
        - np.minimum.reduceat(y, starts)
    )
    return result


def total_hpwl(netlist: Netlist, placement: Placement):
    """
    Sum of net HPWLs.

    Integer-valued net lengths (grid-integral placements) are summed as Python ints;
    real-valued ones with ``math.fsum``, whose correctly rounded result does not depend
    on summation order. Both are therefore bit-reproducible.
    """
    values = net_hpwls(netlist, placement)
    if values.size == 0:
        return 0
    if np.all(values == np.floor(values)):
        return int(values.astype(np.int64).sum())
    return math.fsum(values.tolist())


def min_box(t: int) -> Tuple[int, int]:
    """Dimensions (r, s) of the least-perimeter rectangle holding t unit cells"""
    if t < 1:
        raise ValueError("net degree must be at least 1")
    r = math.isqrt(t)
    if r * r < t:
        r += 1
    s = -(-t // r)
    return r, s


def min_hpwl(t: int) -> int:
    """
    Minimum HPWL of a t-pin net with pins on distinct grid-cell centers.

    Returns r + s - 2 with r = ceil(sqrt(t)) and s = ceil(t / r).

    Example:
        >>> min_hpwl(7)
        4
    """
    r, s = min_box(t)
    return r + s - 2


def p4_sequences(n: int) -> int:
    """Number of distinct enlargement sequences of length n over {n, s, e, w}"""
    if n < 0:
        raise ValueError("sequence length must be non-negative")
    return (n ** 3 + 6 * n ** 2 + 11 * n + 6) // 6


def _corner_pair(
    points: Sequence[Point], a: Point, b: Point
) -> Optional[Tuple[int, int]]:
    at_a = [i for i, p in enumerate(points) if _same_point(p, a)]
    at_b = [i for i, p in enumerate(points) if _same_point(p, b)]
    for i in at_a:
        for j in at_b:
            if i != j:
                return i, j
    return None


def equivalent_edges(net: Net, placement: Placement) -> List[EquivalentEdge]:
    """
    Equivalent edges of a placed net (zero, one or two).

    Only the two diagonal corner pairings of the bounding box can qualify:
    (xmin, ymin)-(xmax, ymax) serves LL->UR chains, (xmax, ymin)-(xmin, ymax) serves
    LR->UL chains. An axis-parallel box has a single edge serving both.
    """
    points = net_points(net, placement)
    if len(points) < 2:
        return []
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)

    rising = _corner_pair(points, (xmin, ymin), (xmax, ymax))
    falling = _corner_pair(points, (xmax, ymin), (xmin, ymax))

    if _close(xmin, xmax) or _close(ymin, ymax):
        pair = rising or falling
        if pair is None:
            return []
        both = frozenset((Direction.LL_UR, Direction.LR_UL))
        return [EquivalentEdge(points[pair[0]], points[pair[1]], pair, both)]

    edges = []
    if rising is not None:
        edges.append(
            EquivalentEdge(
                points[rising[0]], points[rising[1]], rising, frozenset((Direction.LL_UR,))
            )
        )
    if falling is not None:
        edges.append(
            EquivalentEdge(
                points[falling[0]], points[falling[1]], falling, frozenset((Direction.LR_UL,))
            )
        )
    return edges


def is_monotone(path: Sequence[Sequence[float]]) -> bool:
    """
    True iff no step of the path moves away from the final vertex in x or in y.

    A step that jumps past the final coordinate counts as moving away.
    """
    if len(path) < 2:
        raise ValueError("a path needs at least two vertices")
    end = path[-1]
    for prev, cur in zip(path, path[1:]):
        for axis in (0, 1):
            ahead = abs(end[axis] - prev[axis])
            if not _close(abs(end[axis] - cur[axis]) + abs(cur[axis] - prev[axis]), ahead):
                return False
    return True


def is_monotone_by_length(path: Sequence[Sequence[float]]) -> bool:
    """True iff the terminal Manhattan distance equals the summed edge lengths"""
    if len(path) < 2:
        raise ValueError("a path needs at least two vertices")
    walked = sum(manhattan(a, b) for a, b in zip(path, path[1:]))
    return _close(walked, manhattan(path[0], path[-1]))


def validate_chain(chain: MonotoneChain, netlist: Netlist, placement: Placement) -> ChainReport:
    """
    Check that a chain is a monotone chain of the placed netlist.

    A chain is valid when every path edge is an equivalent edge of its net,
    consecutive nets share exactly the one module sitting on their common path vertex,
    the path is monotone, and the nets' HPWLs add up to the terminal HPWL.

    Raises:
        CertiplaceError: a chain net is not in the netlist
        UnplacedPinError: a chain net has an unplaced pin
    """
    nets = [netlist.net(net_id) for net_id in chain.nets]
    length = sum(hpwl(net, placement) for net in nets)
    terminal = chain.terminal_hpwl if chain.path else 0.0

    if len(chain.path) != len(nets) + 1:
        return ChainReport(
            False, length, terminal,
            f"{len(chain.path)} path vertices for {len(nets)} nets",
        )

    reasons = []
    for i, net in enumerate(nets):
        a, b = chain.path[i], chain.path[i + 1]
        edges = equivalent_edges(net, placement)
        if not any(
            (_same_point(e.start, a) and _same_point(e.end, b))
            or (_same_point(e.start, b) and _same_point(e.end, a))
            for e in edges
        ):
            reasons.append(f"edge {i} is not an equivalent edge of net {net.id}")

    for i in range(len(nets) - 1):
        shared = set(nets[i].modules) & set(nets[i + 1].modules)
        if len(shared) != 1:
            reasons.append(
                f"nets {nets[i].id} and {nets[i + 1].id} share {len(shared)} modules"
            )
            continue
        module_id = next(iter(shared))
        vertex = chain.path[i + 1]
        for net in (nets[i], nets[i + 1]):
            if not any(
                pin.module == module_id
                and _same_point(pin_location(pin, placement, net.id), vertex)
                for pin in net.pins
            ):
                reasons.append(f"shared module {module_id} of net {net.id} is off the path")

    if not is_monotone(chain.path):
        reasons.append("equivalent path is not monotone")
    if not _close(length, terminal):
        reasons.append(f"chain length {length} differs from terminal HPWL {terminal}")

    return ChainReport(not reasons, length, terminal, "; ".join(reasons))


def _grid_coordinate(value: float) -> Tuple[int, float]:
    base = math.floor(value)
    frac = value - base
    if frac < _EPS:
        return base, 0.0
    if abs(frac - 0.5) < _EPS:
        return base, 0.5
    if frac > 1 - _EPS:
        return base + 1, 0.0
    raise NotGridIntegralError(f"coordinate {value} is not on the grid")


def grid_points(net: Net, placement: Placement) -> List[GridPoint]:
    """
    Grid cells of a net's pins.

    Pin coordinates (in grid units) must sit on grid points or on grid-cell centers,
    the same way for every pin of the net on each axis.

    Raises:
        NotGridIntegralError: some pin is off the grid
    """
    unit = placement.grid_unit
    cells = []
    fractions = set()
    for px, py in net_points(net, placement):
        gx, fx = _grid_coordinate(px / unit)
        gy, fy = _grid_coordinate(py / unit)
        fractions.add((fx, fy))
        cells.append(GridPoint(gx, gy))
    if len(fractions) > 1:
        raise NotGridIntegralError(f"net {net.id} mixes grid points and cell centers")
    return cells


def grid_hpwl(cells: Sequence[Sequence[int]]) -> int:
    if not cells:
        return 0
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def net_slack(net: Net, placement: Placement) -> int:
    """Grid-unit HPWL in excess of the t-pin minimum"""
    return grid_hpwl(grid_points(net, placement)) - min_hpwl(net.degree)


def is_local_net(net: Net, placement: Placement, grid=None) -> bool:
    """
    True iff the net's grid HPWL equals min_hpwl(degree).

    Args:
        net: Placed net
        placement: Grid-integral placement
        grid: Optional grid whose bounds every pin must respect

    Raises:
        NotGridIntegralError: the placement is off the grid for this net
    """
    cells = grid_points(net, placement)
    if grid is not None:
        for cell in cells:
            if not grid.in_bounds(cell.x, cell.y):
                raise NotGridIntegralError(f"net {net.id} has a pin outside the grid at {cell}")
    return grid_hpwl(cells) == min_hpwl(net.degree)


def connectivity_check(netlist: Netlist) -> ConnectivityReport:
    """Union-find over modules joined by shared nets"""
    index = {module_id: i for i, module_id in enumerate(netlist.modules)}
    sets = UnionFind(len(index))
    for net in netlist.nets:
        members = [index[pin.module] for pin in net.pins]
        for other in members[1:]:
            sets.union(members[0], other)
    count = sets.count()
    return ConnectivityReport(connected=count <= 1, component_count=count)
