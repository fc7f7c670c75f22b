"""
Netlist rewriter that makes a given placement HPWL-optimal

Keeps every module, size and position, the net count and the net-degree histogram.
Nets that are already locally optimal stay; nets with an equivalent edge are threaded
into monotone chains between fixed terminals; the remaining nets are rewritten to cover
the gaps between consecutive chain members.
"""
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .bookshelf_io import write_report_csv
from .certificate import NetRecord, OptimalityCertificate
from .config import McConfig
from .core import (
    Direction,
    GridPoint,
    MonotoneChain,
    Net,
    Netlist,
    Pin,
    Placement,
    Point,
    equivalent_edges,
    grid_hpwl,
    grid_points,
    is_local_net,
    manhattan,
    min_box,
    min_hpwl,
    net_hpwls,
)
from .errors import CertificationError, NotGridIntegralError
from .evaluation import length_histogram


logger = logging.getLogger(__name__)

_EPS = 1e-9


class NetKind(str, Enum):
    LOCAL_OPTIMAL = "LocalOptimal"
    NO_EQUIVALENT_EDGE = "NoEquivalentEdge"
    HAS_EQUIVALENT_EDGE = "HasEquivalentEdge"


@dataclass(frozen=True)
class NetCategory:
    kind: NetKind
    directions: FrozenSet[Direction] = frozenset()


def categorize_nets(netlist: Netlist, placement: Placement) -> Dict[str, NetCategory]:
    """
    Split nets into locally optimal ones, nets without an equivalent edge, and nets
    with one, labelled by the chain directions their equivalent edges can serve.

    Raises:
        UnplacedPinError: a net has an unplaced pin
        NotGridIntegralError: the placement is off the grid (see snap_placement_to_grid)
    """
    categories = {}
    for net in netlist.nets:
        if is_local_net(net, placement):
            categories[net.id] = NetCategory(NetKind.LOCAL_OPTIMAL)
            continue
        edges = equivalent_edges(net, placement)
        if not edges:
            categories[net.id] = NetCategory(NetKind.NO_EQUIVALENT_EDGE)
            continue
        directions = frozenset(d for e in edges for d in e.directions)
        categories[net.id] = NetCategory(NetKind.HAS_EQUIVALENT_EDGE, directions)
    return categories


def snap_placement_to_grid(netlist: Netlist, placement: Placement,
                           unit: Optional[float] = None) -> Tuple[Netlist, Placement]:
    """
    Move module centers to grid-cell centers and round pin offsets to whole grid units.

    Legality of the snapped placement is not re-checked.
    """
    unit = unit or placement.row_height or placement.grid_unit
    snapped = Placement(orientations=dict(placement.orientations), grid_unit=unit,
                        row_height=placement.row_height)
    for module_id, (x, y) in placement.positions.items():
        snapped.positions[module_id] = (
            (np.floor(x / unit) + 0.5) * unit, (np.floor(y / unit) + 0.5) * unit
        )
    rounded = netlist.copy()
    for net in rounded.nets:
        net.pins = [
            Pin(p.module, round(p.dx / unit) * unit, round(p.dy / unit) * unit, p.direction)
            for p in net.pins
        ]
    snapped.positions = {k: (float(x), float(y)) for k, (x, y) in snapped.positions.items()}
    return rounded, snapped


@dataclass
class Terminal:
    """A fixed module anchoring chains at its center"""
    module: str
    point: Point
    capacity: int


def terminal_pool(netlist: Netlist, placement: Placement, capacity: int = 4) -> List[Terminal]:
    return [
        Terminal(m, placement.location(m), capacity)
        for m in netlist.fixed_ids() if m in placement.positions
    ]


@dataclass(frozen=True)
class ChainLink:
    """A net placed in a chain, through one of its equivalent edges"""
    net_id: str
    direction: Direction
    start: Point
    end: Point
    start_pin: Pin
    end_pin: Pin
    modules: FrozenSet[str]


@dataclass
class InterveningRegion:
    """
    Gap between consecutive chain members, to be covered by new nets.

    ``cuts`` are intermediate modules splitting the gap when it is covered by more
    than one net.
    """
    start: Point
    end: Point
    start_pin: Pin
    end_pin: Pin
    chain: str
    excluded: FrozenSet[str] = frozenset()
    cuts: List[Tuple[Point, str]] = field(default_factory=list)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return (min(self.start[0], self.end[0]), min(self.start[1], self.end[1]),
                max(self.start[0], self.end[0]), max(self.start[1], self.end[1]))

    def segments(self) -> List[Tuple[Point, Pin, Point, Pin]]:
        points = [(self.start, self.start_pin)]
        points += [(p, Pin(m)) for p, m in self.cuts]
        points.append((self.end, self.end_pin))
        return [(a, pa, b, pb) for (a, pa), (b, pb) in zip(points, points[1:])]


@dataclass
class ChainDraft:
    id: str
    direction: Direction
    start: Terminal
    end: Terminal
    links: List[ChainLink]
    gaps: List[Optional[InterveningRegion]] = field(default_factory=list)

    @property
    def gap_count(self) -> int:
        return sum(1 for g in self.gaps if g is not None)

    @property
    def ratio(self) -> float:
        return self.gap_count / max(1, len(self.links))


def _key(direction: Direction, p: Point) -> Tuple[float, float]:
    return (p[0], p[1]) if direction is Direction.LL_UR else (-p[0], p[1])


def _before(direction: Direction, p: Point, q: Point) -> bool:
    """p does not lie past q along the direction in either axis"""
    kp, kq = _key(direction, p), _key(direction, q)
    return kp[0] <= kq[0] + _EPS and kp[1] <= kq[1] + _EPS


def _same(p: Point, q: Point) -> bool:
    return abs(p[0] - q[0]) <= _EPS and abs(p[1] - q[1]) <= _EPS


def _abuts(point: Point, module: str, modules: FrozenSet[str], link_point: Point,
           link_module: str, link_modules: FrozenSet[str]) -> bool:
    """Two chain members meet directly at one shared module"""
    return (module == link_module and _same(point, link_point)
            and modules & link_modules == {module})


def _joinable(point, module, modules, link_point, link_module, link_modules) -> bool:
    return not (modules & link_modules) or _abuts(
        point, module, modules, link_point, link_module, link_modules
    )


def _links(netlist: Netlist, placement: Placement, net_ids: Sequence[str]) -> List[ChainLink]:
    links = []
    for net_id in net_ids:
        net = netlist.net(net_id)
        modules = frozenset(net.modules)
        for edge in equivalent_edges(net, placement):
            for direction in sorted(edge.directions, key=lambda d: d.value):
                start, end, i, j = edge.oriented(direction)
                links.append(ChainLink(net_id, direction, start, end, net.pins[i], net.pins[j],
                                       modules))
    return links


class _LinkIndex:
    """Unassigned chain links of one direction with their endpoint keys"""

    def __init__(self, direction: Direction, links: List[ChainLink]):
        self.direction = direction
        self.links = links
        self.start = np.array([_key(direction, l.start) for l in links],
                              dtype=np.float64).reshape(-1, 2)
        self.end = np.array([_key(direction, l.end) for l in links],
                            dtype=np.float64).reshape(-1, 2)
        self.alive = np.ones(len(links), dtype=bool)
        self._by_net: Dict[str, List[int]] = {}
        for i, link in enumerate(links):
            self._by_net.setdefault(link.net_id, []).append(i)

    def retire(self, net_id: str) -> None:
        for i in self._by_net.get(net_id, ()):
            self.alive[i] = False

    def forward(self, head: Point, limit: Point) -> List[int]:
        """Links starting past head and ending before limit, nearest start first"""
        h, e = _key(self.direction, head), _key(self.direction, limit)
        mask = (self.alive
                & (self.start[:, 0] >= h[0] - _EPS) & (self.start[:, 1] >= h[1] - _EPS)
                & (self.end[:, 0] <= e[0] + _EPS) & (self.end[:, 1] <= e[1] + _EPS))
        idx = np.nonzero(mask)[0]
        distance = np.abs(self.start[idx, 0] - h[0]) + np.abs(self.start[idx, 1] - h[1])
        return idx[np.argsort(distance, kind="stable")].tolist()

    def backward(self, tail: Point, limit: Point) -> List[int]:
        """Links ending before tail and starting past limit, nearest end first"""
        t, s = _key(self.direction, tail), _key(self.direction, limit)
        mask = (self.alive
                & (self.end[:, 0] <= t[0] + _EPS) & (self.end[:, 1] <= t[1] + _EPS)
                & (self.start[:, 0] >= s[0] - _EPS) & (self.start[:, 1] >= s[1] - _EPS))
        idx = np.nonzero(mask)[0]
        distance = np.abs(self.end[idx, 0] - t[0]) + np.abs(self.end[idx, 1] - t[1])
        return idx[np.argsort(distance, kind="stable")].tolist()


def _pick_terminal(terminals, link: ChainLink, at_start: bool, use_capacity: bool):
    """Farthest compatible terminal before the link start (or past its end)"""
    best = None
    for t in terminals:
        if use_capacity and t.capacity <= 0:
            continue
        if at_start:
            if not _before(link.direction, t.point, link.start):
                continue
            if not _joinable(t.point, t.module, frozenset((t.module,)), link.start,
                             link.start_pin.module, link.modules):
                continue
            distance = manhattan(t.point, link.start)
        else:
            if not _before(link.direction, link.end, t.point):
                continue
            if not _joinable(link.end, link.end_pin.module, link.modules, t.point, t.module,
                             frozenset((t.module,))):
                continue
            distance = manhattan(link.end, t.point)
        if best is None or distance > best[0]:
            best = (distance, t)
    return best[1] if best else None


def _terminal_pair(terminals, link, min_distance):
    for use_capacity in (True, False):
        start = _pick_terminal(terminals, link, True, use_capacity)
        end = _pick_terminal(terminals, link, False, use_capacity)
        if start is not None and end is not None and start.module != end.module \
                and manhattan(start.point, end.point) >= min_distance:
            return start, end
    return None


def generate_chains(
    netlist: Netlist,
    placement: Placement,
    net_ids: Sequence[str],
    terminals: List[Terminal],
    rng: np.random.Generator,
    min_terminal_distance: float = 0.0,
) -> Tuple[List[ChainDraft], List[str]]:
    """
    Greedy chain search between fixed terminals.

    From a random seed net, the chain extends forward inside the rectangle spanned by
    its head and its end terminal, and backward toward its start terminal, taking the
    nearest net with a compatible equivalent edge each time. Consecutive members share
    no module unless they meet directly at one.

    Returns:
        (chain drafts, nets that no terminal pair can anchor)
    """
    links = _links(netlist, placement, net_ids)
    indexes = {
        d: _LinkIndex(d, [l for l in links if l.direction is d])
        for d in (Direction.LL_UR, Direction.LR_UL)
    }
    by_net: Dict[str, List[ChainLink]] = {}
    for link in links:
        by_net.setdefault(link.net_id, []).append(link)

    assigned = set()
    unchained = []
    chains: List[ChainDraft] = []

    def retire(net_id):
        assigned.add(net_id)
        for index in indexes.values():
            index.retire(net_id)

    for i in rng.permutation(len(net_ids)):
        seed_id = net_ids[i]
        if seed_id in assigned:
            continue
        options = by_net.get(seed_id, [])
        if len(options) > 1:
            options = [options[j] for j in rng.permutation(len(options))]
        anchored = None
        for link in options:
            pair = _terminal_pair(terminals, link, min_terminal_distance)
            if pair is not None:
                anchored = (link, pair)
                break
        if anchored is None:
            retire(seed_id)
            unchained.append(seed_id)
            continue

        seed, (start, end) = anchored
        retire(seed_id)
        index = indexes[seed.direction]
        members = [seed]
        ends = frozenset((start.module, end.module))

        while not _abuts(members[-1].end, members[-1].end_pin.module, members[-1].modules,
                         end.point, end.module, frozenset((end.module,))):
            last = members[-1]
            found = None
            for j in index.forward(last.end, end.point):
                cand = index.links[j]
                if cand.modules & ends and not _abuts(cand.end, cand.end_pin.module,
                                                      cand.modules, end.point, end.module,
                                                      frozenset((end.module,))):
                    continue
                if _joinable(last.end, last.end_pin.module, last.modules, cand.start,
                             cand.start_pin.module, cand.modules):
                    found = cand
                    break
            if found is None:
                break
            retire(found.net_id)
            members.append(found)

        while not _abuts(start.point, start.module, frozenset((start.module,)),
                         members[0].start, members[0].start_pin.module, members[0].modules):
            first = members[0]
            found = None
            for j in index.backward(first.start, start.point):
                cand = index.links[j]
                if cand.modules & ends and not _abuts(start.point, start.module,
                                                      frozenset((start.module,)), cand.start,
                                                      cand.start_pin.module, cand.modules):
                    continue
                if _joinable(cand.end, cand.end_pin.module, cand.modules, first.start,
                             first.start_pin.module, first.modules):
                    found = cand
                    break
            if found is None:
                break
            retire(found.net_id)
            members.insert(0, found)

        start.capacity -= 1
        end.capacity -= 1
        chain_id = f"chain{len(chains)}"
        chains.append(ChainDraft(chain_id, seed.direction, start, end, members,
                                 _gaps(chain_id, start, end, members)))

    logger.info("generate_chains: %d chains over %d nets, %d unchained",
                len(chains), len(assigned) - len(unchained), len(unchained))
    return chains, unchained


def _gaps(chain_id, start: Terminal, end: Terminal, members: List[ChainLink]):
    """One region before, between and after the members; None where two meet directly"""
    points = [(start.point, Pin(start.module), frozenset((start.module,)))]
    for link in members:
        points.append((link.start, link.start_pin, link.modules))
        points.append((link.end, link.end_pin, link.modules))
    points.append((end.point, Pin(end.module), frozenset((end.module,))))
    gaps = []
    for k in range(0, len(points), 2):
        (a, pa, ma), (b, pb, mb) = points[k], points[k + 1]
        if _abuts(a, pa.module, ma, b, pb.module, mb):
            gaps.append(None)
        else:
            gaps.append(InterveningRegion(a, b, pa, pb, chain_id, ma | mb))
    return gaps


def prune_chains(chains: List[ChainDraft], available: int) -> Tuple[List[ChainDraft], List[str]]:
    """
    Drop chains with the most gaps per net until the replaceable nets cover every gap.

    Returns:
        (kept chains, nets of the dropped chains)

    Raises:
        CertificationError: gaps still outnumber replaceable nets
    """
    kept = sorted(chains, key=lambda c: (-c.ratio, c.id))
    gaps = sum(c.gap_count for c in kept)
    freed: List[str] = []
    while kept and gaps > available:
        dropped = kept.pop(0)
        gaps -= dropped.gap_count
        available += len(dropped.links)
        freed.extend(link.net_id for link in dropped.links)
    if gaps > available:
        raise CertificationError(f"{gaps} gaps for {available} replaceable nets")
    kept.sort(key=lambda c: int(c.id[len("chain"):]))
    if freed:
        logger.info("prune_chains: dropped %d chains, freeing %d nets",
                    len(chains) - len(kept), len(freed))
    return kept, freed


class _Fillers:
    """Movable modules by center, with their degree deficit against the input netlist"""

    def __init__(self, netlist: Netlist, placement: Placement, original: Dict[str, int],
                 current: Dict[str, int], rng: np.random.Generator):
        self.ids = [m for m in netlist.movable_ids() if m in placement.positions]
        xy = np.array([placement.positions[m] for m in self.ids], dtype=np.float64)
        self.xy = xy.reshape(-1, 2)
        self.original = original
        self.current = current
        self.rng = rng

    def inside(self, bounds, excluded) -> List[int]:
        xl, yl, xh, yh = bounds
        mask = ((self.xy[:, 0] >= xl - _EPS) & (self.xy[:, 0] <= xh + _EPS)
                & (self.xy[:, 1] >= yl - _EPS) & (self.xy[:, 1] <= yh + _EPS))
        return [i for i in np.nonzero(mask)[0].tolist() if self.ids[i] not in excluded]

    def pick(self, bounds, excluded, count: int, avoid: Sequence[Point] = ()) -> List[str]:
        """Up to count modules in bounds, largest degree deficit first, random ties"""
        candidates = [i for i in self.inside(bounds, excluded)
                      if not any(_same(self.xy[i], p) for p in avoid)]
        if not candidates or count <= 0:
            return []
        deficit = np.array([self.original.get(self.ids[i], 0) - self.current.get(self.ids[i], 0)
                            for i in candidates], dtype=np.float64)
        order = np.lexsort((self.rng.random(len(candidates)), -deficit))
        return [self.ids[candidates[i]] for i in order[:count]]

    def take(self, module_ids) -> None:
        for m in set(module_ids):
            self.current[m] = self.current.get(m, 0) + 1


@dataclass
class CoverReport:
    nets: Dict[str, Net]
    chains: List[MonotoneChain]
    chain_of: Dict[str, str]
    leftover: List[str]
    double_covers: int = 0
    swaps: int = 0
    short: Set[str] = field(default_factory=set)


def _split(region: InterveningRegion, fillers: _Fillers) -> bool:
    """Add one cut module to the widest segment that has a free module inside"""
    taken = set(region.excluded) | {m for _, m in region.cuts}
    taken |= {region.start_pin.module, region.end_pin.module}
    segments = sorted(
        enumerate(region.segments()),
        key=lambda s: -manhattan(s[1][0], s[1][2]),
    )
    for k, (a, _, b, _) in segments:
        bounds = (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
        inside = [i for i in fillers.inside(bounds, taken)
                  if not _same(fillers.xy[i], a) and not _same(fillers.xy[i], b)]
        if not inside:
            continue
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        best = min(inside, key=lambda i: (manhattan(fillers.xy[i], mid), fillers.ids[i]))
        point = (float(fillers.xy[best][0]), float(fillers.xy[best][1]))
        region.cuts.insert(k, (point, fillers.ids[best]))
        return True
    return False


def cover_gaps(
    chains: List[ChainDraft],
    replaceable: Sequence[str],
    netlist: Netlist,
    placement: Placement,
    rng: np.random.Generator,
    original_degrees: Optional[Dict[str, int]] = None,
) -> CoverReport:
    """
    Rewrite replaceable nets into the nets that close every chain gap.

    Each gap net holds the two pins of the gap's equivalent edge plus filler modules
    inside the gap rectangle, preferring modules whose degree fell most below their
    input degree. Replaceable nets beyond the gap count split gaps into two or more
    nets at intermediate modules; those with nowhere to go are returned as leftover.
    A gap with too few fillers for its net trades the net for a leftover one of lower
    degree; when none fits, the chain is reported in ``short`` and no chains are built.
    """
    original = original_degrees or netlist.cell_degrees()
    pool = set(replaceable)
    current = {m: 0 for m in netlist.modules}
    for net in netlist.nets:
        if net.id not in pool:
            for m in set(net.modules):
                current[m] += 1
    fillers = _Fillers(netlist, placement, original, current, rng)

    regions = [g for c in chains for g in c.gaps if g is not None]
    ordered = sorted(replaceable, key=lambda n: (-netlist.net(n).degree, n))
    report = CoverReport({}, [], {}, [])
    if len(ordered) < len(regions):
        raise CertificationError(f"{len(regions)} gaps for {len(ordered)} replaceable nets")

    surplus = len(ordered) - len(regions)
    widest = sorted(regions, key=lambda g: -manhattan(g.start, g.end))
    while surplus and widest:
        progressed = False
        for region in widest:
            if surplus and _split(region, fillers):
                surplus -= 1
                report.double_covers += 1
                progressed = True
        if not progressed:
            break
    used = len(ordered) - surplus
    report.leftover = ordered[used:]

    slots = []
    for region in regions:
        for segment in region.segments():
            a, _, b, _ = segment
            bounds = (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
            slots.append((region, segment, bounds))
    capacity = [len(fillers.inside(bounds, region.excluded)) for region, _, bounds in slots]
    by_capacity = sorted(range(len(slots)), key=lambda k: (-capacity[k], k))
    assignment = {k: ordered[i] for i, k in enumerate(by_capacity)}

    segment_nets: Dict[int, str] = {}
    for k, (region, (a, pa, b, pb), bounds) in enumerate(slots):
        if region.chain in report.short:
            continue
        net_id = assignment[k]
        degree = netlist.net(net_id).degree
        excluded = set(region.excluded) | {pa.module, pb.module}
        excluded |= {m for _, m in region.cuts}
        # modules stacked on a shared vertex would join two consecutive chain nets
        extra = fillers.pick(bounds, excluded, degree - 2, avoid=(a, b))
        if len(extra) < degree - 2:
            fitting = [n for n in report.leftover if netlist.net(n).degree <= len(extra) + 2]
            if not fitting:
                report.short.add(region.chain)
                continue
            swap = max(fitting, key=lambda n: (netlist.net(n).degree, n))
            report.leftover[report.leftover.index(swap)] = net_id
            report.swaps += 1
            net_id, degree = swap, netlist.net(swap).degree
            extra = extra[:degree - 2]
        pins = [pa, pb] + [Pin(m) for m in extra]
        fillers.take([p.module for p in pins])
        report.nets[net_id] = Net(net_id, pins)
        segment_nets[k] = net_id

    if report.short:
        logger.info("cover_gaps: %d chains have a gap no replaceable net fits",
                    len(report.short))
        return report

    k = 0
    region_nets: Dict[int, List[str]] = {}
    for region in regions:
        count = len(region.cuts) + 1
        region_nets[id(region)] = [segment_nets[k + j] for j in range(count)]
        k += count

    for chain in chains:
        net_ids: List[str] = []
        path: List[Point] = [chain.start.point]
        for i, gap in enumerate(chain.gaps):
            if gap is not None:
                net_ids.extend(region_nets[id(gap)])
                path.extend(p for p, _ in gap.cuts)
                path.append(gap.end)
            if i < len(chain.links):
                link = chain.links[i]
                net_ids.append(link.net_id)
                path.append(link.end)
        chain_path = [(float(p[0]), float(p[1])) for p in path]
        report.chains.append(MonotoneChain(chain.id, net_ids, chain_path))
        for net_id in net_ids:
            report.chain_of[net_id] = chain.id

    logger.info("cover_gaps: %d gap nets, %d splits, %d leftover, %d swaps",
                len(report.nets), report.double_covers, len(report.leftover), report.swaps)
    return report


def _rebuild_local(net: Net, cells: Dict[GridPoint, str], rng: np.random.Generator,
                   attempts: int = 200) -> Optional[Net]:
    """Same-degree net on a compact block of cells, at the minimum HPWL for its degree"""
    t = net.degree
    r, s = min_box(t)
    target = min_hpwl(t)
    keys = sorted(cells)
    if not keys:
        return None
    for i in rng.permutation(len(keys))[:attempts]:
        p = keys[i]
        for w, h in ((r, s), (s, r)):
            block = [
                GridPoint(p.x + dx, p.y + dy)
                for dy in range(h) for dx in range(w) if GridPoint(p.x + dx, p.y + dy) in cells
            ]
            if len(block) < t:
                continue
            chosen = block[:t]
            if grid_hpwl(chosen) == target:
                return Net(net.id, [Pin(cells[c]) for c in chosen])
    return None


@dataclass
class McStats:
    """Comparison of the rewritten netlist with its input"""
    original_nets: int = 0
    retained: int = 0
    replaced: int = 0
    nonlocal_fraction: float = 0.0
    degree_difference: Dict[int, int] = field(default_factory=dict)
    length_in: List[int] = field(default_factory=list)
    length_out: List[int] = field(default_factory=list)
    chains: int = 0
    gaps: int = 0
    double_covers: int = 0
    local_rebuilds: int = 0
    gap_swaps: int = 0
    dropped_chains: int = 0
    unchained: int = 0

    @property
    def retention(self) -> float:
        return self.retained / self.original_nets if self.original_nets else 1.0

    def rows(self) -> List[list]:
        rows = [
            ["original_nets", self.original_nets],
            ["retained", self.retained],
            ["replaced", self.replaced],
            ["retention", self.retention],
            ["nonlocal_fraction", self.nonlocal_fraction],
            ["chains", self.chains],
            ["gaps", self.gaps],
            ["double_covers", self.double_covers],
            ["local_rebuilds", self.local_rebuilds],
            ["gap_swaps", self.gap_swaps],
            ["dropped_chains", self.dropped_chains],
            ["unchained", self.unchained],
        ]
        rows += [[f"degree_difference_{k}", v] for k, v in sorted(self.degree_difference.items())]
        rows += [[f"length_in_{i}", v] for i, v in enumerate(self.length_in)]
        rows += [[f"length_out_{i}", v] for i, v in enumerate(self.length_out)]
        return rows

    def write_csv(self, path):
        return write_report_csv(path, ("statistic", "value"), self.rows())


@dataclass
class McResult:
    netlist: Netlist
    placement: Placement
    certificate: OptimalityCertificate
    stats: McStats
    categories: Dict[str, NetCategory]


def _nonlocal(net: Net, placement: Placement) -> bool:
    try:
        return grid_hpwl(grid_points(net, placement)) > min_hpwl(net.degree)
    except NotGridIntegralError:
        return True


def generate_mc(
    netlist: Netlist,
    placement: Placement,
    rng: Optional[np.random.Generator] = None,
    config: Optional[McConfig] = None,
) -> McResult:
    """
    Rewrite a netlist so that a fixed placement attains the optimal HPWL.

    Composes categorize_nets, generate_chains, prune_chains and cover_gaps; modules
    and positions are untouched and the degree histogram is kept exactly. The
    certificate charges local nets at min_hpwl(degree) and each chain at the HPWL of
    its terminals, and is verified before it is returned.

    Raises:
        NotGridIntegralError: the placement is off the grid
        CertificationError: a rewritten net fits nowhere, or verification fails
    """
    started = time.time()
    config = config or McConfig()
    config.validate()
    rng = rng or np.random.default_rng(config.seed)

    categories = categorize_nets(netlist, placement)
    local_ids = [n for n, c in categories.items() if c.kind is NetKind.LOCAL_OPTIMAL]
    type2 = [n for n, c in categories.items() if c.kind is NetKind.NO_EQUIVALENT_EDGE]
    type3 = [n for n, c in categories.items() if c.kind is NetKind.HAS_EQUIVALENT_EDGE]
    logger.info("categorize_nets: %d local, %d without equivalent edge, %d with",
                len(local_ids), len(type2), len(type3))

    terminals = terminal_pool(netlist, placement, config.max_chains_per_terminal)
    drafts, unchained = generate_chains(netlist, placement, type3, terminals, rng,
                                        config.min_terminal_distance)
    pool = type2 + unchained
    kept, freed = prune_chains(drafts, len(pool))
    pool += freed

    original = netlist.cell_degrees()
    dropped = 0
    while True:
        cover = cover_gaps(kept, pool, netlist, placement, rng, original)
        if not cover.short:
            break
        for chain in [c for c in kept if c.id in cover.short]:
            kept.remove(chain)
            pool += [link.net_id for link in chain.links]
            dropped += 1
        logger.info("generate_mc: dropped %d chains with gaps no net fits", len(cover.short))

    output = netlist.copy()
    for net in cover.nets.values():
        output.replace_net(net)

    rebuilds = 0
    if cover.leftover:
        cells: Dict[GridPoint, str] = {}
        unit = placement.grid_unit
        for m in netlist.movable_ids():
            x, y = placement.location(m)
            cells.setdefault(GridPoint(int(x // unit), int(y // unit)), m)
        for net_id in cover.leftover:
            rebuilt = _rebuild_local(netlist.net(net_id), cells, rng)
            if rebuilt is None:
                raise CertificationError("no gap and no compact block left for the net", net_id)
            output.replace_net(rebuilt)
            rebuilds += 1

    unit = placement.grid_unit
    lengths = net_hpwls(output, placement) / unit
    records = []
    for net, length in zip(output.nets, lengths.tolist()):
        chain = cover.chain_of.get(net.id)
        bound = length if chain is not None else min_hpwl(net.degree)
        records.append(NetRecord(net.id, net.degree, length, bound, chain))

    certificate = OptimalityCertificate(
        name=config.name,
        seed=config.seed,
        records=records,
        chains=cover.chains,
        grid=None,
        grid_unit=unit,
        parameters=config.to_mapping(),
        generator="mc",
    )
    certificate.verify(output, placement)

    stats = _stats(netlist, output, placement, cover, kept, rebuilds, len(unchained), dropped)
    logger.info("generate_mc %s: %d nets, %d chains, retention %.3f, nonlocal %.3f, %.2f s",
                config.name, len(output.nets), len(kept), stats.retention,
                stats.nonlocal_fraction, time.time() - started)
    return McResult(output, placement, certificate, stats, categories)


def _stats(before: Netlist, after: Netlist, placement, cover, chains, rebuilds, unchained,
           dropped=0):
    stats = McStats(original_nets=len(before.nets))
    for old, new in zip(before.nets, after.nets):
        if old.pins == new.pins:
            stats.retained += 1
        else:
            stats.replaced += 1
    if after.nets:
        stats.nonlocal_fraction = sum(_nonlocal(n, placement) for n in after.nets) / len(after.nets)
    old_degrees, new_degrees = before.cell_degrees(), after.cell_degrees()
    for m in before.modules:
        d = abs(new_degrees[m] - old_degrees[m])
        stats.degree_difference[d] = stats.degree_difference.get(d, 0) + 1
    region = before.region
    if region is not None and region.half_perimeter > 0 and before.nets:
        stats.length_in = length_histogram(net_hpwls(before, placement), region.half_perimeter)
        stats.length_out = length_histogram(net_hpwls(after, placement), region.half_perimeter)
    stats.chains = len(chains)
    stats.gaps = sum(c.gap_count for c in chains)
    stats.double_covers = cover.double_covers
    stats.local_rebuilds = rebuilds
    stats.gap_swaps = cover.swaps
    stats.dropped_chains = dropped
    stats.unchained = unchained
    return stats
