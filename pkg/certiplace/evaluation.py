"""
Scoring placements against optimality certificates

Quality ratios, per-bin scaled overflow against a utilization target, scaled HPWL,
displacement and locality reports, and an exhaustive optimum for tiny instances.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bookshelf_io import BenchmarkBundle, write_report_csv
from .certificate import OptimalityCertificate
from .core import (
    Netlist,
    Placement,
    Point,
    grid_points,
    grid_hpwl,
    min_hpwl,
    net_hpwls,
    total_hpwl,
)
from .errors import CertiplaceError, ModuleSetMismatch, NotGridIntegralError, OracleLimitError


logger = logging.getLogger(__name__)

MAX_ORACLE_MOVABLES = 8
MAX_ORACLE_SLOTS = 16
LENGTH_BUCKETS = 10


def quality_ratio(attained: float, bound: float) -> float:
    """
    Attained length over certified bound.

    Example:
        >>> quality_ratio(200, 100)
        2.0
    """
    if bound <= 0:
        raise CertiplaceError(f"quality ratio needs a positive bound, got {bound}")
    return attained / bound


def shpwl(hpwl: float, sov_per_bin: float) -> float:
    """HPWL scaled by 1 + 0.01 * SOV/bin"""
    if hpwl < 0 or sov_per_bin < 0:
        raise CertiplaceError("HPWL and SOV/bin must be non-negative")
    return hpwl * (1.0 + 0.01 * sov_per_bin)


def sratio(attained_shpwl: float, certified_shpwl: float) -> float:
    return quality_ratio(attained_shpwl, certified_shpwl)


def gp_suboptimality(total_ratio: float, dp_ratio: float) -> float:
    """
    Global-placement share of a placer's suboptimality.

    ``dp_ratio`` is the ratio the detailed placer reaches on the 2x2 OGP benchmark;
    its excess over 1 is charged to detailed placement.
    """
    return total_ratio - (dp_ratio - 1.0)


def _module_rects(netlist: Netlist, placement: Placement, movable: bool) -> np.ndarray:
    """(n, 4) array of x0, y0, x1, y1 for placed modules with the given movability"""
    rows = []
    for module in netlist.modules.values():
        if module.movable != movable:
            continue
        position = placement.positions.get(module.id)
        if position is None:
            continue
        cx, cy = position
        hw, hh = module.width / 2, module.height / 2
        rows.append((cx - hw, cy - hh, cx + hw, cy + hh))
    return np.asarray(rows, dtype=np.float64).reshape(-1, 4)


@dataclass
class UtilizationGrid:
    """
    Square bins over the placement region with their free area.

    Free area is bin area inside the region minus the area of fixed objects.
    """
    xl: float
    yl: float
    side: float
    nx: int
    ny: int
    target: float
    free: np.ndarray

    @classmethod
    def for_netlist(
        cls,
        netlist: Netlist,
        placement: Placement,
        bin_rows: int = 10,
        target: float = 1.0,
    ) -> "UtilizationGrid":
        if not 0 < target <= 1:
            raise CertiplaceError(f"utilization target must be in (0, 1], got {target}")
        region = netlist.region
        if region is None:
            rects = _module_rects(netlist, placement, True)
            if not len(rects):
                raise CertiplaceError("no region and no movable module to infer one from")
            xl, yl = rects[:, 0].min(), rects[:, 1].min()
            xh, yh = rects[:, 2].max(), rects[:, 3].max()
        else:
            xl, yl, xh, yh = region.xl, region.yl, region.xh, region.yh
        side = bin_rows * placement.row_height
        nx = max(1, math.ceil((xh - xl) / side - 1e-9))
        ny = max(1, math.ceil((yh - yl) / side - 1e-9))
        grid = cls(float(xl), float(yl), float(side), nx, ny, float(target),
                   np.zeros((ny, nx), dtype=np.float64))
        bounds = np.array([[xl, yl, xh, yh]], dtype=np.float64)
        area = grid.coverage(bounds)
        fixed = grid.coverage(_module_rects(netlist, placement, False), clip=(xl, yl, xh, yh))
        grid.free = np.maximum(area - fixed, 0.0)
        return grid

    def coverage(self, rects: np.ndarray, clip=None) -> np.ndarray:
        """Per-bin area covered by the rectangles (overlaps between rectangles add up)"""
        out = np.zeros((self.ny, self.nx), dtype=np.float64)
        if not len(rects):
            return out
        if clip is not None:
            rects = rects.copy()
            rects[:, 0] = np.maximum(rects[:, 0], clip[0])
            rects[:, 1] = np.maximum(rects[:, 1], clip[1])
            rects[:, 2] = np.minimum(rects[:, 2], clip[2])
            rects[:, 3] = np.minimum(rects[:, 3], clip[3])
        edges_x = self.xl + self.side * np.arange(self.nx + 1)
        edges_y = self.yl + self.side * np.arange(self.ny + 1)
        for x0, y0, x1, y1 in rects.tolist():
            if x1 <= x0 or y1 <= y0:
                continue
            i0 = max(0, int(np.searchsorted(edges_x, x0, side="right")) - 1)
            i1 = min(self.nx - 1, int(np.searchsorted(edges_x, x1, side="left")) - 1)
            j0 = max(0, int(np.searchsorted(edges_y, y0, side="right")) - 1)
            j1 = min(self.ny - 1, int(np.searchsorted(edges_y, y1, side="left")) - 1)
            if i1 < i0 or j1 < j0:
                continue
            ox = np.minimum(edges_x[i0 + 1:i1 + 2], x1) - np.maximum(edges_x[i0:i1 + 1], x0)
            oy = np.minimum(edges_y[j0 + 1:j1 + 2], y1) - np.maximum(edges_y[j0:j1 + 1], y0)
            out[j0:j1 + 1, i0:i1 + 1] += np.outer(np.maximum(oy, 0), np.maximum(ox, 0))
        return out


@dataclass
class OverflowReport:
    """Per-bin scaled overflow; bins without free area are NaN and flagged"""
    sigma: np.ndarray
    flagged: np.ndarray

    @property
    def sov_per_bin(self) -> float:
        valid = self.sigma[~self.flagged]
        return float(valid.mean()) if valid.size else 0.0

    @property
    def overflow_pct(self) -> float:
        """Mean over bins of 100 * max(0, sigma - 1)"""
        valid = self.sigma[~self.flagged]
        if not valid.size:
            return 0.0
        return float((100.0 * np.maximum(valid - 1.0, 0.0)).mean())

    def values(self) -> List[float]:
        return self.sigma[~self.flagged].tolist()


def bin_overflow(placement: Placement, netlist: Netlist, grid: UtilizationGrid) -> OverflowReport:
    """
    sigma_B = movable area overlapping B / (target * free area of B).

    Example:
        A bin with free area 100, target 0.8 and 40 units of movable area gives 0.5.
    """
    movable = grid.coverage(_module_rects(netlist, placement, True))
    flagged = grid.free <= 1e-12
    sigma = np.full(grid.free.shape, np.nan)
    sigma[~flagged] = movable[~flagged] / (grid.target * grid.free[~flagged])
    if flagged.any():
        logger.debug("bin_overflow: %d bins without free area", int(flagged.sum()))
    return OverflowReport(sigma, flagged)


@dataclass
class DisplacementReport:
    rows: List[Tuple[str, float, float, float, float]]

    @property
    def mean(self) -> float:
        if not self.rows:
            return 0.0
        return float(np.mean([math.hypot(r[3], r[4]) for r in self.rows]))

    @property
    def max(self) -> float:
        if not self.rows:
            return 0.0
        return float(max(max(abs(r[3]), abs(r[4])) for r in self.rows))

    @property
    def bias(self) -> Point:
        """Mean signed displacement"""
        if not self.rows:
            return 0.0, 0.0
        return (float(np.mean([r[3] for r in self.rows])),
                float(np.mean([r[4] for r in self.rows])))

    def write_csv(self, path) -> Path:
        return write_report_csv(path, ("module_id", "x", "y", "dx", "dy"), self.rows)


def displacement_report(placement: Placement, reference: Placement) -> DisplacementReport:
    """
    Per-module displacement of a placement from a reference.

    Raises:
        ModuleSetMismatch: the two placements position different modules
    """
    ours, theirs = set(placement.positions), set(reference.positions)
    if ours != theirs:
        raise ModuleSetMismatch(sorted(ours ^ theirs))
    rows = []
    for module_id in sorted(ours):
        x, y = placement.positions[module_id]
        rx, ry = reference.positions[module_id]
        rows.append((module_id, rx, ry, x - rx, y - ry))
    return DisplacementReport(rows)


def length_histogram(lengths: Sequence[float], half_perimeter: float,
                     buckets: int = LENGTH_BUCKETS) -> List[int]:
    """Net lengths relative to the chip half-perimeter, in equal buckets over [0, 1]"""
    if half_perimeter <= 0:
        raise CertiplaceError("half-perimeter must be positive")
    relative = np.clip(np.asarray(lengths, dtype=np.float64) / half_perimeter, 0.0, 1.0)
    counts, _ = np.histogram(relative, bins=buckets, range=(0.0, 1.0))
    return counts.tolist()


@dataclass
class LocalityStats:
    nonlocal_fraction: float
    nonlocal_hpwl_fraction: float
    histogram: List[int] = field(default_factory=list)


def _nonlocal_flags(netlist, placement, lengths, certificate) -> np.ndarray:
    if certificate is not None:
        chained = {r.net_id for r in certificate.records if r.chain is not None}
        known = {r.net_id for r in certificate.records}
        return np.array([net.id in chained or net.id not in known for net in netlist.nets],
                        dtype=bool)
    flags = []
    for net, length in zip(netlist.nets, lengths):
        try:
            flags.append(grid_hpwl(grid_points(net, placement)) > min_hpwl(max(1, net.degree)))
        except NotGridIntegralError:
            flags.append(True)
    return np.array(flags, dtype=bool)


def locality_stats(
    netlist: Netlist,
    placement: Placement,
    certificate: Optional[OptimalityCertificate] = None,
) -> LocalityStats:
    """
    Share of nonlocal nets, their share of total HPWL, and the net-length histogram.

    With a certificate a net is nonlocal when its record belongs to a chain, or when the
    certificate has no record of it. Without one, a net is nonlocal when it is longer than
    min_hpwl of its degree.
    """
    lengths = net_hpwls(netlist, placement)
    if not len(lengths):
        return LocalityStats(0.0, 0.0, [0] * LENGTH_BUCKETS)
    flags = _nonlocal_flags(netlist, placement, lengths, certificate)
    total = float(lengths.sum())
    region = netlist.region
    half_perimeter = region.half_perimeter if region is not None else float(lengths.max() or 1.0)
    return LocalityStats(
        float(flags.mean()),
        float(lengths[flags].sum() / total) if total else 0.0,
        length_histogram(lengths, half_perimeter),
    )


@dataclass
class OracleResult:
    total: float
    placement: Placement


def brute_force_optimum(
    netlist: Netlist,
    slots: Sequence[Point],
    fixed: Optional[Placement] = None,
    max_movables: int = MAX_ORACLE_MOVABLES,
    max_slots: int = MAX_ORACLE_SLOTS,
) -> OracleResult:
    """
    Exact minimum total HPWL over all injective assignments of movable modules to slots.

    Fixed modules keep their positions in ``fixed``. Branch and bound: the HPWL of the
    pins placed so far never exceeds a net's final HPWL.

    Raises:
        OracleLimitError: too many movables or slots for exhaustive search
    """
    fixed = fixed or Placement()
    movables = netlist.movable_ids()
    if len(movables) > max_movables or len(slots) > max_slots:
        raise OracleLimitError(
            f"{len(movables)} movables on {len(slots)} slots exceeds "
            f"{max_movables} movables / {max_slots} slots"
        )
    if len(slots) < len(movables):
        raise OracleLimitError(f"{len(movables)} movables do not fit in {len(slots)} slots")

    index = {m: i for i, m in enumerate(movables)}
    # per net: fixed bounding box (or None) and movable pins as (movable index, dx, dy)
    nets = []
    touching: List[List[int]] = [[] for _ in movables]
    for net in netlist.nets:
        box = None
        pins = []
        for pin in net.pins:
            if pin.module in index:
                pins.append((index[pin.module], pin.dx, pin.dy))
            else:
                x, y = fixed.location(pin.module)
                x, y = x + pin.dx, y + pin.dy
                box = (x, x, y, y) if box is None else (
                    min(box[0], x), max(box[1], x), min(box[2], y), max(box[3], y))
        k = len(nets)
        nets.append((box, pins))
        for m in {p[0] for p in pins}:
            touching[m].append(k)

    degree = [len(t) for t in touching]
    order = sorted(range(len(movables)), key=lambda m: -degree[m])
    boxes = [b for b, _ in nets]
    cost = [0.0 if b is None else (b[1] - b[0]) + (b[3] - b[2]) for b in boxes]
    best = [math.inf, None]
    assignment = [-1] * len(movables)
    used = [False] * len(slots)

    def place(m: int, slot: int):
        sx, sy = slots[slot]
        saved = []
        delta = 0.0
        for k in touching[m]:
            box = boxes[k]
            saved.append((k, box, cost[k]))
            for i, dx, dy in nets[k][1]:
                if i != m:
                    continue
                x, y = sx + dx, sy + dy
                box = (x, x, y, y) if box is None else (
                    min(box[0], x), max(box[1], x), min(box[2], y), max(box[3], y))
            boxes[k] = box
            new = (box[1] - box[0]) + (box[3] - box[2])
            delta += new - cost[k]
            cost[k] = new
        return delta, saved

    def search(depth: int, current: float):
        if current >= best[0]:
            return
        if depth == len(order):
            best[0] = current
            best[1] = list(assignment)
            return
        m = order[depth]
        for slot in range(len(slots)):
            if used[slot]:
                continue
            used[slot] = True
            assignment[m] = slot
            delta, saved = place(m, slot)
            search(depth + 1, current + delta)
            for k, box, c in saved:
                boxes[k] = box
                cost[k] = c
            used[slot] = False
            assignment[m] = -1

    search(0, sum(cost))
    result = fixed.copy()
    for m, slot in enumerate(best[1] or []):
        result.positions[movables[m]] = tuple(slots[slot])
    logger.debug("brute_force_optimum: %d movables, %d slots, optimum %s",
                 len(movables), len(slots), best[0])
    return OracleResult(best[0], result)


@dataclass
class EvalReport:
    """One scored placement"""
    name: str
    hpwl: float
    bound: float
    hratio: float
    sigma: List[float] = field(default_factory=list)
    sov_per_bin: float = 0.0
    overflow_pct: float = 0.0
    shpwl: float = 0.0
    certified_shpwl: float = 0.0
    sratio: float = 0.0
    locality: Optional[LocalityStats] = None
    displacement: Optional[DisplacementReport] = None


def evaluate(
    bundle: BenchmarkBundle,
    certificate: OptimalityCertificate,
    utilization: Optional[float] = None,
    bin_rows: int = 10,
    reference: Optional[Placement] = None,
    name: Optional[str] = None,
) -> EvalReport:
    """
    Score a placed bundle against a certificate.

    Args:
        bundle: Netlist with the placement to score
        certificate: Certificate of the benchmark the bundle came from
        utilization: Target utilization for overflow scoring (None skips it)
        bin_rows: Bin side in standard-cell rows
        reference: Certified placement for the displacement report

    Returns:
        EvalReport; Hratio is attained HPWL over the certified bound
    """
    netlist, placement = bundle.netlist, bundle.placement
    attained = total_hpwl(netlist, placement)
    bound = certificate.bound_in_placement_units
    report = EvalReport(name or bundle.name, attained, bound, quality_ratio(attained, bound))

    if utilization is not None:
        grid = UtilizationGrid.for_netlist(netlist, placement, bin_rows, utilization)
        overflow = bin_overflow(placement, netlist, grid)
        report.sigma = overflow.values()
        report.sov_per_bin = overflow.sov_per_bin
        report.overflow_pct = overflow.overflow_pct
    report.shpwl = shpwl(attained, report.sov_per_bin)
    report.certified_shpwl = shpwl(bound, certificate.sov_per_bin or 0.0)
    report.sratio = sratio(report.shpwl, report.certified_shpwl)
    report.locality = locality_stats(netlist, placement, certificate)
    if reference is not None:
        report.displacement = displacement_report(placement, reference)

    logger.info("evaluate %s: HPWL %s, Hratio %.4f, SOV/bin %.4f, Sratio %.4f",
                report.name, attained, report.hratio, report.sov_per_bin, report.sratio)
    return report


EVAL_COLUMNS = (
    "name", "hpwl", "bound", "Hratio", "SOV/bin", "overflow_pct", "SHPWL", "Sratio",
    "nonlocal_fraction", "Hratio_2dp", "SOV/bin_2dp", "Sratio_2dp",
)


def lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def _row(name, hpwl, bound, hratio, sov, overflow, scaled, ratio, nonlocal_share):
    return [name, hpwl, bound, hratio, sov, overflow, scaled, ratio, nonlocal_share,
            f"{hratio:.2f}", f"{sov:.2f}", f"{ratio:.2f}"]


def report_rows(reports: Sequence[EvalReport], median: bool = False) -> List[list]:
    """Report table rows, with a lower-median row appended when asked"""
    rows = [
        _row(r.name, r.hpwl, r.bound, r.hratio, r.sov_per_bin, r.overflow_pct, r.shpwl,
             r.sratio, r.locality.nonlocal_fraction if r.locality else 0.0)
        for r in reports
    ]
    if median and reports:
        columns: Dict[int, List[float]] = {i: [row[i] for row in rows] for i in range(1, 9)}
        rows.append(_row("median", *(lower_median(columns[i]) for i in range(1, 9))))
    return rows


def write_eval_report(path, reports: Sequence[EvalReport], median: bool = False) -> Path:
    return write_report_csv(path, EVAL_COLUMNS, report_rows(reports, median))
