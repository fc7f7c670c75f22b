"""
Bookshelf benchmark I/O

Reads and writes the .aux/.nodes/.nets/.pl/.scl file family of the academic placement
suites, plus certificate sidecars and CSV reports.
"""
import csv
import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .certificate import NetRecord, OptimalityCertificate
from .core import (
    DegreeHistogram,
    Module,
    ModuleKind,
    Net,
    Netlist,
    Pin,
    Placement,
    Region,
)
from .errors import BookshelfParseError


logger = logging.getLogger(__name__)

_COUNT_RE = re.compile(r"^(Num\w+)\s*:\s*(\d+)\s*$", re.IGNORECASE)
_NET_DEGREE_RE = re.compile(r"^NetDegree\s*:\s*(\d+)(?:\s+(\S+))?\s*$", re.IGNORECASE)
_ROW_FIELD_RE = re.compile(r"(\w+)\s*:\s*(\S+)")

COMPONENTS = ("nodes", "nets", "pl", "scl")


@dataclass
class Row:
    """One CoreRow of a .scl file"""
    coordinate: float
    height: float
    site_width: float = 1.0
    site_spacing: float = 1.0
    site_orient: str = "N"
    site_symmetry: str = "Y"
    subrow_origin: float = 0.0
    num_sites: int = 0

    @property
    def xl(self) -> float:
        return self.subrow_origin

    @property
    def xh(self) -> float:
        return self.subrow_origin + self.num_sites * self.site_spacing

    @property
    def yh(self) -> float:
        return self.coordinate + self.height


@dataclass
class BenchmarkBundle:
    """A parsed or generated Bookshelf design"""
    name: str
    netlist: Netlist
    placement: Placement
    rows: List[Row] = field(default_factory=list)
    paths: Dict[str, str] = field(default_factory=dict)

    @property
    def region(self) -> Optional[Region]:
        if self.rows:
            return Region(
                min(r.xl for r in self.rows),
                min(r.coordinate for r in self.rows),
                max(r.xh for r in self.rows),
                max(r.yh for r in self.rows),
            )
        return self.netlist.region

    @property
    def row_height(self) -> Optional[float]:
        return self.rows[0].height if self.rows else None


def uniform_rows(region: Region, row_height: float, site_width: float = 1.0) -> List[Row]:
    """Rows of equal height tiling a region from the bottom up"""
    rows = []
    count = int(round(region.height / row_height))
    num_sites = int(round(region.width / site_width))
    for i in range(count):
        rows.append(
            Row(
                coordinate=region.yl + i * row_height,
                height=row_height,
                site_width=site_width,
                site_spacing=site_width,
                subrow_origin=region.xl,
                num_sites=num_sites,
            )
        )
    return rows


def _records(path: Path) -> Iterator[Tuple[int, List[str]]]:
    """Non-empty, comment-stripped token lists with their line numbers"""
    try:
        handle = open(path, "r")
    except OSError as e:
        raise BookshelfParseError(path, f"cannot open: {e.strerror}")
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("UCLA"):
                continue
            yield lineno, line.split()


def _number(token: str, path: Path, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise BookshelfParseError(path, f"expected a number, got {token!r}", lineno)


def _fmt(value: float) -> str:
    """Integers without a decimal point, other values to 15 significant digits"""
    # 15 digits survive the center and lower-left conversion of .pl coordinates
    return f"{float(value) + 0.0:.15g}"


def _parse_aux(path: Path) -> Dict[str, Path]:
    files: Dict[str, Path] = {}
    for lineno, tokens in _records(path):
        if ":" not in tokens:
            continue
        for name in tokens[tokens.index(":") + 1:]:
            suffix = Path(name).suffix.lstrip(".")
            files[suffix] = path.parent / name
    for component in COMPONENTS:
        if component not in files:
            raise BookshelfParseError(path, f"no .{component} file listed")
        if not files[component].is_file():
            raise BookshelfParseError(files[component], "file not found")
    return files


def _parse_scl(path: Path) -> List[Row]:
    rows: List[Row] = []
    current: Optional[Dict[str, str]] = None
    start = 0
    for lineno, tokens in _records(path):
        head = tokens[0].lower()
        if head == "corerow":
            current = {}
            start = lineno
        elif head == "end":
            if current is None:
                raise BookshelfParseError(path, "End without CoreRow", lineno)
            try:
                rows.append(
                    Row(
                        coordinate=float(current["coordinate"]),
                        height=float(current["height"]),
                        site_width=float(current.get("sitewidth", 1)),
                        site_spacing=float(current.get("sitespacing", 1)),
                        site_orient=current.get("siteorient", "N"),
                        site_symmetry=current.get("sitesymmetry", "Y"),
                        subrow_origin=float(current.get("subroworigin", 0)),
                        num_sites=int(float(current.get("numsites", 0))),
                    )
                )
            except (KeyError, ValueError) as e:
                raise BookshelfParseError(path, f"incomplete CoreRow ({e})", start)
            current = None
        elif current is not None:
            for key, value in _ROW_FIELD_RE.findall(" ".join(tokens)):
                current[key.lower()] = value
        elif not _COUNT_RE.match(" ".join(tokens)):
            raise BookshelfParseError(path, f"unexpected record {' '.join(tokens)!r}", lineno)
    if current is not None:
        raise BookshelfParseError(path, "CoreRow without End", start)

    by_y = sorted(rows, key=lambda r: (r.coordinate, r.xl))
    for a, b in zip(by_y, by_y[1:]):
        if b.coordinate < a.yh and a.coordinate < b.yh and b.xl < a.xh and a.xl < b.xh:
            raise BookshelfParseError(path, f"rows at y={a.coordinate} and y={b.coordinate} overlap")
    return rows


def _parse_nodes(path: Path, row_height: Optional[float]) -> List[Module]:
    modules: List[Module] = []
    for lineno, tokens in _records(path):
        if _COUNT_RE.match(" ".join(tokens)):
            continue
        if len(tokens) < 3:
            raise BookshelfParseError(path, "node record needs name, width, height", lineno)
        name = tokens[0]
        width = _number(tokens[1], path, lineno)
        height = _number(tokens[2], path, lineno)
        annotations = tuple(tokens[3:])
        movable = not any(a.lower().startswith("terminal") for a in annotations)
        if row_height is not None and height > row_height:
            kind = ModuleKind.MACRO
        elif not movable:
            kind = ModuleKind.TERMINAL
        else:
            kind = ModuleKind.STANDARD_CELL
        modules.append(Module(name, kind, width, height, movable, annotations))
    return modules


def _parse_nets(path: Path, netlist: Netlist) -> List[Net]:
    nets: List[Net] = []
    pending: Optional[Tuple[str, int, int]] = None
    pins: List[Pin] = []

    def close(lineno):
        net_id, degree, start = pending
        if len(pins) != degree:
            raise BookshelfParseError(
                path, f"net {net_id} declares {degree} pins, found {len(pins)}", start
            )
        nets.append(Net(net_id, list(pins)))

    for lineno, tokens in _records(path):
        line = " ".join(tokens)
        match = _NET_DEGREE_RE.match(line)
        if match:
            if pending is not None:
                close(lineno)
            pins = []
            net_id = match.group(2) or f"net{len(nets)}"
            pending = (net_id, int(match.group(1)), lineno)
            continue
        if _COUNT_RE.match(line):
            continue
        if pending is None:
            raise BookshelfParseError(path, f"pin record outside a net: {line!r}", lineno)
        node = tokens[0]
        if node not in netlist.modules:
            raise BookshelfParseError(path, f"net {pending[0]} references undeclared node {node}",
                                      lineno)
        direction = tokens[1] if len(tokens) > 1 and tokens[1] != ":" else "B"
        dx = dy = 0.0
        if ":" in tokens:
            offsets = tokens[tokens.index(":") + 1:]
            if len(offsets) < 2:
                raise BookshelfParseError(path, "pin offset needs dx and dy", lineno)
            dx = _number(offsets[0], path, lineno)
            dy = _number(offsets[1], path, lineno)
        pins.append(Pin(node, dx, dy, direction))
    if pending is not None:
        close(None)
    return nets


def _parse_pl(path: Path, netlist: Netlist) -> Placement:
    """
    Positions are stored as module centers. Of the fields after ``x y`` only the
    orientation following ``:`` and a ``/FIXED`` flag are kept; anything else is dropped.
    """
    placement = Placement()
    for lineno, tokens in _records(path):
        if len(tokens) < 3:
            raise BookshelfParseError(path, "placement record needs name, x, y", lineno)
        name = tokens[0]
        module = netlist.modules.get(name)
        if module is None:
            raise BookshelfParseError(path, f"placement of undeclared node {name}", lineno)
        x = _number(tokens[1], path, lineno)
        y = _number(tokens[2], path, lineno)
        placement.positions[name] = (x + module.width / 2, y + module.height / 2)
        if ":" in tokens and tokens.index(":") + 1 < len(tokens):
            placement.orientations[name] = tokens[tokens.index(":") + 1]
        if any(t.upper() == "/FIXED" for t in tokens[3:]) and module.movable:
            module.movable = False
            if module.kind is ModuleKind.STANDARD_CELL:
                module.kind = ModuleKind.TERMINAL
    return placement


def parse_placement(pl_path, netlist: Netlist, row_height: Optional[float] = None) -> Placement:
    """
    Read a .pl file for an already parsed netlist (a placer's output, for example).

    Raises:
        BookshelfParseError: missing file or a record for an undeclared node
    """
    pl_path = Path(pl_path)
    if not pl_path.is_file():
        raise BookshelfParseError(pl_path, "placement file not found")
    placement = _parse_pl(pl_path, netlist)
    if row_height:
        placement.row_height = placement.grid_unit = row_height
    return placement


def parse_bundle(aux_path) -> BenchmarkBundle:
    """
    Parse a Bookshelf design from its .aux file.

    Positions are converted from the .pl lower-left corners to module centers. Nets of
    degree below 2 are dropped with a warning.

    Args:
        aux_path: Path to the .aux file

    Returns:
        BenchmarkBundle with netlist, placement and rows

    Raises:
        BookshelfParseError: missing file, dangling reference or malformed record,
            reported as file:line
    """
    started = time.time()
    aux_path = Path(aux_path)
    files = _parse_aux(aux_path)

    rows = _parse_scl(files["scl"])
    row_height = rows[0].height if rows else None
    netlist = Netlist(_parse_nodes(files["nodes"], row_height))
    nets = _parse_nets(files["nets"], netlist)
    dropped = 0
    for net in nets:
        if net.degree < 2:
            dropped += 1
            continue
        try:
            netlist.add_net(net)
        except Exception as e:
            raise BookshelfParseError(files["nets"], str(e))
    if dropped:
        logger.warning("%s: dropped %d nets of degree < 2", files["nets"], dropped)
    placement = _parse_pl(files["pl"], netlist)
    if row_height:
        placement.row_height = placement.grid_unit = row_height

    bundle = BenchmarkBundle(
        name=aux_path.stem,
        netlist=netlist,
        placement=placement,
        rows=rows,
        paths={k: str(v) for k, v in files.items()},
    )
    netlist.region = bundle.region
    logger.info("parsed %s: %d modules, %d nets, %d rows in %.2f s",
                aux_path.name, len(netlist.modules), len(netlist.nets), len(rows),
                time.time() - started)
    return bundle


def write_bundle(bundle: BenchmarkBundle, out_dir) -> Dict[str, Path]:
    """
    Write the five Bookshelf files of a bundle.

    Nodes are written in netlist order. Integral numbers are written without a trailing
    ``.0`` and others to 15 significant digits, so writing a parsed bundle reproduces it
    byte for byte. Modules without a position are left out of the .pl.

    Returns:
        Map from file kind (aux, nodes, nets, pl, scl) to written path
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = bundle.name
    netlist, placement = bundle.netlist, bundle.placement
    paths = {kind: out_dir / f"{name}.{kind}" for kind in ("aux",) + COMPONENTS}
    modules = list(netlist.modules.values())

    with open(paths["aux"], "w") as f:
        f.write(f"RowBasedPlacement : {name}.nodes {name}.nets {name}.pl {name}.scl\n")

    with open(paths["nodes"], "w") as f:
        f.write("UCLA nodes 1.0\n\n")
        f.write(f"NumNodes : {len(modules)}\n")
        f.write(f"NumTerminals : {sum(1 for m in modules if not m.movable)}\n")
        for m in modules:
            annotations = list(m.annotations)
            if not m.movable and not any(a.lower().startswith("terminal") for a in annotations):
                annotations.insert(0, "terminal")
            fields_ = [m.id, _fmt(m.width), _fmt(m.height)] + annotations
            f.write("\t" + " ".join(fields_) + "\n")

    with open(paths["nets"], "w") as f:
        f.write("UCLA nets 1.0\n\n")
        f.write(f"NumNets : {len(netlist.nets)}\n")
        f.write(f"NumPins : {netlist.num_pins}\n")
        for net in netlist.nets:
            f.write(f"NetDegree : {net.degree} {net.id}\n")
            for pin in net.pins:
                f.write(f"\t{pin.module} {pin.direction} : {_fmt(pin.dx)} {_fmt(pin.dy)}\n")

    with open(paths["pl"], "w") as f:
        f.write("UCLA pl 1.0\n\n")
        for m in modules:
            if m.id not in placement.positions:
                continue
            cx, cy = placement.positions[m.id]
            orient = placement.orientations.get(m.id, "N")
            fixed = " /FIXED" if not m.movable else ""
            f.write(f"{m.id} {_fmt(cx - m.width / 2)} {_fmt(cy - m.height / 2)} : {orient}{fixed}\n")

    with open(paths["scl"], "w") as f:
        f.write("UCLA scl 1.0\n\n")
        f.write(f"NumRows : {len(bundle.rows)}\n\n")
        for row in bundle.rows:
            f.write("CoreRow Horizontal\n")
            f.write(f"  Coordinate : {_fmt(row.coordinate)}\n")
            f.write(f"  Height : {_fmt(row.height)}\n")
            f.write(f"  Sitewidth : {_fmt(row.site_width)}\n")
            f.write(f"  Sitespacing : {_fmt(row.site_spacing)}\n")
            f.write(f"  Siteorient : {row.site_orient}\n")
            f.write(f"  Sitesymmetry : {row.site_symmetry}\n")
            f.write(f"  SubrowOrigin : {_fmt(row.subrow_origin)} NumSites : {row.num_sites}\n")
            f.write("End\n")

    logger.info("wrote %s to %s", name, out_dir)
    return paths


def extract_degree_histogram(netlist: Netlist) -> DegreeHistogram:
    """Number of nets per net degree"""
    return DegreeHistogram.from_degrees(net.degree for net in netlist.nets)


CERTIFICATE_COLUMNS = ("net_id", "degree", "attained", "bound", "kind")


def write_certificate(certificate: OptimalityCertificate, out_dir, name: Optional[str] = None):
    """
    Write ``<name>.cert.json`` (header, chains) and ``<name>.cert.csv`` (one row per net).

    Returns:
        (json path, csv path)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or certificate.name
    json_path = out_dir / f"{name}.cert.json"
    csv_path = out_dir / f"{name}.cert.csv"
    with open(json_path, "w") as f:
        json.dump(certificate.header(), f, indent=2, sort_keys=True)
        f.write("\n")
    write_report_csv(
        csv_path,
        CERTIFICATE_COLUMNS,
        ([r.net_id, r.degree, _fmt(r.attained), _fmt(r.bound), r.kind]
         for r in certificate.records),
    )
    return json_path, csv_path


def read_certificate(json_path) -> OptimalityCertificate:
    json_path = Path(json_path)
    if not json_path.is_file():
        raise BookshelfParseError(json_path, "certificate not found")
    try:
        with open(json_path) as f:
            header = json.load(f)
    except json.JSONDecodeError as e:
        raise BookshelfParseError(json_path, e.msg, e.lineno)

    csv_path = json_path.with_name(json_path.name[: -len(".json")] + ".csv")
    chained = {net_id for c in header.get("chains", []) for net_id in c["nets"]}
    records = []
    try:
        with open(csv_path, newline="") as f:
            for lineno, row in enumerate(csv.DictReader(f), start=2):
                kind = row["kind"]
                records.append(
                    NetRecord(
                        row["net_id"],
                        int(row["degree"]),
                        float(row["attained"]),
                        float(row["bound"]),
                        None if kind == "local" and row["net_id"] not in chained else kind,
                    )
                )
    except OSError:
        raise BookshelfParseError(csv_path, "certificate table not found")
    except (KeyError, ValueError) as e:
        raise BookshelfParseError(csv_path, f"malformed row ({e})", lineno)
    return OptimalityCertificate.from_header(header, records)


def write_report_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path
