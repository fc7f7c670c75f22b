"""
Tests for Bookshelf and certificate file I/O
"""
import pytest

from certiplace.bookshelf_io import (
    BenchmarkBundle,
    extract_degree_histogram,
    parse_bundle,
    parse_placement,
    read_certificate,
    uniform_rows,
    write_bundle,
    write_certificate,
)
from certiplace.certificate import NetRecord, OptimalityCertificate
from certiplace.core import ModuleKind, MonotoneChain, Region, total_hpwl
from certiplace.errors import BookshelfParseError


NODES = """UCLA nodes 1.0
# generated for tests
NumNodes : 4
NumTerminals : 1
  a 1 2
  b 1 2
  m 4 6
  p 1 1 terminal
"""

NETS = """UCLA nets 1.0
NumNets : 3
NumPins : 7
NetDegree : 3 n0
  a I : 0 0
  b O : 0.5 -0.5
  m B : -2 3
NetDegree : 2 n1
  a I
  p O
NetDegree : 2
  b I : 0 0
  m O : 1 1
"""

PL = """UCLA pl 1.0

a 0 0 : N
b 3 2 : FS
m 4 4 : N
p 10 0 : N /FIXED
"""

SCL = """UCLA scl 1.0
NumRows : 2

CoreRow Horizontal
  Coordinate : 0
  Height : 2
  Sitewidth : 1
  Sitespacing : 1
  Siteorient : N
  Sitesymmetry : Y
  SubrowOrigin : 0 NumSites : 10
End
CoreRow Horizontal
  Coordinate : 2
  Height : 2
  Sitewidth : 1
  Sitespacing : 1
  Siteorient : N
  Sitesymmetry : Y
  SubrowOrigin : 0 NumSites : 10
End
"""


def write_design(directory, nodes=NODES, nets=NETS, pl=PL, scl=SCL, name="toy"):
    for suffix, text in (("nodes", nodes), ("nets", nets), ("pl", pl), ("scl", scl)):
        (directory / f"{name}.{suffix}").write_text(text)
    aux = directory / f"{name}.aux"
    aux.write_text(f"RowBasedPlacement : {name}.nodes {name}.nets {name}.pl {name}.scl\n")
    return aux


def test_parse_bundle(tmp_path):
    """Test parsing of every component of a design"""
    bundle = parse_bundle(write_design(tmp_path))
    netlist, placement = bundle.netlist, bundle.placement

    assert bundle.name == "toy"
    assert len(bundle.rows) == 2
    assert bundle.row_height == 2
    assert bundle.region == Region(0, 0, 10, 4)
    assert netlist.module("m").kind is ModuleKind.MACRO
    assert netlist.module("a").kind is ModuleKind.STANDARD_CELL
    assert not netlist.module("p").movable
    assert [n.id for n in netlist.nets] == ["n0", "n1", "net2"]
    assert netlist.net("n0").pins[1].dx == 0.5
    assert netlist.net("n0").pins[1].direction == "O"

    assert placement.positions["a"] == (0.5, 1.0)
    assert placement.positions["m"] == (6.0, 7.0)
    assert placement.orientations["b"] == "FS"
    assert placement.grid_unit == placement.row_height == 2


def test_parse_degree_mismatch(tmp_path):
    """Test that a short net is reported with its line"""
    nets = NETS.replace("NetDegree : 2 n1", "NetDegree : 3 n1")
    with pytest.raises(BookshelfParseError, match="declares 3 pins, found 2") as info:
        parse_bundle(write_design(tmp_path, nets=nets))
    assert info.value.line == 8


def test_parse_undeclared_node(tmp_path):
    """Test that a pin on an undeclared node is rejected"""
    nets = NETS.replace("  p O", "  q O")
    with pytest.raises(BookshelfParseError, match="undeclared node q"):
        parse_bundle(write_design(tmp_path, nets=nets))


def test_parse_missing_component(tmp_path):
    """Test that a listed but missing file is reported"""
    aux = write_design(tmp_path)
    (tmp_path / "toy.scl").unlink()
    with pytest.raises(BookshelfParseError, match="file not found"):
        parse_bundle(aux)


def test_parse_bad_number(tmp_path):
    """Test that malformed coordinates carry file and line"""
    pl = PL.replace("b 3 2", "b 3 x2")
    with pytest.raises(BookshelfParseError) as info:
        parse_bundle(write_design(tmp_path, pl=pl))
    assert "toy.pl:4" in str(info.value)


def test_parse_drops_single_pin_nets(tmp_path):
    """Test that nets below degree 2 are dropped"""
    nets = NETS.replace("NumNets : 3", "NumNets : 4") + "NetDegree : 1 lone\n  a I\n"
    bundle = parse_bundle(write_design(tmp_path, nets=nets))
    assert not bundle.netlist.has_net("lone")
    assert len(bundle.netlist.nets) == 3


def test_parse_placement_override(tmp_path):
    """Test reading a second placement for a parsed netlist"""
    bundle = parse_bundle(write_design(tmp_path))
    other = tmp_path / "placed.pl"
    other.write_text(PL.replace("a 0 0", "a 2 2"))
    placement = parse_placement(other, bundle.netlist, bundle.row_height)
    assert placement.positions["a"] == (2.5, 3.0)
    assert placement.grid_unit == 2

    with pytest.raises(BookshelfParseError, match="not found"):
        parse_placement(tmp_path / "missing.pl", bundle.netlist)


def test_write_then_parse(tmp_path):
    """Test that a written design parses back to the same netlist and lengths"""
    bundle = parse_bundle(write_design(tmp_path))
    out = tmp_path / "copy"
    paths = write_bundle(BenchmarkBundle("copy", bundle.netlist, bundle.placement, bundle.rows),
                         out)
    assert paths["aux"].read_text().split(":")[1].split() == \
        ["copy.nodes", "copy.nets", "copy.pl", "copy.scl"]

    again = parse_bundle(paths["aux"])
    assert list(again.netlist.modules) == ["a", "b", "m", "p"]
    assert again.netlist.num_pins == bundle.netlist.num_pins
    assert total_hpwl(again.netlist, again.placement) == \
        total_hpwl(bundle.netlist, bundle.placement)
    assert "/FIXED" in paths["pl"].read_text().splitlines()[-1]
    assert "terminal" in paths["nodes"].read_text()


def test_write_numbers_without_trailing_zero(tmp_path):
    """Test that integer-valued numbers are written bare"""
    bundle = parse_bundle(write_design(tmp_path))
    paths = write_bundle(bundle, tmp_path / "out")
    text = paths["pl"].read_text()
    assert "a 0 0 : N" in text
    assert ".0 " not in text


def test_rewrite_is_byte_identical(tmp_path):
    """Test that writing a parsed bundle and rewriting its parse gives the same files"""
    pl = PL.replace("b 3 2 : FS", "b 0.1 2.123456789012 : FS")
    bundle = parse_bundle(write_design(tmp_path, pl=pl))
    first = write_bundle(bundle, tmp_path / "first")
    second = write_bundle(parse_bundle(first["aux"]), tmp_path / "second")
    for kind, path in first.items():
        assert second[kind].read_bytes() == path.read_bytes(), kind
    assert "b 0.1 2.123456789012 : FS" in first["pl"].read_text()


def test_pl_extra_fields_dropped(tmp_path):
    """Test that .pl fields other than orientation and /FIXED are not kept"""
    pl = PL.replace("m 4 4 : N", "m 4 4 : E /PLACED extra")
    bundle = parse_bundle(write_design(tmp_path, pl=pl))
    assert bundle.placement.orientations["m"] == "E"
    assert bundle.netlist.module("m").movable
    text = write_bundle(bundle, tmp_path / "out")["pl"].read_text()
    assert "m 4 4 : E\n" in text
    assert "PLACED" not in text


def test_uniform_rows():
    """Test rows tiling a region"""
    rows = uniform_rows(Region(0, 0, 8, 6), 2)
    assert [r.coordinate for r in rows] == [0, 2, 4]
    assert rows[0].num_sites == 8


def test_extract_degree_histogram(tmp_path):
    """Test the degree histogram of a parsed netlist"""
    bundle = parse_bundle(write_design(tmp_path))
    assert extract_degree_histogram(bundle.netlist).to_dict() == {2: 2, 3: 1}


def test_certificate_files(tmp_path):
    """Test that a certificate survives its JSON and CSV sidecars"""
    certificate = OptimalityCertificate(
        name="toy",
        seed=5,
        records=[
            NetRecord("n0", 2, 1, 1),
            NetRecord("n1", 2, 3, 3, "chain0"),
            NetRecord("n2", 3, 3, 2),
        ],
        chains=[MonotoneChain("chain0", ["n1"], [(0.5, 0.5), (2.5, 1.5)])],
        grid=(4, 4),
        grid_unit=2.0,
        unmet={1: 2},
    )
    json_path, csv_path = write_certificate(certificate, tmp_path)
    assert json_path.name == "toy.cert.json"
    assert csv_path.read_text().splitlines()[0] == "net_id,degree,attained,bound,kind"

    loaded = read_certificate(json_path)
    assert loaded.ratio == pytest.approx(7 / 6)
    assert loaded.record("n1").chain == "chain0"
    assert loaded.record("n0").chain is None
    assert loaded.chains[0].path == [(0.5, 0.5), (2.5, 1.5)]
    assert loaded.grid == (4, 4)
    assert loaded.unmet == {1: 2}
    assert loaded.bound_in_placement_units == 12.0


def test_read_certificate_missing(tmp_path):
    """Test that a missing certificate raises a parse error"""
    with pytest.raises(BookshelfParseError):
        read_certificate(tmp_path / "none.cert.json")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
