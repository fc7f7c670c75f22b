"""
Tests for the netlist model and HPWL arithmetic
"""
import itertools
import math

import numpy as np
import pytest

from certiplace.core import (
    DegreeHistogram,
    Direction,
    MonotoneChain,
    Net,
    Pin,
    Placement,
    UnionFind,
    connectivity_check,
    equivalent_edges,
    grid_points,
    hpwl,
    is_local_net,
    is_monotone,
    is_monotone_by_length,
    min_box,
    min_hpwl,
    net_hpwls,
    p4_sequences,
    total_hpwl,
    validate_chain,
)
from certiplace.errors import CertiplaceError, NotGridIntegralError, UnplacedPinError
from tests.conftest import netlist_of


@pytest.mark.parametrize("t, expected", [
    (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (6, 3), (7, 4), (9, 4), (10, 5), (16, 6),
])
def test_min_hpwl(t, expected):
    """Test the t-pin lower bound r + s - 2"""
    assert min_hpwl(t) == expected


def test_min_hpwl_matches_exhaustive_search():
    """Test the closed form against every r x s rectangle holding t cells"""
    # with r <= s the short side never exceeds isqrt(t) + 1
    for t in range(1, 10001):
        best = min(r + math.ceil(t / r) - 2 for r in range(1, math.isqrt(t) + 2))
        assert min_hpwl(t) == best, t


@pytest.mark.parametrize("points, expected", [
    ([(0, 0), (3, 4)], 7),
    ([(5, 5), (5, 5)], 0),
    ([(0, 0), (1, 2), (4, 1)], 6),
])
def test_hpwl_examples(points, expected):
    """Test bounding-box half-perimeters"""
    names = [f"m{i}" for i in range(len(points))]
    net = Net("n", [Pin(m) for m in names])
    assert hpwl(net, Placement(dict(zip(names, points)))) == expected


@pytest.mark.parametrize("points, count", [
    ([(0, 0), (2, 3)], 1),
    ([(0, 0), (2, 3), (1, 1)], 1),
    ([(0, 0), (2, 3), (0, 3), (2, 0)], 2),
    ([(0, 0), (0, 3), (2, 1)], 0),
])
def test_equivalent_edge_count(points, count):
    """Test how many corner pairings span the bounding box"""
    names = [f"m{i}" for i in range(len(points))]
    net = Net("n", [Pin(m) for m in names])
    assert len(equivalent_edges(net, Placement(dict(zip(names, points))))) == count


def test_validate_chain_staircase():
    """Test that two nets meeting at (2, 1) make a chain of length 8"""
    netlist, placement = netlist_of(
        {"a": (0, 0), "b": (2, 1), "c": (5, 3)},
        {"n1": ["a", "b"], "n2": ["b", "c"]},
    )
    report = validate_chain(MonotoneChain("k", ["n1", "n2"], [(0, 0), (2, 1), (5, 3)]),
                            netlist, placement)
    assert report.valid, report.reason
    assert report.length == report.terminal_hpwl == 8

    single = validate_chain(MonotoneChain("s", ["n1"], [(0, 0), (2, 1)]), netlist, placement)
    assert single.valid and single.length == 3


def test_validate_chain_x_regression():
    """Test that a second net turning back in x breaks the chain"""
    netlist, placement = netlist_of(
        {"a": (0, 0), "b": (2, 1), "c": (1, 3)},
        {"n1": ["a", "b"], "n2": ["b", "c"]},
    )
    report = validate_chain(MonotoneChain("k", ["n1", "n2"], [(0, 0), (2, 1), (1, 3)]),
                            netlist, placement)
    assert not report.valid


def test_is_local_net_row():
    """Test that three pins spread over a 1x5 row are not locally optimal"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c")])
    assert not is_local_net(net, Placement({"a": (0.5, 0.5), "b": (2.5, 0.5), "c": (4.5, 0.5)}))


def test_connectivity_without_nets():
    """Test that modules without nets are their own components"""
    netlist, _ = netlist_of({"a": (0, 0), "b": (1, 0), "c": (2, 0)}, {})
    assert connectivity_check(netlist).component_count == 3


def test_min_box_holds_t_cells():
    """Test that the least-perimeter box always has room for t cells"""
    for t in range(1, 200):
        r, s = min_box(t)
        assert r * s >= t
        assert r == math.ceil(math.sqrt(t))


def test_min_box_rejects_zero():
    """Test that degree 0 has no box"""
    with pytest.raises(ValueError):
        min_box(0)


def test_p4_sequences():
    """Test the enlargement sequence count C(n + 3, 3)"""
    assert [p4_sequences(n) for n in range(5)] == [1, 4, 10, 20, 35]
    assert p4_sequences(6) == math.comb(9, 3)


def test_p4_sequences_counts_distinct_boxes():
    """Test the count against the distinct direction multisets of each length"""
    for n in range(7):
        boxes = {tuple(sorted(seq)) for seq in itertools.product("nsew", repeat=n)}
        assert p4_sequences(n) == len(boxes), n
    for n in range(7, 31):
        count = sum(1 for _ in itertools.combinations_with_replacement("nsew", n))
        assert p4_sequences(n) == count, n


def test_hpwl_uses_pin_offsets():
    """Test that pin offsets move the bounding box"""
    net = Net("n", [Pin("a", 0.5, 0.0), Pin("b", 0.0, -1.0)])
    placement = Placement({"a": (0.0, 0.0), "b": (3.0, 4.0)})
    assert hpwl(net, placement) == pytest.approx(2.5 + 3.0)


def test_hpwl_unplaced_pin():
    """Test that an unplaced pin names the module and the net"""
    net = Net("n7", [Pin("a"), Pin("ghost")])
    with pytest.raises(UnplacedPinError) as info:
        hpwl(net, Placement({"a": (0, 0)}))
    assert info.value.module_id == "ghost"
    assert info.value.net_id == "n7"


def test_net_hpwls_matches_hpwl():
    """Test the vectorized lengths against the scalar ones"""
    netlist, placement = netlist_of(
        {"a": (0.5, 0.5), "b": (2.5, 1.5), "c": (1.5, 3.5)},
        {"n0": ["a", "b"], "n1": ["a", "b", "c"], "n2": ["c", "a"]},
    )
    lengths = net_hpwls(netlist, placement)
    assert lengths.tolist() == [hpwl(n, placement) for n in netlist.nets]


def test_total_hpwl_integer_and_real():
    """Test that grid-integral totals come back as int and real ones as float"""
    netlist, placement = netlist_of({"a": (0.5, 0.5), "b": (2.5, 1.5)}, {"n0": ["a", "b"]})
    assert total_hpwl(netlist, placement) == 3
    assert isinstance(total_hpwl(netlist, placement), int)

    placement.positions["b"] = (2.25, 1.5)
    assert total_hpwl(netlist, placement) == pytest.approx(2.75)


def test_equivalent_edge_diagonal():
    """Test that only the populated diagonal of the box is an equivalent edge"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c")])
    placement = Placement({"a": (0, 0), "b": (2, 1), "c": (1, 0)})
    edges = equivalent_edges(net, placement)
    assert len(edges) == 1
    assert edges[0].directions == frozenset((Direction.LL_UR,))
    assert set(edges[0].pins) == {0, 1}


def test_equivalent_edge_both_diagonals():
    """Test a net with pins on all four corners"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c"), Pin("d")])
    placement = Placement({"a": (0, 0), "b": (2, 2), "c": (2, 0), "d": (0, 2)})
    directions = {d for e in equivalent_edges(net, placement) for d in e.directions}
    assert directions == {Direction.LL_UR, Direction.LR_UL}


def test_equivalent_edge_axis_parallel():
    """Test that a flat net has one edge usable in both directions"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c")])
    placement = Placement({"a": (0, 0), "b": (3, 0), "c": (1, 0)})
    edges = equivalent_edges(net, placement)
    assert len(edges) == 1
    assert edges[0].directions == frozenset((Direction.LL_UR, Direction.LR_UL))


def test_no_equivalent_edge():
    """Test a net whose corners hold no pins"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c")])
    placement = Placement({"a": (1, 0), "b": (0, 1), "c": (2, 2)})
    assert equivalent_edges(net, placement) == []


def test_oriented_edge():
    """Test that an LR->UL edge starts on the right"""
    net = Net("n", [Pin("a"), Pin("b")])
    placement = Placement({"a": (0, 2), "b": (2, 0)})
    edge = equivalent_edges(net, placement)[0]
    start, end, i, j = edge.oriented(Direction.LR_UL)
    assert start == (2, 0) and end == (0, 2)
    assert (i, j) == (1, 0)


def test_is_monotone():
    """Test the monotone path predicates"""
    assert is_monotone([(0, 0), (1, 1), (2, 3)])
    assert is_monotone([(3, 0), (2, 1), (0, 1)])
    assert not is_monotone([(0, 0), (3, 0), (1, 1)])
    assert is_monotone_by_length([(0, 0), (1, 0), (1, 2)])
    assert not is_monotone_by_length([(0, 0), (3, 0), (1, 1)])
    assert not is_monotone([(0, 0), (2, 1), (1, 3)])
    with pytest.raises(ValueError):
        is_monotone([(0, 0)])


def test_monotone_predicates_agree():
    """Test that the step and length predicates agree on random paths"""
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(2, 21))
        path = [tuple(p) for p in rng.integers(0, 6, size=(n, 2)).tolist()]
        assert is_monotone(path) == is_monotone_by_length(path), path


def test_validate_chain():
    """Test a two-net chain whose length equals its terminal HPWL"""
    netlist, placement = netlist_of(
        {"a": (0, 0), "b": (2, 1), "c": (3, 3)},
        {"n1": ["a", "b"], "n2": ["b", "c"]},
    )
    chain = MonotoneChain("k", ["n1", "n2"], [(0, 0), (2, 1), (3, 3)])
    report = validate_chain(chain, netlist, placement)
    assert report.valid, report.reason
    assert report.length == report.terminal_hpwl == 6


def test_validate_chain_detour():
    """Test that a chain turning back is rejected"""
    netlist, placement = netlist_of(
        {"a": (0, 0), "b": (5, 1), "c": (2, 3)},
        {"n1": ["a", "b"], "n2": ["b", "c"]},
    )
    chain = MonotoneChain("k", ["n1", "n2"], [(0, 0), (5, 1), (2, 3)])
    report = validate_chain(chain, netlist, placement)
    assert not report.valid
    assert "not monotone" in report.reason
    assert report.length == 11 and report.terminal_hpwl == 5


def test_validate_chain_shared_modules():
    """Test that consecutive nets sharing two modules are rejected"""
    netlist, placement = netlist_of(
        {"a": (0, 0), "b": (2, 1), "c": (3, 3), "x": (1, 1)},
        {"n1": ["a", "b", "x"], "n2": ["b", "c", "x"]},
    )
    chain = MonotoneChain("k", ["n1", "n2"], [(0, 0), (2, 1), (3, 3)])
    report = validate_chain(chain, netlist, placement)
    assert not report.valid
    assert "share 2 modules" in report.reason


def test_grid_points_scaled_by_unit():
    """Test that coordinates are divided by the grid unit"""
    net = Net("n", [Pin("a"), Pin("b")])
    placement = Placement({"a": (6.0, 18.0), "b": (30.0, 6.0)}, grid_unit=12.0)
    assert [tuple(p) for p in grid_points(net, placement)] == [(0, 1), (2, 0)]


def test_grid_points_off_grid():
    """Test that an off-grid coordinate raises"""
    net = Net("n", [Pin("a"), Pin("b")])
    with pytest.raises(NotGridIntegralError):
        grid_points(net, Placement({"a": (0.3, 0.5), "b": (1.5, 0.5)}))


def test_is_local_net():
    """Test the local-optimality predicate on a 2x2 block and a stretched net"""
    net = Net("n", [Pin("a"), Pin("b"), Pin("c"), Pin("d")])
    block = Placement({"a": (0.5, 0.5), "b": (1.5, 0.5), "c": (0.5, 1.5), "d": (1.5, 1.5)})
    assert is_local_net(net, block)
    block.positions["d"] = (2.5, 1.5)
    assert not is_local_net(net, block)


def test_degree_histogram_budget():
    """Test that the histogram behaves as a decrementing budget"""
    hist = DegreeHistogram({2: 2, 5: 1})
    hist.decrement(2)
    hist.decrement(5)
    assert hist.items() == [(2, 1)]
    assert hist.smallest_above(2) is None
    assert hist.total_pins == 2
    with pytest.raises(ValueError):
        hist.decrement(5)
    with pytest.raises(ValueError):
        DegreeHistogram({3: -1})


def test_degree_histogram_queries():
    """Test the degree lookups used by the generators"""
    hist = DegreeHistogram.from_degrees([2, 2, 3, 7, 7, 7, 1])
    assert hist.to_dict() == {1: 1, 2: 2, 3: 1, 7: 3}
    assert hist.max_degree() == 7
    assert hist.largest_at_most(6) == 3
    assert hist.smallest_above(3) == 7
    assert hist.remaining() == 6
    assert hist.total_nets == 7


def test_union_find():
    """Test set merging and counting"""
    sets = UnionFind(5)
    assert sets.union(0, 1)
    assert sets.union(3, 4)
    assert not sets.union(1, 0)
    assert sets.linked(0, 1) and not sets.linked(1, 3)
    assert sets.count() == 3


def test_connectivity_check():
    """Test that components are counted over shared nets"""
    netlist, _ = netlist_of(
        {"a": (0, 0), "b": (1, 0), "c": (2, 0), "d": (3, 0)},
        {"n0": ["a", "b"], "n1": ["c", "d"]},
    )
    report = connectivity_check(netlist)
    assert not report.connected
    assert report.component_count == 2


def test_netlist_rejects_duplicates_and_dangling_pins():
    """Test netlist integrity checks"""
    netlist, _ = netlist_of({"a": (0, 0), "b": (1, 0)}, {"n0": ["a", "b"]})
    with pytest.raises(CertiplaceError, match="duplicate net"):
        netlist.add_net(Net("n0", [Pin("a"), Pin("b")]))
    with pytest.raises(CertiplaceError, match="unknown module"):
        netlist.add_net(Net("n1", [Pin("a"), Pin("z")]))


def test_replace_net_keeps_order():
    """Test that a replaced net keeps its position"""
    netlist, _ = netlist_of(
        {"a": (0, 0), "b": (1, 0), "c": (2, 0)},
        {"n0": ["a", "b"], "n1": ["b", "c"]},
    )
    netlist.replace_net(Net("n0", [Pin("a"), Pin("c")]))
    assert [n.id for n in netlist.nets] == ["n0", "n1"]
    assert netlist.net("n0").modules == ["a", "c"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
