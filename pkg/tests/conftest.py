"""
Shared fixtures for the certiplace tests
"""
import pytest

from certiplace.config import MsConfig
from certiplace.core import (
    DegreeHistogram,
    Module,
    ModuleKind,
    Net,
    Netlist,
    Pin,
    Placement,
    Region,
)


def cell(module_id, movable=True):
    kind = ModuleKind.STANDARD_CELL if movable else ModuleKind.TERMINAL
    annotations = () if movable else ("terminal",)
    return Module(module_id, kind, 1.0, 1.0, movable, annotations)


def netlist_of(positions, nets, fixed=(), region=None):
    """Unit-size modules at the given centers, nets as lists of module ids"""
    modules = [cell(m, m not in fixed) for m in positions]
    netlist = Netlist(
        modules,
        [Net(net_id, [Pin(m) for m in members]) for net_id, members in nets.items()],
        region,
    )
    return netlist, Placement(dict(positions))


@pytest.fixture
def small_ms_config():
    """60 standard cells on a 8x9 grid, no macros"""
    return MsConfig(
        name="tiny",
        seed=3,
        region=Region(0.0, 0.0, 10.0, 10.0),
        std_cells=60,
        degrees=DegreeHistogram({2: 40, 3: 15, 4: 8}),
        white_space=0.1,
    )


@pytest.fixture
def chain_netlist():
    """
    Two fixed corner terminals and a staircase of movables.

    n0 and n1 are long nets with an equivalent edge running from t0 toward t1; n2, n5
    and n6 have no equivalent edge; n3 and n4 are locally optimal.
    """
    positions = {
        "t0": (0.5, 0.5),
        "t1": (6.5, 6.5),
        "a": (1.5, 1.5),
        "b": (3.5, 3.5),
        "c": (4.5, 4.5),
        "d": (5.5, 5.5),
        "e": (2.5, 1.5),
        "f": (1.5, 2.5),
        "g": (3.5, 1.5),
        "h": (1.5, 4.5),
        "k": (4.5, 2.5),
    }
    nets = {
        "n0": ["a", "b"],
        "n1": ["c", "d"],
        "n2": ["g", "h", "k"],
        "n3": ["a", "e"],
        "n4": ["f", "a"],
        "n5": ["e", "h", "k"],
        "n6": ["f", "g", "k"],
    }
    return netlist_of(positions, nets, fixed=("t0", "t1"), region=Region(0, 0, 7, 7))


@pytest.fixture
def roomy_chain_netlist():
    """
    A two-net staircase between t0 and t1 whose three gaps each hold one free module.

    n0 and n1 chain from t0 to t1; p, q and r sit inside the gaps before, between and
    after them; n2, n3 and n4 have no equivalent edge; n5 is locally optimal.
    """
    cells = {
        "t0": (0, 0), "t1": (8, 8),
        "a": (2, 2), "b": (4, 4), "c": (5, 5), "d": (7, 7),
        "p": (1, 1), "q": (4, 5), "r": (8, 7),
        "u1": (0, 5), "u2": (1, 4), "u3": (1, 6),
        "v1": (5, 1), "v2": (6, 0), "v3": (6, 2), "v4": (7, 0),
        "w1": (2, 7), "w2": (3, 6), "w3": (3, 8),
    }
    nets = {
        "n0": ["a", "b"],
        "n1": ["c", "d"],
        "n2": ["u1", "u2", "u3"],
        "n3": ["v1", "v2", "v3"],
        "n4": ["w1", "w2", "w3"],
        "n5": ["v2", "v4"],
    }
    positions = {m: (x + 0.5, y + 0.5) for m, (x, y) in cells.items()}
    return netlist_of(positions, nets, fixed=("t0", "t1"), region=Region(0, 0, 9, 9))
