"""
certiplace - placement benchmarks with certified optimal wirelength
"""

__version__ = "0.1.0"

from .bookshelf_io import BenchmarkBundle, parse_bundle, read_certificate, write_bundle
from .certificate import OptimalityCertificate
from .core import Netlist, Placement, hpwl, min_hpwl, total_hpwl
from .errors import CertiplaceError
from .evaluation import evaluate
from .mc_gen import generate_mc
from .ms_gen import generate_ms
from .ogp_gen import ogp_sweep

__all__ = [
    "BenchmarkBundle",
    "parse_bundle",
    "read_certificate",
    "write_bundle",
    "OptimalityCertificate",
    "Netlist",
    "Placement",
    "hpwl",
    "min_hpwl",
    "total_hpwl",
    "CertiplaceError",
    "evaluate",
    "generate_mc",
    "generate_ms",
    "ogp_sweep",
    "__version__",
]
