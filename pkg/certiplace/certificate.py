"""
Optimality certificates

A certificate lists, for every net of a generated benchmark, the HPWL it attains in the
shipped placement and the lower bound it is charged against. Local nets are bounded by
min_hpwl(degree); nets of a monotone chain are charged their own length, since the whole
chain is certified at the HPWL of its fixed terminals.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .core import MonotoneChain, Netlist, Placement, hpwl, validate_chain
from .errors import CertificationError


logger = logging.getLogger(__name__)

LOCAL = "local"


@dataclass
class NetRecord:
    """Certificate row of one net, lengths in grid units"""
    net_id: str
    degree: int
    attained: float
    bound: float
    chain: Optional[str] = None

    @property
    def kind(self) -> str:
        return self.chain if self.chain is not None else LOCAL

    @property
    def slack(self) -> float:
        return self.attained - self.bound


@dataclass
class OptimalityCertificate:
    """
    Per-net attained and bound HPWLs plus the chain structure of a benchmark.

    Args:
        name: Benchmark name
        seed: RNG seed the benchmark was generated with
        records: One NetRecord per net, in netlist order
        chains: Monotone chains; paths are in placement coordinates
        grid: Grid dimensions (W, H) when the benchmark came from a grid
        grid_unit: Placement units per grid unit
        parameters: Resolved generator parameters
        unmet: Degree histogram entries the generator could not place
        sov_per_bin: Residual scaled overflow of the shipped placement, if evaluated
        generator: "ms" or "mc"
    """
    name: str
    seed: int
    records: List[NetRecord] = field(default_factory=list)
    chains: List[MonotoneChain] = field(default_factory=list)
    grid: Optional[Tuple[int, int]] = None
    grid_unit: float = 1.0
    parameters: Dict[str, Any] = field(default_factory=dict)
    unmet: Dict[int, int] = field(default_factory=dict)
    sov_per_bin: Optional[float] = None
    generator: str = "ms"

    @property
    def attained_total(self) -> float:
        return sum(r.attained for r in self.records)

    @property
    def bound_total(self) -> float:
        return sum(r.bound for r in self.records)

    @property
    def ratio(self) -> float:
        """rho = total attained / total bound (1.0 for a zero bound)"""
        bound = self.bound_total
        if bound == 0:
            return 1.0
        return self.attained_total / bound

    @property
    def bound_in_placement_units(self) -> float:
        return self.bound_total * self.grid_unit

    def record(self, net_id: str) -> NetRecord:
        for r in self.records:
            if r.net_id == net_id:
                return r
        raise KeyError(net_id)

    def nonlocal_net_ids(self) -> List[str]:
        return [r.net_id for r in self.records if r.chain is not None]

    def header(self) -> Dict[str, Any]:
        """JSON-serializable summary written next to the per-net CSV"""
        return {
            "name": self.name,
            "generator": self.generator,
            "seed": self.seed,
            "rho": self.ratio,
            "attained_total": self.attained_total,
            "bound_total": self.bound_total,
            "nets": len(self.records),
            "grid": list(self.grid) if self.grid else None,
            "grid_unit": self.grid_unit,
            "sov_per_bin": self.sov_per_bin,
            "unmet": {str(k): v for k, v in sorted(self.unmet.items())},
            "parameters": self.parameters,
            "chains": [
                {"id": c.id, "nets": list(c.nets), "path": [list(p) for p in c.path]}
                for c in self.chains
            ],
        }

    @classmethod
    def from_header(cls, header: Dict[str, Any], records: List[NetRecord]) -> "OptimalityCertificate":
        return cls(
            name=header.get("name", ""),
            seed=int(header.get("seed", 0)),
            records=records,
            chains=[
                MonotoneChain(c["id"], list(c["nets"]), [tuple(p) for p in c["path"]])
                for c in header.get("chains", [])
            ],
            grid=tuple(header["grid"]) if header.get("grid") else None,
            grid_unit=float(header.get("grid_unit", 1.0)),
            parameters=dict(header.get("parameters", {})),
            unmet={int(k): int(v) for k, v in header.get("unmet", {}).items()},
            sov_per_bin=header.get("sov_per_bin"),
            generator=header.get("generator", "ms"),
        )

    def verify(self, netlist: Netlist, placement: Placement) -> None:
        """
        Re-check the certificate against a placed netlist.

        Raises:
            CertificationError: a record disagrees with the placement, a net is
                charged below its bound, a local net exceeds its bound by more than
                the ``slack`` parameter, or a chain is not monotone
        """
        unit = self.grid_unit
        slack = self.parameters.get("slack", 0)
        bridges = set(self.parameters.get("bridge_net_ids", ()))
        for r in self.records:
            attained = hpwl(netlist.net(r.net_id), placement) / unit
            if abs(attained - r.attained) > 1e-6 * max(1.0, abs(attained)):
                raise CertificationError(
                    f"attains {attained}, certificate says {r.attained}", r.net_id
                )
            if r.attained + 1e-9 < r.bound:
                raise CertificationError(f"attained {r.attained} below bound {r.bound}", r.net_id)
            if r.chain is None and r.net_id not in bridges and r.attained > r.bound + slack + 1e-9:
                raise CertificationError(
                    f"local net attains {r.attained}, over bound {r.bound} plus slack {slack}",
                    r.net_id,
                )

        covered = set()
        for chain in self.chains:
            report = validate_chain(chain, netlist, placement)
            if not report.valid:
                raise CertificationError(report.reason, chain.id)
            overlap = covered.intersection(chain.nets)
            if overlap:
                raise CertificationError(f"nets {sorted(overlap)} appear in two chains", chain.id)
            covered.update(chain.nets)
        logger.debug("certificate %s verified: %d nets, %d chains",
                     self.name, len(self.records), len(self.chains))
