"""
Exceptions raised by certiplace
"""
from typing import Iterable, Optional


class CertiplaceError(Exception):
    """Base class for every error raised by the package"""
    pass


class ConfigError(CertiplaceError):
    """Raised when a generator or evaluation config is invalid"""
    pass


class BookshelfParseError(CertiplaceError):
    """Raised when a Bookshelf file is missing or malformed"""

    def __init__(self, path, message: str, line: Optional[int] = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class UnplacedPinError(CertiplaceError):
    """Raised when a net references a module without a position"""

    def __init__(self, module_id: str, net_id: Optional[str] = None):
        self.module_id = module_id
        self.net_id = net_id
        suffix = f" (net {net_id})" if net_id is not None else ""
        super().__init__(f"module {module_id} has no position{suffix}")


class NotGridIntegralError(CertiplaceError):
    """Raised when grid arithmetic is requested on off-grid pin coordinates"""
    pass


class GridPlanError(CertiplaceError):
    """Raised when the grid arithmetic leaves no room for standard cells"""
    pass


class WhiteSpaceShortfall(CertiplaceError):
    """Raised when white-space insertion cannot reach its target"""

    def __init__(self, remaining: int):
        self.remaining = remaining
        super().__init__(f"white-space target missed by {remaining} grid cells")


class NetBudgetExhausted(CertiplaceError):
    """Raised when the degree histogram runs out before the backbone covers the grid"""
    pass


class CertificationError(CertiplaceError):
    """Raised when a generated netlist fails its own optimality certificate"""

    def __init__(self, message: str, item: Optional[str] = None):
        self.item = item
        super().__init__(f"{item}: {message}" if item else message)


class OracleLimitError(CertiplaceError):
    """Raised when the exhaustive oracle is asked for more than its limits allow"""
    pass


class ModuleSetMismatch(CertiplaceError):
    """Raised when two placements do not cover the same modules"""

    def __init__(self, difference: Iterable[str]):
        self.difference = sorted(difference)
        shown = ", ".join(self.difference[:10])
        more = f" (+{len(self.difference) - 10} more)" if len(self.difference) > 10 else ""
        super().__init__(f"module sets differ: {shown}{more}")
