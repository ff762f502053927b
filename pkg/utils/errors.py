# ==================== errors.py ====================
"""
Exception hierarchy for solgeo
Every failure raised by the library derives from SolError
"""

from typing import Any, Optional


class SolError(Exception):
    """Base class for all solgeo errors"""


class SolRangeError(SolError, ArithmeticError):
    """An exponential factor e^|z| left the double precision range"""

    def __init__(self, z: float, limit: float):
        self.z = z
        self.limit = limit
        super().__init__(f"|z|={abs(z):.6g} exceeds the supported range {limit:g}")


class InvalidInputError(SolError, ValueError):
    """A precondition of an operation was violated"""


class MeshResolutionError(InvalidInputError):
    """Mesh resolution cannot resolve the holes of the requested sphere"""


class ConvergenceError(SolError):
    """
    An iterative solver ran out of budget

    Carries the best iterate and its residual so callers can decide
    whether the answer is still usable.
    """

    def __init__(self, message: str, best: Optional[Any] = None, residual: float = float("nan")):
        self.best = best
        self.residual = residual
        super().__init__(f"{message} (best residual {residual:.3e})")
