# ==================== sol_core.py ====================
"""
Group algebra and metric of Sol
Points, Lie-algebra vectors, the Klein-4 sector reflections and the swap isometry
"""

import math
from dataclasses import dataclass
from typing import Tuple, TypeVar, Union

import numpy as np

from utils.errors import InvalidInputError, SolRangeError

# e^700 is still finite in double precision, e^710 is not
MAX_EXPONENT = 700.0
HORIZONTAL_TOL = 1e-12
SWAP = "swap"


# ==================== Data Models ====================

@dataclass(frozen=True)
class _Triple:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values):
        x, y, z = (float(c) for c in values)
        return cls(x, y, z)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z


@dataclass(frozen=True)
class SolPoint(_Triple):
    """A group element (x, y, z) of Sol"""


@dataclass(frozen=True)
class TangentVector(_Triple):
    """A Lie-algebra vector (x, y, z) with the Euclidean norm at the identity"""

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def scaled(self, factor: float) -> "TangentVector":
        return TangentVector(factor * self.x, factor * self.y, factor * self.z)

    def unit(self) -> "TangentVector":
        length = self.norm()
        if length == 0.0:
            raise InvalidInputError("the zero vector has no direction")
        return self.scaled(1.0 / length)


@dataclass(frozen=True)
class Sector:
    """One of the four open sectors, named by the signs of x and y"""
    sign_x: int = 1
    sign_y: int = 1

    def __post_init__(self):
        if self.sign_x not in (1, -1) or self.sign_y not in (1, -1):
            raise InvalidInputError("sector signs must be +1 or -1")


POSITIVE = Sector(1, 1)
REFLECT_X = Sector(-1, 1)
REFLECT_Y = Sector(1, -1)
SECTORS = (Sector(1, 1), Sector(-1, 1), Sector(1, -1), Sector(-1, -1))
IDENTITY = SolPoint(0.0, 0.0, 0.0)

T = TypeVar("T", SolPoint, TangentVector)


# ==================== Exponential factors ====================

def checked_exp(z: float) -> float:
    """e^z, refusing |z| beyond MAX_EXPONENT instead of returning inf"""
    if not abs(z) <= MAX_EXPONENT:
        raise SolRangeError(z, MAX_EXPONENT)
    return math.exp(z)


def check_exponents(z: np.ndarray) -> None:
    """Array form of the overflow contract"""
    worst = float(np.max(np.abs(z))) if np.size(z) else 0.0
    if not worst <= MAX_EXPONENT:
        raise SolRangeError(worst, MAX_EXPONENT)


# ==================== Group operations ====================

def multiply(p: SolPoint, q: SolPoint) -> SolPoint:
    """(x,y,z)*(a,b,c) = (e^z a + x, e^-z b + y, c + z)"""
    ez = checked_exp(p.z)
    return SolPoint(ez * q.x + p.x, q.y / ez + p.y, q.z + p.z)


def inverse(p: SolPoint) -> SolPoint:
    """(x,y,z)^-1 = (-e^-z x, -e^z y, -z)"""
    ez = checked_exp(p.z)
    return SolPoint(-p.x / ez, -ez * p.y, -p.z)


def conjugate_horizontal(g: SolPoint, h: SolPoint) -> SolPoint:
    """
    g^-1 * h * g for h in the plane z=0

    Returns (e^-z a, e^z b, 0); the product of the first two
    coordinates of h survives unchanged.
    """
    if abs(h.z) > HORIZONTAL_TOL:
        raise InvalidInputError(f"conjugate_horizontal needs h.z = 0, got {h.z!r}")
    ez = checked_exp(g.z)
    return SolPoint(h.x / ez, ez * h.y, 0.0)


def dleft(p: SolPoint, u: TangentVector) -> Tuple[float, float, float]:
    """Differential of left translation by p applied to a Lie-algebra vector"""
    ez = checked_exp(p.z)
    return (ez * u.x, u.y / ez, u.z)


def metric_coefficients(p: SolPoint) -> Tuple[float, float, float]:
    """Diagonal of e^-2z dx^2 + e^2z dy^2 + dz^2 at p"""
    e2z = checked_exp(2.0 * p.z)
    return (1.0 / e2z, e2z, 1.0)


def metric_norm(p: SolPoint, w: Tuple[float, float, float]) -> float:
    """Length of a coordinate tangent vector w based at p"""
    gxx, gyy, gzz = metric_coefficients(p)
    return math.sqrt(gxx * w[0] ** 2 + gyy * w[1] ** 2 + gzz * w[2] ** 2)


# ==================== Symmetries ====================

def apply_symmetry(s: Union[Sector, str], v: T) -> T:
    """
    Apply a reflection (x,y,z) -> (±x,±y,z) or the swap (x,y,z) -> (y,x,-z)

    Both kinds are isometries of the Lie algebra and of Sol and commute
    with the exponential map. The result has the type of v.
    """
    if isinstance(s, Sector):
        return type(v)(s.sign_x * v.x, s.sign_y * v.y, v.z)
    if s == SWAP:
        return type(v)(v.y, v.x, -v.z)
    raise InvalidInputError(f"unknown symmetry {s!r}")


def sector_of(v: Union[SolPoint, TangentVector]) -> Sector:
    """Sector containing v; a zero coordinate counts as positive"""
    return Sector(-1 if v.x < 0 else 1, -1 if v.y < 0 else 1)


def to_positive_sector(v: T) -> Tuple[T, Sector]:
    """Reflect v into x, y >= 0; apply_symmetry(sector, result) gives v back"""
    sector = sector_of(v)
    return apply_symmetry(sector, v), sector
