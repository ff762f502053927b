# ==================== specfun.py ====================
"""
Scalar special functions for Sol geometry
AGM, the minimality functional mu, complete elliptic integrals,
the period and holonomy of loop level sets and their inverses
"""

import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import integrate, optimize

from utils.errors import InvalidInputError
from utils.sol_core import TangentVector

SQRT2 = math.sqrt(2.0)
HALF_SQRT2 = SQRT2 / 2.0
MIN_PERIOD = math.pi * SQRT2

AGM_RTOL = 1e-15
AGM_MAX_ITER = 100
# smallest complementary parameter 1-m the inversions will reach
MIN_COMPLEMENT = 1e-300
MIN_DIAGONAL = 1e-300


# ==================== Data Models ====================

class LoopLevelSet(BaseModel):
    """
    A closed orbit of the structure field, labelled by its diagonal parameter

    a: the orbit passes through U_a = (a, a, sqrt(1-2a^2))
    L: period of the orbit
    m: elliptic parameter (1-2a^2)/(1+2a^2)
    H: holonomy invariant of the orbit
    """
    model_config = ConfigDict(frozen=True)

    a: float
    L: float
    m: float
    H: float


# ==================== AGM ====================

def agm_descent(alpha0: float, beta0: float) -> Tuple[float, float]:
    """
    Run the AGM iteration and keep the running sum needed by E(m)

    Returns:
        (AGM(alpha0, beta0), sum over n >= 1 of 2^(n-1) c_n^2) where
        c_n = (beta_{n-1} - alpha_{n-1}) / 2
    """
    if alpha0 < 0 or beta0 < 0:
        raise InvalidInputError("AGM needs non-negative arguments")
    alpha, beta = (alpha0, beta0) if alpha0 <= beta0 else (beta0, alpha0)
    if alpha == 0.0:
        # the geometric mean pins the limit at 0; the half-difference sum
        # is that of beta halving forever
        return 0.0, beta * beta / 2.0
    tol = AGM_RTOL * max(beta, 1.0)
    total = 0.0
    weight = 1.0
    for _ in range(AGM_MAX_ITER):
        if beta - alpha <= tol:
            break
        c = (beta - alpha) / 2.0
        total += weight * c * c
        weight *= 2.0
        alpha, beta = math.sqrt(alpha * beta), (alpha + beta) / 2.0
    return (alpha + beta) / 2.0, total


def agm(alpha0: float, beta0: float) -> float:
    """Arithmetic-geometric mean; arguments are swapped if out of order"""
    return agm_descent(alpha0, beta0)[0]


def mu(v: TangentVector) -> float:
    """mu(V) = AGM(sqrt|xy|, sqrt((|x|+|y|)^2 + z^2) / 2)"""
    ax, ay = abs(v.x), abs(v.y)
    return agm(math.sqrt(ax * ay), 0.5 * math.hypot(ax + ay, v.z))


# ==================== Elliptic integrals ====================

def _k_from_complement(q: float) -> float:
    """K at m = 1 - q; q is passed directly so that m -> 1 keeps its digits"""
    return (math.pi / 2.0) / agm(math.sqrt(q), 1.0)


def _e_from_complement(q: float) -> float:
    if q == 0.0:
        return 1.0
    m = 1.0 - q
    mean, tail = agm_descent(math.sqrt(q), 1.0)
    return (math.pi / 2.0) / mean * (1.0 - m / 2.0 - tail)


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind via K(m) = (pi/2)/AGM(sqrt(1-m), 1)"""
    if not 0.0 <= m < 1.0:
        raise InvalidInputError(f"elliptic_K needs 0 <= m < 1, got {m!r}")
    return _k_from_complement(1.0 - m)


def elliptic_E(m: float) -> float:
    """Complete elliptic integral of the second kind by AGM descent"""
    if not 0.0 <= m <= 1.0:
        raise InvalidInputError(f"elliptic_E needs 0 <= m <= 1, got {m!r}")
    return _e_from_complement(1.0 - m)


# ==================== Period function ====================

def _check_diagonal(a: float) -> None:
    if not 0.0 < a < HALF_SQRT2:
        raise InvalidInputError(f"a must lie in (0, sqrt(2)/2), got {a!r}")


def _period(a: float) -> float:
    return math.pi / agm(a, 0.5 * math.sqrt(1.0 + 2.0 * a * a))


def period_from_a(a: float) -> float:
    """Period of the loop level set through U_a = (a, a, sqrt(1-2a^2))"""
    _check_diagonal(a)
    return _period(a)


def turning_time(a: float) -> float:
    """t_a = arccosh(1/(2a^2)) / 2, where the orbit of U_a reaches z = 0"""
    _check_diagonal(a)
    return 0.5 * math.acosh(1.0 / (2.0 * a * a))


def period_integral(a: float) -> float:
    """
    Period by quadrature of 4 / sqrt(1 - 2a^2 cosh 2t) over [0, t_a)

    The inverse square root at t_a is removed with t = t_a sin^2(s); the
    radicand is rewritten as 4a^2 sinh(t_a+t) sinh(t_a-t) so that no
    cancellation happens near the endpoint.
    """
    t_a = turning_time(a)

    def integrand(s: float) -> float:
        sin_s, cos_s = math.sin(s), math.cos(s)
        gap = t_a * cos_s * cos_s
        if gap == 0.0:
            # limit of the ratio as s -> pi/2
            return 8.0 * t_a * sin_s / math.sqrt(4.0 * a * a * math.sinh(2.0 * t_a) * t_a)
        t = t_a - gap
        radicand = 4.0 * a * a * math.sinh(t_a + t) * math.sinh(gap)
        return 8.0 * t_a * sin_s * cos_s / math.sqrt(radicand)

    value, _ = integrate.quad(integrand, 0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


def elliptic_parameter(a: float) -> float:
    """m = (1-2a^2)/(1+2a^2)"""
    _check_diagonal(a)
    return (1.0 - 2.0 * a * a) / (1.0 + 2.0 * a * a)


def diagonal_point(a: float) -> np.ndarray:
    """U_a = (a, a, sqrt(1-2a^2))"""
    _check_diagonal(a)
    return np.array([a, a, math.sqrt(1.0 - 2.0 * a * a)])


def level_point(a: float) -> np.ndarray:
    """The point (x0, y0, 0) of the orbit through U_a with x0 > y0"""
    _check_diagonal(a)
    plus = math.sqrt(1.0 + 2.0 * a * a)
    minus = math.sqrt(1.0 - 2.0 * a * a)
    return np.array([(plus + minus) / 2.0, (plus - minus) / 2.0, 0.0])


# ==================== Holonomy ====================

def _period_of_complement(q: float) -> float:
    # L = sqrt(8 + 8m) K(m) with m = 1 - q
    return math.sqrt(16.0 - 8.0 * q) * _k_from_complement(q)


def _holonomy_of_complement(q: float) -> float:
    root_q = math.sqrt(q)
    return 4.0 * _e_from_complement(q) / root_q - 2.0 * root_q * _k_from_complement(q)


def _check_period(L: float) -> None:
    if not L >= MIN_PERIOD * (1.0 - 1e-12):
        raise InvalidInputError(f"no loop level set has period {L!r} < pi*sqrt(2)")


def _complement_from_period(L: float) -> float:
    """Solve sqrt(8+8m) K(m) = L for q = 1 - m by bisection in log q"""
    _check_period(L)
    if L <= MIN_PERIOD * (1.0 + 1e-14):
        return 1.0
    lo = math.log(MIN_COMPLEMENT)
    if _period_of_complement(MIN_COMPLEMENT) < L:
        raise InvalidInputError(f"period {L!r} is beyond the supported range")
    root = optimize.bisect(
        lambda u: _period_of_complement(math.exp(u)) - L,
        lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400,
    )
    return math.exp(root)


def elliptic_m_from_period(L: float) -> float:
    """The elliptic parameter m in [0, 1) of the loop level set of period L"""
    return 1.0 - _complement_from_period(L)


def holonomy_from_period(L: float) -> float:
    """
    Holonomy invariant H_L of the loop level set of period L

    Solves L = sqrt(8+8m) K(m) for m and evaluates
    H = 4E(m)/sqrt(1-m) - sqrt(4-4m) K(m); H(pi*sqrt(2)) = pi.
    """
    return _holonomy_of_complement(_complement_from_period(L))


def period_from_holonomy(H: float) -> float:
    """Inverse of holonomy_from_period on [pi, oo)"""
    if not H >= math.pi * (1.0 - 1e-12):
        raise InvalidInputError(f"holonomy {H!r} is below pi")
    if H <= math.pi * (1.0 + 1e-14):
        return MIN_PERIOD
    lo = math.log(MIN_COMPLEMENT)
    if _holonomy_of_complement(MIN_COMPLEMENT) < H:
        raise InvalidInputError(f"holonomy {H!r} is beyond the supported range")
    root = optimize.bisect(
        lambda u: _holonomy_of_complement(math.exp(u)) - H,
        lo, 0.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400,
    )
    return _period_of_complement(math.exp(root))


# ==================== Level sets ====================

def level_set(a: float) -> LoopLevelSet:
    """Full record of the loop level set through U_a"""
    L = period_from_a(a)
    return LoopLevelSet(a=a, L=L, m=elliptic_parameter(a), H=holonomy_from_period(L))


def level_set_from_period(L: float) -> LoopLevelSet:
    """
    The loop level set of period L

    Bisection on a in (0, sqrt(2)/2), where the period is strictly
    decreasing, until the period matches L to 1e-12 relative. Within
    1e-12 of pi*sqrt(2) the record is the limit a = sqrt(2)/2, m = 0, H = pi.
    """
    _check_period(L)
    if L <= MIN_PERIOD * (1.0 + 1e-12):
        return LoopLevelSet(a=HALF_SQRT2, L=L, m=0.0, H=math.pi)
    if _period(MIN_DIAGONAL) < L:
        raise InvalidInputError(f"period {L!r} is beyond the supported range")
    a = optimize.bisect(
        lambda s: _period(s) - L,
        MIN_DIAGONAL, HALF_SQRT2, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=400,
    )
    a = min(max(a, MIN_DIAGONAL), math.nextafter(HALF_SQRT2, 0.0))
    return LoopLevelSet(a=a, L=L, m=elliptic_parameter(a), H=holonomy_from_period(L))
