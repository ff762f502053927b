# ==================== oracle.py ====================
"""
Brute-force cross-checks for the test suite

Every routine here integrates, multiplies and quadratures on its own
(scipy solve_ivp and quad) so that it can be held against the primary
AGM formulas, RK4 integrator and Newton shooting.
"""

import math
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from utils.errors import ConvergenceError, InvalidInputError

logger = logging.getLogger(__name__)

RTOL = 1e-11
ATOL = 1e-12


# ==================== Quadratures ====================

def numeric_period(a: float) -> float:
    """
    4 * integral over [0, t_a) of dt / sqrt(1 - 2a^2 cosh 2t)

    The endpoint singularity (t_a - t)^(-1/2) is handed to quad as an
    algebraic weight; the smooth remainder uses 1 - 2a^2 cosh 2t =
    4a^2 sinh(t_a + t) sinh(t_a - t).
    """
    if not 0.0 < a < math.sqrt(0.5):
        raise InvalidInputError(f"a must lie in (0, sqrt(2)/2), got {a!r}")
    t_a = 0.5 * math.acosh(1.0 / (2.0 * a * a))

    def smooth(t: float) -> float:
        d = t_a - t
        ratio = math.sinh(d) / d if d > 0 else 1.0
        return 4.0 / math.sqrt(4.0 * a * a * math.sinh(t_a + t) * ratio)

    value, _ = integrate.quad(smooth, 0.0, t_a, weight="alg", wvar=(0.0, -0.5), epsabs=1e-13, epsrel=1e-12)
    return value


def numeric_K(m: float) -> float:
    """Integral over [0, pi/2] of 1/sqrt(1 - m sin^2)"""
    if not 0.0 <= m < 1.0:
        raise InvalidInputError(f"numeric_K needs 0 <= m < 1, got {m!r}")
    value, _ = integrate.quad(lambda s: 1.0 / math.sqrt(1.0 - m * math.sin(s) ** 2), 0.0, math.pi / 2,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def numeric_E(m: float) -> float:
    """Integral over [0, pi/2] of sqrt(1 - m sin^2)"""
    if not 0.0 <= m <= 1.0:
        raise InvalidInputError(f"numeric_E needs 0 <= m <= 1, got {m!r}")
    value, _ = integrate.quad(lambda s: math.sqrt(1.0 - m * math.sin(s) ** 2), 0.0, math.pi / 2,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


# ==================== Geodesics by solve_ivp ====================

def _structure(u: np.ndarray) -> np.ndarray:
    x, y, z = u
    return np.array([x * z, -y * z, y * y - x * x])


def _geodesic_field(t: float, state: np.ndarray) -> np.ndarray:
    """Stacked [p | u] rows flattened; p' = (e^z ux, e^-z uy, uz), u' = structure field"""
    rows = state.reshape(-1, 6)
    ez = np.exp(rows[:, 2])
    ux, uy, uz = rows[:, 3], rows[:, 4], rows[:, 5]
    out = np.stack([ez * ux, uy / ez, uz, ux * uz, -uy * uz, uy * uy - ux * ux], axis=1)
    return out.ravel()


def oracle_exp(V: np.ndarray) -> np.ndarray:
    """exp at the identity by DOP853 at tight tolerance"""
    V = np.asarray(V, dtype=float)
    length = float(np.linalg.norm(V))
    if length == 0.0:
        return np.zeros(3)
    start = np.concatenate([np.zeros(3), V / length])
    sol = integrate.solve_ivp(_geodesic_field, (0.0, length), start, method="DOP853", rtol=RTOL, atol=ATOL)
    return sol.y[:3, -1]


def euler_product_exp(V: np.ndarray, n: int) -> np.ndarray:
    """
    (eps g_0) * (eps g_1) * ... * (eps g_n) with eps = |V|/(n+1)

    g_i is the flowline of V/|V| at time i*eps; the group law is applied
    factor by factor.
    """
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    V = np.asarray(V, dtype=float)
    T = float(np.linalg.norm(V))
    if T == 0.0:
        return np.zeros(3)
    eps = T / (n + 1)
    times = eps * np.arange(n + 1)
    sol = integrate.solve_ivp(lambda t, u: _structure(u), (0.0, float(times[-1])), V / T,
                              method="DOP853", t_eval=times, rtol=RTOL, atol=ATOL)
    X = Y = Z = 0.0
    for a, b, c in (eps * sol.y).T:
        X, Y, Z = X + math.exp(Z) * a, Y + math.exp(-Z) * b, Z + c
    return np.array([X, Y, Z])


# ==================== Shortest paths by sampling ====================

def _fibonacci_directions(count: int) -> np.ndarray:
    index = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * index / count)
    azimuth = math.pi * (1.0 + math.sqrt(5.0)) * index
    return np.stack([np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)], axis=1)


def _sweep(directions: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Positions exp(t u) for every direction u and grid length t, shape (dirs, lens, 3)"""
    start = np.zeros((len(directions), 6))
    start[:, 3:] = directions
    sol = integrate.solve_ivp(_geodesic_field, (0.0, float(lengths[-1])), start.ravel(),
                              method="DOP853", t_eval=lengths, rtol=1e-9, atol=1e-10)
    return sol.y.reshape(len(directions), 6, len(lengths))[:, :3, :].transpose(0, 2, 1)


def brute_distance(
    p: np.ndarray,
    grid_dirs: int = 400,
    grid_len: int = 60,
    max_length: Optional[float] = None,
    candidates: int = 12,
) -> float:
    """
    Shortest geodesic length from the identity to p found by sampling

    Sweeps a Fibonacci grid of directions times a grid of lengths, then
    polishes the shortest promising samples with least squares on the
    oracle exponential. Only candidates that reach p to 1e-4 count.
    """
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) > 10.0):
        raise InvalidInputError("brute_distance works inside the box [-10, 10]^3")
    if not np.any(p):
        return 0.0
    max_length = max_length or 1.5 * float(np.linalg.norm(p)) + 1.0
    directions = _fibonacci_directions(grid_dirs)
    lengths = np.linspace(max_length / grid_len, max_length, grid_len)
    positions = _sweep(directions, lengths)
    misses = np.linalg.norm(positions - p, axis=2)

    # local minima of the miss along each ray, shortest first
    picks: List[Tuple[float, float, int]] = []
    best_miss = float(misses.min())
    band = max(3.0 * best_miss, 0.25 * max(1.0, float(np.linalg.norm(p))))
    for i in range(grid_dirs):
        row = misses[i]
        for j in range(grid_len):
            left = row[j - 1] if j > 0 else math.inf
            right = row[j + 1] if j + 1 < grid_len else math.inf
            if row[j] <= left and row[j] <= right and row[j] <= band:
                picks.append((float(lengths[j]), float(row[j]), i))
    picks.sort()

    found = math.inf
    spacing = float(lengths[1] - lengths[0]) if grid_len > 1 else max_length
    for length, _, i in picks[:candidates]:
        if found < length - 2.0 * spacing:
            break
        guess = length * directions[i]
        fit = optimize.least_squares(lambda V: oracle_exp(V) - p, guess, xtol=1e-12, ftol=1e-12, gtol=1e-12)
        if float(np.max(np.abs(fit.fun))) <= 1e-4:
            found = min(found, float(np.linalg.norm(fit.x)))
    if not math.isfinite(found):
        raise ConvergenceError(f"no sampled geodesic reaches {p}", residual=best_miss)
    logger.debug("brute distance to %s: %.9g from %d candidates", p, found, min(len(picks), candidates))
    return found
