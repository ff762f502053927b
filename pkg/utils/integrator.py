# ==================== integrator.py ====================
"""
Fixed-step fourth-order integration of the structure field and of the
coupled frame/position geodesic system.

States are (N, k) arrays so that many trajectories advance together.
Durations are folded into a per-row speed and the integration runs in
rescaled time s in [0, 1], so rows of different length share one step count.
"""

import logging
from typing import Callable, Optional

import numpy as np

from utils.errors import SolRangeError
from utils.sol_core import MAX_EXPONENT

logger = logging.getLogger(__name__)

Rhs = Callable[[np.ndarray], np.ndarray]


class RK4:
    """
    Classical Runge-Kutta stepper with an optional projection applied after each step

    The projection maps the state back onto the manifold the exact flow
    preserves (the unit sphere for frame components).
    """

    def __init__(self, rhs_func: Rhs, filter_func: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        self.rhs_func = rhs_func
        self.filter_func = filter_func

    def step(self, state: np.ndarray, dt: float) -> np.ndarray:
        ki = [dt / 6, dt / 3, dt / 3]
        hi = [dt / 2, dt / 2, dt]

        rhs = self.rhs_func(state)
        increment = np.zeros_like(state)
        for h, k in zip(hi, ki):
            increment += k * rhs
            rhs = self.rhs_func(state + h * rhs)
        nxt = state + increment + (dt / 6) * rhs

        if self.filter_func is not None:
            nxt = self.filter_func(nxt)
        return nxt


# ==================== Vector fields ====================

def sigma_array(u: np.ndarray) -> np.ndarray:
    """Structure field (xz, -yz, -x^2+y^2) on an (N, 3) array"""
    x, y, z = u[:, 0], u[:, 1], u[:, 2]
    return np.stack([x * z, -y * z, y * y - x * x], axis=1)


def normalize_rows(u: np.ndarray) -> np.ndarray:
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _flow_rhs(speed: np.ndarray) -> Rhs:
    def rhs(u: np.ndarray) -> np.ndarray:
        return speed[:, None] * sigma_array(u)
    return rhs


def _geodesic_rhs(speed: np.ndarray) -> Rhs:
    """p' = |V| dLEFT_p(u), u' = |V| Sigma(u) on (N, 6) states [p | u]"""
    def rhs(state: np.ndarray) -> np.ndarray:
        z = state[:, 2]
        u = state[:, 3:]
        with np.errstate(over="ignore", invalid="ignore"):
            ez = np.exp(z)
            dp = np.stack([ez * u[:, 0], u[:, 1] / ez, u[:, 2]], axis=1)
        out = np.empty_like(state)
        out[:, :3] = dp
        out[:, 3:] = sigma_array(u)
        return speed[:, None] * out
    return rhs


def _project_frame(state: np.ndarray) -> np.ndarray:
    state[:, 3:] = normalize_rows(state[:, 3:])
    return state


def _check_range(state: np.ndarray) -> None:
    z = state[:, 2]
    worst = float(np.max(np.abs(z))) if z.size else 0.0
    if not worst <= MAX_EXPONENT:
        raise SolRangeError(worst, MAX_EXPONENT)


# ==================== Drivers ====================

def split_directions(V: np.ndarray):
    """Lengths and unit directions of (N, 3) vectors; zero rows get (1, 0, 0) at speed 0"""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    lengths = np.linalg.norm(V, axis=1)
    units = np.empty_like(V)
    moving = lengths > 0
    units[moving] = V[moving] / lengths[moving, None]
    units[~moving] = (1.0, 0.0, 0.0)
    return lengths, units


def integrate_flow(
    u0: np.ndarray,
    durations: np.ndarray,
    n_steps: int,
    backward: bool = False,
    record: bool = False,
) -> np.ndarray:
    """
    Flow unit vectors along the structure field

    Args:
        u0: (N, 3) unit vectors
        durations: (N,) flow times, row i advances by durations[i]
        n_steps: steps over the rescaled interval [0, 1]
        backward: integrate u' = -Sigma(u)
        record: keep every step

    Returns:
        (N, 3) final vectors, or (n_steps+1, N, 3) when record is set
    """
    u = normalize_rows(np.atleast_2d(np.asarray(u0, dtype=float)))
    speed = np.asarray(durations, dtype=float).reshape(-1)
    if backward:
        speed = -speed
    stepper = RK4(_flow_rhs(speed), normalize_rows)
    h = 1.0 / n_steps
    history = [u] if record else None
    for _ in range(n_steps):
        u = stepper.step(u, h)
        if record:
            history.append(u)
    return np.stack(history) if record else u


def integrate_geodesics(V: np.ndarray, n_steps: int, record: bool = False) -> np.ndarray:
    """
    Solve the coupled system from the identity with u = V/|V| for time |V|

    Returns:
        (N, 6) rows [p | u] at the end, or (n_steps+1, N, 6) when record is set
    """
    lengths, units = split_directions(V)
    state = np.zeros((len(lengths), 6))
    state[:, 3:] = units
    stepper = RK4(_geodesic_rhs(lengths), _project_frame)
    h = 1.0 / n_steps
    history = [state.copy()] if record else None
    for _ in range(n_steps):
        state = stepper.step(state, h)
        _check_range(state)
        if record:
            history.append(state.copy())
    logger.debug("integrated %d geodesics with %d steps", len(lengths), n_steps)
    return np.stack(history) if record else state


def steps_for(duration: float, dt: float) -> int:
    """Smallest step count whose step does not exceed dt"""
    return max(1, int(np.ceil(abs(duration) / dt - 1e-12)))
