# ==================== flow.py ====================
"""
Geodesic flow of Sol in a left-invariant frame
Structure field flowlines, the exponential map, concatenation products,
symmetric and perfect flowlines and the conserved quantities of geodesics
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, interpolate

from utils.config import Settings, get_settings
from utils.errors import ConvergenceError, InvalidInputError
from utils.integrator import (
    RK4, integrate_flow, integrate_geodesics, normalize_rows,
    sigma_array, steps_for,
)
from utils.sol_core import (
    IDENTITY, POSITIVE, SWAP, Sector, SolPoint, TangentVector,
    apply_symmetry, checked_exp, metric_norm, dleft,
)
from utils.specfun import HALF_SQRT2, LoopLevelSet, diagonal_point, level_point, level_set

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-9


# ==================== Data Models ====================

@dataclass(frozen=True)
class FlowState:
    """A unit frame vector on the sphere of the Lie algebra"""
    u: TangentVector

    @property
    def F(self) -> float:
        return self.u.x * self.u.y

    def norm_defect(self) -> float:
        return abs(self.u.norm() - 1.0)


@dataclass(frozen=True)
class GeodesicState:
    """Position and frame tangent of a unit speed geodesic"""
    p: SolPoint
    u: FlowState

    def speed(self) -> float:
        return metric_norm(self.p, dleft(self.p, self.u.u))


@dataclass(frozen=True)
class Flowline:
    """
    Samples of a structure field flowline

    t: (n,) strictly increasing times starting at 0
    u: (n, 3) frame vectors at those times
    """
    t: np.ndarray
    u: np.ndarray

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def samples(self):
        for t, row in zip(self.t, self.u):
            yield float(t), FlowState(TangentVector.from_array(row))

    def start(self) -> TangentVector:
        return TangentVector.from_array(self.u[0])

    def end(self) -> TangentVector:
        return TangentVector.from_array(self.u[-1])

    def vector(self) -> TangentVector:
        """The Lie algebra vector T*u(0) whose geodesic this flowline describes"""
        return self.start().scaled(self.T)

    def split(self, index: int) -> Tuple["Flowline", "Flowline"]:
        """g = u|v at sample index, the second part re-based to start at t=0"""
        if not 0 < index < len(self.t) - 1:
            raise InvalidInputError("split index must be interior")
        head = Flowline(self.t[: index + 1].copy(), self.u[: index + 1].copy())
        tail = Flowline(self.t[index:] - self.t[index], self.u[index:].copy())
        return head, tail


# ==================== Structure field ====================

def sigma(u: TangentVector) -> TangentVector:
    """Sigma(x, y, z) = (xz, -yz, -x^2 + y^2)"""
    return TangentVector(u.x * u.z, -u.y * u.z, -u.x * u.x + u.y * u.y)


def _check_unit(u: TangentVector) -> None:
    if abs(u.norm() - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"expected a unit vector, |u|={u.norm()!r}")


def _flowline(u0: TangentVector, T: float, dt: float, settings: Settings, backward: bool = False) -> Flowline:
    n = steps_for(T, dt) if T > 0 else 0
    if n > settings.max_steps:
        raise ConvergenceError(f"flowline of length {T} needs {n} steps > max_steps={settings.max_steps}")
    if n == 0:
        return Flowline(np.zeros(1), u0.as_array()[None, :])
    history = integrate_flow(u0.as_array()[None, :], np.array([T]), n, backward=backward, record=True)
    return Flowline(np.linspace(0.0, T, n + 1), history[:, 0, :])


def flow_exact_invariants(u0: TangentVector, T: float, dt: Optional[float] = None) -> Flowline:
    """
    Integrate u' = Sigma(u) from u0 for time T

    Fixed RK4 steps no larger than dt, each followed by projection
    back to the unit sphere. Norm and xy are conserved along the result.
    """
    settings = get_settings()
    dt = dt or settings.dt
    _check_unit(u0)
    if T < 0 or dt <= 0:
        raise InvalidInputError("flow_exact_invariants needs T >= 0 and dt > 0")
    return _flowline(u0, T, dt, settings)


def flow_point(u0: TangentVector, t: float, dt: Optional[float] = None) -> TangentVector:
    """Endpoint of the flowline from u0 after signed time t"""
    settings = get_settings()
    dt = dt or settings.dt
    if t == 0:
        return u0
    n = steps_for(t, dt)
    end = integrate_flow(u0.as_array()[None, :], np.array([abs(t)]), n, backward=t < 0)
    return TangentVector.from_array(end[0])


# ==================== Exponential map ====================

def _exp_hyperbolic(V: TangentVector) -> SolPoint:
    """
    Closed form in the plane y = 0

    With eta = e^z the plane is the upper half plane; the unit speed
    geodesic from i with initial direction e^{i phi} is R(i e^t) for the
    elliptic rotation R about i by phi - pi/2.
    """
    t = math.hypot(V.x, V.z)
    if t == 0.0:
        return IDENTITY
    theta = math.atan2(V.z, V.x) - math.pi / 2.0
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    w = 1j * checked_exp(t)
    image = (c * w + s) / (-s * w + c)
    return SolPoint(image.real, 0.0, math.log(image.imag))


def _exp_closed_form(V: TangentVector) -> Optional[SolPoint]:
    """Geodesics in the hyperbolic planes and along the straight diagonals"""
    if V.x == 0.0 and V.y == 0.0:
        return SolPoint(0.0, 0.0, V.z)
    if V.y == 0.0:
        return _exp_hyperbolic(V)
    if V.x == 0.0:
        return apply_symmetry(SWAP, _exp_hyperbolic(apply_symmetry(SWAP, V)))
    if V.z == 0.0 and abs(V.x) == abs(V.y):
        return SolPoint(V.x, V.y, 0.0)
    return None


def exp_map_batch(V: np.ndarray, dt: Optional[float] = None) -> np.ndarray:
    """
    Exponential map of (N, 3) vectors with one fixed step no larger than dt

    Rows are integrated together in rescaled time; the result is (N, 3).
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if len(V) == 0:
        return np.zeros((0, 3))
    dt = dt or get_settings().mesh_dt
    lengths = np.linalg.norm(V, axis=1)
    n = steps_for(float(lengths.max()), dt) if lengths.max() > 0 else 1
    return integrate_geodesics(V, n)[:, :3]


def exp_map(V: TangentVector, dt: Optional[float] = None) -> SolPoint:
    """
    Riemannian exponential map at the identity

    Degenerate directions use closed forms. Otherwise the coupled system
    p' = dLEFT_p(u), u' = Sigma(u) is integrated for time |V|, halving the
    step until two successive results agree to exp_tol.
    """
    closed = _exp_closed_form(V)
    if closed is not None:
        return closed

    settings = get_settings()
    dt = dt or settings.exp_dt
    length = V.norm()
    n = steps_for(length, dt)
    row = V.as_array()[None, :]
    previous = integrate_geodesics(row, n)[0, :3]
    change = float("nan")
    for _ in range(settings.exp_max_halvings):
        n *= 2
        current = integrate_geodesics(row, n)[0, :3]
        change = float(np.max(np.abs(current - previous)))
        if change <= settings.exp_tol * max(1.0, float(np.max(np.abs(current)))):
            return SolPoint.from_array(current)
        previous = current
    logger.warning("exp_map step halving exhausted for |V|=%.6g (last change %.3e)", length, change)
    return SolPoint.from_array(previous)


def geodesic_trace(V: TangentVector, dt: Optional[float] = None) -> pd.DataFrame:
    """Sampled geodesic as a table with columns t, x, y, z, ux, uy, uz"""
    dt = dt or get_settings().dt
    length = V.norm()
    n = steps_for(length, dt) if length > 0 else 1
    history = integrate_geodesics(V.as_array()[None, :], n, record=True)[:, 0, :]
    table = pd.DataFrame(history, columns=["x", "y", "z", "ux", "uy", "uz"])
    table.insert(0, "t", np.linspace(0.0, length, n + 1))
    return table


def exp_jacobian(V: TangentVector, h: float = 1e-5, dt: Optional[float] = None) -> np.ndarray:
    """Central-difference Jacobian d exp_map / dV as a 3x3 array"""
    dt = dt or get_settings().exp_dt / 4.0
    center = V.as_array()
    rows = np.vstack([center + h * np.eye(3), center - h * np.eye(3)])
    images = exp_map_batch(rows, dt)
    return ((images[:3] - images[3:]) / (2.0 * h)).T


# ==================== Concatenation products ====================

def concatenate(factors: np.ndarray) -> np.ndarray:
    """
    Product g_0 * g_1 * ... * g_n of (n+1, 3) group elements

    Unrolls (X, Y, Z) * (a, b, c) = (X + e^Z a, Y + e^-Z b, Z + c) with
    cumulative sums of the vertical parts.
    """
    z_before = np.concatenate([[0.0], np.cumsum(factors[:-1, 2])])
    x = float(np.sum(np.exp(z_before) * factors[:, 0]))
    y = float(np.sum(np.exp(-z_before) * factors[:, 1]))
    return np.array([x, y, float(np.sum(factors[:, 2]))])


def exp_map_product_oracle(V: TangentVector, n: int) -> SolPoint:
    """
    Euler product (eps g_0) * ... * (eps g_n), eps = |V|/(n+1)

    g_i are flowline samples at the left endpoints t_i = i*eps, read
    from a Hermite interpolant of the RK4 flowline. First order in 1/n.
    """
    if n < 1:
        raise InvalidInputError("the concatenation product needs n >= 1")
    T = V.norm()
    if T == 0.0:
        return IDENTITY
    line = flow_exact_invariants(V.unit(), T)
    if len(line.t) < 2:
        samples = np.repeat(line.u[:1], n + 1, axis=0)
    else:
        spline = interpolate.CubicHermiteSpline(line.t, line.u, sigma_array(line.u), axis=0)
        eps = T / (n + 1)
        samples = spline(eps * np.arange(n + 1))
    return SolPoint.from_array(concatenate((T / (n + 1)) * samples))


def z_displacement(g: Flowline) -> float:
    """Vertical coordinate of the concatenated endpoint: integral of z(t) over g"""
    if len(g.t) < 2:
        return 0.0
    return float(integrate.simpson(g.u[:, 2], x=g.t))


# ==================== Level sets and perfect vectors ====================

def symmetric_flowline(level: LoopLevelSet, t: float, dt: Optional[float] = None) -> Flowline:
    """
    Flowline of duration 2t on the level set whose endpoints are partners

    Flows back from p0 = (x0, y0, 0), x0 > y0, for time t to p_t and then
    forward for 2t; the endpoint is the reflection of p_t in z = 0.
    """
    if not 0.0 < t <= level.L / 2.0 * (1.0 + 1e-12):
        raise InvalidInputError(f"t must lie in (0, L/2], got {t!r}")
    settings = get_settings()
    dt = dt or settings.dt
    start = flow_point(TangentVector.from_array(level_point(level.a)), -t, dt)
    return _flowline(start, 2.0 * t, dt, settings)


def perfect_vector(a: float, phase: float = 0.0, sector: Sector = POSITIVE) -> TangentVector:
    """
    Perfect vector on the level set through U_a

    The unit vector is level_point(a) flowed for time phase, then scaled
    by the period and reflected into the requested sector.
    """
    return perfect_vectors(a, np.array([phase]), sector)[0]


def perfect_vectors(a: float, phases: np.ndarray, sector: Sector = POSITIVE):
    """Batch form of perfect_vector, one RK4 run for every phase"""
    settings = get_settings()
    level = level_set(a)
    phases = np.asarray(phases, dtype=float).reshape(-1)
    start = np.repeat(level_point(a)[None, :], len(phases), axis=0)
    n = steps_for(float(np.max(np.abs(phases))), settings.dt) if np.any(phases) else 1
    units = integrate_flow(start, phases, n)
    return [
        apply_symmetry(sector, TangentVector.from_array(level.L * row))
        for row in units
    ]


def first_return_time(a: float, dt: Optional[float] = None) -> float:
    """
    Time for the flowline of U_a to come back to U_a

    Detects the upward crossing of x - y = 0 with z > 0 after departure
    and refines it with Newton steps along the local flow.
    """
    settings = get_settings()
    dt = dt or settings.dt
    stepper = RK4(sigma_array, normalize_rows)
    u = diagonal_point(a)[None, :]
    t = 0.0
    steps = 0
    departed = False
    while True:
        nxt = stepper.step(u, dt)
        steps += 1
        if steps > settings.max_steps:
            raise ConvergenceError(f"no return of U_a for a={a} within max_steps")
        before = u[0, 0] - u[0, 1]
        after = nxt[0, 0] - nxt[0, 1]
        if departed and before < 0.0 <= after and nxt[0, 2] > 0.0:
            break
        if after < 0.0:
            departed = True
        u, t = nxt, t + dt

    # Newton on e(s) = x - y along the flow from the last state before the crossing
    offset = 0.0
    state = u
    for _ in range(8):
        e = state[0, 0] - state[0, 1]
        de = state[0, 2] * (state[0, 0] + state[0, 1])
        delta = -e / de
        offset += delta
        state = stepper.step(u, offset) if offset != 0.0 else u
        if abs(delta) < 1e-15:
            break
    return t + offset


# ==================== Conserved quantities ====================

def conserved_momenta(state: GeodesicState) -> Tuple[float, float, float]:
    """
    Momenta of the three Killing fields along a unit speed geodesic

    P = e^-z u_x, Q = e^z u_y and R = xP - yQ + u_z are constant.
    """
    p, u = state.p, state.u.u
    ez = checked_exp(p.z)
    P = u.x / ez
    Q = ez * u.y
    return P, Q, p.x * P - p.y * Q + u.z


def grayson_cylinder_residual(a: float, state: GeodesicState) -> float:
    """
    w^2 + cosh 2z - 1/(2a^2) at state.p for the geodesic launched along U_a

    w = (x - y)/sqrt(2) measured from the cylinder axis through the
    identity, offset sqrt(1-2a^2)/(sqrt(2) a).
    """
    if not 0.0 < a <= HALF_SQRT2:
        raise InvalidInputError(f"a must lie in (0, sqrt(2)/2], got {a!r}")
    offset = math.sqrt(max(1.0 - 2.0 * a * a, 0.0)) / (math.sqrt(2.0) * a)
    w = (state.p.x - state.p.y) / math.sqrt(2.0) - offset
    return w * w + math.cosh(2.0 * state.p.z) - 1.0 / (2.0 * a * a)


def trace_states(table: pd.DataFrame):
    """GeodesicState per row of a geodesic_trace table"""
    for row in table.itertuples(index=False):
        yield GeodesicState(
            SolPoint(row.x, row.y, row.z),
            FlowState(TangentVector(row.ux, row.uy, row.uz)),
        )
