# ==================== cutlocus.py ====================
"""
Minimality classification and the cut locus of Sol
mu-based classes, cut times, the spine curves, wavefronts and their
bounding triangles, membership in N, the inverse exponential and distance
"""

import math
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from scipy import interpolate
from scipy.spatial import cKDTree

from utils.config import Settings, get_settings
from utils.errors import ConvergenceError, InvalidInputError
from utils.flow import exp_map, exp_map_batch
from utils.integrator import RK4, integrate_geodesics, steps_for
from utils.sol_core import (
    POSITIVE, SWAP, Sector, SolPoint, TangentVector,
    apply_symmetry, check_exponents, inverse, multiply, to_positive_sector,
)
from utils.specfun import (
    HALF_SQRT2, MIN_PERIOD, agm, holonomy_from_period, level_point,
    level_set_from_period, mu, period_from_holonomy,
)

logger = logging.getLogger(__name__)

# polar angles below this are evaluated exactly instead of through the spline
SPLINE_THETA_MIN = 1e-3
SPLINE_SCREEN = 1e-2

# log_map seed table: geodesics sampled up to their cut time or this length
SEED_MAX_LENGTH = 16.0
SEED_SAMPLES = 128
SEED_CANDIDATES = 3

# relative residuals: end of the coarse Newton stage, and acceptance of a solution
COARSE_TOL = 1e-6
ACCEPT_TOL = 1e-7
MAX_HALVINGS = 8


# ==================== Data Models ====================

class Tag(str, Enum):
    SMALL = "Small"
    PERFECT = "Perfect"
    LARGE = "Large"


class Membership(str, Enum):
    IN_N = "InN"
    ON_BOUNDARY = "OnBoundary"
    ON_SPINE = "OnSpine"


class GeodesicClass(BaseModel):
    """Small, perfect or large, with mu and the margin mu - pi"""
    model_config = ConfigDict(frozen=True)

    tag: Tag
    mu: float
    margin: float

    @property
    def minimizing(self) -> bool:
        return self.tag is not Tag.LARGE


@dataclass(frozen=True)
class CutLocusCurve:
    """Polar samples of the spine in one sector; theta is the angle in the first quadrant"""
    sector: Sector
    theta: np.ndarray
    f: np.ndarray
    g: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.sector.sign_x * self.g * np.cos(self.theta)

    @property
    def y(self) -> np.ndarray:
        return self.sector.sign_y * self.g * np.sin(self.theta)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.theta, "f": self.f, "g": self.g, "x": self.x, "y": self.y})


@dataclass(frozen=True)
class Wavefront:
    """
    Samples of Lambda_L(t) = (a(t), b(t), 0) for t in (0, L/2]

    x, y, z hold the frame vector carried along by the wavefront system.
    """
    L: float
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def endpoint(self) -> Tuple[float, float]:
        return float(self.a[-1]), float(self.b[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "a": self.a, "b": self.b})


@dataclass(frozen=True)
class LogResult:
    """Preimages of a point under exp_map, two partners on the boundary region"""
    solutions: Tuple[TangentVector, ...]
    membership: Membership
    residual: float

    @property
    def vector(self) -> TangentVector:
        return self.solutions[0]

    @property
    def multiple(self) -> bool:
        return len(self.solutions) > 1


# ==================== Classification ====================

def classify(V: TangentVector, tol_perfect: Optional[float] = None) -> GeodesicClass:
    """Small, Perfect or Large from mu(V) against pi; tol_perfect widens the Perfect band"""
    tol = get_settings().tol_perfect if tol_perfect is None else tol_perfect
    value = mu(V)
    margin = value - math.pi
    if abs(margin) <= tol:
        tag = Tag.PERFECT
    elif margin < 0:
        tag = Tag.SMALL
    else:
        tag = Tag.LARGE
    return GeodesicClass(tag=tag, mu=value, margin=margin)


def cut_time(u: TangentVector) -> float:
    """pi / mu(u), or infinity when mu(u) = 0"""
    if abs(u.norm() - 1.0) > 1e-9:
        raise InvalidInputError(f"cut_time needs a unit vector, |u|={u.norm()!r}")
    value = mu(u)
    return math.pi / value if value > 0 else math.inf


def partner(V: TangentVector) -> TangentVector:
    return TangentVector(V.x, V.y, -V.z)


# ==================== Spine curves ====================

def cut_locus_polar(theta: float) -> Tuple[float, float]:
    """
    Polar radii at angle theta of the boundary of N' in the plane z=0
    of the Lie algebra (f) and of the spine of N in the plane z=0 of Sol (g)
    """
    if not 0.0 < theta < math.pi / 2.0:
        raise InvalidInputError(f"theta must lie in (0, pi/2), got {theta!r}")
    f = math.pi / agm(math.sin(theta), math.cos(theta))
    g = math.sqrt(2.0 / math.sin(2.0 * theta)) * holonomy_from_period(f)
    return f, g


def cut_locus_curve(n: int, sector: Sector = POSITIVE) -> CutLocusCurve:
    """n spine samples at evenly spaced interior angles of one sector"""
    if n < 1:
        raise InvalidInputError("need at least one sample")
    theta = (np.arange(n) + 0.5) * (math.pi / 2.0) / n
    radii = np.array([cut_locus_polar(float(t)) for t in theta])
    return CutLocusCurve(sector, theta, radii[:, 0], radii[:, 1])


@lru_cache(maxsize=4)
def _spine_spline(points: int) -> interpolate.PchipInterpolator:
    """Monotone interpolant of g on [SPLINE_THETA_MIN, pi/4]; g is symmetric about pi/4"""
    logger.info("building spine spline on %d points", points)
    theta = np.linspace(SPLINE_THETA_MIN, math.pi / 4.0, points)
    g = np.array([cut_locus_polar(float(t))[1] for t in theta])
    return interpolate.PchipInterpolator(theta, g)


def spine_radius(theta: float, settings: Optional[Settings] = None, exact: bool = False) -> float:
    """g(theta) from the cached spline, exactly below SPLINE_THETA_MIN or on request"""
    settings = settings or get_settings()
    folded = min(theta, math.pi / 2.0 - theta)
    if exact or folded < SPLINE_THETA_MIN:
        return cut_locus_polar(folded)[1]
    return float(_spine_spline(settings.spline_points)(folded))


def boundary_membership(p: SolPoint) -> Membership:
    """
    Locate p against the cut locus

    Off the plane z=0 and on the axes a point lies in N. In the plane the
    radius is compared with g at the same polar angle; the spline screens
    and points near the curve are decided with the exact g.
    """
    settings = get_settings()
    if abs(p.z) > settings.plane_tol or p.x == 0.0 or p.y == 0.0:
        return Membership.IN_N
    r = math.hypot(p.x, p.y)
    theta = math.atan2(abs(p.y), abs(p.x))
    g = spine_radius(theta, settings)
    if abs(r - g) <= SPLINE_SCREEN * g:
        g = spine_radius(theta, settings, exact=True)
    if abs(r - g) <= settings.spine_tol * g:
        return Membership.ON_SPINE
    return Membership.ON_BOUNDARY if r > g else Membership.IN_N


# ==================== Wavefronts ====================

def _wavefront_rhs(state: np.ndarray) -> np.ndarray:
    """a' = 2x + za, b' = 2y - zb, x' = -xz, y' = yz, z' = x^2 - y^2"""
    a, b, x, y, z = (state[:, i] for i in range(5))
    return np.stack([2 * x + z * a, 2 * y - z * b, -x * z, y * z, x * x - y * y], axis=1)


def _project_wavefront(state: np.ndarray) -> np.ndarray:
    state[:, 2:] /= np.linalg.norm(state[:, 2:], axis=1, keepdims=True)
    return state


def wavefront(L: float, n_samples: int, dt: Optional[float] = None) -> Wavefront:
    """
    Sample Lambda_L at n_samples evenly spaced times in (0, L/2]

    Starts from the level set's p0 = (x0, y0, 0), x0 > y0, with a = b = 0.
    """
    if n_samples < 2:
        raise InvalidInputError("wavefront needs n_samples >= 2")
    level = level_set_from_period(L)
    dt = dt or get_settings().dt
    half = L / 2.0
    spacing = half / n_samples
    sub = steps_for(spacing, dt)
    h = spacing / sub

    stepper = RK4(_wavefront_rhs, _project_wavefront)
    state = np.concatenate([[0.0, 0.0], level_point(level.a)])[None, :]
    rows = []
    for _ in range(n_samples):
        for _ in range(sub):
            state = stepper.step(state, h)
        rows.append(state[0].copy())
    rows = np.array(rows)
    t = spacing * np.arange(1, n_samples + 1)
    return Wavefront(L, t, rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4])


def triangle_margin(front: Wavefront) -> np.ndarray:
    """
    Signed distance-like margin of every sample to the triangle
    (0,0), (a_l, 0), (a_l, b_l); positive strictly inside, 0 at the far vertex
    """
    a_end, b_end = front.endpoint
    below_ray = (b_end * front.a - a_end * front.b) / (a_end * b_end)
    left_of_side = (a_end - front.a) / a_end
    above_axis = front.b / b_end
    return np.minimum(np.minimum(below_ray, left_of_side), above_axis)


def psi_profile(front: Wavefront) -> pd.DataFrame:
    """psi = ab' - ba' and psi' = 2ab(y^2 - x^2) per sample"""
    da = 2 * front.x + front.z * front.a
    db = 2 * front.y - front.z * front.b
    psi = front.a * db - front.b * da
    dpsi = 2 * front.a * front.b * (front.y ** 2 - front.x ** 2)
    return pd.DataFrame({"t": front.t, "psi": psi, "dpsi": dpsi})


def triangle_avoidance(L: float, thetas: np.ndarray, n_samples: int = 64) -> bool:
    """
    Whether sampled spine points other than p = Lambda_L(L/2) avoid the
    region bounded by the x-axis, the ray through p and the hyperbola
    xy = a_p b_p; each is separated either by the ray or by the hyperbola
    """
    a_p, b_p = wavefront(L, n_samples).endpoint
    for theta in np.asarray(thetas, dtype=float):
        g = cut_locus_polar(float(theta))[1]
        qx, qy = g * math.cos(theta), g * math.sin(theta)
        if math.hypot(qx - a_p, qy - b_p) <= 1e-7 * math.hypot(a_p, b_p):
            continue
        above_ray = qy * a_p - qx * b_p > 0
        beyond_hyperbola = qx * qy > a_p * b_p
        if not (above_ray or beyond_hyperbola):
            return False
    return True


# ==================== Inverse exponential ====================

def _log_hyperbolic(p: SolPoint) -> TangentVector:
    """Closed-form log in the plane y = 0, as a geodesic circle of the upper half plane"""
    X, eta = p.x, math.exp(p.z)
    d = math.acosh(1.0 + (X * X + (eta - 1.0) ** 2) / (2.0 * eta))
    center = (X * X + eta * eta - 1.0) / (2.0 * X)
    scale = math.copysign(1.0, X) / math.hypot(1.0, center)
    return TangentVector(d * scale, 0.0, d * scale * center)


def log_map_boundary(p: SolPoint, spine: bool = False) -> Tuple[TangentVector, ...]:
    """
    Perfect preimages of a point (a, b, 0), a, b > 0, on or beyond the spine

    The direction (u_x, u_y) is parallel to (b, a), the period follows from
    the holonomy sqrt(ab), and u_x u_y is the level set's a_L^2; u_z is fixed
    by |u| = 1 up to sign, giving one spine preimage or two partners.
    With spine set the single preimage in the plane z = 0 is returned.
    """
    if p.x <= 0 or p.y <= 0:
        raise InvalidInputError("log_map_boundary needs a point with positive x and y")
    H = math.sqrt(p.x * p.y)
    L = period_from_holonomy(H)
    a_L = level_set_from_period(L).a if L > MIN_PERIOD * (1.0 + 1e-12) else HALF_SQRT2
    ux = a_L * math.sqrt(p.y / p.x)
    uy = a_L * math.sqrt(p.x / p.y)
    slack = 1.0 - ux * ux - uy * uy
    if slack < -1e-6:
        raise InvalidInputError(f"{p} is inside N and has no perfect preimage")
    uz = math.sqrt(max(slack, 0.0))
    if spine or uz <= 1e-12:
        flat = math.hypot(ux, uy)
        return (TangentVector(L * ux / flat, L * uy / flat, 0.0),)
    return TangentVector(L * ux, L * uy, L * uz), TangentVector(L * ux, L * uy, -L * uz)


# ==================== Shooting ====================

@dataclass(frozen=True)
class _SeedTable:
    """Small vectors of the positive sector indexed by their images"""
    tree: cKDTree
    vectors: np.ndarray


def _seed_coordinates(points: np.ndarray) -> np.ndarray:
    # asinh keeps far points and points near the axes on comparable scales
    return np.column_stack([np.arcsinh(points[:, 0]), np.arcsinh(points[:, 1]), points[:, 2]])


@lru_cache(maxsize=2)
def _seed_table(grid: int) -> _SeedTable:
    """
    Geodesics along a (grid, 2*grid) azimuth/elevation grid of the positive
    sector, each sampled at SEED_SAMPLES times up to its cut time or
    SEED_MAX_LENGTH, whichever comes first
    """
    logger.info("building log_map seed table on a %dx%d direction grid", grid, 2 * grid)
    azimuth = (np.arange(grid) + 0.5) * (math.pi / 2.0) / grid
    elevation = (np.arange(2 * grid) + 0.5) * math.pi / (2 * grid) - math.pi / 2.0
    A, B = np.meshgrid(azimuth, elevation, indexing="ij")
    units = np.stack([np.cos(B) * np.cos(A), np.cos(B) * np.sin(A), np.sin(B)], axis=-1).reshape(-1, 3)
    lengths = np.array([min(math.pi / mu(TangentVector.from_array(u)), SEED_MAX_LENGTH) for u in units])
    directions = units * lengths[:, None]

    history = integrate_geodesics(directions, SEED_SAMPLES, record=True)
    fractions = np.arange(1, SEED_SAMPLES + 1) / SEED_SAMPLES
    vectors = (fractions[:, None, None] * directions[None, :, :]).reshape(-1, 3)
    images = history[1:, :, :3].reshape(-1, 3)
    return _SeedTable(cKDTree(_seed_coordinates(images)), vectors)


def _seeds(targets: np.ndarray, settings: Settings) -> np.ndarray:
    """(N, SEED_CANDIDATES, 3) starting vectors, nearest image first"""
    table = _seed_table(settings.log_seed_grid)
    _, index = table.tree.query(_seed_coordinates(targets), k=SEED_CANDIDATES)
    return table.vectors[index]


def _residual_and_jacobian(V: np.ndarray, target: np.ndarray, dt: float, h: float = 1e-6):
    """Residuals (N, 3) and central-difference Jacobians (N, 3, 3) of N rows in one integration"""
    n = len(V)
    offsets = h * np.eye(3)
    rows = np.concatenate([
        V,
        (V[:, None, :] + offsets).reshape(-1, 3),
        (V[:, None, :] - offsets).reshape(-1, 3),
    ])
    images = exp_map_batch(rows, dt)
    plus = images[n:4 * n].reshape(n, 3, 3)
    minus = images[4 * n:].reshape(n, 3, 3)
    jac = np.swapaxes((plus - minus) / (2.0 * h), 1, 2)
    return images[:n] - target, jac


def _relative_error(residual: np.ndarray, target: np.ndarray) -> np.ndarray:
    scale = np.maximum(1.0, np.max(np.abs(target), axis=1))
    return np.max(np.abs(residual), axis=1) / scale


def _newton_steps(jac: np.ndarray, residual: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Pseudo-inverse Newton steps, each no longer than max(1, |V|)"""
    step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac), residual)
    limit = np.maximum(1.0, np.linalg.norm(V, axis=1))
    length = np.maximum(np.linalg.norm(step, axis=1), 1e-300)
    return step * np.minimum(1.0, limit / length)[:, None]


def _newton(guess: np.ndarray, target: np.ndarray, settings: Settings) -> Tuple[np.ndarray, np.ndarray]:
    """
    Damped Newton on V -> exp(V) - target for every row at once

    Runs at the coarse exp_dt until a row's relative residual is below
    COARSE_TOL, then at exp_dt/4 down to newton_tol. A row halves its step
    at most MAX_HALVINGS times per iteration and stops when that is not
    enough to reduce its residual.

    Returns:
        (N, 3) iterates and their (N,) relative residuals at the fine step
    """
    V = np.array(guess, dtype=float)
    err = np.full(len(V), np.inf)
    for dt, goal in ((settings.exp_dt, COARSE_TOL), (settings.exp_dt / 4.0, settings.newton_tol)):
        residual, jac = _residual_and_jacobian(V, target, dt)
        err = _relative_error(residual, target)
        active = np.flatnonzero(~(err <= goal))
        for _ in range(settings.newton_max_iter):
            if len(active) == 0:
                break
            step = _newton_steps(jac[active], residual[active], V[active])
            damping = np.ones(len(active))
            pending = np.arange(len(active))
            for _ in range(MAX_HALVINGS + 1):
                rows = active[pending]
                candidate = V[rows] + damping[pending, None] * step[pending]
                new_residual, new_jac = _residual_and_jacobian(candidate, target[rows], dt)
                new_err = _relative_error(new_residual, target[rows])
                better = new_err < err[rows]
                accepted = rows[better]
                V[accepted] = candidate[better]
                residual[accepted] = new_residual[better]
                jac[accepted] = new_jac[better]
                err[accepted] = new_err[better]
                pending = pending[~better]
                if len(pending) == 0:
                    break
                damping[pending] /= 2.0
            stalled = active[pending]
            active = np.setdiff1d(active[~(err[active] <= goal)], stalled)
    return V, err


def _large(V: np.ndarray) -> np.ndarray:
    return np.array([classify(TangentVector.from_array(row)).tag is Tag.LARGE for row in V], dtype=bool)


def _continue(target: np.ndarray, settings: Settings) -> Tuple[np.ndarray, float]:
    """Newton along s*target, s = 1/steps, ..., 1, each stage seeded by the rescaled previous one"""
    steps = settings.continuation_steps
    V = target / steps
    err = math.inf
    for k in range(1, steps + 1):
        if k > 1:
            V = V * (k / (k - 1))
        found, found_err = _newton(V[None, :], (target * (k / steps))[None, :], settings)
        V, err = found[0], float(found_err[0])
        if err > COARSE_TOL:
            raise ConvergenceError(
                f"continuation stalled at s={k / steps:.3f} for {target}",
                best=TangentVector.from_array(V), residual=err,
            )
    if err > ACCEPT_TOL or _large(V[None, :])[0]:
        raise ConvergenceError(f"log_map did not converge for {target}", best=TangentVector.from_array(V), residual=err)
    return V, err


def _shoot(targets: np.ndarray, settings: Settings) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve exp(V) = target for (N, 3) targets in the positive sector

    Newton starts from the nearest seed table entries in turn; a row keeps
    its best non-large solution. Rows no seed brings below ACCEPT_TOL are
    solved by continuation along s*target.
    """
    seeds = _seeds(targets, settings)
    V = np.zeros_like(targets)
    err = np.full(len(targets), np.inf)
    open_rows = np.arange(len(targets))
    for k in range(seeds.shape[1]):
        if len(open_rows) == 0:
            break
        found, found_err = _newton(seeds[open_rows, k], targets[open_rows], settings)
        usable = (found_err < err[open_rows]) & ~_large(found)
        rows = open_rows[usable]
        V[rows], err[rows] = found[usable], found_err[usable]
        open_rows = open_rows[~(err[open_rows] <= settings.newton_tol)]

    for row in open_rows[~(err[open_rows] <= ACCEPT_TOL)]:
        logger.info("seeded shooting failed for %s (residual %.3e), continuing along s*p", targets[row], err[row])
        V[row], err[row] = _continue(targets[row], settings)
    return V, err


def _polish(V: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, float]:
    """A few Newton corrections against the adaptive exp_map"""
    settings = get_settings()
    _, jac = _residual_and_jacobian(V[None, :], target[None, :], settings.exp_dt / 4.0)
    err = math.inf
    for attempt in range(4):
        residual = exp_map(TangentVector.from_array(V)).as_array() - target
        err = float(_relative_error(residual[None, :], target[None, :])[0])
        if err <= settings.newton_tol or attempt == 3:
            break
        V = V + _newton_steps(jac, residual[None, :], V[None, :])[0]
    return V, err


# ==================== Log map ====================

def _log_closed_form(p: SolPoint, membership: Membership) -> Optional[Tuple[TangentVector, ...]]:
    """Preimages of p with x, y >= 0 that need no shooting, else None"""
    if p.x == 0.0 and p.y == 0.0:
        return (TangentVector(0.0, 0.0, p.z),)
    if p.y == 0.0:
        return (_log_hyperbolic(p),)
    if p.x == 0.0:
        return (apply_symmetry(SWAP, _log_hyperbolic(apply_symmetry(SWAP, p))),)
    if membership is not Membership.IN_N:
        return log_map_boundary(SolPoint(p.x, p.y, 0.0), spine=membership is Membership.ON_SPINE)
    if p.z == 0.0 and p.x == p.y:
        return (TangentVector(p.x, p.y, 0.0),)
    return None


def _log_positive(p: SolPoint, membership: Membership) -> Tuple[Tuple[TangentVector, ...], float]:
    """log_map for p with x, y >= 0"""
    closed = _log_closed_form(p, membership)
    if closed is not None:
        return closed, 0.0

    target = p.as_array()
    V, _ = _shoot(target[None, :], get_settings())
    V, err = _polish(V[0], target)
    if err > ACCEPT_TOL:
        raise ConvergenceError(f"log_map residual too large for {p}", best=TangentVector.from_array(V), residual=err)
    return (TangentVector.from_array(V),), err


def log_map(p: SolPoint) -> LogResult:
    """
    Inverse of exp_map on N and on the boundary region

    Returns the unique non-large preimage for p in N, the single perfect
    preimage on the spine, and both partner preimages beyond it.
    """
    positive, sector = to_positive_sector(p)
    membership = boundary_membership(positive)
    solutions, residual = _log_positive(positive, membership)
    return LogResult(
        solutions=tuple(apply_symmetry(sector, V) for V in solutions),
        membership=membership,
        residual=residual,
    )


def log_map_batch(points: np.ndarray) -> np.ndarray:
    """
    One minimizing preimage for every row of an (N, 3) array of points

    Rows that need shooting are solved together, one integration per
    Newton stage for all of them; beyond the spine the first partner is
    returned. Residuals are held against the fixed exp_dt/4 integrator
    instead of the adaptive exp_map.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    signs = np.where(points[:, :2] < 0.0, -1.0, 1.0)
    positive = points.copy()
    positive[:, :2] *= signs

    out = np.zeros_like(positive)
    pending = []
    for i, row in enumerate(positive):
        p = SolPoint.from_array(row)
        closed = _log_closed_form(p, boundary_membership(p))
        if closed is None:
            pending.append(i)
        else:
            out[i] = closed[0].as_array()

    if pending:
        rows = np.array(pending)
        V, err = _shoot(positive[rows], get_settings())
        worst = int(np.argmax(err))
        if not err[worst] <= ACCEPT_TOL:
            raise ConvergenceError(
                f"log_map_batch left {int(np.sum(~(err <= ACCEPT_TOL)))} of {len(rows)} rows unsolved",
                best=TangentVector.from_array(V[worst]), residual=float(err[worst]),
            )
        logger.debug("log_map_batch solved %d rows, worst residual %.3e", len(rows), err[worst])
        out[rows] = V

    out[:, :2] *= signs
    return out


def distance(p: SolPoint, q: SolPoint) -> float:
    """Length of a minimizing geodesic from p to q"""
    return log_map(multiply(inverse(p), q)).vector.norm()


def distance_batch(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise distances between (N, 3) arrays; a single row broadcasts"""
    p, q = np.broadcast_arrays(np.atleast_2d(np.asarray(p, dtype=float)), np.atleast_2d(np.asarray(q, dtype=float)))
    check_exponents(p[:, 2])
    relative = np.column_stack([
        np.exp(-p[:, 2]) * (q[:, 0] - p[:, 0]),
        np.exp(p[:, 2]) * (q[:, 1] - p[:, 1]),
        q[:, 2] - p[:, 2],
    ])
    return np.linalg.norm(log_map_batch(relative), axis=1)
