# ==================== sphere_mesh.py ====================
"""
Metric spheres S_L of Sol as closed triangle meshes

Each sector of the unit sphere of the Lie algebra is charted by a disk
(r, omega) on which xy = (1 - r^2)/2, so every loop level set is a ring.
For L > pi*sqrt(2) the large vectors form the disk r < r_L; the remaining
annulus is pushed forward by exp_map and its inner ring is folded onto
itself by the partner map omega -> -omega.
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Hashable, List, Optional, Tuple

import numpy as np

from utils.config import get_settings
from utils.errors import InvalidInputError, MeshResolutionError
from utils.flow import exp_map_batch
from utils.sol_core import SECTORS, Sector, SolPoint
from utils.specfun import MIN_PERIOD, level_set_from_period

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 8
CUSP_RTOL = 1e-12
FOLD_TOL = 1e-6


class VertexTag(str, Enum):
    SMOOTH = "smooth"
    SINGULAR = "singular"
    CUSP = "cusp"


# ==================== Data Models ====================

@dataclass
class SphereMesh:
    """
    Triangulated metric sphere

    vertices: (N, 3) positions in Sol
    tags: (N,) VertexTag values
    faces: (M, 3) vertex indices, 0-based
    singular_arcs: ordered vertex chains of the folded boundaries
    """
    L: float
    vertices: np.ndarray
    tags: np.ndarray
    faces: np.ndarray
    singular_arcs: List[np.ndarray] = field(default_factory=list)

    @property
    def points(self):
        for row, tag in zip(self.vertices, self.tags):
            yield SolPoint.from_array(row), VertexTag(tag)

    def count(self, tag: VertexTag) -> int:
        return int(np.sum(self.tags == tag.value))


@dataclass(frozen=True)
class ChartPatch:
    """
    One sector of S''_L in chart coordinates

    vectors[j, k] is L*u at radius r[j] and angle omega[k]; ring 0 is the
    hole boundary, paired with itself by partner_index (omega -> -omega).
    """
    sector: Sector
    r: np.ndarray
    omega: np.ndarray
    vectors: np.ndarray
    partner_index: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return self.vectors[0]


# ==================== Chart ====================

def _angles(n: int) -> np.ndarray:
    return -math.pi + 2.0 * math.pi * np.arange(n) / n


def chart_units(r: np.ndarray, n: int) -> np.ndarray:
    """
    Unit vectors of the positive sector on an (len(r), n) grid

    w = (r/sqrt2) cos(omega), z = r sin(omega), v = sqrt(1 - r^2 + r^2 cos^2(omega)/2),
    x = (v + w)/sqrt2, y = (v - w)/sqrt2. The ring r = 1 is set exactly so
    that its points lie on the planes x = 0 and y = 0.
    """
    omega = _angles(n)
    R, W = np.meshgrid(np.asarray(r, dtype=float), omega, indexing="ij")
    cos_w, sin_w = np.cos(W), np.sin(W)
    w = R * cos_w / math.sqrt(2.0)
    v = np.sqrt(np.maximum(1.0 - R * R + R * R * cos_w * cos_w / 2.0, 0.0))
    units = np.stack([(v + w) / math.sqrt(2.0), (v - w) / math.sqrt(2.0), R * sin_w], axis=-1)

    outer = R[:, 0] == 1.0
    if outer.any():
        ring = np.stack([np.maximum(np.cos(omega), 0.0), np.maximum(-np.cos(omega), 0.0), np.sin(omega)], axis=-1)
        ring[n // 4] = (0.0, 0.0, -1.0)
        ring[3 * n // 4] = (0.0, 0.0, 1.0)
        units[outer] = ring
    return units


def _swap_rows(values: np.ndarray) -> np.ndarray:
    return np.stack([values[..., 1], values[..., 0], -values[..., 2]], axis=-1)


def _mirror(n: int) -> np.ndarray:
    """Index of -omega for every omega on the grid"""
    return (n - np.arange(n)) % n


def _canonical(k: int, n: int) -> int:
    """Representative of {k, mirror(k)} with omega >= 0, or omega = -pi"""
    return k if k == 0 or k >= n // 2 else n - k


def _symmetric_fill(half: np.ndarray, n: int) -> np.ndarray:
    """
    Complete an (rings, n, 3) array whose columns n/4..3n/4 are set

    The swap isometry maps the column of omega to that of omega + pi.
    """
    full = half.copy()
    columns = np.arange(n)
    other = (columns < n // 4) | (columns > 3 * n // 4)
    full[:, other] = _swap_rows(half[:, (columns[other] + n // 2) % n])
    return full


def _grid_sizes(resolution: int) -> Tuple[int, int]:
    n_omega = 2 * resolution
    n_omega += (-n_omega) % 4
    return resolution, n_omega


def _hole_radius(L: float) -> float:
    level = level_set_from_period(L)
    return math.sqrt(max(1.0 - 2.0 * level.a * level.a, 0.0))


def _check(L: float, resolution: int) -> None:
    if not L > 0:
        raise InvalidInputError(f"sphere radius must be positive, got {L!r}")
    if resolution < MIN_RESOLUTION:
        raise MeshResolutionError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")


def _annulus_units(L: float, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rings from the hole boundary r_L out to r = 1 and their unit vectors"""
    n_r, n = _grid_sizes(resolution)
    r_hole = _hole_radius(L)
    if (1.0 - r_hole) * resolution < 1.0:
        raise MeshResolutionError(
            f"resolution {resolution} cannot resolve the holes at L={L}; "
            f"need at least {math.ceil(1.0 / (1.0 - r_hole))}"
        )
    r = r_hole + (1.0 - r_hole) * np.arange(n_r + 1) / n_r
    r[-1] = 1.0
    return r, _symmetric_fill(chart_units(r, n), n)


def clip_lie_sphere(L: float, resolution: int) -> List[ChartPatch]:
    """
    The 4-holed sphere S''_L = L*S' cut down to small and perfect vectors

    Returns one patch per sector; the inner ring of each is the loop level
    set of period L scaled by L, sampled so that partners share a column pair.
    """
    _check(L, resolution)
    if not L > MIN_PERIOD * (1.0 + CUSP_RTOL):
        raise InvalidInputError(f"clip_lie_sphere needs L > pi*sqrt(2), got {L!r}")
    _, n = _grid_sizes(resolution)
    r, units = _annulus_units(L, resolution)
    patches = []
    for sector in SECTORS:
        signs = np.array([sector.sign_x, sector.sign_y, 1.0])
        patches.append(ChartPatch(sector, r, _angles(n), L * units * signs, _mirror(n)))
    return patches


# ==================== Assembly ====================

class _VertexTable:
    """Deduplicates vertices shared between sectors by a structural label"""

    def __init__(self):
        self.index: Dict[Hashable, int] = {}
        self.positions: List[np.ndarray] = []
        self.tags: List[str] = []

    def add(self, label: Hashable, position: np.ndarray, tag: VertexTag) -> int:
        found = self.index.get(label)
        if found is not None:
            return found
        self.index[label] = len(self.positions)
        self.positions.append(position)
        self.tags.append(tag.value)
        return self.index[label]


def _outer_label(sector: Sector, k: int, n: int) -> Hashable:
    if k == n // 4:
        return ("pole", -1)
    if k == 3 * n // 4:
        return ("pole", 1)
    if k < n // 4 or k > 3 * n // 4:
        # x = 0 half circle, shared by the sectors with the same sign of y
        return ("x0", sector.sign_y, k)
    return ("y0", sector.sign_x, k)


def fold_gap(ring: np.ndarray) -> np.ndarray:
    """Distance between the two images of every partner pair of an unfolded inner ring"""
    return np.linalg.norm(ring - ring[_mirror(len(ring))], axis=1)


def inner_ring(L: float, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hole boundary of the positive sector before folding

    Returns:
        (n, 3) perfect vectors of period L and their (n, 3) images
    """
    vectors = clip_lie_sphere(L, resolution)[0].boundary
    return vectors, exp_map_batch(vectors, get_settings().mesh_dt)


def _fold_inner_ring(ring: np.ndarray, n: int) -> np.ndarray:
    """Average each partner pair so both members land on one position"""
    return 0.5 * (ring + ring[_mirror(n)])


def build_sphere(L: float, resolution: Optional[int] = None) -> SphereMesh:
    """
    Triangulate the metric sphere of radius L about the identity

    L < pi*sqrt(2): the whole unit sphere is pushed forward, one disk per
    sector with a smooth center. L = pi*sqrt(2): the centers map to the four
    points (+-pi, +-pi, 0) and are tagged Cusp. L > pi*sqrt(2): the four
    annuli of S''_L are pushed forward and their inner rings folded 2-to-1
    into singular arcs.
    """
    settings = get_settings()
    resolution = resolution or settings.default_resolution
    _check(L, resolution)
    n_r, n = _grid_sizes(resolution)

    holed = L > MIN_PERIOD * (1.0 + CUSP_RTOL)
    cusp = not holed and abs(L - MIN_PERIOD) <= CUSP_RTOL * MIN_PERIOD

    if holed:
        r, units = _annulus_units(L, resolution)
    else:
        r = np.arange(1, n_r + 1) / n_r
        units = _symmetric_fill(chart_units(r, n), n)

    # push forward the half of the positive sector, the rest follows by symmetry
    half_cols = slice(n // 4, 3 * n // 4 + 1)
    vectors = L * units[:, half_cols].reshape(-1, 3)
    center_vector = np.full((1, 3), L * math.sqrt(2.0) / 2.0)
    center_vector[0, 2] = 0.0
    if not holed:
        vectors = np.vstack([vectors, center_vector])
    logger.info("pushing %d vectors forward for L=%.6g", len(vectors), L)
    images = exp_map_batch(vectors, settings.mesh_dt)

    rings = len(r)
    positions = np.zeros((rings, n, 3))
    positions[:, half_cols] = images[: rings * (half_cols.stop - half_cols.start)].reshape(rings, -1, 3)
    positions = _symmetric_fill(positions, n)
    center = images[-1] if not holed else None
    if holed:
        gap = float(np.max(fold_gap(positions[0])))
        if gap > FOLD_TOL:
            logger.warning("partner images on the fold of L=%.6g differ by %.3e", L, gap)
        positions[0] = _fold_inner_ring(positions[0], n)

    table = _VertexTable()
    faces: List[Tuple[int, int, int]] = []
    arcs: List[np.ndarray] = []
    for sector in SECTORS:
        signs = np.array([sector.sign_x, sector.sign_y, 1.0])
        flip = sector.sign_x * sector.sign_y < 0
        index = np.empty((rings, n), dtype=int)
        for j in range(rings):
            for k in range(n):
                if j == rings - 1:
                    label = _outer_label(sector, k, n)
                    tag = VertexTag.SMOOTH
                elif holed and j == 0:
                    label = ("in", sector, _canonical(k, n))
                    tag = VertexTag.SINGULAR
                else:
                    label = ("grid", sector, j, k)
                    tag = VertexTag.SMOOTH
                source = positions[j, _canonical(k, n)] if holed and j == 0 else positions[j, k]
                index[j, k] = table.add(label, source * signs, tag)

        def emit(a: int, b: int, c: int) -> None:
            faces.append((a, c, b) if flip else (a, b, c))

        if not holed:
            hub = table.add(("center", sector), center * signs, VertexTag.CUSP if cusp else VertexTag.SMOOTH)
            for k in range(n):
                emit(hub, index[0, k], index[0, (k + 1) % n])
        for j in range(rings - 1):
            for k in range(n):
                k1 = (k + 1) % n
                emit(index[j, k], index[j, k1], index[j + 1, k1])
                emit(index[j, k], index[j + 1, k1], index[j + 1, k])

        if holed:
            chain = [n // 2] + list(range(n // 2 + 1, n)) + [0]
            arcs.append(np.array([index[0, k] for k in chain]))

    mesh = SphereMesh(
        L=L,
        vertices=np.array(table.positions),
        tags=np.array(table.tags),
        faces=np.array(faces, dtype=int),
        singular_arcs=arcs,
    )
    logger.info("sphere L=%.6g: %d vertices, %d faces, chi=%d",
                L, len(mesh.vertices), len(mesh.faces), euler_characteristic(mesh))
    return mesh


# ==================== Topology ====================

def edge_face_counts(faces: np.ndarray) -> Dict[Tuple[int, int], int]:
    counts: Dict[Tuple[int, int], int] = {}
    for a, b, c in np.asarray(faces, dtype=int):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
    return counts


def euler_characteristic(mesh: SphereMesh) -> int:
    """V - E + F over the vertices actually used by faces"""
    if len(mesh.faces) == 0:
        return len(mesh.vertices)
    edges = edge_face_counts(mesh.faces)
    used = np.unique(mesh.faces)
    return int(len(used) - len(edges) + len(mesh.faces))


def is_closed(mesh: SphereMesh) -> bool:
    """Every edge borders exactly two faces and no face is degenerate"""
    faces = np.asarray(mesh.faces, dtype=int)
    if len(faces) == 0:
        return False
    degenerate = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    if degenerate.any():
        return False
    return all(count == 2 for count in edge_face_counts(faces).values())
