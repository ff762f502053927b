# ==================== mesh_io.py ====================
"""
Mesh files for SphereMesh: OBJ, PLY (ascii) and CSV
Floats are written with 17 significant digits so positions survive a reparse exactly
"""

import io
import logging
import math
import os
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from tools.sphere_mesh import SphereMesh, VertexTag
from utils.errors import InvalidInputError

logger = logging.getLogger(__name__)

FORMATS = ("obj", "ply", "csv")
TAG_CODES = {VertexTag.SMOOTH.value: 0, VertexTag.SINGULAR.value: 1, VertexTag.CUSP.value: 2}
CODE_TAGS = {code: tag for tag, code in TAG_CODES.items()}
FACE_MARKER = "# faces"


def _num(value: float) -> str:
    return format(float(value), ".17g")


def _header_radius(L: float) -> str:
    return f"solgeo sphere L={_num(L)}"


# ==================== Writers ====================

def _obj_text(mesh: SphereMesh) -> str:
    lines = [f"# {_header_radius(mesh.L)}"]
    current = None
    for (x, y, z), tag in zip(mesh.vertices, mesh.tags):
        if tag != current:
            lines.append(f"g {tag}")
            current = tag
        lines.append(f"v {_num(x)} {_num(y)} {_num(z)}")
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    return "\n".join(lines) + "\n"


def _ply_text(mesh: SphereMesh) -> str:
    lines = [
        "ply",
        "format ascii 1.0",
        f"comment {_header_radius(mesh.L)}",
        f"element vertex {len(mesh.vertices)}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar tag",
        f"element face {len(mesh.faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for (x, y, z), tag in zip(mesh.vertices, mesh.tags):
        lines.append(f"{_num(x)} {_num(y)} {_num(z)} {TAG_CODES[str(tag)]}")
    for a, b, c in mesh.faces:
        lines.append(f"3 {a} {b} {c}")
    return "\n".join(lines) + "\n"


def _csv_text(mesh: SphereMesh) -> str:
    buffer = io.StringIO()
    vertices = pd.DataFrame(np.asarray(mesh.vertices, dtype=float).reshape(-1, 3), columns=["x", "y", "z"])
    vertices["tag"] = np.asarray(mesh.tags, dtype=str)
    vertices.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
    buffer.write(FACE_MARKER + "\n")
    faces = pd.DataFrame(np.asarray(mesh.faces, dtype=int).reshape(-1, 3), columns=["i", "j", "k"])
    faces.to_csv(buffer, index=False, header=False, lineterminator="\n")
    return buffer.getvalue()


WRITERS = {"obj": _obj_text, "ply": _ply_text, "csv": _csv_text}


def export_mesh(mesh: SphereMesh, fmt: str, path: str) -> str:
    """
    Write mesh to path in OBJ, PLY or CSV

    Returns:
        The path written
    """
    fmt = fmt.lower()
    if fmt not in WRITERS:
        raise InvalidInputError(f"unknown mesh format {fmt!r}, expected one of {', '.join(FORMATS)}")
    text = WRITERS[fmt](mesh)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as e:
        raise InvalidInputError(f"cannot write mesh to {path}: {e}") from e
    logger.info("wrote %s mesh with %d vertices to %s", fmt, len(mesh.vertices), path)
    return path


# ==================== Readers ====================

def _radius_from(comment: str) -> float:
    marker = "L="
    if marker not in comment:
        return math.nan
    return float(comment.split(marker, 1)[1].split()[0])


def _read_obj(text: str) -> SphereMesh:
    L = math.nan
    tag = VertexTag.SMOOTH.value
    vertices: List[Tuple[float, float, float]] = []
    tags: List[str] = []
    faces: List[Tuple[int, int, int]] = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "#":
            L = _radius_from(line) if math.isnan(L) else L
        elif parts[0] == "g":
            tag = parts[1]
        elif parts[0] == "v":
            vertices.append(tuple(float(p) for p in parts[1:4]))
            tags.append(tag)
        elif parts[0] == "f":
            faces.append(tuple(int(p.split("/")[0]) - 1 for p in parts[1:4]))
    return _assemble(L, vertices, tags, faces)


def _read_ply(text: str) -> SphereMesh:
    lines = text.splitlines()
    L = math.nan
    n_vertices = n_faces = 0
    body = 0
    for number, line in enumerate(lines):
        parts = line.split()
        if parts[:1] == ["comment"]:
            L = _radius_from(line)
        elif parts[:2] == ["element", "vertex"]:
            n_vertices = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            n_faces = int(parts[2])
        elif parts[:1] == ["end_header"]:
            body = number + 1
            break
    vertices, tags, faces = [], [], []
    for line in lines[body: body + n_vertices]:
        x, y, z, code = line.split()
        vertices.append((float(x), float(y), float(z)))
        tags.append(CODE_TAGS[int(code)])
    for line in lines[body + n_vertices: body + n_vertices + n_faces]:
        parts = line.split()
        faces.append(tuple(int(p) for p in parts[1:4]))
    return _assemble(L, vertices, tags, faces)


def _read_csv(text: str) -> SphereMesh:
    head, _, tail = text.partition(FACE_MARKER + "\n")
    vertices = pd.read_csv(io.StringIO(head), float_precision="round_trip", dtype={"tag": str})
    if tail.strip():
        faces = pd.read_csv(io.StringIO(tail), header=None, names=["i", "j", "k"]).to_numpy(dtype=int)
    else:
        faces = np.zeros((0, 3), dtype=int)
    return SphereMesh(
        L=math.nan,
        vertices=vertices[["x", "y", "z"]].to_numpy(dtype=float).reshape(-1, 3),
        tags=vertices["tag"].to_numpy(dtype=str),
        faces=faces,
    )


def _assemble(L, vertices, tags, faces) -> SphereMesh:
    return SphereMesh(
        L=L,
        vertices=np.array(vertices, dtype=float).reshape(-1, 3),
        tags=np.array(tags, dtype=str),
        faces=np.array(faces, dtype=int).reshape(-1, 3),
    )


READERS = {"obj": _read_obj, "ply": _read_ply, "csv": _read_csv}


def read_mesh(path: str, fmt: Optional[str] = None) -> SphereMesh:
    """Parse a file written by export_mesh; the format defaults to the file extension"""
    fmt = (fmt or os.path.splitext(path)[1].lstrip(".")).lower()
    if fmt not in READERS:
        raise InvalidInputError(f"cannot infer mesh format of {path}")
    with open(path, encoding="utf-8") as handle:
        return READERS[fmt](handle.read())
