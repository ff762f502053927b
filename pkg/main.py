# ==================== main.py ====================
"""
FastAPI application for solgeo
HTTP endpoints over the geodesic, cut-locus and sphere toolkit
"""

import os
import logging
from datetime import datetime
from typing import List, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from dotenv import load_dotenv

from tools.sphere_mesh import VertexTag, build_sphere, euler_characteristic, is_closed
from utils.config import get_settings
from utils.cutlocus import (
    classify,
    cut_locus_curve,
    cut_time,
    distance,
    log_map,
    psi_profile,
    triangle_margin,
    wavefront,
)
from utils.errors import ConvergenceError, InvalidInputError, SolRangeError
from utils.flow import exp_map
from utils.sol_core import SolPoint, TangentVector
from utils.specfun import level_set, level_set_from_period

load_dotenv()

logger = logging.getLogger("solgeo.service")

VERSION = "1.0.0"

# ==================== Request/Response Models ====================

class VectorInput(BaseModel):
    """A Lie-algebra vector"""
    x: float
    y: float
    z: float
    dt: Optional[float] = Field(default=None, gt=0, description="Initial RK4 step of exp_map")

class PointInput(BaseModel):
    """A point of Sol"""
    x: float
    y: float
    z: float

class PointResponse(BaseModel):
    x: float
    y: float
    z: float

class ClassifyInput(BaseModel):
    x: float
    y: float
    z: float
    tol_perfect: Optional[float] = Field(default=None, gt=0)

class ClassifyResponse(BaseModel):
    """Small, Perfect or Large with mu and the cut time of the direction"""
    tag: str
    mu: float
    margin: float
    cut_time: Optional[float] = None

class LogResponse(BaseModel):
    solutions: List[PointResponse]
    membership: str
    residual: float

class DistanceInput(BaseModel):
    p: PointInput
    q: PointInput

class DistanceResponse(BaseModel):
    distance: float

class LevelSetResponse(BaseModel):
    a: float
    L: float
    m: float
    H: float

class CutLocusRow(BaseModel):
    theta: float
    f: float
    g: float
    x: float
    y: float

class WavefrontRow(BaseModel):
    t: float
    a: float
    b: float
    psi: float
    dpsi: float
    margin: float

class WavefrontResponse(BaseModel):
    L: float
    samples: List[WavefrontRow]
    triangle: List[List[float]]

class SphereInput(BaseModel):
    L: float = Field(gt=0)
    resolution: Optional[int] = Field(default=None, ge=8)

class SphereSummary(BaseModel):
    """Counts and checks of a sphere mesh; the mesh itself is written by the CLI"""
    L: float
    vertices: int
    faces: int
    singular_vertices: int
    cusp_vertices: int
    singular_arcs: int
    euler_characteristic: int
    closed: bool

# ==================== Initialize FastAPI App ====================

app = FastAPI(
    title="solgeo API",
    description="Geodesics, cut locus and metric spheres of the Lie group Sol",
    version=VERSION
)

# CORS Configuration
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _http_error(action: str, e: Exception) -> HTTPException:
    """Map library errors to status codes: bad input 400, numerics 422, rest 500"""
    if isinstance(e, InvalidInputError):
        status = 400
    elif isinstance(e, (ConvergenceError, SolRangeError)):
        status = 422
    else:
        logger.exception("unexpected failure while %s", action)
        status = 500
    return HTTPException(status_code=status, detail=f"Error {action}: {str(e)}")


def _point(p: SolPoint) -> PointResponse:
    return PointResponse(x=p.x, y=p.y, z=p.z)


# ==================== API Endpoints ====================

@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "service": "solgeo API",
        "version": VERSION,
        "status": "operational",
        "endpoints": {
            "health": "/api/health",
            "geodesics": ["/api/exp", "/api/classify", "/api/log", "/api/distance"],
            "level_sets": ["/api/period", "/api/holonomy"],
            "cut_locus": ["/api/cutlocus", "/api/wavefront"],
            "spheres": "/api/sphere/summary"
        }
    }

@app.get("/api/health")
async def health_check():
    """System health check"""
    settings = get_settings()
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "settings": {"dt": settings.dt, "exp_dt": settings.exp_dt, "tol_perfect": settings.tol_perfect}
    }


# ==================== Geodesic Endpoints ====================

@app.post("/api/exp", response_model=PointResponse)
def exponential(request: VectorInput):
    """Endpoint of the geodesic from the identity with initial velocity (x, y, z)"""
    try:
        V = TangentVector(request.x, request.y, request.z)
        return _point(exp_map(V, request.dt))
    except Exception as e:
        raise _http_error("computing exp", e)

@app.post("/api/classify", response_model=ClassifyResponse)
def classify_vector(request: ClassifyInput):
    try:
        V = TangentVector(request.x, request.y, request.z)
        result = classify(V, request.tol_perfect)
        cut = cut_time(V.unit()) if V.norm() > 0 else None
        return ClassifyResponse(
            tag=result.tag.value,
            mu=result.mu,
            margin=result.margin,
            cut_time=cut if cut is not None and cut != float("inf") else None
        )
    except Exception as e:
        raise _http_error("classifying vector", e)

@app.post("/api/log", response_model=LogResponse)
def logarithm(request: PointInput):
    """Minimizing preimages of a point; two partners on the boundary region"""
    try:
        result = log_map(SolPoint(request.x, request.y, request.z))
        return LogResponse(
            solutions=[PointResponse(x=V.x, y=V.y, z=V.z) for V in result.solutions],
            membership=result.membership.value,
            residual=result.residual
        )
    except Exception as e:
        raise _http_error("computing log", e)

@app.post("/api/distance", response_model=DistanceResponse)
def point_distance(request: DistanceInput):
    try:
        p = SolPoint(request.p.x, request.p.y, request.p.z)
        q = SolPoint(request.q.x, request.q.y, request.q.z)
        return DistanceResponse(distance=distance(p, q))
    except Exception as e:
        raise _http_error("computing distance", e)


# ==================== Level Set Endpoints ====================

@app.get("/api/period", response_model=LevelSetResponse)
def period(a: Optional[float] = None, L: Optional[float] = None):
    """Level set record from its diagonal parameter a or from its period L"""
    try:
        if (a is None) == (L is None):
            raise InvalidInputError("pass exactly one of a or L")
        level = level_set(a) if a is not None else level_set_from_period(L)
        return LevelSetResponse(**level.model_dump())
    except Exception as e:
        raise _http_error("computing period", e)

@app.get("/api/holonomy", response_model=LevelSetResponse)
def holonomy(L: float):
    try:
        return LevelSetResponse(**level_set_from_period(L).model_dump())
    except Exception as e:
        raise _http_error("computing holonomy", e)


# ==================== Cut Locus Endpoints ====================

@app.get("/api/cutlocus", response_model=List[CutLocusRow])
def cut_locus(thetas: int = Query(default=64, ge=1, le=4096)):
    """Spine samples of the positive sector"""
    try:
        frame = cut_locus_curve(thetas).to_frame()
        return [CutLocusRow(**row) for row in frame.to_dict(orient="records")]
    except Exception as e:
        raise _http_error("sampling cut locus", e)

@app.get("/api/wavefront", response_model=WavefrontResponse)
def wavefront_samples(L: float, n: int = Query(default=64, ge=2, le=4096)):
    try:
        front = wavefront(L, n)
        profile = psi_profile(front)
        margin = triangle_margin(front)
        a_end, b_end = front.endpoint
        samples = [
            WavefrontRow(t=t, a=a, b=b, psi=psi, dpsi=dpsi, margin=m)
            for t, a, b, psi, dpsi, m in zip(
                front.t, front.a, front.b, profile["psi"], profile["dpsi"], margin
            )
        ]
        return WavefrontResponse(L=L, samples=samples, triangle=[[0.0, 0.0], [a_end, 0.0], [a_end, b_end]])
    except Exception as e:
        raise _http_error("sampling wavefront", e)


# ==================== Sphere Endpoints ====================

@app.post("/api/sphere/summary", response_model=SphereSummary)
def sphere_summary(request: SphereInput):
    try:
        mesh = build_sphere(request.L, request.resolution)
        return SphereSummary(
            L=request.L,
            vertices=len(mesh.vertices),
            faces=len(mesh.faces),
            singular_vertices=mesh.count(VertexTag.SINGULAR),
            cusp_vertices=mesh.count(VertexTag.CUSP),
            singular_arcs=len(mesh.singular_arcs),
            euler_characteristic=euler_characteristic(mesh),
            closed=is_closed(mesh)
        )
    except Exception as e:
        raise _http_error("building sphere", e)


# ==================== Startup/Shutdown Events ====================

@app.on_event("startup")
async def startup_event():
    """Log the active settings on startup"""
    settings = get_settings()
    logging.basicConfig(level=settings.log_level)
    logger.info("=" * 50)
    logger.info("solgeo API starting, version %s", VERSION)
    logger.info("dt=%g exp_dt=%g mesh_dt=%g tol_perfect=%g",
                settings.dt, settings.exp_dt, settings.mesh_dt, settings.tol_perfect)
    logger.info("=" * 50)


# ==================== Run Application ====================

if __name__ == "__main__":
    import uvicorn

    port = int(os.getenv("PORT", 8000))
    host = os.getenv("HOST", "0.0.0.0")

    logger.info("Starting solgeo API on %s:%d", host, port)

    uvicorn.run(
        "main:app",
        host=host,
        port=port,
        reload=False,
        log_level="info"
    )
