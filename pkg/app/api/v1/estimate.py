"""
Calibration bundle API
- bundle summary
- batch estimation over a short pressure stream
"""
from datetime import datetime

from fastapi import APIRouter
from pydantic import BaseModel, Field

from app.api.util import BundleDep
from app.core.model import DegreeTrial, Envelope, PressureFrame

router = APIRouter(tags=["estimate"])


# ============== Pydantic Schemas ==============


class BundleSummary(BaseModel):
    degree: int
    per_model_degree: bool
    degree_selection: str
    envelope: Envelope
    rho_ref: float
    q_min: float
    created_at: datetime
    tool_version: str
    degree_trace: list[DegreeTrial]


class EstimateRequest(BaseModel):
    frames: list[PressureFrame] = Field(min_length=1)
    fs: float = Field(gt=0)
    fc: float | None = None


class EstimateOut(BaseModel):
    t: float
    q: float
    airspeed: float | None
    aoa: float | None
    aos: float | None
    calibrated: bool
    gap: bool


@router.get("/bundle")
async def bundle_summary(bundle_service: BundleDep) -> BundleSummary:
    bundle = bundle_service.get()
    return BundleSummary(
        degree=bundle.degree,
        per_model_degree=bundle.metadata.per_model_degree,
        degree_selection=bundle.metadata.degree_selection,
        envelope=bundle.envelope,
        rho_ref=bundle.rho_ref,
        q_min=bundle.q_min,
        created_at=bundle.metadata.created_at,
        tool_version=bundle.metadata.tool_version,
        degree_trace=list(bundle.metadata.degree_trace),
    )


@router.post("/estimate")
async def estimate(body: EstimateRequest, bundle_service: BundleDep) -> list[EstimateOut]:
    estimator = bundle_service.estimator(None, body.fs, body.fc)
    results = []
    for frame in body.frames:
        out = estimator.push(frame)
        state = out.state
        results.append(
            EstimateOut(
                t=out.t,
                q=out.q,
                airspeed=state.airspeed if state else None,
                aoa=state.aoa if state else None,
                aos=state.aos if state else None,
                calibrated=state.calibrated if state else False,
                gap=out.gap,
            )
        )
    return results
