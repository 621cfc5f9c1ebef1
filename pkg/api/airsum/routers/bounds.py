import logging
import math
from typing import Any, Dict, Literal

from fastapi import APIRouter, HTTPException, Query

from .. import bounds
from ..schemas import AwgnBoundInput, AwgnBoundReport, ConvergenceInput, FadingBoundInput, LatencyInput

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/bounds",
    tags=["Bounds"],
)


def _json_safe(values: Dict[str, Any]) -> Dict[str, Any]:
    """Infinite or undefined floats become null; JSON has no encoding for them."""
    return {
        key: None if isinstance(value, float) and not math.isfinite(value) else value
        for key, value in values.items()
    }


@router.post("/awgn", response_model=AwgnBoundReport)
async def awgn_bound(inp: AwgnBoundInput):
    """Gradient MSE over the reduced-noise channel: channel term, quantization term and total."""
    try:
        return bounds.mse_awgn_bound(inp)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/fading")
async def fading_bound(inp: FadingBoundInput, delta_g: float = Query(default=1.0, gt=0)):
    """Fading MSE bound together with the antenna requirements and the expected-error bound."""
    try:
        report = bounds.mse_fading_bound(inp, delta_g)
        return {
            **report.model_dump(),
            "expected_abs_error": bounds.expected_abs_error_fading(inp),
            "nr_symbol": bounds.antenna_bound_symbol(inp),
            "nr_gradient": bounds.antenna_bound_gradient(inp),
            "epsilon_at_nr": bounds.epsilon_for_antennas(inp, inp.Nr),
        }
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/convergence")
async def convergence_bound(inp: ConvergenceInput):
    try:
        return {"rhs": bounds.convergence_rhs(inp)}
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/latency")
async def latency_bound(inp: LatencyInput):
    """Latencies of the three schemes; an infinite latency (zero rate) is returned as null."""
    try:
        return _json_safe(bounds.latency_suite(inp).model_dump())
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.get("/symbol-error")
async def symbol_error(
    q: int,
    sigma_z: float = Query(default=0.0, ge=0),
    n_r: int = Query(default=1, ge=1),
    variant: Literal["exact", "interior"] = "exact",
    alphabet: Literal["symbol", "sum"] = "symbol",
):
    try:
        e_r = bounds.symbol_error_moment(q, sigma_z, n_r, variant=variant, alphabet=alphabet)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {"q": q, "sigma_z": sigma_z, "n_r": n_r, "e_r": e_r}
