import logging
from datetime import datetime
from typing import List, Optional

from fastapi import APIRouter, Depends, HTTPException, status
from fastapi.responses import StreamingResponse
from sqlmodel import Session

from ..config import parse_config, render_config
from ..crud import create_experiment_run, delete_experiment_run, get_experiment_run, get_experiment_runs
from ..database import get_session
from ..experiments import run_command
from ..schemas import ExperimentRequest, ExperimentRunCreate, ExperimentRunRead
from ..utils.csv_export import generate_csv_rows
from ..utils.parameters import COMMANDS

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post(
    "/experiments/{command}/csv",
    response_class=StreamingResponse,
    name="experiments:run_csv",
    tags=["Experiments"],
    summary="Run a command and download its CSV",
    description="Parses the `key = value` configuration, runs the command, records the run and streams the CSV.",
)
def run_experiment_csv(
    command: str,
    request: ExperimentRequest,
    session: Session = Depends(get_session),
):
    if command not in COMMANDS:
        raise HTTPException(status_code=404, detail=f"Unknown command {command}")
    try:
        cfg = parse_config(request.config)
        if request.seed is not None:
            cfg = parse_config(render_config(cfg.model_copy(update={"seed": request.seed})))
        # The HTTP surface never writes files on the server.
        cfg = cfg.model_copy(update={"output": None})
        table = run_command(command, cfg)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error running {command}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Could not run {command}: {str(e)}")

    run = create_experiment_run(
        session,
        ExperimentRunCreate(command=command, seed=cfg.seed, config_text=render_config(cfg), row_count=len(table.rows)),
    )
    logger.info(f"Recorded run {run.id}: {command} with {len(table.rows)} rows")

    filename = f"airsum_{command}_{datetime.now().strftime('%Y%m%d_%H%M%S')}.csv"
    headers = {"Content-Disposition": f'attachment; filename="{filename}"', "X-Run-Id": str(run.id)}
    return StreamingResponse(generate_csv_rows(table), media_type="text/csv", headers=headers)


@router.get("/runs", response_model=List[ExperimentRunRead], tags=["Runs"])
def list_runs(
    skip: int = 0,
    limit: int = 100,
    command: Optional[str] = None,
    session: Session = Depends(get_session),
):
    return get_experiment_runs(session, skip=skip, limit=limit, command=command)


@router.get("/runs/{run_id}", response_model=ExperimentRunRead, tags=["Runs"])
def read_run(run_id: int, session: Session = Depends(get_session)):
    run = get_experiment_run(session, run_id)
    if run is None:
        raise HTTPException(status_code=404, detail="Run not found")
    return run


@router.delete("/runs/{run_id}", status_code=status.HTTP_204_NO_CONTENT, tags=["Runs"])
def remove_run(run_id: int, session: Session = Depends(get_session)):
    """Delete a run record. Returns 404 if it does not exist, 204 on success."""
    try:
        deleted = delete_experiment_run(session, run_id)
    except Exception as e:
        logger.error(f"Error deleting run {run_id}: {str(e)}")
        raise HTTPException(status_code=500, detail="An error occurred while deleting the run.")
    if not deleted:
        raise HTTPException(status_code=404, detail="Run not found")
    return None
