from typing import List, Optional

from sqlmodel import Session, select

from .models import ExperimentRun
from .schemas import ExperimentRunCreate


def create_experiment_run(session: Session, run: ExperimentRunCreate) -> ExperimentRun:
    db_run = ExperimentRun(**run.model_dump())
    session.add(db_run)
    session.commit()
    session.refresh(db_run)
    return db_run


def get_experiment_runs(
    session: Session,
    skip: int = 0,
    limit: int = 100,
    command: Optional[str] = None,
) -> List[ExperimentRun]:
    """
    Get paginated list of runs, newest first, optionally for one command.
    """
    query = select(ExperimentRun)
    if command:
        query = query.where(ExperimentRun.command == command)
    query = query.order_by(ExperimentRun.id.desc()).offset(skip).limit(limit)
    return list(session.exec(query).all())


def get_experiment_run(session: Session, run_id: int) -> Optional[ExperimentRun]:
    return session.get(ExperimentRun, run_id)


def delete_experiment_run(session: Session, run_id: int) -> bool:
    """
    Delete a run record.
    Returns True if deleted, False if not found.
    """
    run = session.get(ExperimentRun, run_id)
    if run is None:
        return False
    session.delete(run)
    session.commit()
    return True
