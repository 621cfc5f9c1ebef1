from datetime import datetime, timezone
from typing import Optional

from sqlmodel import Field, SQLModel


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class ExperimentRun(SQLModel, table=True, extend_existing=True):
    """One executed command: the canonical config it ran with and how many CSV rows it produced."""

    id: Optional[int] = Field(default=None, primary_key=True)
    command: str = Field(index=True)
    seed: int = Field(default=0)
    # Canonical `key = value` text as rendered by render_config
    config_text: str = Field(default="")
    row_count: int = Field(default=0)
    status: str = Field(default="completed")
    created_at: datetime = Field(default_factory=_utcnow)
