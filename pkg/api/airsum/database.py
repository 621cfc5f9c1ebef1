import logging
import os

from dotenv import load_dotenv  # Load environment variables from .env
from sqlalchemy import text
from sqlalchemy.engine import Engine
from sqlmodel import Session, SQLModel, create_engine

# Import models to ensure they are registered with SQLModel
from .models import ExperimentRun  # noqa: F401

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_DATABASE_URL = "sqlite:///./airsum.db"

# Read DATABASE_URL, default to SQLite for local runs if not set
DATABASE_URL = os.getenv("DATABASE_URL", DEFAULT_DATABASE_URL)

connect_args = {}
if DATABASE_URL.startswith("sqlite"):
    connect_args = {"check_same_thread": False}

engine: Engine = create_engine(
    DATABASE_URL,
    connect_args=connect_args,
    echo=os.getenv("AIRSUM_SQL_ECHO", "").lower() in ("1", "true"),
)


def get_session():
    with Session(engine) as session:
        yield session


def create_db():
    """
    Create all tables in the database if they don't exist.
    Safe to call multiple times.
    """
    try:
        logger.info(f"Initializing database at {DATABASE_URL}")
        SQLModel.metadata.create_all(engine)
        with Session(engine) as session:
            session.execute(text("SELECT 1"))
        logger.info("Database connection test successful")
    except Exception as e:
        logger.error(f"Error creating tables: {str(e)}")
        raise
