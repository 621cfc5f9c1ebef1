import logging
import os

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from .database import create_db
from .routers import bounds as bounds_router
from .routers import experiments as experiments_router
from .routers import parameters as parameters_router

load_dotenv()

logging.basicConfig(level=os.getenv("AIRSUM_LOG_LEVEL", "INFO").upper())
logger = logging.getLogger(__name__)

app = FastAPI(title="airsum: over-the-air federated learning simulator")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
    expose_headers=["Content-Disposition", "X-Run-Id"],
)

app.include_router(experiments_router.router, prefix="/api")
app.include_router(bounds_router.router, prefix="/api")
app.include_router(parameters_router.router, prefix="/api")


@app.on_event("startup")
async def startup_event():
    logger.info("Starting up application...")
    create_db()


@app.get("/")
async def root():
    return {"message": "airsum API"}
