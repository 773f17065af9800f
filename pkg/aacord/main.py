# file: aacord/main.py
from dotenv import load_dotenv
load_dotenv()

import json
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from aacord.cli import catalog_table
from aacord.graph.workflow import run_pipeline
from aacord.systems.catalog import CATALOG, load_catalog
from aacord.utils.config import Config
from aacord.utils.errors import AacordError, SpecError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

app = FastAPI(
    title="aacord",
    description="Generalized action-angle coordinates for integrable systems, with residual certificates",
    version=Config.VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# --- Models ---
class RunRequest(BaseModel):
    system: str = Field(description="catalog name or full spec file text")
    seed: int = Config.SEED
    point: Optional[List[float]] = None
    overrides: Dict[str, float] = Field(default_factory=dict)


class VerifyRequest(RunRequest):
    hamiltonian: Optional[str] = None
    t_max: Optional[float] = Field(None, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    anchor_offset: bool = False


# --- Errors ---
@app.exception_handler(AacordError)
async def aacord_error_handler(request: Request, exc: AacordError):
    status = 422 if isinstance(exc, SpecError) else 400
    logger.error(f"{request.url.path} failed: {exc}")
    return JSONResponse(status_code=status, content={"detail": exc.message, "anchor": exc.anchor})


# --- Routes ---
@app.get("/")
async def root():
    return {"message": "aacord is running", "version": Config.VERSION}


@app.get("/catalog")
async def catalog():
    systems = []
    for name in CATALOG:
        system = load_catalog(name)
        systems.append({"name": name, "kind": system.kind, "n": system.n, "k": system.k, "m": system.m,
                        "description": system.description})
    return {"systems": systems, "table": catalog_table()}


async def _run(command: str, request: RunRequest, **extra: Any) -> Dict[str, Any]:
    final = await run_pipeline(command, request.system, seed=request.seed, point=request.point,
                               overrides=request.overrides, **extra)
    payload = json.loads(final["report"].to_json())
    if final.get("chart") is not None and command == "chart":
        payload["chart"] = final["chart"].to_dict()
    return payload


@app.post("/validate")
async def validate(request: RunRequest):
    """Structure certificates of a system."""
    return await _run("validate", request)


@app.post("/topology")
async def topology(request: RunRequest):
    """Structure certificates plus completeness probes and the period lattice."""
    return await _run("topology", request)


@app.post("/chart")
async def chart(request: RunRequest):
    return await _run("chart", request)


@app.post("/verify")
async def verify(request: VerifyRequest):
    """Build the chart and certify canonical blocks and equations of motion."""
    return await _run("verify", request, hamiltonian=request.hamiltonian, t_max=request.t_max,
                      dt=request.dt, anchor_offset=request.anchor_offset)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host=Config.API_HOST, port=Config.API_PORT)
# end file
