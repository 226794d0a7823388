"""HTTP interface: one POST endpoint per command, all returning a Report.

Input problems caught by the core validators map to 422 with the offending
path in the detail; everything else surfaces as a normal FastAPI error.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import LcmseError
from . import handlers
from .schemas import (
    CellProbsRequest,
    CheckRequest,
    CounterexampleRequest,
    FitRequest,
    ProbeRequest,
    Report,
    SimulateRequest,
    VerifyPaperRequest,
)

app = FastAPI(
    title="lcmse",
    version=__version__,
    description=(
        "Identifiability analysis for latent class models in multiple-systems "
        "(capture-recapture) estimation: cell probabilities and mixed moments, "
        "identifiability decisions, explicit counterexample pairs, seeded "
        "simulation, and conditional-likelihood EM fitting."
    ),
)


@app.exception_handler(LcmseError)
async def _lcmse_error(_: Request, exc: LcmseError) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/")
def service_info() -> dict:
    return {
        "service": "lcmse",
        "version": __version__,
        "endpoints": [
            "/check",
            "/counterexample",
            "/cellprobs",
            "/simulate",
            "/fit",
            "/probe",
            "/verify-paper",
        ],
    }


@app.post("/check", response_model=Report)
def check(req: CheckRequest) -> Report:
    return handlers.handle_check(req)


@app.post("/counterexample", response_model=Report)
def make_counterexample(req: CounterexampleRequest) -> Report:
    return handlers.handle_counterexample(req)


@app.post("/cellprobs", response_model=Report)
def cellprobs(req: CellProbsRequest) -> Report:
    return handlers.handle_cellprobs(req)


@app.post("/simulate", response_model=Report)
def simulate(req: SimulateRequest) -> Report:
    return handlers.handle_simulate(req)


@app.post("/fit", response_model=Report)
def fit(req: FitRequest) -> Report:
    return handlers.handle_fit(req)


@app.post("/probe", response_model=Report)
def probe(req: ProbeRequest) -> Report:
    return handlers.handle_probe(req)


@app.post("/verify-paper", response_model=Report)
def verify_paper(req: VerifyPaperRequest) -> Report:
    return handlers.handle_verify_paper(req)
