"""HTTP front end: one POST route per command, all returning ``CommandResult``."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .commands import execute
from .schemas import (
    AssembleRequest,
    CommandResult,
    PhgRequest,
    RegIntRequest,
    RegSumRequest,
    SLRequest,
)

app = FastAPI(title="zetasum", version=__version__)


def _run(command: str, request) -> CommandResult:
    try:
        return execute(command, request)
    except ValueError as exc:
        # domain errors in user expressions are the caller's fault
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/regint", response_model=CommandResult)
def regint(req: RegIntRequest):
    return _run("regint", req)


@app.post("/regsum", response_model=CommandResult)
def regsum(req: RegSumRequest):
    return _run("regsum", req)


@app.post("/sl", response_model=CommandResult)
def sl(req: SLRequest):
    return _run("sl", req)


@app.post("/phg/extract", response_model=CommandResult)
def phg_extract(req: PhgRequest):
    return _run("phg", req)


@app.post("/assemble", response_model=CommandResult)
def assemble(req: AssembleRequest):
    return _run("assemble", req)


ROUTES = {"regint": "/regint", "regsum": "/regsum", "sl": "/sl", "phg": "/phg/extract",
          "assemble": "/assemble"}


def main(argv=None):
    import argparse

    import uvicorn

    ap = argparse.ArgumentParser(prog="zetasum-server")
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8000)
    args = ap.parse_args(argv)
    uvicorn.run(app, host=args.host, port=args.port)
