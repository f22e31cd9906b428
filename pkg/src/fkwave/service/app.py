"""FastAPI service exposing the solver pipeline.

One POST endpoint per pipeline stage; each accepts a partial config merged
over the defaults and returns the stage summary plus its artifacts inline.
Long-lived deployments benefit from the on-disk kernel/train caches, which
are shared across requests.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import RunConfig, load_config
from ..errors import ConfigError, InvariantError, NumericalError
from ..pipeline import RUNNERS
from .schemas import ErrorBody, HealthResponse, RunRequest, RunResponse

# claims stay machine-parsable: error kind -> HTTP status
_STATUS = {"config": 422, "numerical": 500, "invariant": 409, "internal": 500}


def _error(kind: str, message: str, payload: dict | None = None) -> JSONResponse:
    body = ErrorBody(kind=kind, message=message, payload=payload)
    return JSONResponse(status_code=_STATUS[kind], content=body.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="fkwave", version=__version__,
                  description="Travelling dislocation waves in a Frenkel-Kontorova chain")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    def make_endpoint(stage: str, runner):
        def endpoint(req: RunRequest):
            try:
                cfg = _merge_config(req.config)
                out = runner(cfg)
                return RunResponse(**out)
            except ConfigError as e:
                return _error("config", str(e))
            except InvariantError as e:
                return _error("invariant", str(e), e.payload)
            except NumericalError as e:
                return _error("numerical", str(e))
        endpoint.__name__ = f"run_{stage.replace('-', '_')}"
        return endpoint

    for stage, runner in RUNNERS.items():
        app.post(f"/{stage}", response_model=RunResponse)(make_endpoint(stage, runner))

    return app


def _merge_config(partial: dict) -> RunConfig:
    flat: dict = {}

    def walk(prefix, node):
        if isinstance(node, dict):
            for k, v in node.items():
                walk(f"{prefix}{k}." if isinstance(v, dict) else f"{prefix}{k}", v)
        else:
            flat[prefix] = node

    for k, v in partial.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}.{kk}"] = vv
        else:
            flat[k] = v
    return load_config(None, flat)


app = create_app()
