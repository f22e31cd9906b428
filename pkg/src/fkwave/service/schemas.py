"""Request/response models of the solver service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class RunRequest(BaseModel):
    """Partial configuration merged over the defaults of RunConfig."""

    model_config = ConfigDict(extra="forbid")
    config: dict[str, Any] = Field(default_factory=dict)


class ArtifactModel(BaseModel):
    name: str
    kind: Literal["csv", "json"]
    columns: dict[str, list[float]] | None = None
    data: dict[str, Any] | None = None


class RunResponse(BaseModel):
    summary: str
    result: dict[str, Any]
    artifacts: list[ArtifactModel] = Field(default_factory=list)


class ErrorBody(BaseModel):
    kind: Literal["config", "numerical", "invariant", "internal"]
    message: str
    payload: RunResponse | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
