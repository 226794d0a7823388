"""Pydantic request/response models for the HTTP service and CLI.

Requests mirror the on-disk formats: a model payload is exactly the model
file JSON, a table payload is the JSON twin of the table CSV. Every
response is a Report envelope -- command metadata, ISO timestamp, a
command-specific payload object, and structured warnings. Payloads are
deterministic for fixed arguments and seed; only the timestamp varies.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class ClassPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weight: float
    probs: list[float]


class ModelPayload(BaseModel):
    """JSON form of a latent class model; same shape as the model file."""

    model_config = ConfigDict(extra="forbid")

    K: int
    classes: list[ClassPayload]


class TablePayload(BaseModel):
    """JSON form of a contingency table: bitstring pattern -> count."""

    model_config = ConfigDict(extra="forbid")

    K: int
    counts: dict[str, int]


class CheckRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    classes: int = Field(ge=1)
    sources: int = Field(ge=2)


class CounterexampleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    classes: int = Field(ge=1)
    sources: int = Field(ge=2)
    alpha: float | None = None
    tol: float = 1e-9


class CellProbsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelPayload


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelPayload
    popsize: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    replicates: int = Field(default=1, ge=1)
    method: Literal["multinomial", "bernoulli"] = "multinomial"


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    table: TablePayload
    classes: int = Field(ge=1)
    starts: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    max_outer_iters: int = Field(default=2000, ge=1)
    rel_loglik_tol: float = 1e-10


class ProbeRequest(FitRequest):
    spread: float = Field(default=0.05, gt=0)
    cluster_rel_tol: float = Field(default=1e-6, gt=0)


class VerifyPaperRequest(BaseModel):
    """Run the built-in reference checks.

    ``perturb`` is a test hook: it injects a 1e-3 error into one sampling
    probability so the failure path can be exercised end to end.
    """

    model_config = ConfigDict(extra="forbid")

    perturb: bool = False


class WarningItem(BaseModel):
    model_config = ConfigDict(extra="forbid")

    code: str
    text: str


class Report(BaseModel):
    """Envelope for every command's output."""

    model_config = ConfigDict(extra="forbid")

    command: str
    version: str
    arguments: dict[str, Any]
    seed: int | None = None
    timestamp: str
    payload: dict[str, Any]
    warnings: list[WarningItem]
