"""FastAPI service wrapping the core package.

The CLI is a thin client of this layer: it builds the same request models
and either calls the handlers in-process or POSTs them to a running server.
"""

from __future__ import annotations

import json
from importlib import resources

from .app import app
from .schemas import Report

__all__ = ["app", "Report", "report_json_schema", "shipped_report_schema"]


def report_json_schema() -> dict:
    """JSON schema of the Report envelope, generated from the model."""
    return Report.model_json_schema()


def shipped_report_schema() -> dict:
    """The schema file shipped with the package (kept equal to the live one)."""
    with resources.files(__package__).joinpath("report.schema.json").open() as fh:
        return json.load(fh)
