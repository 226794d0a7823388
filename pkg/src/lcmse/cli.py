"""Command-line client for the toolkit.

Every subcommand builds a service request, executes it (in-process by
default, or against a remote server via ``--url``), and emits the Report as
JSON. File handling stays on the client: model and table files are read
here, simulation tables are written here.

Exit codes: 0 success, 1 computational failure (invalid inputs, failed
verification, unreachable server), 2 usage error. Randomized commands
default to seed 0 so every run is reproducible; no environment variable
influences any result.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

import httpx
from pydantic import ValidationError

from . import __version__
from .errors import LcmseError
from .io import model_to_dict, read_model, read_table, table_to_dict, write_table
from .model import ContingencyTable
from .service import handlers
from .service.schemas import (
    CellProbsRequest,
    CheckRequest,
    CounterexampleRequest,
    FitRequest,
    ModelPayload,
    ProbeRequest,
    Report,
    SimulateRequest,
    TablePayload,
    VerifyPaperRequest,
)


class ServiceCallError(LcmseError):
    """A remote service call failed or returned a non-success status."""


def _execute(route: str, handler: Callable[[Any], Report], req: Any, url: str | None) -> dict:
    if url is None:
        return handler(req).model_dump()
    try:
        resp = httpx.post(
            url.rstrip("/") + route, json=req.model_dump(), timeout=600.0
        )
    except httpx.HTTPError as exc:
        raise ServiceCallError(f"request to {url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise ServiceCallError(
            f"server returned {resp.status_code} for {route}: {resp.text}"
        )
    return resp.json()


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _model_payload(path: str) -> ModelPayload:
    # The file reader is the authority: it validates every invariant (and
    # names the first offending path), then the payload is built from the
    # parsed model so the service sees canonical values.
    return ModelPayload.model_validate(model_to_dict(read_model(path)))


def _table_payload(path: str) -> TablePayload:
    return TablePayload.model_validate(table_to_dict(read_table(path)))


def _cmd_check(args: argparse.Namespace) -> int:
    req = CheckRequest(classes=args.classes, sources=args.sources)
    report = _execute("/check", handlers.handle_check, req, args.url)
    _emit(report, args.out)
    return 0


def _cmd_counterexample(args: argparse.Namespace) -> int:
    req = CounterexampleRequest(
        classes=args.classes, sources=args.sources, alpha=args.alpha, tol=args.tol
    )
    report = _execute("/counterexample", handlers.handle_counterexample, req, args.url)
    _emit(report, args.out)
    return 0


def _cmd_cellprobs(args: argparse.Namespace) -> int:
    req = CellProbsRequest(model=_model_payload(args.model))
    report = _execute("/cellprobs", handlers.handle_cellprobs, req, args.url)
    _emit(report, args.out)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    req = SimulateRequest(
        model=_model_payload(args.model),
        popsize=args.popsize,
        seed=args.seed,
        replicates=args.replicates,
        method=args.method,
    )
    report = _execute("/simulate", handlers.handle_simulate, req, args.url)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for entry in report["payload"]["tables"]:
        table_doc = entry["table"]
        counts = [0] * (2 ** table_doc["K"] - 1)
        for pattern, count in table_doc["counts"].items():
            counts[int(pattern, 2) - 1] = count
        path = out_dir / f"table_{entry['replicate']:03d}.csv"
        write_table(ContingencyTable(table_doc["K"], counts), path)
        entry["file"] = path.name
    (out_dir / "manifest.json").write_text(json.dumps(report, indent=2) + "\n")

    summary = dict(report)
    summary["payload"] = {
        k: v for k, v in report["payload"].items() if k != "tables"
    } | {
        "out_dir": str(out_dir),
        "files": [e["file"] for e in report["payload"]["tables"]],
        "manifest": "manifest.json",
    }
    _emit(summary, None)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    req = FitRequest(
        table=_table_payload(args.table),
        classes=args.classes,
        starts=args.starts,
        seed=args.seed,
        max_outer_iters=args.max_iters,
        rel_loglik_tol=args.tol,
    )
    report = _execute("/fit", handlers.handle_fit, req, args.url)
    _emit(report, args.out)
    return 0


def _cmd_probe(args: argparse.Namespace) -> int:
    req = ProbeRequest(
        table=_table_payload(args.table),
        classes=args.classes,
        starts=args.starts,
        seed=args.seed,
        max_outer_iters=args.max_iters,
        rel_loglik_tol=args.tol,
        spread=args.spread,
        cluster_rel_tol=args.cluster_tol,
    )
    report = _execute("/probe", handlers.handle_probe, req, args.url)
    _emit(report, args.out)
    return 0


def _cmd_verify_paper(args: argparse.Namespace) -> int:
    req = VerifyPaperRequest(perturb=args.perturb)
    report = _execute("/verify-paper", handlers.handle_verify_paper, req, args.url)
    _emit(report, args.out)
    return 0 if report["payload"]["passed"] else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report JSON here instead of stdout")
    p.add_argument(
        "--url",
        help="POST the request to a running lcmse server instead of computing in-process",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcmse",
        description=(
            "Latent class models for multiple-systems (capture-recapture) "
            "estimation: identifiability decisions, counterexample pairs, "
            "cell probabilities and moments, simulation, and EM fitting."
        ),
    )
    parser.add_argument("--version", action="version", version=f"lcmse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide identifiability of the (J, K) family")
    p.add_argument("--classes", type=int, required=True, help="number of latent classes J")
    p.add_argument("--sources", type=int, required=True, help="number of sources K")
    _add_common(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser(
        "counterexample",
        help="construct and verify a pair of models witnessing nonidentifiability (2J > K)",
    )
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--sources", type=int, required=True)
    p.add_argument(
        "--alpha",
        type=float,
        default=None,
        help="scale in (0, 1/(2J)); default 0.9/(2J)",
    )
    p.add_argument("--tol", type=float, default=1e-9, help="verification tolerance")
    _add_common(p)
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser(
        "cellprobs",
        help="full cell probabilities, conditional probabilities, and moments of a model",
    )
    p.add_argument("--model", required=True, help="model JSON file")
    _add_common(p)
    p.set_defaults(func=_cmd_cellprobs)

    p = sub.add_parser("simulate", help="draw capture histories and write table CSVs")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--popsize", type=int, required=True, help="true population size N")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument(
        "--method",
        choices=["multinomial", "bernoulli"],
        default="multinomial",
        help="cell-level multinomial draw (default) or per-individual Bernoulli cross-check",
    )
    p.add_argument("--out", required=True, help="output directory for CSVs and manifest")
    p.add_argument("--url", help="POST the request to a running lcmse server")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="multistart conditional-likelihood EM fit")
    p.add_argument("--table", required=True, help="table CSV file")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--starts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10, help="relative log-likelihood tolerance")
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser(
        "probe",
        help="multistart fit clustered by likelihood, flagging N-spread among equal optima",
    )
    p.add_argument("--table", required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--spread", type=float, default=0.05, help="relative N spread that raises the flag")
    p.add_argument("--cluster-tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser(
        "verify-paper",
        help="check the library against the built-in reference example and constants",
    )
    p.add_argument(
        "--perturb",
        action="store_true",
        help="test hook: inject a 1e-3 parameter error to exercise the failure path",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_verify_paper)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        parser.exit(2, f"{parser.prog}: argument error: {location}: {first['msg']}\n")
    except LcmseError as exc:
        _emit(
            {
                "command": args.command,
                "version": __version__,
                "error": {"type": type(exc).__name__, "message": str(exc)},
            },
            None,
        )
        return 1
    except OSError as exc:
        _emit(
            {
                "command": args.command,
                "version": __version__,
                "error": {"type": type(exc).__name__, "message": str(exc)},
            },
            None,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
