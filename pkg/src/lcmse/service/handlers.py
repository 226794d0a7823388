"""Service-layer command implementations.

Each handler takes a validated request model and returns a Report. The
FastAPI endpoints and the CLI both call these functions, so a payload is
identical whether it was produced locally or by a remote server.
"""

from __future__ import annotations

import datetime
import warnings
from typing import Any

import numpy as np

from .. import __version__
from ..estimation import (
    FitConfig,
    FitResult,
    best_fit,
    family_warnings,
    fit_em,
    probe_nonidentifiability,
    saturated_loglik,
)
from ..identifiability import (
    CounterexamplePair,
    counterexample,
    is_identifiable,
    parameter_bound_satisfied,
    reference_pair,
    verify_counterexample,
)
from ..io import model_to_dict, parse_model, parse_table_dict, table_to_dict
from ..model import LatentClassModel, cell_probabilities
from ..moments import check_moment_proportionality, moments_of_model
from ..patterns import PatternOrder
from ..simulation import SimulationSpec, simulate_replicates
from .schemas import (
    CellProbsRequest,
    CheckRequest,
    CounterexampleRequest,
    FitRequest,
    ModelPayload,
    ProbeRequest,
    Report,
    SimulateRequest,
    VerifyPaperRequest,
    WarningItem,
)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _report(
    command: str,
    arguments: dict[str, Any],
    payload: dict[str, Any],
    warnings: list[tuple[str, str]],
    seed: int | None = None,
) -> Report:
    return Report(
        command=command,
        version=__version__,
        arguments=arguments,
        seed=seed,
        timestamp=_now(),
        payload=payload,
        warnings=[WarningItem(code=c, text=t) for c, t in warnings],
    )


def _model_from_payload(payload: ModelPayload, *, require_distinct: bool = True) -> LatentClassModel:
    return parse_model(payload.model_dump(), require_distinct=require_distinct)


def handle_check(req: CheckRequest) -> Report:
    decision = is_identifiable(req.classes, req.sources)
    payload = {
        "classes": req.classes,
        "sources": req.sources,
        "identifiable": decision.identifiable,
        "explanation": decision.explanation,
        "criterion": "2J <= K",
        "parameter_bound": {
            "satisfied": parameter_bound_satisfied(req.classes, req.sources),
            "parameter_count": req.classes * (req.sources + 1) - 1,
            "observable_dof": 2**req.sources - 2,
            "note": "necessary only; strictly weaker than 2J <= K",
        },
    }
    return _report(
        "check",
        req.model_dump(),
        payload,
        family_warnings(req.classes, req.sources),
    )


def _verification_dict(pair: CounterexamplePair, tol: float) -> dict[str, Any]:
    v = verify_counterexample(pair, tol)
    return {
        "passed": v.passed,
        "tol": v.tol,
        "moment_ratio": v.moment_ratio,
        "max_rel_moment_deviation": v.max_rel_moment_deviation,
        "max_conditional_gap": v.max_conditional_gap,
        "missing_mass_q": v.missing_mass_q,
        "missing_mass_r": v.missing_mass_r,
        "missing_mass_gap": v.missing_mass_gap,
        "moments_proportional": v.moments_proportional,
        "conditionals_equal": v.conditionals_equal,
        "missing_masses_differ": v.missing_masses_differ,
    }


def handle_counterexample(req: CounterexampleRequest) -> Report:
    pair = counterexample(req.classes, req.sources, req.alpha)
    payload = {
        "classes": pair.classes,
        "sources": pair.sources,
        "alpha": pair.alpha,
        "moment_ratio": pair.moment_ratio,
        "q_model": model_to_dict(pair.q),
        "r_model": model_to_dict(pair.r),
        "verification": _verification_dict(pair, req.tol),
    }
    return _report(
        "counterexample",
        req.model_dump(),
        payload,
        family_warnings(req.classes, req.sources),
    )


def handle_cellprobs(req: CellProbsRequest) -> Report:
    model = _model_from_payload(req.model)
    order = PatternOrder(model.k)
    pv = cell_probabilities(model)
    moments = moments_of_model(model)
    full_keys = order.bitstrings(include_missing=True)
    star_keys = order.bitstrings()
    payload = {
        "K": model.k,
        "classes": model.n_classes,
        "pi": dict(zip(full_keys, pv.full.tolist())),
        "pi0": pv.missing_mass,
        "conditional": dict(zip(star_keys, pv.conditional().tolist())),
        "moments": dict(zip(star_keys, moments.values.tolist())),
    }
    return _report(
        "cellprobs",
        req.model_dump(),
        payload,
        family_warnings(model.n_classes, model.k),
    )


def handle_simulate(req: SimulateRequest) -> Report:
    model = _model_from_payload(req.model)
    spec = SimulationSpec(model=model, popsize=req.popsize, seed=req.seed, method=req.method)
    draws = simulate_replicates(spec, req.replicates)
    payload = {
        "model": model_to_dict(model),
        "popsize": req.popsize,
        "seed": req.seed,
        "method": req.method,
        "replicates": req.replicates,
        "stream": "replicate r draws from SeedSequence(seed, spawn_key=(r,))",
        "tables": [
            {
                "replicate": r,
                "observed_total": d.table.n,
                "true_missing": d.true_missing,
                "table": table_to_dict(d.table),
            }
            for r, d in enumerate(draws)
        ],
        "note": (
            "true_missing is simulation-only ground truth (the realized "
            "all-zero count); it is never part of an observed table"
        ),
    }
    return _report(
        "simulate",
        req.model_dump(),
        payload,
        family_warnings(model.n_classes, model.k),
        seed=req.seed,
    )


def _fit_result_dict(res: FitResult) -> dict[str, Any]:
    return {
        "start_index": res.start_index,
        "cond_loglik": res.cond_loglik,
        "pi0_hat": res.pi0_hat,
        "n_hat": res.n_hat,
        "n_hat_rounded": res.n_hat_rounded,
        "iterations": res.iterations,
        "converged": res.converged,
        "distinct_classes": res.distinct_classes,
        "model": model_to_dict(res.model),
    }


def _fit_warnings(req: FitRequest, results: list[FitResult]) -> list[tuple[str, str]]:
    out = family_warnings(req.classes, req.table.K)
    merged = [r.start_index for r in results if not r.distinct_classes]
    if merged:
        out.append(
            (
                "CLASSES_NOT_DISTINCT",
                f"fitted classes share a sampling probability in starts {merged}; "
                "the fit sits on the family boundary where classes merge",
            )
        )
    return out


def handle_fit(req: FitRequest) -> Report:
    table = parse_table_dict(req.table.model_dump())
    config = FitConfig(
        classes=req.classes,
        starts=req.starts,
        seed=req.seed,
        max_outer_iters=req.max_outer_iters,
        rel_loglik_tol=req.rel_loglik_tol,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the report's structured warnings carry the message
        results = fit_em(table, config)
    best = best_fit(results)
    payload = {
        "classes": req.classes,
        "starts": req.starts,
        "seed": req.seed,
        "observed_total": table.n,
        "saturated_loglik": saturated_loglik(table),
        "best": _fit_result_dict(best),
        "results": [_fit_result_dict(r) for r in results],
    }
    return _report("fit", req.model_dump(), payload, _fit_warnings(req, results), seed=req.seed)


def handle_probe(req: ProbeRequest) -> Report:
    table = parse_table_dict(req.table.model_dump())
    config = FitConfig(
        classes=req.classes,
        starts=req.starts,
        seed=req.seed,
        max_outer_iters=req.max_outer_iters,
        rel_loglik_tol=req.rel_loglik_tol,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = probe_nonidentifiability(
            table,
            config,
            spread_threshold=req.spread,
            cluster_rel_tol=req.cluster_rel_tol,
        )
    results = list(report.results)
    warn = _fit_warnings(req, results)
    if report.flagged:
        warn.append(
            (
                "LIKELIHOOD_EQUIVALENT_N_SPREAD",
                "the top-likelihood cluster contains fits whose implied "
                f"population sizes spread more than {req.spread:.0%}; the data "
                "do not determine N within this family",
            )
        )
    payload = {
        "classes": req.classes,
        "starts": req.starts,
        "seed": req.seed,
        "observed_total": table.n,
        "flagged": report.flagged,
        "spread_threshold": report.spread_threshold,
        "cluster_rel_tol": report.cluster_rel_tol,
        "clusters": [
            {
                "start_indices": list(c.start_indices),
                "best_loglik": c.best_loglik,
                "n_hat_min": c.n_hat_min,
                "n_hat_max": c.n_hat_max,
                "rel_spread": c.rel_spread,
            }
            for c in report.clusters
        ],
        "results": [_fit_result_dict(r) for r in results],
    }
    return _report("probe", req.model_dump(), payload, warn, seed=req.seed)


# Reference constants for the built-in verification: the two-class,
# two-source pair with weights as displayed at seven digits, plus the
# rounded masses and moment ratio the exact pair must reproduce.
_DISPLAYED_Q = {"weights": [0.5, 0.5], "lambdas": [[0.2475, 0.2475], [0.7425, 0.7425]]}
_DISPLAYED_R = {"weights": [0.8571429, 0.1428571], "lambdas": [[0.495, 0.495], [0.99, 0.99]]}
_DISPLAYED_PI0_Q = 0.316
_DISPLAYED_PI0_R = 0.219
_DISPLAYED_RATIO = 0.875


def _check_entry(name: str, passed: bool, observed: Any, expected: Any, tol: float) -> dict[str, Any]:
    return {
        "name": name,
        "passed": bool(passed),
        "observed": observed,
        "expected": expected,
        "tolerance": tol,
    }


def handle_verify_paper(req: VerifyPaperRequest) -> Report:
    pair = reference_pair()
    q, r = pair.q, pair.r
    if req.perturb:
        lam = np.array(r.lambdas, copy=True)
        lam[0, 0] += 1e-3
        r = LatentClassModel(np.array(r.weights), lam)

    checks: list[dict[str, Any]] = []

    pv_q, pv_r = cell_probabilities(q), cell_probabilities(r)
    gap = float(np.max(np.abs(pv_q.conditional() - pv_r.conditional())))
    checks.append(
        _check_entry(
            "conditional_vectors_equal",
            gap <= 1e-9,
            {"max_componentwise_gap": gap, "conditional_q": pv_q.conditional().tolist()},
            "componentwise equal",
            1e-9,
        )
    )
    checks.append(
        _check_entry(
            "missing_mass_q", abs(pv_q.missing_mass - _DISPLAYED_PI0_Q) <= 5e-4,
            pv_q.missing_mass, _DISPLAYED_PI0_Q, 5e-4,
        )
    )
    checks.append(
        _check_entry(
            "missing_mass_r", abs(pv_r.missing_mass - _DISPLAYED_PI0_R) <= 5e-4,
            pv_r.missing_mass, _DISPLAYED_PI0_R, 5e-4,
        )
    )

    prop = check_moment_proportionality(moments_of_model(q), moments_of_model(r), tol=1e-9)
    ratio_ok = prop.proportional and abs(prop.ratio - _DISPLAYED_RATIO) <= 1e-9
    checks.append(
        _check_entry("moment_ratio", ratio_ok, prop.ratio, _DISPLAYED_RATIO, 1e-9)
    )

    regen = counterexample(2, 2, 0.2475)
    # The generated pair reproduces the displayed one with labels swapped.
    relabel_gap = 0.0
    for generated, displayed in ((regen.r, _DISPLAYED_Q), (regen.q, _DISPLAYED_R)):
        relabel_gap = max(
            relabel_gap,
            float(np.max(np.abs(generated.weights - np.array(displayed["weights"])))),
            float(np.max(np.abs(generated.lambdas - np.array(displayed["lambdas"])))),
        )
    checks.append(
        _check_entry(
            "construction_reproduces_reference",
            relabel_gap <= 1e-6,
            {"max_parameter_gap": relabel_gap},
            "generated pair matches displayed parameters up to relabeling",
            1e-6,
        )
    )

    first_failure = next((c["name"] for c in checks if not c["passed"]), None)
    payload = {
        "passed": first_failure is None,
        "perturbed": req.perturb,
        "checks": checks,
        "first_failure": first_failure,
    }
    return _report(
        "verify-paper",
        req.model_dump(),
        payload,
        family_warnings(pair.classes, pair.sources),
    )
