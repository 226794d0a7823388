import json

import jsonschema
import pytest
from fastapi.testclient import TestClient

from lcmse import __version__, parse_model, parse_table_dict
from lcmse.service import report_json_schema, shipped_report_schema
from lcmse.service.app import app

client = TestClient(app)

Q_MODEL = {
    "K": 2,
    "classes": [
        {"weight": 0.5, "probs": [0.2475, 0.2475]},
        {"weight": 0.5, "probs": [0.7425, 0.7425]},
    ],
}


def payload_bytes(report: dict) -> bytes:
    # deterministic form of everything except the timestamp
    trimmed = {k: v for k, v in report.items() if k != "timestamp"}
    return json.dumps(trimmed, sort_keys=True).encode()


class TestEndpoints:
    def test_service_info(self):
        resp = client.get("/")
        assert resp.status_code == 200
        body = resp.json()
        assert body["version"] == __version__
        assert "/verify-paper" in body["endpoints"]

    def test_check(self):
        resp = client.post("/check", json={"classes": 2, "sources": 4})
        assert resp.status_code == 200
        report = resp.json()
        assert report["command"] == "check"
        assert report["payload"]["identifiable"] is True
        assert report["warnings"] == []

    def test_check_nonidentifiable_warning_code(self):
        report = client.post("/check", json={"classes": 3, "sources": 4}).json()
        codes = [w["code"] for w in report["warnings"]]
        assert "NONIDENTIFIABLE_FAMILY" in codes

    def test_counterexample(self):
        resp = client.post(
            "/counterexample", json={"classes": 2, "sources": 3, "alpha": 0.2}
        )
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert payload["verification"]["passed"] is True
        assert payload["moment_ratio"] == pytest.approx(8 / 7)
        # both embedded models round-trip through the file-format reader
        for key in ("q_model", "r_model"):
            model = parse_model(payload[key])
            assert model.k == 3

    def test_counterexample_regime_maps_to_422(self):
        resp = client.post("/counterexample", json={"classes": 1, "sources": 2})
        assert resp.status_code == 422
        assert resp.json()["error"] == "RegimeError"

    def test_cellprobs(self):
        resp = client.post("/cellprobs", json={"model": Q_MODEL})
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert payload["pi0"] == pytest.approx(0.31628125)
        assert set(payload["pi"]) == {"00", "01", "10", "11"}
        assert set(payload["conditional"]) == {"01", "10", "11"}
        assert payload["moments"]["01"] == pytest.approx(0.495)
        assert sum(payload["pi"].values()) == pytest.approx(1.0, abs=1e-12)

    def test_cellprobs_invalid_model_maps_to_422(self):
        bad = json.loads(json.dumps(Q_MODEL))
        bad["classes"][0]["probs"][1] = 1.5
        resp = client.post("/cellprobs", json={"model": bad})
        assert resp.status_code == 422
        assert "classes[0].probs[1]" in resp.json()["detail"]

    def test_simulate_and_table_roundtrip(self):
        resp = client.post(
            "/simulate",
            json={"model": Q_MODEL, "popsize": 5000, "seed": 8, "replicates": 2},
        )
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert len(payload["tables"]) == 2
        for entry in payload["tables"]:
            table = parse_table_dict(entry["table"])
            assert table.n == entry["observed_total"]
            assert table.n + entry["true_missing"] == 5000

    def test_fit(self):
        sim = client.post(
            "/simulate", json={"model": Q_MODEL, "popsize": 5000, "seed": 8}
        ).json()
        table = sim["payload"]["tables"][0]["table"]
        resp = client.post(
            "/fit",
            json={"table": table, "classes": 1, "starts": 2, "seed": 3},
        )
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert payload["best"]["converged"] is True
        assert len(payload["results"]) == 2
        assert payload["best"]["n_hat"] >= payload["observed_total"]

    def test_probe_flag_and_warning(self):
        sim = client.post(
            "/simulate", json={"model": Q_MODEL, "popsize": 50_000, "seed": 18}
        ).json()
        table = sim["payload"]["tables"][0]["table"]
        resp = client.post(
            "/probe",
            json={"table": table, "classes": 2, "starts": 25, "seed": 4},
        )
        assert resp.status_code == 200
        report = resp.json()
        assert report["payload"]["flagged"] is True
        assert "LIKELIHOOD_EQUIVALENT_N_SPREAD" in [w["code"] for w in report["warnings"]]

    def test_verify_paper(self):
        resp = client.post("/verify-paper", json={})
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert payload["passed"] is True
        assert payload["first_failure"] is None

    def test_verify_paper_perturbed(self):
        resp = client.post("/verify-paper", json={"perturb": True})
        payload = resp.json()["payload"]
        assert payload["passed"] is False
        assert payload["first_failure"] == "conditional_vectors_equal"

    def test_unknown_field_rejected(self):
        resp = client.post("/check", json={"classes": 2, "sources": 4, "bogus": 1})
        assert resp.status_code == 422


class TestReportContract:
    def test_reports_validate_against_shipped_schema(self):
        schema = shipped_report_schema()
        for route, body in [
            ("/check", {"classes": 2, "sources": 3}),
            ("/counterexample", {"classes": 2, "sources": 2}),
            ("/cellprobs", {"model": Q_MODEL}),
            ("/simulate", {"model": Q_MODEL, "popsize": 100, "seed": 1}),
            ("/verify-paper", {}),
        ]:
            report = client.post(route, json=body).json()
            jsonschema.validate(report, schema)

    def test_shipped_schema_is_current(self):
        assert shipped_report_schema() == report_json_schema()

    def test_payloads_deterministic_across_calls(self):
        body = {"model": Q_MODEL, "popsize": 2000, "seed": 5, "replicates": 3}
        a = client.post("/simulate", json=body).json()
        b = client.post("/simulate", json=body).json()
        assert payload_bytes(a) == payload_bytes(b)

    def test_fit_payloads_deterministic(self):
        sim = client.post(
            "/simulate", json={"model": Q_MODEL, "popsize": 3000, "seed": 6}
        ).json()
        table = sim["payload"]["tables"][0]["table"]
        body = {"table": table, "classes": 2, "starts": 4, "seed": 9}
        a = client.post("/fit", json=body).json()
        b = client.post("/fit", json=body).json()
        assert payload_bytes(a) == payload_bytes(b)

    def test_report_floats_roundtrip_exactly(self):
        report = client.post("/cellprobs", json={"model": Q_MODEL}).json()
        pi0 = report["payload"]["pi0"]
        assert pi0 == json.loads(json.dumps(pi0))
        assert pi0 == 0.31628124999999996


class TestInputEdges:
    def test_certain_capture_model_accepted(self):
        # probability exactly 1 is a permitted input (certain capture)
        model = {"K": 2, "classes": [{"weight": 1.0, "probs": [1.0, 0.5]}]}
        resp = client.post("/cellprobs", json={"model": model})
        assert resp.status_code == 200
        payload = resp.json()["payload"]
        assert payload["pi0"] == 0.0
        assert payload["conditional"]["10"] == pytest.approx(0.5)

    def test_incomplete_table_payload_maps_to_422(self):
        resp = client.post(
            "/fit",
            json={"table": {"K": 2, "counts": {"01": 1, "10": 2}}, "classes": 1},
        )
        assert resp.status_code == 422
        assert resp.json()["error"] == "InvalidTableError"

    def test_simulate_bernoulli_method(self):
        resp = client.post(
            "/simulate",
            json={"model": Q_MODEL, "popsize": 500, "seed": 2, "method": "bernoulli"},
        )
        assert resp.status_code == 200
        entry = resp.json()["payload"]["tables"][0]
        assert entry["observed_total"] + entry["true_missing"] == 500
