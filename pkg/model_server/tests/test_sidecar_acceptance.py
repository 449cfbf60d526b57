"""Sidecar acceptance: every golden request gets a schema-valid response and
health advertises all five capabilities."""

import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from segsynth.backends.wire import ENDPOINTS, validate_payload

from model_server import ServerConfig, create_app

GOLDEN_DIR = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "golden"
GOLDEN_FILES = sorted(GOLDEN_DIR.glob("*.json"))


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app(ServerConfig())) as client:
        deadline = time.monotonic() + 5.0
        while time.monotonic() < deadline:
            if client.get("/v1/health").status_code == 200:
                break
            time.sleep(0.01)
        yield client


def test_golden_corpus_complete():
    assert {p.stem for p in GOLDEN_FILES} == {
        "caption", "detect", "segment", "generate", "embed", "health",
    }
    print("\nPASS: golden request corpus present")


@pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
def test_golden_requests_get_schema_valid_responses(client, path):
    doc = json.loads(path.read_text())
    if doc["method"] == "GET":
        response = client.get(doc["path"])
    else:
        response = client.post(doc["path"], json=doc["request"])
    assert response.status_code == 200
    if doc["path"] == "/v1/health":
        validate_payload("health_response", response.json())
    else:
        _, response_schema = ENDPOINTS[doc["path"]]
        validate_payload(response_schema, response.json())
    print(f"\nPASS: {doc['path']} response validates against its schema")


def test_health_reports_all_five_capabilities(client):
    body = client.get("/v1/health").json()
    assert body["capabilities"] == ["caption", "detect", "segment", "generate", "embed"]
    print("\nPASS: /v1/health reports all five capabilities")
