import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from segsynth import RgbImage
from segsynth.backends import BackendConfig, HttpBackendSuite, MockBackendSuite, MockFixtures
from segsynth.backends.wire import (
    ENDPOINTS,
    MockWireServer,
    b64_to_mask,
    canonical_json,
    image_to_b64,
    mask_to_b64,
    serve_mock,
    validate_payload,
)
from segsynth.errors import BackendError

from .wire_reference import GOLDEN_DIR, reference_image, reference_requests, reference_suite

GOLDEN_FILES = sorted(GOLDEN_DIR.glob("*.json"))


class TestMockDeterminism:
    def test_generate_fixed_seed_identical(self, mock_suite):
        control = reference_image()
        a = mock_suite.generate(control, "p", seed=9, steps=50, guidance_scale=7.5, width=12, height=10)
        b = mock_suite.generate(control, "p", seed=9, steps=50, guidance_scale=7.5, width=12, height=10)
        assert a.to_png_bytes() == b.to_png_bytes()

    def test_generate_different_seed_differs(self, mock_suite):
        control = reference_image()
        a = mock_suite.generate(control, "p", seed=9, steps=50, guidance_scale=7.5, width=12, height=10)
        b = mock_suite.generate(control, "p", seed=10, steps=50, guidance_scale=7.5, width=12, height=10)
        assert a != b

    def test_embed_is_unit_norm(self, mock_suite):
        vec = mock_suite.embed(reference_image())
        assert vec.shape == (64,)
        assert np.linalg.norm(vec) == pytest.approx(1.0)

    def test_health_lists_all_capabilities(self, mock_suite):
        assert mock_suite.health() == ["caption", "detect", "segment", "generate", "embed"]


class TestWireRoundTrips:
    def test_image_b64_round_trip(self):
        image = reference_image()
        assert (
            RgbImage.from_bytes(__import__("base64").b64decode(image_to_b64(image))) == image
        )

    def test_mask_b64_round_trip(self):
        mask = np.zeros((6, 9), dtype=bool)
        mask[2:4, 3:7] = True
        assert np.array_equal(b64_to_mask(mask_to_b64(mask)), mask)


class TestGoldenFixtures:
    def test_fixture_files_exist(self):
        names = {p.stem for p in GOLDEN_FILES}
        assert names == {"caption", "detect", "segment", "generate", "embed", "health"}

    @pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
    def test_mock_server_matches_golden_bit_exactly(self, path):
        doc = json.loads(path.read_text())
        server = MockWireServer(reference_suite())
        status, response = server.handle(doc["method"], doc["path"], doc["request"])
        assert status == 200
        assert canonical_json(response) == canonical_json(doc["response"])

    @pytest.mark.parametrize("path", GOLDEN_FILES, ids=lambda p: p.stem)
    def test_golden_payloads_validate_against_schemas(self, path):
        doc = json.loads(path.read_text())
        if doc["path"] == "/v1/health":
            validate_payload("health_response", doc["response"])
            return
        request_schema, response_schema = ENDPOINTS[doc["path"]]
        validate_payload(request_schema, doc["request"])
        validate_payload(response_schema, doc["response"])


class TestMockWireServer:
    def test_schema_violation_is_400(self):
        server = MockWireServer(reference_suite())
        status, body = server.handle("POST", "/v1/detect", {"image": "xx"})
        assert status == 400 and "error" in body

    def test_unknown_endpoint_404(self):
        server = MockWireServer(reference_suite())
        status, _ = server.handle("POST", "/v1/nope", {})
        assert status == 404


@pytest.fixture
def live_mock():
    server, base_url = serve_mock(reference_suite())
    yield base_url
    server.shutdown()


class TestHttpBackendSuite:
    def test_full_capability_round_trip(self, live_mock):
        client = HttpBackendSuite(BackendConfig(base_url=live_mock))
        image = reference_image()
        assert client.caption(image) == "a red bus parked next to a white bus"
        boxes = client.detect(image, ["bus"], 0.35)
        assert len(boxes) == 1 and boxes[0].label == "bus"
        masks = client.segment(image, [boxes[0].xyxy])
        assert masks[0].shape == (10, 12)
        generated = client.generate(image, "p", seed=5, steps=2, guidance_scale=7.5, width=12, height=10)
        local = reference_suite().generate(image, "p", seed=5, steps=2, guidance_scale=7.5, width=12, height=10)
        assert generated == local
        vector = client.embed(image)
        assert vector.shape == (64,)
        assert client.health() == ["caption", "detect", "segment", "generate", "embed"]

    def test_bad_request_is_permanent(self, live_mock):
        client = HttpBackendSuite(BackendConfig(base_url=live_mock, max_retries=0))
        with pytest.raises(BackendError) as err:
            client._request("POST", "/v1/detect", {"image": "zz"}, "detect_response")
        assert err.value.kind == "permanent"

    def test_retry_then_success(self):
        attempts = {"n": 0}

        class FlakyHandler(BaseHTTPRequestHandler):
            def do_POST(self):
                attempts["n"] += 1
                length = int(self.headers.get("Content-Length", "0"))
                self.rfile.read(length)
                if attempts["n"] <= 2:
                    self.send_response(500)
                    self.end_headers()
                    return
                body = json.dumps({"caption": "ok"}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), FlakyHandler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}"
            client = HttpBackendSuite(
                BackendConfig(base_url=url, max_retries=3, backoff_initial_ms=1)
            )
            assert client.caption(reference_image()) == "ok"
            assert attempts["n"] == 3
        finally:
            server.shutdown()

    def test_retries_exhausted(self):
        class AlwaysDown(BaseHTTPRequestHandler):
            def do_POST(self):
                self.send_response(503)
                self.end_headers()

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), AlwaysDown)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}"
            client = HttpBackendSuite(
                BackendConfig(base_url=url, max_retries=2, backoff_initial_ms=1)
            )
            with pytest.raises(BackendError) as err:
                client.caption(reference_image())
            assert err.value.kind == "transient"
        finally:
            server.shutdown()

    def test_malformed_json_is_protocol_error_without_retry(self):
        attempts = {"n": 0}

        class GarbageHandler(BaseHTTPRequestHandler):
            def do_POST(self):
                attempts["n"] += 1
                body = b"not json {"
                self.send_response(200)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), GarbageHandler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}"
            client = HttpBackendSuite(
                BackendConfig(base_url=url, max_retries=3, backoff_initial_ms=1)
            )
            with pytest.raises(BackendError) as err:
                client.caption(reference_image())
            assert err.value.kind == "protocol"
            assert attempts["n"] == 1
        finally:
            server.shutdown()

    def test_in_flight_bound(self):
        in_flight = {"now": 0, "max": 0}
        lock = threading.Lock()

        class SlowEmbed(MockBackendSuite):
            def embed(self, image, model_tag="default"):
                with lock:
                    in_flight["now"] += 1
                    in_flight["max"] = max(in_flight["max"], in_flight["now"])
                time.sleep(0.03)
                try:
                    return super().embed(image, model_tag)
                finally:
                    with lock:
                        in_flight["now"] -= 1

        server, url = serve_mock(SlowEmbed())
        try:
            client = HttpBackendSuite(BackendConfig(base_url=url, max_in_flight=2))
            image = reference_image()
            threads = [threading.Thread(target=client.embed, args=(image,)) for _ in range(8)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert in_flight["max"] <= 2
        finally:
            server.shutdown()
