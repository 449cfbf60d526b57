"""Wire protocol helpers: JSON schemas, base64 image codecs, mock wire server.

HTTP/1.1 with JSON bodies; images cross the wire as base64-encoded PNG
(single-channel PNG for binary masks). The JSON schemas under
``segsynth/backends/schemas`` pin the protocol for both the mock server and
any real sidecar.
"""

from __future__ import annotations

import base64
import json
import threading
from functools import lru_cache
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from io import BytesIO

import jsonschema
import numpy as np
from PIL import Image, UnidentifiedImageError

from ..core import RgbImage
from ..errors import BackendError, DecodeFailure
from .base import BackendSuite, RawDetection


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("segsynth.backends").joinpath(f"schemas/{name}.json").read_text()
    return json.loads(text)


def validate_payload(schema_name: str, payload) -> None:
    """Raise BackendError(protocol) if payload violates the named schema."""
    try:
        jsonschema.validate(payload, load_schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise BackendError(f"schema violation against {schema_name}: {exc.message}", kind="protocol") from exc


def image_to_b64(image: RgbImage) -> str:
    return base64.b64encode(image.to_png_bytes()).decode("ascii")


def b64_to_image(data: str) -> RgbImage:
    return RgbImage.from_bytes(base64.b64decode(data))


def mask_to_b64(mask: np.ndarray) -> str:
    """Boolean (H, W) array as base64 single-channel PNG (255 = foreground)."""
    img = Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L")
    buf = BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def b64_to_mask(data: str) -> np.ndarray:
    try:
        with Image.open(BytesIO(base64.b64decode(data))) as img:
            return np.asarray(img.convert("L")) >= 128
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeFailure(f"cannot decode mask payload: {exc}") from exc


def canonical_json(payload) -> str:
    """Stable serialization used for golden-fixture bit-exact comparison."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


# Endpoint -> (request schema, response schema); health has no request body.
ENDPOINTS = {
    "/v1/caption": ("caption_request", "caption_response"),
    "/v1/detect": ("detect_request", "detect_response"),
    "/v1/segment": ("segment_request", "segment_response"),
    "/v1/generate": ("generate_request", "generate_response"),
    "/v1/embed": ("embed_request", "embed_response"),
}


class MockWireServer:
    """Pure request handler mapping wire payloads onto a backend suite.

    ``handle`` is a function of (method, path, payload) only, which makes
    responses byte-reproducible for the golden fixtures.
    """

    def __init__(self, suite: BackendSuite):
        self.suite = suite

    def handle(self, method: str, path: str, payload: dict | None) -> tuple[int, dict]:
        try:
            if method == "GET" and path == "/v1/health":
                return 200, {"capabilities": self.suite.health()}
            if method != "POST" or path not in ENDPOINTS:
                return 404, {"error": f"no such endpoint {method} {path}"}
            request_schema, _ = ENDPOINTS[path]
            try:
                validate_payload(request_schema, payload)
            except BackendError as exc:
                return 400, {"error": str(exc)}
            return 200, self._dispatch(path, payload)
        except Exception as exc:  # noqa: BLE001 - wire boundary
            return 500, {"error": f"{type(exc).__name__}: {exc}"}

    def _dispatch(self, path: str, payload: dict) -> dict:
        if path == "/v1/caption":
            return {"caption": self.suite.caption(b64_to_image(payload["image"]))}
        if path == "/v1/detect":
            boxes = self.suite.detect(
                b64_to_image(payload["image"]), payload["classes"], payload["threshold"]
            )
            return {
                "boxes": [
                    {"xyxy": [float(v) for v in d.xyxy], "label": d.label, "score": float(d.score)}
                    for d in boxes
                ]
            }
        if path == "/v1/segment":
            masks = self.suite.segment(
                b64_to_image(payload["image"]),
                [tuple(b) for b in payload["boxes"]],
            )
            return {"masks": [mask_to_b64(m) for m in masks]}
        if path == "/v1/generate":
            image = self.suite.generate(
                control=b64_to_image(payload["control"]),
                prompt=payload["prompt"],
                seed=payload["seed"],
                steps=payload["steps"],
                guidance_scale=payload["guidance_scale"],
                width=payload["width"],
                height=payload["height"],
                negative_prompt=payload.get("negative_prompt", ""),
            )
            return {"image": image_to_b64(image)}
        if path == "/v1/embed":
            vector = self.suite.embed(b64_to_image(payload["image"]), payload["model"])
            return {"vector": [float(v) for v in vector]}
        raise AssertionError(f"unhandled path {path}")


class _WireRequestHandler(BaseHTTPRequestHandler):
    server_version = "segsynth-mock/0.1"

    def _respond(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _handle(self, method: str) -> None:
        payload = None
        if method == "POST":
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                self._respond(400, {"error": "request body is not valid JSON"})
                return
        status, response = self.server.wire.handle(method, self.path, payload)
        self._respond(status, response)

    def do_GET(self):
        self._handle("GET")

    def do_POST(self):
        self._handle("POST")

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


def serve_mock(suite: BackendSuite, host: str = "127.0.0.1", port: int = 0):
    """Serve a backend suite over HTTP in a daemon thread.

    Returns (server, base_url); call ``server.shutdown()`` when done.
    """
    server = ThreadingHTTPServer((host, port), _WireRequestHandler)
    server.wire = MockWireServer(suite)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://{host}:{server.server_address[1]}"
