"""HTTP surface: FastAPI app exposing the five capabilities plus health.

Requests and responses are pinned by the JSON schemas shipped with the
segsynth client package, so the sidecar stays wire-compatible with the mock
backends. Models load in a background thread; every endpoint answers 503
until loading finishes.
"""

from __future__ import annotations

import logging
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from segsynth.backends.wire import ENDPOINTS, MockWireServer, validate_payload
from segsynth.errors import BackendError

from .adapters import CAPABILITIES, make_adapters
from .config import ServerConfig

logger = logging.getLogger(__name__)


class _AdapterState:
    """Adapters plus per-capability locks (one request per model at a time)."""

    def __init__(self):
        self.wire: MockWireServer | None = None
        self.error: str | None = None
        self.locks = {name: threading.Lock() for name in CAPABILITIES}


def create_app(config: ServerConfig | None = None, adapters_factory=None) -> FastAPI:
    """Build the service; adapters load in the background after startup.

    ``adapters_factory`` overrides adapter construction (used by tests to
    inject slow or failing loaders).
    """
    config = config or ServerConfig()
    factory = adapters_factory or (lambda: make_adapters(config))
    state = _AdapterState()

    def load():
        try:
            state.wire = MockWireServer(factory())
        except Exception as exc:  # noqa: BLE001 - loader boundary
            logger.exception("model loading failed")
            state.error = f"{type(exc).__name__}: {exc}"

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        threading.Thread(target=load, daemon=True).start()
        yield

    app = FastAPI(title="segsynth-model-server", lifespan=lifespan)
    app.state.adapters = state

    def loading_response():
        if state.error is not None:
            return JSONResponse({"error": f"model loading failed: {state.error}"}, status_code=500)
        return JSONResponse({"error": "models are still loading"}, status_code=503)

    @app.get("/v1/health")
    def health():
        if state.wire is None:
            return loading_response()
        return {"capabilities": state.wire.suite.health()}

    @app.post("/v1/{capability}")
    async def capability_endpoint(capability: str, request: Request):
        path = f"/v1/{capability}"
        if path not in ENDPOINTS:
            return JSONResponse({"error": f"no such endpoint POST {path}"}, status_code=404)
        if state.wire is None:
            return loading_response()
        try:
            payload = await request.json()
        except Exception:  # noqa: BLE001 - malformed body
            return JSONResponse({"error": "request body is not valid JSON"}, status_code=400)
        request_schema, _ = ENDPOINTS[path]
        try:
            validate_payload(request_schema, payload)
        except BackendError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        with state.locks[capability]:
            status, response = state.wire.handle("POST", path, payload)
        return JSONResponse(response, status_code=status)

    return app


def serve(config: ServerConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port)
