"""HTTP client for the backend wire protocol.

Transient failures (network errors, timeouts, 5xx) are retried with
exponential backoff up to ``max_retries``; protocol failures (malformed JSON,
schema violations, 4xx) are not. A per-suite semaphore bounds concurrent
in-flight requests.
"""

from __future__ import annotations

import logging
import threading
import time

import numpy as np
import requests

from ..core import RgbImage
from ..errors import BackendError, BackendTimeout
from .base import BackendConfig, BackendSuite, RawDetection
from . import wire

logger = logging.getLogger(__name__)


class HttpBackendSuite(BackendSuite):
    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        if not config.base_url:
            raise ValueError("base_url required for HTTP backends")
        self.config = config
        self._session = session or requests.Session()
        self._semaphore = threading.Semaphore(config.max_in_flight)

    # -- transport ----------------------------------------------------------
    def _request(self, method: str, path: str, payload: dict | None, response_schema: str) -> dict:
        url = self.config.base_url.rstrip("/") + path
        headers = {}
        if self.config.bearer_token:
            headers["Authorization"] = f"Bearer {self.config.bearer_token}"
        delay = self.config.backoff_initial_ms / 1000.0
        attempts = self.config.max_retries + 1
        last_error: BackendError | None = None
        for attempt in range(1, attempts + 1):
            try:
                with self._semaphore:
                    response = self._session.request(
                        method, url, json=payload, headers=headers, timeout=self.config.timeout_s
                    )
            except requests.Timeout as exc:
                last_error = BackendTimeout(f"{method} {path} timed out: {exc}")
            except requests.RequestException as exc:
                last_error = BackendError(f"{method} {path} failed: {exc}", kind="transient")
            else:
                if response.status_code >= 500:
                    last_error = BackendError(
                        f"{method} {path} returned {response.status_code}", kind="transient"
                    )
                elif response.status_code >= 400:
                    raise BackendError(
                        f"{method} {path} returned {response.status_code}: {response.text[:200]}",
                        kind="permanent",
                    )
                else:
                    try:
                        body = response.json()
                    except ValueError as exc:
                        raise BackendError(
                            f"{method} {path}: response is not JSON", kind="protocol"
                        ) from exc
                    wire.validate_payload(response_schema, body)
                    return body
            logger.warning("attempt %d/%d for %s failed: %s", attempt, attempts, path, last_error)
            if attempt < attempts:
                time.sleep(delay)
                delay *= self.config.backoff_multiplier
        raise last_error

    # -- capabilities ---------------------------------------------------------
    def caption(self, image: RgbImage) -> str:
        body = self._request("POST", "/v1/caption", {"image": wire.image_to_b64(image)}, "caption_response")
        return body["caption"]

    def detect(self, image: RgbImage, class_names, threshold: float) -> list[RawDetection]:
        body = self._request(
            "POST",
            "/v1/detect",
            {"image": wire.image_to_b64(image), "classes": list(class_names), "threshold": float(threshold)},
            "detect_response",
        )
        return [
            RawDetection(xyxy=tuple(b["xyxy"]), label=b["label"], score=b["score"])
            for b in body["boxes"]
        ]

    def segment(self, image: RgbImage, boxes) -> list[np.ndarray]:
        body = self._request(
            "POST",
            "/v1/segment",
            {"image": wire.image_to_b64(image), "boxes": [[float(v) for v in b] for b in boxes]},
            "segment_response",
        )
        return [wire.b64_to_mask(m) for m in body["masks"]]

    def generate(self, control: RgbImage, prompt: str, seed: int, steps: int,
                 guidance_scale: float, width: int, height: int,
                 negative_prompt: str = "") -> RgbImage:
        body = self._request(
            "POST",
            "/v1/generate",
            {
                "control": wire.image_to_b64(control),
                "prompt": prompt,
                "negative_prompt": negative_prompt,
                "seed": int(seed),
                "steps": int(steps),
                "guidance_scale": float(guidance_scale),
                "width": int(width),
                "height": int(height),
            },
            "generate_response",
        )
        return wire.b64_to_image(body["image"])

    def embed(self, image: RgbImage, model_tag: str = "default") -> np.ndarray:
        body = self._request(
            "POST", "/v1/embed", {"image": wire.image_to_b64(image), "model": model_tag}, "embed_response"
        )
        return np.asarray(body["vector"], dtype=np.float64)

    def health(self) -> list[str]:
        body = self._request("GET", "/v1/health", None, "health_response")
        return body["capabilities"]
