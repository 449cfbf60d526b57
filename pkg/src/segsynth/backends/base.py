"""Backend abstraction over the five model capabilities.

A backend suite exposes ``caption``, ``detect``, ``segment``, ``generate``,
``embed`` and ``health``. Two implementations ship with the library: fully
deterministic mocks (``segsynth.backends.mock``) and an HTTP client speaking
the wire protocol (``segsynth.backends.http``).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from ..core import RgbImage

CAPABILITIES = ("caption", "detect", "segment", "generate", "embed")


@dataclass(frozen=True)
class BackendConfig:
    base_url: str = ""
    timeout_s: float = 30.0
    max_retries: int = 2
    backoff_initial_ms: float = 100.0
    backoff_multiplier: float = 2.0
    max_in_flight: int = 4
    bearer_token: str | None = None

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class RawDetection:
    """Detector output before taxonomy canonicalization."""

    xyxy: tuple[float, float, float, float]
    label: str
    score: float


class BackendSuite(abc.ABC):
    """Interface every backend implementation satisfies."""

    @abc.abstractmethod
    def caption(self, image: RgbImage) -> str: ...

    @abc.abstractmethod
    def detect(self, image: RgbImage, class_names: list[str], threshold: float) -> list[RawDetection]: ...

    @abc.abstractmethod
    def segment(self, image: RgbImage, boxes: list[tuple[float, float, float, float]]) -> list[np.ndarray]:
        """One full-image boolean mask per box, same order."""

    @abc.abstractmethod
    def generate(
        self,
        control: RgbImage,
        prompt: str,
        seed: int,
        steps: int,
        guidance_scale: float,
        width: int,
        height: int,
        negative_prompt: str = "",
    ) -> RgbImage: ...

    @abc.abstractmethod
    def embed(self, image: RgbImage, model_tag: str = "default") -> np.ndarray: ...

    @abc.abstractmethod
    def health(self) -> list[str]:
        """List of served capability names."""
