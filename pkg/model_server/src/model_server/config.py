"""Server configuration: checkpoint identifiers and adapter selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class ServerConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServerConfig:
    adapters: str = "stub"  # "stub" | "pretrained"
    caption_checkpoint: str = "Salesforce/blip-image-captioning-base"
    detect_checkpoint: str = "google/owlvit-base-patch32"
    segment_checkpoint: str = "facebook/sam-vit-huge"
    generate_checkpoint: str = "lllyasviel/sd-controlnet-seg"
    generate_base_checkpoint: str = "runwayml/stable-diffusion-v1-5"
    embed_checkpoint: str = "facebook/dinov2-large"
    device: str = "cpu"
    host: str = "127.0.0.1"
    port: int = 8731

    def __post_init__(self):
        if self.adapters not in ("stub", "pretrained"):
            raise ServerConfigError(
                f"adapters must be stub|pretrained, got {self.adapters!r}"
            )
        if not 0 <= self.port <= 65535:
            raise ServerConfigError(f"port {self.port} out of range")

    @classmethod
    def from_json_file(cls, path, **overrides) -> "ServerConfig":
        doc = json.loads(Path(path).read_text())
        doc.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ServerConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)
