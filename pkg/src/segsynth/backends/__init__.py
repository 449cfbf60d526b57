from .base import CAPABILITIES, BackendConfig, BackendSuite, RawDetection
from .http import HttpBackendSuite
from .mock import MockBackendSuite, MockFixtures

__all__ = [
    "CAPABILITIES",
    "BackendConfig",
    "BackendSuite",
    "RawDetection",
    "HttpBackendSuite",
    "MockBackendSuite",
    "MockFixtures",
]
