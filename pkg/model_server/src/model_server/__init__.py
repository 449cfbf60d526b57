"""Reference inference sidecar for the segsynth wire protocol."""

from .adapters import CAPABILITIES, PretrainedAdapters, StubAdapters, make_adapters
from .app import create_app, serve
from .config import ServerConfig, ServerConfigError

__version__ = "0.1.0"
