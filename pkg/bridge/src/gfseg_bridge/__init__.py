"""Model adapter: dense feature extraction and point-prompted mask serving
over GFSB containers and a file-based subprocess protocol."""

from .backends import BridgeError, StubBackend, TorchScriptBackend, make_backend
from .config import BridgeConfig
from .container import Tensor, read_map, write_container

__all__ = [
    "BridgeConfig",
    "BridgeError",
    "StubBackend",
    "TorchScriptBackend",
    "Tensor",
    "make_backend",
    "read_map",
    "write_container",
]
