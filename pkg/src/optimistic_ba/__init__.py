"""Optimistic Byzantine agreement with a linear synchronous path and an
asynchronous fallback, plus a deterministic simulator to exercise it."""

from .party import Party, ProtocolParams, create, decision, step
from .simnet import CapExceeded, ConfigError, RunConfig, run
from .state import ExternalValidity, Value

__all__ = [
    "CapExceeded", "ConfigError", "ExternalValidity", "Party", "ProtocolParams",
    "RunConfig", "Value", "create", "decision", "run", "step",
]
