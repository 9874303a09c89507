"""Cued-recognition authentication: engine, credential store, service and harness."""

__version__ = "1.0.0"

from .config import KdfParams, LockoutPolicy, SchemeConfig, ServiceConfig
from .scheme import (
    AssignedCredential,
    AuthSession,
    KeyMapping,
    SchemeEngine,
    assign_credential,
    next_portfolio,
    sample_key_mapping,
    theoretical_entropy,
)

__all__ = [
    "AssignedCredential",
    "AuthSession",
    "KdfParams",
    "KeyMapping",
    "LockoutPolicy",
    "SchemeConfig",
    "SchemeEngine",
    "ServiceConfig",
    "assign_credential",
    "next_portfolio",
    "sample_key_mapping",
    "theoretical_entropy",
]
