"""Quantum Computer Condition toolkit.

Channels, superoperator norms, Lindblad dynamics, the QCC decision
procedure and the quantum-to-classical voting pipeline.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .channels import LinkingMapPair, Povm, QuantumChannel
from .kernels import BACKEND
from .norms import NormResult, OptBudget, SuperoperatorDelta, diamond_norm, so_norm_sa
from .verifier import QccInstance, QccReport, qcc_alpha

__all__ = [
    "BACKEND",
    "LinkingMapPair",
    "NormResult",
    "OptBudget",
    "Povm",
    "QccInstance",
    "QccReport",
    "QuantumChannel",
    "SuperoperatorDelta",
    "diamond_norm",
    "qcc_alpha",
    "so_norm_sa",
]
