"""Degeneracy points, exceptional points and coalescing states of non-Hermitian lattices."""

from __future__ import annotations

__version__ = "0.1.0"

from .numkit import EigenSolverError, EigenSystem, SparseOperator, eig_full, eigvals, expm
from .models import (
    EP_COUPLING,
    FAMILIES,
    INFINITE,
    InvalidSpecError,
    ModelPair,
    ModelSpec,
    SiteMap,
    StateVector,
    build_model,
)
from .spectra import DP, EP, SIMPLE, Cluster, SpectralReport, classify, ep_scan, ladder_gap_closing
from .theorem import FAILS, HOLDS, HOLDS_ASYMPTOTICALLY, TheoremReport, check_transition, suggest_hops
from .dynamics import EvolutionTrace, PropagationConfig, evolve

__all__ = [
    "__version__", "EigenSolverError", "EigenSystem", "SparseOperator", "eig_full", "eigvals", "expm",
    "EP_COUPLING", "FAMILIES", "INFINITE", "InvalidSpecError", "ModelPair", "ModelSpec", "SiteMap",
    "StateVector", "build_model", "DP", "EP", "SIMPLE", "Cluster", "SpectralReport", "classify",
    "ep_scan", "ladder_gap_closing", "FAILS", "HOLDS", "HOLDS_ASYMPTOTICALLY", "TheoremReport",
    "check_transition", "suggest_hops", "EvolutionTrace", "PropagationConfig", "evolve",
]
