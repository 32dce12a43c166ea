"""Wiener-chaos polynomial algebra, Malliavin operators and density-convergence diagnostics."""
from __future__ import annotations

__version__ = "0.1.0"

from .gausspoly import (
    ChaosVector,
    GaussPoly,
    SymbolicBudgetExceeded,
    chaos_project,
    evaluate,
    expectation,
    from_wick,
    hermite_eval,
    inner_product,
    to_wick,
    variance,
)
from .spectral import Divergent, SymmetricSpectrum

__all__ = [
    "ChaosVector",
    "Divergent",
    "GaussPoly",
    "SymbolicBudgetExceeded",
    "SymmetricSpectrum",
    "chaos_project",
    "evaluate",
    "expectation",
    "from_wick",
    "hermite_eval",
    "inner_product",
    "to_wick",
    "variance",
]
