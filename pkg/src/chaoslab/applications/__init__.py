"""Experiment families: second-chaos sums, Breuer-Major sums, GOE traces, Wishart matrices."""
from __future__ import annotations

from .breuer_major import BreuerMajorSampler, BreuerMajorSum, CorrelationModel, breuer_major, breuer_major_variance
from .families import (
    counterexample_family,
    default_profile,
    geometric_profile,
    hermite_coefficients,
    hermite_rank,
    second_chaos_family,
)
from .matrices import (
    EntrySpec,
    GOESampler,
    MatrixFunctionalSpec,
    WishartReport,
    WishartSampler,
    goe_functional,
    goe_index,
    goe_trace_poly,
    semicircle_moment,
    wishart_experiment,
    wishart_trajectory,
)

__all__ = [
    "BreuerMajorSampler",
    "BreuerMajorSum",
    "CorrelationModel",
    "EntrySpec",
    "GOESampler",
    "MatrixFunctionalSpec",
    "WishartReport",
    "WishartSampler",
    "breuer_major",
    "breuer_major_variance",
    "counterexample_family",
    "default_profile",
    "geometric_profile",
    "goe_functional",
    "goe_index",
    "goe_trace_poly",
    "hermite_coefficients",
    "hermite_rank",
    "second_chaos_family",
    "semicircle_moment",
    "wishart_experiment",
    "wishart_trajectory",
]
