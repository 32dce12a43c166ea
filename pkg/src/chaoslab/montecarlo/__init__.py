"""Reproducible sampling of Gaussian functionals and the statistical estimators built on it."""
from __future__ import annotations

from .density import (
    DensityEstimate,
    density_distance,
    entropy_fisher,
    kde_at,
    kde_density,
    nadaraya_watson,
    phi_derivative,
    total_variation,
)
from .estimators import (
    NegativeMomentEstimate,
    SteinDiscrepancy,
    block_bootstrap_se,
    distribution_distances,
    estimate_moments,
    estimate_negative_moment,
    hill_tail_index,
    standardized_delta_from_gamma,
    stein_discrepancy,
)
from .sampling import PolySampler, SampleBatch, Sampler, ScoreSampler, sample_batch

__all__ = [
    "DensityEstimate",
    "NegativeMomentEstimate",
    "PolySampler",
    "SampleBatch",
    "Sampler",
    "ScoreSampler",
    "SteinDiscrepancy",
    "block_bootstrap_se",
    "density_distance",
    "distribution_distances",
    "entropy_fisher",
    "estimate_moments",
    "estimate_negative_moment",
    "hill_tail_index",
    "kde_at",
    "kde_density",
    "nadaraya_watson",
    "phi_derivative",
    "sample_batch",
    "standardized_delta_from_gamma",
    "stein_discrepancy",
    "total_variation",
]
