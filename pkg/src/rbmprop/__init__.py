"""Propriety diagnostics and Bayesian fitting for small restricted Boltzmann
machines, computed by exact enumeration of every joint state."""

__version__ = "0.1.0"

from .core import (Coding, Dataset, EnumerationCapError, ExactDistribution,
                   ModelShape, ShapeMismatchError, ThetaVector,
                   exact_distribution, mean_statistic, neg_potential,
                   partition_log, sample_visibles_exact, sufficient_statistic)
from .diagnostics import (HullEstimateSpec, ProprietyReport, degeneracy_epsilon,
                          diagnose, hull_distance)
from .fitters import (METHODS, FitConfig, PosteriorChain, TrickPrior,
                      TruncNormalPrior, fit)
from .grid import GridSpec, run_grid_study
from .mcmc import ess_block_means, acf, total_variation
from .presets import table1_theta

__all__ = [
    "Coding", "Dataset", "EnumerationCapError", "ExactDistribution", "ModelShape",
    "ShapeMismatchError", "ThetaVector", "exact_distribution", "mean_statistic",
    "neg_potential", "partition_log", "sample_visibles_exact",
    "sufficient_statistic", "HullEstimateSpec", "ProprietyReport",
    "degeneracy_epsilon", "diagnose", "hull_distance", "METHODS", "FitConfig",
    "PosteriorChain", "TrickPrior", "TruncNormalPrior", "fit", "GridSpec",
    "run_grid_study", "ess_block_means", "acf", "total_variation", "table1_theta",
]
