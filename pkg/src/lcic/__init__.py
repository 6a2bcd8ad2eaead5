"""Log-concave independent components (LC-IC) density estimation."""
from .estimator import ProductEstimate, fit_lcic, fit_oracle, log_density, sample_estimate
from .logconcave import LogConcave1D, WeightedPoints, fit_logconcave_1d
from .mixture import MixtureModel, assign_clusters, clustering_accuracy, em_fit
from .rng import RngState
from .unmixing import align_frames, fourier_pca_unmixing, pca_unmixing

__version__ = "0.1.0"

__all__ = [
    "LogConcave1D", "MixtureModel", "ProductEstimate", "RngState", "WeightedPoints",
    "align_frames", "assign_clusters", "clustering_accuracy", "em_fit", "fit_lcic",
    "fit_logconcave_1d", "fit_oracle", "fourier_pca_unmixing", "log_density",
    "pca_unmixing", "sample_estimate",
]
