"""Spectral hole burning, free-induction decay, pump rate equations and
spectral diffusion for rare-earth doped crystals, with a small
Levenberg-Marquardt fitting core and a batch command line."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, FitError, NumericalError, SchemaError
from .fitcore import Dataset, FitResult, Model, fit, least_squares
from .levelmodel import HyperfineModel, SelectionRule, cluster_summary, enumerate_transitions, predict_hole_pattern
from .holesim import BroadeningParams, fit_hole, hole_fwhm, synthesize_spectrum, t2_from_hole
from .fidsim import EnsembleSpec, fit_fid, synthesize_fid, t2_from_fid, tau_fid
from .ratedyn import PumpSchedule, RateParams, fit_lifetime, hole_area_series, integrate, steady_state
from .specdiff import CoherencePoint, SdParams, fit_sd, t_m

__all__ = [
    "ConfigError", "DomainError", "FitError", "NumericalError", "SchemaError",
    "Dataset", "FitResult", "Model", "fit", "least_squares",
    "HyperfineModel", "SelectionRule", "cluster_summary", "enumerate_transitions", "predict_hole_pattern",
    "BroadeningParams", "fit_hole", "hole_fwhm", "synthesize_spectrum", "t2_from_hole",
    "EnsembleSpec", "fit_fid", "synthesize_fid", "t2_from_fid", "tau_fid",
    "PumpSchedule", "RateParams", "fit_lifetime", "hole_area_series", "integrate", "steady_state",
    "CoherencePoint", "SdParams", "fit_sd", "t_m",
]
