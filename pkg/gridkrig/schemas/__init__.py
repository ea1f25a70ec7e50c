# Pydantic schemas
from .spectral import (
    CovarianceFamily, Profile, SumMode, MATERN_NU, CovarianceModel, GridDesign
)
from .theory import TailCut, QuadratureSpec, ErrorQuery, MinimaxQuery
from .simulate import Realization, PredictionSet, ExperimentCell, ErrorSamples
from .stats import TestMethod, TestResult, Summary
from .experiment import (
    Preset, ExperimentConfig, CSV_COLUMNS, ResultRow, CurveSeries, Provenance, ResultSet
)

__all__ = [
    # Spectral schemas
    "CovarianceFamily", "Profile", "SumMode", "MATERN_NU", "CovarianceModel", "GridDesign",

    # Theory schemas
    "TailCut", "QuadratureSpec", "ErrorQuery", "MinimaxQuery",

    # Simulation schemas
    "Realization", "PredictionSet", "ExperimentCell", "ErrorSamples",

    # Statistics schemas
    "TestMethod", "TestResult", "Summary",

    # Experiment schemas
    "Preset", "ExperimentConfig", "CSV_COLUMNS", "ResultRow", "CurveSeries", "Provenance", "ResultSet",
]
