"""Invariant causal prediction for transformation models."""

from .basis import Bernstein, Discrete, Linear, LogLinear, parse_basis
from .data import Dataset, InputError, Response, read_csv_dataset
from .dgp import ScenarioConfig, oracle_icp, simulate_scenario
from .errdist import get_distribution
from .icp import IcpResult, run_icp
from .invtest import tram_cor, tram_gcm, tram_wald
from .tram import FAMILIES, FittedTram, TramSpec, fit

__all__ = [
    "Bernstein",
    "Discrete",
    "Linear",
    "LogLinear",
    "parse_basis",
    "Dataset",
    "InputError",
    "Response",
    "read_csv_dataset",
    "ScenarioConfig",
    "oracle_icp",
    "simulate_scenario",
    "get_distribution",
    "IcpResult",
    "run_icp",
    "tram_cor",
    "tram_gcm",
    "tram_wald",
    "FAMILIES",
    "FittedTram",
    "TramSpec",
    "fit",
]

__version__ = "0.1.0"
