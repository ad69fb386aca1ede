"""Bias against and bias in favor for inferences based on relative belief ratios."""

from .binomial import BetaBinomial
from .design import DesignSpec, find_min_n
from .evidence import EvidenceGrid, Verdict, classify_evidence, plausible_region, relative_belief_estimate, strength
from .locnorm import LocationNormal, PredictionSetup
from .mc import BiasReport, MCEstimate, estimate_probability, stream
from .oracle import FiniteModel, verify_suite
from .quantile import NormalGammaQuantile
from .regpred import RegressionPredictor

__all__ = [
    "BetaBinomial",
    "BiasReport",
    "DesignSpec",
    "EvidenceGrid",
    "FiniteModel",
    "LocationNormal",
    "MCEstimate",
    "NormalGammaQuantile",
    "PredictionSetup",
    "RegressionPredictor",
    "Verdict",
    "classify_evidence",
    "estimate_probability",
    "find_min_n",
    "plausible_region",
    "relative_belief_estimate",
    "stream",
    "verify_suite",
]
__version__ = "0.1.0"
