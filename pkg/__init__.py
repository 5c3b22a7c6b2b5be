"""rieszlab: Riesz-basis criteria and spectral diagnostics for perturbed diagonal operators."""

__version__ = "0.1.0"
__author__ = "rieszlab Project"
__description__ = "Sequence criteria, eigenvalue localization and Riesz projections for T = A + V"

from . import config
from . import sequence_models
from . import criteria
from . import operator_lab
from . import spectral_analysis
from . import scenarios
from . import utils
from . import cache
from . import performance
from . import cli

__all__ = [
    "config",
    "sequence_models",
    "criteria",
    "operator_lab",
    "spectral_analysis",
    "scenarios",
    "utils",
    "cache",
    "performance",
    "cli",
]
