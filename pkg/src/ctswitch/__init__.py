"""Sequential Bayes coding for context tree sources with change points."""

from .ctm import (
    Alphabet,
    ContextTreeModel,
    DirichletPrior,
    EnumerationTooLarge,
    NodeHyperPrior,
    ThetaParams,
    entropy_rate,
    enumerate_models,
    model_prior,
)
from .switcher import ConfigError, SwitchConfig, Switcher, make_switcher

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "ConfigError",
    "ContextTreeModel",
    "DirichletPrior",
    "EnumerationTooLarge",
    "NodeHyperPrior",
    "SwitchConfig",
    "Switcher",
    "ThetaParams",
    "entropy_rate",
    "enumerate_models",
    "make_switcher",
    "model_prior",
]
