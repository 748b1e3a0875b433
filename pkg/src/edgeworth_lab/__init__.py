"""Monte Carlo toolkit for skewness-corrected normal approximations of
weakly dependent volatility-model sums: model simulation, cumulant
estimation, the one-term corrected distribution function, a moment-matched
Gaussian-plus-Gamma surrogate law, distribution distances,
assumption diagnostics, and put pricing."""

__version__ = "0.1.0"

from . import (diagnostics, edgeworth, errors, metrics, models, moments,
               pricing, rngkit, surrogate)
from .models import ModelConfig, TransformSpec
from .rngkit import DistSpec, StreamKey

__all__ = [
    "__version__",
    "diagnostics", "edgeworth", "errors", "metrics", "models", "moments",
    "pricing", "rngkit", "surrogate",
    "ModelConfig", "TransformSpec", "DistSpec", "StreamKey",
]
