"""European put pricing under the discrete volatility model.

The log price at the horizon is S_n / sqrt(n) + drift with the drift carrying
the deterministic compensation sqrt(n) * E f(Y); prices come from plain Monte
Carlo, from quadrature against the skew-corrected signed density, and from a
Gaussian closed form used as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .edgeworth import EdgeworthApprox, Payoff, QuadConfig
from .errors import ParameterError, SampleSizeError
from .models import ModelConfig, estimate_centering, simulate_sums
from .moments import CumulantEstimate
from .rngkit import StreamKey

__all__ = [
    "PricingProblem", "put_payoff", "estimate_drift",
    "price_put_mc", "price_put_edgeworth", "price_put_gaussian_oracle",
]


@dataclass(frozen=True)
class PricingProblem:
    """Put option on a unit-initial-price asset with log price S_n/sqrt(n) + drift."""

    strike: float
    cfg: ModelConfig
    drift: float

    def __post_init__(self):
        if not self.strike > 0:
            raise ParameterError("strike must be > 0")


def put_payoff(strike: float, drift: float) -> Payoff:
    """max(K - e^{x + drift}, 0); Lipschitz in x with constant K, kink at ln K - drift."""
    kink = math.log(strike) - drift

    def fn(x: np.ndarray) -> np.ndarray:
        return np.maximum(strike - np.exp(x + drift), 0.0)

    return Payoff(fn=fn, kinks=(kink,), name=f"put_K{strike:g}")


def estimate_drift(cfg: ModelConfig, count: int, key: StreamKey) -> tuple[float, float]:
    """(drift, se): the log-price intercept sqrt(n) * E f(Y), estimated by MC."""
    est = estimate_centering(cfg, count, key)
    root = math.sqrt(cfg.n)
    return root * est.mu, root * est.se


def price_put_mc(prob: PricingProblem, count: int, key: StreamKey) -> tuple[float, float]:
    """Monte Carlo price and standard error over ``count`` replicates."""
    if count < 10 ** 4:
        raise SampleSizeError("put pricing needs count >= 10^4")
    sums = simulate_sums(prob.cfg, key, count)
    pay = np.maximum(prob.strike - np.exp(sums + prob.drift), 0.0)
    return float(pay.mean()), float(pay.std(ddof=1) / math.sqrt(count))


def price_put_edgeworth(cumulants: CumulantEstimate, drift: float, strike: float,
                        mode: str = "classical",
                        quad: QuadConfig = QuadConfig()) -> float:
    """Put price by quadrature against the one-term corrected signed density."""
    if not cumulants.s2 > 0:
        raise ParameterError("cumulants must have s2 > 0")
    approx = EdgeworthApprox(s=math.sqrt(cumulants.s2), k3=cumulants.k3, mode=mode)
    return approx.expectation(put_payoff(strike, drift), quad)


def price_put_gaussian_oracle(s: float, strike: float, drift: float) -> float:
    """Closed form E max(K - e^{Z + drift}, 0) for Z ~ Normal(0, s^2)."""
    if not (s > 0 and strike > 0):
        raise ParameterError("need s > 0 and strike > 0")
    d2 = (drift - math.log(strike)) / s
    d1 = d2 + s
    return (strike * float(ndtr(-d2))
            - math.exp(drift + 0.5 * s * s) * float(ndtr(-d1)))
