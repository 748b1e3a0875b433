"""Gaussian-plus-Gamma surrogate law matched to (variance, third cumulant).

The law is L = Z + sign * (G - E G) with Z ~ Normal(0, sigma_z2) and
G ~ Gamma(shape, rate) independent.  Under the shape/variance tie
``shape = s2 * rate`` the moment conditions

    sigma_z2 + shape / rate^2 = s2,      sign * 2 * shape / rate^3 = k3

solve in closed form: rate = sqrt(2 * s2 / |k3|), shape = s2 * rate,
sigma_z2 = s2 - s2 / rate.  Feasibility requires rate >= 1, i.e.
|k3| <= 2 * s2; at equality the gaussian part degenerates to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.special import gammainc, gammaincc, ndtr

from .errors import AccuracyError, InfeasibleSkewError, ParameterError
from .rngkit import StreamKey, derive_stream

__all__ = ["SurrogateLaw", "from_cumulants"]


@lru_cache(maxsize=128)
def _mixture_rule(shape: float, rate: float, sigma_z2: float, sign: int,
                  abs_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights over the gamma component, refined until a
    probe cdf grid is stable to abs_tol.  Cached per law so bulk cdf calls pay
    for the refinement once."""
    dist = stats.gamma(a=shape, scale=1.0 / rate)
    sigma_z = math.sqrt(sigma_z2)
    mean = shape / rate
    spread = math.sqrt(sigma_z2 + shape / rate ** 2)
    probe = np.linspace(-8.0 * spread, 8.0 * spread, 33)
    base_nodes, base_weights = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = 64
    while panels <= 8192:
        edges = dist.ppf(np.linspace(1e-12, 1.0 - 1e-12, panels + 1))
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        g = (mid[:, None] + half[:, None] * base_nodes[None, :]).ravel()
        w = (half[:, None] * base_weights[None, :]).ravel() * dist.pdf(g)
        z = (probe[:, None] - sign * (g - mean)[None, :]) / sigma_z
        out = ndtr(z) @ w
        if prev is not None and np.max(np.abs(out - prev)) < 0.5 * abs_tol:
            return g, w
        prev = out
        panels *= 2
    raise AccuracyError("surrogate cdf quadrature did not converge",
                        float(prev.mean()), float(np.max(np.abs(out - prev))))


@dataclass(frozen=True)
class SurrogateLaw:
    """Zero-mean Gaussian-plus-Gamma law; immutable once built."""

    sigma_z2: float
    gamma_shape: float | None
    gamma_rate: float | None
    sign: int                    # +1, -1, or 0 for the pure-gaussian case
    target_s2: float
    target_k3: float

    @property
    def gamma_mean(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.gamma_shape / self.gamma_rate

    def cumulants(self) -> tuple[float, float]:
        """(variance, third cumulant) in closed form."""
        if self.sign == 0:
            return self.sigma_z2, 0.0
        var = self.sigma_z2 + self.gamma_shape / self.gamma_rate ** 2
        k3 = self.sign * 2.0 * self.gamma_shape / self.gamma_rate ** 3
        return var, k3

    def sample(self, key: StreamKey, count: int) -> np.ndarray:
        """Exact draws (normal plus rejection-sampled gamma)."""
        stream = derive_stream(key)
        out = math.sqrt(self.sigma_z2) * stream.standard_normal(count)
        if self.sign != 0:
            g = stream.gamma(self.gamma_shape, 1.0 / self.gamma_rate, count)
            out = out + self.sign * (g - self.gamma_mean)
        return out

    def cdf(self, x, abs_tol: float = 1e-8) -> np.ndarray:
        """P(L <= x), vectorised; gamma mixture integrated by panel quadrature."""
        x0 = np.asarray(x, dtype=float)
        x = np.atleast_1d(x0)
        if self.sign == 0:
            return np.asarray(ndtr(x / math.sqrt(self.sigma_z2))).reshape(x0.shape)
        shape, rate, mean = self.gamma_shape, self.gamma_rate, self.gamma_mean
        if self.sigma_z2 == 0.0:
            # pure shifted gamma
            if self.sign > 0:
                out = np.where(x + mean > 0, gammainc(shape, rate * np.maximum(x + mean, 0.0)), 0.0)
            else:
                out = np.where(mean - x > 0, gammaincc(shape, rate * np.maximum(mean - x, 0.0)), 1.0)
            return out.reshape(x0.shape)
        sigma_z = math.sqrt(self.sigma_z2)
        g, w = _mixture_rule(shape, rate, self.sigma_z2, self.sign, abs_tol)
        out = np.empty(x.size)
        block = max(1, 8_000_000 // g.size)
        for lo in range(0, x.size, block):
            chunk = x[lo:lo + block]
            z = (chunk[:, None] - self.sign * (g - mean)[None, :]) / sigma_z
            out[lo:lo + block] = ndtr(z) @ w
        return out.reshape(x0.shape)


def from_cumulants(s2: float, k3: float) -> SurrogateLaw:
    """Surrogate law whose variance and third cumulant equal (s2, k3) exactly."""
    if not s2 > 0:
        raise ParameterError("variance s2 must be > 0")
    if k3 == 0.0:
        return SurrogateLaw(sigma_z2=float(s2), gamma_shape=None, gamma_rate=None,
                            sign=0, target_s2=float(s2), target_k3=0.0)
    rate = math.sqrt(2.0 * s2 / abs(k3))
    if rate < 1.0:
        raise InfeasibleSkewError(k3, 2.0 * s2)
    shape = s2 * rate
    sigma_z2 = s2 - s2 / rate
    return SurrogateLaw(
        sigma_z2=sigma_z2, gamma_shape=shape, gamma_rate=rate,
        sign=1 if k3 > 0 else -1, target_s2=float(s2), target_k3=float(k3))
