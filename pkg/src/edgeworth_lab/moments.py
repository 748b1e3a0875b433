"""Cumulants of the normalised sum: replicate estimators and exact oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError, SampleSizeError
from .rngkit import DistSpec

__all__ = [
    "CumulantEstimate", "LongRunVariance",
    "estimate_cumulants", "exact_cumulants_discrete", "longrun_variance",
]

ENUMERATION_BUDGET = 10 ** 7


@dataclass(frozen=True)
class CumulantEstimate:
    """Second and third cumulants of S_n / sqrt(n) with replicate-level errors.

    ``s2`` estimates E S_n^2 / n and ``k3`` estimates E S_n^3 / n^(3/2); both
    are plain replicate means, so the standard errors are exact Monte Carlo
    errors.  ``degenerate`` marks an all-equal input (s2 may be 0, which
    downstream consumers must not silently accept).
    """

    s2: float
    k3: float
    se_s2: float
    se_k3: float
    count: int
    n: int
    lrv: float | None = None
    degenerate: bool = False

    def ok_for_expansion(self) -> bool:
        return not self.degenerate and self.s2 > 0.0


def estimate_cumulants(sums: np.ndarray, n: int) -> CumulantEstimate:
    """Estimate cumulants from independent replicates of S_n / sqrt(n)."""
    sums = np.asarray(sums, dtype=float)
    if sums.ndim != 1:
        raise ParameterError("sums must be a 1-D replicate vector")
    count = sums.size
    if count < 100:
        raise SampleSizeError(f"need at least 100 replicates, got {count}")
    t2 = sums ** 2
    t3 = sums ** 3
    degenerate = bool(np.all(sums == sums[0]))
    if degenerate:
        se_s2 = se_k3 = 0.0
    else:
        se_s2 = float(t2.std(ddof=1) / math.sqrt(count))
        se_k3 = float(t3.std(ddof=1) / math.sqrt(count))
    return CumulantEstimate(
        s2=float(t2.mean()), k3=float(t3.mean()),
        se_s2=se_s2, se_k3=se_k3, count=count, n=int(n),
        degenerate=degenerate)


def exact_cumulants_discrete(spec: DistSpec, n: int) -> tuple[float, float]:
    """Exact (s2, k3) for an i.i.d. sum of a small discrete law.

    Enumerates every outcome tuple with its probability (streamed in blocks),
    which keeps this an oracle independent of any sampling machinery.
    """
    if not spec.is_discrete:
        raise ParameterError("exact enumeration needs a discrete law")
    if n < 1:
        raise ParameterError("n must be >= 1")
    vals, probs = spec.atoms()
    k = vals.size
    if k > 4:
        raise CapacityError("enumeration supports at most 4 atoms")
    total = k ** n
    if total > ENUMERATION_BUDGET:
        raise CapacityError(
            f"state space {k}^{n} = {total} exceeds budget {ENUMERATION_BUDGET}")
    sum2 = 0.0
    sum3 = 0.0
    block = 1 << 20
    for lo in range(0, total, block):
        idx = np.arange(lo, min(lo + block, total), dtype=np.int64)
        s = np.zeros(idx.size)
        pr = np.ones(idx.size)
        rem = idx
        for _ in range(n):
            rem, digit = np.divmod(rem, k)
            s += vals[digit]
            pr *= probs[digit]
        sum2 += float(np.dot(pr, s ** 2))
        sum3 += float(np.dot(pr, s ** 3))
    return sum2 / n, sum3 / n ** 1.5


@dataclass(frozen=True)
class LongRunVariance:
    """Lag-window estimate of the summed autocovariance.

    A negative value is possible for short paths and is reported as-is with
    ``negative`` set rather than clamped.
    """

    value: float
    bandwidth: int
    negative: bool


def longrun_variance(path: np.ndarray, bandwidth: int) -> LongRunVariance:
    """Bartlett lag-window estimate of sum_k E X_0 X_k."""
    path = np.asarray(path, dtype=float)
    t = path.size
    if not 0 < bandwidth < t / 4:
        raise ParameterError("bandwidth must satisfy 0 < B < len(path)/4")
    centred = path - path.mean()
    value = float(np.dot(centred, centred) / t)
    for k in range(1, bandwidth + 1):
        gamma_k = float(np.dot(centred[:-k], centred[k:]) / t)
        value += 2.0 * (1.0 - k / (bandwidth + 1.0)) * gamma_k
    return LongRunVariance(value=value, bandwidth=bandwidth, negative=value < 0.0)
