"""Exception types shared across the library."""

from __future__ import annotations


class ParameterError(ValueError):
    """A parameter is outside its admissible domain."""


class ContractError(ValueError):
    """An input violates a documented call contract (e.g. unsorted sample)."""


class SampleSizeError(ValueError):
    """Too few replicates / observations for the requested estimate."""


class CapacityError(ValueError):
    """An exact enumeration would exceed the configured state-space budget."""


class CoverageError(ValueError):
    """An integration range does not cover the required support."""


class MomentBudgetError(ValueError):
    """The configured innovation law lacks the moments an estimate needs."""


class DivergenceError(RuntimeError):
    """A simulated path became non-finite.

    ``index`` is the first path position at which the state blew up.
    """

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (first bad index {index})")
        self.index = index


class AccuracyError(RuntimeError):
    """A quadrature did not reach the requested tolerance.

    ``estimate`` carries the best value achieved so callers can inspect it.
    """

    def __init__(self, message: str, estimate: float, achieved_tol: float):
        super().__init__(f"{message} (achieved tol {achieved_tol:.3g})")
        self.estimate = estimate
        self.achieved_tol = achieved_tol


class InfeasibleSkewError(ValueError):
    """Requested third cumulant cannot be represented by the surrogate law.

    ``max_abs_k3`` is the largest |third cumulant| representable at the
    requested variance.
    """

    def __init__(self, k3: float, max_abs_k3: float):
        super().__init__(
            f"third cumulant {k3!r} infeasible: |k3| must be <= {max_abs_k3!r} "
            "at this variance"
        )
        self.max_abs_k3 = max_abs_k3
