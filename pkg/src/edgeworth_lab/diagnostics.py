"""Numeric checks of the modelling assumptions behind the expansion results:
dependence decay of coupled paths, stationarity coefficients of the volatility
recursions, Hoelder propagation of dependence, non-lattice behaviour of the
conditional law, and the almost-martingale property of compensated prices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ParameterError, SampleSizeError
from .models import (CHUNK, GarchSpec, IteratedSpec, LinearSpec, ModelConfig,
                     VolterraSpec, simulate_coupled_paths, stationary_vol_draws)
from .rngkit import DistSpec, StreamKey, derive_stream, sample

__all__ = [
    "DependenceProfile", "LogLinearFit", "dependence_profile",
    "GammaC", "gamma_c", "Contraction", "contraction_coefficient",
    "holder_dependence_bound", "NonlatticeCheck", "nonlattice_check",
    "MartingaleResidual", "martingale_residual",
    "linear_kernel_check", "volterra_kernel_check",
]


# ---------------------------------------------------------------------------
# dependence decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogLinearFit:
    slope: float
    intercept: float
    r2: float
    lags_used: tuple[int, ...]


@dataclass(frozen=True)
class DependenceProfile:
    """Coupled-path dependence norms per lag with a log-linear decay fit.

    ``lambda_hat[i]`` estimates ||X_l - X~_l||_p at lag ``lags[i]``, where the
    coupled twin shares the ``l + 1`` most recent innovations.  ``fit`` is
    None when every qualifying norm is statistically zero.
    """

    p: float
    lags: tuple[int, ...]
    lambda_hat: np.ndarray
    se: np.ndarray
    count: int
    fit: LogLinearFit | None
    all_zero: bool


def dependence_profile(cfg: ModelConfig, p: float, lags, count: int,
                       key: StreamKey) -> DependenceProfile:
    """Estimate the coupled-path dependence profile over ``lags``.

    Each replicate simulates one base/coupled path pair from a single derived
    key (shared innovations inside the observation window, independent history)
    and reads off every requested lag from the same pair.
    """
    if p < 1:
        raise ParameterError("moment exponent p must be >= 1")
    lags = tuple(int(l) for l in lags)
    if not lags or min(lags) < 0:
        raise ParameterError("lags must be non-negative")
    if count < 1000:
        raise SampleSizeError("dependence profile needs count >= 1000")
    run_cfg = cfg.with_n(max(lags) + 1)
    cols = np.asarray(lags)
    s1 = np.zeros(len(lags))
    s2 = np.zeros(len(lags))
    for lo in range(0, count, CHUNK):
        hi = min(lo + CHUNK, count)
        x, x_c = simulate_coupled_paths(run_cfg, 1, "star",
                                        [key.child(r) for r in range(lo, hi)])
        d = np.abs(x[:, cols] - x_c[:, cols]) ** p
        s1 += d.sum(axis=0)
        s2 += (d ** 2).sum(axis=0)
    mean_p = s1 / count
    var_p = np.maximum(s2 - count * mean_p ** 2, 0.0) / max(count - 1, 1)
    lam = mean_p ** (1.0 / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(mean_p > 0,
                      mean_p ** (1.0 / p - 1.0) / p * np.sqrt(var_p / count),
                      0.0)
    all_zero = bool(np.all(mean_p == 0.0))
    fit = None
    if not all_zero:
        usable = lam > 5.0 * se
        usable &= lam > 0
        if usable.sum() >= 2:
            lx = np.asarray(lags, dtype=float)[usable]
            ly = np.log(lam[usable])
            slope, intercept = np.polyfit(lx, ly, 1)
            resid = ly - (intercept + slope * lx)
            ss_tot = float(np.sum((ly - ly.mean()) ** 2))
            r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
            fit = LogLinearFit(float(slope), float(intercept), r2,
                               tuple(int(l) for l in lx))
    return DependenceProfile(p=p, lags=lags, lambda_hat=lam, se=se,
                             count=count, fit=fit, all_zero=all_zero)


# ---------------------------------------------------------------------------
# stationarity coefficients
# ---------------------------------------------------------------------------

_DEFAULT_MC_KEY = StreamKey(0x5EED, (901,))


@dataclass(frozen=True)
class GammaC:
    """Sum of q-norms of the volatility feedback coefficients."""

    value: float
    per_lag: tuple[float, ...]
    q: float
    method: str                  # "analytic" or "mc"
    se: float                    # 0 for the analytic path
    stationary: bool             # value < 1


def _quadratic_qnorm_analytic(b: float, a: float, q: int,
                              innovation: DistSpec) -> float:
    """||b + a eps^2||_q via exact even moments (integer q)."""
    total = 0.0
    for j in range(q + 1):
        total += math.comb(q, j) * b ** (q - j) * a ** j * innovation.raw_moment(2 * j)
    return total ** (1.0 / q)


def gamma_c(spec: GarchSpec, innovation: DistSpec, q: float,
            method: str = "auto", mc_count: int = 10 ** 6,
            key: StreamKey = _DEFAULT_MC_KEY) -> GammaC:
    """Stationarity coefficient of the volatility recursion.

    Closed form (exact even-moment formulas) when q is a positive integer;
    otherwise a Monte Carlo q-norm with ``mc_count`` draws.  A value below one
    certifies a stationary series representation.
    """
    if q < 1:
        raise ParameterError("q must be >= 1")
    analytic_ok = float(q).is_integer()
    use_analytic = method == "analytic" or (method == "auto" and analytic_ok)
    if method == "analytic" and not analytic_ok:
        raise ParameterError("analytic path needs integer q")
    per_lag: list[float] = []
    se = 0.0
    if use_analytic:
        for b, a in spec.c_coeffs:
            if b == 0.0 and a == 0.0:
                per_lag.append(0.0)
            else:
                per_lag.append(_quadratic_qnorm_analytic(b, a, int(q), innovation))
        label = "analytic"
    else:
        eps2 = sample(derive_stream(key), innovation, mc_count) ** 2
        se_sum = 0.0
        for b, a in spec.c_coeffs:
            if b == 0.0 and a == 0.0:
                per_lag.append(0.0)
                continue
            vals = (b + a * eps2) ** q
            m = float(vals.mean())
            norm = m ** (1.0 / q)
            per_lag.append(norm)
            sd = float(vals.std(ddof=1))
            se_sum += m ** (1.0 / q - 1.0) / q * sd / math.sqrt(mc_count)
        se = se_sum
        label = "mc"
    value = float(sum(per_lag))
    return GammaC(value=value, per_lag=tuple(per_lag), q=float(q),
                  method=label, se=se, stationary=value < 1.0)


@dataclass(frozen=True)
class Contraction:
    """State-contraction summary for an iterated random map."""

    lq_norm: float
    smallball_sup: float         # sup of the Lipschitz factor over |eps| <= delta
    delta: float
    q: float
    method: str
    passes: bool                 # both quantities < 1


def contraction_coefficient(spec: IteratedSpec, innovation: DistSpec, q: float,
                            count: int = 10 ** 6, delta: float = 0.1,
                            method: str = "auto",
                            key: StreamKey = _DEFAULT_MC_KEY) -> Contraction:
    """q-norm and small-innovation sup of the map's Lipschitz factor.

    For the supported map family the factor is |a| + |c| + |d eps| (the sine
    term is 1-Lipschitz), so both quantities are available in closed form for
    integer q; non-integer q falls back to Monte Carlo.
    """
    if q < 1:
        raise ParameterError("q must be >= 1")
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    base = abs(spec.a) + abs(spec.c)
    slope = abs(spec.d)
    analytic_ok = float(q).is_integer()
    use_analytic = method == "analytic" or (method == "auto" and analytic_ok)
    if method == "analytic" and not analytic_ok:
        raise ParameterError("analytic path needs integer q")
    if use_analytic:
        qi = int(q)
        total = sum(
            math.comb(qi, j) * base ** (qi - j) * slope ** j
            * innovation.abs_moment(j)
            for j in range(qi + 1))
        lq = total ** (1.0 / q)
        label = "analytic"
    else:
        eps = sample(derive_stream(key), innovation, count)
        lq = float(np.mean((base + slope * np.abs(eps)) ** q) ** (1.0 / q))
        label = "mc"
    sup = base + slope * delta
    return Contraction(lq_norm=float(lq), smallball_sup=float(sup),
                       delta=float(delta), q=float(q), method=label,
                       passes=lq < 1.0 and sup < 1.0)


def holder_dependence_bound(L: float, h_alpha: float, h_beta: float, p: float,
                            y_norm: float, y_diff_norms) -> np.ndarray:
    """Per-lag bound ||Y - Y~||^h_beta * (L + 2 ||Y||^h_alpha).

    Transfers a raw-process dependence profile (norms of order
    p*(h_alpha+h_beta)) to a bound on the transformed process at order p.
    """
    if p * (h_alpha + h_beta) < 1:
        raise ParameterError("need p*(h_alpha + h_beta) >= 1")
    y_diff = np.asarray(y_diff_norms, dtype=float)
    return y_diff ** h_beta * (L + 2.0 * y_norm ** h_alpha)


# ---------------------------------------------------------------------------
# non-lattice / conditional characteristic function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlatticeCheck:
    """Estimates of E |E_eps e^{i xi f(eps V)}| on a frequency grid.

    ``passes[i]`` requires the estimate to sit below 1 by at least four
    standard errors (xi = 0 always evaluates to one and is excluded).
    """

    xi: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    passes: np.ndarray
    overall: bool


def nonlattice_check(cfg: ModelConfig, xi_grid, n_outer: int, n_inner: int,
                     key: StreamKey) -> NonlatticeCheck:
    xi = np.asarray(xi_grid, dtype=float)
    if n_outer < 100:
        raise SampleSizeError("nonlattice check needs n_outer >= 100")
    if n_outer * n_inner > 5 * 10 ** 8:
        raise ParameterError("n_outer * n_inner exceeds the evaluation budget")
    vols = stationary_vol_draws(cfg, n_outer, key.child(0))
    closed_form = (cfg.innovation.kind == "standard_normal"
                   and cfg.transform.kind == "identity")
    est = np.empty(xi.size)
    se = np.empty(xi.size)
    if closed_form:
        for i, x in enumerate(xi):
            inner = np.exp(-0.5 * (x * vols) ** 2)
            est[i] = inner.mean()
            se[i] = inner.std(ddof=1) / math.sqrt(n_outer)
    else:
        eps = sample(derive_stream(key.child(1)), cfg.innovation, n_inner)
        block = max(1, 4_000_000 // n_inner)
        for i, x in enumerate(xi):
            acc = np.empty(n_outer)
            for lo in range(0, n_outer, block):
                v = vols[lo:lo + block]
                y = v[:, None] * eps[None, :]
                fy = cfg.transform.apply(y, cfg.n)
                acc[lo:lo + block] = np.abs(np.exp(1j * x * fy).mean(axis=1))
            est[i] = acc.mean()
            se[i] = acc.std(ddof=1) / math.sqrt(n_outer)
    passes = np.where(xi == 0.0, True, est < 1.0 - 4.0 * se)
    overall = bool(np.all(passes[xi != 0.0])) if np.any(xi != 0.0) else True
    return NonlatticeCheck(xi=xi, estimate=est, se=se, passes=passes,
                           overall=overall)


# ---------------------------------------------------------------------------
# almost-martingale residual of the compensated price
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MartingaleResidual:
    """|E e^{f(eps v)/sqrt(n)} - 1| over a volatility grid and horizon list."""

    n_list: tuple[int, ...]
    v_grid: tuple[float, ...]
    residual: np.ndarray         # (len(n_list), len(v_grid))
    sup: np.ndarray              # per-n sup over the grid
    slope: float                 # fitted log2(sup) per log2(n)


def _exp_moment(innovation: DistSpec, scale: float, transform, n: int) -> float:
    """E exp(f(eps * scale) / sqrt(n)) by exact atoms or quadrature."""
    root = math.sqrt(n)
    if innovation.is_discrete:
        vals, probs = innovation.atoms()
        return float(np.dot(np.exp(transform.apply(vals * scale, n) / root), probs))
    lo, hi = innovation.support()

    def integrand(u: float) -> float:
        y = np.asarray([u * scale])
        return float(np.exp(transform.apply(y, n)[0] / root)
                     * innovation.density(u)[0])

    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12,
                            limit=400)
    return float(val)


def martingale_residual(cfg: ModelConfig, n_list, v_grid) -> MartingaleResidual:
    """Almost-martingale residual of the compensated price over horizons.

    The compensator transform depends on n, so the residual is re-evaluated at
    each horizon; the slope of log2(sup residual) against log2(n) estimates
    the decay order.
    """
    if cfg.transform.kind != "compensator":
        raise ParameterError("martingale residual needs a compensator transform")
    n_list = tuple(int(n) for n in n_list)
    v_grid = tuple(float(v) for v in v_grid)
    if len(n_list) < 2:
        raise ParameterError("need at least two horizons for a slope")
    res = np.empty((len(n_list), len(v_grid)))
    for i, n in enumerate(n_list):
        for j, v in enumerate(v_grid):
            res[i, j] = abs(_exp_moment(cfg.innovation, v, cfg.transform, n) - 1.0)
    sup = res.max(axis=1)
    slope = float(np.polyfit(np.log2(n_list), np.log2(sup), 1)[0])
    return MartingaleResidual(n_list=n_list, v_grid=v_grid, residual=res,
                              sup=sup, slope=slope)


# ---------------------------------------------------------------------------
# kernel summability checks
# ---------------------------------------------------------------------------

def linear_kernel_check(spec: LinearSpec, f_beta: float) -> tuple[float, bool]:
    """Partial sum of k^2 |a_k|^(beta*delta) and whether the full series converges.

    ``f_beta`` is the transform's Hoelder exponent; the outer map's exponent
    comes from the spec's own metadata.
    """
    delta = spec.outer_holder[2]
    expo = f_beta * delta
    if expo <= 0:
        raise ParameterError("need positive Hoelder exponents")
    k = np.arange(spec.m_max + 1, dtype=float)
    partial = float(np.sum(k ** 2 * np.abs(spec.weights()) ** expo))
    if spec.kernel == "geometric":
        converges = abs(spec.ratio) ** expo < 1.0
    elif spec.kernel == "polynomial":
        converges = spec.theta * expo > 3.0
    else:
        converges = True
    return partial, converges


def volterra_kernel_check(spec: VolterraSpec, innovation: DistSpec, q: float,
                          f_beta: float) -> tuple[float, bool]:
    """Partial sum of k^2 (sum_i ||eps||_q^i sum_{l>=k} A_{l,i})^f_beta where
    A_{l,i} is the absolute kernel mass of order-i tuples containing lag l.
    Always finite after truncation; reported for decay inspection."""
    kap = np.abs(spec.kappa())
    m = kap.size
    eps_norm = innovation.abs_moment(q) ** (1.0 / q)
    mass = np.zeros((m, spec.orders + 1))
    for l in range(m):
        rest = np.delete(kap, l)
        for i in range(1, spec.orders + 1):
            mass[l, i] = kap[l] * _esp(rest, i - 1)
    total = 0.0
    for k in range(1, m):
        inner = sum(eps_norm ** i * mass[k:, i].sum()
                    for i in range(1, spec.orders + 1))
        total += k ** 2 * inner ** f_beta
    return float(total), True


def _esp(values: np.ndarray, order: int) -> float:
    """Elementary symmetric polynomial of ``order`` over ``values``."""
    e = np.zeros(order + 1)
    e[0] = 1.0
    for v in values:
        for k in range(min(order, len(values)), 0, -1):
            e[k] += v * e[k - 1]
    return float(e[order])
