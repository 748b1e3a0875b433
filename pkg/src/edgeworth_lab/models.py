"""Volatility-model families and their simulators.

All families share one timing convention: the path element at position ``i``
is ``x[i] = f(eps[i] * vol[i]) - centering`` where ``vol[i]`` is a function of
``eps[i-1], eps[i-2], ...`` only.  Coupled simulation replaces innovations at
strictly negative offsets (the pre-path history) by an independent copy, so
the element at position ``l`` shares exactly the ``l + 1`` most recent
innovations with its twin; that is the quantity the dependence diagnostics
measure at lag ``l``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DivergenceError, ParameterError, SampleSizeError
from .rngkit import DistSpec, StreamKey, derive_stream, sample

__all__ = [
    "GarchSpec", "IteratedSpec", "LinearSpec", "VolterraSpec",
    "TransformSpec", "ModelConfig", "CenteringEstimate",
    "apply_transform", "simulate_path", "simulate_paths",
    "simulate_coupled", "simulate_coupled_paths", "simulate_sums",
    "simulate_sums_range", "stationary_vol_draws", "estimate_centering",
    "garch_volterra_eval",
]

CHUNK = 4096  # replicates per vectorised block; fixed so results never depend on it


# ---------------------------------------------------------------------------
# family specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GarchSpec:
    """Power-link volatility recursion of orders (p, q).

    vol[k]^(2*lam) = sum_i g_i(eps[k-i]) + sum_i c_i(eps[k-i]) * vol[k-i]^(2*lam)
    with quadratic coefficient functions g_i(x) = w_i + u_i x^2 and
    c_i(x) = b_i + a_i x^2.
    """

    p: int
    q: int
    g_coeffs: tuple[tuple[float, float], ...]
    c_coeffs: tuple[tuple[float, float], ...]
    lam: float = 1.0
    burn_in: int = 1000

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ParameterError("orders p, q must be >= 1")
        if len(self.g_coeffs) != self.p or len(self.c_coeffs) != self.q:
            raise ParameterError("coefficient list lengths must match orders")
        g = tuple((float(w), float(u)) for w, u in self.g_coeffs)
        c = tuple((float(b), float(a)) for b, a in self.c_coeffs)
        object.__setattr__(self, "g_coeffs", g)
        object.__setattr__(self, "c_coeffs", c)
        if any(w < 0 or u < 0 for w, u in g) or any(b < 0 or a < 0 for b, a in c):
            raise ParameterError("all coefficient parameters must be >= 0")
        if not any(w > 0 for w, _ in g):
            raise ParameterError("at least one intercept w_i must be > 0")
        if self.lam < 0.5:
            raise ParameterError("power lam must be >= 0.5")
        if self.burn_in < 0:
            raise ParameterError("burn_in must be >= 0")

    @property
    def r(self) -> int:
        return max(self.p, self.q)

    def is_deterministic(self) -> bool:
        """True when the recursion admits no feedback or innovation terms."""
        return (all(u == 0.0 for _, u in self.g_coeffs)
                and all(b == 0.0 and a == 0.0 for b, a in self.c_coeffs))

    def g_pair(self, i: int) -> tuple[float, float]:
        """(w_i, u_i), zero-padded beyond order p (1-based lag index)."""
        return self.g_coeffs[i - 1] if 1 <= i <= self.p else (0.0, 0.0)

    def c_pair(self, i: int) -> tuple[float, float]:
        return self.c_coeffs[i - 1] if 1 <= i <= self.q else (0.0, 0.0)

    def mean_link(self, innovation: DistSpec) -> float:
        """Fixed point of the recursion in expectation (start value for burn-in)."""
        m2 = innovation.raw_moment(2)
        num = sum(w + u * m2 for w, u in self.g_coeffs)
        den = 1.0 - sum(b + a * m2 for b, a in self.c_coeffs)
        return num / den if den > 0 else num


@dataclass(frozen=True)
class IteratedSpec:
    """Iterated random map V_k = F(eps_k, V_{k-1}) with

    F(e, v) = clip(a*v + b*e + c*sin(v) + d*e*v, lo, hi).
    """

    a: float
    b: float
    c: float = 0.0
    d: float = 0.0
    v0: float = 0.0
    clamp: tuple[float, float] | None = None
    burn_in: int = 1000

    def __post_init__(self):
        if self.clamp is not None:
            lo, hi = self.clamp
            if not lo < hi:
                raise ParameterError("clamp needs lo < hi")
            object.__setattr__(self, "clamp", (float(lo), float(hi)))
        if self.burn_in < 0:
            raise ParameterError("burn_in must be >= 0")

    def lipschitz_in_state(self, eps_abs: float) -> float:
        """Upper bound on the state-to-state Lipschitz factor at |eps| = eps_abs."""
        return abs(self.a) + abs(self.c) + abs(self.d) * eps_abs

    def step(self, eps: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = self.a * v + self.b * eps + self.c * np.sin(v) + self.d * eps * v
        if self.clamp is not None:
            out = np.clip(out, self.clamp[0], self.clamp[1])
        return out


_INNER_MAPS = ("identity", "square", "abs")
_OUTER_MAPS = ("identity", "abs", "sqrt1p")


@dataclass(frozen=True)
class LinearSpec:
    """Moving-average volatility: vol[k] = g(sum_i a_i * c(eps[k-1-i])).

    Kernels: geometric a_i = ratio**i, polynomial a_i = (1+i)**(-theta), or an
    explicit truncated list.  The kernel is truncated at m_max taps.
    """

    kernel: str = "geometric"
    m_max: int = 64
    ratio: float = 0.5
    theta: float = 2.0
    coeffs: tuple[float, ...] = ()
    inner: str = "identity"
    outer: str = "identity"
    outer_holder: tuple[float, float, float] = (1.0, 0.0, 1.0)

    def __post_init__(self):
        if self.kernel not in ("geometric", "polynomial", "explicit"):
            raise ParameterError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "geometric" and not abs(self.ratio) < 1:
            raise ParameterError("geometric kernel needs |ratio| < 1")
        if self.kernel == "polynomial" and not self.theta > 0:
            raise ParameterError("polynomial kernel needs theta > 0")
        if self.kernel == "explicit":
            if not self.coeffs:
                raise ParameterError("explicit kernel needs coeffs")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
            object.__setattr__(self, "m_max", len(self.coeffs) - 1)
        if self.m_max < 0:
            raise ParameterError("m_max must be >= 0")
        if self.inner not in _INNER_MAPS or self.outer not in _OUTER_MAPS:
            raise ParameterError("unknown inner/outer map")

    def weights(self) -> np.ndarray:
        i = np.arange(self.m_max + 1, dtype=float)
        if self.kernel == "geometric":
            return self.ratio ** i
        if self.kernel == "polynomial":
            return (1.0 + i) ** (-self.theta)
        return np.asarray(self.coeffs, dtype=float)

    def inner_map(self, x: np.ndarray) -> np.ndarray:
        if self.inner == "identity":
            return x
        return x ** 2 if self.inner == "square" else np.abs(x)

    def outer_map(self, x: np.ndarray) -> np.ndarray:
        if self.outer == "identity":
            return x
        return np.abs(x) if self.outer == "abs" else np.sqrt(1.0 + x ** 2)


@dataclass(frozen=True)
class VolterraSpec:
    """Multilinear volatility with separable kernels.

    vol[k] = sum_{i=1..orders} sum_{0<=j_1<...<j_i<=m_max}
             kappa(j_1)*...*kappa(j_i) * eps[k-1-j_1]*...*eps[k-1-j_i]
    """

    orders: int = 2
    kernel: str = "geometric"
    m_max: int = 32
    base: float = 1.0
    ratio: float = 0.5
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.orders < 1:
            raise ParameterError("orders must be >= 1")
        if self.kernel not in ("geometric", "explicit"):
            raise ParameterError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "geometric" and not abs(self.ratio) < 1:
            raise ParameterError("geometric kernel needs |ratio| < 1")
        if self.kernel == "explicit":
            if not self.coeffs:
                raise ParameterError("explicit kernel needs coeffs")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
            object.__setattr__(self, "m_max", len(self.coeffs) - 1)
        if self.m_max < 0:
            raise ParameterError("m_max must be >= 0")

    def kappa(self) -> np.ndarray:
        if self.kernel == "geometric":
            return self.base * self.ratio ** np.arange(self.m_max + 1, dtype=float)
        return np.asarray(self.coeffs, dtype=float)


@dataclass(frozen=True)
class TransformSpec:
    """Pointwise transform f applied to y = eps * vol, with centering.

    ``holder`` stores (L, h_alpha, h_beta) certifying
    |f(x) - f(y)| <= L |x-y|^h_beta (1 + |x|^h_alpha + |y|^h_alpha);
    when None a conservative default for the variant is used.
    """

    kind: str = "identity"
    order: int = 2
    exponent: float = 1.0
    signed: bool = True
    coeffs: tuple[float, ...] = ()
    holder: tuple[float, float, float] | None = None
    centering: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "compensator", "power", "polynomial"):
            raise ParameterError(f"unknown transform kind {self.kind!r}")
        if self.kind == "compensator" and self.order not in (2, 3):
            raise ParameterError("compensator order must be 2 or 3")
        if self.kind == "power" and not self.exponent > 0:
            raise ParameterError("power exponent must be > 0")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise ParameterError("polynomial transform needs coeffs")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @classmethod
    def identity(cls) -> "TransformSpec":
        return cls("identity")

    @classmethod
    def compensator(cls, order: int = 2) -> "TransformSpec":
        return cls("compensator", order=order)

    @classmethod
    def power(cls, exponent: float, signed: bool = True) -> "TransformSpec":
        return cls("power", exponent=exponent, signed=signed)

    @classmethod
    def polynomial(cls, coeffs) -> "TransformSpec":
        return cls("polynomial", coeffs=tuple(coeffs))

    def apply(self, y, n: int):
        """f(y); compensator variants need the horizon n >= 1."""
        y = np.asarray(y, dtype=float)
        if self.kind == "identity":
            return y
        if self.kind == "compensator":
            if n < 1:
                raise ParameterError("compensator transform needs n >= 1")
            out = y - y ** 2 / (2.0 * math.sqrt(n))
            if self.order == 3:
                out = out - (2.0 / 3.0) * y ** 3 / n
            return out
        if self.kind == "power":
            mag = np.abs(y) ** self.exponent
            return np.sign(y) * mag if self.signed else mag
        out = np.zeros_like(y)
        for c in reversed(self.coeffs):
            out = out * y + c
        return out

    def holder_triple(self, n: int) -> tuple[float, float, float]:
        """(L, h_alpha, h_beta) valid for this transform at horizon n."""
        if self.holder is not None:
            return self.holder
        if self.kind == "identity":
            return (1.0, 0.0, 1.0)
        if self.kind == "compensator":
            if self.order == 2:
                return (1.0, 1.0, 1.0)
            return (1.0 + 0.5 / math.sqrt(n) + 2.0 / n, 2.0, 1.0)
        if self.kind == "power":
            r = self.exponent
            if r <= 1.0:
                return (2.0 if self.signed else 1.0, 0.0, r)
            return (r, r - 1.0, 1.0)
        degree = len(self.coeffs) - 1
        lip = sum(j * abs(c) for j, c in enumerate(self.coeffs))
        return (max(lip, 1e-300), max(degree - 1.0, 0.0), 1.0)


def apply_transform(t: TransformSpec, y, n: int):
    """Evaluate the raw transform f (no centering subtracted)."""
    return t.apply(y, n)


Family = GarchSpec | IteratedSpec | LinearSpec | VolterraSpec


@dataclass(frozen=True)
class ModelConfig:
    """A complete simulable model: family + innovation law + transform + horizon."""

    family: Family
    innovation: DistSpec
    transform: TransformSpec = TransformSpec.identity()
    n: int = 256

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("horizon n must be >= 1")

    def with_centering(self, mu: float) -> "ModelConfig":
        return dataclasses.replace(
            self, transform=dataclasses.replace(self.transform, centering=float(mu)))

    def with_n(self, n: int) -> "ModelConfig":
        return dataclasses.replace(self, n=int(n))

    def history_len(self) -> int:
        fam = self.family
        if isinstance(fam, GarchSpec):
            return fam.r if fam.is_deterministic() else fam.burn_in + fam.r
        if isinstance(fam, IteratedSpec):
            return fam.burn_in
        return fam.m_max + 1


# ---------------------------------------------------------------------------
# core recursions (innovation matrix -> volatility matrix)
# ---------------------------------------------------------------------------

def _run_garch(spec: GarchSpec, eps: np.ndarray, innovation: DistSpec,
               hist: int, n: int) -> np.ndarray:
    reps = eps.shape[0]
    if spec.is_deterministic():
        const = sum(w for w, _ in spec.g_coeffs) ** (1.0 / (2.0 * spec.lam))
        return np.full((reps, n), const)
    r = spec.r
    eps2 = eps ** 2
    # ring buffer of the last r linked values, seeded at the expectation fixed point
    link = np.full((reps, r), spec.mean_link(innovation))
    out = np.empty((reps, n))
    # slot i is driven by eps columns hist+i-1 ... hist+i-r
    for i in range(-hist + r, n):
        acc = np.zeros(reps)
        for m in range(1, r + 1):
            col = hist + i - m
            w, u = spec.g_pair(m)
            b, a = spec.c_pair(m)
            if w or u:
                acc = acc + w + u * eps2[:, col]
            if b or a:
                acc = acc + (b + a * eps2[:, col]) * link[:, (i - m) % r]
        link[:, i % r] = acc
        if i >= 0:
            out[:, i] = acc
    np.power(out, 1.0 / (2.0 * spec.lam), out=out)
    return out


def _run_iterated(spec: IteratedSpec, eps: np.ndarray, hist: int,
                  n: int) -> np.ndarray:
    reps = eps.shape[0]
    v = np.full(reps, float(spec.v0))
    out = np.empty((reps, n))
    if hist == 0:
        out[:, 0] = v
        start = 1
    else:
        start = -hist + 1
    for i in range(start, n):
        v = spec.step(eps[:, hist + i - 1], v)
        if i >= 0:
            out[:, i] = v
    return out


def _run_linear(spec: LinearSpec, eps: np.ndarray, hist: int,
                n: int) -> np.ndarray:
    ceps = spec.inner_map(eps)
    weights = spec.weights()
    acc = np.zeros((eps.shape[0], n))
    # fixed tap order keeps the accumulation bit-reproducible
    for m, a_m in enumerate(weights):
        if a_m != 0.0:
            acc += a_m * ceps[:, hist - 1 - m: hist - 1 - m + n]
    return spec.outer_map(acc)


def _run_volterra(spec: VolterraSpec, eps: np.ndarray, hist: int,
                  n: int) -> np.ndarray:
    kap = spec.kappa()
    orders = spec.orders
    reps = eps.shape[0]
    out = np.empty((reps, n))
    for i in range(n):
        e = [np.ones(reps)] + [np.zeros(reps) for _ in range(orders)]
        for j in range(spec.m_max + 1):
            term = kap[j] * eps[:, hist + i - 1 - j]
            for k in range(min(orders, j + 1), 0, -1):
                e[k] = e[k] + term * e[k - 1]
        out[:, i] = sum(e[1:])
    return out


def _volatility(cfg: ModelConfig, eps: np.ndarray) -> np.ndarray:
    hist = cfg.history_len()
    n = cfg.n
    fam = cfg.family
    if isinstance(fam, GarchSpec):
        vol = _run_garch(fam, eps, cfg.innovation, hist, n)
    elif isinstance(fam, IteratedSpec):
        vol = _run_iterated(fam, eps, hist, n)
    elif isinstance(fam, LinearSpec):
        vol = _run_linear(fam, eps, hist, n)
    else:
        vol = _run_volterra(fam, eps, hist, n)
    if not np.all(np.isfinite(vol)):
        bad = int(np.flatnonzero(~np.isfinite(vol).all(axis=0))[0])
        raise DivergenceError("volatility became non-finite", bad)
    return vol


def _paths_from_eps(cfg: ModelConfig, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hist = cfg.history_len()
    vol = _volatility(cfg, eps)
    y = eps[:, hist:] * vol
    x = cfg.transform.apply(y, cfg.n) - cfg.transform.centering
    return x, vol


def _innovation_block(cfg: ModelConfig, keys: list[StreamKey]) -> np.ndarray:
    total = cfg.history_len() + cfg.n
    out = np.empty((len(keys), total))
    for row, key in enumerate(keys):
        out[row] = sample(derive_stream(key), cfg.innovation, total)
    return out


# ---------------------------------------------------------------------------
# public simulation API
# ---------------------------------------------------------------------------

def simulate_paths(cfg: ModelConfig, keys: list[StreamKey]) -> tuple[np.ndarray, np.ndarray]:
    """Simulate one path per key; returns (x, vol) of shape (len(keys), n)."""
    eps = _innovation_block(cfg, keys)
    return _paths_from_eps(cfg, eps)


def simulate_path(cfg: ModelConfig, key: StreamKey) -> tuple[np.ndarray, np.ndarray]:
    """Single stationary-regime path: (x_path, v_path), both length n."""
    x, vol = simulate_paths(cfg, [key])
    return x[0], vol[0]


def simulate_coupled_paths(cfg: ModelConfig, lag: int, mode: str,
                           keys: list[StreamKey]) -> tuple[np.ndarray, np.ndarray]:
    """Coupled pairs for each key; returns (x, x_coupled) of shape (len(keys), n).

    The coupled path reuses the base innovations at offsets > -lag and an
    independent copy at offsets <= -lag (mode "star": the whole older tail;
    mode "prime": only the single innovation at offset -lag).  Both marginals
    follow the plain path law.
    """
    if mode not in ("star", "prime"):
        raise ParameterError(f"mode must be 'star' or 'prime', got {mode!r}")
    if lag < 0:
        raise ParameterError("lag must be >= 0")
    if lag >= cfg.n + cfg.history_len():
        # swap point predates every innovation the paths touch
        x, _ = simulate_paths(cfg, [k.child(0) for k in keys])
        return x, x.copy()
    hist = cfg.history_len()
    eps = _innovation_block(cfg, [k.child(0) for k in keys])
    eps_prime = _innovation_block(cfg, [k.child(1) for k in keys])
    coupled = eps.copy()
    cut = hist - lag  # column of innovation offset -lag
    if mode == "star":
        if cut >= 0:
            coupled[:, :cut + 1] = eps_prime[:, :cut + 1]
    else:
        if cut >= 0:
            coupled[:, cut] = eps_prime[:, cut]
    x, _ = _paths_from_eps(cfg, eps)
    x_star, _ = _paths_from_eps(cfg, coupled)
    return x, x_star


def simulate_coupled(cfg: ModelConfig, lag: int, mode: str,
                     key: StreamKey) -> tuple[np.ndarray, np.ndarray]:
    x, x_star = simulate_coupled_paths(cfg, lag, mode, [key])
    return x[0], x_star[0]


def simulate_sums_range(cfg: ModelConfig, key: StreamKey, lo: int,
                        hi: int) -> np.ndarray:
    """Replicates ``lo`` (inclusive) to ``hi`` (exclusive) of S_n / sqrt(n).

    Replicate ``r`` draws from ``key.child(r)``, so results are bit-identical
    however the replicate range is partitioned across workers.
    """
    sqrt_n = math.sqrt(cfg.n)
    out = np.empty(hi - lo)
    for start in range(lo, hi, CHUNK):
        stop = min(start + CHUNK, hi)
        x, _ = simulate_paths(cfg, [key.child(r) for r in range(start, stop)])
        out[start - lo:stop - lo] = x.sum(axis=1) / sqrt_n
    return out


def simulate_sums(cfg: ModelConfig, key: StreamKey, count: int) -> np.ndarray:
    """``count`` independent replicates of S_n / sqrt(n)."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    return simulate_sums_range(cfg, key, 0, count)


def stationary_vol_draws(cfg: ModelConfig, count: int, key: StreamKey) -> np.ndarray:
    """``count`` independent draws of the stationary-regime volatility."""
    short = cfg.with_n(1)
    out = np.empty(count)
    for lo in range(0, count, CHUNK):
        hi = min(lo + CHUNK, count)
        _, vol = simulate_paths(short, [key.child(r) for r in range(lo, hi)])
        out[lo:hi] = vol[:, 0]
    return out


@dataclass(frozen=True)
class CenteringEstimate:
    mu: float
    se: float
    count: int


def estimate_centering(cfg: ModelConfig, count: int, key: StreamKey) -> CenteringEstimate:
    """Monte Carlo estimate of E f(Y) from ``count`` independent stationary draws."""
    if count < 1000:
        raise SampleSizeError("centering estimation needs count >= 1000")
    short = cfg.with_n(1)
    hist = short.history_len()
    vals = np.empty(count)
    for lo in range(0, count, CHUNK):
        hi = min(lo + CHUNK, count)
        eps = _innovation_block(short, [key.child(r) for r in range(lo, hi)])
        vol = _volatility(short, eps)
        y = eps[:, hist:] * vol
        vals[lo:hi] = cfg.transform.apply(y, cfg.n)[:, 0]
    mu = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(count))
    return CenteringEstimate(mu, se, count)


# ---------------------------------------------------------------------------
# series representation of the power-link recursion (independent oracle)
# ---------------------------------------------------------------------------

def garch_volterra_eval(spec: GarchSpec, innovations: np.ndarray,
                        truncation: int) -> float:
    """Partial sum (over series depth <= truncation) of the expansion of
    vol^(2*lam) in past innovations.

    ``innovations[-d]`` is the innovation at offset ``-d`` from the evaluation
    position, i.e. the last element is the most recent driving innovation.
    Agrees with the recursion in :func:`simulate_path` up to a geometrically
    small truncation tail.
    """
    if truncation < 1:
        raise ParameterError("truncation must be >= 1")
    innovations = np.asarray(innovations, dtype=float)
    r = spec.r
    max_depth = truncation * r
    if innovations.size < max_depth:
        raise ContractError(
            f"need at least truncation*r = {max_depth} innovations, "
            f"got {innovations.size}")

    def eps_at(depth: int) -> float:
        return float(innovations[-depth])

    def g_val(i: int, x: float) -> float:
        w, u = spec.g_pair(i)
        return w + u * x * x

    def c_val(i: int, x: float) -> float:
        b, a = spec.c_pair(i)
        return b + a * x * x

    # prefix[s] = sum over lag tuples with partial-lag sum s of the product of
    # c-factors along the tuple; advancing one tuple entry at a time
    prefix = np.zeros(max_depth + 1)
    prefix[0] = 1.0
    total = 0.0
    for _depth in range(1, truncation + 1):
        nxt = np.zeros(max_depth + 1)
        for s in range(1, max_depth + 1):
            e = eps_at(s)
            acc_g = 0.0
            acc_c = 0.0
            for lagi in range(1, min(r, s) + 1):
                prev = prefix[s - lagi]
                if prev != 0.0:
                    acc_g += prev * g_val(lagi, e)
                    acc_c += prev * c_val(lagi, e)
            total += acc_g
            nxt[s] = acc_c
        prefix = nxt
    return total
