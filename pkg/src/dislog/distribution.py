"""The discrete log-symmetric law ``X = floor(Y)``, ``Y ~ LS(theta, g)``.

``Y`` is log-symmetric with median ``lam`` and power parameter ``phi``:
``P(Y <= y) = G(a(y))`` with ``a(y) = log(y / lam) / sqrt(phi)``. The discrete
variable then has

    p(x) = G(a(x + 1)) - G(a(x)),        x = 0, 1, 2, ...
    F(x) = G(a(floor(x) + 1)),           R(x) = 1 - F(x) = P(X > x)
    H(x) = p(x) / (p(x) + R(x))

Upper-tail quantities are evaluated through the reflection ``1 - G(r) = G(-r)``
so they keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .errors import DomainError, MomentDivergenceError
from .kernels import (
    KernelSpec,
    log_kernel_g,
    log_partition_constant,
    standard_cdf,
    standard_density,
    standard_quantile,
)

__all__ = [
    "Theta",
    "DiscreteLS",
    "QuantileMeasures",
    "a_theta",
    "a_theta_inverse",
    "reconstruct_from_hazard",
    "modes_of_pmf",
]

MOMENT_TERM_CAP = 10_000_000
INTEGER_RTOL = 1e-9
MODE_RF_THRESHOLD = 1e-12
MODE_CAP_LIMIT = 1_000_000
# half-width in a below which pmf is taken from the density at the midpoint
NARROW_HALF_WIDTH = 1e-5


@dataclass(frozen=True)
class Theta:
    """Scale ``lam`` (the median of Y) and power parameter ``phi``."""

    lam: float
    phi: float

    def __post_init__(self):
        lam, phi = float(self.lam), float(self.phi)
        if not (lam > 0 and math.isfinite(lam)):
            raise DomainError(f"lambda must be positive and finite, got {self.lam!r}")
        if not (phi > 0 and math.isfinite(phi)):
            raise DomainError(f"phi must be positive and finite, got {self.phi!r}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "phi", phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.phi])


def a_theta(theta: Theta, y):
    """``log(y / lam) / sqrt(phi)``; ``y = 0`` maps to ``-inf``."""
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)) or np.any(y < 0):
        raise DomainError("a_theta requires y >= 0")
    with np.errstate(divide="ignore"):
        out = np.log(y / theta.lam) / math.sqrt(theta.phi)
    return out[()] if np.ndim(out) == 0 else out


def a_theta_inverse(theta: Theta, r):
    return theta.lam * np.exp(math.sqrt(theta.phi) * np.asarray(r, dtype=float))


def _as_support(x, what="x"):
    arr = np.asarray(x)
    xf = arr.astype(float)
    if np.any(np.isnan(xf)) or np.any(xf < 0):
        raise DomainError(f"{what} must be a nonnegative integer")
    if np.any(xf != np.floor(xf)):
        raise DomainError(f"{what} must be integer valued")
    return xf


@dataclass(frozen=True)
class QuantileMeasures:
    """Quantile-based dispersion, relative dispersion, skewness and kurtosis.

    ``closed_form`` holds the analytic expressions in terms of ``lam``, ``phi``
    and ``G^{-1}``; they coincide with the discrete-quantile values only when
    the underlying continuous quantiles are integers (``closed_form_applies``).
    """

    p: float
    dispersion: float
    relative_dispersion: float
    skewness: float
    kurtosis: float
    quantiles: dict
    closed_form: dict
    closed_form_applies: bool
    notes: tuple = ()


@dataclass(frozen=True)
class DiscreteLS:
    """Discrete log-symmetric distribution on ``{0, 1, 2, ...}``."""

    kernel: KernelSpec
    theta: Theta
    _log_z: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_log_z", log_partition_constant(self.kernel))

    @classmethod
    def from_params(cls, kernel: KernelSpec | str, lam: float, phi: float, xi=()) -> DiscreteLS:
        if not isinstance(kernel, KernelSpec):
            kernel = KernelSpec(kernel, xi)
        return cls(kernel, Theta(lam, phi))

    @property
    def lam(self) -> float:
        return self.theta.lam

    @property
    def phi(self) -> float:
        return self.theta.phi

    def with_theta(self, lam: float, phi: float) -> DiscreteLS:
        return DiscreteLS(self.kernel, Theta(lam, phi))

    # -- boundary evaluations ------------------------------------------------
    def _a(self, y):
        return a_theta(self.theta, y)

    def _lower(self, y):
        """``P(Y <= y) = G(a(y))``."""
        return standard_cdf(self.kernel, self._a(y))

    def _upper(self, y):
        """``P(Y > y) = G(-a(y))``."""
        return standard_cdf(self.kernel, -self._a(y))

    # -- mass, distribution, reliability, hazard --------------------------------
    def pmf(self, x):
        x = _as_support(x)
        shape = np.shape(x)
        x = np.atleast_1d(x)
        a_lo = self._a(x)
        # difference of upper tails where both boundaries sit above the median
        upper = self._upper(x) - self._upper(x + 1)
        lower = self._lower(x + 1) - self._lower(x)
        out = np.maximum(np.where(a_lo >= 0, upper, lower), 0.0)
        # far out the unit interval is narrow in a and the CDF difference
        # cancels; there P = 2 d g(m**2) / Z with midpoint m and half-width d
        xf = x.astype(float)
        rp = math.sqrt(self.phi)
        with np.errstate(divide="ignore"):
            half = np.log1p(1.0 / xf) / (2.0 * rp)
        narrow = half < NARROW_HALF_WIDTH
        if narrow.any():
            xn = xf[narrow]
            m = (0.5 * (np.log(xn) + np.log1p(xn)) - math.log(self.lam)) / rp
            out[narrow] = np.exp(np.log(2.0 * half[narrow]) + log_kernel_g(self.kernel, m * m) - self._log_z)
        out = out.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def logpmf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.pmf(x))

    def cdf(self, x):
        xf = np.asarray(x, dtype=float)
        if np.any(np.isnan(xf)) or np.any(xf < 0):
            raise DomainError("cdf requires x >= 0")
        out = self._lower(np.floor(xf) + 1)
        return out[()] if np.ndim(out) == 0 else out

    def rf(self, x):
        """Reliability ``R(x) = P(X > x)``."""
        xf = np.asarray(x, dtype=float)
        if np.any(np.isnan(xf)) or np.any(xf < 0):
            raise DomainError("rf requires x >= 0")
        out = self._upper(np.floor(xf) + 1)
        return out[()] if np.ndim(out) == 0 else out

    sf = rf

    def survival_at_least(self, x):
        """``P(X >= x) = p(x) + R(x)``."""
        x = _as_support(x)
        out = self._upper(x)
        return out[()] if np.ndim(out) == 0 else out

    def hazard(self, x):
        """``H(x) = p(x) / (p(x) + R(x))``; 1 where the denominator underflows."""
        x = _as_support(x)
        p = np.asarray(self.pmf(x))
        at_least = np.asarray(self.survival_at_least(x))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(at_least > 0, p / at_least, 1.0)
        out = np.clip(out, 0.0, 1.0)
        return out[()] if np.ndim(out) == 0 else out

    def continuous_pdf(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)) or np.any(y <= 0):
            raise DomainError("continuous_pdf requires y > 0")
        out = standard_density(self.kernel, self._a(y)) / (math.sqrt(self.phi) * y)
        return out[()] if np.ndim(out) == 0 else out

    def continuous_quantile(self, p):
        return a_theta_inverse(self.theta, standard_quantile(self.kernel, p))

    # -- quantiles -----------------------------------------------------------
    def quantile(self, p):
        """Integer ``p``-quantile.

        With ``Q`` the continuous quantile, returns ``Q - 1`` when ``Q`` is a
        positive integer (relative tolerance ``INTEGER_RTOL``), else
        ``floor(Q)``.
        """
        q = np.asarray(self.continuous_quantile(p), dtype=float)
        nearest = np.round(q)
        is_int = (nearest >= 1) & (np.abs(q - nearest) <= INTEGER_RTOL * np.maximum(q, 1.0))
        out = np.where(is_int, nearest - 1, np.floor(q)).astype(np.int64)
        return out[()] if np.ndim(out) == 0 else out

    def median(self):
        return self.quantile(0.5)

    def quantile_measures(self, p: float = 0.25) -> QuantileMeasures:
        if not 0 < p < 0.5:
            raise DomainError("skewness probability must lie in (0, 0.5)")
        levels = sorted({0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, p, 1 - p})
        qd = dict(zip(levels, (int(v) for v in self.quantile(np.array(levels)))))

        def ratio(num, den):
            return num / den if den != 0 else math.nan

        zeta = qd[0.75] - qd[0.25]
        varpi = ratio(zeta, zeta + 2 * qd[0.25])
        kappa = ratio(qd[p] + qd[1 - p] - 2 * qd[0.5], qd[1 - p] + qd[p])
        varsigma = ratio(qd[0.875] - qd[0.625] + qd[0.375] - qd[0.125], qd[0.75] - qd[0.25])

        root_phi = math.sqrt(self.phi)
        s = {lv: root_phi * float(standard_quantile(self.kernel, lv)) for lv in (0.625, 0.75, 0.875)}
        closed = {
            "dispersion": 2 * self.lam * math.sinh(s[0.75]),
            # as printed; the continuous-quantile ratio would be tanh(s)
            "relative_dispersion": 1.0 / (1.0 / math.tanh(s[0.75]) - 1.0 / math.sinh(s[0.75])),
            "skewness": self.lam,
            "kurtosis": (math.sinh(s[0.875]) - math.sinh(s[0.625])) / math.sinh(s[0.75]),
        }
        cont = self.continuous_quantile(np.array(levels))
        applies = bool(np.all(np.abs(cont - np.round(cont)) <= INTEGER_RTOL * cont))
        notes = []
        if not (abs(kappa - closed["skewness"]) < 1e-12):
            notes.append(
                f"skewness from quantiles is {kappa:.6g}; the closed-form value lambda="
                f"{self.lam:.6g} is inconsistent with the bounded definition"
            )
        if not 0 < closed["relative_dispersion"] < 1:
            notes.append("closed-form relative dispersion lies outside (0, 1)")
        return QuantileMeasures(p, zeta, varpi, kappa, varsigma, qd, closed, applies, tuple(notes))

    # -- moments ---------------------------------------------------------------
    def _series(self, coef, tail_tol, what):
        """Sum ``coef(x) * R(x)`` over x >= 0 in doubling blocks.

        Stops once a block contributes less than ``tail_tol`` while block
        contributions are at least halving (so the remainder is bounded by
        the last block). Raises when ``MOMENT_TERM_CAP`` terms are exceeded.
        """
        total = 0.0
        start, width = 0, 256
        prev = math.inf
        while start < MOMENT_TERM_CAP:
            x = np.arange(start, start + width, dtype=float)
            block = float(np.sum(coef(x) * self.rf(x)))
            total += block
            if block < tail_tol and block <= 0.5 * prev:
                return total
            prev = block
            start += width
            width *= 2
        raise MomentDivergenceError(
            f"{what} series not convergent within {MOMENT_TERM_CAP} terms; "
            "the moment may not exist for this kernel"
        )

    def moment(self, r: int = 1, tail_tol: float = 1e-12) -> float:
        """``E(X**r) = sum_x [(x+1)**r - x**r] R(x)``."""
        r = int(r)
        if r < 1:
            raise DomainError("moment order must be a positive integer")
        return self._series(lambda x: (x + 1.0) ** r - x**r, tail_tol, f"E(X^{r})")

    def moment_triple_sum(self, r: int = 1, tail_tol: float = 1e-12) -> float:
        """The same moment with the telescoped factor expanded binomially.

        ``(x+1)**r - x**r = sum_{k<r} sum_{i<=r-1-k} C(r-1-k, i) x**(k+i)``.
        """
        r = int(r)
        if r < 1:
            raise DomainError("moment order must be a positive integer")

        def coef(x):
            acc = np.zeros_like(x)
            for k in range(r):
                for i in range(r - k):
                    acc += special.comb(r - 1 - k, i, exact=True) * x ** (k + i)
            return acc

        return self._series(coef, tail_tol, f"E(X^{r})")

    def mean(self, tail_tol: float = 1e-12) -> float:
        return self.moment(1, tail_tol)

    def var(self, tail_tol: float = 1e-12) -> float:
        """``2 sum x R(x) + sum R(x) (1 - sum R(x))``."""
        s0 = self._series(lambda x: np.ones_like(x), tail_tol, "sum R(x)")
        s1 = self._series(lambda x: x, tail_tol, "sum x R(x)")
        return 2.0 * s1 + s0 * (1.0 - s0)

    # -- shape -------------------------------------------------------------------
    def default_search_cap(self) -> int:
        """Smallest ``N`` with ``R(N) < MODE_RF_THRESHOLD``."""
        hi = 16
        while self.rf(hi) >= MODE_RF_THRESHOLD:
            if hi >= MODE_CAP_LIMIT:
                raise DomainError(
                    f"R({MODE_CAP_LIMIT}) >= {MODE_RF_THRESHOLD:g}; pass a larger search_cap"
                )
            hi = min(2 * hi, MODE_CAP_LIMIT)
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if self.rf(mid) < MODE_RF_THRESHOLD:
                hi = mid
            else:
                lo = mid + 1
        return int(lo)

    def modes(self, search_cap: int | None = None, rtol: float = 1e-12) -> list[int]:
        if search_cap is None:
            search_cap = self.default_search_cap()
        elif self.rf(search_cap) >= MODE_RF_THRESHOLD:
            raise DomainError(
                f"R({search_cap}) = {float(self.rf(search_cap)):.3g} >= {MODE_RF_THRESHOLD:g};"
                " increase search_cap"
            )
        return modes_of_pmf(self.pmf(np.arange(search_cap + 1)), rtol=rtol)

    # -- sampling -----------------------------------------------------------------
    def sample(self, n: int, seed=None) -> np.ndarray:
        """Inverse-CDF draws of ``floor(lam * exp(sqrt(phi) * G^{-1}(U)))``.

        ``seed`` is anything accepted by :func:`numpy.random.default_rng`
        (PCG64); the same seed gives the same draws.
        """
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        u = rng.random(int(n))
        u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
        y = self.continuous_quantile(u)
        # heavy tails can overflow; keep draws representable as int64
        return np.floor(np.minimum(y, 2.0**62)).astype(np.int64)

    def pmf_table(self, xmax: int) -> dict[str, np.ndarray]:
        x = np.arange(int(xmax) + 1)
        return {
            "x": x,
            "pmf": self.pmf(x),
            "cdf": self.cdf(x),
            "rf": self.rf(x),
            "hazard": self.hazard(x),
        }


def reconstruct_from_hazard(h: Sequence[float], x: int, literal: bool = False):
    """Recover ``(p(x), R(x))`` from hazard values ``h[0..x]``.

    With ``S = prod_{y<x} (1 - h[y])`` (empty product 1), ``S`` equals
    ``P(X >= x)``, hence ``p(x) = h[x] * S`` and ``R(x) = S * (1 - h[x])``.

    ``literal=True`` instead returns ``(h[x] / (1 - h[x]) * S, S)``, the
    product taken only up to ``x - 1`` in both identities. Those values equal
    ``(p(x) R(x-1) / R(x), R(x-1))``, i.e. the product is one index short.
    """
    x = int(x)
    if x < 0:
        raise DomainError("x must be nonnegative")
    h = np.asarray(h, dtype=float)
    if h.size <= x:
        raise DomainError(f"need hazard values for 0..{x}")
    if np.any((h[: x + 1] < 0) | (h[: x + 1] > 1)):
        raise DomainError("hazard values must lie in [0, 1]")
    survive = float(np.prod(1.0 - h[:x]))
    hx = float(h[x])
    if literal:
        if np.any(h[:x] == 1):
            raise ZeroDivisionError("H(y) = 1 before x: h / (1 - h) is undefined")
        if hx == 1.0:
            raise ZeroDivisionError("H(x) = 1: h / (1 - h) is undefined")
        return hx / (1.0 - hx) * survive, survive
    return hx * survive, survive * (1.0 - hx)


def modes_of_pmf(values, rtol: float = 0.0) -> list[int]:
    """Indices of local maxima of a mass sequence, ties reported together.

    Runs of (relatively) equal consecutive values form plateaus; a plateau is
    modal when both neighbours are strictly smaller (outside the sequence
    counts as smaller). All integers in a modal plateau are returned, which
    covers every row of the three-point comparison table, e.g.
    ``p(m-1) = p(m) > p(m+1)`` yields ``[m-1, m]``.
    """
    p = np.asarray(values, dtype=float)
    n = p.size
    if n == 0:
        return []

    def same(a, b):
        return a == b or abs(a - b) <= rtol * max(abs(a), abs(b))

    out: list[int] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and same(p[j + 1], p[i]):
            j += 1
        left_ok = i == 0 or p[i - 1] < p[i]
        right_ok = j == n - 1 or p[j + 1] < p[j]
        if left_ok and right_ok and p[i] > 0:
            out.extend(range(i, j + 1))
        i = j + 1
    return out
