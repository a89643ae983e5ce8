"""Goodness of fit, Kaplan-Meier estimation and fitted survival tables."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .criteria import aic, bic
from .distribution import DiscreteLS
from .errors import DislogError, DomainError
from .estimation import FitResult, fit as fit_model
from .samples import CensoredSample, UncensoredSample

__all__ = [
    "aic",
    "bic",
    "Cell",
    "GofReport",
    "KMEstimate",
    "chi_square_test",
    "cvm_statistic",
    "cvm_test",
    "goodness_of_fit",
    "kaplan_meier",
    "survival_table",
    "TestNotApplicableError",
]

MIN_EXPECTED = 5.0
DEGRADED_FRACTION = 0.10


class TestNotApplicableError(DislogError):
    """Raised when the binned chi-square test has too few cells."""

    __test__ = False


@dataclass(frozen=True)
class Cell:
    """Chi-square cell ``lo <= x <= hi``; ``hi is None`` marks the open last cell."""

    lo: int
    hi: int | None
    observed: int
    expected: float

    def label(self) -> str:
        if self.hi is None:
            return f"{self.lo}+"
        return str(self.lo) if self.lo == self.hi else f"{self.lo}-{self.hi}"


@dataclass(frozen=True)
class GofReport:
    chi2_stat: float
    chi2_pvalue: float
    chi2_df: int
    cvm_stat: float
    cvm_pvalue: float
    aic: float
    bic: float
    binning: tuple
    cvm_degraded: bool = False
    cvm_failed: int = 0

    def to_dict(self) -> dict:
        return {
            "chi2_stat": self.chi2_stat,
            "chi2_pvalue": self.chi2_pvalue,
            "chi2_df": self.chi2_df,
            "cvm_stat": self.cvm_stat,
            "cvm_pvalue": self.cvm_pvalue,
            "cvm_degraded": self.cvm_degraded,
            "cvm_failed": self.cvm_failed,
            "aic": self.aic,
            "bic": self.bic,
            "binning": [
                {"cell": c.label(), "observed": c.observed, "expected": c.expected}
                for c in self.binning
            ],
        }


def _binning(sample: UncensoredSample, dist) -> list[Cell]:
    n = sample.n
    xmax = int(sample.values.max())
    counts = np.zeros(xmax + 1, dtype=np.int64)
    counts[sample.values] = sample.counts
    cells = []
    lo, obs, exp_ = 0, 0, 0.0
    x = 0
    while True:
        obs += int(counts[x]) if x <= xmax else 0
        exp_ += n * float(dist.pmf(x))
        tail_exp = n * float(dist.rf(x))
        if exp_ >= MIN_EXPECTED and tail_exp >= MIN_EXPECTED:
            cells.append(Cell(lo, x, obs, exp_))
            lo, obs, exp_ = x + 1, 0, 0.0
        elif tail_exp < MIN_EXPECTED:
            break
        x += 1
    # open-ended last cell [lo, inf)
    tail_obs = int(counts[lo:].sum())
    tail_exp = n * float(dist.rf(lo - 1)) if lo > 0 else float(n)
    if cells and tail_exp < MIN_EXPECTED:
        last = cells.pop()
        cells.append(Cell(last.lo, None, last.observed + tail_obs, last.expected + tail_exp))
    else:
        cells.append(Cell(lo, None, tail_obs, tail_exp))
    return cells


def chi_square_test(sample: UncensoredSample, fit: FitResult):
    """Pearson chi-square test with cells grown from ``x = 0`` until ``E >= 5``.

    Returns
    -------
    stat, pvalue, df, cells
        ``df = cells - 1 - k`` with ``k`` the number of estimated
        parameters (at least 1).
    """
    if not isinstance(sample, UncensoredSample):
        raise DomainError("chi-square test needs an uncensored sample")
    cells = _binning(sample, fit.dist)
    if len(cells) < 3:
        raise TestNotApplicableError(f"only {len(cells)} cells with expected count >= 5")
    o = np.array([c.observed for c in cells], dtype=float)
    e = np.array([c.expected for c in cells])
    stat = float(np.sum((o - e) ** 2 / e))
    df = max(1, len(cells) - 1 - fit.n_estimated)
    return stat, float(stats.chi2.sf(stat, df)), df, tuple(cells)


def cvm_statistic(sample: UncensoredSample, dist) -> float:
    """``sum_x (F_n(x) - F(x))**2 p(x)`` over ``x = 0..max(sample)``."""
    xs = np.arange(int(sample.values.max()) + 1)
    counts = np.zeros(xs.size)
    counts[sample.values] = sample.counts
    ecdf = np.cumsum(counts) / sample.n
    return float(np.sum((ecdf - dist.cdf(xs)) ** 2 * dist.pmf(xs)))


def _bootstrap_chunk(args):
    kernel, theta, fixed_phi, n, children = args
    dist = DiscreteLS(kernel, theta)
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        rep = UncensoredSample.from_values(dist.sample(n, rng))
        try:
            refit = fit_model(rep, kernel, theta, fix_phi=fixed_phi)
        except DislogError:
            out.append(math.nan)
            continue
        out.append(cvm_statistic(rep, refit.dist) if refit.converged else math.nan)
    return out


def cvm_test(sample: UncensoredSample, fit: FitResult, n_boot: int = 200, seed=0, workers: int = 1):
    """Discrete Cramer-von Mises test with a parametric-bootstrap p-value.

    Each replicate is drawn from the fitted law and refitted with the same
    kernel (and the same fixed ``phi``, if any). Replicate ``b`` uses the
    ``b``-th child of ``SeedSequence(seed)``, so the result does not depend
    on ``workers``.

    Returns
    -------
    stat, pvalue, degraded, failed
        ``degraded`` is set when more than 10% of refits fail.
    """
    if not isinstance(sample, UncensoredSample):
        raise DomainError("CVM test needs an uncensored sample")
    if n_boot < 200:
        raise DomainError("n_boot must be at least 200")
    stat = cvm_statistic(sample, fit.dist)
    children = np.random.SeedSequence(seed).spawn(n_boot)
    workers = max(1, int(workers))
    chunks = [children[i::workers] for i in range(workers)]
    jobs = [(fit.kernel, fit.theta_hat, fit.fixed_phi, sample.n, c) for c in chunks]
    if workers == 1:
        parts = [_bootstrap_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_bootstrap_chunk, jobs))
    boot = np.empty(n_boot)
    for i, part in enumerate(parts):
        boot[i::workers] = part
    ok = ~np.isnan(boot)
    failed = int(n_boot - ok.sum())
    if not ok.any():
        raise DislogError("every bootstrap refit failed")
    pvalue = float((1 + np.sum(boot[ok] >= stat)) / (1 + ok.sum()))
    degraded = failed > DEGRADED_FRACTION * n_boot
    if degraded:
        warnings.warn(f"{failed} of {n_boot} bootstrap refits failed", RuntimeWarning, stacklevel=2)
    return stat, pvalue, degraded, failed


def goodness_of_fit(sample: UncensoredSample, fit: FitResult, n_boot: int = 200, seed=0, workers: int = 1) -> GofReport:
    chi2, p_chi2, df, cells = chi_square_test(sample, fit)
    cvm, p_cvm, degraded, failed = cvm_test(sample, fit, n_boot, seed, workers)
    return GofReport(
        chi2_stat=chi2, chi2_pvalue=p_chi2, chi2_df=df, cvm_stat=cvm, cvm_pvalue=p_cvm,
        aic=aic(fit.loglik, fit.n_params), bic=bic(fit.loglik, fit.n_params, fit.n),
        binning=cells, cvm_degraded=degraded, cvm_failed=failed,
    )


@dataclass(frozen=True, eq=False)
class KMEstimate:
    """Product-limit estimate; ``survival[k]`` is the estimate of ``P(T > times[k])``."""

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def beyond(self, x) -> np.ndarray:
        """``P(T > x)``."""
        x = np.asarray(x)
        idx = np.searchsorted(self.times, x, side="right") - 1
        return np.where(idx >= 0, self.survival[np.maximum(idx, 0)], 1.0)

    def at_least(self, x) -> np.ndarray:
        """``P(T >= x)``, the value listed against ``x`` in survival tables."""
        return self.beyond(np.asarray(x) - 1)


def kaplan_meier(sample: CensoredSample) -> KMEstimate:
    """Product-limit estimator ``S(t) = prod_{t_k <= t} (1 - d_k / N_k)``.

    Events at a time are counted before censorings at that time, so a unit
    censored at ``t_k`` is still at risk at ``t_k``.
    """
    if not isinstance(sample, CensoredSample):
        raise DomainError("Kaplan-Meier needs a censored sample")
    at_risk = sample.at_risk()
    survival = np.cumprod(1.0 - sample.d / at_risk)
    return KMEstimate(sample.x.copy(), survival, at_risk, sample.d.copy())


def survival_table(fits: dict, km: KMEstimate, xs) -> dict:
    """Columns ``x``, ``km`` (``P(T >= x)``) and one fitted ``rf(x)`` column per model key."""
    xs = np.asarray(xs, dtype=np.int64)
    table = {"x": xs, "km": km.at_least(xs).astype(float)}
    for key, result in fits.items():
        table[key] = np.asarray(result.dist.rf(xs), dtype=float)
    return table
