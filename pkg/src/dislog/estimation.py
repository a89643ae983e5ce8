"""Maximum-likelihood fitting for grouped, possibly right-censored, count data.

Every observation is an interval of the latent continuous variable ``Y``:
a failure at ``x`` is ``x <= Y < x + 1`` and a censoring at ``x`` is
``Y >= x`` (or ``Y >= x + 1`` with ``censoring="strict"``). The likelihood
contribution is ``G(a(hi)) - G(a(lo))`` and its derivatives follow from

    d G(a(y)) / d t       = G'(a) a_t
    d2 G(a(y)) / d t d s  = G''(a) a_t a_s + G'(a) a_ts

with ``G' = g(a**2)/Z`` and ``G'' = 2 a g'(a**2)/Z``. Boundaries at
``y = 0`` and ``y = inf`` are constants and contribute no derivative.

Optimization runs on ``(log lam, log phi)`` with BFGS and, when needed, a
few safeguarded Newton steps on the analytic Hessian.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize

from . import criteria
from .distribution import DiscreteLS, Theta
from .errors import DislogError, DomainError, FitInfeasibleError
from .kernels import (
    Family,
    KernelSpec,
    d2log_kernel_g,
    dlog_kernel_g,
    log_kernel_g,
    log_partition_constant,
    standard_cdf,
    standard_density,
    standard_density_prime,
)
from .samples import CensoredSample, UncensoredSample

log = logging.getLogger(__name__)

__all__ = [
    "FitResult",
    "loglik",
    "score",
    "hessian",
    "loglik_censored",
    "loglik_censored_hazard_form",
    "score_censored",
    "hessian_censored",
    "fisher_information",
    "fit",
    "profile_fit",
    "default_xi_grid",
    "initial_theta",
]

LOG_FLOOR = 1e-300
GTOL = 1e-6
MAX_ITER = 500
NEWTON_STEPS = 50
ROUNDING = 64 * np.finfo(float).eps
CENSORING_MODES = ("inclusive", "strict")
# half-width in a below which an interval probability is taken from the density
NARROW = 1e-5


# --------------------------------------------------------------------------
# derivatives of G(a(y)) with respect to (lam, phi)

def _boundary_terms(dist: DiscreteLS, y, order: int):
    lam, phi = dist.lam, dist.phi
    with np.errstate(divide="ignore"):
        a = np.log(y / lam) / math.sqrt(phi)
    kernel = dist.kernel
    G = standard_cdf(kernel, a)
    S = standard_cdf(kernel, -a)
    if order == 0:
        return a, G, S, None, None
    fin = np.isfinite(a)
    af = np.where(fin, a, 0.0)
    d1 = np.where(fin, standard_density(kernel, af), 0.0)
    rp = math.sqrt(phi)
    a_l = -1.0 / (lam * rp)
    a_p = -af / (2.0 * phi)
    dG = np.stack([d1 * a_l, d1 * a_p])
    if order == 1:
        return a, G, S, dG, None
    d2 = np.where(fin, standard_density_prime(kernel, af), 0.0)
    a_ll = 1.0 / (lam * lam * rp)
    a_lp = 1.0 / (2.0 * lam * phi * rp)
    a_pp = 3.0 * af / (4.0 * phi * phi)
    d2G = np.stack([
        d2 * a_l * a_l + d1 * a_ll,
        d2 * a_l * a_p + d1 * a_lp,
        d2 * a_p * a_p + d1 * a_pp,
    ])
    return a, G, S, dG, d2G


class _IntervalLikelihood:
    """Weighted sum of ``log P(lo <= Y < hi)`` over distinct intervals."""

    def __init__(self, lo, hi, w, labels, width=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.labels = labels
        # log(hi / lo) without forming lo + 1, which rounds away for huge lo
        self.log_ratio = np.full(self.lo.shape, np.inf)
        ok = np.isfinite(self.hi) & (self.lo > 0)
        width = self.hi - self.lo if width is None else width
        width = np.broadcast_to(np.asarray(width, dtype=float), self.lo.shape)
        self.log_ratio[ok] = np.log1p(width[ok] / self.lo[ok])
        self.bounds = np.unique(np.concatenate([self.lo, self.hi]))
        self.ilo = np.searchsorted(self.bounds, self.lo)
        self.ihi = np.searchsorted(self.bounds, self.hi)

    @classmethod
    def from_sample(cls, sample, censoring: str = "inclusive"):
        if censoring not in CENSORING_MODES:
            raise DomainError(f"censoring must be one of {CENSORING_MODES}")
        if isinstance(sample, UncensoredSample):
            x = sample.values.astype(float)
            labels = [("failure", int(v)) for v in sample.values]
            return cls(x, x + 1.0, sample.counts, labels, width=1.0)
        if isinstance(sample, CensoredSample):
            fail = sample.d > 0
            cens = sample.q > 0
            xf = sample.x[fail].astype(float)
            xc = sample.x[cens].astype(float)
            lo = np.concatenate([xf, xc + (1.0 if censoring == "strict" else 0.0)])
            hi = np.concatenate([xf + 1.0, np.full(xc.size, np.inf)])
            w = np.concatenate([sample.d[fail], sample.q[cens]])
            labels = [("failure", int(v)) for v in sample.x[fail]] + [
                ("censored", int(v)) for v in sample.x[cens]
            ]
            width = np.concatenate([np.ones(xf.size), np.full(xc.size, np.inf)])
            return cls(lo, hi, w, labels, width=width)
        raise DomainError(f"unsupported sample type {type(sample).__name__}")

    def evaluate(self, dist: DiscreteLS, order: int = 0, floor: bool = True):
        a, G, S, dG, d2G = _boundary_terms(dist, self.bounds, order)
        ilo, ihi = self.ilo, self.ihi
        upper_side = a[ilo] >= 0
        P = np.where(upper_side, S[ilo] - S[ihi], G[ihi] - G[ilo])
        P = np.maximum(P, 0.0)
        narrow = self._narrow(dist)
        if not floor:
            bad_mask = (P <= 0) & ~narrow
            if np.any(bad_mask):
                bad = [self.labels[i] for i in np.flatnonzero(bad_mask)]
                raise FitInfeasibleError(
                    f"zero probability at observed point(s) {bad} for "
                    f"lambda={dist.lam:g}, phi={dist.phi:g}"
                )
        Pf = np.maximum(P, LOG_FLOOR)
        logP = np.log(Pf)
        if order >= 1:
            r = (dG[:, ihi] - dG[:, ilo]) / Pf
        if order >= 2:
            q = (d2G[:, ihi] - d2G[:, ilo]) / Pf
        if narrow.any():
            nl, nr, nq = _narrow_terms(dist, self.lo[narrow], self.log_ratio[narrow], order)
            logP[narrow] = nl
            if order >= 1:
                r[:, narrow] = nr
            if order >= 2:
                q[:, narrow] = nq
        floored = (P < LOG_FLOOR) & ~narrow
        w = self.w
        ll = float(np.sum(w * logP))
        if order == 0:
            return ll, None, None, floored
        grad = (w * r).sum(axis=1)
        if order == 1:
            return ll, grad, None, floored
        h_ll = np.sum(w * (q[0] - r[0] * r[0]))
        h_lp = np.sum(w * (q[1] - r[0] * r[1]))
        h_pp = np.sum(w * (q[2] - r[1] * r[1]))
        H = np.array([[h_ll, h_lp], [h_lp, h_pp]])
        return ll, grad, H, floored

    def _narrow(self, dist):
        return self.log_ratio / (2.0 * math.sqrt(dist.phi)) < NARROW


def _narrow_terms(dist: DiscreteLS, lo, log_ratio, order: int):
    """``log P``, ``grad P / P`` and ``hess P / P`` for intervals narrow in ``a``.

    With ``m`` the midpoint and ``d`` the half-width of ``[a(lo), a(hi)]``,
    ``P = 2 d g(m**2) / Z (1 + O(d**2))``. The difference of CDF values
    would lose every significant digit here.
    """
    rp = math.sqrt(dist.phi)
    m = (np.log(lo) + 0.5 * log_ratio - math.log(dist.lam)) / rp
    d = log_ratio / (2.0 * rp)
    kernel = dist.kernel
    logP = np.log(2.0 * d) + log_kernel_g(kernel, m * m) - log_partition_constant(kernel)
    if order == 0:
        return logP, None, None
    r, q = _midpoint_derivatives(dist, m, order)
    return logP, r, q


def _midpoint_derivatives(dist: DiscreteLS, m, order: int):
    """Derivatives of ``log(2 d g(m**2))`` in ``(lam, phi)`` at midpoint ``m``.

    Returns ``grad P / P`` and (for ``order`` 2) the three entries of
    ``hess P / P``; ``d`` is proportional to ``phi**-0.5``.
    """
    lam, phi = dist.lam, dist.phi
    rp = math.sqrt(phi)
    u = m * m
    kernel = dist.kernel
    h1 = dlog_kernel_g(kernel, u)
    m_l = -1.0 / (lam * rp)
    m_p = -m / (2.0 * phi)
    b = 2.0 * m * h1
    s_l = b * m_l
    s_p = -0.5 / phi + b * m_p
    r = np.stack([s_l, s_p])
    if order == 1:
        return r, None
    h2 = d2log_kernel_g(kernel, u)
    m_ll = 1.0 / (lam * lam * rp)
    m_lp = 1.0 / (2.0 * lam * phi * rp)
    m_pp = 3.0 * m / (4.0 * phi * phi)
    c = 4.0 * u * h2
    t_ll = c * m_l * m_l + 2.0 * h1 * (m_l * m_l + m * m_ll)
    t_lp = c * m_l * m_p + 2.0 * h1 * (m_l * m_p + m * m_lp)
    t_pp = 0.5 / phi**2 + c * m_p * m_p + 2.0 * h1 * (m_p * m_p + m * m_pp)
    # hess P / P = hess log P + grad log P grad log P'
    q = np.stack([t_ll + s_l * s_l, t_lp + s_l * s_p, t_pp + s_p * s_p])
    return r, q


def _require(sample, kind):
    if not isinstance(sample, kind):
        raise DomainError(f"expected {kind.__name__}, got {type(sample).__name__}")


# --------------------------------------------------------------------------
# public likelihood surfaces

def loglik(sample: UncensoredSample, dist: DiscreteLS) -> float:
    """``sum_x freq(x) log p(x)``; raises :class:`FitInfeasibleError` on zero mass."""
    _require(sample, UncensoredSample)
    return _IntervalLikelihood.from_sample(sample).evaluate(dist, 0, floor=False)[0]


def score(sample: UncensoredSample, dist: DiscreteLS) -> np.ndarray:
    _require(sample, UncensoredSample)
    return _IntervalLikelihood.from_sample(sample).evaluate(dist, 1, floor=False)[1]


def hessian(sample: UncensoredSample, dist: DiscreteLS) -> np.ndarray:
    _require(sample, UncensoredSample)
    return _IntervalLikelihood.from_sample(sample).evaluate(dist, 2, floor=False)[2]


def loglik_censored(sample: CensoredSample, dist: DiscreteLS, censoring: str = "inclusive") -> float:
    """``sum_k d_k log p(x_k) + q_k log[p(x_k) + R(x_k)]``.

    ``censoring="strict"`` replaces ``p + R = P(X >= x)`` by ``R = P(X > x)``.
    """
    _require(sample, CensoredSample)
    return _IntervalLikelihood.from_sample(sample, censoring).evaluate(dist, 0, floor=False)[0]


def score_censored(sample: CensoredSample, dist: DiscreteLS, censoring: str = "inclusive"):
    _require(sample, CensoredSample)
    return _IntervalLikelihood.from_sample(sample, censoring).evaluate(dist, 1, floor=False)[1]


def hessian_censored(sample: CensoredSample, dist: DiscreteLS, censoring: str = "inclusive"):
    _require(sample, CensoredSample)
    return _IntervalLikelihood.from_sample(sample, censoring).evaluate(dist, 2, floor=False)[2]


def loglik_censored_hazard_form(sample: CensoredSample, dist: DiscreteLS, literal: bool = False) -> float:
    """Censored log-likelihood written through the hazard rate.

    Uses ``p(x) = H(x) S(x)`` and ``p(x) + R(x) = S(x)`` where
    ``S(x) = prod_{y<x} (1 - H(y))``, giving
    ``sum_k d_k log H(x_k) + (d_k + q_k) sum_{y<x_k} log(1 - H(y))``.
    ``literal=True`` adds the extra ``-(d_k + q_k) log(1 - H(x_k))`` term of
    the printed variant, which is only correct if the product reaches ``x``.
    """
    _require(sample, CensoredSample)
    xmax = int(sample.x.max())
    h = np.asarray(dist.hazard(np.arange(xmax + 1)), dtype=float)
    with np.errstate(divide="ignore"):
        log_surv = np.concatenate([[0.0], np.cumsum(np.log1p(-h))])  # log S(0..xmax+1)
        log_h = np.log(h[sample.x])
    d, q = sample.d.astype(float), sample.q.astype(float)
    terms = np.where(d > 0, d * log_h, 0.0) + (d + q) * log_surv[sample.x]
    if literal:
        terms = terms - (d + q) * np.log1p(-h[sample.x])
    return float(np.sum(terms))


def _tail_information(dist: DiscreteLS, x0: float, form: str) -> np.ndarray:
    """Information carried by ``x >= x0``, where every cell is narrow in ``a``.

    There ``p(x)`` is the density at the cell midpoint to relative order
    ``d**2``, so the sum over cells becomes an integral over ``r = a(y)``.
    """
    # the cell [x0, x0 + 1) starts the tail; its midpoint sits at x0 + 0.5
    r0 = math.log(x0 / dist.lam) / math.sqrt(dist.phi)

    def terms(r):
        s, q = _midpoint_derivatives(dist, np.array([r]), 2)
        s, q = s[:, 0], q[:, 0]
        out = np.array([s[0] * s[0], s[0] * s[1], s[1] * s[1]])
        if form == "hessian":
            out = out - q
        return out * float(standard_density(dist.kernel, r))

    entries = []
    for k in range(3):
        val, _ = integrate.quad(lambda r: terms(r)[k], r0, np.inf, limit=200)
        entries.append(val)
    return np.array([[entries[0], entries[1]], [entries[1], entries[2]]])


def fisher_information(dist: DiscreteLS, tail_tol: float = 1e-10, form: str = "score") -> np.ndarray:
    """Expected information for one observation, as a truncated series over x.

    ``form="score"`` sums ``grad p grad p' / p`` (PSD by construction);
    ``form="hessian"`` sums ``grad p grad p' / p - hess p``, i.e. minus the
    expected Hessian of ``log p``. Both agree since ``sum_x hess p = 0``.

    The series is summed exactly until its blocks and ``R(x)`` fall below
    ``tail_tol``. Heavy tails that are still above it once unit cells are
    narrower than ``NARROW`` on the ``a`` scale are finished by quadrature.
    """
    if form not in ("score", "hessian"):
        raise DomainError("form must be 'score' or 'hessian'")
    # beyond this x the half-width log1p(1/x) / (2 sqrt(phi)) is below NARROW
    x_narrow = 1.0 / math.expm1(2.0 * math.sqrt(dist.phi) * NARROW)
    info = np.zeros((2, 2))
    start, width = 0, 256
    prev = math.inf
    while start < 10_000_000:
        if start >= x_narrow:
            return info + _tail_information(dist, float(start), form)
        x = np.arange(start, start + width, dtype=float)
        lik = _IntervalLikelihood(x, x + 1.0, np.ones_like(x), None, width=1.0)
        a, G, S, dG, d2G = _boundary_terms(dist, lik.bounds, 2)
        P = np.where(a[lik.ilo] >= 0, S[lik.ilo] - S[lik.ihi], G[lik.ihi] - G[lik.ilo])
        ok = P > 0
        dP = (dG[:, lik.ihi] - dG[:, lik.ilo])[:, ok]
        Pk = P[ok]
        outer = np.einsum("im,jm->ij", dP / Pk, dP)
        if form == "hessian":
            d2P = (d2G[:, lik.ihi] - d2G[:, lik.ilo])[:, ok].sum(axis=1)
            outer = outer - np.array([[d2P[0], d2P[1]], [d2P[1], d2P[2]]])
        info += outer
        block = float(np.max(np.abs(outer)))
        if block < tail_tol and block <= 0.5 * prev and dist.rf(start + width) < tail_tol:
            return info
        prev = block
        start += width
        width *= 2
    raise DislogError("information series not convergent within 10^7 terms")


# --------------------------------------------------------------------------
# fitting

@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of a maximum-likelihood fit."""

    kernel: KernelSpec
    lam: float
    phi: float
    se_lambda: float | None
    se_phi: float | None
    loglik: float
    aic: float
    bic: float
    n: int
    n_params: int
    n_estimated: int
    converged: bool
    iterations: int
    gradient_norm: float
    hessian: np.ndarray
    fixed_phi: float | None = None
    censored: bool = False
    censoring: str = "inclusive"
    convention: str = "padded"
    message: str = ""
    trace: tuple = ()
    profile: tuple = ()

    @property
    def xi(self) -> tuple:
        return self.kernel.xi

    @property
    def theta_hat(self) -> Theta:
        return Theta(self.lam, self.phi)

    @property
    def dist(self) -> DiscreteLS:
        return DiscreteLS(self.kernel, self.theta_hat)

    @property
    def se(self) -> dict:
        out = {"lambda": self.se_lambda}
        if self.fixed_phi is None:
            out["phi"] = self.se_phi
        return out

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.name,
            "xi": list(self.kernel.xi),
            "lambda": self.lam,
            "phi": self.phi,
            "se_lambda": self.se_lambda,
            "se_phi": self.se_phi,
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def initial_theta(sample) -> Theta:
    """Median + 0.5 for lambda; variance of log(x + 1) (clipped) for phi."""
    if isinstance(sample, CensoredSample):
        values, weights = sample.x, sample.d + sample.q
    else:
        values, weights = sample.values, sample.counts
    values = values.astype(float)
    cum = np.cumsum(weights)
    med = values[np.searchsorted(cum, 0.5 * cum[-1])]
    lx = np.log1p(values)
    mean = np.average(lx, weights=weights)
    var = np.average((lx - mean) ** 2, weights=weights)
    return Theta(med + 0.5, float(np.clip(var, 0.05, 50.0)))


def _sample_size(sample) -> int:
    return sample.n


def fit(
    sample,
    kernel: KernelSpec,
    init: Theta | None = None,
    *,
    fix_phi: float | None = None,
    censoring: str = "inclusive",
    convention: str = "padded",
    gtol: float = GTOL,
    max_iter: int = MAX_ITER,
) -> FitResult:
    """Maximize the (censored) log-likelihood over ``(lam, phi)`` for fixed ``xi``.

    Parameters
    ----------
    sample : UncensoredSample or CensoredSample
    kernel : KernelSpec
        Kernel with its extra parameters held fixed.
    init : Theta, optional
        Starting point; defaults to :func:`initial_theta`.
    fix_phi : float, optional
        Hold ``phi`` at this value and estimate ``lam`` only.
    censoring : {"inclusive", "strict"}
        Censored rows contribute ``P(X >= x)`` (inclusive) or ``P(X > x)``.
    convention : {"padded", "strict"}
        Parameter counting for AIC/BIC, see :func:`criteria.parameter_count`.

    Returns
    -------
    FitResult
        ``converged`` is true when the sup-norm of the gradient with respect
        to ``(log lam, log phi)`` is below ``gtol``.
    """
    lik = _IntervalLikelihood.from_sample(sample, censoring)
    start = init if init is not None else initial_theta(sample)
    fixed = fix_phi is not None
    if fixed and not fix_phi > 0:
        raise DomainError("fix_phi must be positive")

    attempts = [start]
    best = None
    for phi0 in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0):
        attempts.append(Theta(start.lam, phi0))
    for theta0 in attempts:
        result = _optimize(lik, sample, kernel, theta0, fix_phi, gtol, max_iter)
        if best is None or (result["converged"], result["loglik"]) > (best["converged"], best["loglik"]):
            best = result
        if best["converged"]:
            break
    return _finalize(best, lik, sample, kernel, fix_phi, censoring, convention)


def _optimize(lik, sample, kernel, theta0, fix_phi, gtol, max_iter):
    fixed = fix_phi is not None

    def unpack(eta):
        lam = math.exp(eta[0])
        phi = fix_phi if fixed else math.exp(eta[1])
        return lam, phi

    def evaluate(eta, order):
        lam, phi = unpack(eta)
        if not (math.isfinite(lam) and math.isfinite(phi) and lam > 0 and phi > 0):
            return -math.inf, None, None
        dist = DiscreteLS(kernel, Theta(lam, phi))
        ll, g, H, _ = lik.evaluate(dist, order)
        theta = np.array([lam, phi])
        if order >= 1:
            g_eta = g * theta
            if H is not None:
                H = H * np.outer(theta, theta) + np.diag(g_eta)
            if fixed:
                g_eta = g_eta[:1]
                H = None if H is None else H[:1, :1]
            return ll, g_eta, H
        return ll, None, None

    def fun(eta):
        try:
            ll, g, _ = evaluate(eta, 1)
        except (OverflowError, FloatingPointError, DomainError):
            return math.inf, np.zeros_like(eta)
        if not math.isfinite(ll):
            return math.inf, np.zeros_like(eta)
        return -ll, -g

    eta0 = np.log([theta0.lam] if fixed else [theta0.lam, theta0.phi])
    trace = []

    def callback(intermediate_result):
        trace.append(-float(intermediate_result.fun))

    with np.errstate(all="ignore"):
        res = optimize.minimize(
            fun, eta0, jac=True, method="BFGS", callback=callback,
            options={"gtol": gtol, "norm": np.inf, "maxiter": max_iter},
        )
    eta = np.asarray(res.x, dtype=float)
    iterations = int(res.nit)
    ll, g, H = evaluate(eta, 2)
    message = str(res.message)

    # Newton polish with backtracking. Near the optimum the gain of a step
    # can be below the rounding of ll, so a step is also taken when ll is
    # unchanged within rounding and the gradient shrinks.
    polish = 0
    while g is not None and np.max(np.abs(g)) >= gtol and iterations < max_iter and polish < NEWTON_STEPS:
        iterations += 1
        polish += 1
        step = None
        try:
            if np.all(np.linalg.eigvalsh(-H) > 0):
                step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            step = None
        if step is None:
            step = g / max(1.0, np.max(np.abs(g)))
        slack = ROUNDING * max(1.0, abs(ll))
        gnorm = np.max(np.abs(g))
        t = 1.0
        accepted = None
        while t > 1e-12:
            cand = eta + t * step
            cll = evaluate(cand, 0)[0]
            if math.isfinite(cll) and cll > ll:
                accepted = cand
                break
            if math.isfinite(cll) and cll >= ll - slack:
                cg = evaluate(cand, 1)[1]
                if np.max(np.abs(cg)) < gnorm:
                    accepted = cand
                    break
            t *= 0.5
        if accepted is None:
            message = "line search failed to improve the log-likelihood"
            break
        eta = accepted
        ll, g, H = evaluate(eta, 2)
        trace.append(ll)
    lam, phi = unpack(eta)
    gnorm = float(np.max(np.abs(g))) if g is not None else math.inf
    converged = bool(math.isfinite(ll) and gnorm < gtol)
    if iterations >= max_iter and not converged:
        message = f"no convergence after {max_iter} iterations"
    return {
        "lam": lam, "phi": phi, "loglik": ll, "converged": converged,
        "iterations": iterations, "gradient_norm": gnorm, "message": message,
        "trace": tuple(trace),
    }


def _finalize(best, lik, sample, kernel, fix_phi, censoring, convention):
    lam, phi = best["lam"], best["phi"]
    dist = DiscreteLS(kernel, Theta(lam, phi))
    ll, _, H, floored = lik.evaluate(dist, 2)
    converged = best["converged"]
    message = best["message"]
    if np.any(floored):
        converged = False
        message = "infeasible: zero probability at an observed point"
    fixed = fix_phi is not None
    se_l = se_p = None
    block = -H[:1, :1] if fixed else -H
    try:
        cov = np.linalg.inv(block)
        diag = np.diag(cov)
        if np.all(np.isfinite(diag)) and np.all(diag > 0) and np.all(np.linalg.eigvalsh(block) > 0):
            se_l = float(math.sqrt(diag[0]))
            se_p = None if fixed else float(math.sqrt(diag[1]))
    except np.linalg.LinAlgError:
        pass
    n = _sample_size(sample)
    k = criteria.parameter_count(kernel, fixed, convention)
    k_est = criteria.parameter_count(kernel, fixed, "strict")
    return FitResult(
        kernel=kernel, lam=lam, phi=phi, se_lambda=se_l, se_phi=se_p,
        loglik=ll, aic=criteria.aic(ll, k), bic=criteria.bic(ll, k, n), n=n,
        n_params=k, n_estimated=k_est, converged=converged,
        iterations=best["iterations"], gradient_norm=best["gradient_norm"], hessian=H,
        fixed_phi=fix_phi, censored=isinstance(sample, CensoredSample),
        censoring=censoring, convention=convention, message=message, trace=best["trace"],
    )


# --------------------------------------------------------------------------
# profile likelihood over xi

def default_xi_grid(family: Family | str) -> list[tuple[float, ...]]:
    """Extra-parameter grids searched by :func:`profile_fit` when none is given."""
    fam = Family.parse(family)
    tenths = [round(0.1 * k, 1) for k in range(1, 31)]
    if fam is Family.NORMAL:
        return [()]
    if fam is Family.STUDENT_T:
        return [(float(k),) for k in range(1, 101)]
    if fam is Family.POWER_EXPONENTIAL:
        return [(round(0.1 * k, 1),) for k in range(-9, 11)]
    if fam is Family.CONTAMINATED_NORMAL:
        ticks = [round(0.1 * k, 1) for k in range(1, 10)]
        return [(a, b) for a in ticks for b in ticks]
    if fam is Family.EXTENDED_BS:
        return [(v,) for v in tenths]
    return [(v, float(k)) for v in tenths for k in range(1, 101)]


def profile_fit(
    sample,
    family: Family | str,
    xi_grid: Iterable[Sequence[float] | float] | None = None,
    **fit_kwargs,
) -> FitResult:
    """Fit at each grid value of ``xi`` and keep the one with the largest log-likelihood.

    The returned result carries ``profile``: a tuple of ``(xi, loglik)`` pairs
    (``nan`` where the fit raised).
    """
    fam = Family.parse(family)
    grid = default_xi_grid(fam) if xi_grid is None else list(xi_grid)
    if not grid:
        raise DomainError("xi grid is empty")
    kernels = [KernelSpec(fam, xi) for xi in grid]
    best = None
    curve = []
    errors = []
    for kernel in kernels:
        try:
            res = fit(sample, kernel, **fit_kwargs)
        except DislogError as exc:
            errors.append((kernel.xi, str(exc)))
            curve.append((kernel.xi, math.nan))
            continue
        curve.append((kernel.xi, res.loglik))
        key = (res.converged, res.loglik)
        if best is None or key > (best.converged, best.loglik):
            best = res
    if best is None:
        detail = "; ".join(f"xi={xi}: {msg}" for xi, msg in errors[:5])
        raise DislogError(f"all {len(grid)} grid fits failed ({detail})")
    return replace(best, profile=tuple(curve))
