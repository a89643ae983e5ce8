"""Monte Carlo study of the maximum-likelihood estimators.

For every cell ``(n, phi, censoring)`` of a grid the harness simulates
samples, fits ``(lam, phi)`` with the kernel's extra parameters held at
their true values, and summarizes the estimates by mean, bias and MSE.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distribution import DiscreteLS, Theta
from .errors import DislogError, DomainError
from .estimation import fit
from .kernels import KernelSpec
from .samples import CensoredSample, UncensoredSample

log = logging.getLogger(__name__)

__all__ = [
    "SimConfig",
    "ParamSummary",
    "SimCellReport",
    "CalibrationError",
    "censoring_probability",
    "calibrate_censoring_scale",
    "generate_censored_replicate",
    "cell_seed",
    "run_cell",
    "run_study",
    "study_csv",
    "study_table",
    "default_workers",
    "STUDY_KERNELS",
]

CALIBRATION_TOL = 1e-3
WARN_FAILED = 0.01
INVALID_FAILED = 0.10
PARAMS = ("phi", "lambda")
EXACT_TERMS = 4096
BLOCK_GROWTH = 1.01
BLOCKS_PER_PASS = 512

# kernels (with their fixed extra parameters) of the reference study
STUDY_KERNELS = {
    "normal": KernelSpec("normal"),
    "student-t": KernelSpec("student-t", 4),
    "contaminated-normal": KernelSpec("contaminated-normal", (0.5, 0.5)),
    "power-exponential": KernelSpec("power-exponential", -0.5),
    "extended-bs": KernelSpec("extended-bs", 0.5),
    "extended-bs-t": KernelSpec("extended-bs-t", (0.5, 4)),
}


class CalibrationError(DislogError):
    """The requested censoring proportion is outside the attainable range."""


@dataclass(frozen=True)
class SimConfig:
    kernel: KernelSpec
    lambda_true: float = 2.0
    phi_values: tuple = (1.0, 4.0, 8.0)
    n_values: tuple = (40, 120, 400)
    censoring_props: tuple = (0.0, 0.1, 0.3)
    replications: int = 1000
    master_seed: int = 0
    censoring: str = "strict"

    def __post_init__(self):
        object.__setattr__(self, "phi_values", tuple(float(v) for v in self.phi_values))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "censoring_props", tuple(float(v) for v in self.censoring_props))
        if self.replications < 1:
            raise DomainError("replications must be at least 1")
        if not self.lambda_true > 0 or any(not v > 0 for v in self.phi_values):
            raise DomainError("lambda and phi must be positive")
        if any(v < 1 for v in self.n_values):
            raise DomainError("sample sizes must be positive")
        if any(not 0 <= p < 1 for p in self.censoring_props):
            raise DomainError("censoring proportions must lie in [0, 1)")

    def cells(self):
        for prop in self.censoring_props:
            for n in self.n_values:
                for phi in self.phi_values:
                    yield n, phi, prop


@dataclass(frozen=True)
class ParamSummary:
    truth: float
    mean: float
    bias: float
    mse: float
    mc_se: float


@dataclass(frozen=True)
class SimCellReport:
    kernel: KernelSpec
    lambda_true: float
    phi_true: float
    n: int
    censoring: float
    replications: int
    failed_fits: int
    summaries: dict
    estimates: np.ndarray = field(repr=False)
    censored_fraction: float = 0.0

    @property
    def invalid(self) -> bool:
        return self.failed_fits > INVALID_FAILED * self.replications

    def __getitem__(self, param) -> ParamSummary:
        return self.summaries[param]


# --------------------------------------------------------------------------
# censoring

def censoring_probability(dist: DiscreteLS, cens: DiscreteLS, tail_tol: float = 1e-10) -> float:
    """``P(C < X)`` for independent ``X ~ dist`` and ``C ~ cens``.

    ``sum_x p_X(x) F_C(x - 1)`` is summed term by term below ``EXACT_TERMS``.
    Beyond that, ``x`` is grouped into blocks ``[a, b)`` growing by 1% and
    each block contributes ``P_X([a, b))`` times the mean of ``F_C`` at its
    ends; the error is at most half the increase of ``F_C`` over a block.
    The tail with ``R_X < tail_tol`` is dropped.
    """
    x = np.arange(EXACT_TERMS)
    fc = np.concatenate([[0.0], cens.cdf(x[:-1])])
    total = float(np.sum(dist.pmf(x) * fc))
    a = float(EXACT_TERMS)
    while float(dist.rf(a - 1)) >= tail_tol and a < 1e300:
        edges = np.unique(np.ceil(a * BLOCK_GROWTH ** np.arange(BLOCKS_PER_PASS + 1)))
        lo, hi = edges[:-1], edges[1:]
        mass = dist.rf(lo - 1) - dist.rf(hi - 1)
        f_mid = 0.5 * (cens.cdf(lo - 1) + cens.cdf(hi - 2))
        total += float(np.sum(mass * f_mid))
        a = float(edges[-1])
    return total


def calibrate_censoring_scale(dist: DiscreteLS, target: float, tol: float = CALIBRATION_TOL) -> float:
    """Scale ``lam_c`` of a same-kernel, same-``phi`` censoring law with ``P(C < X) = target``.

    Bisection on ``log lam_c``; ``P(C < X)`` decreases in ``lam_c``.
    """
    if not 0 < target < 1:
        raise DomainError("target censoring proportion must lie in (0, 1)")

    def prob(log_lc):
        return censoring_probability(dist, dist.with_theta(math.exp(log_lc), dist.phi))

    lo, hi = math.log(dist.lam) - 5.0, math.log(dist.lam) + 5.0
    p_lo, p_hi = prob(lo), prob(hi)
    for _ in range(8):
        if p_lo >= target:
            break
        lo -= 10.0
        p_lo = prob(lo)
    for _ in range(8):
        if p_hi <= target:
            break
        hi += 10.0
        p_hi = prob(hi)
    if not p_hi <= target <= p_lo:
        raise CalibrationError(
            f"censoring proportion {target} not attainable; range is [{p_hi:.4f}, {p_lo:.4f}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p = prob(mid)
        if abs(p - target) < tol:
            return math.exp(mid)
        if p > target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not reach tolerance {tol} for target {target}")


def generate_censored_replicate(dist: DiscreteLS, n: int, target_prop: float, seed, lam_c: float | None = None):
    """Draw ``n`` lifetimes with independent random right censoring.

    Returns a :class:`CensoredSample` of ``min(X, C)`` with failures where
    ``X <= C``. ``target_prop = 0`` skips censoring entirely. Pass ``lam_c``
    to reuse a calibration across replicates.
    """
    if not 0 <= target_prop < 1:
        raise DomainError("target_prop must lie in [0, 1)")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = dist.sample(n, rng)
    if target_prop == 0:
        return CensoredSample.from_observations(x, np.ones(n, dtype=bool))
    if lam_c is None:
        lam_c = calibrate_censoring_scale(dist, target_prop)
    c = dist.with_theta(lam_c, dist.phi).sample(n, rng)
    return CensoredSample.from_observations(np.minimum(x, c), x <= c)


# --------------------------------------------------------------------------
# cells and studies

def cell_seed(master_seed: int, kernel: KernelSpec, lam: float, phi: float, n: int, prop: float) -> np.random.SeedSequence:
    """Seed for a cell, from a SHA-256 of its coordinates (stable across runs and platforms)."""
    key = f"{kernel.name}|{','.join(repr(float(v)) for v in kernel.xi)}|{lam!r}|{phi!r}|{n}|{prop!r}"
    digest = hashlib.sha256(key.encode()).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *words])


def _summarize(values: np.ndarray, truth: float) -> ParamSummary:
    mean = float(np.mean(values))
    bias = mean - truth
    mse = float(np.mean((values - truth) ** 2))
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return ParamSummary(truth, mean, bias, mse, sd / math.sqrt(values.size))


def run_cell(
    kernel: KernelSpec, lam: float, phi: float, n: int, prop: float, replications: int, seed,
    censoring: str = "strict",
) -> SimCellReport:
    """Simulate and fit ``replications`` samples for one grid cell.

    ``seed`` is an int or a :class:`numpy.random.SeedSequence`; replicate
    ``r`` uses its ``r``-th child. Failed or non-converged fits are excluded
    and counted. Censored cells are fitted with the ``censoring`` variant of
    the censored likelihood; ``"strict"`` (``P(X > c)``) is the one that
    matches the generator, which censors only when ``C < X``.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    dist = DiscreteLS(kernel, Theta(lam, phi))
    lam_c = calibrate_censoring_scale(dist, prop) if prop > 0 else None
    truth = Theta(lam, phi)
    estimates = np.full((replications, 2), np.nan)
    failed = 0
    censored = 0
    for r, child in enumerate(ss.spawn(replications)):
        rng = np.random.default_rng(child)
        if prop > 0:
            sample = generate_censored_replicate(dist, n, prop, rng, lam_c)
            censored += int(sample.q.sum())
        else:
            sample = UncensoredSample.from_values(dist.sample(n, rng))
        try:
            res = fit(sample, kernel, truth, censoring=censoring)
        except DislogError:
            failed += 1
            continue
        if not res.converged:
            failed += 1
            continue
        estimates[r] = (res.phi, res.lam)
    ok = ~np.isnan(estimates[:, 0])
    if failed > WARN_FAILED * replications:
        warnings.warn(
            f"{failed}/{replications} failed fits in cell n={n}, phi={phi}, censoring={prop}",
            RuntimeWarning, stacklevel=2,
        )
    summaries = {}
    if ok.any():
        summaries = {
            "phi": _summarize(estimates[ok, 0], phi),
            "lambda": _summarize(estimates[ok, 1], lam),
        }
    return SimCellReport(
        kernel=kernel, lambda_true=lam, phi_true=phi, n=n, censoring=prop,
        replications=replications, failed_fits=failed, summaries=summaries,
        estimates=estimates, censored_fraction=censored / (n * replications),
    )


def default_workers() -> int:
    env = os.environ.get("DISLOG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"DISLOG_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_cell_args(args):
    return run_cell(*args)


def run_study(config: SimConfig, workers: int | None = None) -> list[SimCellReport]:
    """Run every cell of the grid; the result depends only on ``config``."""
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = [
        (config.kernel, config.lambda_true, phi, n, prop, config.replications,
         cell_seed(config.master_seed, config.kernel, config.lambda_true, phi, n, prop),
         config.censoring)
        for n, phi, prop in config.cells()
    ]
    if workers == 1 or len(jobs) <= 1:
        return [_run_cell_args(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_cell_args, jobs))


# --------------------------------------------------------------------------
# reports

CSV_COLUMNS = ("kernel", "xi", "n", "censoring", "phi_true", "param", "mean", "bias", "mse", "mc_se", "failed")


def _g17(v: float) -> str:
    return format(v, ".17g")


def study_csv(reports: list[SimCellReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        xi = ";".join(_g17(v) for v in rep.kernel.xi)
        for param in PARAMS:
            s = rep.summaries.get(param)
            values = [s.mean, s.bias, s.mse, s.mc_se] if s else [math.nan] * 4
            writer.writerow([
                rep.kernel.name, xi, rep.n, _g17(rep.censoring), _g17(rep.phi_true), param,
                *(_g17(v) for v in values), rep.failed_fits,
            ])
    return buf.getvalue()


def study_table(reports: list[SimCellReport]) -> str:
    """Plain-text table: rows by censoring and n, column blocks by phi."""
    if not reports:
        return ""
    phis = sorted({r.phi_true for r in reports})
    props = sorted({r.censoring for r in reports})
    ns = sorted({r.n for r in reports})
    index = {(r.n, r.phi_true, r.censoring): r for r in reports}
    kernel = reports[0].kernel
    lines = [
        f"Empirical mean, bias and MSE of the ML estimators: {kernel} "
        f"(lambda = {reports[0].lambda_true:g}; extra parameters fixed at their true values)",
        "",
    ]
    head = f"{'n':>5} {'cens':>5} {'':>7}" + "".join(
        f" | {'phi=' + format(p, 'g'):^32}" for p in phis
    )
    sub = f"{'':>5} {'':>5} {'':>7}" + " | {:>10} {:>10} {:>10}".format("mean", "bias", "mse") * len(phis)
    lines += [head, sub, "-" * len(sub)]
    for prop in props:
        for n in ns:
            for param in PARAMS:
                cells = []
                for p in phis:
                    rep = index.get((n, p, prop))
                    s = rep.summaries.get(param) if rep else None
                    if s is None:
                        cells.append(" | {:>10} {:>10} {:>10}".format("-", "-", "-"))
                    else:
                        cells.append(f" | {s.mean:10.4f} {s.bias:10.4f} {s.mse:10.4f}")
                label = "phi^" if param == "phi" else "lambda^"
                lines.append(f"{n:>5} {format(prop, '.0%'):>5} {label:>7}" + "".join(cells))
        lines.append("-" * len(sub))
    failed = sum(r.failed_fits for r in reports)
    if failed:
        lines.append(f"failed fits excluded: {failed}")
    return "\n".join(lines) + "\n"
