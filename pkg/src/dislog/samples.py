"""Grouped count samples, with and without right censoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


def _int_array(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr.astype(float))):
        raise DataError(f"{name} contains non-finite entries")
    if arr.size and np.any(arr.astype(float) != np.round(arr.astype(float))):
        raise DataError(f"{name} must be integer valued")
    return arr.astype(np.int64)


@dataclass(frozen=True, eq=False)
class UncensoredSample:
    """Distinct values with positive frequencies."""

    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        values = _int_array(self.values, "values")
        counts = _int_array(self.counts, "counts")
        if values.shape != counts.shape:
            raise DataError("values and counts differ in length")
        if values.size == 0:
            raise DataError("sample is empty")
        if np.any(values < 0):
            raise DataError("values must be nonnegative")
        if np.any(counts <= 0):
            raise DataError("frequencies must be positive")
        if np.unique(values).size != values.size:
            raise DataError("duplicate values")
        order = np.argsort(values)
        object.__setattr__(self, "values", values[order])
        object.__setattr__(self, "counts", counts[order])

    @classmethod
    def from_values(cls, xs) -> UncensoredSample:
        xs = _int_array(np.ravel(xs), "observations")
        if xs.size == 0:
            raise DataError("sample is empty")
        values, counts = np.unique(xs, return_counts=True)
        return cls(values, counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def expand(self) -> np.ndarray:
        return np.repeat(self.values, self.counts)

    def as_censored(self) -> CensoredSample:
        return CensoredSample(self.values, self.counts, np.zeros_like(self.counts))

    def __eq__(self, other):
        return (
            isinstance(other, UncensoredSample)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self):
        return f"UncensoredSample(n={self.n}, distinct={self.values.size})"


@dataclass(frozen=True, eq=False)
class CensoredSample:
    """Rows ``(x_k, d_k, q_k)``: failures and right-censorings at each distinct time."""

    x: np.ndarray
    d: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        x = _int_array(self.x, "x")
        d = _int_array(self.d, "d")
        q = _int_array(self.q, "q")
        if not (x.shape == d.shape == q.shape):
            raise DataError("x, d and q differ in length")
        if x.size == 0:
            raise DataError("sample is empty")
        if np.any(x < 0):
            raise DataError("times must be nonnegative")
        if np.any(d < 0) or np.any(q < 0):
            raise DataError("counts must be nonnegative")
        if np.any(d + q < 1):
            raise DataError("every row needs at least one failure or censoring")
        if np.any(np.diff(x) <= 0):
            raise DataError("times must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_observations(cls, times, observed) -> CensoredSample:
        """Group ``(time, delta)`` pairs; ``delta = 1`` marks an observed failure."""
        times = _int_array(np.ravel(times), "times")
        observed = np.asarray(observed, dtype=bool).ravel()
        if times.shape != observed.shape:
            raise DataError("times and indicators differ in length")
        if times.size == 0:
            raise DataError("sample is empty")
        x = np.unique(times)
        idx = np.searchsorted(x, times)
        d = np.bincount(idx, weights=observed, minlength=x.size).astype(np.int64)
        q = np.bincount(idx, weights=~observed, minlength=x.size).astype(np.int64)
        return cls(x, d, q)

    @property
    def n(self) -> int:
        return int(self.d.sum() + self.q.sum())

    @property
    def censored_fraction(self) -> float:
        return float(self.q.sum()) / self.n

    def at_risk(self) -> np.ndarray:
        """``N_k``: individuals with time >= x_k."""
        return np.cumsum((self.d + self.q)[::-1])[::-1]

    def __eq__(self, other):
        return (
            isinstance(other, CensoredSample)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.q, other.q)
        )

    def __repr__(self):
        return f"CensoredSample(n={self.n}, censored={int(self.q.sum())})"
