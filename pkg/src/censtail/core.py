"""Censored samples, descending order statistics and log-spacings.

Rank convention used throughout the package: rank 1 is the largest
observation. With ``z_desc`` a 0-based array, rank ``i`` lives at
``z_desc[i - 1]`` and the baseline order statistic ``Z_{n-k,n}`` for the
top ``k`` observations is ``z_desc[k]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class DomainError(ValueError):
    """An estimator was evaluated outside its domain (bad k, p_k = 0, ...)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CensoredSample:
    """Observed minima ``z`` with indicators ``delta`` (1 = uncensored)."""

    z: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float).ravel()
        delta = np.array(self.delta).ravel()
        if z.shape != delta.shape:
            raise ValueError(
                f"z and delta differ in length ({z.size} != {delta.size})")
        if z.size < 2:
            raise ValueError("a censored sample needs at least 2 observations")
        bad = np.flatnonzero(~np.isfinite(z) | (z <= 0))
        if bad.size:
            i = int(bad[0])
            kind = "non-finite" if not np.isfinite(z[i]) else "non-positive"
            raise ValueError(f"{kind} observation at index {i + 1}")
        bad = np.flatnonzero((delta != 0) & (delta != 1))
        if bad.size:
            raise ValueError(
                f"censoring flag must be 0 or 1 at index {int(bad[0]) + 1}")
        object.__setattr__(self, "z", _frozen(z))
        object.__setattr__(self, "delta", _frozen(delta.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.z.size


@dataclass(frozen=True)
class OrderedSample:
    """Descending order statistics with their censoring flags."""

    z_desc: np.ndarray
    delta_desc: np.ndarray

    @property
    def n(self) -> int:
        return self.z_desc.size

    def check_k(self, k: int) -> int:
        k = int(k)
        if not 1 <= k <= self.n - 1:
            raise DomainError(f"k={k} outside 1..{self.n - 1}")
        return k

    @cached_property
    def log_z(self) -> np.ndarray:
        return _frozen(np.log(self.z_desc))

    @cached_property
    def uncensored_counts(self) -> np.ndarray:
        """Number of uncensored observations among the top ``k``, at index ``k - 1``."""
        return _frozen(np.cumsum(self.delta_desc, dtype=np.int64))

    def log_excesses(self, k: int) -> np.ndarray:
        """``log(Z_{n-i+1,n} / Z_{n-k,n})`` for ranks ``i = 1..k``."""
        k = self.check_k(k)
        return self.log_z[:k] - self.log_z[k]


def order(sample: CensoredSample) -> OrderedSample:
    """Sort descending; ties keep their input order and flags move with z."""
    idx = np.argsort(-sample.z, kind="stable")
    return OrderedSample(_frozen(sample.z[idx].copy()),
                         _frozen(sample.delta[idx].copy()))


def p_k(ordered: OrderedSample, k: int) -> float:
    """Fraction of uncensored observations among the top ``k``."""
    k = ordered.check_k(k)
    return float(np.mean(ordered.delta_desc[:k]))


def p_k_all(ordered: OrderedSample) -> np.ndarray:
    """``p_k`` for every ``k = 1..n-1`` (index ``k - 1``)."""
    return ordered.uncensored_counts[:-1] / np.arange(1, ordered.n)


def log_spacings(ordered: OrderedSample) -> np.ndarray:
    """Scaled spacings ``V_j = j log(Z_{n-j+1,n}/Z_{n-j,n})``, ``j = 1..n-1``."""
    logz = ordered.log_z
    j = np.arange(1, ordered.n)
    return j * (logz[:-1] - logz[1:])
