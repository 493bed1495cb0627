"""Point estimators of the extreme value index and of extreme quantiles.

All estimators take an :class:`~censtail.core.OrderedSample` and the number
``k`` of top observations above the baseline ``Z_{n-k,n}``. Scalar functions
evaluate one ``k``; the ``*_trajectory`` functions evaluate many ``k`` at once
and agree with the scalar versions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import CensoredSample, DomainError, OrderedSample, log_spacings, order
from .kernels import Kernel, QuadratureConfig, DEFAULT_QUAD, tilde_transform, tilde_weights


def _pk_positive(ordered: OrderedSample, k: int) -> float:
    pk = int(ordered.uncensored_counts[k - 1]) / k
    if pk == 0.0:
        raise DomainError(f"all top-k observations censored (k={k})")
    return pk


# -- Hill type ---------------------------------------------------------------

def hill_z(ordered: OrderedSample, k: int) -> float:
    """Classical Hill estimator on the observed ``Z`` (flags ignored)."""
    ex = ordered.log_excesses(k)
    return float(ex.sum()) / ex.size


def hill_censored(ordered: OrderedSample, k: int) -> float:
    """Hill estimator divided by the uncensored fraction ``p_k``."""
    k = ordered.check_k(k)
    return hill_z(ordered, k) / _pk_positive(ordered, k)


def trimmed_hill(ordered: OrderedSample, b: int, k: int) -> float:
    """Censored Hill estimator keeping only the ``b`` largest log-excesses."""
    k = ordered.check_k(k)
    if not 1 <= b <= k:
        raise DomainError(f"trimming level b={b} outside 1..{k}")
    pk = _pk_positive(ordered, k)
    tail_harmonic = np.sum(1.0 / np.arange(b + 1, k + 1))
    top = np.mean(ordered.log_excesses(k)[:b])
    return float(top / (1.0 + tail_harmonic) / pk)


# -- Kaplan-Meier ------------------------------------------------------------

@dataclass(frozen=True)
class StepSurvival:
    """Right-continuous step survival function.

    ``values[m]`` is the survival probability on ``[breakpoints[m],
    breakpoints[m+1])``; it is 1 before the first breakpoint.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 1.0)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


def _km_factors(z_asc: np.ndarray, e_asc: np.ndarray) -> np.ndarray:
    n = z_asc.size
    j = np.arange(1, n + 1)
    return np.where(e_asc == 1, (n - j) / (n - j + 1), 1.0)


def kaplan_meier(sample: CensoredSample | OrderedSample) -> StepSurvival:
    """Product-limit estimate, one breakpoint per distinct observation."""
    ordered = sample if isinstance(sample, OrderedSample) else order(sample)
    # ascending order statistics are the reversed descending ones
    z_asc = ordered.z_desc[::-1]
    e_asc = ordered.delta_desc[::-1]
    surv = np.cumprod(_km_factors(z_asc, e_asc))
    # at tied values the right-continuous survival includes the whole block
    last = np.r_[z_asc[1:] != z_asc[:-1], True]
    return StepSurvival(z_asc[last].copy(), surv[last].copy())


def _km_tail_quantile(survival: StepSurvival, tail: float) -> float:
    # 1e-12 absorbs rounding in the cumulative product (e.g. 0.1 vs 0.1000...02)
    hit = np.flatnonzero(survival.values <= tail + 1e-12)
    if hit.size == 0:
        raise DomainError(
            f"survival never drops to {tail:.6g}; Kaplan-Meier tail ends at "
            f"{survival.terminal:.6g}")
    return float(survival.breakpoints[hit[0]])


def km_quantile(survival: StepSurvival, level: float) -> float:
    """Smallest breakpoint ``x`` with ``survival(x) <= 1 - level``."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level={level} outside (0, 1)")
    return _km_tail_quantile(survival, 1.0 - level)


# -- Worms -------------------------------------------------------------------

def _spacings(ordered: OrderedSample, k: int) -> np.ndarray:
    logz = np.log(ordered.z_desc[:k + 1])
    return logz[:-1] - logz[1:]


def worms(ordered: OrderedSample, k: int, form: str = "product") -> float:
    """Kaplan-Meier weighted sum of log-spacings.

    ``form="product"`` uses the weights ``prod_{j=i+1}^k (1-1/j)^{e_j}``;
    ``form="km"`` divides Kaplan-Meier values at the order statistics. Both
    agree mathematically; the product form avoids dividing by small survival
    values.
    """
    k = ordered.check_k(k)
    s = _spacings(ordered, k)
    if form == "product":
        j = np.arange(2, k + 1)
        logf = ordered.delta_desc[1:k] * np.log1p(-1.0 / j)
        # w_i = exp(sum_{j>i} logf_j)
        tail = np.r_[np.cumsum(logf[::-1])[::-1], 0.0]
        return float(np.sum(np.exp(tail) * s))
    if form == "km":
        n = ordered.n
        surv = np.cumprod(_km_factors(ordered.z_desc[::-1],
                                      ordered.delta_desc[::-1]))
        # surv[m - 1] = KM at Z_{m,n} (ascending position m)
        at = lambda m: surv[m - 1]
        i = np.arange(1, k + 1)
        return float(np.sum(at(n - i) / at(n - k) * s))
    raise ValueError(f"unknown form {form!r}")


def worms_trajectory(ordered: OrderedSample, ks) -> np.ndarray:
    ks = np.asarray(ks, dtype=int)
    kmax = ordered.check_k(ks.max())
    ordered.check_k(ks.min())
    s = _spacings(ordered, kmax)
    j = np.arange(1, kmax + 1)
    logf = np.where(j >= 2, ordered.delta_desc[:kmax] * np.log1p(-1.0 / np.maximum(j, 2)), 0.0)
    c = np.cumsum(logf)
    # H_k = sum_{i<=k} exp(c_k - c_i) s_i
    acc = np.cumsum(np.exp(-c) * s)
    return np.exp(c[ks - 1]) * acc[ks - 1]


# -- kernel estimators -------------------------------------------------------

@lru_cache(maxsize=4096)
def _grid(k: int):
    u = np.arange(1, k + 1) / (k + 1)
    u.setflags(write=False)
    logu = -np.log(u)
    logu.setflags(write=False)
    return u, logu


def kernel_estimate(ordered: OrderedSample, k: int, kernel: Kernel) -> float:
    """Kernel-weighted log-excesses over a common baseline ``Z_{n-k,n}``."""
    k = ordered.check_k(k)
    pk = _pk_positive(ordered, k)
    u, logu = _grid(k)
    w = kernel.func(u, pk) / logu
    return float(np.sum(w * ordered.log_excesses(k)) / k)


def hill_a(ordered: OrderedSample, k: int) -> float:
    """Simplified Worms-type estimator with weights ``(i/(k+1))^(p_k-1)``.

    Normalised by ``1/(k+1)`` so that it is the untrimmed end (``b = k``) of
    :func:`trimmed_kernel` with the K1 kernel. The kernel form
    ``kernel_estimate(., k, K1)`` uses ``1/k`` and equals ``(k+1)/k`` times this.
    """
    k = ordered.check_k(k)
    pk = _pk_positive(ordered, k)
    u, logu = _grid(k)
    return float(np.sum(u ** (pk - 1.0) / logu * ordered.log_excesses(k)) / (k + 1))


def kernel_estimate_tilde(ordered: OrderedSample, k: int, kernel: Kernel,
                          discrete: bool = False,
                          quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Kernel estimator written on the scaled spacings ``V_j``.

    With ``discrete=True`` the exact finite-k weights are used and the result
    equals :func:`kernel_estimate`; otherwise the continuous tilde kernel is
    evaluated at ``j/(k+1)``.
    """
    k = ordered.check_k(k)
    pk = _pk_positive(ordered, k)
    v = log_spacings(ordered)[:k]
    if discrete:
        w = tilde_weights(kernel, k, pk)
    else:
        u, _ = _grid(k)
        w = tilde_transform(kernel, quad_cfg).func(u, pk)
    return float(np.sum(w * v) / k)


def trimmed_kernel(ordered: OrderedSample, b: int, k: int, kernel: Kernel) -> float:
    """Kernel estimator restricted to the ``b`` largest log-excesses."""
    k = ordered.check_k(k)
    if not 1 <= b <= k:
        raise DomainError(f"trimming level b={b} outside 1..{k}")
    pk = _pk_positive(ordered, k)
    i = np.arange(1, b + 1)
    w = kernel.func(i / (b + 1), pk) / np.log((k + 1) / i)
    return float(np.sum(w * ordered.log_excesses(k)[:b]) / (b + 1))


def averaged_trimmed(ordered: OrderedSample, k: int, kernel: Kernel) -> float:
    """Plain mean of :func:`trimmed_kernel` over ``b = 1..k``."""
    k = ordered.check_k(k)
    pk = _pk_positive(ordered, k)
    excess = ordered.log_excesses(k)
    logk = np.log((k + 1) / np.arange(1, k + 1))
    total = 0.0
    for b in range(1, k + 1):
        i = np.arange(1, b + 1)
        w = kernel.func(i / (b + 1), pk) / logk[:b]
        total += np.sum(w * excess[:b]) / (b + 1)
    return float(total / k)


def kernel_trajectory(ordered: OrderedSample, ks, kernel: Kernel) -> np.ndarray:
    """:func:`kernel_estimate` at each ``k``; NaN where ``p_k = 0``."""
    ks = np.asarray(ks, dtype=int)
    logz = np.log(ordered.z_desc)
    cum_delta = np.cumsum(ordered.delta_desc)
    out = np.empty(ks.size)
    for m, k in enumerate(ks):
        ordered.check_k(k)
        pk = cum_delta[k - 1] / k
        if pk == 0:
            out[m] = np.nan
            continue
        u, logu = _grid(k)
        out[m] = np.sum(kernel.func(u, pk) / logu * (logz[:k] - logz[k])) / k
    return out


def hill_trajectory(ordered: OrderedSample, ks, censored: bool = True) -> np.ndarray:
    """Hill estimates at each ``k`` in O(n); NaN where ``p_k = 0``."""
    ks = np.asarray(ks, dtype=int)
    ordered.check_k(ks.max())
    ordered.check_k(ks.min())
    logz = np.log(ordered.z_desc)
    hz = np.cumsum(logz)[ks - 1] / ks - logz[ks]
    if not censored:
        return hz
    pk = np.cumsum(ordered.delta_desc)[ks - 1] / ks
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pk > 0, hz / pk, np.nan)


@dataclass(frozen=True)
class Trajectory:
    ks: np.ndarray
    estimates: np.ndarray
    estimator_label: str

    def __post_init__(self):
        if len(self.ks) != len(self.estimates):
            raise ValueError("ks and estimates differ in length")
        if np.any(np.diff(self.ks) <= 0):
            raise ValueError("ks must be strictly increasing")


# -- quantiles ---------------------------------------------------------------

def weissman_quantile(sample: CensoredSample | OrderedSample, k: int,
                      prob_exceed: float, xi_hat: float, anchor: str = "km",
                      survival: StepSurvival | None = None) -> float:
    """Extrapolated quantile ``Q(1 - prob_exceed)`` from ``k`` top observations.

    The anchor ``Q_KM(1 - k/n)`` comes from the Kaplan-Meier estimator; with
    ``anchor="order_statistic"`` the baseline ``Z_{n-k,n}`` is used instead.
    """
    ordered = sample if isinstance(sample, OrderedSample) else order(sample)
    n = ordered.n
    k = ordered.check_k(k)
    if not 0.0 < prob_exceed < k / n:
        raise DomainError(
            f"prob_exceed={prob_exceed} must lie in (0, k/n) = (0, {k / n:.6g})")
    if not xi_hat > 0:
        raise DomainError(f"xi_hat={xi_hat} must be positive")
    if anchor == "km":
        if survival is None:
            survival = kaplan_meier(ordered)
        base = _km_tail_quantile(survival, k / n)
    elif anchor == "order_statistic":
        base = float(ordered.z_desc[k])
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    return base * (k / (n * prob_exceed)) ** xi_hat
