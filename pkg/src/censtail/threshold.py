"""Adaptive choice of the number of top order statistics.

The empirical variance ``S_k^2`` of the trimmed (uncensored) Hill trajectory
``b -> H^Z_{b,k}`` is minimised over a candidate range to get ``khat0``;
a link factor depending on ``p_{khat0}`` and ``rho_z`` then rescales it to
the AMSE-optimal ``k`` of the censored estimator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DomainError, OrderedSample
from .kernels import DEFAULT_QUAD, Kernel, QuadratureConfig
from .secondorder import DerivedZParams, SecondOrderModel, derive_z_params, \
    moment_integral, variance_term

log = logging.getLogger(__name__)

# f profiles for the link constant; "unit" makes K / ((1 - rho)^2 f(rho)) = K
LINK_PROFILES: dict[str, Callable[[float], float]] = {
    "unit": lambda rho: (1.0 - rho) ** -2,
    "constant": lambda rho: 1.0,
}


@dataclass(frozen=True)
class ThresholdConfig:
    rho_z: float = -1.0
    k_lo: int = 10
    k_hi_fraction: float = 0.2
    link_constant_K: float = 1.0
    link_function_f: Callable[[float], float] = field(
        default=LINK_PROFILES["unit"], repr=False)

    def __post_init__(self):
        if not self.rho_z < 0:
            raise ValueError("rho_z must be negative")
        if self.k_lo < 2:
            raise ValueError("k_lo must be >= 2")
        if not 0 < self.k_hi_fraction <= 1:
            raise ValueError("k_hi_fraction must lie in (0, 1]")
        if not self.link_constant_K > 0 or not self.link_function_f(self.rho_z) > 0:
            raise ValueError("link constant and link function must be positive")

    @classmethod
    def with_profile(cls, profile: str, **kw) -> "ThresholdConfig":
        try:
            f = LINK_PROFILES[profile]
        except KeyError:
            raise ValueError(f"unknown link profile {profile!r}") from None
        return cls(link_function_f=f, **kw)

    def k_range(self, n: int) -> tuple[int, int]:
        k_hi = min(int(math.floor(n * self.k_hi_fraction)), n - 1)
        if k_hi < self.k_lo:
            raise DomainError(
                f"empty candidate range [{self.k_lo}, {k_hi}] for n={n}")
        return self.k_lo, k_hi

    @property
    def link(self) -> float:
        """``K / ((1 - rho)^2 f(rho))``."""
        rho = self.rho_z
        return self.link_constant_K / ((1 - rho) ** 2 * self.link_function_f(rho))


@dataclass(frozen=True)
class ThresholdResult:
    k_hat0: int
    k_adaptive: int
    s2_trajectory: np.ndarray  # rows (k, S_k^2)
    p_at_khat0: float
    k_raw: float
    clamped: bool = False
    degenerate: bool = False


def trimmed_hill_z(ordered: OrderedSample, k: int) -> np.ndarray:
    """``H^Z_{b,k}`` for ``b = 1..k``."""
    k = ordered.check_k(k)
    logz = np.log(ordered.z_desc[:k + 1])
    b = np.arange(1, k + 1)
    top_mean = np.cumsum(logz[:k]) / b - logz[k]
    inv = 1.0 / b
    # sum_{j=b+1}^k 1/j
    tail_h = np.cumsum(inv[::-1])[::-1] - inv
    return top_mean / (1.0 + tail_h)


def s2_at(ordered: OrderedSample, k: int) -> float:
    return float(np.var(trimmed_hill_z(ordered, k)))


def s2_trajectory(ordered: OrderedSample, config: ThresholdConfig = ThresholdConfig()) -> np.ndarray:
    """Array of rows ``(k, S_k^2)`` over the candidate range."""
    lo, hi = config.k_range(ordered.n)
    ks = np.arange(lo, hi + 1)
    return np.column_stack([ks, [s2_at(ordered, k) for k in ks]])


def khat0(ordered: OrderedSample, config: ThresholdConfig = ThresholdConfig(),
          trajectory: np.ndarray | None = None) -> int:
    traj = s2_trajectory(ordered, config) if trajectory is None else trajectory
    return int(traj[np.argmin(traj[:, 1]), 0])


def _round_clamp(x: float, n: int) -> tuple[int, bool]:
    k = int(math.floor(x + 0.5))
    clamped = min(max(k, 1), n - 1)
    if clamped != k:
        log.warning("adaptive k=%s clamped to %s (n=%s)", x, clamped, n)
    return clamped, clamped != k


def hill_link_factor(p: float, config: ThresholdConfig) -> float:
    """Multiplier taking ``khat0`` to the adaptive ``k`` of the censored Hill."""
    if not p > 0:
        raise DomainError("p at khat0 is zero: all top observations censored")
    rho = config.rho_z
    return (config.link / p) ** (-1.0 / (1.0 - 2.0 * rho))


def kopt_scaling(p: float, rho_z: float) -> float:
    """Ratio of optimal ``k`` with censoring fraction ``p`` to the uncensored one."""
    if not 0 < p <= 1:
        raise ValueError(f"p={p} outside (0, 1]")
    if not rho_z < 0:
        raise ValueError("rho_z must be negative")
    return p ** (1.0 / (1.0 - 2.0 * rho_z))


def adaptive_k_hill(ordered: OrderedSample, config: ThresholdConfig = ThresholdConfig(),
                    p_override: float | None = None) -> ThresholdResult:
    traj = s2_trajectory(ordered, config)
    k0 = khat0(ordered, config, traj)
    p = float(np.mean(ordered.delta_desc[:k0])) if p_override is None else p_override
    raw = hill_link_factor(p, config) * k0
    k, clamped = _round_clamp(raw, ordered.n)
    return ThresholdResult(k0, k, traj, p, raw, clamped)


def adaptive_k_kernel(ordered: OrderedSample, kernel: Kernel,
                      model: SecondOrderModel | DerivedZParams | None = None,
                      config: ThresholdConfig = ThresholdConfig(),
                      quad_cfg: QuadratureConfig = DEFAULT_QUAD,
                      p_override: float | None = None) -> ThresholdResult:
    """Adaptive ``k`` for a general kernel via the rescaled ``khat0``.

    The bias constant needs ``-kappa_z xi_z``; it comes from ``model`` when
    given, otherwise from the data as ``1 - p_{khat0}`` (valid when the
    variable of interest carries the dominant second order). ``k v_{k,p}``
    depends weakly on ``k``; the result is the candidate ``k`` closest to a
    fixed point of the rescaling map.
    """
    traj = s2_trajectory(ordered, config)
    k0 = khat0(ordered, config, traj)
    p = float(np.mean(ordered.delta_desc[:k0])) if p_override is None else p_override
    if not p > 0:
        raise DomainError("p at khat0 is zero: all top observations censored")
    rho = config.rho_z
    if model is not None:
        params = model if isinstance(model, DerivedZParams) else derive_z_params(model)
        if params.kappa_z is None:
            raise ValueError("kappa_z undefined (D_z = 0)")
        cens = -params.kappa_z * params.xi_z
    else:
        cens = 1.0 - p
    if p <= 0.5:
        log.warning("p=%.3g <= 1/2: kernel rescaling is only justified under "
                    "light censoring", p)
    amp = cens / (p ** 2 * (1 - rho)) + moment_integral(kernel, p, rho, quad_cfg)
    b = amp ** 2
    n = ordered.n
    if b == 0.0:
        return ThresholdResult(k0, n - 1, traj, p, float("inf"), True, True)
    a = 1.0 / (1.0 - rho)
    scale = (config.link_constant_K / (config.link_function_f(rho) * p)) ** -a * k0
    ks = np.arange(1, n)
    vt = np.array([k * variance_term(kernel, int(k), p) for k in ks])
    mapped = (vt / b) ** a * scale
    best = int(np.argmin(np.abs(mapped - ks)))
    k, clamped = _round_clamp(mapped[best], n)
    return ThresholdResult(k0, k, traj, p, float(mapped[best]), clamped)
