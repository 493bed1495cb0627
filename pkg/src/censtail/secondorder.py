"""Second-order tail model and asymptotic MSE of kernel estimators.

Both the variable of interest and the censoring variable are assumed to
have slowly varying parts ``C (1 + D x^-beta)``. From these we derive the
constants of the observed ``Z`` tail and evaluate

    AMSE(k) = xi_z^2 v_{k,p} + Q0z(n/k)^2 b_p

with the finite-k variance term ``v_{k,p}`` and the squared asymptotic bias
``b_p`` of a kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (DEFAULT_QUAD, Kernel, QuadratureConfig, quad,
                      tilde_transform, tilde_weights)


@dataclass(frozen=True)
class SecondOrderModel:
    xi: float
    C: float
    D: float
    beta: float
    xi_c: float
    C_c: float
    D_c: float
    beta_c: float

    def __post_init__(self):
        for name in ("xi", "C", "beta", "xi_c", "C_c", "beta_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DerivedZParams:
    """Tail constants of ``Z = min(X, C)``.

    ``kappa_z`` is ``None`` when ``D_z = 0``. ``C_x`` keeps the constant of
    the variable of interest for the alternative reading of ``Q0z``.
    """

    xi_z: float
    p: float
    C_z: float
    beta_z: float
    D_z: float
    rho_z: float
    kappa_z: float | None
    C_x: float = 1.0


def derive_z_params(model: SecondOrderModel) -> DerivedZParams:
    m = model
    xi_z = m.xi * m.xi_c / (m.xi + m.xi_c)
    p = m.xi_c / (m.xi + m.xi_c)
    x_first = m.beta <= m.beta_c
    c_first = m.beta_c <= m.beta
    # equal betas: both indicators fire, so the D's add up
    D_z = m.D * x_first + m.D_c * c_first
    Dxi_z = m.D * m.xi * x_first - m.D_c * m.xi_c * c_first
    beta_z = min(m.beta, m.beta_c)
    kappa = None if D_z == 0 else -Dxi_z / (D_z * m.xi * m.xi_c)
    return DerivedZParams(xi_z=xi_z, p=p, C_z=m.C * m.C_c, beta_z=beta_z,
                          D_z=D_z, rho_z=-beta_z * xi_z, kappa_z=kappa, C_x=m.C)


def _as_params(model) -> DerivedZParams:
    return model if isinstance(model, DerivedZParams) else derive_z_params(model)


def q0z(params: DerivedZParams, t, constant: str = "z"):
    """Second-order amplitude ``-xi_z^2 beta_z D_z C^rho_z t^rho_z``.

    ``constant="z"`` uses ``C_z`` for ``C``; ``constant="x"`` uses the
    constant of the variable of interest.
    """
    c = {"z": params.C_z, "x": params.C_x}[constant]
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    out = -params.xi_z ** 2 * params.beta_z * params.D_z \
        * c ** params.rho_z * t ** params.rho_z
    return float(out) if out.ndim == 0 else out


def variance_term(kernel: Kernel, k: int, p: float) -> float:
    """``(1/k)(1-p)/p^3 + (1/k^2) sum_j Ktilde_k(j/(k+1), p)^2``."""
    if not 0 < p <= 1:
        raise ValueError(f"p={p} outside (0, 1]")
    w = tilde_weights(kernel, k, p)
    return (1 - p) / p ** 3 / k + float(np.sum(w ** 2)) / k ** 2


def moment_integral(kernel: Kernel, p: float, rho: float,
                    quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``int_0^1 u^(-rho) Ktilde(u, p) du`` for ``rho < 0``."""
    if kernel.name == "k0":
        return 1.0 / (p * (1.0 - rho))
    tk = tilde_transform(kernel, quad_cfg)

    def g(w):
        # u = exp(-w): u^(-rho) Ktilde(u) du
        u = math.exp(-w)
        return float(tk.func(np.array(u), p)) * u ** (1.0 - rho) if u > 0 else 0.0
    return quad(g, 0.0, np.inf, quad_cfg, p=p)


def bias_amplitude(kernel: Kernel, p: float, params: DerivedZParams,
                   quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> tuple[float, float]:
    """The two terms whose sum is squared in the bias: (censoring, kernel)."""
    if params.kappa_z is None:
        raise ValueError("kappa_z undefined (D_z = 0)")
    rho = params.rho_z
    cens = -params.kappa_z * params.xi_z / (p ** 2 * (1.0 - rho))
    return cens, moment_integral(kernel, p, rho, quad_cfg)


def bias_term(kernel: Kernel, p: float, params: DerivedZParams,
              quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    a, b = bias_amplitude(kernel, p, params, quad_cfg)
    return (a + b) ** 2


def amse(kernel: Kernel, model, n: int, k, quad_cfg: QuadratureConfig = DEFAULT_QUAD,
         constant: str = "z"):
    """Asymptotic MSE at ``k`` (scalar or array of k)."""
    params = _as_params(model)
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    if ks.min() < 1 or ks.max() > n - 1:
        raise ValueError(f"k outside 1..{n - 1}")
    p = params.p
    var = np.array([variance_term(kernel, int(kk), p) for kk in ks])
    if params.D_z == 0:
        out = params.xi_z ** 2 * var
    else:
        b = bias_term(kernel, p, params, quad_cfg)
        out = params.xi_z ** 2 * var + q0z(params, n / ks, constant) ** 2 * b
    return float(out[0]) if np.ndim(k) == 0 else out


@dataclass(frozen=True)
class KOptResult:
    k: int
    degenerate: bool
    amse: np.ndarray
    reason: str = ""


def theoretical_k_opt(kernel: Kernel, model, n: int,
                      quad_cfg: QuadratureConfig = DEFAULT_QUAD,
                      constant: str = "z") -> KOptResult:
    """Exhaustive argmin of the AMSE over ``k = 2..n-1`` (ties: smallest k).

    When the bias vanishes (``D_z = 0`` or the two bias terms cancel) the
    AMSE is a pure variance and the result is flagged degenerate with
    ``k = n - 1``.
    """
    params = _as_params(model)
    ks = np.arange(2, n)
    curve = amse(kernel, params, n, ks, quad_cfg, constant)
    if params.D_z == 0:
        return KOptResult(n - 1, True, curve, "variance-only: D_z = 0")
    a, b = bias_amplitude(kernel, params.p, params, quad_cfg)
    if abs(a + b) <= 1e-9 * max(abs(a), abs(b)):
        return KOptResult(n - 1, True, curve,
                          "variance-only: bias terms cancel")
    return KOptResult(int(ks[np.argmin(curve)]), False, curve)
