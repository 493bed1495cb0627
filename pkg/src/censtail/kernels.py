"""Kernel weight functions K(u, p) and their bar / tilde transforms.

A kernel is normed so that ``int_0^1 K(u, p) du = 1/p`` for every
``p`` in (0, 1]. Two transforms map kernels to kernels:

* bar:   ``Kbar(u, p) = int_u^1 K(v, p) / v dv``
* tilde: ``Ktilde(u, p) = (1/u) int_0^u K(v, p) / log(1/v) dv``

Closed forms are used whenever they are known; otherwise the transforms
fall back to adaptive quadrature (``scipy.integrate.quad``) after the
substitution ``w = log(1/v)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

KernelFunc = Callable[[np.ndarray, float], np.ndarray]


class QuadratureError(RuntimeError):
    def __init__(self, u, p, abserr, message=""):
        self.u, self.p, self.abserr = u, p, abserr
        super().__init__(
            f"quadrature did not converge at u={u!r}, p={p!r} "
            f"(estimated abs error {abserr:.3g}) {message}".rstrip())


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


def quad(f, a, b, cfg: QuadratureConfig = DEFAULT_QUAD, *, u=None, p=None):
    """``scipy.integrate.quad`` that raises instead of warning."""
    kw = dict(epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions,
              full_output=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, **kw)
    if len(out) > 3:
        raise QuadratureError(u, p, out[1], out[3].splitlines()[0])
    return out[0]


def _check_p(p) -> float:
    p = float(p)
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p={p} outside (0, 1]")
    return p


def _check_u(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    return u


@dataclass(frozen=True)
class Kernel:
    """A normed kernel ``K(u, p)``.

    ``func`` must accept an array of ``u`` and a scalar ``p``. The optional
    ``analytic_bar`` / ``analytic_tilde`` have the same signature and give the
    transformed kernel in closed form.
    """

    name: str
    func: KernelFunc = field(repr=False)
    analytic_bar: KernelFunc | None = field(default=None, repr=False)
    analytic_tilde: KernelFunc | None = field(default=None, repr=False)

    def eval(self, u, p):
        p = _check_p(p)
        u = _check_u(u)
        out = self.func(u, p)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = eval


# -- built-in kernels --------------------------------------------------------

def _k0(u, p):
    return -np.log(u) / p


def _k0_bar(u, p):
    return np.log(u) ** 2 / (2 * p)


def _k0_tilde(u, p):
    return np.full_like(np.asarray(u, dtype=float), 1.0 / p)


def _k1(u, p):
    return u ** (p - 1.0)


def _k2(u, p):
    # expm1 form stays accurate as p -> 1
    a = 1.0 - p
    L = -np.log(u)
    if a == 0.0:
        return L
    return np.expm1(a * L) / a


_BAR_SERIES = 1.0 / special.factorial(np.arange(2, 12))


def _k2_bar(u, p):
    # (K2 - log(1/u)) / (1 - p) = L^2 (e^x - 1 - x) / x^2,  x = (1 - p) L
    a = 1.0 - p
    L = -np.log(u)
    x = a * L
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0.0)
    series = np.polynomial.polynomial.polyval(xs, _BAR_SERIES)
    xd = np.where(small, 1.0, x)
    direct = (np.expm1(xd) - xd) / xd ** 2
    return L ** 2 * np.where(small, series, direct)


def _k1_tilde(u, p):
    # int_0^u v^(p-1)/log(1/v) dv = E1(p log(1/u))
    return special.exp1(-p * np.log(u)) / u


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _k2_tilde(u, p):
    # (E1(pL) - E1(L)) / (1 - p) is the mean of exp(-sL)/s over s in [p, 1];
    # Gauss-Legendre avoids the cancellation when (1 - p) L is small
    a = 1.0 - p
    L = np.asarray(-np.log(u), dtype=float)
    near = (a < 0.1) & (a * L < 1.0)
    s = 1.0 - a * (1.0 - _GL_NODES) / 2
    Ln = np.where(near, L, 0.0)[..., None]
    mean = (np.exp(-s * Ln) / s) @ _GL_WEIGHTS / 2
    ad = a if a > 0 else 1.0
    Ld = np.where(near, 1.0, L)
    direct = (special.exp1(p * Ld) - special.exp1(Ld)) / ad
    return np.where(near, mean, direct) / u


def kernel_k0() -> Kernel:
    """Censored Hill kernel ``log(1/u) / p``."""
    return Kernel("k0", _k0, analytic_bar=_k0_bar, analytic_tilde=_k0_tilde)


def kernel_k1() -> Kernel:
    return Kernel("k1", _k1, analytic_bar=_k2, analytic_tilde=_k1_tilde)


def kernel_k2() -> Kernel:
    """``(u^(p-1) - 1)/(1 - p)``, extended continuously by ``log(1/u)`` at p=1."""
    return Kernel("k2", _k2, analytic_bar=_k2_bar, analytic_tilde=_k2_tilde)


# closed-form tildes of closed-form bars
_DERIVED_TILDE = {"bar:k1": _k2_tilde}


# -- transforms --------------------------------------------------------------

def _bar_quad(kernel: Kernel, cfg: QuadratureConfig) -> KernelFunc:
    def one(u, p):
        # v = exp(-w): int_0^log(1/u) K(e^-w, p) dw
        g = lambda w: kernel.func(np.array(np.exp(-w)), p)
        return quad(g, 0.0, -np.log(u), cfg, u=u, p=p)

    def f(u, p):
        return np.vectorize(one, otypes=[float])(u, p)
    return f


def _tilde_quad(kernel: Kernel, cfg: QuadratureConfig) -> KernelFunc:
    def one(u, p):
        L = -np.log(u)
        # v = exp(-w): int_L^inf K(e^-w, p) e^-w / w dw
        def g(w):
            v = np.exp(-w)
            return kernel.func(np.array(v), p) * v / w if v > 0 else 0.0
        return quad(g, L, np.inf, cfg, u=u, p=p) / u

    def f(u, p):
        return np.vectorize(one, otypes=[float])(u, p)
    return f


def bar_transform(kernel: Kernel, quad_cfg: QuadratureConfig = DEFAULT_QUAD,
                  closed_form: bool = True) -> Kernel:
    """Kernel induced by averaging trimmed estimators over the trimming level."""
    name = f"bar:{kernel.name}"
    if closed_form and kernel.analytic_bar is not None:
        return Kernel(name, kernel.analytic_bar,
                      analytic_tilde=_DERIVED_TILDE.get(name))
    return Kernel(name, _bar_quad(kernel, quad_cfg))


def tilde_transform(kernel: Kernel, quad_cfg: QuadratureConfig = DEFAULT_QUAD,
                    closed_form: bool = True) -> Kernel:
    """Kernel acting on the scaled log-spacings ``V_j``."""
    name = f"tilde:{kernel.name}"
    if closed_form and kernel.analytic_tilde is not None:
        return Kernel(name, kernel.analytic_tilde)
    return Kernel(name, _tilde_quad(kernel, quad_cfg))


def tilde_weights(kernel: Kernel, k: int, p: float) -> np.ndarray:
    """Discrete tilde kernel at ``j/(k+1)`` for all ``j = 1..k``.

    Exact finite sum ``(1/j) sum_{i<=j} K(i/(k+1), p) / log((k+1)/i)``.
    """
    p = _check_p(p)
    k = int(k)
    if k < 1:
        raise ValueError(f"k={k} must be >= 1")
    i = np.arange(1, k + 1)
    u = i / (k + 1)
    terms = kernel.func(u, p) / -np.log(u)
    return np.cumsum(terms) / i


def tilde_discrete(kernel: Kernel, j: int, k: int, p: float) -> float:
    if not 1 <= j <= k:
        raise ValueError(f"need 1 <= j <= k, got j={j}, k={k}")
    return float(tilde_weights(kernel, k, p)[j - 1])


def norm_integral(kernel: Kernel, p: float,
                  quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """``int_0^1 K(u, p) du``, computed as ``int_0^inf K(e^-w, p) e^-w dw``."""
    p = _check_p(p)

    def g(w):
        u = np.exp(-w)
        return kernel.func(np.array(u), p) * u if u > 0 else 0.0
    return quad(g, 0.0, np.inf, quad_cfg, p=p)


# -- name grammar ------------------------------------------------------------

_BUILTINS = {"k0": kernel_k0, "k1": kernel_k1, "k2": kernel_k2}


def kernel_from_name(name: str,
                     quad_cfg: QuadratureConfig = DEFAULT_QUAD) -> Kernel:
    """Parse ``k0 | k1 | k2 | bar:<name> | tilde:<name>``."""
    name = name.strip().lower()
    if name in _BUILTINS:
        return _BUILTINS[name]()
    head, sep, rest = name.partition(":")
    if sep and head == "bar":
        return bar_transform(kernel_from_name(rest, quad_cfg), quad_cfg)
    if sep and head == "tilde":
        return tilde_transform(kernel_from_name(rest, quad_cfg), quad_cfg)
    raise ValueError(f"unknown kernel {name!r}")
