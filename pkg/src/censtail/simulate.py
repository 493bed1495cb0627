"""Samplers for Burr, Frechet and log-gamma tails and Monte Carlo studies.

Every replication ``r`` draws from its own generator seeded by
``SeedSequence(seed, spawn_key=(r,))``, so results do not depend on how
replications are scheduled.
"""

from __future__ import annotations

import csv
import io
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .core import CensoredSample, DomainError, OrderedSample, order
from .estimators import (hill_trajectory, kaplan_meier, kernel_trajectory,
                         weissman_quantile, worms_trajectory)
from .kernels import kernel_from_name, kernel_k0
from .secondorder import SecondOrderModel, theoretical_k_opt
from .threshold import ThresholdConfig, adaptive_k_hill

_FAMILIES = {"burr": 3, "frechet": 1, "loggamma": 2}


@dataclass(frozen=True)
class DistributionSpec:
    """``burr(theta, beta, lam)``, ``frechet(xi)`` or ``loggamma(alpha, lam)``.

    Burr survival is ``(theta / (theta + x^beta))^lam``; log-gamma means
    ``log X ~ Gamma(alpha, rate=lam)``.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        if len(self.params) != _FAMILIES[self.family]:
            raise ValueError(
                f"{self.family} takes {_FAMILIES[self.family]} parameters")
        if any(not v > 0 for v in self.params):
            raise ValueError(f"{self.family} parameters must be positive")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse ``"burr(10,2,1)"``-style strings (fractions allowed)."""
        m = re.fullmatch(r"\s*([A-Za-z_-]+)\s*\((.*)\)\s*", text)
        if not m:
            raise ValueError(f"cannot parse distribution {text!r}")
        family = m.group(1).lower().replace("-", "").replace("_", "")
        if family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {m.group(1)!r}")
        vals = []
        for tok in m.group(2).split(","):
            num, _, den = tok.strip().partition("/")
            vals.append(float(num) / (float(den) if den else 1.0))
        return cls(family, tuple(vals))

    def __str__(self):
        return f"{self.family}({','.join(f'{v:g}' for v in self.params)})"

    @property
    def xi(self) -> float:
        if self.family == "burr":
            _, beta, lam = self.params
            return 1.0 / (beta * lam)
        if self.family == "frechet":
            return self.params[0]
        return 1.0 / self.params[1]

    def second_order(self) -> tuple[float, float, float, float] | None:
        """``(xi, C, D, beta)`` of the tail expansion, or ``None`` for log-gamma."""
        if self.family == "burr":
            theta, beta, lam = self.params
            return self.xi, theta ** lam, -lam * theta, beta
        if self.family == "frechet":
            xi = self.params[0]
            return xi, 1.0, -0.5, 1.0 / xi
        return None


def quantile_fn(spec: DistributionSpec, u):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie in (0, 1)")
    if spec.family == "burr":
        theta, beta, lam = spec.params
        out = (theta * np.expm1(-np.log1p(-u) / lam)) ** (1.0 / beta)
    elif spec.family == "frechet":
        out = (-np.log(u)) ** -spec.params[0]
    else:
        alpha, lam = spec.params
        out = np.exp(stats.gamma.ppf(u, alpha, scale=1.0 / lam))
    return float(out) if out.ndim == 0 else out


def sample(spec: DistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if spec.family == "loggamma":
        alpha, lam = spec.params
        return np.exp(rng.gamma(alpha, 1.0 / lam, size=n))
    u = rng.random(n)
    # random() can return exactly 0
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return quantile_fn(spec, u) if n else np.empty(0)


def censor(x, c) -> CensoredSample:
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.shape != c.shape:
        raise ValueError(f"length mismatch: {x.size} != {c.size}")
    return CensoredSample(np.minimum(x, c), (x <= c).astype(np.int8))


def second_order_model(x_spec: DistributionSpec,
                       c_spec: DistributionSpec) -> SecondOrderModel | None:
    sx, sc = x_spec.second_order(), c_spec.second_order()
    if sx is None or sc is None:
        return None
    return SecondOrderModel(*sx, *sc)


def true_p(x_spec: DistributionSpec, c_spec: DistributionSpec) -> float:
    return c_spec.xi / (x_spec.xi + c_spec.xi)


def rep_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


# -- estimator registry ------------------------------------------------------

TrajectoryFn = Callable[[OrderedSample, np.ndarray], np.ndarray]


def estimator_trajectory(label: str) -> TrajectoryFn:
    """Vectorised estimator over a ``k`` grid; NaN marks domain failures."""
    label = label.strip().lower()
    if label in ("hill", "h"):
        return lambda o, ks: hill_trajectory(o, ks)
    if label == "hill_z":
        return lambda o, ks: hill_trajectory(o, ks, censored=False)
    if label == "worms":
        return worms_trajectory
    kernel = kernel_from_name(label)
    return lambda o, ks: kernel_trajectory(o, ks, kernel)


# -- studies -----------------------------------------------------------------

@dataclass(frozen=True)
class McStudyConfig:
    x_spec: DistributionSpec
    c_spec: DistributionSpec
    n: int
    reps: int
    k_grid: tuple[int, ...] = ()
    estimators: tuple[str, ...] = ("k0", "k1", "k2", "worms")
    seed: int = 0

    def __post_init__(self):
        if self.n < 20:
            raise ValueError("n must be >= 20")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        grid = tuple(self.k_grid) or tuple(range(5, self.n))
        if min(grid) < 1 or max(grid) > self.n - 1:
            raise ValueError(f"k_grid must lie within 1..{self.n - 1}")
        object.__setattr__(self, "k_grid", tuple(sorted(set(int(k) for k in grid))))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        for label in self.estimators:
            estimator_trajectory(label)


@dataclass(frozen=True)
class McCell:
    estimator: str
    k: int
    bias: float
    variance: float
    mse: float
    n_excluded: int


@dataclass(frozen=True)
class McStudyResult:
    cells: tuple[McCell, ...]
    true_xi: float
    true_p: float
    truth: float = field(default=float("nan"))

    def table(self, estimator: str) -> dict[str, np.ndarray]:
        rows = [c for c in self.cells if c.estimator == estimator]
        return {name: np.array([getattr(c, name) for c in rows])
                for name in ("k", "bias", "variance", "mse", "n_excluded")}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["estimator", "k", "bias", "variance", "mse", "n_excluded"])
        for c in self.cells:
            w.writerow([c.estimator, c.k, f"{c.bias:.17g}", f"{c.variance:.17g}",
                        f"{c.mse:.17g}", c.n_excluded])
        return buf.getvalue()


def _map_reps(fn, reps: int, workers: int):
    if workers <= 1:
        return [fn(r) for r in range(reps)]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, range(reps)))


def draw(config: McStudyConfig, r: int) -> OrderedSample:
    rng = rep_rng(config.seed, r)
    x = sample(config.x_spec, config.n, rng)
    c = sample(config.c_spec, config.n, rng)
    return order(censor(x, c))


def _aggregate(est: np.ndarray, truth: float, labels, ks) -> tuple[McCell, ...]:
    # est: (reps, estimators, ks)
    cells = []
    for e, label in enumerate(labels):
        for m, k in enumerate(ks):
            col = est[:, e, m]
            ok = col[np.isfinite(col)]
            if ok.size == 0:
                cells.append(McCell(label, k, np.nan, np.nan, np.nan, col.size))
                continue
            err = ok - truth
            bias = float(np.mean(err))
            var = float(np.mean((ok - ok.mean()) ** 2))
            cells.append(McCell(label, int(k), bias, var, float(np.mean(err ** 2)),
                                int(col.size - ok.size)))
    return tuple(cells)


def mc_study(config: McStudyConfig, workers: int = 1) -> McStudyResult:
    """Bias, variance and MSE of each estimator over the ``k`` grid."""
    ks = np.array(config.k_grid)
    fns = [estimator_trajectory(lbl) for lbl in config.estimators]

    def one(r):
        o = draw(config, r)
        return np.stack([fn(o, ks) for fn in fns])

    est = np.stack(_map_reps(one, config.reps, workers))
    return McStudyResult(_aggregate(est, config.x_spec.xi, config.estimators, ks),
                         config.x_spec.xi, true_p(config.x_spec, config.c_spec))


def weissman_study(config: McStudyConfig, prob_exceed: float,
                   workers: int = 1) -> McStudyResult:
    """Like :func:`mc_study` for ``Q(1 - prob_exceed)``; truth from ``quantile_fn``."""
    ks = np.array(config.k_grid)
    fns = [estimator_trajectory(lbl) for lbl in config.estimators]
    truth = quantile_fn(config.x_spec, 1.0 - prob_exceed)

    def one(r):
        o = draw(config, r)
        surv = kaplan_meier(o)
        out = np.full((len(fns), ks.size), np.nan)
        for e, fn in enumerate(fns):
            xis = fn(o, ks)
            for m, k in enumerate(ks):
                if not xis[m] > 0:
                    continue
                try:
                    out[e, m] = weissman_quantile(o, int(k), prob_exceed, xis[m],
                                                  survival=surv)
                except DomainError:
                    pass
        return out

    est = np.stack(_map_reps(one, config.reps, workers))
    return McStudyResult(_aggregate(est, truth, config.estimators, ks),
                         config.x_spec.xi, true_p(config.x_spec, config.c_spec), truth)


@dataclass(frozen=True)
class AdaptiveStudyResult:
    k_adaptive: np.ndarray
    estimates: dict[str, np.ndarray]   # label -> xi-hat at k_adaptive
    fixed_k: int | None
    fixed_estimates: dict[str, np.ndarray]
    true_xi: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = list(self.estimates)
        head = ["rep", "k_adaptive"] + labels
        if self.fixed_k is not None:
            head += [f"{lbl}@k{self.fixed_k}" for lbl in labels]
        w.writerow(head)
        for r, k in enumerate(self.k_adaptive):
            row = [r, int(k)] + [f"{self.estimates[l][r]:.17g}" for l in labels]
            if self.fixed_k is not None:
                row += [f"{self.fixed_estimates[l][r]:.17g}" for l in labels]
            w.writerow(row)
        return buf.getvalue()


def adaptive_study(config: McStudyConfig, threshold_config: ThresholdConfig = ThresholdConfig(),
                   fixed_k: int | None = None,
                   estimators: Sequence[str] = ("k0", "k2"),
                   workers: int = 1) -> AdaptiveStudyResult:
    """Per replication: adaptive ``k`` and the estimates there (and at ``fixed_k``)."""
    fns = {lbl: estimator_trajectory(lbl) for lbl in estimators}

    def one(r):
        o = draw(config, r)
        try:
            k = adaptive_k_hill(o, threshold_config).k_adaptive
        except DomainError:
            return -1, {l: np.nan for l in fns}, {l: np.nan for l in fns}
        at = {l: float(fn(o, np.array([k]))[0]) for l, fn in fns.items()}
        fixed = {l: (float(fn(o, np.array([fixed_k]))[0]) if fixed_k else np.nan)
                 for l, fn in fns.items()}
        return k, at, fixed

    rows = _map_reps(one, config.reps, workers)
    return AdaptiveStudyResult(
        np.array([r[0] for r in rows]),
        {l: np.array([r[1][l] for r in rows]) for l in fns},
        fixed_k,
        {l: np.array([r[2][l] for r in rows]) for l in fns},
        config.x_spec.xi)


def theoretical_reference_k(config: McStudyConfig) -> int | None:
    """Theoretical AMSE optimum of the censored Hill estimator, if defined."""
    model = second_order_model(config.x_spec, config.c_spec)
    if model is None:
        return None
    res = theoretical_k_opt(kernel_k0(), model, config.n)
    return None if res.degenerate else res.k
