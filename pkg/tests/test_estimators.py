import math

import numpy as np
import pytest

import oracles
from conftest import random_censored
from censtail.core import CensoredSample, DomainError, order
from censtail.estimators import (Trajectory, averaged_trimmed, hill_a, hill_censored, hill_trajectory,
                                 hill_z, kaplan_meier, kernel_estimate, kernel_estimate_tilde,
                                 kernel_trajectory, km_quantile, trimmed_hill, trimmed_kernel,
                                 weissman_quantile, worms, worms_trajectory)
from censtail.kernels import kernel_from_name, kernel_k0, kernel_k1, kernel_k2

E = math.e
TOY = CensoredSample([1.0, E, E * E], [1, 1, 1])


def small_samples(rng, count, n_max=40):
    for _ in range(count):
        n = int(rng.integers(3, n_max))
        yield random_censored(rng, n, p=rng.uniform(0.3, 1.0))


def test_hill_z_examples(rng):
    assert hill_z(order(TOY), 2) == pytest.approx(1.5, abs=1e-15)
    assert hill_z(order(CensoredSample([2.0] * 5, [1] * 5)), 3) == 0.0
    z = rng.pareto(1.0, 5000) + 1
    assert abs(hill_z(order(CensoredSample(z, np.ones(5000))), 500) - 1.0) < 0.1


def test_hill_censored_examples():
    o = order(CensoredSample([E * E, E, 1.0], [1, 0, 1]))
    assert hill_censored(o, 2) == pytest.approx(3.0, abs=1e-14)
    assert hill_censored(order(TOY), 2) == hill_z(order(TOY), 2)
    with pytest.raises(DomainError, match="all top-k observations censored"):
        hill_censored(order(CensoredSample([3.0, 2.0, 1.0], [0, 0, 1])), 2)
    with pytest.raises(DomainError):
        hill_censored(order(TOY), 3)


def test_against_literal_oracles(rng):
    K1 = kernel_k1()
    for s in small_samples(rng, 60):
        o = order(s)
        z, e = oracles.ascending(s)
        n = s.n
        for k in range(1, n):
            assert hill_z(o, k) == pytest.approx(oracles.hill_z(z, n, k), rel=1e-12, abs=1e-14)
            assert worms(o, k) == pytest.approx(oracles.worms_product_form(z, e, n, k), rel=1e-11, abs=1e-14)
            assert worms(o, k, "km") == pytest.approx(oracles.worms_km_form(z, e, n, k), rel=1e-11, abs=1e-14)
            if oracles.p_k(e, n, k) == 0:
                continue
            assert kernel_estimate(o, k, K1) == pytest.approx(
                oracles.kernel_literal(z, e, n, k, K1), rel=1e-12, abs=1e-14)
            assert hill_a(o, k) == pytest.approx(oracles.hill_a_literal(z, e, n, k), rel=1e-12, abs=1e-14)
            b = int(rng.integers(1, k + 1))
            assert trimmed_hill(o, b, k) == pytest.approx(
                oracles.trimmed_hill_literal(z, e, n, b, k), rel=1e-12, abs=1e-14)
            assert trimmed_kernel(o, b, k, K1) == pytest.approx(
                oracles.trimmed_kernel_literal(z, e, n, b, k, K1), rel=1e-12, abs=1e-14)


def test_worms_forms_agree(rng):
    for s in small_samples(rng, 50, n_max=300):
        o = order(s)
        for k in range(1, s.n):
            assert abs(worms(o, k) - worms(o, k, "km")) < 1e-10
    with pytest.raises(ValueError):
        worms(o, 1, "other")


def test_worms_examples():
    o = order(CensoredSample([E * E, E, 1.0], [1, 0, 1]))
    assert worms(o, 1) == pytest.approx(1.0, abs=1e-15)
    # i=1: (1-1/2)^0 * 1 ; i=2: empty product * 1
    assert worms(o, 2) == pytest.approx(2.0, abs=1e-15)
    o = order(CensoredSample([E * E, E, 1.0], [1, 1, 1]))
    assert worms(o, 2) == pytest.approx(hill_z(o, 2), abs=1e-15)


def test_kernel_examples():
    o = order(TOY)
    assert kernel_estimate(o, 2, kernel_k1()) == pytest.approx(
        0.5 * (2 / math.log(3) + 1 / math.log(1.5)), rel=1e-14)
    assert kernel_estimate(o, 2, kernel_k1()) == pytest.approx(2.1434, abs=1e-4)
    log_kernel = kernel_from_name("k0")  # at p=1, K0 = log(1/u) = K2
    assert kernel_estimate(o, 2, kernel_k2()) == pytest.approx(kernel_estimate(o, 2, log_kernel), rel=1e-14)
    with pytest.raises(DomainError):
        kernel_estimate(order(CensoredSample([3.0, 2.0, 1.0], [0, 0, 1])), 2, kernel_k2())


def test_kernel_k0_is_censored_hill(pareto_ordered):
    K0 = kernel_k0()
    for k in range(1, pareto_ordered.n):
        assert abs(kernel_estimate(pareto_ordered, k, K0) - hill_censored(pareto_ordered, k)) < 1e-12


def test_tilde_forms(pareto_ordered, rng):
    o = pareto_ordered
    for k in (1, 5, 50, 399):
        assert kernel_estimate_tilde(o, k, kernel_k0()) == pytest.approx(hill_censored(o, k), abs=1e-12)
        for name in ("k1", "k2", "bar:k2"):
            K = kernel_from_name(name)
            assert abs(kernel_estimate_tilde(o, k, K, discrete=True) - kernel_estimate(o, k, K)) < 1e-12


def _tilde_gap(o, k, kernel):
    return abs(kernel_estimate_tilde(o, k, kernel) - kernel_estimate_tilde(o, k, kernel, discrete=True))


def test_tilde_continuous_vs_discrete():
    rng = np.random.default_rng(2024)
    n = 5000
    z = rng.pareto(1.0, n) + 1
    o = order(CensoredSample(z, np.ones(n)))
    for name in ("k0", "k1", "k2", "bar:k2"):
        assert _tilde_gap(o, 1000, kernel_from_name(name)) < 0.01
    o = order(CensoredSample(z, (rng.random(n) < 0.7).astype(int)))
    assert _tilde_gap(o, 1000, kernel_k1()) < 0.01


def test_trimmed_examples(pareto_ordered):
    o = order(TOY)
    assert trimmed_hill(o, 1, 2) == pytest.approx(4 / 3, rel=1e-14)
    assert trimmed_kernel(o, 1, 2, kernel_k1()) == pytest.approx(1 / math.log(3), rel=1e-14)
    assert trimmed_kernel(o, 1, 2, kernel_k1()) == pytest.approx(0.9102, abs=1e-4)
    o = pareto_ordered
    for k in (3, 40, 399):
        K = kernel_k2()
        pk = float(np.mean(o.delta_desc[:k]))
        single = K(0.5, pk) * math.log(o.z_desc[0] / o.z_desc[k]) / (2 * math.log(k + 1))
        assert trimmed_kernel(o, 1, k, K) == pytest.approx(single, rel=1e-13)
        assert 0 < trimmed_hill(o, 1, k) < np.inf
    with pytest.raises(DomainError):
        trimmed_hill(o, 0, 5)
    with pytest.raises(DomainError):
        trimmed_kernel(o, 6, 5, kernel_k1())


def test_trimming_identities(rng):
    for _ in range(30):
        o = order(random_censored(rng, 120))
        for k in range(1, 120):
            if o.delta_desc[:k].sum() == 0:
                continue
            assert abs(trimmed_hill(o, k, k) - hill_censored(o, k)) < 1e-12
            assert abs(trimmed_kernel(o, k, k, kernel_k1()) - hill_a(o, k)) < 1e-12
            # the kernel form of the same weights is normalised by 1/k instead of 1/(k+1)
            assert abs(kernel_estimate(o, k, kernel_k1()) - (k + 1) / k * hill_a(o, k)) < 1e-12


def test_averaged_trimmed(pareto_ordered):
    o = pareto_ordered
    assert averaged_trimmed(o, 1, kernel_k1()) == trimmed_kernel(o, 1, 1, kernel_k1())
    k = 30
    mean = np.mean([trimmed_kernel(o, b, k, kernel_k2()) for b in range(1, k + 1)])
    assert averaged_trimmed(o, k, kernel_k2()) == pytest.approx(mean, rel=1e-13)
    flat = order(CensoredSample([4.0] * 10, [1, 0] * 5))
    assert averaged_trimmed(flat, 6, kernel_k1()) == 0.0


def test_averaging_converges_to_bar_kernel():
    rng = np.random.default_rng(5)
    n = 20000
    s = CensoredSample(rng.pareto(1.0, n) + 1, (rng.random(n) < 0.7).astype(int))
    o = order(s)
    gaps = [abs(averaged_trimmed(o, k, kernel_k1()) - kernel_estimate(o, k, kernel_k2()))
            for k in (200, 2000)]
    assert gaps[1] < gaps[0]
    assert gaps[1] < 0.05


def test_trajectories_match_scalars(rng):
    for _ in range(10):
        o = order(random_censored(rng, 150, p=0.5))
        ks = np.arange(1, 150)
        ok = np.cumsum(o.delta_desc[:-1]) > 0
        ref = [hill_censored(o, k) if ok[k - 1] else np.nan for k in ks]
        assert np.allclose(hill_trajectory(o, ks), ref, rtol=1e-12, equal_nan=True)
        assert np.allclose(hill_trajectory(o, ks, censored=False), [hill_z(o, k) for k in ks], rtol=1e-12)
        assert np.allclose(worms_trajectory(o, ks), [worms(o, k) for k in ks], rtol=1e-11, atol=1e-14)
        K = kernel_k2()
        ref = [kernel_estimate(o, k, K) if ok[k - 1] else np.nan for k in ks]
        assert np.allclose(kernel_trajectory(o, ks, K), ref, rtol=1e-12, equal_nan=True)


def test_trajectory_type():
    t = Trajectory(np.array([1, 2, 5]), np.array([0.1, 0.2, 0.3]), "k0")
    assert t.estimator_label == "k0"
    with pytest.raises(ValueError):
        Trajectory(np.array([1, 1]), np.array([0.1, 0.2]), "k0")
    with pytest.raises(ValueError):
        Trajectory(np.array([1, 2]), np.array([0.1]), "k0")


def test_no_censoring_reductions(rng):
    for _ in range(20):
        s = random_censored(rng, 100, p=1.0)
        o = order(s)
        for k in range(1, 100):
            h = hill_z(o, k)
            assert abs(hill_censored(o, k) - h) < 1e-12
            assert abs(worms(o, k) - h) < 1e-12
            assert abs(kernel_estimate(o, k, kernel_k0()) - h) < 1e-12


def test_scale_invariance(rng):
    s = random_censored(rng, 200)
    c = 1234.5
    o1, o2 = order(s), order(CensoredSample(s.z * c, s.delta))
    for k in (5, 50, 150):
        for f in (hill_z, hill_censored, worms, lambda o, k: kernel_estimate(o, k, kernel_k2()),
                  lambda o, k: trimmed_hill(o, 3, k), lambda o, k: averaged_trimmed(o, k, kernel_k1())):
            assert abs(f(o1, k) - f(o2, k)) < 1e-12
        q1 = weissman_quantile(s, k, 0.001, 0.4)
        q2 = weissman_quantile(CensoredSample(s.z * c, s.delta), k, 0.001, 0.4)
        assert q2 == pytest.approx(c * q1, rel=1e-14)


# -- Kaplan-Meier ------------------------------------------------------------

def test_km_examples():
    km = kaplan_meier(CensoredSample([1, 2, 3], [1, 1, 1]))
    assert km.values == pytest.approx([2 / 3, 1 / 3, 0])
    km = kaplan_meier(CensoredSample([1, 2, 3], [1, 0, 1]))
    assert km.values == pytest.approx([2 / 3, 2 / 3, 0])
    assert km(0.5) == 1.0 and km(2.5) == pytest.approx(2 / 3) and km(3.0) == 0.0
    km = kaplan_meier(CensoredSample([1, 2, 3], [1, 1, 0]))
    assert km.terminal > 0


def test_km_matches_literal_product(rng):
    for _ in range(2000):
        n = int(rng.integers(2, 9))
        z = rng.integers(1, 6, n).astype(float)  # ties on purpose
        s = CensoredSample(z, rng.integers(0, 2, n))
        km = kaplan_meier(s)
        za, ea = oracles.ascending(s)
        assert np.all(np.diff(km.values) <= 0) and np.all((km.values >= 0) & (km.values <= 1))
        for x in np.r_[km.breakpoints, km.breakpoints + 0.5, 0.5]:
            assert km(x) == oracles.km_literal(za, ea, n, x)


def test_km_quantile(rng):
    km = kaplan_meier(CensoredSample([1, 2, 3], [1, 0, 1]))
    assert km_quantile(km, 0.5) == 3.0
    assert km_quantile(km, 0.1) == 1.0
    z = rng.pareto(2.0, 500) + 1
    km = kaplan_meier(CensoredSample(z, np.ones(500)))
    for level in (0.1, 0.5, 0.9, 0.99, 0.998):
        assert km_quantile(km, level) == np.quantile(z, level, method="inverted_cdf")
    km = kaplan_meier(CensoredSample([1, 2, 3], [1, 1, 0]))
    with pytest.raises(DomainError):
        km_quantile(km, 0.9)
    with pytest.raises(ValueError):
        km_quantile(km, 1.0)


# -- Weissman ----------------------------------------------------------------

def test_weissman_limits(pareto_ordered):
    o = pareto_ordered
    n, k = o.n, 40
    with pytest.raises(DomainError):
        weissman_quantile(o, k, k / n, 0.5)
    with pytest.raises(DomainError):
        weissman_quantile(o, k, 0.01, 0.0)
    anchor = km_quantile(kaplan_meier(o), 1 - k / n)
    assert weissman_quantile(o, k, k / n * (1 - 1e-12), 0.5) == pytest.approx(anchor, rel=1e-10)
    q1 = weissman_quantile(o, k, 0.001, 0.4) / anchor
    q2 = weissman_quantile(o, k, 0.001, 0.8) / anchor
    assert q2 == pytest.approx(q1 ** 2, rel=1e-12)
    q = weissman_quantile(o, k, 0.001, 0.4, anchor="order_statistic")
    assert q == pytest.approx(o.z_desc[k] * (k / (n * 0.001)) ** 0.4)
    with pytest.raises(ValueError):
        weissman_quantile(o, k, 0.001, 0.4, anchor="nope")


def test_weissman_anchor_unattainable():
    s = CensoredSample([1, 2, 3, 4, 5, 6], [1, 1, 1, 0, 0, 0])
    with pytest.raises(DomainError):
        weissman_quantile(s, 2, 0.01, 0.5)
    assert weissman_quantile(s, 2, 0.01, 0.5, anchor="order_statistic") > 0


@pytest.mark.slow
def test_weissman_pareto_accuracy():
    rng = np.random.default_rng(99)
    n, k = 10000, 1000
    est = []
    for _ in range(100):
        z = rng.pareto(1.0, n) + 1
        o = order(CensoredSample(z, np.ones(n)))
        est.append(weissman_quantile(o, k, 0.001, hill_z(o, k)))
    assert abs(np.median(est) / 1000 - 1) < 0.25
