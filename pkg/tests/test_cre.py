"""Correlated random effects: quadrature, integrated likelihood, recovery."""

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad
from scipy.stats import norm

from bivlogit.cre import (PARAM_NAMES, QuadratureRule, _cell_weights_from_panel,
                          _objective, cre_household_loglik, fit_cre)
from bivlogit.heterogeneity import HeterogeneityDist
from bivlogit.model import CovariatePath, PairSequence, enumerate_sequences, \
    sequence_prob
from bivlogit.params import CommonParams, FixedEffects
from bivlogit.simulate import simulate_panel
from bivlogit.tables import sequence_codes

THETA = np.array([1.2, -0.6, -0.4, 0.9,   # gammas
                  0.8, 0.5,               # rho, kappa
                  -0.7, 0.9, 0.6, 0.3,    # delta0..delta3
                  np.log(0.8)])           # log sigma


def test_quadrature_integrates_normal_moments_exactly():
    rule = QuadratureRule(8)
    mu, sigma = 0.4, 1.3
    points, weights = rule.points(mu, sigma)
    # Gauss-Hermite of order m is exact for polynomials up to degree 2m-1
    for k, want in ((0, 1.0), (1, mu), (2, mu ** 2 + sigma ** 2),
                    (3, mu ** 3 + 3 * mu * sigma ** 2),
                    (4, mu ** 4 + 6 * mu ** 2 * sigma ** 2 + 3 * sigma ** 4)):
        assert weights @ points ** k == pytest.approx(want, rel=1e-12)


def test_household_loglik_matches_brute_force_integral():
    params = CommonParams.from_gammas(*THETA[:4], rho=THETA[4],
                                      kappa=THETA[5])
    sigma = np.exp(THETA[10])
    T = 3
    codes = sequence_codes(T)
    rule = QuadratureRule(48)
    for initial in ((0, 0), (1, 1), (0, 1)):
        y10, y20 = initial
        mu = THETA[6] + THETA[7] * y10 + THETA[8] * y20 + THETA[9] * y10 * y20
        for seq in (PairSequence((y10, 1, 0, 1), (y20, 0, 0, 1)),
                    PairSequence((y10, 0, 0, 0), (y20, 1, 1, 1))):
            cells = [2 * seq.y1[t] + seq.y2[t] for t in range(1, T + 1)]
            row = int(np.nonzero((codes == cells).all(axis=1))[0][0])
            got = cre_household_loglik(THETA, initial, row, T, rule)

            def integrand(a):
                fe = FixedEffects.restricted(a, params.kappa)
                return sequence_prob(params, fe, CovariatePath.empty(T),
                                     seq) * norm.pdf(a, mu, sigma)

            want, _ = scipy_quad(integrand, mu - 10 * sigma, mu + 10 * sigma,
                                 limit=200)
            assert got == pytest.approx(np.log(want), abs=1e-8)


def test_integrated_likelihood_normalizes():
    T = 3
    rule = QuadratureRule(32)
    for initial in ((0, 0), (1, 0)):
        total = 0.0
        for row in range(4 ** T):
            total += np.exp(cre_household_loglik(THETA, initial, row, T,
                                                 rule))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_objective_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    weights = rng.random((4, 4 ** 3))
    weights /= weights.sum()
    rule = QuadratureRule(16)
    theta = THETA + rng.uniform(-0.2, 0.2, 11)
    val, grad = _objective(theta, weights, 3, rule)
    h = 1e-6
    for j in range(11):
        e = np.zeros(11)
        e[j] = h
        fp, _ = _objective(theta + e, weights, 3, rule)
        fm, _ = _objective(theta - e, weights, 3, rule)
        assert grad[j] == pytest.approx((fp - fm) / (2 * h), rel=2e-5,
                                        abs=1e-8)


def test_cell_weights_sum_to_one():
    params = CommonParams.from_gammas(1.0, -0.5, -0.5, 1.0, rho=1.0,
                                      kappa=0.5)
    panel = simulate_panel(params, HeterogeneityDist.named(
        "correctly-specified"), n=500, T=3, seed=1)
    w = _cell_weights_from_panel(panel)
    assert w.shape == (4, 64)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_fit_cre_recovers_truth_when_correctly_specified():
    params = CommonParams.from_gammas(2.5, -1.5, -1.5, 2.5, rho=1.0,
                                      kappa=2.0)
    dist = HeterogeneityDist.named("correctly-specified")
    panel = simulate_panel(params, dist, n=40000, T=3, seed=2)
    fit = fit_cre(panel)
    assert fit.converged
    assert tuple(fit.names) == PARAM_NAMES
    truth = {"gamma11": 2.5, "gamma12": -1.5, "gamma21": -1.5,
             "gamma22": 2.5, "rho": 1.0, "kappa": 2.0,
             "delta0": -1.0, "delta1": 1.0, "delta2": 1.0, "delta3": 0.0,
             "log_sigma": 0.0}
    for name, value in truth.items():
        tol = max(4 * fit.se_of(name), 0.15)
        assert fit[name] == pytest.approx(value, abs=tol), name
