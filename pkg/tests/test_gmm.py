"""GMM for rho: quadratic objective, closed-form minimizer, bootstrap."""

import numpy as np
import pytest

from bivlogit.gmm import (RHO_BOUNDS, bootstrap_se, fit_gmm_rho,
                          gmm_objective, _moment_decomposition, _weighting)
from bivlogit.heterogeneity import HeterogeneityDist
from bivlogit.params import CommonParams
from bivlogit.simulate import simulate_panel

PARAMS = CommonParams.from_gammas(1.5, -0.8, -0.8, 1.5, rho=1.0, kappa=0.6)
DIST = HeterogeneityDist.named("discrete-asymmetric")


def _panel(n=5000, seed=0):
    return simulate_panel(PARAMS, DIST, n=n, T=3, seed=seed)


def test_objective_is_exactly_quadratic_in_exp_rho():
    panel = _panel(2000)
    u, v, _ = _moment_decomposition(panel, PARAMS.gamma, PARAMS.kappa)
    ubar, vbar = u.mean(axis=0), v.mean(axis=0)
    w, _ = _weighting(u, v)
    xs = np.array([0.5, 1.0, 2.0])
    ys = np.array([gmm_objective(x, ubar, vbar, w) for x in xs])
    # fit the parabola through three points, then predict a fourth
    coefs = np.polyfit(xs, ys, 2)
    for x4 in (0.25, 3.0, 7.5):
        want = gmm_objective(x4, ubar, vbar, w)
        assert np.polyval(coefs, x4) == pytest.approx(want, rel=1e-10,
                                                      abs=1e-14)


def test_closed_form_matches_grid_minimum():
    panel = _panel(3000, seed=1)
    fit = fit_gmm_rho(panel, gammas=PARAMS.gamma, kappa=PARAMS.kappa)
    u, v, _ = _moment_decomposition(panel, PARAMS.gamma, PARAMS.kappa)
    ubar, vbar = u.mean(axis=0), v.mean(axis=0)
    w = fit.weights
    grid = np.linspace(*RHO_BOUNDS, 20001)
    vals = np.array([gmm_objective(np.exp(r), ubar, vbar, w) for r in grid])
    best = grid[vals.argmin()]
    assert fit.rho == pytest.approx(best, abs=2e-3)
    assert fit.objective <= vals.min() + 1e-12


def test_estimate_near_truth_with_true_first_stage():
    panel = _panel(40000, seed=2)
    fit = fit_gmm_rho(panel, gammas=PARAMS.gamma, kappa=PARAMS.kappa)
    assert not fit.boundary_flag
    assert fit.rho == pytest.approx(1.0, abs=0.25)


def test_first_stage_defaults_to_cmle():
    panel = _panel(20000, seed=3)
    fit = fit_gmm_rho(panel)
    assert fit.gammas is not None and fit.kappa is not None
    assert not fit.boundary_flag
    assert fit.rho == pytest.approx(1.0, abs=0.5)


def test_boundary_flag_set_when_clamped():
    # all-identical histories carry no signal; any moment mass left over
    # can push exp(rho) outside the box, which must be flagged, and the
    # unconstrained estimate preserved
    panel = _panel(800, seed=4)
    fit = fit_gmm_rho(panel, gammas=PARAMS.gamma, kappa=PARAMS.kappa)
    lo, hi = RHO_BOUNDS
    assert lo <= fit.rho <= hi
    if fit.boundary_flag:
        assert fit.rho in (lo, hi)
    else:
        assert fit.exp_rho == pytest.approx(fit.exp_rho_unconstrained)


def test_bootstrap_se_reproducible_and_covering():
    panel = _panel(4000, seed=5)
    fit = fit_gmm_rho(panel, gammas=PARAMS.gamma, kappa=PARAMS.kappa)
    out1 = bootstrap_se(panel, fit, n_boot=60, seed=9,
                        refit_first_stage=False)
    out2 = bootstrap_se(panel, fit, n_boot=60, seed=9,
                        refit_first_stage=False)
    assert out1.se == out2.se
    assert out1.se > 0
    assert len(out1.diagnostics["bootstrap_draws"]) == 60
    assert abs(out1.rho - 1.0) < 4 * out1.se


def test_weighting_drops_degenerate_moments():
    # a tiny panel cannot populate all 24 moments; the zero-variance ones
    # must get zero weight rather than infinite weight
    panel = _panel(30, seed=6)
    fit = fit_gmm_rho(panel, gammas=PARAMS.gamma, kappa=PARAMS.kappa)
    assert fit.n_dropped_moments > 0
    assert np.all(np.isfinite(fit.weights))
