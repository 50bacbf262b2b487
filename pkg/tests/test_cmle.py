"""Conditional MLE: elimination property, enumeration oracle, recovery."""

import numpy as np
import pytest

from bivlogit.cmle import (NoInformationError, comparison_class,
                           cond_loglik_restricted, cond_loglik_unrestricted,
                           fit_cmle, sufficient_stat)
from bivlogit.heterogeneity import HeterogeneityDist
from bivlogit.model import (CovariatePath, PairSequence, enumerate_sequences,
                            sequence_prob)
from bivlogit.params import CommonParams, FixedEffects
from bivlogit.simulate import simulate_panel


def oracle_cond_prob(params, fe, seq, restricted):
    """P(seq | sufficient statistic) by brute-force enumeration."""
    T = seq.T
    stat = sufficient_stat(seq, restricted)
    xp = CovariatePath.empty(T)
    num = sequence_prob(params, fe, xp, seq)
    den = 0.0
    for other in enumerate_sequences(T, seq.initial):
        if sufficient_stat(other, restricted) == stat:
            den += sequence_prob(params, fe, xp, other)
    return num / den


@pytest.mark.parametrize("restricted", [False, True])
def test_conditional_likelihood_matches_enumeration_oracle(restricted):
    params = CommonParams.from_gammas(1.1, -0.7, 0.4, 0.9, rho=0.8, kappa=0.5)
    rng = np.random.default_rng(0)
    for _ in range(20):
        T = int(rng.integers(3, 5))
        codes = rng.integers(0, 2, size=(2, T + 1))
        seq = PairSequence(tuple(codes[0]), tuple(codes[1]))
        if restricted:
            fe = FixedEffects.restricted(rng.normal(), params.kappa)
        else:
            fe = FixedEffects(rng.normal(), rng.normal())
        want = np.log(oracle_cond_prob(params, fe, seq, restricted))
        got = (cond_loglik_restricted(params, seq) if restricted
               else cond_loglik_unrestricted(params, seq))
        assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("restricted", [False, True])
def test_fixed_effects_are_eliminated(restricted):
    # conditional probabilities do not move when the effects move
    params = CommonParams.from_gammas(0.9, -0.3, 0.1, 1.2, rho=-0.6,
                                      kappa=0.8)
    seq = PairSequence((1, 0, 1, 1), (0, 1, 0, 1))
    base = None
    for a1 in (-3.0, -1.0, 0.0, 2.0, 4.0):
        for a2 in (-2.0, 0.0, 3.0):
            if restricted:
                fe = FixedEffects.restricted(a1, params.kappa)
            else:
                fe = FixedEffects(a1, a2)
            val = oracle_cond_prob(params, fe, seq, restricted)
            if base is None:
                base = val
            assert val == pytest.approx(base, rel=1e-10)


def test_rho_is_eliminated():
    # the cross-product sum is part of the statistic, so rho also drops out
    params0 = CommonParams.from_gammas(0.9, -0.3, 0.1, 1.2, rho=0.0)
    seq = PairSequence((1, 0, 1, 1), (0, 1, 0, 1))
    fe = FixedEffects(0.4, -0.2)
    base = oracle_cond_prob(params0, fe, seq, False)
    for rho in (-1.5, 0.7, 2.5):
        params = CommonParams.from_gammas(0.9, -0.3, 0.1, 1.2, rho=rho)
        val = oracle_cond_prob(params, fe, seq, False)
        assert val == pytest.approx(base, rel=1e-10)
    # ... and cond_loglik is rho-invariant too
    a = cond_loglik_unrestricted(params0, seq)
    b = cond_loglik_unrestricted(
        CommonParams.from_gammas(0.9, -0.3, 0.1, 1.2, rho=2.0), seq)
    assert a == pytest.approx(b, abs=1e-12)


def test_short_panels_rejected():
    params = CommonParams.from_gammas(1.0, 0.0, 0.0, 1.0, rho=0.0)
    seq = PairSequence((0, 1, 0), (1, 0, 1))
    with pytest.raises(ValueError):
        cond_loglik_unrestricted(params, seq)


def test_comparison_class_partitions_sequences():
    T = 3
    for restricted in (False, True):
        for initial in ((0, 0), (1, 1)):
            seqs = enumerate_sequences(T, initial)
            total = 0
            seen = set()
            for seq in seqs:
                stat = sufficient_stat(seq, restricted)
                if stat in seen:
                    continue
                seen.add(stat)
                total += len(comparison_class(stat, T).members)
            assert total == len(seqs)


def test_gradient_matches_finite_differences():
    params = CommonParams.from_gammas(0.8, -0.5, 0.2, 0.7, rho=0.6, kappa=0.4)
    dist = HeterogeneityDist.named("discrete-asymmetric")
    panel = simulate_panel(params, dist, n=300, T=3, seed=1)
    from bivlogit.cmle import _binned_data, _objective
    for restricted in (False, True):
        features, counts, classes, _ = _binned_data(panel, restricted)
        dim = 5 if restricted else 4
        rng = np.random.default_rng(2)
        theta = rng.uniform(-0.5, 0.5, dim)
        _, grad, _ = _objective(theta, features, counts, classes)
        h = 1e-6
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            fp, _, _ = _objective(theta + e, features, counts, classes)
            fm, _, _ = _objective(theta - e, features, counts, classes)
            assert grad[j] == pytest.approx((fp - fm) / (2 * h),
                                            rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("restricted", [False, True])
def test_cmle_recovers_gammas(restricted):
    params = CommonParams.from_gammas(1.5, -0.8, -0.8, 1.5, rho=0.8,
                                      kappa=0.6)
    dist = HeterogeneityDist.named("heteroskedastic")
    panel = simulate_panel(params, dist, n=20000, T=4, seed=4,
                           restricted=True)
    fit = fit_cmle(panel, restricted=restricted)
    assert fit.converged
    truth = {"gamma11": 1.5, "gamma12": -0.8, "gamma21": -0.8,
             "gamma22": 1.5}
    if restricted:
        truth["kappa"] = 0.6
    for name, value in truth.items():
        assert fit[name] == pytest.approx(value, abs=4 * fit.se_of(name))


def test_no_information_raises():
    params = CommonParams.from_gammas(0.0, 0.0, 0.0, 0.0, rho=0.0)
    dist = HeterogeneityDist.degenerate(0.0)
    panel = simulate_panel(params, dist, n=5, T=1, seed=0)
    with pytest.raises((NoInformationError, ValueError)):
        fit_cmle(panel)
