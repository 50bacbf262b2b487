"""Core probability model against independent normalization oracles."""

import numpy as np
import pytest

from bivlogit.model import (CovariatePath, PairSequence, conditional_prob,
                            enumerate_sequences, joint_prob_static,
                            log_sequence_prob, sequence_prob,
                            transition_prob)
from bivlogit.params import CommonParams, FixedEffects
from bivlogit.tables import log_sequence_matrix, log_transition_table


def oracle_cells(z1, z2, rho):
    """Direct normalization of the four cell weights, no log-space tricks."""
    w = np.array([1.0, np.exp(z2), np.exp(z1), np.exp(z1 + z2 + rho)])
    return w / w.sum()


def test_static_joint_matches_direct_normalization():
    rng = np.random.default_rng(0)
    for _ in range(50):
        b1, b2, rho = rng.uniform(-3, 3, size=3)
        params = CommonParams(beta1=[b1], beta2=[b2], rho=rho)
        cells = oracle_cells(b1, b2, rho)
        for c1 in (0, 1):
            for c2 in (0, 1):
                got = joint_prob_static(params, [1.0], [1.0], c1, c2)
                assert got == pytest.approx(cells[2 * c1 + c2], rel=1e-12)


def test_static_cells_sum_to_one():
    params = CommonParams(beta1=[0.7], beta2=[-1.1], rho=0.9)
    total = sum(joint_prob_static(params, [1.0], [1.0], c1, c2)
                for c1 in (0, 1) for c2 in (0, 1))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_conditional_prob_is_bayes_consistent():
    # P(y1=1 | y2) must equal the ratio of joint to marginal probabilities
    rng = np.random.default_rng(1)
    for _ in range(20):
        b1, b2, rho = rng.uniform(-2, 2, size=3)
        params = CommonParams(beta1=[b1], beta2=[b2], rho=rho)
        for y2 in (0, 1):
            joint = joint_prob_static(params, [1.0], [1.0], 1, y2)
            marg = joint + joint_prob_static(params, [1.0], [1.0], 0, y2)
            got = conditional_prob(params, [1.0], y2)
            assert got == pytest.approx(joint / marg, rel=1e-12)


def test_conditional_prob_no_overflow_at_extreme_index():
    params = CommonParams(beta1=[800.0], beta2=[800.0], rho=0.0)
    assert conditional_prob(params, [1.0], 0) == pytest.approx(1.0)
    params = CommonParams(beta1=[-800.0], beta2=[-800.0], rho=0.0)
    assert conditional_prob(params, [1.0], 0) == pytest.approx(0.0)


def test_transition_probs_sum_to_one():
    params = CommonParams.from_gammas(1.2, -0.5, 0.3, 0.8, rho=0.6)
    fe = FixedEffects(0.4, -0.2)
    for prev in ((0, 0), (0, 1), (1, 0), (1, 1)):
        total = sum(transition_prob(params, fe, None, prev, (c1, c2))
                    for c1 in (0, 1) for c2 in (0, 1))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_sequence_probs_sum_to_one_over_enumeration():
    params = CommonParams.from_gammas(0.9, -0.4, -0.3, 0.7, rho=0.8, kappa=0.5)
    fe = FixedEffects.restricted(0.3, params.kappa)
    for T in (1, 2, 3):
        for initial in ((0, 0), (1, 0), (1, 1)):
            xp = CovariatePath.empty(T)
            total = sum(sequence_prob(params, fe, xp, s)
                        for s in enumerate_sequences(T, initial))
            assert total == pytest.approx(1.0, abs=1e-12)
            assert len(enumerate_sequences(T, initial)) == 4 ** T


def test_sequence_prob_is_product_of_transitions():
    params = CommonParams.from_gammas(1.5, -0.8, 0.2, 1.1, rho=-0.4)
    fe = FixedEffects(0.6, -0.9)
    seq = PairSequence((1, 0, 1, 1), (0, 1, 1, 0))
    prod = 1.0
    for t in range(1, 4):
        prod *= transition_prob(params, fe, None,
                                (seq.y1[t - 1], seq.y2[t - 1]),
                                (seq.y1[t], seq.y2[t]))
    got = sequence_prob(params, fe, CovariatePath.empty(3), seq)
    assert got == pytest.approx(prod, rel=1e-12)


def test_sequence_prob_with_covariates():
    rng = np.random.default_rng(2)
    params = CommonParams(beta1=[0.5, -0.3], beta2=[0.2, 0.4],
                          gamma=[[1.0, -0.5], [-0.2, 0.9]], rho=0.7)
    fe = FixedEffects(0.1, 0.2)
    x1 = rng.normal(size=(2, 2))
    x2 = rng.normal(size=(2, 2))
    seq = PairSequence((0, 1, 0), (1, 1, 1))
    got = sequence_prob(params, fe, CovariatePath(x1, x2), seq)
    prod = 1.0
    for t in range(1, 3):
        prod *= transition_prob(
            params, fe, (x1[t - 1], x2[t - 1]),
            (seq.y1[t - 1], seq.y2[t - 1]), (seq.y1[t], seq.y2[t]))
    assert got == pytest.approx(prod, rel=1e-12)


def test_pair_sequence_validation():
    with pytest.raises(ValueError):
        PairSequence((0, 1), (0,))
    with pytest.raises(ValueError):
        PairSequence((0, 2), (0, 1))
    with pytest.raises(ValueError):
        PairSequence((0,), (1,))


def test_log_transition_table_matches_scalar_model():
    params = CommonParams.from_gammas(0.9, -0.4, -0.3, 0.7, rho=0.8)
    alphas1 = np.array([-1.0, 0.5, 2.0])
    alphas2 = np.array([0.3, -0.7, 1.1])
    table = log_transition_table(params.gamma, params.rho, alphas1, alphas2)
    for r, (a1, a2) in enumerate(zip(alphas1, alphas2)):
        fe = FixedEffects(a1, a2)
        for prev_code in range(4):
            prev = (prev_code >> 1, prev_code & 1)
            for c_code in range(4):
                c = (c_code >> 1, c_code & 1)
                want = np.log(transition_prob(params, fe, None, prev, c))
                assert table[r, prev_code, c_code] == pytest.approx(
                    want, abs=1e-12)


def test_log_sequence_matrix_matches_scalar_model():
    params = CommonParams.from_gammas(1.1, -0.6, 0.2, 0.9, rho=-0.5,
                                      kappa=0.7)
    alphas = np.array([-2.0, 0.0, 1.5])
    T = 3
    initial = (1, 0)
    mat = log_sequence_matrix(params.gamma, params.rho, alphas,
                              alphas + params.kappa, T, initial)
    seqs = enumerate_sequences(T, initial)
    for r, a in enumerate(alphas):
        fe = FixedEffects.restricted(a, params.kappa)
        for s, seq in enumerate(seqs):
            want = log_sequence_prob(params, fe, CovariatePath.empty(T), seq)
            assert mat[r, s] == pytest.approx(want, abs=1e-10)
