"""Numerical moment counting: method agreement, basis validity."""

import numpy as np
import pytest

from bivlogit.counting import (CountConfig, coefficient_matrix,
                               count_moments, extract_moment_basis)
from bivlogit.moments import moment_support, moment_weights
from bivlogit.tables import log_sequence_matrix, sequence_codes

RNG = np.random.default_rng(0)


def test_svd_and_exact_methods_agree_at_t3():
    for restricted in (False, True):
        config = CountConfig(T=3, restricted=restricted)
        svd = count_moments(config, method="svd").as_tuple()
        exact = count_moments(config, method="exact").as_tuple()
        assert svd == exact


def test_counts_t3():
    assert count_moments(CountConfig(T=3, restricted=False)).as_tuple() \
        == (24, 21, 0)
    assert count_moments(CountConfig(T=3, restricted=True)).as_tuple() \
        == (45, 42, 6)


def test_null_vector_kills_probabilities_on_fresh_alphas():
    # any basis vector must annihilate exact sequence probabilities for
    # alpha values never used in its construction
    config = CountConfig(T=3, restricted=True)
    g = np.array([[1.3, -0.6], [-0.4, 1.1]])
    rho, kappa = 0.7, 0.5
    basis = extract_moment_basis(config, gammas=g, rho=rho, kappa=kappa)
    assert basis.shape == (45, 64)
    alphas = np.array([-5.3, -1.7, 0.9, 2.4, 4.8])
    probs = np.exp(log_sequence_matrix(g, rho, alphas, alphas + kappa, 3,
                                       config.initial))
    resid = probs @ basis.T
    assert np.max(np.abs(resid)) < 1e-8


def test_closed_form_moments_lie_in_discovered_null_space():
    # project each appendix-style moment vector onto the numerical basis;
    # the residual must vanish
    config = CountConfig(T=3, restricted=True, initial=(1, 0))
    g = np.array([[0.9, -0.3], [0.2, 1.2]])
    rho, kappa = 0.6, 0.8
    basis = extract_moment_basis(config, gammas=g, rho=rho, kappa=kappa)
    q, _ = np.linalg.qr(basis.T)
    codes = sequence_codes(3)
    seq_index = {}
    for s, row in enumerate(codes):
        y1 = tuple(int(c >> 1) for c in row)
        y2 = tuple(int(c & 1) for c in row)
        seq_index[(1,) + y1 + (0,) + y2] = s
    for j in range(1, 7):
        w = np.zeros(64)
        for weight, flat in zip(moment_weights(g, kappa, rho, (1, 0), j),
                                moment_support(j, (1, 0))):
            w[seq_index[flat]] = weight
        w /= np.linalg.norm(w)
        resid = w - q @ (q.T @ w)
        assert np.linalg.norm(resid) < 1e-8


def test_coefficient_matrix_encodes_exact_probabilities():
    # clearing the common denominator: coef @ A-powers must equal
    # prob * prod(denominators) for any alpha
    config = CountConfig(T=3, restricted=True)
    g = np.array([[0.8, -0.2], [0.1, 0.6]])
    rho, kappa = 0.5, 0.3
    coef = coefficient_matrix(g, rho, kappa, config)
    deg = coef.shape[0] - 1
    for alpha in (-1.3, 0.4, 2.1):
        A = np.exp(alpha)
        powers = A ** np.arange(deg + 1)
        lhs = powers @ coef
        probs = np.exp(log_sequence_matrix(
            g, rho, np.array([alpha]), np.array([alpha + kappa]), 3,
            config.initial))[0]
        ratio = lhs / probs
        # common factor: identical across all sequences
        assert np.allclose(ratio, ratio[0], rtol=1e-9)


@pytest.mark.slow
def test_counts_t4():
    assert count_moments(CountConfig(T=4, restricted=False)).as_tuple() \
        == (180, 136, 4)
    assert count_moments(CountConfig(T=4, restricted=True)).as_tuple() \
        == (229, 185, 18)
