"""Closed-form moment conditions for the restricted model at T = 3.

Six moment conditions per initial condition (a, b), each supported on five
outcome sequences.  A sequence pattern is the flat tuple
(y1_0..y1_3, y2_0..y2_3) with y1_0 = a, y2_0 = b.  The weights are
polynomials in G11, G12, G21, G22 = exp(gamma_ij), B = exp(kappa) and
P = exp(rho), and are linear in P.

The polynomial bodies below are a mechanical transcription kept in one
place on purpose; ``validate_moments`` checks their exact expectation
against full-sequence enumeration and is the sole authority on their
correctness (it also pins down the reading of B as exp(kappa)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tables import log_sequence_matrix, sequence_codes

__all__ = [
    "MOMENT_SEQUENCES",
    "MomentVector",
    "moment_weights",
    "moment_coefficients",
    "moment_support",
    "validate_moments",
    "sample_moments",
]

N_MOMENTS = 6

# Sequence patterns per moment: ((y1_1, y1_2, y1_3), (y2_1, y2_2, y2_3)),
# with the initial pair (a, b) prepended at evaluation time.
MOMENT_SEQUENCES = (
    # moment 1
    (((0, 0, 1), (0, 1, 0)),
     ((0, 0, 1), (0, 1, 1)),
     ((0, 1, 0), (0, 1, 0)),
     ((0, 1, 0), (1, 1, 0)),
     ((0, 1, 1), (0, 1, 0))),
    # moment 2
    (((0, 0, 1), (1, 0, 0)),
     ((0, 0, 1), (1, 0, 1)),
     ((0, 1, 0), (0, 1, 1)),
     ((1, 0, 0), (1, 0, 0)),
     ((1, 0, 0), (1, 1, 0))),
    # moment 3
    (((0, 1, 1), (1, 0, 1)),
     ((0, 1, 1), (1, 1, 1)),
     ((1, 0, 0), (1, 1, 1)),
     ((1, 1, 1), (0, 1, 0)),
     ((1, 1, 1), (0, 1, 1))),
    # moment 4
    (((1, 0, 0), (1, 0, 1)),
     ((1, 0, 1), (0, 0, 1)),
     ((1, 0, 1), (1, 0, 1)),
     ((1, 1, 0), (1, 0, 0)),
     ((1, 1, 0), (1, 0, 1))),
    # moment 5
    (((0, 0, 0), (0, 1, 0)),
     ((0, 0, 0), (0, 1, 1)),
     ((0, 1, 0), (0, 0, 0)),
     ((0, 1, 0), (0, 0, 1)),
     ((0, 1, 0), (1, 0, 0))),
    # moment 6
    (((0, 0, 0), (1, 0, 1)),
     ((0, 1, 0), (1, 0, 1)),
     ((0, 1, 1), (0, 0, 0)),
     ((0, 1, 1), (0, 0, 1)),
     ((1, 0, 0), (0, 1, 0))),
)


def _weights_1(g11, g12, g21, g22, B, P, a, b):
    q1 = (g12 * (-B * g21 * g22**2 + (B + 1) * g22
                 + g11 * (g21 * g22 * (B * g22 - B - 1) + 1) - 1)
          + B * (g21 - 1) * g22 + g11 * (g21 - 1) * g22 * g12**2)
    m1 = B * g11 * g22 * P * q1
    m2 = g11 * (B**2 * (g21 - 1) * g22**2
                + g12**2 * (-B * g22**2 * P
                            + g11 * (B * g21 * g22**2 * P - (B + 1) * g22 + 1)
                            + (B + 1) * g22 - 1)
                + B * g22 * g12 * (B * g22 - g21 * ((B + 1) * g22 - 1)
                                   + g11 * (1 - g21 * P) + g22 + P - 2))
    m3 = -B * g11 * g12 * g22 * q1
    m4 = -g11 * g12 * g21**(-a) * g22**(1 - b) * (
        g11 * (B**2 * (g21 - 1) * g21 * g22**2
               + B * g22 * g12 * (2 * g21 * (P - 2) + g21**2 + 1)
               - (g21 - 1) * g12**2)
        + g12 * g11**2 * (B * g21 * g22 * (1 - g21 * P) + g12 * (g21 - 1))
        + B * g22 * (g12 * (g21 - P) - B * (g21 - 1) * g21 * g22))
    m5 = B * g22 * (
        g11**2 * g12**2 * (-B * g21**2 * g22**2 * P + (B + 1) * g21 * g22 - 1)
        + g11 * g12 * (B * g22 * (g21 * (-(B + 1) * g22 + P - 2)
                                  + (B + 1) * g22 * g21**2 + 1)
                       + g12 * (g21 * g22 * (B * g22 * P - B - 1) + 1))
        + B * g22 * (g12 * (g21 - P) - B * (g21 - 1) * g21 * g22))
    return [m1, m2, m3, m4, m5]


def _weights_2(g11, g12, g21, g22, B, P, a, b):
    q1 = (g12 * (-B * g21 * g22**2 + (B + 1) * g22
                 + g11 * (g21 * g22 * (B * g22 - B - 1) + 1) - 1)
          + B * (g21 - 1) * g22 + g11 * (g21 - 1) * g22 * g12**2)
    m1 = -B * g21 * P * g11**a * g12**b * q1
    m2 = -g21 * g11**a * g12**b * (
        B**2 * (g21 - 1) * g22**2
        + g12**2 * (-B * g22**2 * P
                    + g11 * (B * g21 * g22**2 * P - (B + 1) * g22 + 1)
                    + (B + 1) * g22 - 1)
        + B * g22 * g12 * (B * g22 - g21 * ((B + 1) * g22 - 1)
                           + g11 * (1 - g21 * P) + g22 + P - 2))
    m3 = g11**a * g21**a * g12**b * g22**(b - 1) * (
        g11**2 * g12**2 * (B * g21**2 * g22**2 * P - (B + 1) * g21 * g22 + 1)
        - g11 * g12 * (B * g22 * (g21 * (-(B + 1) * g22 + P - 2)
                                  + (B + 1) * g22 * g21**2 + 1)
                       + g12 * (g21 * g22 * (B * g22 * P - B - 1) + 1))
        + B * g22 * (B * (g21 - 1) * g21 * g22 + g12 * (P - g21)))
    m4 = B * g21 * q1
    m5 = g12 * (
        g11 * (B**2 * (g21 - 1) * g21 * g22**2
               + B * g22 * g12 * (2 * g21 * (P - 2) + g21**2 + 1)
               - (g21 - 1) * g12**2)
        + g12 * g11**2 * (B * g21 * g22 * (1 - g21 * P) + g12 * (g21 - 1))
        + B * g22 * (g12 * (g21 - P) - B * (g21 - 1) * g21 * g22))
    return [m1, m2, m3, m4, m5]


def _weights_3(g11, g12, g21, g22, B, P, a, b):
    q2 = (g11 * ((g21 - g22) * g12 * (B * g21 * g22 + 1)
                 - B * (g21 - 1) * g21 * g22
                 - (g21 - 1) * g22 * g12**2)
          + B * g12 * g21 * (g22 - 1) * g22
          + g12 * g21 * (g22 - 1) * g11**2)
    m1 = -B * g11**(a + 1) * g21**(-a) * g12**b * g22**(1 - b) * (
        g11 * (B**2 * g21 * (g21 - g22) * g22
               + B * g12 * (2 * g22 * g21 * (P - 2) + g21**2 + g22**2)
               + g12**2 * (g22 - g21))
        + g11**2 * (B * g21 * (g22 - g21 * P) + g12 * (g21 - g22))
        + B * g12 * g22 * (B * g21 * (g22 - g21) + g12 * (g21 - g22 * P)))
    m2 = -B * g11**(a + 1) * g21**(-a) * g12**b * g22**(-b) * q2
    m3 = g11**2 * g12 * g21**(-a) * g22**(-b - 1) * (
        g11 * (B**2 * (g21 - 1) * g21 * g22**2
               + g12**2 * (g21 * (B * g22**2 * P - B * g22 - 1) + g22)
               + B * g22 * g12 * (g21 * (-g22 + P - 2) + g21**2 + g22))
        + g12 * g11**2 * (B * g21 * g22 * (1 - g21 * P) + g12 * (g21 - g22))
        + B * g12 * g22 * (g12 * (g21 - g22 * P) - B * (g21 - 1) * g21 * g22))
    m4 = B**2 * g22 * (
        B**2 * g12 * g21**2 * (g22 - 1) * g22
        + g11**2 * (g12 * (B * g22 * g21**2 * P + g21 * (1 - B * g22) - g22)
                    + B * g21 * (g22 - g21 * P)
                    + (g22 - g21) * g12**2)
        + B * g21 * g11 * (-B * g21 * (g22 - 1) * g22
                           + g12**2 * (g22 - g22**2 * P)
                           + g12 * (g22 * (g22 + P - 2) - g21 * (g22 - 1))))
    m5 = B**2 * g11 * q2
    return [m1, m2, m3, m4, m5]


def _weights_4(g11, g12, g21, g22, B, P, a, b):
    q3 = (g11 * (-B * g22 * g21**2 + (B + 1) * g21
                 + g12 * (B * g22 * g21**2 - (B + 1) * g22 * g21 + 1) - 1)
          + B * g21 * (g22 - 1) + g12 * g21 * (g22 - 1) * g11**2)
    m1 = g12 * (
        g11 * (-g21 * (B**2 + g12 * (B - B * g22 * P) + B * g22 - B * P
                       + 2 * B + 1)
               + B * (B + 1) * g22 * g21**2 + B + 1)
        + g12 * g11**2 * (-B * g22 * g21**2 * P + (B + 1) * g21 - 1)
        + B * (-B * g22 * g21**2 + (B + 1) * g21 - P))
    m2 = -B * g12 * g21**a * g22**b * (
        g11 * (-g21 * (B**2 - 2 * B * P + 4 * B + 1)
               + B * (B + 1) * g21**2 + B + 1)
        + g11**2 * (-B * g21**2 * P + (B + 1) * g21 - 1)
        + B * (-B * g21**2 + (B + 1) * g21 - P))
    m3 = -B * g12 * q3
    m4 = B * (
        B**2 * (g22 - 1) * g21**2 / g11
        + B * g21 * (-(B + 1) * g21 * (g22 - 1) + g12 * (1 - g22 * P)
                     + g22 + P - 2)
        + g11 * (-B * g21**2 * P
                 + g12 * (B * g22 * g21**2 * P - (B + 1) * g21 + 1)
                 + (B + 1) * g21 - 1))
    m5 = B * P * q3
    return [m1, m2, m3, m4, m5]


def _weights_5(g11, g12, g21, g22, B, P, a, b):
    q4 = (B * (g22 - g21) + g12 * (g22 * (B * g21 - B - 1) + 1)
          + g11 * (g21 * (-B * g22 + B - g12 + 1) + g12 * g22 - 1))
    m1 = B * g12 * g21**a * g22**b * q4
    m2 = g12 * g21**a * g22**(b - 1) * (
        B**2 * g22 * (g22 - g21)
        + B * g12 * (g21 * ((B + 1) * g22 - 1)
                     - g22 * ((B + 1) * g22 + P - 2))
        + g12**2 * (B * g22**2 * P - (B + 1) * g22 + 1)
        + g11 * (B * (g21 * P - g22)
                 + g12 * (g22 * (-B * g21 * P + B + 1) - 1)))
    m3 = -B**2 * g12 * g21**a * g22**b * q4
    m4 = -B * g12 * g21**(a - 1) * g22**b * (
        g11**2 * (-B * g21**2 * P + (B + 1) * g21 - 1)
        + g11 * (B * (g21 * (-(B + 1) * g22 + P - 2) + (B + 1) * g21**2 + g22)
                 + g12 * (g21 * (B * g22 * P - B - 1) + 1))
        + B * (B * g21 * (g22 - g21) + g12 * (g21 - g22 * P)))
    m5 = B * (
        g11 * (B**2 * g21 * (g21 - g22) * g22
               + B * g12 * (2 * g22 * g21 * (P - 2) + g21**2 + g22**2)
               + g12**2 * (g22 - g21))
        + g11**2 * (B * g21 * (g22 - g21 * P) + g12 * (g21 - g22))
        + B * g12 * g22 * (B * g21 * (g22 - g21) + g12 * (g21 - g22 * P)))
    return [m1, m2, m3, m4, m5]


def _weights_6(g11, g12, g21, g22, B, P, a, b):
    q5 = (B * (g22 - g21) + g12 * (g22 * (B * g21 - B - 1) + 1)
          + g11 * (g21 * (-B * g22 + B - g12 + 1) + g12 * g22 - 1))
    m1 = g11**a * g21**(1 - a) * g12**b * g22**(-b) * (
        -g12 * (-g22 * (B**2 - 2 * B * P + 4 * B + 1)
                + B * (B + 1) * g22**2 + B + 1)
        + g12**2 * (B * g22**2 * P - (B + 1) * g22 + 1)
        + B * (B * g22**2 - (B + 1) * g22 + P))
    m2 = B * P * g11**a * g21**(-a) * g12**b * g22**(1 - b) * (
        B * (g21 - g22) + g12 * (g22 * (-B * g21 + B + 1) - 1)
        + g11 * (g21 * (B * g22 - B + g12 - 1) - g12 * g22 + 1))
    m3 = B**2 * g21 * g11**(a - 1) * g12**b * (
        g12 * (-B**2 * g22 + B * g22 * P
               + g11 * (g22 * (-B * g21 * P + B + 1) - 1)
               - 2 * B * g22 + B * g21 * ((B + 1) * g22 - 1) + B - g22 + 1)
        + B * (g22 * (-B * g21 + B + 1) + g11 * (g21 * P - g22) - P))
    m4 = B**2 * g11**(a - 1) * g12**b * q5
    m5 = B * (
        B**2 * (g21 - g22) * g22
        + B * g12 * (g22 * ((B + 1) * g22 + P - 2)
                     - g21 * ((B + 1) * g22 - 1))
        + g12**2 * (-B * g22**2 * P + (B + 1) * g22 - 1)
        + g11 * (B * (g22 - g21 * P)
                 + g12 * (g22 * (B * g21 * P - B - 1) + 1)))
    return [m1, m2, m3, m4, m5]


_WEIGHT_FUNCS = (_weights_1, _weights_2, _weights_3, _weights_4, _weights_5,
                 _weights_6)


def moment_support(j: int, initial) -> list:
    """The five full outcome tuples supporting moment j for this initial pair."""
    if not 1 <= j <= N_MOMENTS:
        raise ValueError("moment index must be in 1..6")
    a, b = int(initial[0]), int(initial[1])
    out = []
    for pat1, pat2 in MOMENT_SEQUENCES[j - 1]:
        out.append((a,) + pat1 + (b,) + pat2)
    return out


def moment_weights(gammas, kappa, rho, initial, j: int) -> np.ndarray:
    """The five sequence weights of moment j at the given parameters."""
    if not 1 <= j <= N_MOMENTS:
        raise ValueError("moment index must be in 1..6")
    g = np.asarray(gammas, dtype=float)
    G = np.exp(g)
    B = float(np.exp(kappa))
    P = float(np.exp(rho))
    a, b = int(initial[0]), int(initial[1])
    vals = _WEIGHT_FUNCS[j - 1](G[0, 0], G[0, 1], G[1, 0], G[1, 1], B, P, a, b)
    return np.array(vals)


def moment_coefficients(gammas, kappa, initial, j: int) -> np.ndarray:
    """Decompose the five weights as u + v * exp(rho); returns shape (5, 2).

    The weights are linear in exp(rho), so two evaluations determine the
    decomposition exactly.
    """
    at0 = moment_weights(gammas, kappa, np.log(1.0), initial, j)  # P = 1
    # evaluate at P = 0 via rho -> -inf is not representable; use P = 1 and
    # P = 2 instead: u = 2*m(1) - m(2), v = m(2) - m(1)
    at2 = moment_weights(gammas, kappa, np.log(2.0), initial, j)
    u = 2.0 * at0 - at2
    v = at2 - at0
    return np.stack([u, v], axis=1)


@dataclass
class MomentVector:
    """Per-household values of the 24 stacked moments (6 per initial pair)."""

    values: np.ndarray  # shape (n, 24)
    labels: tuple       # length 24, (initial, j)
    match_fraction: np.ndarray  # fraction of households firing each moment


def _stacked_labels():
    return tuple(((a, b), j)
                 for a in (0, 1) for b in (0, 1)
                 for j in range(1, N_MOMENTS + 1))


def moment_matrix_per_household(panel, gammas, kappa, rho) -> MomentVector:
    """Evaluate all 24 moments for every household of a T=3 panel."""
    if panel.T != 3:
        raise ValueError("closed-form moments require T = 3")
    flat = np.concatenate([panel.y1, panel.y2], axis=1)
    labels = _stacked_labels()
    n = panel.n
    values = np.zeros((n, len(labels)))
    match = np.zeros(len(labels))
    # pack the 8 bits of (y1 path, y2 path) into one integer per household
    powers = 1 << np.arange(7, -1, -1)
    keys = flat.astype(np.int64) @ powers
    for col, (initial, j) in enumerate(labels):
        weights = moment_weights(gammas, kappa, rho, initial, j)
        fired = np.zeros(n, dtype=bool)
        for w, pattern in zip(weights, moment_support(j, initial)):
            mask = keys == int(np.dot(pattern, powers))
            values[mask, col] = w
            fired |= mask
        match[col] = fired.mean()
    return MomentVector(values=values, labels=labels, match_fraction=match)


def sample_moments(panel, gammas, kappa, rho):
    """Sample means and covariance of the 24 stacked moments.

    Returns (means, cov, MomentVector); the means are the GMM sample
    moments and the matching fractions are carried for diagnostics.
    """
    mv = moment_matrix_per_household(panel, gammas, kappa, rho)
    means = mv.values.mean(axis=0)
    centered = mv.values - means
    cov = centered.T @ centered / panel.n
    return means, cov, mv


def validate_moments(gammas, kappa, rho, alpha_grid) -> float:
    """Max relative exact expectation of all 24 moments over an alpha grid.

    For each initial pair and each moment, the expectation is the weighted
    sum of restricted-model sequence probabilities over the five supporting
    sequences.  The result is normalized by the absolute-value sum of the
    weighted terms, so a correct transcription gives ~1e-15 and a wrong
    symbol reading gives O(1).
    """
    g = np.asarray(gammas, dtype=float)
    alpha = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    codes = sequence_codes(3)
    worst = 0.0
    for a in (0, 1):
        for b in (0, 1):
            logp = log_sequence_matrix(g, rho, alpha, alpha + kappa, 3, (a, b))
            probs = np.exp(logp)  # (R, 64)
            for j in range(1, N_MOMENTS + 1):
                weights = moment_weights(g, kappa, rho, (a, b), j)
                cols = [_pattern_column(pattern, codes)
                        for pattern in moment_support(j, (a, b))]
                terms = probs[:, cols] * weights[None, :]
                scale = np.abs(terms).sum(axis=1)
                scale = np.where(scale > 0, scale, 1.0)
                rel = np.abs(terms.sum(axis=1)) / scale
                worst = max(worst, float(rel.max()))
    return worst


def _pattern_column(pattern, codes) -> int:
    """Column index of a flat outcome tuple in the enumeration order."""
    T = codes.shape[1]
    y1 = pattern[1:T + 1]
    y2 = pattern[T + 2:]
    cell = tuple(2 * c + d for c, d in zip(y1, y2))
    matches = np.nonzero(np.all(codes == np.array(cell), axis=1))[0]
    return int(matches[0])
