"""Exact probabilities of the simultaneous bivariate logit model.

All probability computations are carried out in log space with a
log-sum-exp normalizer so that parameter values far from zero (wide
fixed-effect grids in particular) do not overflow.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .params import CommonParams, FixedEffects

__all__ = [
    "PairSequence",
    "CovariatePath",
    "joint_prob_static",
    "conditional_prob",
    "transition_prob",
    "log_transition_prob",
    "sequence_prob",
    "log_sequence_prob",
    "enumerate_sequences",
]


@dataclass(frozen=True)
class PairSequence:
    """One unit's pair of binary outcome paths over periods 0..T.

    Index 0 is the initial condition; the remaining T entries are the
    modeled outcomes.
    """

    y1: tuple
    y2: tuple

    def __post_init__(self):
        y1 = tuple(int(v) for v in self.y1)
        y2 = tuple(int(v) for v in self.y2)
        if len(y1) != len(y2) or len(y1) < 2:
            raise ValueError("y1 and y2 must have equal length T+1 with T >= 1")
        if any(v not in (0, 1) for v in y1 + y2):
            raise ValueError("outcomes must be 0 or 1")
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)

    @property
    def T(self) -> int:
        return len(self.y1) - 1

    @property
    def initial(self) -> tuple:
        return (self.y1[0], self.y2[0])

    def as_tuple(self) -> tuple:
        """Flat layout (y1_0..y1_T, y2_0..y2_T)."""
        return self.y1 + self.y2


@dataclass(frozen=True)
class CovariatePath:
    """Strictly exogenous covariates for periods 1..T (one row per period)."""

    x1: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    x2: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __post_init__(self):
        x1 = np.atleast_2d(np.asarray(self.x1, dtype=float))
        x2 = np.atleast_2d(np.asarray(self.x2, dtype=float))
        if x1.shape != x2.shape:
            raise ValueError("x1 and x2 must have the same shape")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def T(self) -> int:
        return self.x1.shape[0]

    @property
    def k(self) -> int:
        return self.x1.shape[1]

    @classmethod
    def empty(cls, T: int) -> "CovariatePath":
        return cls(np.zeros((T, 0)), np.zeros((T, 0)))


def _check_cov(params: CommonParams, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != params.n_covariates:
        raise ValueError(
            f"covariate length {x.shape[0]} does not match beta length "
            f"{params.n_covariates}"
        )
    return x


def _log_cells(z1: float, z2: float, rho: float) -> np.ndarray:
    """Log probabilities of the four cells (0,0),(0,1),(1,0),(1,1)."""
    logits = np.array([0.0, z2, z1, z1 + z2 + rho])
    return logits - logsumexp(logits)


def joint_prob_static(params: CommonParams, x1, x2, c1: int, c2: int) -> float:
    """Joint probability P(y1=c1, y2=c2 | x1, x2) in the static model."""
    x1 = _check_cov(params, x1)
    x2 = _check_cov(params, x2)
    z1 = float(x1 @ params.beta1)
    z2 = float(x2 @ params.beta2)
    lc = _log_cells(z1, z2, params.rho)
    return float(np.exp(lc[2 * int(c1) + int(c2)]))


def conditional_prob(params: CommonParams, x_own, y_other: int) -> float:
    """P(y_own = 1 | y_other) = logistic(x'beta + rho * y_other).

    Uses beta1 as the own-equation coefficients; by the symmetry of the
    model the same formula applies to the other equation with beta2.
    """
    x_own = _check_cov(params, x_own)
    z = float(x_own @ params.beta1) + params.rho * int(y_other)
    # logistic in log space: 1 / (1 + exp(-z))
    return float(np.exp(-np.logaddexp(0.0, -z)))


def log_transition_prob(params: CommonParams, fe: FixedEffects, x_t,
                        y_prev, c) -> float:
    """Log of the one-period transition probability of the dynamic model."""
    if x_t is None:
        xb1 = xb2 = 0.0
    else:
        x1, x2 = x_t
        xb1 = float(_check_cov(params, x1) @ params.beta1)
        xb2 = float(_check_cov(params, x2) @ params.beta2)
    y1p, y2p = int(y_prev[0]), int(y_prev[1])
    g = params.gamma
    z1 = xb1 + g[0, 0] * y1p + g[0, 1] * y2p + fe.alpha1
    z2 = xb2 + g[1, 0] * y1p + g[1, 1] * y2p + fe.alpha2
    lc = _log_cells(z1, z2, params.rho)
    return float(lc[2 * int(c[0]) + int(c[1])])


def transition_prob(params: CommonParams, fe: FixedEffects, x_t, y_prev, c) -> float:
    """One-period transition probability P(c | state) of the dynamic model."""
    return float(np.exp(log_transition_prob(params, fe, x_t, y_prev, c)))


def log_sequence_prob(params: CommonParams, fe: FixedEffects,
                      xpath: CovariatePath, seq: PairSequence) -> float:
    """Log probability of a full sequence conditional on its initial pair."""
    if seq.T < 1:
        raise ValueError("sequence must have T >= 1")
    if xpath.k != params.n_covariates:
        raise ValueError("covariate path width does not match beta length")
    if xpath.k > 0 and xpath.T != seq.T:
        raise ValueError("covariate path length does not match sequence length")
    total = 0.0
    for t in range(1, seq.T + 1):
        x_t = None if xpath.k == 0 else (xpath.x1[t - 1], xpath.x2[t - 1])
        total += log_transition_prob(
            params, fe, x_t,
            (seq.y1[t - 1], seq.y2[t - 1]), (seq.y1[t], seq.y2[t]),
        )
    return total


def sequence_prob(params: CommonParams, fe: FixedEffects,
                  xpath: CovariatePath, seq: PairSequence) -> float:
    """Probability of a full sequence conditional on its initial pair."""
    return float(np.exp(log_sequence_prob(params, fe, xpath, seq)))


def enumerate_sequences(T: int, initial) -> list:
    """All 4**T sequences of length T+1 sharing the given initial pair."""
    if T < 1:
        raise ValueError("T must be >= 1")
    y10, y20 = int(initial[0]), int(initial[1])
    out = []
    for cells in itertools.product(range(4), repeat=T):
        y1 = (y10,) + tuple(c >> 1 for c in cells)
        y2 = (y20,) + tuple(c & 1 for c in cells)
        out.append(PairSequence(y1, y2))
    return out
