"""Vectorized sequence-probability tables.

The moment-counting, moment-validation and CRE modules all need the
probability of every one of the 4**T continuations of an initial pair,
evaluated on whole grids of fixed-effect values at once.  This module
holds the shared numpy kernels for that.

Cell coding: a period outcome pair (y1, y2) is coded as 2*y1 + y2, so the
four cells are 0=(0,0), 1=(0,1), 2=(1,0), 3=(1,1).  Sequences are listed
in the order produced by :func:`bivlogit.model.enumerate_sequences`.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import logsumexp

__all__ = ["sequence_codes", "log_transition_table", "log_sequence_matrix"]

_CELL_Y1 = np.array([0, 0, 1, 1])
_CELL_Y2 = np.array([0, 1, 0, 1])


def sequence_codes(T: int) -> np.ndarray:
    """(4**T, T) array of cell codes, matching enumerate_sequences order."""
    return np.array(list(itertools.product(range(4), repeat=T)), dtype=np.int64)


def log_transition_table(gamma, rho, alpha1, alpha2, xb1=0.0, xb2=0.0) -> np.ndarray:
    """Log transition probabilities for a grid of fixed effects.

    ``alpha1``/``alpha2`` are broadcastable arrays of shape (R,); the result
    has shape (R, 4, 4): [draw, previous cell, next cell].
    """
    alpha1 = np.atleast_1d(np.asarray(alpha1, dtype=float))
    alpha2 = np.atleast_1d(np.asarray(alpha2, dtype=float))
    g = np.asarray(gamma, dtype=float)
    # z per previous cell, shape (R, 4)
    z1 = (xb1 + g[0, 0] * _CELL_Y1 + g[0, 1] * _CELL_Y2)[None, :] + alpha1[:, None]
    z2 = (xb2 + g[1, 0] * _CELL_Y1 + g[1, 1] * _CELL_Y2)[None, :] + alpha2[:, None]
    # logits of the next cell, shape (R, 4, 4)
    logits = np.zeros(z1.shape + (4,))
    logits[..., 1] = z2
    logits[..., 2] = z1
    logits[..., 3] = z1 + z2 + rho
    return logits - logsumexp(logits, axis=-1, keepdims=True)


def log_sequence_matrix(gamma, rho, alpha1, alpha2, T: int, initial,
                        xb1=None, xb2=None) -> np.ndarray:
    """Log probability of every continuation, for a grid of fixed effects.

    Returns shape (R, 4**T); column order matches ``enumerate_sequences``.
    ``xb1``/``xb2`` are optional per-period covariate indices of length T.
    """
    alpha1 = np.atleast_1d(np.asarray(alpha1, dtype=float))
    codes = sequence_codes(T)
    init_code = 2 * int(initial[0]) + int(initial[1])
    out = np.zeros((alpha1.shape[0], codes.shape[0]))
    prev_codes = np.full(codes.shape[0], init_code, dtype=np.int64)
    for t in range(T):
        b1 = 0.0 if xb1 is None else float(xb1[t])
        b2 = 0.0 if xb2 is None else float(xb2[t])
        table = log_transition_table(gamma, rho, alpha1, alpha2, b1, b2)
        out += table[:, prev_codes, codes[:, t]]
        prev_codes = codes[:, t]
    return out
