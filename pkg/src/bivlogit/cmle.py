"""Conditional maximum likelihood for the dynamic fixed-effects model.

Conditioning on the sufficient statistic removes the fixed effects from
the likelihood; it also removes the simultaneity parameter, so only the
lag coefficients (and, under the restricted fixed-effects model
alpha2 = alpha1 + kappa, the spouse shift kappa) are estimated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .model import PairSequence, enumerate_sequences
from .panel import Panel
from .params import CommonParams
from .results import FitResult

__all__ = [
    "SufficientStat",
    "ComparisonClass",
    "NoInformationError",
    "sufficient_stat",
    "comparison_class",
    "cond_loglik_unrestricted",
    "cond_loglik_restricted",
    "fit_cmle",
]


class NoInformationError(ValueError):
    """Every comparison class is a singleton; the likelihood is flat."""


@dataclass(frozen=True)
class SufficientStat:
    """Conditioning statistic identifying a comparison class of sequences."""

    initial: tuple
    mid_sum1: int
    mid_sum2: int
    mid_cross: int
    tail: tuple  # exact last pair, or (sum,) under the restricted model

    def __post_init__(self):
        if not 0 <= self.mid_cross <= min(self.mid_sum1, self.mid_sum2):
            raise ValueError("invalid middle-period counts")


@dataclass(frozen=True)
class ComparisonClass:
    stat: SufficientStat
    members: tuple  # of PairSequence


def sufficient_stat(seq: PairSequence, restricted: bool) -> SufficientStat:
    """The conditioning statistic of one sequence.

    Middle-period sums run over t = 1..T-1; the tail is the exact final
    pair, or only its sum when the fixed effects are restricted.
    """
    T = seq.T
    mid1 = sum(seq.y1[1:T])
    mid2 = sum(seq.y2[1:T])
    cross = sum(a * b for a, b in zip(seq.y1[1:T], seq.y2[1:T]))
    if restricted:
        tail = (seq.y1[T] + seq.y2[T],)
    else:
        tail = (seq.y1[T], seq.y2[T])
    return SufficientStat(seq.initial, mid1, mid2, cross, tail)


def comparison_class(stat: SufficientStat, T: int) -> ComparisonClass:
    """All sequences sharing the statistic (enumeration filtered by equality)."""
    restricted = len(stat.tail) == 1
    members = tuple(
        s for s in enumerate_sequences(T, stat.initial)
        if sufficient_stat(s, restricted) == stat
    )
    return ComparisonClass(stat, members)


def _features(seq: PairSequence, restricted: bool) -> np.ndarray:
    """Sufficient 'count' features multiplying (g11, g12, g21, g22[, kappa])."""
    f = [0.0] * (5 if restricted else 4)
    for t in range(1, seq.T + 1):
        c, d = seq.y1[t], seq.y2[t]
        cp, dp = seq.y1[t - 1], seq.y2[t - 1]
        f[0] += c * cp
        f[1] += c * dp
        f[2] += d * cp
        f[3] += d * dp
        if restricted:
            f[4] += d
    return np.array(f)


@lru_cache(maxsize=None)
def _class_table(T: int, restricted: bool):
    """Per initial condition: sequence -> (class id, feature row); class sizes.

    Returns (index, features, class_of_seq, class_slices) where sequences are
    keyed by their flat outcome tuple.
    """
    seq_key = {}
    features = []
    class_members = {}
    order = []
    for init in ((0, 0), (0, 1), (1, 0), (1, 1)):
        for seq in enumerate_sequences(T, init):
            stat = sufficient_stat(seq, restricted)
            idx = len(features)
            seq_key[seq.as_tuple()] = idx
            features.append(_features(seq, restricted))
            class_members.setdefault(stat, []).append(idx)
            order.append(stat)
    features = np.array(features)
    class_list = list(class_members.values())
    return seq_key, features, class_list


def _theta_from_params(params: CommonParams, restricted: bool) -> np.ndarray:
    g = params.gamma
    theta = [g[0, 0], g[0, 1], g[1, 0], g[1, 1]]
    if restricted:
        theta.append(params.kappa)
    return np.array(theta)


def _cond_loglik(theta, seq: PairSequence, restricted: bool) -> float:
    stat = sufficient_stat(seq, restricted)
    members = comparison_class(stat, seq.T).members
    w_obs = float(_features(seq, restricted) @ theta)
    w_all = np.array([float(_features(m, restricted) @ theta) for m in members])
    return w_obs - float(logsumexp(w_all))


def cond_loglik_unrestricted(params: CommonParams, seq: PairSequence) -> float:
    """Log conditional likelihood with unrestricted fixed effects (gamma only)."""
    if seq.T < 3:
        raise ValueError("conditional likelihood needs T >= 3")
    return _cond_loglik(_theta_from_params(params, False), seq, False)


def cond_loglik_restricted(params: CommonParams, seq: PairSequence) -> float:
    """Log conditional likelihood under alpha2 = alpha1 + kappa (gamma, kappa)."""
    if seq.T < 3:
        raise ValueError("conditional likelihood needs T >= 3")
    return _cond_loglik(_theta_from_params(params, True), seq, True)


# ---------------------------------------------------------------------------
# panel-level fit


def _binned_data(panel: Panel, restricted: bool):
    """Aggregate the panel into per-class member counts."""
    seq_key, features, class_list = _class_table(panel.T, restricted)
    counts = np.zeros(len(features))
    for key, c in panel.sequence_counts().items():
        counts[seq_key[key]] = c
    informative = [np.array(cls) for cls in class_list if len(cls) > 1]
    n_singleton = int(sum(counts[np.array(cls)].sum()
                          for cls in class_list if len(cls) == 1))
    return features, counts, informative, n_singleton


def _objective(theta, features, counts, classes):
    """Negative conditional log likelihood, gradient and information."""
    p = len(theta)
    ll = 0.0
    grad = np.zeros(p)
    info = np.zeros((p, p))
    for cls in classes:
        c = counts[cls]
        total = c.sum()
        if total == 0:
            continue
        f = features[cls]
        w = f @ theta
        lse = logsumexp(w)
        pr = np.exp(w - lse)
        ll += float(c @ w) - total * lse
        mean = pr @ f
        grad += c @ f - total * mean
        centered = f - mean
        info += total * (centered * pr[:, None]).T @ centered
    return -ll, -grad, info


def fit_cmle(panel: Panel, restricted: bool = False) -> FitResult:
    """Maximize the summed conditional log likelihood over the panel.

    Households whose comparison class is a singleton carry no information;
    they are counted and reported, not silently dropped.  Standard errors
    come from the inverse observed information (one sequence per household,
    so household-level clustering is automatic).
    """
    if panel.T < 3:
        raise NoInformationError(
            "every comparison class is a singleton for T < 3")
    features, counts, classes, n_singleton = _binned_data(panel, restricted)
    n_informative = panel.n - n_singleton
    if n_informative == 0:
        raise NoInformationError("all comparison classes are singletons")

    names = ("gamma11", "gamma12", "gamma21", "gamma22") \
        + (("kappa",) if restricted else ())
    p = len(names)

    def neg_ll(theta):
        val, grad, _ = _objective(theta, features, counts, classes)
        return val / panel.n, grad / panel.n

    res = minimize(neg_ll, np.zeros(p), jac=True, method="BFGS",
                   options={"gtol": 1e-10, "maxiter": 500})
    theta = res.x
    _, grad, info = _objective(theta, features, counts, classes)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.full((p, p), np.nan)
    val, _, _ = _objective(theta, features, counts, classes)
    return FitResult(
        names=names,
        estimates=theta,
        cov=cov,
        loglik=float(-val),
        converged=bool(res.success or np.abs(grad).max() / panel.n <= 1e-6),
        iterations=int(res.nit),
        n_obs=panel.n,
        quasi_separated=bool(np.any(np.abs(theta) > 25.0)),
        diagnostics={
            "n_informative": int(n_informative),
            "n_singleton": int(n_singleton),
            "grad_inf_norm": float(np.abs(grad).max()) / panel.n,
        },
        hessian=-info,
    )
