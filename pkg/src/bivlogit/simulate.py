"""Synthetic panels drawn from the dynamic simultaneous logit model."""

from __future__ import annotations

import math

import numpy as np

from .heterogeneity import HeterogeneityDist
from .panel import Panel
from .params import CommonParams

__all__ = ["draw_initial", "draw_alpha", "simulate_panel"]


def _household_rng(seed: int, household: int) -> np.random.Generator:
    # Keyed stream per household: reproducible regardless of scheduling.
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(household))))


def draw_initial(prob=(0.5, 0.5), rng=None, seed=None) -> tuple:
    """Draw the period-0 pair: independent Bernoullis with given marginals."""
    p1, p2 = float(prob[0]), float(prob[1])
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ValueError("initial probabilities must be in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(seed)
    u = rng.random(2)
    return (int(u[0] < p1), int(u[1] < p2))


def draw_alpha(dist: HeterogeneityDist, initial, rng=None, seed=None) -> float:
    """Draw the household effect from its conditional distribution."""
    if rng is None:
        rng = np.random.default_rng(seed)
    return dist.draw(initial, rng)


def _cell_cdf(gamma, rho, a1, a2, y1p, y2p):
    """Cumulative probabilities of the four next-period cells (plain floats)."""
    z1 = a1 + gamma[0][0] * y1p + gamma[0][1] * y2p
    z2 = a2 + gamma[1][0] * y1p + gamma[1][1] * y2p
    m = max(0.0, z1, z2, z1 + z2 + rho)
    e0 = math.exp(-m)
    e1 = math.exp(z2 - m)
    e2 = math.exp(z1 - m)
    e3 = math.exp(z1 + z2 + rho - m)
    tot = e0 + e1 + e2 + e3
    c0 = e0 / tot
    c1 = c0 + e1 / tot
    c2 = c1 + e2 / tot
    return (c0, c1, c2)


def simulate_panel(params: CommonParams, dist: HeterogeneityDist, n: int,
                   T: int, restricted: bool = True, seed: int = 0,
                   initial_prob=(0.5, 0.5)) -> Panel:
    """Simulate n households for T periods after the initial one.

    Under ``restricted`` the second fixed effect is alpha + kappa; otherwise
    both equations share the drawn alpha (alpha2 = alpha1).  Each household
    owns an independent generator keyed by (seed, household index), so the
    result does not depend on scheduling order.
    """
    if n < 1 or T < 1:
        raise ValueError("need n >= 1 and T >= 1")
    y1 = np.zeros((n, T + 1), dtype=np.int8)
    y2 = np.zeros((n, T + 1), dtype=np.int8)
    gamma = [[float(v) for v in row] for row in params.gamma]
    rho = float(params.rho)
    kappa = float(params.kappa) if restricted else 0.0
    cdf_cache = {}
    for i in range(n):
        rng = _household_rng(seed, i)
        init = draw_initial(initial_prob, rng=rng)
        alpha = dist.draw(init, rng)
        y1[i, 0], y2[i, 0] = init
        prev1, prev2 = init
        u = rng.random(T)
        for t in range(1, T + 1):
            key = (alpha, prev1, prev2)
            cdf = cdf_cache.get(key)
            if cdf is None:
                cdf = _cell_cdf(gamma, rho, alpha, alpha + kappa, prev1, prev2)
                cdf_cache[key] = cdf
            ut = u[t - 1]
            if ut < cdf[0]:
                prev1, prev2 = 0, 0
            elif ut < cdf[1]:
                prev1, prev2 = 0, 1
            elif ut < cdf[2]:
                prev1, prev2 = 1, 0
            else:
                prev1, prev2 = 1, 1
            y1[i, t], y2[i, t] = prev1, prev2
    return Panel(y1=y1, y2=y2)
