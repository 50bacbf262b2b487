"""Distributions of the household effect conditional on the initial pair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

__all__ = ["HeterogeneityDist", "approx_normal_outer_point"]


def approx_normal_outer_point() -> float:
    """Outer support point of the five-point normal approximation.

    Chosen so that the discrete variable on {-d, -1, 0, 1, d} with masses
    Phi(-1.5) on each outer point and Phi(1.5)-Phi(0.5) on each inner point
    has variance one.
    """
    p_outer = norm.cdf(-1.5)
    p_inner = norm.cdf(1.5) - norm.cdf(0.5)
    return float(np.sqrt((1.0 - 2.0 * p_inner) / (2.0 * p_outer)))


@dataclass(frozen=True)
class HeterogeneityDist:
    """A conditional distribution of the household effect given (y1_0, y2_0).

    ``kind`` selects one of the built-in families; ``custom-discrete`` takes
    explicit support points and masses per initial pair.
    """

    kind: str
    intercept: float = 0.0
    load1: float = 0.0
    load2: float = 0.0
    load12: float = 0.0
    sigma: float = 0.0
    support: dict = field(default_factory=dict)
    masses: dict = field(default_factory=dict)

    KINDS = (
        "degenerate",
        "normal-linear",
        "discrete-approx-normal",
        "discrete-asymmetric",
        "heteroskedastic",
        "very-heteroskedastic",
        "custom-discrete",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown heterogeneity kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "custom-discrete":
            for key, m in self.masses.items():
                m = np.asarray(m, dtype=float)
                if not np.isclose(m.sum(), 1.0, atol=1e-10):
                    raise ValueError(f"masses for initial {key} must sum to 1")

    @property
    def is_discrete(self) -> bool:
        return self.kind != "normal-linear"

    def mean(self, initial) -> float:
        y10, y20 = int(initial[0]), int(initial[1])
        return (self.intercept + self.load1 * y10 + self.load2 * y20
                + self.load12 * y10 * y20)

    def atoms(self, initial):
        """Support points and masses given the initial pair (discrete kinds)."""
        y10, y20 = int(initial[0]), int(initial[1])
        if self.kind == "degenerate":
            return np.array([self.mean(initial)]), np.array([1.0])
        if self.kind == "discrete-approx-normal":
            d = approx_normal_outer_point()
            p_outer = float(norm.cdf(-1.5))
            p_inner = float(norm.cdf(1.5) - norm.cdf(0.5))
            p_mid = float(norm.cdf(0.5) - norm.cdf(-0.5))
            return (np.array([-d, -1.0, 0.0, 1.0, d]),
                    np.array([p_outer, p_inner, p_mid, p_inner, p_outer]))
        if self.kind == "discrete-asymmetric":
            return np.array([3.0, -1.0]), np.array([0.25, 0.75])
        if self.kind == "heteroskedastic":
            s = np.sqrt(2.0 + 2.0 * y10)
            return np.array([-s, s]), np.array([0.5, 0.5])
        if self.kind == "very-heteroskedastic":
            s = np.sqrt(5.0 * y10)
            return np.array([-s, s]), np.array([0.5, 0.5])
        if self.kind == "custom-discrete":
            key = (y10, y20)
            return (np.asarray(self.support[key], dtype=float),
                    np.asarray(self.masses[key], dtype=float))
        raise ValueError(f"{self.kind} has no discrete atoms")

    def draw(self, initial, rng: np.random.Generator) -> float:
        """One draw of the household effect given the initial pair."""
        if self.kind == "normal-linear":
            return float(self.mean(initial) + self.sigma * rng.standard_normal())
        points, masses = self.atoms(initial)
        return float(rng.choice(points, p=masses))

    # ---- named configurations -------------------------------------------

    @classmethod
    def degenerate(cls, value: float = 0.0) -> "HeterogeneityDist":
        return cls(kind="degenerate", intercept=value)

    @classmethod
    def normal_linear(cls, intercept=-1.0, load1=1.0, load2=1.0, load12=0.0,
                      sigma=1.0) -> "HeterogeneityDist":
        """Default arguments give the correctly specified benchmark process."""
        return cls(kind="normal-linear", intercept=intercept, load1=load1,
                   load2=load2, load12=load12, sigma=sigma)

    @classmethod
    def named(cls, name: str) -> "HeterogeneityDist":
        """The five benchmark processes, by report-table name."""
        table = {
            "correctly-specified": cls.normal_linear(),
            "discrete-approx-normal": cls(kind="discrete-approx-normal"),
            "discrete-asymmetric": cls(kind="discrete-asymmetric"),
            "heteroskedastic": cls(kind="heteroskedastic"),
            "very-heteroskedastic": cls(kind="very-heteroskedastic"),
        }
        if name not in table:
            raise ValueError(
                f"unknown distribution {name!r}; choose from {sorted(table)}")
        return table[name]
