"""Parameter containers shared by every estimator in the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_vector(x) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError("expected a 1-d coefficient vector")
    return v


@dataclass(frozen=True)
class CommonParams:
    """Common parameters of the simultaneous logit model.

    ``beta1``/``beta2`` are the covariate coefficients of the two equations
    (length zero for no-covariate models), ``gamma`` the 2x2 matrix of
    own/cross lag coefficients, ``rho`` the simultaneity parameter (log odds
    ratio), and ``kappa`` the spouse-level shift used by the restricted
    fixed-effects model.
    """

    beta1: np.ndarray = field(default_factory=lambda: np.zeros(0))
    beta2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gamma: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    rho: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta1", _as_vector(self.beta1))
        object.__setattr__(self, "beta2", _as_vector(self.beta2))
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (2, 2):
            raise ValueError("gamma must be a 2x2 matrix")
        object.__setattr__(self, "gamma", g)
        if self.beta1.shape != self.beta2.shape:
            raise ValueError("beta1 and beta2 must have equal length")
        for arr in (self.beta1, self.beta2, g, [self.rho], [self.kappa]):
            if not np.all(np.isfinite(arr)):
                raise ValueError("all parameters must be finite")

    @property
    def n_covariates(self) -> int:
        return self.beta1.shape[0]

    @classmethod
    def from_gammas(cls, g11, g12, g21, g22, rho=0.0, kappa=0.0) -> "CommonParams":
        return cls(gamma=np.array([[g11, g12], [g21, g22]], dtype=float),
                   rho=float(rho), kappa=float(kappa))


@dataclass(frozen=True)
class FixedEffects:
    """Unit-specific intercepts of the two equations."""

    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha1) and np.isfinite(self.alpha2)):
            raise ValueError("fixed effects must be finite")

    @classmethod
    def restricted(cls, alpha: float, kappa: float) -> "FixedEffects":
        """Household effect plus common spouse shift: alpha2 = alpha1 + kappa."""
        return cls(alpha1=float(alpha), alpha2=float(alpha) + float(kappa))
