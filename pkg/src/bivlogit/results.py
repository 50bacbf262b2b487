"""Fit-result container shared by all maximum-likelihood estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitResult"]


@dataclass
class FitResult:
    """Point estimates, covariance and convergence diagnostics of one fit."""

    names: tuple
    estimates: np.ndarray
    cov: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    n_obs: int = 0
    quasi_separated: bool = False
    diagnostics: dict = field(default_factory=dict)
    # per-observation scores and observed information at the optimum; kept
    # so clustered covariances can be formed after the fit
    scores: np.ndarray = None
    hessian: np.ndarray = None

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        if self.cov is not None:
            self.cov = np.asarray(self.cov, dtype=float)
            if self.cov.shape != (len(self.names),) * 2:
                raise ValueError("covariance shape does not match names")

    @property
    def se(self) -> np.ndarray:
        if self.cov is None:
            return np.full(len(self.names), np.nan)
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def __getitem__(self, name: str) -> float:
        return float(self.estimates[self.names.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.estimates.tolist()))

    def summary(self) -> str:
        width = max(len(n) for n in self.names)
        lines = [f"{'param':<{width}}  {'estimate':>12}  {'std.err.':>12}"]
        for name, est, se in zip(self.names, self.estimates, self.se):
            lines.append(f"{name:<{width}}  {est:>12.6f}  {se:>12.6f}")
        lines.append(
            f"loglik {self.loglik:.6f}  converged {self.converged}  "
            f"iterations {self.iterations}  n {self.n_obs}"
        )
        if self.quasi_separated:
            lines.append("warning: quasi-separation detected (|estimate| > 25)")
        return "\n".join(lines)
