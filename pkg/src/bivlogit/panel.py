"""Array-backed balanced panel of paired binary outcome sequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import CovariatePath, PairSequence

__all__ = ["Panel"]


@dataclass
class Panel:
    """A balanced panel: n households observed over periods 0..T.

    ``y1``/``y2`` have shape (n, T+1); period 0 is the initial condition.
    Covariates, when present, have shape (n, T, k) and belong to periods
    1..T.  ``group`` and ``window_key`` are optional per-household labels
    used by the by-group / rolling-window drivers.
    """

    y1: np.ndarray
    y2: np.ndarray
    ids: np.ndarray = None
    x1: np.ndarray = None
    x2: np.ndarray = None
    group: np.ndarray = None
    window_key: np.ndarray = None

    def __post_init__(self):
        self.y1 = np.asarray(self.y1, dtype=np.int8)
        self.y2 = np.asarray(self.y2, dtype=np.int8)
        if self.y1.shape != self.y2.shape or self.y1.ndim != 2:
            raise ValueError("y1 and y2 must be (n, T+1) arrays of equal shape")
        if not (np.isin(self.y1, (0, 1)).all() and np.isin(self.y2, (0, 1)).all()):
            raise ValueError("outcomes must be binary")
        n = self.y1.shape[0]
        if self.ids is None:
            self.ids = np.array([str(i) for i in range(n)])
        else:
            self.ids = np.asarray(self.ids)
            if len(np.unique(self.ids)) != n:
                raise ValueError("household ids must be unique")
        for name in ("x1", "x2"):
            x = getattr(self, name)
            if x is not None:
                x = np.asarray(x, dtype=float)
                if x.shape[:2] != (n, self.T):
                    raise ValueError(f"{name} must have shape (n, T, k)")
                setattr(self, name, x)
        if (self.x1 is None) != (self.x2 is None):
            raise ValueError("x1 and x2 must be given together")
        for name in ("group", "window_key"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v)
                if v.shape[0] != n:
                    raise ValueError(f"{name} must have one entry per household")
                setattr(self, name, v)

    @property
    def n(self) -> int:
        return self.y1.shape[0]

    @property
    def T(self) -> int:
        return self.y1.shape[1] - 1

    @property
    def k(self) -> int:
        return 0 if self.x1 is None else self.x1.shape[2]

    def sequence(self, i: int) -> PairSequence:
        return PairSequence(tuple(self.y1[i]), tuple(self.y2[i]))

    def covariate_path(self, i: int) -> CovariatePath:
        if self.x1 is None:
            return CovariatePath.empty(self.T)
        return CovariatePath(self.x1[i], self.x2[i])

    def subset(self, index) -> "Panel":
        """Row subset / resample.  Duplicate indices get fresh unique ids."""
        index = np.asarray(index)
        ids = self.ids[index]
        if len(np.unique(ids)) != len(ids):
            ids = np.array([f"{h}#{j}" for j, h in enumerate(ids)])
        return Panel(
            y1=self.y1[index], y2=self.y2[index], ids=ids,
            x1=None if self.x1 is None else self.x1[index],
            x2=None if self.x2 is None else self.x2[index],
            group=None if self.group is None else self.group[index],
            window_key=None if self.window_key is None else self.window_key[index],
        )

    def sequence_counts(self) -> dict:
        """Count households per full outcome tuple (y1_0..y1_T, y2_0..y2_T)."""
        keys = np.concatenate([self.y1, self.y2], axis=1)
        uniq, counts = np.unique(keys, axis=0, return_counts=True)
        return {tuple(int(v) for v in row): int(c)
                for row, c in zip(uniq, counts)}
