"""CSV ingestion and emission for balanced panels.

Long format, UTF-8 with a header: one row per (household_id, period) with
binary outcomes y1 and y2, optional covariate columns, and optional
``group`` and ``window_key`` labels.  Households must cover a complete
consecutive period range 0..T; offenders are rejected with itemized
diagnostics, never silently dropped or imputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .panel import Panel

__all__ = ["PanelLoadError", "LoadReport", "load_panel", "write_panel"]

REQUIRED_COLUMNS = ("household_id", "period", "y1", "y2")
OPTIONAL_COLUMNS = ("group", "window_key")


class PanelLoadError(ValueError):
    """The file cannot produce a valid panel; message lists every problem."""


@dataclass
class LoadReport:
    n_loaded: int = 0
    n_rejected: int = 0
    rejections: dict = field(default_factory=dict)  # household_id -> reason

    def summary(self) -> str:
        lines = [f"loaded {self.n_loaded} households, "
                 f"rejected {self.n_rejected}"]
        for hid, reason in sorted(self.rejections.items()):
            lines.append(f"  {hid}: {reason}")
        return "\n".join(lines)


def _covariate_columns(columns):
    extra = [c for c in columns
             if c not in REQUIRED_COLUMNS and c not in OPTIONAL_COLUMNS]
    x1 = sorted(c for c in extra if c.startswith("x1_"))
    x2 = sorted(c for c in extra if c.startswith("x2_"))
    return x1, x2


def load_panel(path, strict: bool = False):
    """Read a CSV panel file; returns (Panel, LoadReport).

    Structural problems (missing columns, non-binary outcomes, missing
    fields) raise immediately with row and column named.  Households with
    an incomplete period range or a length differing from the majority are
    rejected and itemized in the report; with ``strict`` any rejection
    raises instead.
    """
    df = pd.read_csv(path, dtype={"household_id": str})
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise PanelLoadError(f"missing required columns: {missing}")
    problems = []
    for col in ("period", "y1", "y2"):
        bad = df.index[df[col].isna()]
        if len(bad):
            problems.append(f"row {bad[0] + 2}: empty field in column {col!r}")
    for col in ("y1", "y2"):
        vals = df[col].dropna()
        bad = vals.index[~vals.isin((0, 1))]
        if len(bad):
            problems.append(
                f"row {bad[0] + 2}: non-binary value {df.loc[bad[0], col]!r} "
                f"in column {col!r}")
    x1_cols, x2_cols = _covariate_columns(df.columns)
    if len(x1_cols) != len(x2_cols):
        problems.append(
            f"covariate columns must pair up: x1 columns {x1_cols}, "
            f"x2 columns {x2_cols}")
    for col in x1_cols + x2_cols:
        bad = df.index[df[col].isna()]
        if len(bad):
            problems.append(f"row {bad[0] + 2}: empty field in column {col!r}")
    if problems:
        raise PanelLoadError("; ".join(problems))

    report = LoadReport()
    groups = df.groupby("household_id", sort=False)  # keep file order
    lengths = groups.size()
    T = int(lengths.mode().iloc[0]) - 1
    kept = {}
    for hid, sub in groups:
        periods = np.sort(sub["period"].to_numpy())
        if len(periods) != T + 1 or not np.array_equal(
                periods, np.arange(T + 1)):
            report.rejections[hid] = (
                f"periods {sorted(int(p) for p in periods)} do not form "
                f"the range 0..{T}")
            continue
        kept[hid] = sub.sort_values("period")
    report.n_rejected = len(report.rejections)
    report.n_loaded = len(kept)
    if strict and report.n_rejected:
        raise PanelLoadError(report.summary())
    if not kept:
        raise PanelLoadError("no household has a complete period range")

    ids = np.array(list(kept))
    y1 = np.array([kept[h]["y1"].to_numpy() for h in ids], dtype=np.int8)
    y2 = np.array([kept[h]["y2"].to_numpy() for h in ids], dtype=np.int8)
    x1 = x2 = None
    if x1_cols:
        # covariates belong to transition periods 1..T
        x1 = np.array([kept[h][x1_cols].to_numpy()[1:] for h in ids])
        x2 = np.array([kept[h][x2_cols].to_numpy()[1:] for h in ids])
    group = window_key = None
    if "group" in df.columns:
        group = np.array([str(kept[h]["group"].iloc[0]) for h in ids])
    if "window_key" in df.columns:
        window_key = np.array([int(kept[h]["window_key"].iloc[0])
                               for h in ids])
    panel = Panel(y1=y1, y2=y2, ids=ids, x1=x1, x2=x2,
                  group=group, window_key=window_key)
    return panel, report


def write_panel(panel: Panel, path) -> None:
    """Write a Panel in the long CSV format accepted by ``load_panel``."""
    rows = []
    for i in range(panel.n):
        for t in range(panel.T + 1):
            row = {
                "household_id": panel.ids[i],
                "period": t,
                "y1": int(panel.y1[i, t]),
                "y2": int(panel.y2[i, t]),
            }
            if panel.x1 is not None:
                for j in range(panel.k):
                    # period-0 covariates are not part of the model; repeat
                    # the first transition's values to keep rows rectangular
                    tt = max(t - 1, 0)
                    row[f"x1_{j}"] = panel.x1[i, tt, j]
                    row[f"x2_{j}"] = panel.x2[i, tt, j]
            if panel.group is not None:
                row["group"] = panel.group[i]
            if panel.window_key is not None:
                row["window_key"] = int(panel.window_key[i])
            rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False)
