"""By-group and rolling-window estimation drivers with report emission.

A run fans the panel out over (group x window) cells, fits the configured
estimator in each cell, and assembles a CSV report, an aligned text
table, and an optional long-format figure CSV.  Reports are deterministic
given (config, panel, seed): households are canonically ordered before
estimation so input row order never matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .cmle import NoInformationError, fit_cmle
from .cre import fit_cre
from .gmm import bootstrap_se, fit_gmm_rho
from .panel import Panel
from .pooled import fit_dynamic_ss, fit_static_ss

__all__ = ["RunConfig", "CellResult", "RunResult", "run",
           "emit_figure_data", "load_config_file"]

ESTIMATORS = ("static-ss", "dynamic-pooled", "cmle", "cmle-restricted",
              "gmm-rho", "cre")

FIGURE_COLUMNS = ("group", "window_center", "parameter", "estimate", "se")


@dataclass(frozen=True)
class RunConfig:
    estimator: str
    grouping: str = None          # currently only "group" is meaningful
    window: tuple = None          # (width, step) in window_key units
    include_truncated_windows: bool = False
    bootstrap: int = None
    seed: int = 0
    rho_bounds: tuple = (-2.0, 4.0)
    output: str = None

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(
                f"unknown estimator {self.estimator!r}; choose from "
                f"{list(ESTIMATORS)}")
        if self.window is not None:
            width, step = self.window
            if width < 1 or step < 1:
                raise ValueError("window width and step must be >= 1")
        lo, hi = self.rho_bounds
        if not lo < hi:
            raise ValueError("rho bounds must satisfy low < high")

    def as_items(self):
        for key in ("estimator", "grouping", "window",
                    "include_truncated_windows", "bootstrap", "seed",
                    "rho_bounds", "output"):
            yield key, getattr(self, key)


@dataclass
class CellResult:
    group: str
    window_center: float          # NaN when no windowing
    n_obs: int
    estimates: dict
    se: dict
    converged: bool
    truncated_window: bool = False
    diagnostics: dict = field(default_factory=dict)


@dataclass
class RunResult:
    config: RunConfig
    cells: list
    skipped: list                 # (group, center, reason)

    @property
    def all_converged(self) -> bool:
        return all(c.converged for c in self.cells)


def _windows(keys, width: int, step: int, include_truncated: bool):
    """Centered rolling windows over the sorted unique keys.

    A window centered at c covers [c - width//2, c + width//2].  By
    default only full windows (every covered key inside the observed
    range) are produced; truncated edge windows are included and flagged
    on request.
    """
    keys = np.sort(np.unique(keys))
    half = width // 2
    out = []
    for c in keys[::step]:
        lo, hi = c - half, c + half
        truncated = lo < keys[0] or hi > keys[-1]
        if truncated and not include_truncated:
            continue
        out.append((int(c), int(max(lo, keys[0])), int(min(hi, keys[-1])),
                    truncated))
    return out


def _canonical_order(panel: Panel) -> Panel:
    order = np.argsort(panel.ids)
    return panel.subset(order)


def _fit_cell(panel: Panel, config: RunConfig):
    """Fit one estimator on one cell; returns (estimates, se, converged, diag)."""
    est = config.estimator
    if est == "static-ss":
        fit = fit_static_ss(panel.y1.ravel().astype(float),
                            panel.y2.ravel().astype(float))
    elif est == "dynamic-pooled":
        fit = fit_dynamic_ss(panel)
    elif est == "cmle":
        fit = fit_cmle(panel, restricted=False)
    elif est == "cmle-restricted":
        fit = fit_cmle(panel, restricted=True)
    elif est == "cre":
        fit = fit_cre(panel)
    elif est == "gmm-rho":
        g = fit_gmm_rho(panel)
        if config.bootstrap:
            g = bootstrap_se(panel, g, n_boot=config.bootstrap,
                             seed=config.seed)
        estimates = {"rho": g.rho}
        se = {"rho": g.se if g.se is not None else float("nan")}
        diag = {"boundary_flag": g.boundary_flag,
                "n_dropped_moments": g.n_dropped_moments}
        return estimates, se, not g.boundary_flag, diag
    else:  # pragma: no cover - guarded by RunConfig
        raise ValueError(est)
    estimates = fit.as_dict()
    se = dict(zip(fit.names, fit.se.tolist()))
    return estimates, se, fit.converged, dict(fit.diagnostics)


def run(config: RunConfig, panel: Panel) -> RunResult:
    """Execute the configured estimation over every (group x window) cell."""
    panel = _canonical_order(panel)
    if config.grouping is not None:
        if panel.group is None:
            raise ValueError("config requests grouping but panel has no groups")
        group_labels = sorted(set(panel.group.tolist()))
    else:
        group_labels = [None]

    if config.window is not None and panel.window_key is None:
        raise ValueError("config requests windowing but panel has no keys")

    cells, skipped = [], []
    for label in group_labels:
        if label is None:
            sub = panel
        else:
            sub = panel.subset(np.nonzero(panel.group == label)[0])
        if config.window is None:
            windows = [(float("nan"), None, None, False)]
        else:
            width, step = config.window
            windows = _windows(sub.window_key, width, step,
                               config.include_truncated_windows)
        for center, lo, hi, truncated in windows:
            if lo is None:
                cell_panel = sub
            else:
                mask = (sub.window_key >= lo) & (sub.window_key <= hi)
                cell_panel = sub.subset(np.nonzero(mask)[0])
            name = label if label is not None else "all"
            if cell_panel.n == 0:
                skipped.append((name, center, "empty cell"))
                continue
            try:
                estimates, se, converged, diag = _fit_cell(cell_panel, config)
            except (NoInformationError, ValueError) as err:
                skipped.append((name, center, str(err)))
                continue
            cells.append(CellResult(
                group=name, window_center=center, n_obs=cell_panel.n,
                estimates=estimates, se=se, converged=converged,
                truncated_window=truncated, diagnostics=diag))
    result = RunResult(config=config, cells=cells, skipped=skipped)
    if config.output is not None:
        write_reports(result, Path(config.output))
    return result


def _results_frame(result: RunResult) -> pd.DataFrame:
    rows = []
    for cell in result.cells:
        for name in cell.estimates:
            rows.append({
                "group": cell.group,
                "window_center": cell.window_center,
                "n_obs": cell.n_obs,
                "parameter": name,
                "estimate": cell.estimates[name],
                "se": cell.se.get(name, float("nan")),
                "converged": cell.converged,
                "truncated_window": cell.truncated_window,
            })
    return pd.DataFrame(rows)


def write_reports(result: RunResult, output: Path) -> None:
    """Emit estimates CSV, aligned text table, and resolved-config echo."""
    output.mkdir(parents=True, exist_ok=True)
    frame = _results_frame(result)
    frame.to_csv(output / "estimates.csv", index=False)
    with open(output / "estimates.txt", "w") as fh:
        if len(frame):
            fh.write(frame.to_string(index=False, float_format="%.6f"))
            fh.write("\n")
        for group, center, reason in result.skipped:
            fh.write(f"skipped {group} @ {center}: {reason}\n")
    with open(output / "config.txt", "w") as fh:
        for key, value in result.config.as_items():
            fh.write(f"{key}={value}\n")
    emit_figure_data(result, output / "figure_data.csv")


def emit_figure_data(result: RunResult, path) -> pd.DataFrame:
    """Long-format plot-ready CSV: one row per (group, window, parameter).

    Skipped cells are simply absent; no NaN placeholder rows are written.
    """
    rows = []
    for cell in result.cells:
        for name in cell.estimates:
            rows.append({
                "group": cell.group,
                "window_center": cell.window_center,
                "parameter": name,
                "estimate": cell.estimates[name],
                "se": cell.se.get(name, float("nan")),
            })
    frame = pd.DataFrame(rows, columns=list(FIGURE_COLUMNS))
    frame.to_csv(path, index=False)
    return frame


def load_config_file(path) -> dict:
    """Parse a flat key=value config file into a keyword dictionary."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
