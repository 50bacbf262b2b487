"""Command line interface.

Subcommands: simulate, fit, count-moments, plim-cre, bootstrap,
validate-moments.  Exit code 0 only when every requested cell converged
or was explicitly skippable; any non-convergence or validation failure
exits 1.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from .counting import CountConfig, count_moments
from .cre import cre_plim
from .gmm import bootstrap_se, fit_gmm_rho
from .heterogeneity import HeterogeneityDist
from .moments import validate_moments
from .panelio import load_panel, write_panel
from .params import CommonParams
from .runner import ESTIMATORS, RunConfig, load_config_file, run
from .simulate import simulate_panel


@click.group()
def main():
    """Estimation toolbox for the simultaneous logit model and its
    dynamic panel extensions."""


def _parse_gammas(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise click.BadParameter("expected g11,g12,g21,g22")
    return vals


@main.command()
@click.option("--n", type=int, required=True, help="Number of households.")
@click.option("--periods", "T", type=int, default=3, show_default=True,
              help="Transitions after the initial period.")
@click.option("--gammas", default="2.5,-1.5,-1.5,2.5", show_default=True,
              help="Lag coefficients g11,g12,g21,g22.")
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--kappa", type=float, default=2.0, show_default=True)
@click.option("--dist", default="correctly-specified", show_default=True,
              help="Heterogeneity distribution name.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(), required=True)
def simulate(n, T, gammas, rho, kappa, dist, seed, output):
    """Draw a synthetic panel and write it as CSV."""
    g11, g12, g21, g22 = _parse_gammas(gammas)
    params = CommonParams.from_gammas(g11, g12, g21, g22,
                                      rho=rho, kappa=kappa)
    het = HeterogeneityDist.named(dist)
    panel = simulate_panel(params, het, n=n, T=T, seed=seed)
    write_panel(panel, output)
    click.echo(f"wrote {panel.n} households x {panel.T + 1} periods "
               f"to {output}")


def _load(path):
    panel, report = load_panel(path)
    if report.n_rejected:
        click.echo(report.summary(), err=True)
    return panel


@main.command()
@click.argument("panel_file", type=click.Path(exists=True))
@click.option("--estimator", type=click.Choice(ESTIMATORS), required=True)
@click.option("--config", "config_file", type=click.Path(exists=True),
              help="Flat key=value config file; flags override it.")
@click.option("--group/--no-group", "grouping", default=False,
              help="Fit separately per group column value.")
@click.option("--window", nargs=2, type=int, default=None,
              help="Rolling window: width step (in window_key units).")
@click.option("--bootstrap", type=int, default=None,
              help="Bootstrap replicates (gmm-rho only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(), default=None,
              help="Report directory.")
def fit(panel_file, estimator, config_file, grouping, window, bootstrap,
        seed, output):
    """Fit an estimator, optionally by group and over rolling windows."""
    kwargs = {}
    if config_file:
        raw = load_config_file(config_file)
        if "estimator" in raw:
            kwargs["estimator"] = raw["estimator"]
        if raw.get("grouping"):
            kwargs["grouping"] = raw["grouping"]
        if "window" in raw:
            kwargs["window"] = tuple(int(v) for v in raw["window"].split(","))
        if "bootstrap" in raw:
            kwargs["bootstrap"] = int(raw["bootstrap"])
        if "seed" in raw:
            kwargs["seed"] = int(raw["seed"])
        if "output" in raw:
            kwargs["output"] = raw["output"]
    kwargs["estimator"] = estimator
    if grouping:
        kwargs["grouping"] = "group"
    if window:
        kwargs["window"] = tuple(window)
    if bootstrap is not None:
        kwargs["bootstrap"] = bootstrap
    kwargs["seed"] = seed
    if output is not None:
        kwargs["output"] = output
    config = RunConfig(**kwargs)
    panel = _load(panel_file)
    result = run(config, panel)
    for cell in result.cells:
        center = "" if np.isnan(cell.window_center) \
            else f" @ {cell.window_center:g}"
        flags = "" if cell.converged else "  [not converged]"
        est = "  ".join(f"{k}={v:.4f}" for k, v in cell.estimates.items())
        click.echo(f"{cell.group}{center}  n={cell.n_obs}  {est}{flags}")
    for group, center, reason in result.skipped:
        click.echo(f"skipped {group} @ {center}: {reason}", err=True)
    if not result.all_converged:
        sys.exit(1)


@main.command("count-moments")
@click.option("--periods", "T", type=int, required=True)
@click.option("--restricted/--unrestricted", default=False)
@click.option("--covariates/--no-covariates", default=False)
@click.option("--method", type=click.Choice(["svd", "exact"]), default="svd",
              show_default=True)
def count_moments_cmd(T, restricted, covariates, method):
    """Count valid moment conditions; prints n_tot / n_para / n_rho."""
    if covariates:
        click.echo("covariate configurations are not supported", err=True)
        sys.exit(1)
    report = count_moments(CountConfig(T=T, restricted=restricted),
                           method=method)
    click.echo(f"{report.n_tot} / {report.n_para} / {report.n_rho}")


@main.command("plim-cre")
@click.option("--dist", required=True,
              help="Heterogeneity distribution name.")
@click.option("--gammas", default="2.5,-1.5,-1.5,2.5", show_default=True)
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--kappa", type=float, default=2.0, show_default=True)
def plim_cre_cmd(dist, gammas, rho, kappa):
    """Probability limit of the CRE estimator for a heterogeneity law."""
    g11, g12, g21, g22 = _parse_gammas(gammas)
    params = CommonParams.from_gammas(g11, g12, g21, g22,
                                      rho=rho, kappa=kappa)
    out = cre_plim(params, HeterogeneityDist.named(dist))
    for name in ("gamma11", "gamma12", "gamma21", "gamma22", "rho", "kappa"):
        click.echo(f"{name} {out[name]:.4f}")
    click.echo(f"sigma {out['sigma']:.4f}")


@main.command()
@click.argument("panel_file", type=click.Path(exists=True))
@click.option("--replicates", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def bootstrap(panel_file, replicates, seed):
    """Two-step GMM for rho with bootstrap standard errors."""
    panel = _load(panel_file)
    fit_result = fit_gmm_rho(panel)
    fit_result = bootstrap_se(panel, fit_result, n_boot=replicates, seed=seed)
    click.echo(f"rho {fit_result.rho:.4f}  se {fit_result.se:.4f}  "
               f"dropped {fit_result.diagnostics['bootstrap_dropped']}")
    if fit_result.boundary_flag:
        click.echo("estimate at rho bound", err=True)
        sys.exit(1)


@main.command("validate-moments")
@click.option("--draws", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-10, show_default=True)
def validate_moments_cmd(draws, seed, tolerance):
    """Check the closed-form moment conditions by exact enumeration."""
    rng = np.random.default_rng(seed)
    alpha = np.linspace(-3.0, 3.0, 7)
    worst = 0.0
    for _ in range(draws):
        g = rng.uniform(-2.0, 2.0, size=(2, 2))
        kappa = rng.uniform(-1.0, 1.0)
        rho = rng.uniform(-1.0, 2.0)
        worst = max(worst, validate_moments(g, kappa, rho, alpha))
    click.echo(f"worst relative violation {worst:.3e} over {draws} draws")
    if worst > tolerance:
        sys.exit(1)


if __name__ == "__main__":
    main()
