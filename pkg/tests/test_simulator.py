"""Simulator: seeding contract, frequency match, heterogeneity laws."""

import numpy as np
import pytest

from bivlogit.heterogeneity import HeterogeneityDist, approx_normal_outer_point
from bivlogit.model import CovariatePath, enumerate_sequences, sequence_prob
from bivlogit.params import CommonParams, FixedEffects
from bivlogit.simulate import draw_initial, simulate_panel

PARAMS = CommonParams.from_gammas(1.0, -0.5, -0.5, 1.0, rho=0.8, kappa=0.5)


def test_same_seed_reproduces_panel():
    dist = HeterogeneityDist.named("correctly-specified")
    a = simulate_panel(PARAMS, dist, n=50, T=3, seed=7)
    b = simulate_panel(PARAMS, dist, n=50, T=3, seed=7)
    assert np.array_equal(a.y1, b.y1) and np.array_equal(a.y2, b.y2)
    c = simulate_panel(PARAMS, dist, n=50, T=3, seed=8)
    assert not (np.array_equal(a.y1, c.y1) and np.array_equal(a.y2, c.y2))


def test_household_streams_do_not_depend_on_n():
    # household i's path is identical whether 10 or 100 households are drawn
    dist = HeterogeneityDist.named("discrete-asymmetric")
    small = simulate_panel(PARAMS, dist, n=10, T=4, seed=3)
    large = simulate_panel(PARAMS, dist, n=100, T=4, seed=3)
    assert np.array_equal(small.y1, large.y1[:10])
    assert np.array_equal(small.y2, large.y2[:10])


def test_initial_distribution():
    rng = np.random.default_rng(0)
    draws = np.array([draw_initial((0.3, 0.7), rng=rng) for _ in range(20000)])
    assert draws[:, 0].mean() == pytest.approx(0.3, abs=0.02)
    assert draws[:, 1].mean() == pytest.approx(0.7, abs=0.02)
    assert draw_initial((0.0, 1.0), seed=0) == (0, 1)
    with pytest.raises(ValueError):
        draw_initial((1.2, 0.5), seed=0)


def test_sequence_frequencies_match_exact_probabilities():
    # degenerate heterogeneity: the implied sequence law is an exact finite
    # enumeration, so observed frequencies must match it
    dist = HeterogeneityDist.degenerate(-0.3)
    params = CommonParams.from_gammas(0.8, -0.4, 0.2, 0.6, rho=0.5, kappa=0.4)
    n, T = 60000, 2
    panel = simulate_panel(params, dist, n=n, T=T, seed=11,
                           initial_prob=(1.0, 0.0))
    fe = FixedEffects.restricted(-0.3, params.kappa)
    xp = CovariatePath.empty(T)
    counts = panel.sequence_counts()
    for seq in enumerate_sequences(T, (1, 0)):
        p = sequence_prob(params, fe, xp, seq)
        freq = counts.get(seq.as_tuple(), 0) / n
        se = np.sqrt(p * (1 - p) / n)
        assert abs(freq - p) < 5 * se + 1e-4


def test_restricted_flag_shifts_second_effect():
    # kappa large and positive: restricted panels show far more y2 = 1
    params = CommonParams.from_gammas(0.0, 0.0, 0.0, 0.0, rho=0.0, kappa=4.0)
    dist = HeterogeneityDist.degenerate(-2.0)
    r = simulate_panel(params, dist, n=4000, T=3, restricted=True, seed=5)
    u = simulate_panel(params, dist, n=4000, T=3, restricted=False, seed=5)
    assert r.y2[:, 1:].mean() > u.y2[:, 1:].mean() + 0.3
    assert abs(r.y1[:, 1:].mean() - u.y1[:, 1:].mean()) < 0.03


def test_approx_normal_outer_point_value():
    d = approx_normal_outer_point()
    # unit-variance check done from scratch
    from scipy.stats import norm
    p_outer = norm.cdf(-1.5)
    p_inner = norm.cdf(1.5) - norm.cdf(0.5)
    var = 2 * p_outer * d ** 2 + 2 * p_inner
    assert var == pytest.approx(1.0, abs=1e-12)
    assert d == pytest.approx(1.9662, abs=5e-4)


def test_discrete_atoms_are_distributions():
    for name in ("discrete-approx-normal", "discrete-asymmetric",
                 "heteroskedastic", "very-heteroskedastic"):
        dist = HeterogeneityDist.named(name)
        for initial in ((0, 0), (0, 1), (1, 0), (1, 1)):
            points, masses = dist.atoms(initial)
            assert masses.sum() == pytest.approx(1.0, abs=1e-12)
            assert (masses >= 0).all()
            assert len(points) == len(masses)


def test_heteroskedastic_variances():
    het = HeterogeneityDist.named("heteroskedastic")
    vhet = HeterogeneityDist.named("very-heteroskedastic")
    for y10 in (0, 1):
        pts, m = het.atoms((y10, 0))
        assert (m @ pts ** 2) == pytest.approx(2.0 + 2.0 * y10)
        pts, m = vhet.atoms((y10, 1))
        assert (m @ pts ** 2) == pytest.approx(5.0 * y10)


def test_normal_linear_moments():
    dist = HeterogeneityDist.normal_linear()
    rng = np.random.default_rng(4)
    draws = np.array([dist.draw((1, 1), rng) for _ in range(20000)])
    assert draws.mean() == pytest.approx(dist.mean((1, 1)), abs=0.03)
    assert draws.std() == pytest.approx(1.0, abs=0.03)
    assert dist.mean((0, 0)) == pytest.approx(-1.0)
    assert dist.mean((1, 1)) == pytest.approx(1.0)


def test_custom_discrete_validation():
    with pytest.raises(ValueError):
        HeterogeneityDist(kind="custom-discrete",
                          support={(0, 0): [0.0, 1.0]},
                          masses={(0, 0): [0.5, 0.4]})
    ok = HeterogeneityDist(kind="custom-discrete",
                           support={(0, 0): [-1.0, 2.0]},
                           masses={(0, 0): [0.75, 0.25]})
    pts, m = ok.atoms((0, 0))
    assert list(pts) == [-1.0, 2.0] and list(m) == [0.75, 0.25]


def test_named_rejects_unknown():
    with pytest.raises(ValueError):
        HeterogeneityDist.named("no-such-process")
