import numpy as np
import pytest

from scldpc import (EnsembleSpec, estimate_delta1, fit_theta, integrate,
                    mean_model, monte_carlo_delta1, one_step_pmf,
                    trajectory_batch)
from scldpc.variance import CovarianceFitError

from oracles import c1_zero_mean_var


@pytest.fixture(scope="module")
def plateau_state_p40():
    model = mean_model(EnsembleSpec("protograph", 3, 6, 40))
    traj = integrate(model, 0.45, snapshot_taus=(11.0,))
    return model, traj.snapshots[0]


def test_pmf_normalized(plateau_state_p40):
    model, y = plateau_state_p40
    pmf = one_step_pmf(model, y)
    assert abs(pmf.probs.sum() - 1.0) < 1e-10
    assert np.all(pmf.probs >= -1e-15)


def test_pmf_support(plateau_state_p40):
    model, y = plateau_state_p40
    pmf = one_step_pmf(model, y)
    assert list(pmf.support) == [-3, -2, -1, 0, 1, 2]
    # with every variable holding l sockets, one socket is peeled directly,
    # so the extreme gain l-1 is unreachable
    assert pmf.probs[-1] == 0.0


def test_pmf_mean_matches_rhs(plateau_state_p40):
    model, y = plateau_state_p40
    pmf = one_step_pmf(model, y)
    d = np.empty_like(y)
    assert model.rhs(y, d)
    dc1 = float(d[model.n_var:][model.sing].sum())
    assert abs(pmf.mean() - dc1) < 1e-9


def test_pmf_mean_matches_rhs_random_states():
    # same identity along the whole trajectory, both families
    for family in ("protograph", "random"):
        model = mean_model(EnsembleSpec(family, 3, 6, 25))
        traj = integrate(model, 0.44, snapshot_taus=(0.5, 2.0, 5.0, 8.0))
        for y in traj.snapshots:
            pmf = one_step_pmf(model, y)
            d = np.empty_like(y)
            assert model.rhs(y, d)
            if isinstance(model, type(mean_model(EnsembleSpec("protograph", 3, 6, 2)))):
                dc1 = float(d[model.n_var:][model.sing].sum())
            else:
                dc1 = float(d[model.L:].reshape(model.P, model.r + 1)[:, 1].sum())
            assert abs(pmf.mean() - dc1) < 1e-9


def test_pmf_degenerate_state_deterministic():
    # all check neighbors of every live variable have degree >= 3:
    # only the direct removal changes the count
    model = mean_model(EnsembleSpec("random", 3, 6, 10))
    y = np.zeros(model.n_state)
    y[:10] = 0.3
    R = y[10:].reshape(model.P, model.r + 1)
    R[:, 1] = 1e-6   # a whiff of deg1 mass so an iteration exists
    R[:, 5] = 0.4
    pmf = one_step_pmf(model, y)
    assert pmf.variance() == pytest.approx(0.0, abs=1e-5)
    assert pmf.probs[pmf.support.tolist().index(-1)] == pytest.approx(1.0, abs=1e-5)


def test_pmf_rejects_dead_state():
    model = mean_model(EnsembleSpec("random", 3, 6, 10))
    y = np.zeros(model.n_state)
    with pytest.raises(ValueError):
        one_step_pmf(model, y)


def test_estimate_delta1_plateau():
    model = mean_model(EnsembleSpec("protograph", 3, 6, 40))
    traj = integrate(model, 0.45, snapshot_taus=np.arange(0.0, 17.0, 0.5))
    curve = estimate_delta1(model, traj)
    assert 0.5 < curve.delta1_star < 1.0
    # plateau region is flat to a few percent
    sel = (curve.taus > 10.5) & (curve.taus < 12.5)
    assert np.ptp(curve.delta1[sel]) / curve.delta1_star < 0.05


def test_estimate_delta1_requires_snapshots():
    model = mean_model(EnsembleSpec("protograph", 3, 6, 40))
    traj = integrate(model, 0.45)
    with pytest.raises(ValueError):
        estimate_delta1(model, traj)


def test_monte_carlo_delta1_initial_point_matches_closed_form(cp36_50):
    # variance of the post-transmission deg1 count against the exact
    # protograph computation (pairs of checks share at most one variable)
    from scldpc import lift, transmit

    M, eps, trials = 800, 0.45, 400
    mean_ref, var_ref = c1_zero_mean_var(cp36_50, eps)
    scale = M / cp36_50.k
    vals = np.empty(trials)
    for t in range(trials):
        g = lift(cp36_50, M, seed=(9, t))
        rg = transmit(g, eps, seed=(10, t))
        vals[t] = rg.deg1_count()
    assert vals.mean() == pytest.approx(mean_ref * scale, rel=0.02)
    se_var = var_ref * scale * np.sqrt(2.0 / (trials - 1))
    assert abs(vals.var(ddof=1) - var_ref * scale) < 3 * se_var


def test_monte_carlo_delta1_reliability_flags():
    spec = EnsembleSpec("protograph", 3, 6, 20)
    mc = monte_carlo_delta1(spec, 200, 0.40, 120, seed=3, girth_guard="twin")
    assert mc.taus.shape == mc.delta1.shape == mc.n_survivors.shape
    assert mc.n_survivors[0] == 120
    assert mc.reliable.dtype == bool
    np.testing.assert_array_equal(mc.reliable, mc.n_survivors >= 30)


def test_monte_carlo_delta1_rejects_few_trials():
    spec = EnsembleSpec("protograph", 3, 6, 20)
    with pytest.raises(ValueError):
        monte_carlo_delta1(spec, 200, 0.4, 50, seed=1)


def test_trajectory_batch_grid_and_survivors():
    spec = EnsembleSpec("random", 3, 6, 20)
    batch = trajectory_batch(spec, 240, 0.42, 64, seed=5, stride=60,
                             girth_guard="twin")
    assert batch.taus[1] - batch.taus[0] == pytest.approx(0.25)
    col = batch.column(1.0)
    assert col.shape == (64,)
    with pytest.raises(ValueError):
        batch.column(1.03)
    assert batch.alive_at(0.5).sum() >= batch.alive_at(5.0).sum()


def test_fit_theta_contracts():
    spec = EnsembleSpec("protograph", 3, 6, 20)
    with pytest.raises(ValueError):
        fit_theta(spec, 200, 0.42, 500, seed=1)  # too few trials


def test_fit_theta_small_scale_runs():
    # scaled-down fit: smaller M and chain, anchors inside its steady window
    spec = EnsembleSpec("protograph", 3, 6, 40)
    fit = fit_theta(spec, 500, 0.45, 1000, seed=8, anchors=(10.0, 11.0),
                    max_lag=2.0, girth_guard="twin", n_graphs=50)
    assert fit.theta > 0
    assert fit.n_points >= 5
    assert fit.delta1_star > 0
    # zero-lag covariance equals the variance at the anchor within noise
    z = 10.0
    batch = trajectory_batch(spec, 500, 0.45, 1000, seed=8, stride=100,
                             girth_guard="twin", n_graphs=50)
    col = batch.column(z)
    var = np.nanvar(col, ddof=1) / 500
    assert fit.delta1_star == pytest.approx(var, rel=0.35)


def test_fit_theta_rejects_anchor_outside_run():
    spec = EnsembleSpec("protograph", 3, 6, 20)
    with pytest.raises((CovarianceFitError, IndexError, ValueError)):
        fit_theta(spec, 300, 0.42, 1000, seed=2, anchors=(50.0,),
                  girth_guard="twin", n_graphs=40)


def test_covariance_symmetry_small():
    # +lag and -lag covariances agree within statistical error
    spec = EnsembleSpec("protograph", 3, 6, 40)
    batch = trajectory_batch(spec, 500, 0.45, 1000, seed=12, stride=100,
                             girth_guard="twin", n_graphs=50)
    z, u = 11.0, 1.0
    alive = batch.alive_at(z + u)
    a = batch.c1[alive]
    iz = int(round(z * 500 / 100))
    ip = int(round((z + u) * 500 / 100))
    im = int(round((z - u) * 500 / 100))
    x, yp, ym = a[:, iz], a[:, ip], a[:, im]
    cp_ = np.mean(x * yp) - x.mean() * yp.mean()
    cm_ = np.mean(x * ym) - x.mean() * ym.mean()
    n = a.shape[0]
    se = np.sqrt((x.var() * yp.var() + cp_ ** 2) / n) + np.sqrt(
        (x.var() * ym.var() + cm_ ** 2) / n)
    assert abs(cp_ - cm_) < 3 * se
