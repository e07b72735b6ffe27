import numpy as np
import pytest

from scldpc import (EnsembleSpec, estimate_gamma, find_threshold, integrate,
                    mean_model, steady_state)
from scldpc.mean_evolution import (PlateauNotFound, ProtographMeanModel,
                                   ThresholdBracketError)


@pytest.fixture(scope="module")
def model_p20():
    return mean_model(EnsembleSpec("protograph", 3, 6, 20))


@pytest.fixture(scope="module")
def model_r20():
    return mean_model(EnsembleSpec("random", 3, 6, 20))


def rhs_of(model, y):
    out = np.empty_like(y)
    ok = model.rhs(y, out)
    return out if ok else None


def test_init_matches_dd_module(spec_p50):
    # c1(0) from the packed state equals the DD-module computation
    from scldpc import bec_initialize, dd_from_protograph, deg1_total

    model = mean_model(spec_p50)
    eps = 0.41
    y = model.init_state(eps)
    cp = spec_p50.coupled_protograph()
    dd = bec_initialize(dd_from_protograph(cp, cp.k), eps)
    assert model.c1(y) == pytest.approx(deg1_total(dd) / cp.k, rel=1e-12)
    assert model.var_mass(y) == pytest.approx(eps * 50, rel=1e-12)


def test_rand_init_total_mass():
    model = mean_model(EnsembleSpec("random", 3, 6, 30))
    y = model.init_state(0.37)
    assert model.var_mass(y) == pytest.approx(0.37 * 30, rel=1e-12)
    # per-position edge balance holds at the start
    assert model.edge_balance_gap(y) < 1e-12


def test_rhs_removes_one_variable_per_unit_tau(model_p20, model_r20):
    for model in (model_p20, model_r20):
        y = model.init_state(0.42)
        d = rhs_of(model, y)
        n = model.n_var if hasattr(model, "n_var") else model.L
        assert float(d[:n].sum()) == pytest.approx(-1.0, abs=1e-12)


def test_rhs_isolated_final_peel():
    # one deg1 check and its variable: everything drains at unit rate
    model = mean_model(EnsembleSpec("protograph", 3, 6, 1))
    # state: only variable 0 alive, only the singleton of its first type
    y = np.zeros(model.n_state)
    y[0] = 0.25
    t0 = int(model.cp.var_types[0][0])
    y[model.n_var + model.sing[t0]] = 0.25
    d = rhs_of(model, y)
    assert d[model.n_var + model.sing[t0]] == pytest.approx(-1.0)
    assert d[:model.n_var].sum() == pytest.approx(-1.0)
    assert model.c1(y) == pytest.approx(0.25)


def test_rhs_edge_balance_derivative(model_p20):
    # d/dtau of the per-type socket balance vanishes on valid states
    model = model_p20
    eps = 0.44
    y = model.init_state(eps)
    gap0 = model.edge_balance_gap(y)
    assert gap0 < 1e-12
    d = rhs_of(model, y)
    h = 1e-6
    gap1 = model.edge_balance_gap(y + h * d)
    assert gap1 < 1e-9


def test_integrate_survives_below_dies_above(spec_p50):
    model = mean_model(spec_p50)
    below = integrate(model, 0.4875, record_every=50)
    above = integrate(model, 0.4885, record_every=50)
    assert below.survived
    assert not above.survived
    assert above.tau[-1] < 0.4885 * 50 / 2  # death in the first half of the run


def test_integrate_curve_shape(spec_p50):
    # decreasing branch followed by a flat plateau
    model = mean_model(spec_p50)
    traj = integrate(model, 0.45)
    tau_star, c1_star, window_end = steady_state(traj)
    early = traj.c1_hat[traj.tau < tau_star * 0.7]
    assert np.all(np.diff(early[::200]) < 0)
    assert c1_star == pytest.approx(0.202, rel=0.02)
    assert tau_star < window_end


def test_integrate_step_refinement():
    spec = EnsembleSpec("protograph", 3, 6, 40)
    model = mean_model(spec)
    vals = []
    for step in (1e-3, 5e-4):
        traj = integrate(model, 0.45, step=step)
        _, c1_star, _ = steady_state(traj)
        vals.append(c1_star)
    assert abs(vals[0] - vals[1]) < 1e-6


def test_integrate_rejects_bad_step(model_p20):
    with pytest.raises(ValueError):
        integrate(model_p20, 0.4, step=0.0)


def test_integrate_edge_balance_drift(model_p20):
    # conservation along the full solved range, per unit tau
    traj = integrate(model_p20, 0.44)
    tau_range = traj.tau[-1]
    gap = model_p20.edge_balance_gap(traj.final_state)
    assert gap / max(tau_range, 1.0) < 1e-6


def test_snapshots_recorded(model_p20):
    traj = integrate(model_p20, 0.44, snapshot_taus=(1.0, 3.0, 5.0))
    assert list(traj.snapshot_taus) == [1.0, 3.0, 5.0]
    assert len(traj.snapshots) == 3
    assert traj.snapshots[0].shape == (model_p20.n_state,)


def test_steady_state_requires_plateau(model_p20):
    traj = integrate(model_p20, 0.05)  # decodes almost immediately
    with pytest.raises(PlateauNotFound):
        steady_state(traj)


def test_threshold_initial_bracket_check():
    spec = EnsembleSpec("protograph", 3, 6, 8)
    with pytest.raises(ThresholdBracketError):
        find_threshold(spec, tol=1e-2, bracket=(0.0, 0.05))


def test_threshold_small_chain_matches_de_oracle():
    # independent oracle: message-passing fixed point on the template graph
    spec = EnsembleSpec("protograph", 3, 6, 10)
    res = find_threshold(spec, tol=1e-3, bracket=(0.0, 0.55))
    assert res.bracket_width <= 1e-3
    assert res.epsilon_star == pytest.approx(0.50461, abs=2e-3)
    # monotone survival: below the bracket survives, above dies
    surv = {e: s for e, s, _ in res.probes}
    for e, s in surv.items():
        assert s == (e <= res.lo)


def test_gamma_fit_linearity():
    # on a small chain the slope exists and the through-origin fit is tight
    spec = EnsembleSpec("random", 3, 6, 40)
    res = find_threshold(spec, tol=1e-3)
    fit = estimate_gamma(spec, res.epsilon_star, deltas=(0.02, 0.03, 0.04))
    assert fit.residual_rel < 0.05
    assert 3.0 < fit.gamma < 6.0


def test_proto_random_same_engine_types():
    mp = mean_model(EnsembleSpec("protograph", 3, 6, 5))
    mr = mean_model(EnsembleSpec("random", 3, 6, 5))
    assert isinstance(mp, ProtographMeanModel)
    assert mp.n_chk_state == sum((1 << len(s)) - 1 for s in mp.cp.chk_types)
    assert mr.n_state == 5 + (5 + 2) * 7


def test_mean_trajectory_csv(model_p20):
    traj = integrate(model_p20, 0.3, record_every=500)
    lines = traj.to_csv().strip().split("\n")
    assert lines[0] == "tau,c1_hat"
    t, c = lines[1].split(",")
    assert float(t) == 0.0 and float(c) > 0
