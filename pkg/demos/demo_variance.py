"""Fluctuations of the degree-one process: variance proxy, Monte Carlo,
and the covariance decay rate.

Uses a scaled-down chain so the whole script runs in about a minute;
the package defaults reproduce the full-size analyses.
"""

from pathlib import Path

import numpy as np

from scldpc import (EnsembleSpec, estimate_delta1, fit_theta, integrate,
                    mean_model, monte_carlo_delta1, one_step_pmf)

OUT = Path(__file__).parent / "demo_out"
OUT.mkdir(exist_ok=True)

spec = EnsembleSpec("protograph", l=3, r=6, L=40)
M, eps, seed = 500, 0.45, 11
model = mean_model(spec)

# --- one-step outcome distribution at the plateau --------------------------
# From the mean state, a single peeling iteration changes the degree-one
# count by the loss of the peeled check plus a trinomial per remaining
# socket of the removed variable.
traj = integrate(model, eps, snapshot_taus=np.arange(0.0, 16.0, 0.5))
pmf = one_step_pmf(model, traj.snapshots[22])  # tau = 11, inside the plateau
print("one-step pmf at tau=11:", dict(zip(pmf.support.tolist(), np.round(pmf.probs, 4))))
print(f"  mean {pmf.mean():+.5f} (the plateau is flat), variance {pmf.variance():.4f}")

# --- variance proxy along the trajectory vs Monte Carlo --------------------
proxy = estimate_delta1(model, traj)
mc = monte_carlo_delta1(spec, M, eps, trials=1000, seed=seed, n_graphs=100)
(OUT / "delta1_curves.csv").write_text(mc.csv(analytic=proxy))
sel = (mc.taus >= 10) & (mc.taus <= 13)
print(f"delta1*: proxy {proxy.delta1_star:.3f}, "
      f"Monte Carlo {np.nanmean(mc.delta1[sel]):.3f}")

# --- covariance decay during the steady state -------------------------------
fit = fit_theta(spec, M, eps, trials=2000, seed=seed, anchors=(10.0, 11.0),
                max_lag=2.0, n_graphs=100)
(OUT / "covariance_lags.csv").write_text(fit.csv())
print(f"covariance decay theta = {fit.theta:.3f} "
      f"(amplitude {fit.delta1_star:.3f}, {fit.n_points} lags)")
