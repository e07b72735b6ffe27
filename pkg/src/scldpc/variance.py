"""Fluctuations of the degree-one process around its mean evolution.

The one-step proxy treats a single peeling iteration launched from the
mean state as random: the net change in the degree-one count is the loss
of the peeled check plus one trinomial contribution per remaining socket
of the removed variable (a struck degree-2 check yields a new degree-one,
a struck degree-one disappears).  Its variance approximates the stationary
variance parameter of the process during the steady-state phase; the
time covariance decay rate is fitted from Monte Carlo trajectories.
"""

from dataclasses import dataclass

import numpy as np

from ._util import fnum
from .mean_evolution import (ProtographMeanModel, RandomMeanModel, integrate,
                             mean_model, steady_state)
from .montecarlo import trajectory_batch

PMF_NORM_TOL = 1e-10


class CovarianceFitError(RuntimeError):
    pass


@dataclass
class OneStepPMF:
    """Distribution of the one-iteration change in the degree-one count."""

    support: np.ndarray     # -l .. l-1
    probs: np.ndarray

    def mean(self):
        return float(np.dot(self.support, self.probs))

    def variance(self):
        mu = self.mean()
        return float(np.dot(self.support ** 2, self.probs) - mu * mu)


def _convolve_trinomials(minus, plus):
    """PMF of a sum of independent {-1,0,+1} variables, index 0 = most negative."""
    dist = np.array([1.0])
    for b, a in zip(minus, plus):
        dist = np.convolve(dist, np.array([b, 1.0 - a - b, a]))
    return dist


def one_step_pmf(model, y):
    """Outcome distribution of one peeling iteration at mean state `y`."""
    l = model.l
    support = np.arange(-l, l)
    probs = np.zeros(2 * l)
    if isinstance(model, ProtographMeanModel):
        sing = model.singleton_masses(y)
        c1 = sing.sum()
        if c1 <= 0:
            raise ValueError("degree-one mass is zero; no iteration possible")
        pdir = sing / c1
        rx, d1, d2 = model.edge_socket_tables(y)
        safe = np.where(rx > 1e-300, rx, 1.0)
        a = np.where(rx > 1e-300, d2 / safe, 0.0)
        b = np.where(rx > 1e-300, d1 / safe, 0.0)
        for vc in range(model.n_var):
            types = model.cp.var_types[vc]
            for j in types:
                if pdir[j] <= 0.0:
                    continue
                sib = [t for t in types if t != j]
                dist = _convolve_trinomials(b[sib], a[sib])
                # index i of dist is a net change of i-(l-1); the peeled check adds -1
                probs[:2 * l - 1] += pdir[j] * dist
    elif isinstance(model, RandomMeanModel):
        R = np.maximum(y[model.L:].reshape(model.P, model.r + 1), 0.0)
        v = np.maximum(y[:model.L], 0.0)
        c1 = R[:, 1].sum()
        if c1 <= 0:
            raise ValueError("degree-one mass is zero; no iteration possible")
        pdir = R[:, 1] / c1
        ds = np.arange(model.r + 1)
        ep = (R * ds).sum(axis=1)
        safe = np.where(ep > 1e-300, ep, 1.0)
        a = np.where(ep > 1e-300, 2.0 * R[:, 2] / safe, 0.0)
        b = np.where(ep > 1e-300, R[:, 1] / safe, 0.0)
        for u in range(model.P):
            if pdir[u] <= 0.0:
                continue
            w0, w1 = model.feeding_positions(u)
            vw = v[w0:w1 + 1]
            tot = vw.sum()
            if tot <= 0:
                continue
            for w in range(w0, w1 + 1):
                lam = v[w] / tot
                if lam <= 0.0:
                    continue
                others = [w + o for o in range(l) if w + o != u]
                dist = _convolve_trinomials(b[others], a[others])
                probs[:2 * l - 1] += pdir[u] * lam * dist
    else:
        raise TypeError(f"unsupported model type {type(model)!r}")
    return OneStepPMF(support=support, probs=probs)


@dataclass
class Delta1Curve:
    taus: np.ndarray
    delta1: np.ndarray
    delta1_star: float


def estimate_delta1(model, traj):
    """One-step variance proxy along a mean trajectory; plateau average.

    `traj` must carry full-state snapshots (integrate with snapshot_taus).
    Evaluates Var of the one-step change at each snapshot and averages
    over the middle 50% of the steady-state window.
    """
    if not traj.snapshots:
        raise ValueError("trajectory has no snapshots; integrate with snapshot_taus")
    t0, _, t1 = steady_state(traj)
    taus, vals = [], []
    for tau, y in zip(traj.snapshot_taus, traj.snapshots):
        try:
            vals.append(one_step_pmf(model, y).variance())
        except ValueError:
            continue
        taus.append(tau)
    taus = np.array(taus)
    vals = np.array(vals)
    quarter = (t1 - t0) / 4.0
    mid = (taus >= t0 + quarter) & (taus <= t1 - quarter)
    if not mid.any():
        raise ValueError("no variance checkpoints inside the steady window")
    return Delta1Curve(taus=taus, delta1=vals, delta1_star=float(vals[mid].mean()))


def delta1_proxy(spec, eps, step=1e-3, checkpoint_spacing=0.5):
    """Convenience wrapper: integrate with snapshots and run estimate_delta1."""
    model = mean_model(spec)
    snaps = np.arange(0.0, eps * spec.L, checkpoint_spacing)
    traj = integrate(model, eps, step=step, snapshot_taus=snaps)
    return estimate_delta1(model, traj)


@dataclass
class Delta1MC:
    taus: np.ndarray
    delta1: np.ndarray
    n_survivors: np.ndarray
    reliable: np.ndarray    # survivor count >= 30

    def csv(self, analytic=None):
        lines = ["tau,delta1_analytic,delta1_mc,n_survivors"]
        for i, t in enumerate(self.taus):
            a = "" if analytic is None else fnum(np.interp(t, analytic.taus, analytic.delta1))
            lines.append(f"{fnum(t)},{a},{fnum(self.delta1[i])},{self.n_survivors[i]}")
        return "\n".join(lines) + "\n"


def monte_carlo_delta1(spec, M, eps, trials, seed, stride=100, n_graphs=None,
                       girth_guard="cycle4", batch=None):
    """Monte Carlo estimate of M * Var[c1(tau)] across surviving trials."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if batch is None:
        batch = trajectory_batch(spec, M, eps, trials, seed, stride=stride,
                                 n_graphs=n_graphs, girth_guard=girth_guard)
    alive = ~np.isnan(batch.c1)
    n_surv = alive.sum(axis=0)
    with np.errstate(invalid="ignore"):
        var = np.nanvar(batch.c1, axis=0, ddof=1)
    delta1 = var / M
    return Delta1MC(taus=batch.taus, delta1=delta1, n_survivors=n_surv,
                    reliable=n_surv >= 30)


@dataclass
class CovarianceFit:
    delta1_star: float      # fitted zero-lag amplitude, in M*Cov units
    theta: float
    residual: float         # weighted RMS residual of the log-space fit
    n_points: int
    anchors: tuple
    lags: np.ndarray
    phi1: np.ndarray
    stderr: np.ndarray

    def csv(self):
        lines = ["lag,phi1,stderr"]
        for u, p, s in zip(self.lags, self.phi1, self.stderr):
            lines.append(f"{fnum(u)},{fnum(p)},{fnum(s)}")
        return "\n".join(lines) + "\n"


def fit_theta(spec, M, eps, trials, seed, anchors=(26.0, 28.0), max_lag=3.0,
              stride=100, n_graphs=None, girth_guard="cycle4", batch=None,
              residual_tol=1.0, min_lags=5):
    """Exponential decay rate of the steady-state time covariance.

    Estimates M*Cov[c1(anchor), c1(anchor+lag)] over trials alive at the
    later time, keeps lags above the estimator noise floor (2 standard
    errors), and fits a weighted line to the log covariances.  theta > 0
    with residual below `residual_tol` is required for an accepted fit.
    """
    if trials < 1000:
        raise ValueError(f"need at least 1000 trials for a covariance fit, got {trials}")
    if batch is None:
        batch = trajectory_batch(spec, M, eps, trials, seed, stride=stride,
                                 n_graphs=n_graphs, girth_guard=girth_guard)
    taus = batch.taus
    lags, phis, ses = [], [], []
    for z in anchors:
        iz = int(round(z * M / batch.stride))
        ilo = max(0, int(round((z - max_lag) * M / batch.stride)))
        ihi = min(taus.size - 1, int(round((z + max_lag) * M / batch.stride)))
        later = taus[ihi]
        surv = batch.c1[batch.alive_at(later)]
        if surv.shape[0] < 30:
            raise CovarianceFitError(f"only {surv.shape[0]} trials alive at tau={later}")
        x = surv[:, iz]
        n = surv.shape[0]
        for it in range(ilo, ihi + 1):
            if it == iz:
                continue
            yv = surv[:, it]
            cov = float(np.mean(x * yv) - x.mean() * yv.mean())
            se = float(np.sqrt((x.var() * yv.var() + cov * cov) / n))
            if cov > 2.0 * se:
                lags.append(abs(taus[it] - z))
                phis.append(cov / M)
                ses.append(se / M)
    lags = np.array(lags)
    phis = np.array(phis)
    ses = np.array(ses)
    if lags.size < min_lags:
        raise CovarianceFitError(
            f"only {lags.size} usable lags above the noise floor (need {min_lags})")
    # weighted LS in log space; var(log phi) ~ (se/phi)^2
    w = (phis / ses) ** 2
    A = np.vstack([lags, np.ones_like(lags)]).T
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], np.log(phis) * sw, rcond=None)
    theta = float(-coef[0])
    amp = float(np.exp(coef[1]))
    resid = np.log(phis) - (coef[0] * lags + coef[1])
    residual = float(np.sqrt(np.average(resid ** 2, weights=w)))
    if theta <= 0:
        raise CovarianceFitError(f"fitted decay rate is not positive ({theta:.3g})")
    if residual > residual_tol:
        raise CovarianceFitError(
            f"log-covariance fit residual {residual:.3g} exceeds {residual_tol}")
    return CovarianceFit(delta1_star=amp, theta=theta, residual=residual,
                         n_points=int(lags.size), anchors=tuple(anchors),
                         lags=lags, phi1=phis, stderr=ses)
