"""Seeded Monte Carlo batches: decoding trajectories and word error rates.

Each trial t of a batch draws its randomness from the substream
(seed, TRIAL, t) and its code graph from a round-robin pool sampled from
(seed, GRAPH, g); results are therefore reproducible and independent of
scheduling.  The `n_jobs` knob runs trials on a thread pool (the peeling
kernel releases the GIL); aggregation only depends on per-trial outputs,
never on completion order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .peeling import peel, transmit
from .sampler import make_rng, sample_graph

_GRAPH_STREAM = 1
_TRIAL_STREAM = 2


def graph_pool(spec, M, seed, n_graphs, girth_guard="cycle4"):
    return [sample_graph(spec, M, (seed, _GRAPH_STREAM, g), girth_guard=girth_guard)
            for g in range(n_graphs)]


def _default_pool_size(trials):
    return max(1, min(256, trials // 8))


@dataclass
class TrajectoryBatch:
    """c1 trajectories of many trials on a common tau grid.

    `c1[t, i]` is NaN once trial t has stopped (its last recorded sample
    is at the stop); `ell_stop[t]` < `n_erased[t]` marks a decoding failure.
    """

    M: int
    stride: int
    taus: np.ndarray
    c1: np.ndarray
    ell_stop: np.ndarray
    n_erased: np.ndarray
    decoded: np.ndarray

    @property
    def n_trials(self):
        return self.c1.shape[0]

    def alive_at(self, tau):
        """Trials still peeling at normalized time tau."""
        return self.ell_stop > tau * self.M

    def column(self, tau):
        i = int(round(tau * self.M / self.stride))
        if not np.isclose(i * self.stride / self.M, tau, atol=1e-9):
            raise ValueError(f"tau={tau} is not on the stride grid "
                             f"(stride {self.stride}, M {self.M})")
        return self.c1[:, i]


def trajectory_batch(spec, M, eps, trials, seed, stride=100, n_graphs=None,
                     girth_guard="cycle4", n_jobs=1):
    """Run `trials` peeling runs and collect C1 samples every `stride` iterations."""
    if n_graphs is None:
        n_graphs = _default_pool_size(trials)
    pool = graph_pool(spec, M, seed, n_graphs, girth_guard=girth_guard)

    def one(t):
        rng = make_rng(seed, _TRIAL_STREAM, t)
        rg = transmit(pool[t % n_graphs], eps, rng)
        return peel(rg, rng, stride=stride)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]

    n_cols = max(r.c1_count.size for r in results)
    c1 = np.full((trials, n_cols), np.nan)
    ell_stop = np.empty(trials, dtype=np.int64)
    n_erased = np.empty(trials, dtype=np.int64)
    decoded = np.empty(trials, dtype=bool)
    for t, r in enumerate(results):
        c1[t, :r.c1_count.size] = r.c1_count
        ell_stop[t] = r.ell_stop
        n_erased[t] = r.n_erased
        decoded[t] = r.outcome == "decoded"
    taus = np.arange(n_cols) * stride / M
    return TrajectoryBatch(M=M, stride=stride, taus=taus, c1=c1,
                           ell_stop=ell_stop, n_erased=n_erased, decoded=decoded)


def wilson_interval(errors, trials, z=1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class WerPoint:
    eps: float
    trials: int
    errors: int
    wer: float
    ci_lo: float
    ci_hi: float
    ci_method: str
    seed: int
    predicted: float = None


def wer_point(spec, M, eps, trials, seed, target_errors=100, n_graphs=None,
              girth_guard="cycle4", n_jobs=1, chunk=256):
    """Word error rate with early stop at `target_errors` failures.

    The stop rule is evaluated on whole chunks of consecutive trial
    indices, so the set of trials run is a deterministic function of the
    per-trial outcomes alone.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_graphs is None:
        n_graphs = _default_pool_size(trials)
    pool = graph_pool(spec, M, seed, n_graphs, girth_guard=girth_guard)

    def one(t):
        rng = make_rng(seed, _TRIAL_STREAM, t)
        rg = transmit(pool[t % n_graphs], eps, rng)
        traj = peel(rg, rng, stride=max(1, rg.n_live + 1))
        return traj.outcome != "decoded"

    errors = 0
    done = 0
    while done < trials:
        hi = min(trials, done + chunk)
        idx = range(done, hi)
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as ex:
                outs = list(ex.map(one, idx))
        else:
            outs = [one(t) for t in idx]
        errors += sum(outs)
        done = hi
        if errors >= target_errors:
            break
    lo, hi_ci = wilson_interval(errors, done)
    return WerPoint(eps=eps, trials=done, errors=errors,
                    wer=errors / done, ci_lo=lo, ci_hi=hi_ci,
                    ci_method="wilson95", seed=seed)
