"""Peeling decoder over the binary erasure channel.

Transmission erases each variable independently; peeling then removes one
degree-one check and its attached variable per iteration until no
degree-one checks remain.  Decoding succeeds iff no erased variables are
left (the erasure pattern contained no stopping set).

The hot loop exists twice with identical semantics: a numba kernel for
production runs and a plain-Python reference used on small graphs in the
tests.  Both consume the same pre-drawn uniform stream for the degree-one
tie-breaking, so they produce byte-identical outcomes.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._util import fnum
from .sampler import make_rng


@dataclass
class ResidualGraph:
    """Post-transmission decoder state: live variables plus check tallies.

    `chk_vsum[c]` keeps the sum of live neighbor ids of check c, so the
    unique neighbor of a degree-one check is read off in O(1).
    """

    graph: object
    alive: np.ndarray       # live (erased, not yet peeled) variables
    chk_deg: np.ndarray     # residual check degrees
    chk_vsum: np.ndarray    # sum of live neighbor ids per check
    n_live: int
    ell: int = 0

    def deg1_count(self):
        return int(np.count_nonzero(self.chk_deg == 1))


@dataclass
class Trajectory:
    """Sampled degree-one counts of one decoding run."""

    M: int
    stride: int
    ell: np.ndarray          # iteration indices of the samples
    c1_count: np.ndarray     # degree-one check count at each sample
    outcome: str             # "decoded" | "stopped"
    ell_stop: int
    n_erased: int
    seed: object = None

    @property
    def tau(self):
        return self.ell / self.M

    @property
    def c1_fraction(self):
        return self.c1_count / self.M

    def to_csv(self):
        lines = ["ell,tau,c1_count,c1_fraction"]
        for e, c in zip(self.ell, self.c1_count):
            lines.append(f"{e},{fnum(e / self.M)},{c},{fnum(c / self.M)}")
        return "\n".join(lines) + "\n"


def transmit(graph, eps, seed):
    """Erase each variable with probability eps; drop received variables."""
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    alive = rng.random(graph.n_var) < eps
    live_edge = alive[graph.edge_var]
    chk_deg = np.bincount(graph.edge_chk[live_edge],
                          minlength=graph.n_chk).astype(np.int64)
    chk_vsum = np.bincount(graph.edge_chk[live_edge],
                           weights=graph.edge_var[live_edge],
                           minlength=graph.n_chk).astype(np.int64)
    return ResidualGraph(graph=graph, alive=alive, chk_deg=chk_deg,
                         chk_vsum=chk_vsum, n_live=int(alive.sum()))


@njit(cache=True, nogil=True)
def _peel_kernel(var_ptr, var_adj, chk_deg, chk_vsum, alive, n_live, u, stride, c1_out):
    n_chk = chk_deg.shape[0]
    deg1 = np.empty(n_chk, dtype=np.int64)
    pos = np.full(n_chk, -1, dtype=np.int64)
    n1 = 0
    for c in range(n_chk):
        if chk_deg[c] == 1:
            deg1[n1] = c
            pos[c] = n1
            n1 += 1
    ell = 0
    nrec = 0
    c1_out[nrec] = n1
    nrec += 1
    while n1 > 0:
        i = int(u[ell] * n1)
        if i >= n1:
            i = n1 - 1
        c = deg1[i]
        v = chk_vsum[c]
        n1 -= 1
        moved = deg1[n1]
        deg1[i] = moved
        pos[moved] = i
        pos[c] = -1
        chk_deg[c] = 0
        chk_vsum[c] = 0
        alive[v] = False
        n_live -= 1
        for e in range(var_ptr[v], var_ptr[v + 1]):
            cc = var_adj[e]
            if cc == c:
                continue
            chk_deg[cc] -= 1
            chk_vsum[cc] -= v
            if chk_deg[cc] == 1:
                deg1[n1] = cc
                pos[cc] = n1
                n1 += 1
            elif chk_deg[cc] == 0:
                j = pos[cc]
                n1 -= 1
                moved = deg1[n1]
                deg1[j] = moved
                pos[moved] = j
                pos[cc] = -1
        ell += 1
        if ell % stride == 0:
            c1_out[nrec] = n1
            nrec += 1
    return ell, n_live, nrec


def _peel_kernel_py(var_ptr, var_adj, chk_deg, chk_vsum, alive, n_live, u, stride, c1_out):
    # reference implementation; mirrors _peel_kernel exactly
    n_chk = chk_deg.shape[0]
    deg1 = [c for c in range(n_chk) if chk_deg[c] == 1]
    pos = {c: i for i, c in enumerate(deg1)}
    ell = 0
    nrec = 0
    c1_out[nrec] = len(deg1)
    nrec += 1
    while deg1:
        i = int(u[ell] * len(deg1))
        if i >= len(deg1):
            i = len(deg1) - 1
        c = deg1[i]
        v = int(chk_vsum[c])
        moved = deg1.pop()
        if i < len(deg1):
            deg1[i] = moved
            pos[moved] = i
        del pos[c]
        chk_deg[c] = 0
        chk_vsum[c] = 0
        alive[v] = False
        n_live -= 1
        for e in range(var_ptr[v], var_ptr[v + 1]):
            cc = int(var_adj[e])
            if cc == c:
                continue
            chk_deg[cc] -= 1
            chk_vsum[cc] -= v
            if chk_deg[cc] == 1:
                pos[cc] = len(deg1)
                deg1.append(cc)
            elif chk_deg[cc] == 0:
                j = pos.pop(cc)
                moved = deg1.pop()
                if j < len(deg1):
                    deg1[j] = moved
                    pos[moved] = j
        ell += 1
        if ell % stride == 0:
            c1_out[nrec] = len(deg1)
            nrec += 1
    return ell, n_live, nrec


def peel(rg, seed, stride=None, use_reference=False):
    """Run peeling to completion, sampling C1 every `stride` iterations.

    Mutates `rg` in place (degrees, live set, iteration counter).  The
    degree-one check removed at each iteration is chosen uniformly from a
    stream derived from `seed`; equal seeds replay the identical run.
    """
    graph = rg.graph
    if stride is None:
        stride = max(1, graph.M // 100)
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    u = rng.random(rg.n_live + 1)
    c1_out = np.zeros(rg.n_live // stride + 2, dtype=np.int64)
    kernel = _peel_kernel_py if use_reference else _peel_kernel
    ell, n_live, nrec = kernel(graph.var_ptr, graph.var_adj, rg.chk_deg, rg.chk_vsum,
                               rg.alive, rg.n_live, u, stride, c1_out)
    n_erased = rg.n_live
    rg.n_live = int(n_live)
    rg.ell = int(ell)
    outcome = "decoded" if rg.n_live == 0 else "stopped"
    return Trajectory(M=graph.M, stride=stride,
                      ell=np.arange(nrec, dtype=np.int64) * stride,
                      c1_count=c1_out[:nrec].copy(), outcome=outcome,
                      ell_stop=int(ell), n_erased=int(n_erased), seed=seed)


def extract_stopping_set(rg):
    """Live variables left by a failed run; their checks all have degree >= 2."""
    if rg.n_live == 0:
        raise ValueError("decoding succeeded; there is no stopping set to extract")
    if rg.deg1_count() > 0:
        raise ValueError("peeling has not finished; degree-one checks remain")
    return set(np.flatnonzero(rg.alive).tolist())


def outcome_csv_row(seed, trajectory):
    return f"{seed},{trajectory.n_erased},{trajectory.outcome},{trajectory.ell_stop}"
