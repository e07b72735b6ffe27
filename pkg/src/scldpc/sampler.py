"""Finite Tanner-graph samplers for both coupled ensemble families.

Protograph lifting copies the coupled protograph M/k times and permutes
the edges within each edge type; the random family fills per-position
check-socket pools uniformly.  Both samplers optionally repair short
graph structures:

  girth_guard="none"     accept anything (only sensible for M/k = 1)
  girth_guard="parallel" no repeated (variable, check) pairs
  girth_guard="twin"     additionally no two variables with identical
                         check neighborhoods (the smallest stopping sets)
  girth_guard="cycle4"   additionally no 4-cycles (girth >= 6); default

Neither construction can actually produce parallel edges (a variable
sends at most one edge to any check position), so "parallel" is a free
level; the stronger levels trade sampling time for a cleaner error floor.
"""

from dataclasses import dataclass, field

import numpy as np

from .degree_dist import DDState, mask_of

GIRTH_LEVELS = ("none", "parallel", "twin", "cycle4")
_REPAIR_ROUNDS = 80


def make_rng(seed, *stream):
    """Counter-based generator; extra ints select independent substreams.

    Substreams are derived by SeedSequence spawn keys, so (seed, trial)
    streams are identical no matter how trials are scheduled.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class TannerGraph:
    """A sampled finite code instance.

    Edges are parallel arrays; `edge_type` holds the protograph edge type
    per edge, or -1 for the unstructured random family.  `var_ptr` /
    `var_adj` give each variable's incident check ids (CSR layout), which
    is all the peeling decoder needs.
    """

    l: int
    r: int
    L: int
    M: int
    family: str
    seed: int
    n_var: int
    n_chk: int
    edge_var: np.ndarray
    edge_chk: np.ndarray
    edge_type: np.ndarray
    var_pos: np.ndarray
    chk_pos: np.ndarray
    var_ptr: np.ndarray = field(default=None, repr=False)
    var_adj: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.var_ptr is None:
            order = np.argsort(self.edge_var, kind="stable")
            self.var_adj = self.edge_chk[order].copy()
            counts = np.bincount(self.edge_var, minlength=self.n_var)
            self.var_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    @property
    def n_edges(self):
        return self.edge_var.shape[0]


def _sorted_neighborhoods(edge_var, edge_chk, n_var, l):
    order = np.argsort(edge_var, kind="stable")
    return np.sort(edge_chk[order].reshape(n_var, l), axis=1), order


def _twin_vars(nbhd):
    """Variables whose full check neighborhood is shared with another."""
    n_var, l = nbhd.shape
    keys = nbhd.astype(np.uint64)
    packed = np.zeros(n_var, dtype=np.uint64)
    for i in range(l):
        packed = packed * np.uint64(1 << 21) + keys[:, i]
    _, inv, cnt = np.unique(packed, return_inverse=True, return_counts=True)
    return np.flatnonzero(cnt[inv] > 1)


def _cycle4_vars(nbhd, n_chk):
    """Variables involved in a 4-cycle (a check pair shared with another variable)."""
    n_var, l = nbhd.shape
    keys = []
    for a in range(l):
        for b in range(a + 1, l):
            keys.append(nbhd[:, a].astype(np.uint64) * np.uint64(n_chk) + nbhd[:, b].astype(np.uint64))
    K = np.stack(keys, axis=1)
    _, inv, cnt = np.unique(K.ravel(), return_inverse=True, return_counts=True)
    bad = (cnt[inv] > 1).reshape(n_var, len(keys))
    return np.flatnonzero(bad.any(axis=1))


def _check_parallel(edge_var, edge_chk, n_chk):
    keys = edge_var.astype(np.uint64) * np.uint64(n_chk) + edge_chk.astype(np.uint64)
    return len(np.unique(keys)) == keys.shape[0]


def lift(cp, M, seed, girth_guard="cycle4"):
    """Lift a coupled protograph: M/k copies, one permutation per edge type.

    The empirical DD of the result equals `dd_from_protograph(cp, M)`
    exactly for any permutations; repair swaps stay inside an edge type,
    so the guard never disturbs the DD.
    """
    if girth_guard not in GIRTH_LEVELS:
        raise ValueError(f"unknown girth_guard {girth_guard!r}")
    if M % cp.k != 0:
        raise ValueError(f"M={M} must be divisible by k={cp.k}")
    C = M // cp.k
    if C < 2 and girth_guard != "none":
        raise ValueError("M/k < 2 leaves no freedom to avoid short structures; "
                         "use girth_guard='none'")
    rng = make_rng(seed)
    mt = cp.m
    # edge index = type*C + copy; variable side is the identity matching
    edge_var = (cp.edge_var[:, None] * C + np.arange(C)[None, :]).ravel()
    edge_type = np.repeat(np.arange(mt, dtype=np.int64), C)
    perms = np.argsort(rng.random((mt, C)), axis=1)
    edge_chk = (cp.edge_chk[:, None] * C + perms).ravel()
    n_var, n_chk = cp.n_var * C, cp.n_chk * C

    if girth_guard in ("twin", "cycle4"):
        l = cp.l
        converged = False
        for it in range(_REPAIR_ROUNDS):
            nbhd, _ = _sorted_neighborhoods(edge_var, edge_chk, n_var, l)
            bad = _cycle4_vars(nbhd, n_chk) if girth_guard == "cycle4" else _twin_vars(nbhd)
            if bad.size == 0:
                converged = True
                break
            if it and it % 20 == 0:
                # swap repairs are thrashing; restart from fresh permutations
                perms = np.argsort(rng.random((mt, C)), axis=1)
                edge_chk = (cp.edge_chk[:, None] * C + perms).ravel()
                continue
            # re-permute one random edge of each offender within its type
            for v in bad:
                vc, i = divmod(int(v), C)
                t = int(cp.var_types[vc][rng.integers(cp.l)])
                j = int(rng.integers(C))
                e1, e2 = t * C + i, t * C + j
                edge_chk[e1], edge_chk[e2] = edge_chk[e2], edge_chk[e1]
        if not converged:
            raise RuntimeError(f"girth guard {girth_guard!r} did not converge "
                               f"within {_REPAIR_ROUNDS} repair rounds")
    if girth_guard != "none" and not _check_parallel(edge_var, edge_chk, n_chk):
        raise RuntimeError("parallel edges survived lifting")

    var_pos = np.repeat(cp.edge_var_pos.reshape(cp.n_var, cp.l)[:, 0], C)
    chk_pos = np.repeat(np.arange(cp.n_chk) // cp.n_c, C)
    return TannerGraph(l=cp.l, r=cp.r, L=cp.L, M=M, family="protograph", seed=seed,
                       n_var=n_var, n_chk=n_chk, edge_var=edge_var, edge_chk=edge_chk,
                       edge_type=edge_type, var_pos=var_pos, chk_pos=chk_pos)


def sample_random(l, r, L, M, seed, girth_guard="cycle4"):
    """Unstructured coupled ensemble: per-position uniform socket pools.

    M variables per position send one edge to each of the l consecutive
    check positions; each check position holds M*l/r checks of r sockets,
    filled by a uniform draw without replacement (exact socket counts).
    """
    if girth_guard not in GIRTH_LEVELS:
        raise ValueError(f"unknown girth_guard {girth_guard!r}")
    if (M * l) % r != 0:
        raise ValueError(f"M*l={M * l} must be divisible by r={r}")
    rng = make_rng(seed)
    npos = L + l - 1
    ncpp = M * l // r  # checks per position
    n_var, n_chk = L * M, npos * ncpp
    ev_parts, ec_parts = [], []
    for p in range(npos):
        w0, w1 = max(0, p - l + 1), min(p, L - 1)
        demand = (w1 - w0 + 1) * M
        sockets = rng.permutation(ncpp * r)[:demand]
        ec_parts.append(p * ncpp + sockets // r)
        ev_parts.append(np.arange(w0 * M, (w1 + 1) * M))
    edge_var = np.concatenate(ev_parts)
    edge_chk = np.concatenate(ec_parts)

    if girth_guard in ("twin", "cycle4"):
        converged = False
        for it in range(_REPAIR_ROUNDS):
            nbhd, order = _sorted_neighborhoods(edge_var, edge_chk, n_var, l)
            bad = _cycle4_vars(nbhd, n_chk) if girth_guard == "cycle4" else _twin_vars(nbhd)
            if bad.size == 0:
                converged = True
                break
            for v in bad:
                # swap one socket with another variable's socket at the same
                # check position; per-position socket counts stay exact
                c = int(rng.integers(l))
                pos = int(v) // M
                v2 = pos * M + int(rng.integers(M))
                e1, e2 = order[int(v) * l + c], order[v2 * l + c]
                edge_chk[e1], edge_chk[e2] = edge_chk[e2], edge_chk[e1]
        if not converged:
            raise RuntimeError(f"girth guard {girth_guard!r} did not converge "
                               f"within {_REPAIR_ROUNDS} repair rounds")
    if girth_guard != "none" and not _check_parallel(edge_var, edge_chk, n_chk):
        raise RuntimeError("parallel edges in random sample")

    edge_type = np.full(edge_var.shape[0], -1, dtype=np.int64)
    var_pos = np.arange(n_var, dtype=np.int64) // M
    chk_pos = np.arange(n_chk, dtype=np.int64) // ncpp
    return TannerGraph(l=l, r=r, L=L, M=M, family="random", seed=seed,
                       n_var=n_var, n_chk=n_chk, edge_var=edge_var, edge_chk=edge_chk,
                       edge_type=edge_type, var_pos=var_pos, chk_pos=chk_pos)


def sample_graph(spec, M, seed, girth_guard="cycle4"):
    """Sample from an EnsembleSpec (either family)."""
    if spec.is_protograph:
        return lift(spec.coupled_protograph(), M, seed, girth_guard=girth_guard)
    return sample_random(spec.l, spec.r, spec.L, M, seed, girth_guard=girth_guard)


def empirical_dd(graph):
    """Multi-edge-type DD of a lifted graph (node counts per type mask)."""
    if graph.family != "protograph":
        raise ValueError("empirical multi-edge DD needs protograph edge types")
    m = int(graph.edge_type.max()) + 1
    order = np.argsort(graph.edge_var, kind="stable")
    vt = graph.edge_type[order].reshape(graph.n_var, graph.l)
    var_counts = {}
    for row in np.sort(vt, axis=1):
        k = mask_of(row)
        var_counts[k] = var_counts.get(k, 0.0) + 1.0
    orderc = np.argsort(graph.edge_chk, kind="stable")
    ec = graph.edge_chk[orderc]
    et = graph.edge_type[orderc]
    chk_counts = {}
    bounds = np.searchsorted(ec, np.arange(graph.n_chk + 1))
    for c in range(graph.n_chk):
        ts = et[bounds[c]:bounds[c + 1]]
        if ts.size:
            k = mask_of(ts)
            chk_counts[k] = chk_counts.get(k, 0.0) + 1.0
    return DDState(m=m, var_counts=var_counts, chk_counts=chk_counts)


def to_alist(graph):
    """alist text export (variable-node and check-node adjacency lists, 1-based)."""
    deg_v = np.diff(graph.var_ptr)
    deg_c = np.bincount(graph.edge_chk, minlength=graph.n_chk)
    lines = [f"{graph.n_var} {graph.n_chk}",
             f"{int(deg_v.max())} {int(deg_c.max()) if graph.n_edges else 0}",
             " ".join(str(int(d)) for d in deg_v),
             " ".join(str(int(d)) for d in deg_c)]
    for v in range(graph.n_var):
        cs = graph.var_adj[graph.var_ptr[v]:graph.var_ptr[v + 1]]
        lines.append(" ".join(str(int(c) + 1) for c in cs))
    orderc = np.argsort(graph.edge_chk, kind="stable")
    ev = graph.edge_var[orderc]
    bounds = np.searchsorted(graph.edge_chk[orderc], np.arange(graph.n_chk + 1))
    for c in range(graph.n_chk):
        vs = ev[bounds[c]:bounds[c + 1]]
        lines.append(" ".join(str(int(v) + 1) for v in vs))
    return "\n".join(lines) + "\n"
