"""Coupled protographs for spatially coupled (l,r)-regular LDPC ensembles.

A base (l,r) protograph is the smallest Tanner graph with variable degree l
and check degree r.  Coupling L copies along a chain spreads each variable's
l edges over l consecutive check positions; the chain is terminated, so the
l-1 extra check positions at each end have reduced degree.  Every edge of
the coupled protograph gets its own edge-type index, which is what the
degree-distribution machinery in :mod:`scldpc.degree_dist` evolves.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np


@dataclass(frozen=True)
class BaseProtograph:
    """Smallest (l,r)-regular template: n_v variables, n_c checks.

    Multi-edges are allowed here (e.g. (3,3) has a single variable with
    three parallel edges); `couple` rejects them.
    """

    l: int
    r: int
    n_v: int
    n_c: int
    edges: tuple  # (variable index, check index) pairs

    def has_multi_edges(self):
        return len(set(self.edges)) < len(self.edges)


def build_base(l, r):
    """Minimal (l,r)-regular protograph: n_v = r/gcd(l,r), n_c = l/gcd(l,r)."""
    if l < 2:
        raise ValueError(f"variable degree must be >= 2, got l={l}")
    if r < l:
        raise ValueError(f"check degree must be >= variable degree, got l={l}, r={r}")
    g = gcd(l, r)
    n_v, n_c = r // g, l // g
    # edge e belongs to variable e//l and check e//r; degrees are exact
    edges = tuple((e // l, e // r) for e in range(n_v * l))
    return BaseProtograph(l=l, r=r, n_v=n_v, n_c=n_c, edges=edges)


@dataclass(frozen=True)
class CoupledProtograph:
    """Chain of L coupled (l,r) protographs with terminated boundaries.

    Edge types are numbered 0..m-1 in position-major order: the variable
    with global index i (= position*k + within-position index) owns types
    i*l .. i*l + l-1, and its type i*l + o attaches to the check at
    position u+o (u = variable position).  k variables and n_c checks per
    position; check positions run 0..L+l-2.
    """

    l: int
    r: int
    L: int
    k: int                      # variables per position
    n_c: int                    # checks per position
    m: int                      # edge-type count, l*k*L
    edge_var: np.ndarray        # owning variable id per type
    edge_chk: np.ndarray        # owning check id per type
    edge_var_pos: np.ndarray    # variable position per type
    edge_chk_pos: np.ndarray    # check position per type
    var_types: np.ndarray       # (k*L, l) types per variable
    chk_types: tuple = field(repr=False)  # tuple of tuples, types per check

    @property
    def n_var(self):
        return self.k * self.L

    @property
    def n_chk(self):
        return self.n_c * (self.L + self.l - 1)

    def chk_degrees(self):
        return np.array([len(s) for s in self.chk_types])


def couple(base, L):
    """Couple L copies of `base` into a terminated chain.

    Each variable at position u connects to one check at every position
    u..u+l-1.  With more than one check per position, the variable with
    within-position index j attaches to check j mod n_c; degree regularity
    of interior checks then requires l | r.
    """
    if L < 1:
        raise ValueError(f"chain length must be >= 1, got L={L}")
    l, r, k, n_c = base.l, base.r, base.n_v, base.n_c
    m = l * k * L
    edge_var = np.empty(m, dtype=np.int64)
    edge_chk = np.empty(m, dtype=np.int64)
    edge_var_pos = np.empty(m, dtype=np.int64)
    edge_chk_pos = np.empty(m, dtype=np.int64)
    n_chk = n_c * (L + l - 1)
    chk_types = [[] for _ in range(n_chk)]
    for i in range(k * L):
        u, j = divmod(i, k)
        for o in range(l):
            t = i * l + o
            c = (u + o) * n_c + (j % n_c)
            edge_var[t] = i
            edge_chk[t] = c
            edge_var_pos[t] = u
            edge_chk_pos[t] = u + o
            chk_types[c].append(t)
    var_types = np.arange(m, dtype=np.int64).reshape(k * L, l)
    # coupling spreads a variable's edges over distinct positions, so no
    # (variable, check) pair can repeat; keep the invariant checked anyway
    pairs = set(zip(edge_var.tolist(), edge_chk.tolist()))
    if len(pairs) != m:
        raise ValueError("coupling produced a repeated (variable, check) pair; "
                         "per-node edge types would not be unique")
    return CoupledProtograph(
        l=l, r=r, L=L, k=k, n_c=n_c, m=m,
        edge_var=edge_var, edge_chk=edge_chk,
        edge_var_pos=edge_var_pos, edge_chk_pos=edge_chk_pos,
        var_types=var_types, chk_types=tuple(tuple(s) for s in chk_types),
    )


def design_rate(cp):
    """1 - (#nonzero-degree checks)/(#variables), as an exact fraction.

    Counts nodes rather than trusting a closed formula; tends to 1 - l/r
    as the chain grows.
    """
    n_nonzero = int(sum(1 for s in cp.chk_types if len(s) > 0))
    return Fraction(1) - Fraction(n_nonzero, cp.n_var)


def to_edge_list_text(cp):
    """One line per edge type: `type_id var_id chk_id var_pos chk_pos` (0-based)."""
    lines = [
        f"{t} {cp.edge_var[t]} {cp.edge_chk[t]} {cp.edge_var_pos[t]} {cp.edge_chk_pos[t]}"
        for t in range(cp.m)
    ]
    return "\n".join(lines) + "\n"
