"""Multi-edge-type degree distributions for coupled-protograph ensembles.

Node types are sets of edge types, stored as integer bit masks (bit j set
means one socket of type j; per-type degrees never exceed one for this
ensemble class).  A DDState holds the counts of variable and check nodes
per type; it is the sufficient statistic of the peeling process and the
state evolved by :mod:`scldpc.mean_evolution`.
"""

from dataclasses import dataclass, field, replace

import numpy as np

# counts below this are treated as zero; guards subtractive cancellation
COUNT_EPS = 1e-12


def mask_of(types):
    m = 0
    for t in types:
        m |= 1 << int(t)
    return m


def mask_bits(mask):
    """Edge-type indices present in a mask."""
    out = []
    j = 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return out


@dataclass
class DDState:
    """Counts of variable / check nodes per multi-edge type.

    `normalized` marks counts divided by M (per-position code length);
    `decoded_checks` tracks the zero-degree checks dropped from the maps.
    """

    m: int
    var_counts: dict = field(default_factory=dict)
    chk_counts: dict = field(default_factory=dict)
    normalized: bool = False
    decoded_checks: float = 0.0

    def copy(self):
        return replace(self, var_counts=dict(self.var_counts),
                       chk_counts=dict(self.chk_counts))

    def total_variables(self):
        return sum(self.var_counts.values())

    def total_checks(self):
        return sum(self.chk_counts.values())


def _clean(counts):
    return {k: v for k, v in counts.items() if v > COUNT_EPS}


def dd_from_protograph(cp, M):
    """Full-graph DD of a lifted coupled protograph with M bits per position.

    Every protograph node contributes M/k nodes at its full multi-edge type.
    """
    if M % cp.k != 0:
        raise ValueError(f"M={M} must be divisible by k={cp.k}")
    c = M // cp.k
    var_counts = {}
    for types in cp.var_types:
        var_counts[mask_of(types)] = float(c)
    chk_counts = {}
    for types in cp.chk_types:
        if types:
            chk_counts[mask_of(types)] = float(c)
    return DDState(m=cp.m, var_counts=var_counts, chk_counts=chk_counts)


def bec_initialize(dd, eps):
    """Expected residual DD after erasure-channel transmission.

    Variables survive with probability eps.  A check of type d keeps each
    socket independently with probability eps, so its count spreads over
    all subsets d' of d with weight eps^|d'| (1-eps)^(|d|-|d'|); the empty
    subset is decoded and tracked as a scalar.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability must be in [0,1], got {eps}")
    var_counts = {t: eps * v for t, v in dd.var_counts.items()}
    chk_counts = {}
    decoded = dd.decoded_checks
    for d, count in dd.chk_counts.items():
        bits = mask_bits(d)
        n = len(bits)
        # enumerate subsets of d via local index mask
        for sub in range(1 << n):
            w = count * eps ** bin(sub).count("1") * (1 - eps) ** (n - bin(sub).count("1"))
            if sub == 0:
                decoded += w
                continue
            dp = 0
            for i in range(n):
                if sub >> i & 1:
                    dp |= 1 << bits[i]
            chk_counts[dp] = chk_counts.get(dp, 0.0) + w
    return DDState(m=dd.m, var_counts=_clean(var_counts), chk_counts=_clean(chk_counts),
                   normalized=dd.normalized, decoded_checks=decoded)


def deg1_total(dd):
    """Total count (or fraction) of degree-one check nodes."""
    return sum(v for d, v in dd.chk_counts.items() if d & (d - 1) == 0 and d != 0)


def edge_counts(dd):
    """Per-type edge tables: first derivatives at 1 and the variable pair table.

    Returns (vx, rx, vxx): vx[j] / rx[j] count type-j sockets on the
    variable / check side; vxx[j, k] counts variables holding both a j and
    a k socket (diagonal defined as 0 since per-type degrees are binary).
    """
    m = dd.m
    vx = np.zeros(m)
    rx = np.zeros(m)
    vxx = np.zeros((m, m))
    for d, v in dd.var_counts.items():
        bits = mask_bits(d)
        for j in bits:
            vx[j] += v
            for k in bits:
                if k != j:
                    vxx[j, k] += v
    for d, v in dd.chk_counts.items():
        for j in mask_bits(d):
            rx[j] += v
    return vx, rx, vxx


def dd_to_csv(dd):
    """`side,type_mask_hex,count` rows, deterministically ordered."""
    lines = ["side,type_mask_hex,count"]
    for side, counts in (("var", dd.var_counts), ("chk", dd.chk_counts)):
        for d in sorted(counts):
            lines.append(f"{side},{d:x},{counts[d]!r}")
    return "\n".join(lines) + "\n"
