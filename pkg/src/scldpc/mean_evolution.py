"""Expected graph evolution of peeling decoding, in normalized time tau = ell/M.

Two models share one fixed-step RK4 integrator:

* `ProtographMeanModel` tracks check counts per residual multi-edge type
  (all subsets of each coupled-protograph check's socket set) and variable
  counts per protograph variable.  One peeling iteration removes a uniform
  degree-one check, the variable behind its single socket, and that
  variable's remaining sockets, which strike further checks in proportion
  to their type-k socket counts.

* `RandomMeanModel` tracks, per chain position, live variable counts and
  check counts by residual degree; the same one-step expectations apply
  with (position, degree) playing the role of the type.

The decoder dies when the total degree-one mass reaches zero; the BP
threshold is the largest erasure probability for which it stays positive
throughout.  Negative intermediate values are never fed back into the
flow terms (outflows are computed from clamped states), which keeps the
integrator from manufacturing degree-one mass once the decoding wave
stalls above threshold.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._util import fnum
from .degree_dist import bec_initialize, dd_from_protograph
from .ensembles import EnsembleSpec

HALT_TOL = 1e-7        # on deg1 mass and on variable mass
SURVIVAL_TOL = 1e-3    # residual variable mass below this counts as decoded
ZERO_SNAP = 1e-12      # |state| below this is snapped to zero after a step


class ThresholdBracketError(RuntimeError):
    pass


class PlateauNotFound(RuntimeError):
    pass


class GammaFitError(RuntimeError):
    pass


@njit(cache=True, nogil=True)
def _proto_rhs(V, R, sing, var_of_edge, tr_src, tr_dst, tr_edge, dV, dR):
    m = sing.shape[0]
    c1 = 0.0
    for j in range(m):
        x = R[sing[j]]
        if x > 0.0:
            c1 += x
    if c1 <= 0.0:
        return 0
    nvar = V.shape[0]
    pdir = np.empty(m)
    svar = np.zeros(nvar)
    for j in range(m):
        x = R[sing[j]]
        p = x / c1 if x > 0.0 else 0.0
        pdir[j] = p
        svar[var_of_edge[j]] += p
    Rx = np.zeros(m)
    for t in range(tr_src.shape[0]):
        x = R[tr_src[t]]
        if x > 0.0:
            Rx[tr_edge[t]] += x
    rate = np.zeros(m)
    for j in range(m):
        nk = svar[var_of_edge[j]] - pdir[j]
        if Rx[j] > 1e-300:
            rate[j] = nk / Rx[j]
    for s in range(dR.shape[0]):
        dR[s] = 0.0
    for t in range(tr_src.shape[0]):
        x = R[tr_src[t]]
        if x <= 0.0:
            continue
        w = rate[tr_edge[t]] * x
        dR[tr_src[t]] -= w
        d = tr_dst[t]
        if d >= 0:
            dR[d] += w
    for j in range(m):
        dR[sing[j]] -= pdir[j]
    for i in range(nvar):
        dV[i] = -svar[i]
    return 1


@njit(cache=True, nogil=True)
def _rand_rhs(v, R, l, dv, dR):
    P = R.shape[0]
    rd = R.shape[1] - 1
    L = v.shape[0]
    c1 = 0.0
    for p in range(P):
        x = R[p, 1]
        if x > 0.0:
            c1 += x
    if c1 <= 0.0:
        return 0
    pdir = np.empty(P)
    for p in range(P):
        x = R[p, 1]
        pdir[p] = x / c1 if x > 0.0 else 0.0
    wsum = np.zeros(P)
    for p in range(P):
        w0 = max(0, p - l + 1)
        w1 = min(p, L - 1)
        s = 0.0
        for w in range(w0, w1 + 1):
            if v[w] > 0.0:
                s += v[w]
        wsum[p] = s
    # probability the iteration's removed variable sits at position w
    q = np.zeros(L)
    for p in range(P):
        if pdir[p] <= 0.0 or wsum[p] <= 1e-300:
            continue
        w0 = max(0, p - l + 1)
        w1 = min(p, L - 1)
        for w in range(w0, w1 + 1):
            if v[w] > 0.0:
                q[w] += pdir[p] * v[w] / wsum[p]
    for w in range(L):
        dv[w] = -q[w]
    # expected indirect edge removals entering each check position
    for p in range(P):
        w0 = max(0, p - l + 1)
        w1 = min(p, L - 1)
        beta = -pdir[p]
        for w in range(w0, w1 + 1):
            beta += q[w]
        ep = 0.0
        for d in range(1, rd + 1):
            x = R[p, d]
            if x > 0.0:
                ep += d * x
        for d in range(rd + 1):
            dR[p, d] = 0.0
        if ep > 1e-300 and beta != 0.0:
            for d in range(1, rd + 1):
                x = R[p, d]
                if x > 0.0:
                    f = beta * d * x / ep
                    dR[p, d] -= f
                    if d >= 2:
                        dR[p, d - 1] += f
        dR[p, 1] -= pdir[p]
    return 1


class ProtographMeanModel:
    """Packed multi-edge-type state for one coupled protograph."""

    def __init__(self, cp):
        self.cp = cp
        self.l, self.r, self.L, self.k = cp.l, cp.r, cp.L, cp.k
        self.m = cp.m
        self.n_var = cp.n_var
        self.var_of_edge = cp.edge_var.astype(np.int64)
        offsets = []
        n_state = 0
        for types in cp.chk_types:
            offsets.append(n_state)
            n_state += (1 << len(types)) - 1
        self.n_chk_state = n_state
        self.mask_index = {}      # global type mask -> packed index
        self.state_mask = np.zeros(n_state, dtype=object)
        self.state_pop = np.zeros(n_state, dtype=np.int64)
        sing = np.full(self.m, -1, dtype=np.int64)
        src, dst, edge = [], [], []
        for c, types in enumerate(cp.chk_types):
            off = offsets[c]
            n = len(types)
            for local in range(1, 1 << n):
                idx = off + local - 1
                gmask = 0
                for i in range(n):
                    if local >> i & 1:
                        gmask |= 1 << types[i]
                self.mask_index[gmask] = idx
                self.state_mask[idx] = gmask
                pop = bin(local).count("1")
                self.state_pop[idx] = pop
                for i in range(n):
                    if local >> i & 1:
                        rem = local & ~(1 << i)
                        src.append(idx)
                        dst.append(off + rem - 1 if rem else -1)
                        edge.append(types[i])
                if pop == 1:
                    i = local.bit_length() - 1
                    sing[types[i]] = idx
        self.tr_src = np.array(src, dtype=np.int64)
        self.tr_dst = np.array(dst, dtype=np.int64)
        self.tr_edge = np.array(edge, dtype=np.int64)
        self.sing = sing
        self.n_state = self.n_var + self.n_chk_state

    def init_state(self, eps):
        # route through the DD module so both agree exactly
        dd = bec_initialize(dd_from_protograph(self.cp, self.k), eps)
        y = np.zeros(self.n_state)
        for i, types in enumerate(self.cp.var_types):
            mask = 0
            for t in types:
                mask |= 1 << int(t)
            y[i] = dd.var_counts.get(mask, 0.0) / self.k
        for mask, cnt in dd.chk_counts.items():
            y[self.n_var + self.mask_index[mask]] = cnt / self.k
        return y

    def rhs(self, y, out):
        ok = _proto_rhs(y[:self.n_var], y[self.n_var:], self.sing, self.var_of_edge,
                        self.tr_src, self.tr_dst, self.tr_edge,
                        out[:self.n_var], out[self.n_var:])
        return bool(ok)

    def c1(self, y):
        return float(np.sum(y[self.n_var:][self.sing]))

    def var_mass(self, y):
        return float(np.sum(y[:self.n_var]))

    def edge_balance_gap(self, y):
        """max_j |V_xj(1) - R_xj(1)| on the packed state."""
        R = np.maximum(y[self.n_var:], 0.0)
        rx = np.bincount(self.tr_edge, weights=R[self.tr_src], minlength=self.m)
        vx = y[:self.n_var][self.var_of_edge]
        return float(np.max(np.abs(vx - rx)))

    def singleton_masses(self, y):
        return np.maximum(y[self.n_var:][self.sing], 0.0)

    def edge_socket_tables(self, y):
        """(rx, deg1, deg2) per edge type: socket count and the masses of
        degree-1 / degree-2 checks holding a type-k socket."""
        R = np.maximum(y[self.n_var:], 0.0)
        g = R[self.tr_src]
        rx = np.bincount(self.tr_edge, weights=g, minlength=self.m)
        pop = self.state_pop[self.tr_src]
        d1 = np.bincount(self.tr_edge[pop == 1], weights=g[pop == 1], minlength=self.m)
        d2 = np.bincount(self.tr_edge[pop == 2], weights=g[pop == 2], minlength=self.m)
        return rx, d1, d2


class RandomMeanModel:
    """Positional (position, residual degree) state for the random family."""

    def __init__(self, l, r, L):
        self.l, self.r, self.L = l, r, L
        self.P = L + l - 1
        self.n_var = L
        self.n_state = L + self.P * (r + 1)

    def feeding_positions(self, p):
        return max(0, p - self.l + 1), min(p, self.L - 1)

    def init_state(self, eps):
        from math import comb
        y = np.zeros(self.n_state)
        y[:self.L] = eps
        R = y[self.L:].reshape(self.P, self.r + 1)
        for p in range(self.P):
            w0, w1 = self.feeding_positions(p)
            occ = eps * (w1 - w0 + 1) / self.l   # socket live probability
            for d in range(1, self.r + 1):
                R[p, d] = (self.l / self.r) * comb(self.r, d) * occ ** d * (1 - occ) ** (self.r - d)
        return y

    def rhs(self, y, out):
        R = y[self.L:].reshape(self.P, self.r + 1)
        dR = out[self.L:].reshape(self.P, self.r + 1)
        ok = _rand_rhs(y[:self.L], R, self.l, out[:self.L], dR)
        return bool(ok)

    def c1(self, y):
        return float(np.sum(y[self.L:].reshape(self.P, self.r + 1)[:, 1]))

    def var_mass(self, y):
        return float(np.sum(y[:self.L]))

    def edge_balance_gap(self, y):
        R = np.maximum(y[self.L:].reshape(self.P, self.r + 1), 0.0)
        ds = np.arange(self.r + 1)
        rx = (R * ds).sum(axis=1)
        v = y[:self.L]
        gaps = []
        for p in range(self.P):
            w0, w1 = self.feeding_positions(p)
            gaps.append(abs(v[w0:w1 + 1].sum() - rx[p]))
        return float(max(gaps))


def mean_model(spec):
    """Build the evolution model for an EnsembleSpec."""
    if spec.is_protograph:
        return ProtographMeanModel(spec.coupled_protograph())
    return RandomMeanModel(spec.l, spec.r, spec.L)


@dataclass
class MeanTrajectory:
    """ĉ1(tau) on the integration grid plus optional full-state snapshots."""

    eps: float
    step: float
    L: int
    tau: np.ndarray
    c1_hat: np.ndarray
    halt_reason: str
    var_mass_end: float
    snapshot_taus: np.ndarray = None
    snapshots: list = field(default=None, repr=False)
    final_state: np.ndarray = field(default=None, repr=False)

    @property
    def survived(self):
        return self.var_mass_end < SURVIVAL_TOL

    def to_csv(self):
        lines = ["tau,c1_hat"]
        for t, c in zip(self.tau, self.c1_hat):
            lines.append(f"{fnum(t)},{fnum(c)}")
        return "\n".join(lines) + "\n"


def integrate(model, eps, step=1e-3, halt_tol=HALT_TOL, snapshot_taus=(),
              record_every=1):
    """Fixed-step RK4 until deg1 mass or variable mass falls below halt_tol."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    y = model.init_state(eps)
    n_max = int(np.ceil(eps * model.L / step)) + int(2.0 / step)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    taus, c1s = [], []
    snap_idx = sorted({int(round(t / step)) for t in snapshot_taus})
    snaps, snap_taus = [], []
    halt = "max_steps"
    i = 0
    for i in range(n_max + 1):
        tau = i * step
        c1 = model.c1(y)
        if i % record_every == 0:
            taus.append(tau)
            c1s.append(c1)
        if snap_idx and i == snap_idx[0]:
            snap_idx.pop(0)
            snaps.append(y.copy())
            snap_taus.append(tau)
        if c1 < halt_tol:
            halt = "deg1_exhausted"
            break
        if model.var_mass(y) < halt_tol:
            halt = "variables_exhausted"
            break
        if not model.rhs(y, k1):
            halt = "deg1_exhausted"
            break
        if not model.rhs(y + 0.5 * step * k1, k2):
            halt = "deg1_exhausted"
            break
        if not model.rhs(y + 0.5 * step * k2, k3):
            halt = "deg1_exhausted"
            break
        if not model.rhs(y + step * k3, k4):
            halt = "deg1_exhausted"
            break
        y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y[np.abs(y) < ZERO_SNAP] = 0.0
    return MeanTrajectory(eps=eps, step=step, L=model.L,
                          tau=np.array(taus), c1_hat=np.array(c1s),
                          halt_reason=halt, var_mass_end=model.var_mass(y),
                          snapshot_taus=np.array(snap_taus), snapshots=snaps,
                          final_state=y)


def steady_state(traj, slope_tol=1e-3, dwell=2.0):
    """Locate the flat phase of ĉ1(tau).

    Returns (tau_star, c1_star, window_end): onset, plateau value averaged
    over the middle 50% of the flat window, and the window's end.
    """
    tau, c1 = traj.tau, traj.c1_hat
    if tau.size < 3:
        raise PlateauNotFound("trajectory too short")
    slope = np.gradient(c1, tau)
    ok = np.abs(slope) < slope_tol
    best_i, best_j = 0, -1
    i = 0
    n = ok.size
    while i < n:
        if ok[i]:
            j = i
            while j + 1 < n and ok[j + 1]:
                j += 1
            if j - i > best_j - best_i:
                best_i, best_j = i, j
            i = j + 1
        else:
            i += 1
    if best_j < 0 or tau[best_j] - tau[best_i] < dwell:
        raise PlateauNotFound(
            f"no flat window of length >= {dwell} at slope tolerance {slope_tol} "
            f"(eps={traj.eps}, L={traj.L}; eps too close to threshold or L too small)")
    t0, t1 = tau[best_i], tau[best_j]
    quarter = (t1 - t0) / 4.0
    mid = (tau >= t0 + quarter) & (tau <= t1 - quarter)
    return float(t0), float(c1[mid].mean()), float(t1)


@dataclass
class ThresholdResult:
    epsilon_star: float
    lo: float
    hi: float
    probes: list

    @property
    def bracket_width(self):
        return self.hi - self.lo


def find_threshold(spec, tol=5e-4, bracket=(0.0, 0.5), step=1e-3):
    """Bisect the survival of ĉ1 over the erasure probability."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    model = mean_model(spec)
    probes = []

    def survives(eps):
        traj = integrate(model, eps, step=step, record_every=50)
        probes.append((eps, traj.survived, traj.halt_reason))
        return traj.survived

    lo, hi = bracket
    if not survives(lo):
        raise ThresholdBracketError(f"decoder already fails at eps={lo}")
    if survives(hi):
        raise ThresholdBracketError(f"decoder still succeeds at eps={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if survives(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(epsilon_star=0.5 * (lo + hi), lo=lo, hi=hi, probes=probes)


@dataclass
class GammaFit:
    gamma: float
    residual_rel: float
    deltas: np.ndarray
    c1_stars: np.ndarray
    tau_stars: np.ndarray


def estimate_gamma(spec, epsilon_star, deltas=(0.01, 0.02, 0.03, 0.04, 0.05),
                   step=1e-3, fit_tol=0.05):
    """Slope of the plateau height against the gap to threshold.

    Least squares through the origin over the probe gaps; raises
    GammaFitError when the relative fit residual exceeds `fit_tol`.
    """
    model = mean_model(spec)
    deltas = np.asarray(sorted(deltas), dtype=float)
    c1s, taus = [], []
    for d in deltas:
        traj = integrate(model, epsilon_star - d, step=step)
        tau_star, c1_star, _ = steady_state(traj)
        c1s.append(c1_star)
        taus.append(tau_star)
    c1s = np.array(c1s)
    taus = np.array(taus)
    gamma = float(np.dot(c1s, deltas) / np.dot(deltas, deltas))
    residual = float(np.sqrt(np.mean((c1s - gamma * deltas) ** 2)) / c1s.mean())
    if residual > fit_tol:
        raise GammaFitError(
            f"plateau heights are not linear in the threshold gap "
            f"(relative residual {residual:.3g} > {fit_tol})")
    return GammaFit(gamma=gamma, residual_rel=residual, deltas=deltas,
                    c1_stars=c1s, tau_stars=taus)
