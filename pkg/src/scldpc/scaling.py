"""Finite-length scaling law for the waterfall word error rate.

During the steady-state phase the degree-one fraction behaves like a
stationary Gauss-Markov process with mean gamma*(eps*-eps), variance
delta1/M and exponential covariance decay theta.  The word error
probability is the chance that this process hits zero before decoding
finishes; its mean survival time mu0 is the classic first-passage
integral, evaluated here in log space because the integrand overflows
long before realistic code sizes do.
"""

from dataclasses import dataclass
from math import inf, log, pi, sqrt

import numpy as np
from scipy.optimize import brentq

from ._util import fnum
from scipy.special import log_ndtr, logsumexp

ALPHA_CONVENTIONS = ("gaussian", "ratio")


@dataclass(frozen=True)
class ScalingParams:
    """Inputs of the survival-time integral for one ensemble."""

    epsilon_star: float
    gamma: float
    delta1_star: float
    theta: float
    tau_star: float

    def __post_init__(self):
        if not 0.0 < self.epsilon_star < 1.0:
            raise ValueError(f"epsilon_star must be in (0,1), got {self.epsilon_star}")
        for name in ("gamma", "delta1_star", "theta", "tau_star"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")

    def alpha(self, convention="gaussian"):
        """Scale turning sqrt(M)*(eps*-eps) into the normalized plateau height.

        "gaussian" uses sqrt(delta1)/gamma, making the integral limit the
        plateau mean over its standard deviation; "ratio" is the plain
        delta1/gamma form, kept behind this switch."""
        if convention not in ALPHA_CONVENTIONS:
            raise ValueError(f"unknown alpha convention {convention!r}")
        if convention == "gaussian":
            return sqrt(self.delta1_star) / self.gamma
        return self.delta1_star / self.gamma


def _log_integral_phi_expz2(b, rtol=1e-10):
    """log of integral_0^b Phi(z) exp(z^2/2) dz, adaptive panel Gauss-Legendre."""
    if b <= 0.0:
        return -inf
    nodes, weights = np.polynomial.legendre.leggauss(16)
    prev = None
    n_panels = max(4, int(b * 2))
    for _ in range(24):
        edges = np.linspace(0.0, b, n_panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * np.diff(edges)
        z = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        logw = np.log(np.repeat(half, nodes.size) * np.tile(weights, n_panels))
        logf = log_ndtr(z) + 0.5 * z * z
        val = float(logsumexp(logw + logf))
        if prev is not None and abs(val - prev) < rtol:
            return val
        prev = val
        n_panels *= 2
    return prev


def log_mu0(params, M, eps, convention="gaussian"):
    """log of the mean survival time; -inf at the threshold boundary."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    gap = params.epsilon_star - eps
    if gap < 0.0:
        raise ValueError(f"eps={eps} is above the threshold {params.epsilon_star}; "
                         "there is no steady-state phase")
    b = sqrt(M) * gap / params.alpha(convention)
    return 0.5 * log(2.0 * pi) - log(params.theta) + _log_integral_phi_expz2(b)


def mu0(params, M, eps, convention="gaussian"):
    """Mean survival time of the degree-one process (may overflow to inf)."""
    lm = log_mu0(params, M, eps, convention=convention)
    if lm == -inf:
        return 0.0
    if lm > 700.0:
        return inf
    return float(np.exp(lm))


def predict_wer(params, M, eps, L, convention="gaussian"):
    """Zero-crossing probability of the steady-state phase, Gauss-Markov model."""
    if eps >= params.epsilon_star:
        raise ValueError(f"eps={eps} must be below the threshold {params.epsilon_star}")
    width = eps * L - params.tau_star
    if width <= 0.0:
        raise ValueError(f"eps*L={eps * L} does not exceed tau_star={params.tau_star}; "
                         "no steady-state phase to survive")
    return float(-np.expm1(-np.exp(log(width) - log_mu0(params, M, eps, convention))))


def equivalent_M(params_a, params_b, M_b, eps_ref=0.45, rtol=1e-6,
                 convention="gaussian"):
    """Code size at which ensemble `a` matches ensemble `b`'s survival time.

    Solves mu0(a, M_a, eps_ref) = mu0(b, M_b, eps_ref) for M_a by monotone
    root finding on log M."""
    for p in (params_a, params_b):
        if eps_ref >= p.epsilon_star:
            raise ValueError(f"reference eps={eps_ref} is not below both thresholds")
    target = log_mu0(params_b, M_b, eps_ref, convention)

    def f(logm):
        return log_mu0(params_a, float(np.exp(logm)), eps_ref, convention) - target

    lo, hi = log(max(1.0, M_b / 100.0)), log(M_b * 100.0)
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise RuntimeError(
            f"survival times do not bracket a solution within M in "
            f"[{np.exp(lo):.0f}, {np.exp(hi):.0f}]")
    root = brentq(f, lo, hi, xtol=rtol)
    return float(np.exp(root))


def wer_curve_csv(params, Ms, eps_grid, L, convention="gaussian"):
    """`epsilon,M,L,mu0,p_star` rows for plotting predicted waterfalls."""
    lines = ["epsilon,M,L,mu0,p_star"]
    for M in Ms:
        for eps in eps_grid:
            lines.append(f"{fnum(eps)},{M},{L},{fnum(mu0(params, M, eps, convention))},"
                         f"{fnum(predict_wer(params, M, eps, L, convention))}")
    return "\n".join(lines) + "\n"
