"""Spatially coupled LDPC ensembles on the binary erasure channel.

Construction of coupled protographs and their finite lifted codes,
peeling-decoder simulation, analytic mean evolution of the residual
degree distribution, fluctuation estimates, and the finite-length
scaling law for the waterfall word error rate.
"""

__version__ = "0.1.0"

from .degree_dist import (DDState, bec_initialize, dd_from_protograph, dd_to_csv,
                          deg1_total, edge_counts)
from .ensembles import EnsembleSpec
from .mean_evolution import (GammaFit, MeanTrajectory, ThresholdResult,
                             estimate_gamma, find_threshold, integrate, mean_model,
                             steady_state)
from .montecarlo import trajectory_batch, wer_point
from .peeling import ResidualGraph, Trajectory, extract_stopping_set, peel, transmit
from .protograph import (BaseProtograph, CoupledProtograph, build_base, couple,
                         design_rate, to_edge_list_text)
from .sampler import TannerGraph, lift, make_rng, sample_graph, sample_random, to_alist
from .scaling import ScalingParams, equivalent_M, log_mu0, mu0, predict_wer
from .variance import (CovarianceFit, Delta1Curve, OneStepPMF, delta1_proxy,
                       estimate_delta1, fit_theta, monte_carlo_delta1, one_step_pmf)
