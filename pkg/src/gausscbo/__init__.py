"""Gradient-free optimization over the space of Gaussian measures.

A consensus-based particle optimizer in a linearized Bures-Wasserstein
parametrization, a Bures-Wasserstein gradient-flow baseline, and a
reproducible benchmark harness for Gaussian variational inference targets.
"""

from .bw import GaussianMeasure, bw_barycenter, bw_distance, bw_exp, bw_geodesic, bw_log
from .cbo import CboParams, Ensemble, cbo_step, consensus_point, ensemble_variance, init_ensemble, run_cbo
from .gf import GfState, gf_step, run_gf
from .lbw import (
    LbwBase,
    LbwPoint,
    coords,
    from_coords,
    from_gaussian,
    hadamard,
    lbw_barycenter,
    lbw_geodesic,
    lbw_inner,
    lot_distance,
    make_base,
    rebase,
    sample_std_sym,
    to_gaussian,
)
from .objectives import (
    CubatureRule,
    ObjectiveSpec,
    TargetModel,
    cubature,
    expect_interaction,
    expect_potential,
    gauss_entropy,
    gauss_entropy_clipped,
    gmm_logpdf,
    kl_objective,
    objective_sharp,
)

__version__ = "0.1.0"
