"""Bures-Wasserstein gradient-flow baseline for KL minimization.

Explicit Euler on

    m'     = -E_mu[grad V]
    Sigma' = 2 I - (H Sigma + Sigma H),    H = E_mu[hess V],

with expectations taken by the same sigma-point cubature used by the CBO
objective, and grad/hess of the mixture potential in closed form. A step
that would push the covariance out of the SPD cone (eigenvalue floor 1e-10)
is rejected and retried with a halved sub-step; the nominal dt bookkeeping is
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bw import GaussianMeasure
from .errors import InstabilityError, InvalidInputError
from .matrices import symmetrize
from .objectives import ObjectiveSpec, cubature, gmm_grad_hess, kl_objective

_EIG_FLOOR = 1e-10
_MAX_REJECTS = 30


@dataclass
class GfState:
    mean: np.ndarray
    cov: np.ndarray
    dt: float

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = symmetrize(np.asarray(self.cov, dtype=float))
        if self.dt < 0:
            raise InvalidInputError("dt must be >= 0")


def _flow_update(state: GfState, spec: ObjectiveSpec) -> tuple[np.ndarray, np.ndarray]:
    """Drift (dm/dt, dSigma/dt) at the current state."""
    rule = cubature(state.mean, state.cov, spec.kappa)
    d = state.mean.shape[0]
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    for w, x in zip(rule.weights, rule.nodes):
        g, h = gmm_grad_hess(spec.target, x)
        grad += w * g
        hess += w * h
    dcov = 2.0 * np.eye(d) - (hess @ state.cov + state.cov @ hess)
    return -grad, symmetrize(dcov)


def gf_step(state: GfState, spec: ObjectiveSpec) -> GfState:
    """One explicit Euler step of nominal length state.dt.

    On SPD violation the step is re-integrated as smaller sub-steps (halving
    up to _MAX_REJECTS times); total elapsed time still equals state.dt.
    """
    if spec.target is None:
        raise InvalidInputError("gf_step requires a mixture target")
    if state.dt == 0:
        return GfState(state.mean.copy(), state.cov.copy(), state.dt)
    remaining = state.dt
    sub = state.dt
    mean, cov = state.mean, state.cov
    rejects = 0
    while remaining > 1e-15 * state.dt:
        dm, dc = _flow_update(GfState(mean, cov, sub), spec)
        h = min(sub, remaining)
        cand_cov = symmetrize(cov + h * dc)
        if np.linalg.eigvalsh(cand_cov)[0] < _EIG_FLOOR:
            rejects += 1
            if rejects > _MAX_REJECTS:
                raise InstabilityError(
                    "gradient-flow step rejected too many times",
                    state=GfState(mean, cov, state.dt))
            sub *= 0.5
            continue
        mean = mean + h * dm
        cov = cand_cov
        remaining -= h
    return GfState(mean, cov, state.dt)


def run_gf(spec: ObjectiveSpec, m0: np.ndarray, cov0: np.ndarray, dt: float,
           n_steps: int) -> tuple[list[dict], GaussianMeasure, bool]:
    """Run the baseline, recording KL each step via the shared objective.

    Returns (records, final measure, truncated). An instability terminates
    the trajectory early with truncated=True rather than raising.
    """
    state = GfState(np.asarray(m0, dtype=float), np.asarray(cov0, dtype=float), dt)
    records = [{"step": 0, "time": 0.0,
                "kl": kl_objective(GaussianMeasure(state.mean, state.cov), spec)}]
    truncated = False
    for k in range(1, n_steps + 1):
        try:
            state = gf_step(state, spec)
        except InstabilityError as exc:
            state = exc.state
            truncated = True
            break
        records.append({"step": k, "time": k * dt,
                        "kl": kl_objective(GaussianMeasure(state.mean, state.cov), spec)})
    return records, GaussianMeasure(state.mean, state.cov), truncated
