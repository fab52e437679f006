"""Consensus-based optimization over Gaussian particles in LBW coordinates.

Each particle is an LBW point (m, T). Per step, a consensus point is formed
as the exponentially weighted average of the pre-step ensemble and every
particle drifts toward it while diffusing with amplitude proportional to its
distance from it (coefficient-wise by default). Time discretization is
Euler-Maruyama with step dt.

Every particle owns its own rng stream spawned up front from the run seed, so
trajectories are reproducible independently of any parallel scheduling.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .bw import GaussianMeasure, bw_exp, bw_log
from .errors import InvalidInputError
from .lbw import (
    LbwBase,
    LbwPoint,
    hadamard,
    lbw_norm,
    make_base,
    rebase,
    sample_std_sym,
    to_gaussian,
)
from .matrices import clip_min_eig, symmetrize
from .objectives import ObjectiveSpec, evaluate_objective, objective_sharp


@dataclass(frozen=True)
class CboParams:
    dt: float = 0.1
    lam: float = 1.0
    sigma: float = 5.0
    alpha: float = 1e4
    n_particles: int = 20
    n_steps: int = 100
    rebase_every: float = 0.0   # in time units; 0 = never rebase
    seed: int = 0
    anisotropic: bool = True
    jitter: float = 0.1

    def __post_init__(self):
        if self.dt <= 0 or self.lam <= 0 or self.alpha <= 0:
            raise InvalidInputError("dt, lam, alpha must be positive")
        if self.sigma < 0 or self.rebase_every < 0 or self.jitter < 0:
            raise InvalidInputError("sigma, rebase_every, jitter must be >= 0")
        if self.n_particles < 1 or self.n_steps < 0:
            raise InvalidInputError("need n_particles >= 1 and n_steps >= 0")


@dataclass
class Ensemble:
    """N particles, their shared base, rng streams, and cached objectives."""

    base: LbwBase
    points: list[LbwPoint]
    rngs: list[np.random.Generator]
    energies: np.ndarray
    frozen_total: int = 0
    rebase_clipped_total: int = 0

    @property
    def n(self) -> int:
        return len(self.points)

    def refresh_energies(self, spec: ObjectiveSpec) -> None:
        self.energies = np.array(
            [objective_sharp(p, self.base, spec) for p in self.points])


@dataclass
class StepRecord:
    step: int
    time: float
    consensus: LbwPoint
    energy_consensus: float
    min_energy: float
    median_energy: float
    variance: float
    frozen: int
    wall_clock: float


def init_ensemble(m0: np.ndarray, cov0: np.ndarray, params: CboParams,
                  base: LbwBase, spec: Optional[ObjectiveSpec] = None) -> Ensemble:
    """Particles jittered around (m0, log(cov0)): means get jitter * N(0, I)
    offsets, tangents get jitter times a mirrored-upper-triangle standard
    normal symmetric matrix."""
    m0 = np.asarray(m0, dtype=float).reshape(-1)
    t0 = bw_log(base.sigma0, cov0)
    root = np.random.SeedSequence(params.seed)
    children = root.spawn(params.n_particles + 1)
    init_rng = np.random.default_rng(children[0])
    points = []
    for _ in range(params.n_particles):
        m = m0 + params.jitter * init_rng.standard_normal(m0.shape[0])
        xi = init_rng.standard_normal((base.dim, base.dim))
        xi = np.triu(xi) + np.triu(xi, 1).T
        points.append(LbwPoint(m, t0 + params.jitter * xi))
    rngs = [np.random.default_rng(c) for c in children[1:]]
    e = Ensemble(base=base, points=points, rngs=rngs,
                 energies=np.zeros(params.n_particles))
    if spec is not None:
        e.refresh_energies(spec)
    return e


def consensus_point(e: Ensemble, alpha: float) -> LbwPoint:
    """Exponentially weighted ensemble average, computed in shifted log space.

    Weights exp(-alpha (E_i - min_j E_j)); the shift cancels exactly in the
    ratio and keeps alpha * cap products from underflowing.
    """
    if e.n == 0:
        raise InvalidInputError("empty ensemble")
    shifted = -alpha * (e.energies - e.energies.min())
    w = np.exp(shifted)
    w = w / w.sum()
    # Averaged in deviation form around the best particle so that a fully
    # degenerate ensemble yields that particle exactly (no round-off drift),
    # making all-equal ensembles exact fixed points of the dynamics.
    ref = e.points[int(np.argmin(e.energies))]
    m = ref.m + w @ np.stack([p.m - ref.m for p in e.points])
    t = ref.t + np.einsum("n,nij->ij", w, np.stack([p.t - ref.t for p in e.points]))
    return LbwPoint(m, t)


def ensemble_mean(e: Ensemble) -> LbwPoint:
    n = e.n
    m = sum(p.m for p in e.points) / n
    t = sum(p.t for p in e.points) / n
    return LbwPoint(m, t)


def ensemble_variance(e: Ensemble) -> float:
    """(1/N) sum_i ||z_i - zbar||^2 in the LBW norm (equal-weight mean)."""
    zbar = ensemble_mean(e)
    total = 0.0
    for p in e.points:
        diff = LbwPoint(p.m - zbar.m, p.t - zbar.t)
        total += lbw_norm(diff, e.base) ** 2
    return total / e.n


def cbo_step(e: Ensemble, params: CboParams, spec: ObjectiveSpec,
             step_index: int = 0) -> StepRecord:
    """One synchronous Euler-Maruyama step, in place.

    The consensus is computed once from the pre-step ensemble and shared by
    all particles. A particle whose update turns non-finite is frozen in
    place for the step and counted.
    """
    t_start = time.perf_counter()
    cons = consensus_point(e, params.alpha)
    dt, lam, sig = params.dt, params.lam, params.sigma
    sq = math.sqrt(dt)
    frozen = 0
    new_points = []
    for i, p in enumerate(e.points):
        rng = e.rngs[i]
        bm = rng.standard_normal(e.base.dim)
        bt = sample_std_sym(e.base, rng)
        dm = cons.m - p.m
        dtan = cons.t - p.t
        if params.anisotropic:
            noise_m = dm * bm
            noise_t = hadamard(dtan, bt, e.base)
        else:
            amp = lbw_norm(LbwPoint(dm, dtan), e.base)
            noise_m = amp * bm
            noise_t = amp * bt
        m_new = p.m + dt * lam * dm + sq * sig * noise_m
        t_new = p.t + dt * lam * dtan + sq * sig * noise_t
        if np.all(np.isfinite(m_new)) and np.all(np.isfinite(t_new)):
            new_points.append(LbwPoint(m_new, t_new))
        else:
            frozen += 1
            new_points.append(p)
    e.points = new_points
    e.frozen_total += frozen
    e.refresh_energies(spec)
    rec = StepRecord(
        step=step_index,
        time=step_index * dt,
        consensus=cons,
        energy_consensus=objective_sharp(cons, e.base, spec),
        min_energy=float(e.energies.min()),
        median_energy=float(np.median(e.energies)),
        variance=ensemble_variance(e),
        frozen=frozen,
        wall_clock=time.perf_counter() - t_start,
    )
    return rec


def run_cbo(params: CboParams, spec: ObjectiveSpec, m0: np.ndarray,
            cov0: np.ndarray, sigma0: Optional[np.ndarray] = None,
            ) -> tuple[list[StepRecord], GaussianMeasure]:
    """Run n_steps of the particle dynamics; the trajectory is the product.

    Rebasing (when rebase_every > 0) re-linearizes around the current
    consensus point every floor(rebase_every / dt) steps: the new reference
    covariance is the consensus image, eigenvalue-floored at 1e-8, and noise
    uses the new basis from the following step on.
    """
    m0 = np.asarray(m0, dtype=float).reshape(-1)
    if sigma0 is None:
        sigma0 = np.eye(m0.shape[0])
    base = make_base(sigma0)
    e = init_ensemble(m0, cov0, params, base, spec)
    rebase_stride = int(params.rebase_every / params.dt) if params.rebase_every > 0 else 0
    cons0 = consensus_point(e, params.alpha)
    records = [StepRecord(
        step=0, time=0.0, consensus=cons0,
        energy_consensus=objective_sharp(cons0, e.base, spec),
        min_energy=float(e.energies.min()),
        median_energy=float(np.median(e.energies)),
        variance=ensemble_variance(e), frozen=0, wall_clock=0.0)]
    for k in range(1, params.n_steps + 1):
        rec = cbo_step(e, params, spec, step_index=k)
        records.append(rec)
        if rebase_stride > 0 and k % rebase_stride == 0 and k < params.n_steps:
            cons = consensus_point(e, params.alpha)
            new_sigma0 = clip_min_eig(bw_exp(e.base.sigma0, cons.t), 1e-8)
            new_base, new_points, n_clipped = rebase(e.points, e.base, new_sigma0)
            e.base = new_base
            e.points = new_points
            e.rebase_clipped_total += n_clipped
            e.refresh_energies(spec)
    final_cons = consensus_point(e, params.alpha)
    return records, to_gaussian(final_cons, e.base)


def theorem_constants(e: Ensemble, params: CboParams, c_energy: float
                      ) -> tuple[float, float]:
    """Empirical plug-in estimates of the convergence constants (C1, C2).

    Uses the ensemble minimum for the objective lower bound and the shifted
    empirical L2 weight norm; c_energy is the caller-supplied bound on second
    derivatives of the objective. Diagnostics only, never gates a run.
    """
    alpha, lam, sig = params.alpha, params.lam, params.sigma
    shifted = -2.0 * alpha * (e.energies - e.energies.min())
    # (1/N) sum exp(-2 alpha (E_i - Emin)); exp(-alpha Emin)/||w|| = mean^{-1/2}
    log_mean = float(logsumexp(shifted) - math.log(e.n))
    ratio = math.exp(-0.5 * log_mean)
    c1 = 2.0 * lam - sig ** 2 - 2.0 * sig ** 2 * ratio
    if c1 <= 0:
        return c1, math.inf
    var0 = ensemble_variance(e)
    c2 = 2.0 * var0 * alpha * c_energy * (2.0 * lam + sig ** 2) * ratio / c1
    return c1, c2
