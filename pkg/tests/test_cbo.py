"""Consensus-based particle dynamics: consensus, steps, runs, diagnostics."""

import math

import numpy as np
import pytest

from gausscbo.cbo import (
    CboParams,
    cbo_step,
    consensus_point,
    ensemble_variance,
    init_ensemble,
    run_cbo,
    theorem_constants,
)
from gausscbo.errors import InvalidInputError
from gausscbo.lbw import LbwPoint, lbw_norm, make_base
from gausscbo.objectives import ObjectiveSpec, TargetModel


def _spec(mean=(0.0, 0.0), cov=None):
    cov = np.eye(2) if cov is None else cov
    return ObjectiveSpec(target=TargetModel(weights=[1.0], means=[list(mean)], covs=[cov]))


def _ensemble(points, base, spec, params=None):
    params = params or CboParams(n_particles=len(points), jitter=0.0)
    e = init_ensemble(np.zeros(base.dim), base.sigma0, params, base, spec)
    e.points = list(points)
    e.refresh_energies(spec)
    return e


# -- params / init ----------------------------------------------------------

def test_params_validation():
    with pytest.raises(InvalidInputError):
        CboParams(dt=0.0)
    with pytest.raises(InvalidInputError):
        CboParams(lam=-1.0)
    with pytest.raises(InvalidInputError):
        CboParams(sigma=-0.1)
    with pytest.raises(InvalidInputError):
        CboParams(n_particles=0)


def test_init_jitter_zero_all_identical():
    base = make_base(np.eye(2))
    spec = _spec()
    cov0 = np.diag([4.0, 1.0])
    e = init_ensemble(np.array([1.0, -1.0]), cov0, CboParams(n_particles=5, jitter=0.0),
                      base, spec)
    from gausscbo.bw import bw_log
    t0 = bw_log(np.eye(2), cov0)
    for p in e.points:
        assert np.allclose(p.m, [1.0, -1.0])
        assert np.allclose(p.t, t0)


def test_init_tangent_centers_at_zero_when_cov0_is_reference():
    base = make_base(np.eye(2))
    e = init_ensemble(np.zeros(2), np.eye(2),
                      CboParams(n_particles=400, jitter=0.1, seed=5), base, _spec())
    ts = np.stack([p.t for p in e.points])
    assert np.abs(ts.mean(axis=0)).max() <= 0.02


def test_init_mean_spread_matches_jitter():
    base = make_base(np.eye(2))
    e = init_ensemble(np.zeros(2), np.eye(2),
                      CboParams(n_particles=2000, jitter=0.3, seed=6), base, _spec())
    ms = np.stack([p.m for p in e.points])
    assert np.abs(ms.std(axis=0) - 0.3).max() <= 0.02


# -- consensus --------------------------------------------------------------

def test_consensus_all_identical():
    base = make_base(np.eye(2))
    p = LbwPoint(np.array([1.0, 2.0]), np.diag([0.1, -0.1]))
    e = _ensemble([p] * 4, base, _spec())
    c = consensus_point(e, 1e4)
    assert np.allclose(c.m, p.m) and np.allclose(c.t, p.t)


def test_consensus_alpha_zero_is_mean():
    rng = np.random.default_rng(0)
    base = make_base(np.eye(2))
    pts = [LbwPoint(rng.standard_normal(2), 0.1 * np.diag(rng.standard_normal(2)))
           for _ in range(6)]
    e = _ensemble(pts, base, _spec())
    c = consensus_point(e, 1e-300)  # alpha -> 0 limit: equal weights
    assert np.allclose(c.m, np.mean([p.m for p in pts], axis=0), atol=1e-10)
    assert np.allclose(c.t, np.mean([p.t for p in pts], axis=0), atol=1e-10)


def test_consensus_large_alpha_is_argmin():
    rng = np.random.default_rng(1)
    base = make_base(np.eye(2))
    spec = _spec()
    for seed in range(20):
        params = CboParams(n_particles=10, jitter=1.0, seed=seed)
        e = init_ensemble(rng.standard_normal(2), np.eye(2), params, base, spec)
        c = consensus_point(e, 1e6)
        best = e.points[int(np.argmin(e.energies))]
        assert lbw_norm(LbwPoint(c.m - best.m, c.t - best.t), base) <= 1e-3


def test_consensus_shift_invariance():
    rng = np.random.default_rng(2)
    base = make_base(np.eye(2))
    pts = [LbwPoint(rng.standard_normal(2), 0.1 * np.diag(rng.standard_normal(2)))
           for _ in range(8)]
    e = _ensemble(pts, base, _spec())
    c1 = consensus_point(e, 1e4)
    e.energies = e.energies + 123.456
    c2 = consensus_point(e, 1e4)
    assert np.abs(c1.m - c2.m).max() <= 1e-12
    assert np.abs(c1.t - c2.t).max() <= 1e-12


def test_laplace_value_monotone_toward_minimum():
    base = make_base(np.eye(2))
    spec = _spec()
    e = init_ensemble(np.zeros(2), np.eye(2),
                      CboParams(n_particles=50, jitter=1.0, seed=3), base, spec)
    emin = float(e.energies.min())
    prev = np.inf
    for alpha in (1.0, 10.0, 100.0, 1e3, 1e4):
        val = emin - math.log(np.mean(np.exp(-alpha * (e.energies - emin)))) / alpha
        assert val <= prev + 1e-12
        assert emin - 1e-12 <= val <= emin + math.log(e.n) / alpha + 1e-12
        prev = val


# -- variance ---------------------------------------------------------------

def test_variance_examples():
    base = make_base(np.eye(2))
    p = LbwPoint(np.array([1.0, 1.0]), np.zeros((2, 2)))
    assert ensemble_variance(_ensemble([p] * 3, base, _spec())) == 0.0
    a = LbwPoint(np.array([-1.0, 0.0]), np.zeros((2, 2)))
    b = LbwPoint(np.array([1.0, 0.0]), np.zeros((2, 2)))
    assert abs(ensemble_variance(_ensemble([a, b], base, _spec())) - 1.0) <= 1e-12
    # translation invariance
    off = np.array([3.0, -2.0])
    a2 = LbwPoint(a.m + off, a.t)
    b2 = LbwPoint(b.m + off, b.t)
    assert abs(ensemble_variance(_ensemble([a2, b2], base, _spec())) - 1.0) <= 1e-12


def test_variance_equals_pairwise_half_sum():
    rng = np.random.default_rng(4)
    base = make_base(np.eye(2))
    pts = [LbwPoint(rng.standard_normal(2), 0.2 * np.diag(rng.standard_normal(2)))
           for _ in range(7)]
    e = _ensemble(pts, base, _spec())
    v = ensemble_variance(e)
    n = len(pts)
    acc = 0.0
    for p in pts:
        for q in pts:
            acc += lbw_norm(LbwPoint(p.m - q.m, p.t - q.t), base) ** 2
    assert abs(v - 0.5 * acc / n ** 2) <= 1e-10 * max(1.0, v)


# -- single steps -----------------------------------------------------------

def test_single_particle_sigma_zero_stationary():
    base = make_base(np.eye(2))
    spec = _spec()
    p = LbwPoint(np.array([2.0, -1.0]), np.diag([0.3, 0.1]))
    e = _ensemble([p], base, spec, CboParams(n_particles=1, sigma=0.0, jitter=0.0))
    cbo_step(e, CboParams(n_particles=1, sigma=0.0, jitter=0.0), spec)
    assert np.allclose(e.points[0].m, p.m) and np.allclose(e.points[0].t, p.t)


def test_two_particle_sigma_zero_contraction():
    # symmetric particles with equal objectives: consensus is the midpoint and
    # each distance-to-consensus contracts by exactly 1 - dt*lam = 0.9
    base = make_base(np.eye(2))
    spec = _spec()
    a = LbwPoint(np.array([-2.0, 0.0]), np.zeros((2, 2)))
    b = LbwPoint(np.array([2.0, 0.0]), np.zeros((2, 2)))
    params = CboParams(n_particles=2, sigma=0.0, dt=0.1, lam=1.0, jitter=0.0)
    e = _ensemble([a, b], base, spec, params)
    assert abs(e.energies[0] - e.energies[1]) <= 1e-12
    # objectives agree only to round-off, so the exponential weights (and
    # hence the consensus) match the exact midpoint to ~alpha*ulp per step
    x = 2.0
    for _ in range(5):
        cbo_step(e, params, spec)
        x *= 0.9
        assert abs(e.points[0].m[0] + x) <= 1e-9
        assert abs(e.points[1].m[0] - x) <= 1e-9


def test_all_equal_ensemble_exact_fixed_point_any_sigma():
    base = make_base(np.eye(2))
    spec = _spec()
    p = LbwPoint(np.array([0.7, -0.3]), np.diag([0.2, -0.1]))
    params = CboParams(n_particles=5, sigma=50.0, jitter=0.0)
    e = _ensemble([p] * 5, base, spec, params)
    for _ in range(3):
        cbo_step(e, params, spec)
        for q in e.points:
            assert np.array_equal(q.m, p.m)
            assert np.array_equal(q.t, p.t)


# -- runs -------------------------------------------------------------------

def test_run_starts_at_time_zero_and_counts_steps():
    params = CboParams(n_particles=4, n_steps=7, seed=1)
    records, final = run_cbo(params, _spec(), np.zeros(2), np.eye(2))
    assert len(records) == 8
    assert records[0].step == 0 and records[0].time == 0.0
    assert abs(records[-1].time - 0.7) <= 1e-12


def test_run_fixed_point_at_optimum():
    params = CboParams(n_particles=1, n_steps=20, sigma=0.0, jitter=0.0, seed=0)
    records, final = run_cbo(params, _spec(), np.zeros(2), np.eye(2))
    kls = [r.energy_consensus for r in records]
    assert max(abs(v) for v in kls) <= 1e-8
    assert np.allclose(final.mean, 0.0, atol=1e-12)
    assert np.allclose(final.cov, np.eye(2), atol=1e-10)


def test_run_single_particle_constant_trajectory():
    params = CboParams(n_particles=1, n_steps=10, sigma=0.0, jitter=0.0, seed=0)
    records, final = run_cbo(params, _spec(), np.array([3.0, -2.0]), np.eye(2))
    assert np.allclose(final.mean, [3.0, -2.0])
    assert all(abs(r.energy_consensus - records[0].energy_consensus) <= 1e-12
               for r in records)


def test_run_deterministic_replay():
    params = CboParams(n_particles=6, n_steps=15, seed=42)
    r1, f1 = run_cbo(params, _spec(), np.array([1.0, 1.0]), np.eye(2))
    r2, f2 = run_cbo(params, _spec(), np.array([1.0, 1.0]), np.eye(2))
    for a, b in zip(r1, r2):
        assert a.energy_consensus == b.energy_consensus
        assert a.variance == b.variance
    assert np.array_equal(f1.mean, f2.mean) and np.array_equal(f1.cov, f2.cov)


def test_run_with_rebase_smoke_and_diagnostics():
    params = CboParams(n_particles=6, n_steps=20, seed=7, rebase_every=0.5)
    records, final = run_cbo(params, _spec(), np.array([2.0, 2.0]), np.eye(2))
    assert len(records) == 21
    assert np.isfinite(final.mean).all() and np.isfinite(final.cov).all()
    assert np.linalg.eigvalsh(final.cov)[0] > 0


def test_permutation_equivariance():
    """Reversing the particle index order (rng streams follow their particles)
    yields the same multiset of trajectories."""
    base = make_base(np.eye(2))
    spec = _spec()
    params = CboParams(n_particles=5, n_steps=10, seed=11)
    e1 = init_ensemble(np.array([1.0, 0.0]), np.eye(2), params, base, spec)
    e2 = init_ensemble(np.array([1.0, 0.0]), np.eye(2), params, base, spec)
    perm = list(reversed(range(5)))
    e2.points = [e2.points[i] for i in perm]
    e2.rngs = [e2.rngs[i] for i in perm]
    e2.refresh_energies(spec)
    for _ in range(10):
        cbo_step(e1, params, spec)
        cbo_step(e2, params, spec)
    for i, j in enumerate(perm):
        assert np.array_equal(e1.points[j].m, e2.points[i].m)
        assert np.array_equal(e1.points[j].t, e2.points[i].t)


# -- diagnostics ------------------------------------------------------------

def test_theorem_constants_sigma_zero():
    base = make_base(np.eye(2))
    spec = _spec()
    params = CboParams(n_particles=8, sigma=0.0, lam=1.0, seed=2)
    e = init_ensemble(np.zeros(2), np.eye(2), params, base, spec)
    c1, c2 = theorem_constants(e, params, c_energy=1.0)
    assert abs(c1 - 2.0) <= 1e-12
    assert np.isfinite(c2) and c2 >= 0.0


def test_theorem_constants_shift_invariance():
    base = make_base(np.eye(2))
    spec = _spec()
    params = CboParams(n_particles=8, sigma=0.5, lam=1.0, seed=2)
    e = init_ensemble(np.zeros(2), np.eye(2), params, base, spec)
    c1a, c2a = theorem_constants(e, params, c_energy=1.0)
    e.energies = e.energies + 77.0
    c1b, c2b = theorem_constants(e, params, c_energy=1.0)
    assert abs(c1a - c1b) <= 1e-9 * max(1.0, abs(c1a))
    # negative-C1 regime reports an infinite C2 rather than a spurious rate
    big = CboParams(n_particles=8, sigma=5.0, lam=1.0, seed=2)
    c1c, c2c = theorem_constants(e, big, c_energy=1.0)
    assert c1c < 0 and c2c == math.inf
