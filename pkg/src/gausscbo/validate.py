"""Self-contained invariant checks runnable from the CLI (`gausscbo validate`).

Each check returns quietly on success and raises AssertionError on failure;
`run_all` prints one line per check and reports the overall status. The
pytest suite is the authoritative gate; this is a quick field check that
needs no test files installed.
"""

from __future__ import annotations

import numpy as np

from .bw import GaussianMeasure, bw_distance, bw_exp, bw_inner, bw_log, bw_barycenter
from .cbo import CboParams, Ensemble, consensus_point, init_ensemble
from .lbw import LbwPoint, coords, lbw_norm, lot_distance, make_base, sample_std_sym
from .matrices import random_spd
from .objectives import ObjectiveSpec, TargetModel, expect_potential, kl_objective


def check_geometry_roundtrip():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        s, t = random_spd(d, rng), random_spd(d, rng)
        back = bw_exp(s, bw_log(s, t))
        assert np.linalg.norm(back - t) <= 1e-8 * np.linalg.norm(t)


def check_metric_consistency():
    rng = np.random.default_rng(12)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        s, t = random_spd(d, rng), random_spd(d, rng)
        a = GaussianMeasure(np.zeros(d), s)
        b = GaussianMeasure(np.zeros(d), t)
        dist = bw_distance(a, b)
        tan = bw_log(s, t)
        assert abs(dist ** 2 - bw_inner(tan, tan, s)) <= 1e-8 * max(dist ** 2, 1.0)
        base = make_base(np.eye(d))
        assert lot_distance(a, b, base) >= dist - 1e-10


def check_barycenter():
    rng = np.random.default_rng(13)
    for _ in range(20):
        d = int(rng.integers(2, 5))
        pts = [GaussianMeasure(rng.standard_normal(d), random_spd(d, rng))
               for _ in range(5)]
        w = rng.dirichlet(np.ones(5))
        res = bw_barycenter(pts, w, tol=1e-10, max_iter=500)
        assert res.residual <= 1e-8


def check_basis_orthonormality():
    rng = np.random.default_rng(14)
    for _ in range(50):
        d = int(rng.integers(1, 9))
        base = make_base(random_spd(d, rng))
        gram = np.einsum("aij,jk,bki->ab", base.basis, base.sigma0, base.basis)
        assert np.abs(gram - np.eye(base.tangent_dim)).max() <= 1e-10


def check_cubature():
    rng = np.random.default_rng(15)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        m = rng.standard_normal(d)
        cov = random_spd(d, rng)
        a = random_spd(d, rng)
        mu = GaussianMeasure(m, cov)
        got = expect_potential(mu, lambda x: np.einsum("ni,ij,nj->n", x, a, x))
        want = float(np.trace(a @ cov) + m @ a @ m)
        assert abs(got - want) <= 1e-9 * max(abs(want), 1.0)


def check_laplace_and_consensus():
    rng = np.random.default_rng(16)
    target = TargetModel(weights=[1.0], means=[[0.0, 0.0]], covs=[np.eye(2)])
    spec = ObjectiveSpec(target=target)
    base = make_base(np.eye(2))
    params = CboParams(n_particles=50, seed=3, jitter=1.0)
    e = init_ensemble(np.zeros(2), np.eye(2), params, base, spec)
    emin = e.energies.min()
    prev = np.inf
    for alpha in [1.0, 10.0, 100.0, 1e3, 1e4]:
        shifted = -alpha * (e.energies - emin)
        val = emin - (np.log(np.mean(np.exp(shifted)))) / alpha
        assert val <= prev + 1e-12
        assert emin - 1e-12 <= val <= emin + np.log(e.n) / alpha + 1e-12
        prev = val
    cons = consensus_point(e, 1e6)
    best = e.points[int(np.argmin(e.energies))]
    diff = LbwPoint(cons.m - best.m, cons.t - best.t)
    assert lbw_norm(diff, base) <= 1e-3


CHECKS = [
    check_geometry_roundtrip,
    check_metric_consistency,
    check_barycenter,
    check_basis_orthonormality,
    check_cubature,
    check_laplace_and_consensus,
]


def run_all(verbose: bool = True) -> bool:
    ok = True
    for fn in CHECKS:
        try:
            fn()
            status = "PASS"
        except AssertionError:
            status = "FAIL"
            ok = False
        if verbose:
            print(f"[{status}] {fn.__name__}")
    return ok
