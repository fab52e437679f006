"""Objective functionals on Gaussian measures.

Gaussian-mixture targets, the log-entropy (plain and eigenvalue-clipped),
sigma-point cubature for potential expectations, a Monte Carlo estimator for
pairwise interaction energies, the KL objective against a mixture target, and
its finite-dimensional wrapper on LBW points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .bw import GaussianMeasure
from .errors import InvalidInputError, NotSpdError
from .lbw import LbwBase, LbwPoint, to_gaussian
from .matrices import check_square_symmetric, clip_min_eig, eig_scale, sym_sqrt

# Relative threshold below which a covariance counts as singular (entropy
# infinite, cap branch in the KL objective).
SINGULAR_REL_TOL = 1e-12


@dataclass(frozen=True)
class TargetModel:
    """Gaussian mixture sum_k w_k N(m_k, S_k) with cached Cholesky factors."""

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    log_norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        if covs.ndim == 2:
            covs = covs[None]
        k, d = means.shape
        if w.shape != (k,) or covs.shape != (k, d, d):
            raise InvalidInputError("inconsistent mixture shapes")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError("mixture weights must be positive and sum to 1")
        chol = np.empty_like(covs)
        log_norm = np.empty(k)
        for i in range(k):
            covs[i] = check_square_symmetric(covs[i], f"cov[{i}]")
            try:
                chol[i] = np.linalg.cholesky(covs[i])
            except np.linalg.LinAlgError as exc:
                raise NotSpdError(f"mixture component {i} covariance is not SPD") from exc
            log_norm[i] = -0.5 * d * math.log(2 * math.pi) - np.log(np.diag(chol[i])).sum()
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "log_norm", log_norm)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]


def gmm_logpdf(t: TargetModel, x: np.ndarray) -> np.ndarray | float:
    """log density of the mixture at x; accepts a single point or a batch (n, d).

    Computed per component via Cholesky solves and combined with log-sum-exp,
    so it stays finite for any finite x.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x contains non-finite entries")
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != t.dim:
        raise InvalidInputError(f"expected dim {t.dim}, got {pts.shape[1]}")
    comp = np.empty((t.n_components, pts.shape[0]))
    for k in range(t.n_components):
        z = solve_triangular(t.chol[k], (pts - t.means[k]).T, lower=True)
        comp[k] = t.log_norm[k] - 0.5 * np.sum(z * z, axis=0)
    out = logsumexp(comp + np.log(t.weights)[:, None], axis=0)
    return float(out[0]) if single else out


def gmm_grad_hess(t: TargetModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of V = -log(mixture density) at a single point.

    With responsibilities r_k and u_k = S_k^{-1}(x - m_k):
        grad V = sum_k r_k u_k
        hess V = sum_k r_k (S_k^{-1} - u_k u_k^T) + (grad V)(grad V)^T.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    d = t.dim
    logc = np.empty(t.n_components)
    us = np.empty((t.n_components, d))
    precs = np.empty((t.n_components, d, d))
    for k in range(t.n_components):
        diff = x - t.means[k]
        z = solve_triangular(t.chol[k], diff, lower=True)
        u = solve_triangular(t.chol[k].T, z, lower=False)
        us[k] = u
        linv = solve_triangular(t.chol[k], np.eye(d), lower=True)
        precs[k] = linv.T @ linv
        logc[k] = math.log(t.weights[k]) + t.log_norm[k] - 0.5 * float(z @ z)
    r = np.exp(logc - logsumexp(logc))
    grad = r @ us
    hess = np.einsum("k,kij->ij", r, precs) - np.einsum("k,ki,kj->ij", r, us, us)
    hess += np.outer(grad, grad)
    return grad, 0.5 * (hess + hess.T)


@dataclass(frozen=True)
class CubatureRule:
    nodes: np.ndarray    # (2d+1, d)
    weights: np.ndarray  # (2d+1,)


def cubature(m: np.ndarray, cov: np.ndarray, kappa: float = 1.0) -> CubatureRule:
    """Sigma-point rule with 2d+1 nodes, exact for polynomials of degree <= 3.

    Center node m with weight kappa/(d+kappa); nodes m +- sqrt(d+kappa) L_i
    (L_i the columns of the symmetric square root of cov) with weights
    1/(2(d+kappa)).
    """
    m = np.asarray(m, dtype=float).reshape(-1)
    d = m.shape[0]
    root = sym_sqrt(cov)
    spread = math.sqrt(d + kappa) * root
    nodes = np.concatenate([m[None], m[None] + spread.T, m[None] - spread.T])
    weights = np.full(2 * d + 1, 1.0 / (2.0 * (d + kappa)))
    weights[0] = kappa / (d + kappa)
    return CubatureRule(nodes=nodes, weights=weights)


def expect_potential(mu: GaussianMeasure, v: Callable, kappa: float = 1.0) -> float:
    """Cubature approximation of int V dmu; V may be batched over (n, d)."""
    rule = cubature(mu.mean, mu.cov, kappa)
    vals = np.asarray(v(rule.nodes), dtype=float)
    if vals.shape != (rule.nodes.shape[0],):
        vals = np.array([float(v(x)) for x in rule.nodes])
    return float(rule.weights @ vals)


def expect_interaction(mu: GaussianMeasure, w: Callable, n: int,
                       rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the double integral of W under mu x mu.

    Returns (estimate, standard error) over n i.i.d. pairs.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    root = sym_sqrt(mu.cov)
    x = mu.mean + rng.standard_normal((n, mu.dim)) @ root
    y = mu.mean + rng.standard_normal((n, mu.dim)) @ root
    vals = np.asarray(w(x, y), dtype=float)
    if vals.shape != (n,):
        vals = np.array([float(w(a, b)) for a, b in zip(x, y)])
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return est, se


def gauss_entropy(mu: GaussianMeasure) -> float:
    """int log(mu) dmu = -(d/2) log(2 pi e) - (1/2) log det cov.

    Returns +inf for a (numerically) singular covariance; that is a
    legitimate value, not an error.
    """
    w = np.linalg.eigvalsh(mu.cov)
    if w[0] <= SINGULAR_REL_TOL * eig_scale(w):
        return math.inf
    d = mu.dim
    return -0.5 * d * math.log(2 * math.pi * math.e) - 0.5 * float(np.log(w).sum())


def gauss_entropy_clipped(mu: GaussianMeasure, eps: float) -> float:
    """Entropy after flooring the covariance eigenvalues at eps; always finite."""
    if not (eps > 0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    return gauss_entropy(GaussianMeasure(mu.mean, clip_min_eig(mu.cov, eps)))


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which functional to evaluate and its regularization knobs.

    kind 'kl_vs_target' needs `target`; 'potential_only' needs `potential`;
    'potential_plus_interaction' needs `potential` and `interaction`.
    clip_eps > 0 switches the entropy term to its clipped version (then the
    singular cap never triggers on the entropy); singular_cap is the value
    returned for a singular particle when clip_eps == 0.
    """

    kind: str = "kl_vs_target"
    target: Optional[TargetModel] = None
    clip_eps: float = 0.0
    singular_cap: float = 1e4
    kappa: float = 1.0
    mc_samples: int = 1000
    potential: Optional[Callable] = None
    interaction: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("kl_vs_target", "potential_only", "potential_plus_interaction"):
            raise InvalidInputError(f"unknown objective kind {self.kind!r}")
        if self.clip_eps < 0:
            raise InvalidInputError("clip_eps must be >= 0")
        if not math.isfinite(self.singular_cap):
            raise InvalidInputError("singular_cap must be finite")
        if self.kind == "kl_vs_target" and self.target is None:
            raise InvalidInputError("kl_vs_target requires a target model")


def kl_objective(mu: GaussianMeasure, spec: ObjectiveSpec) -> float:
    """KL(mu | target) = entropy term + cross-entropy term (cubature).

    With clip_eps == 0 a singular covariance short-circuits to the cap M;
    with clip_eps > 0 the clipped entropy keeps the value finite instead.
    """
    if spec.kind != "kl_vs_target":
        raise InvalidInputError("kl_objective requires kind='kl_vs_target'")
    if spec.clip_eps > 0:
        ent = gauss_entropy_clipped(mu, spec.clip_eps)
    else:
        ent = gauss_entropy(mu)
        if not math.isfinite(ent):
            return spec.singular_cap
    pot = expect_potential(mu, lambda x: -gmm_logpdf(spec.target, x), spec.kappa)
    val = ent + pot
    if not math.isfinite(val):
        return spec.singular_cap
    return val


def evaluate_objective(mu: GaussianMeasure, spec: ObjectiveSpec,
                       rng: Optional[np.random.Generator] = None) -> float:
    if spec.kind == "kl_vs_target":
        return kl_objective(mu, spec)
    val = expect_potential(mu, spec.potential, spec.kappa)
    if spec.kind == "potential_plus_interaction":
        if rng is None:
            rng = np.random.default_rng(0)
        val += expect_interaction(mu, spec.interaction, spec.mc_samples, rng)[0]
    return float(val)


def objective_sharp(p: LbwPoint, base: LbwBase, spec: ObjectiveSpec,
                    rng: Optional[np.random.Generator] = None) -> float:
    """The objective evaluated on the Gaussian image of an LBW point."""
    return evaluate_objective(to_gaussian(p, base), spec, rng)
