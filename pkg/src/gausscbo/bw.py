"""Bures-Wasserstein geometry on non-singular Gaussian measures.

Distance, exponential/logarithm maps, geodesics, and the fixed-point
barycenter. The exponential map is extended to arbitrary symmetric tangents,

    exp_S(T) = (I + T) S (I + T),

which lands in the PSD cone (possibly on its boundary); the log map requires
strictly positive definite inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NonConvergenceError, NotSpdError
from .matrices import (
    check_finite,
    check_square_symmetric,
    eig_scale,
    sym_eigen,
    sym_sqrt,
    symmetrize,
)

SPD_TOL = 1e-12


@dataclass(frozen=True)
class GaussianMeasure:
    """A Gaussian N(mean, cov); cov may be singular (PSD)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = check_finite(self.mean, "mean").reshape(-1)
        cov = check_square_symmetric(self.cov, "cov")
        if cov.shape[0] != mean.shape[0]:
            raise InvalidInputError(
                f"mean has dim {mean.shape[0]} but cov is {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def second_moment_sq(self) -> float:
        """|m|^2 + tr(cov)."""
        return float(self.mean @ self.mean + np.trace(self.cov))


def _spd_eigen(s: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    w, q = sym_eigen(s)
    if w[0] <= SPD_TOL * eig_scale(w):
        raise NotSpdError(f"{name} is singular or indefinite (min eig {w[0]:.3e})")
    return w, q


def bw_exp(base: np.ndarray, t: np.ndarray) -> np.ndarray:
    """(I + T) base (I + T), defined for every symmetric T; always PSD."""
    base = check_square_symmetric(base, "base")
    t = check_square_symmetric(t, "tangent")
    a = np.eye(base.shape[0]) + t
    return symmetrize(a @ base @ a)


def bw_log(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Tangent T at `base` with bw_exp(base, T) = target; requires SPD inputs.

    Evaluated in the symmetric similarity form
        T = B^{-1/2} (B^{1/2} target B^{1/2})^{1/2} B^{-1/2} - I
    (B = base) and symmetrized, which is stable where the textbook
    non-symmetric product target (base target)^{-1/2} is not.
    """
    w, q = _spd_eigen(base, "base")
    _spd_eigen(check_square_symmetric(target, "target"), "target")
    sq = (q * np.sqrt(w)) @ q.T
    isq = (q / np.sqrt(w)) @ q.T
    mid = sym_sqrt(symmetrize(sq @ target @ sq))
    t = isq @ mid @ isq - np.eye(base.shape[0])
    return symmetrize(t)


def bw_distance(a: GaussianMeasure, b: GaussianMeasure) -> float:
    """L2-Wasserstein distance between two Gaussians (PSD covariances)."""
    sa = sym_sqrt(a.cov)
    cross = sym_sqrt(symmetrize(sa @ b.cov @ sa))
    dm = a.mean - b.mean
    d2 = float(dm @ dm + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(d2, 0.0)))


def bw_inner(t: np.ndarray, s: np.ndarray, sigma: np.ndarray) -> float:
    """The metric tr(T Sigma S) on tangents at Sigma."""
    return float(np.trace(t @ sigma @ s))


def bw_geodesic(a: GaussianMeasure, b: GaussianMeasure, tau: float) -> GaussianMeasure:
    """Point at parameter tau on the BW geodesic from a to b (SPD covariances)."""
    if not (0.0 <= tau <= 1.0):
        raise InvalidInputError(f"tau must lie in [0, 1], got {tau}")
    if tau == 0.0:
        return a
    mean = (1.0 - tau) * a.mean + tau * b.mean
    amap = np.eye(a.dim) + bw_log(a.cov, b.cov)
    c = (1.0 - tau) * np.eye(a.dim) + tau * amap
    return GaussianMeasure(mean, symmetrize(c @ a.cov @ c))


@dataclass
class BarycenterResult:
    measure: GaussianMeasure
    residual: float
    iterations: int


def bw_barycenter(points: list[GaussianMeasure], weights,
                  tol: float = 1e-10, max_iter: int = 500) -> BarycenterResult:
    """Weighted BW barycenter via fixed-point iteration on the covariance.

    The mean is the exact weighted average. The covariance solves
        S = sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2}
    (equivalently: the weighted sum of the OT maps from S to the S_i is the
    identity, the first-order optimality condition of the Frechet functional)
    by the iteration
        S <- S^{-1/2} (sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2})^2 S^{-1/2},
    started from the weighted arithmetic mean of the covariances (a fixed
    point for commuting inputs). The reported residual is the relative
    fixed-point defect ||S - sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2}|| / ||S||.
    """
    weights = np.asarray(weights, dtype=float)
    if len(points) == 0 or weights.shape != (len(points),):
        raise InvalidInputError("points and weights must be non-empty and matching")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-10:
        raise InvalidInputError("weights must be nonnegative and sum to 1")
    mean = sum(w * p.mean for w, p in zip(weights, points))
    s = symmetrize(sum(w * p.cov for w, p in zip(weights, points)))
    residual = np.inf
    for it in range(1, max_iter + 1):
        w_eig, q = _spd_eigen(s, "barycenter iterate")
        root = (q * np.sqrt(w_eig)) @ q.T
        iroot = (q / np.sqrt(w_eig)) @ q.T
        mid = symmetrize(sum(
            w * sym_sqrt(symmetrize(root @ p.cov @ root))
            for w, p in zip(weights, points)))
        residual = float(np.linalg.norm(s - mid) / max(np.linalg.norm(s), 1e-300))
        if residual <= tol:
            return BarycenterResult(GaussianMeasure(mean, s), residual, it)
        s = symmetrize(iroot @ mid @ mid @ iroot)
    raise NonConvergenceError(
        f"barycenter fixed point did not converge in {max_iter} iterations "
        f"(residual {residual:.3e})", residual=residual)
