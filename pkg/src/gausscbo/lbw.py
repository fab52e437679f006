"""Linearized Bures-Wasserstein parametrization.

A Gaussian N(m, Sigma) is represented, relative to a fixed SPD reference
Sigma0, by the pair (m, T) with Sigma = bw_exp(Sigma0, T). The pair lives in
the flat space R^d x Sym_d with inner product

    <(m1, T1), (m2, T2)> = m1 . m2 + tr(T1 Sigma0 T2),

so barycenters and geodesics are plain linear algebra on coefficients.

The module owns the orthonormal tangent basis for tr(. Sigma0 .), coordinate
transforms, the coefficient-wise product, standard-normal tangent sampling,
the LOT distance, and rebasing onto a new reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bw import GaussianMeasure, bw_exp, bw_log
from .errors import InvalidInputError, NotSpdError
from .matrices import check_square_symmetric, clip_min_eig, eig_scale, sym_eigen, symmetrize

_GRAM_TOL = 1e-10


@dataclass(frozen=True)
class LbwBase:
    """Reference covariance with its eigendecomposition and tangent basis.

    Immutable after construction; safe to share across threads.

    basis has shape (D, d, d) with D = d(d+1)/2, ordered as the d diagonal
    elements (ascending index) followed by the off-diagonal pairs (i, j),
    i < j, in lexicographic order. This ordering fixes the meaning of
    coordinate vectors and makes serialized noise reproducible.
    """

    sigma0: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.sigma0.shape[0]

    @property
    def tangent_dim(self) -> int:
        return self.basis.shape[0]


@dataclass(frozen=True)
class LbwPoint:
    """A Gaussian in LBW coordinates: mean m and unconstrained tangent T."""

    m: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float).reshape(-1))
        object.__setattr__(self, "t", symmetrize(np.asarray(self.t, dtype=float)))


def make_base(sigma0: np.ndarray) -> LbwBase:
    """Build the orthonormal tangent basis for an SPD reference covariance.

    With Sigma0 = Q diag(lam) Q^T the elements are
        Q (e_i e_i^T) Q^T / sqrt(lam_i)                  on the diagonal,
        Q (e_i e_j^T + e_j e_i^T) Q^T / sqrt(lam_i + lam_j), i < j
    (for Sigma0 = I the off-diagonal element reduces to the familiar
    symmetric pair over sqrt(2)). Orthonormality of the resulting Gram
    matrix is verified at construction.
    """
    sigma0 = check_square_symmetric(sigma0, "sigma0")
    w, q = sym_eigen(sigma0)
    if w[0] <= 1e-12 * eig_scale(w):
        raise NotSpdError(f"sigma0 must be SPD (min eig {w[0]:.3e})")
    d = sigma0.shape[0]
    elems = []
    for i in range(d):
        qi = q[:, i]
        elems.append(np.outer(qi, qi) / np.sqrt(w[i]))
    for i in range(d):
        for j in range(i + 1, d):
            qi, qj = q[:, i], q[:, j]
            e = np.outer(qi, qj) + np.outer(qj, qi)
            elems.append(e / np.sqrt(w[i] + w[j]))
    basis = np.stack(elems)
    gram = np.einsum("aij,jk,bki->ab", basis, sigma0, basis)
    if np.abs(gram - np.eye(len(elems))).max() > _GRAM_TOL:
        raise NotSpdError("tangent basis failed the orthonormality check")
    base = LbwBase(sigma0=sigma0, eigvals=w, eigvecs=q, basis=basis)
    base.sigma0.setflags(write=False)
    base.basis.setflags(write=False)
    return base


def coords(t: np.ndarray, base: LbwBase) -> np.ndarray:
    """Coefficients of a symmetric matrix in the orthonormal tangent basis."""
    t = symmetrize(np.asarray(t, dtype=float))
    return np.einsum("ij,aji->a", t @ base.sigma0, base.basis)


def from_coords(c: np.ndarray, base: LbwBase) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (base.tangent_dim,):
        raise InvalidInputError(
            f"expected {base.tangent_dim} coefficients, got shape {c.shape}")
    return symmetrize(np.einsum("a,aij->ij", c, base.basis))


def hadamard(a: np.ndarray, b: np.ndarray, base: LbwBase) -> np.ndarray:
    """Coefficient-wise product of two symmetric matrices in the basis."""
    return from_coords(coords(a, base) * coords(b, base), base)


def lbw_inner(a: LbwPoint, b: LbwPoint, base: LbwBase) -> float:
    if a.m.shape != b.m.shape or a.m.shape[0] != base.dim:
        raise InvalidInputError("dimension mismatch in lbw_inner")
    return float(a.m @ b.m + np.trace(a.t @ base.sigma0 @ b.t))


def lbw_norm(p: LbwPoint, base: LbwBase) -> float:
    return float(np.sqrt(max(lbw_inner(p, p, base), 0.0)))


def lbw_barycenter(points: list[LbwPoint], weights) -> LbwPoint:
    """Exact weighted arithmetic mean in (m, T)."""
    weights = np.asarray(weights, dtype=float)
    if len(points) == 0 or weights.shape != (len(points),):
        raise InvalidInputError("points and weights must be non-empty and matching")
    m = sum(w * p.m for w, p in zip(weights, points))
    t = sum(w * p.t for w, p in zip(weights, points))
    return LbwPoint(m, t)


def lbw_geodesic(a: LbwPoint, b: LbwPoint, tau: float) -> LbwPoint:
    if not (0.0 <= tau <= 1.0):
        raise InvalidInputError(f"tau must lie in [0, 1], got {tau}")
    return LbwPoint((1.0 - tau) * a.m + tau * b.m, (1.0 - tau) * a.t + tau * b.t)


def to_gaussian(p: LbwPoint, base: LbwBase) -> GaussianMeasure:
    return GaussianMeasure(p.m, bw_exp(base.sigma0, p.t))


def from_gaussian(g: GaussianMeasure, base: LbwBase) -> LbwPoint:
    return LbwPoint(g.mean, bw_log(base.sigma0, g.cov))


def lot_distance(a: GaussianMeasure, b: GaussianMeasure, base: LbwBase) -> float:
    """LOT distance: Euclidean distance of the LBW representations.

    Upper-bounds the BW distance (the two OT maps from the reference form an
    admissible coupling).
    """
    pa, pb = from_gaussian(a, base), from_gaussian(b, base)
    diff = LbwPoint(pa.m - pb.m, pa.t - pb.t)
    return lbw_norm(diff, base)


def sample_std_sym(base: LbwBase, rng: np.random.Generator) -> np.ndarray:
    """A symmetric matrix whose basis coefficients are i.i.d. N(0, 1).

    Draw Xi with i.i.d. N(0,1) entries, symmetrize B = (Xi + Xi^T)/2 (whose
    coefficients on the identity-reference basis are i.i.d. standard normal),
    rescale in the eigenframe — 1/sqrt(lam_i) on the diagonal and
    sqrt(2)/sqrt(lam_i + lam_j) off it, matching the basis normalization —
    and rotate back by Q . Q^T.
    """
    d = base.dim
    xi = rng.standard_normal((d, d))
    b = 0.5 * (xi + xi.T)
    lam = base.eigvals
    scale = np.sqrt(2.0) / np.sqrt(lam[:, None] + lam[None, :])
    np.fill_diagonal(scale, 1.0 / np.sqrt(lam))
    bt = b * scale
    q = base.eigvecs
    return symmetrize(q @ bt @ q.T)


def rebase(points: list[LbwPoint], old: LbwBase,
           new_sigma0: np.ndarray) -> tuple[LbwBase, list[LbwPoint], int]:
    """Re-express points relative to a new SPD reference, preserving their
    Gaussian images.

    A point whose image covariance is numerically singular (min eigenvalue
    below 1e-10) is eigenvalue-floored at 1e-8 before the log map rather than
    erroring; the returned count of such repairs goes into run diagnostics.
    """
    new_base = make_base(new_sigma0)
    out = []
    n_clipped = 0
    for p in points:
        img = bw_exp(old.sigma0, p.t)
        if np.linalg.eigvalsh(img)[0] < 1e-10:
            img = clip_min_eig(img, 1e-8)
            n_clipped += 1
        out.append(LbwPoint(p.m, bw_log(new_sigma0, img)))
    return new_base, out, n_clipped
