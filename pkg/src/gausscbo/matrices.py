"""Dense symmetric-matrix primitives.

Everything downstream (geometry, tangent bases, objectives) is built on the
three operations here: eigendecomposition, the symmetric square root, and
eigenvalue flooring. Matrices are plain float ndarrays; symmetry is enforced
by symmetrization at the boundaries.

Tolerances are relative to the largest-magnitude eigenvalue (with a floor of
1 so that near-zero matrices are judged on an absolute scale).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, NotPsdError

# Negative eigenvalues above this (relative) threshold are treated as
# round-off dust and clamped to zero; anything below is a genuine PSD
# violation and raises.
PSD_DUST_TOL = 1e-10


def check_finite(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return a


def symmetrize(a: np.ndarray) -> np.ndarray:
    """(A + A^T)/2 — kills round-off asymmetry."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def check_square_symmetric(a: np.ndarray, name: str = "matrix", tol: float = 1e-8) -> np.ndarray:
    a = check_finite(a, name)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise InvalidInputError(f"{name} is not symmetric")
    return symmetrize(a)


def eig_scale(eigvals: np.ndarray) -> float:
    """Reference scale for relative eigenvalue tolerances."""
    return max(1.0, float(np.abs(eigvals).max()))


def sym_eigen(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition S = Q diag(w) Q^T with eigenvalues ascending."""
    s = check_square_symmetric(s)
    w, q = np.linalg.eigh(s)
    return w, q


def sym_sqrt(s: np.ndarray) -> np.ndarray:
    """The PSD square root R with R @ R = S.

    Negative eigenvalue dust down to -PSD_DUST_TOL (relative) is clamped to
    zero; anything more negative raises NotPsdError.
    """
    w, q = sym_eigen(s)
    scale = eig_scale(w)
    if w[0] < -PSD_DUST_TOL * scale:
        raise NotPsdError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.maximum(w, 0.0)
    return symmetrize((q * np.sqrt(w)) @ q.T)


def clip_min_eig(s: np.ndarray, eps: float) -> np.ndarray:
    """Floor the eigenvalues of S at eps, keeping the eigenvectors.

    Note: floor, i.e. eigenvalues become max(lambda, eps), so the output
    always satisfies output >= eps * I.
    """
    if not (eps > 0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    w, q = sym_eigen(s)
    if w[0] >= eps:
        return symmetrize(s)
    w = np.maximum(w, eps)
    return symmetrize((q * w) @ q.T)


def min_eig(s: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(np.asarray(s, dtype=float)))[0])


def is_spd(s: np.ndarray, rel_tol: float = 1e-12) -> bool:
    w = np.linalg.eigvalsh(symmetrize(np.asarray(s, dtype=float)))
    return bool(w[0] > rel_tol * eig_scale(w))


def random_spd(d: int, rng: np.random.Generator,
               eig_low: float = 0.2, eig_high: float = 5.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues uniform in [eig_low, eig_high].

    The orthogonal factor is Haar-distributed (QR of a Gaussian matrix with
    sign-corrected R diagonal).
    """
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    lam = rng.uniform(eig_low, eig_high, size=d)
    return symmetrize((q * lam) @ q.T)
