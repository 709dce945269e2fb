"""Differentials of mappings: operator norms, Jacobians, finite differences.

The operator norm |A| = sup_{|xi|=1} |A xi| is the largest singular value.
For n = 2 it comes from the closed-form eigenvalues of A^T A; for n >= 3
a one-sided cyclic Jacobi sweep is used (power iteration stalls on the
repeated singular values that the catalog's radial maps produce).

All kernels are pure and operate on batches of matrices, shape (m, n, n);
scalar entry points wrap the batch versions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .catalog import MappingSpec

from .geometry import OutsideDomainError

#: points closer than this to a declared singular point are refused
SINGULAR_EXCLUSION = 1e-6

_JACOBI_TOL = 1e-15
_MAX_SWEEPS = 60


class SingularPointError(ValueError):
    """Differential requested too close to a declared singular point."""


class NonFiniteMatrixError(ValueError):
    """Matrix entries are NaN or infinite."""


@dataclass(frozen=True)
class Provenance:
    kind: str  # "exact" | "finite_difference"
    step: float | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.step is not None:
            d["step"] = float(self.step)
        return d


@dataclass(frozen=True)
class DifferentialSample:
    """Differential data at one point: matrix, operator norm, Jacobian."""

    point: np.ndarray
    matrix: np.ndarray
    op_norm: float
    jacobian: float
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "point": [float(c) for c in self.point],
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "op_norm": float(self.op_norm),
            "jacobian": float(self.jacobian),
            "provenance": self.provenance.to_dict(),
        }


# -- operator norm ---------------------------------------------------------


def operator_norm(matrix) -> float:
    """Largest singular value of a square matrix."""
    A = _as_square(matrix)
    return float(batch_operator_norm(A[None])[0])


def batch_operator_norm(A: np.ndarray) -> np.ndarray:
    """Largest singular values for a stack of square matrices, shape (m, n, n)."""
    if not np.all(np.isfinite(A)):
        raise NonFiniteMatrixError("matrix entries must be finite")
    n = A.shape[-1]
    if n == 1:
        return np.abs(A[:, 0, 0])
    if n == 2:
        return _two_by_two_top_singular(A)
    return _jacobi_top_singular(A)


def _two_by_two_top_singular(A: np.ndarray) -> np.ndarray:
    # split into conformal + anticonformal parts: the singular values are
    # |q| + |r| and ||q| - |r||, which avoids the cancellation the naive
    # eigenvalue-discriminant formula suffers near repeated singular values
    a, b = A[:, 0, 0], A[:, 0, 1]
    c, d = A[:, 1, 0], A[:, 1, 1]
    q = np.hypot(0.5 * (a + d), 0.5 * (c - b))
    r = np.hypot(0.5 * (a - d), 0.5 * (c + b))
    return q + r


def _jacobi_top_singular(A: np.ndarray) -> np.ndarray:
    """One-sided cyclic Jacobi: rotate column pairs until mutually orthogonal."""
    B = np.array(A, dtype=float, copy=True)
    n = B.shape[-1]
    scale = np.maximum(np.abs(B).max(axis=(1, 2)), 1e-300)
    for _ in range(_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                bp, bq = B[:, :, p], B[:, :, q]
                app = np.einsum("ij,ij->i", bp, bp)
                aqq = np.einsum("ij,ij->i", bq, bq)
                apq = np.einsum("ij,ij->i", bp, bq)
                active = np.abs(apq) > _JACOBI_TOL * scale * scale
                if not np.any(active):
                    continue
                off = max(off, float((np.abs(apq) / (scale * scale)).max()))
                theta = 0.5 * np.arctan2(2.0 * apq, app - aqq)
                cs, sn = np.cos(theta), np.sin(theta)
                cs = np.where(active, cs, 1.0)
                sn = np.where(active, sn, 0.0)
                new_p = cs[:, None] * bp + sn[:, None] * bq
                new_q = -sn[:, None] * bp + cs[:, None] * bq
                B[:, :, p], B[:, :, q] = new_p, new_q
        if off <= _JACOBI_TOL:
            break
    norms = np.linalg.norm(B, axis=1)
    return norms.max(axis=1)


# -- determinants ----------------------------------------------------------


def jacobian_det(matrix) -> float:
    """Determinant: cofactor expansion for n <= 3, LU with partial pivoting above."""
    A = _as_square(matrix)
    return float(batch_jacobian_det(A[None])[0])


def batch_jacobian_det(A: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(A)):
        raise NonFiniteMatrixError("matrix entries must be finite")
    n = A.shape[-1]
    if n == 1:
        return A[:, 0, 0].copy()
    if n == 2:
        return A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    if n == 3:
        return (
            A[:, 0, 0] * (A[:, 1, 1] * A[:, 2, 2] - A[:, 1, 2] * A[:, 2, 1])
            - A[:, 0, 1] * (A[:, 1, 0] * A[:, 2, 2] - A[:, 1, 2] * A[:, 2, 0])
            + A[:, 0, 2] * (A[:, 1, 0] * A[:, 2, 1] - A[:, 1, 1] * A[:, 2, 0])
        )
    return np.linalg.det(A)


# -- finite differences ------------------------------------------------------


def default_fd_step(mapping: "MappingSpec", x: np.ndarray, base: float = 1e-5) -> float:
    """Central-difference step balancing truncation against roundoff.

    Away from singular points the step scales with max(1, |x|).  Near a
    declared singular point the local derivatives blow up like a power of
    the distance, so the step shrinks proportionally to that distance.
    """
    x = np.asarray(x, dtype=float)
    return float(default_fd_steps(mapping, x[None], base)[0])


def default_fd_steps(mapping: "MappingSpec", X: np.ndarray, base: float = 1e-5) -> np.ndarray:
    """Vector of default steps for a batch of points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    h = base * np.maximum(1.0, np.linalg.norm(X, axis=1))
    if mapping.singular_points.size:
        d_sing = np.linalg.norm(
            X[:, None, :] - mapping.singular_points[None, :, :], axis=2
        ).min(axis=1)
        h = np.minimum(h, base * d_sing)
    rho = mapping.domain.boundary_distance(X)
    return np.minimum(h, np.maximum(0.5 * rho, 1e-300))


def finite_difference_differential(mapping: "MappingSpec", x, step: float | None = None) -> np.ndarray:
    """Central-difference differential, column j = (f(x+h e_j) - f(x-h e_j)) / 2h."""
    x = np.asarray(x, dtype=float)
    _refuse_singular(mapping, x)
    h = default_fd_step(mapping, x) if step is None else float(step)
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    if mapping.domain.boundary_distance(x) < h * (1.0 - 1e-12):
        raise OutsideDomainError("finite-difference stencil leaves the domain")
    return _fd_batch(mapping, x[None], np.array([h]))[0]


def _fd_batch(mapping: "MappingSpec", X: np.ndarray, h: np.ndarray) -> np.ndarray:
    m, n = X.shape
    D = np.empty((m, n, n))
    for j in range(n):
        shift = np.zeros((1, n))
        shift[0, j] = 1.0
        fp = mapping.evaluate(X + h[:, None] * shift)
        fm = mapping.evaluate(X - h[:, None] * shift)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteMatrixError("mapping returned a non-finite value in the stencil")
        D[:, :, j] = (fp - fm) / (2.0 * h[:, None])
    return D


# -- sampling ----------------------------------------------------------------


def sample_differential(mapping: "MappingSpec", x, step: float | None = None) -> DifferentialSample:
    """Differential sample at one point: exact formula when available, else FD."""
    x = np.asarray(x, dtype=float)
    _refuse_singular(mapping, x)
    if not mapping.domain.contains(x):
        raise OutsideDomainError(f"point {x.tolist()} outside the mapping domain")
    if mapping.has_exact_differential:
        D = mapping.differential(x[None])[0]
        prov = Provenance("exact")
    else:
        h = default_fd_step(mapping, x) if step is None else float(step)
        D = finite_difference_differential(mapping, x, step=h)
        prov = Provenance("finite_difference", step=h)
    if not np.all(np.isfinite(D)):
        raise NonFiniteMatrixError("differential has non-finite entries")
    return DifferentialSample(
        point=x.copy(),
        matrix=D,
        op_norm=float(batch_operator_norm(D[None])[0]),
        jacobian=float(batch_jacobian_det(D[None])[0]),
        provenance=prov,
    )


def batch_differentials(
    mapping: "MappingSpec",
    X: np.ndarray,
    refuse_singular: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrices, operator norms and Jacobians at a batch of points.

    Quadrature kernels pass ``refuse_singular=False``: their nodes may sit
    arbitrarily close to a singular point, where the closed-form integrand
    is still well defined even though pointwise sampling is refused.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if refuse_singular:
        for x in _near_singular(mapping, X):
            raise SingularPointError(
                f"point {x.tolist()} within {SINGULAR_EXCLUSION} of a singular point"
            )
    if mapping.has_exact_differential:
        D = mapping.differential(X)
    else:
        D = _fd_batch(mapping, X, default_fd_steps(mapping, X))
    return D, batch_operator_norm(D), batch_jacobian_det(D)


def batch_finite_difference(
    mapping: "MappingSpec", X: np.ndarray, base: float = 1e-5
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-difference matrices, operator norms, Jacobians for a batch.

    Forces the central-difference path even when the mapping carries an
    exact differential, using the default step policy with the given base.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    for x in _near_singular(mapping, X):
        raise SingularPointError(
            f"point {x.tolist()} within {SINGULAR_EXCLUSION} of a singular point"
        )
    D = _fd_batch(mapping, X, default_fd_steps(mapping, X, base))
    return D, batch_operator_norm(D), batch_jacobian_det(D)


# -- helpers -----------------------------------------------------------------


def _as_square(matrix) -> np.ndarray:
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def _singular_distance(mapping: "MappingSpec", x: np.ndarray) -> float:
    if mapping.singular_points.size == 0:
        return math.inf
    return float(np.linalg.norm(mapping.singular_points - x, axis=1).min())


def _refuse_singular(mapping: "MappingSpec", x: np.ndarray) -> None:
    if _singular_distance(mapping, x) < SINGULAR_EXCLUSION:
        raise SingularPointError(
            f"point {x.tolist()} within {SINGULAR_EXCLUSION} of a singular point"
        )


def _near_singular(mapping: "MappingSpec", X: np.ndarray):
    if mapping.singular_points.size == 0:
        return []
    dists = np.linalg.norm(X[:, None, :] - mapping.singular_points[None, :, :], axis=2)
    mask = dists.min(axis=1) < SINGULAR_EXCLUSION
    return list(X[mask][:1])
