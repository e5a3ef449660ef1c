"""Dense small-matrix linear algebra.

Orthonormalization, symmetric eigendecomposition (cyclic Jacobi),
finite-difference Jacobians and Morse-index classification. Everything
here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DegenerateInput

#: Largest matrix dimension accepted by the dense eigensolver.
DENSE_EIGEN_LIMIT = 512

_ORTHO_TOL = 1e-10
_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class DirectionFrame:
    """An ordered set of k orthonormal vectors in R^N, stored as rows.

    k = 0 (empty frame) is permitted; the saddle-dynamics stepper then
    degenerates to plain gradient flow.
    """

    vectors: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", v)
        k, n = v.shape
        if k > n:
            raise ValueError(f"frame has {k} vectors in dimension {n}")
        if k:
            gram = v @ v.T
            if np.max(np.abs(gram - np.eye(k))) > _ORTHO_TOL:
                raise ValueError("frame vectors are not orthonormal")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def __iter__(self):
        return iter(self.vectors)

    def take(self, k: int) -> "DirectionFrame":
        """First k vectors as a new frame."""
        return DirectionFrame(self.vectors[:k].copy())

    @staticmethod
    def empty(dim: int) -> "DirectionFrame":
        return DirectionFrame(np.zeros((0, dim)))


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order with aligned orthonormal eigenvectors.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def symmetrize(a) -> np.ndarray:
    """Return (A + A^T)/2, exactly symmetric entrywise."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2.0


def gram_schmidt(vectors) -> DirectionFrame:
    """Orthonormalize vectors by modified Gram-Schmidt with reorthogonalization.

    The i-th output keeps the orientation of the i-th input: it has positive
    inner product with the input after projections onto earlier outputs are
    removed, so no sign flips occur between runs.

    Raises
    ------
    DegenerateInput
        If a residual norm falls below 1e-12 during orthogonalization.
    """
    a = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, n = a.shape
    if k > n:
        raise ValueError(f"{k} vectors cannot be independent in dimension {n}")
    q = np.empty((k, n))
    for i in range(k):
        r = a[i].copy()
        # two projection passes keep Q^T Q - I at machine precision
        for _ in range(2):
            for j in range(i):
                r -= (q[j] @ r) * q[j]
        norm = np.linalg.norm(r)
        if norm < _RESIDUAL_TOL:
            raise DegenerateInput(
                f"vector {i} is linearly dependent on its predecessors "
                f"(residual norm {norm:.3e})"
            )
        q[i] = r / norm
    return DirectionFrame(q)


def sym_eigen(a, max_sweeps: int = 64, dense_limit: int = DENSE_EIGEN_LIMIT) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Robust and accurate for the small dense matrices used throughout
    (N up to a few hundred).

    Raises
    ------
    ConvergenceFailure
        If the off-diagonal norm has not collapsed after ``max_sweeps`` sweeps.
    """
    a = symmetrize(a)
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if n > dense_limit:
        raise ValueError(f"dimension {n} exceeds dense limit {dense_limit}")
    if n == 1:
        return EigenDecomposition(a[0].copy(), np.ones((1, 1)))

    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a, "fro")))
    stop = 1e-14 * scale
    skip = stop / (n * n)
    def off_norm(mat):
        strict = mat.copy()
        np.fill_diagonal(strict, 0.0)
        return float(np.linalg.norm(strict))

    converged = False
    for _ in range(max_sweeps):
        off = off_norm(a)
        if off <= stop:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) if tau != 0 else 1.0
                t = t / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged:
        if off_norm(a) > stop:
            raise ConvergenceFailure(f"Jacobi sweeps exceeded {max_sweeps}")

    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    return EigenDecomposition(lam[order], v[:, order])


def fd_jacobian_sym(force, x, step: float) -> np.ndarray:
    """Symmetrized central-difference Jacobian of the force at x.

    Consumes exactly 2N force queries. ``force`` may be a ForceOracle
    (counted) or any callable R^N -> R^N.
    """
    fn = force.evaluate if hasattr(force, "evaluate") else force
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise ValueError("step must be positive")
    n = x.size
    jac = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        jac[:, i] = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * step)
    return symmetrize(jac)


def morse_index(eig: EigenDecomposition, zero_tol: float) -> tuple[int, int]:
    """Count unstable and near-degenerate directions.

    For H = grad F at a stationary point (H = -hessian of the energy for
    gradient systems) the unstable directions of the energy are the
    POSITIVE eigenvalues of H.

    Returns (index, degenerate_count).
    """
    lam = np.asarray(eig.eigenvalues)
    index = int(np.count_nonzero(lam > zero_tol))
    degenerate = int(np.count_nonzero(np.abs(lam) <= zero_tol))
    return index, degenerate


def default_zero_tol(eig: EigenDecomposition) -> float:
    """Classification tolerance: 1e-6 times max(1, spectral radius)."""
    lam = np.asarray(eig.eigenvalues)
    radius = float(np.max(np.abs(lam))) if lam.size else 0.0
    return 1e-6 * max(1.0, radius)
