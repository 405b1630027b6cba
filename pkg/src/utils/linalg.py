"""
Dense linear algebra and elementary ML functions.
"""
import logging
from typing import Tuple

import numpy as np
from scipy.special import expit

from src.errors import ShapeError, ValidationError

logger = logging.getLogger(__name__)

BCE_EPS = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """
    Coerce input to a finite 2-D float array.

    Args:
        data: Array-like with two dimensions
        name: Name used in error messages

    Returns:
        Float64 array of shape (rows, cols)
    """
    matrix = np.asarray(data, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError(f"{name} contains non-finite entries")
    return matrix


def matmul(a, b) -> np.ndarray:
    """Matrix product with shape validation."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sym_eig(s, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        s: Square symmetric matrix
        tol: Stop once the off-diagonal Frobenius norm drops below this
        max_sweeps: Upper bound on full sweeps over the upper triangle

    Returns:
        (eigenvalues ascending, eigenvectors as columns)
    """
    a = as_matrix(s, "symmetric matrix").copy()
    n = a.shape[0]
    if a.shape[1] != n:
        raise ShapeError(f"eigenproblem needs a square matrix, got {a.shape}")
    if n and np.max(np.abs(a - a.T)) > 1e-10:
        raise ValidationError("matrix is not symmetric within 1e-10")

    a = 0.5 * (a + a.T)
    v = np.eye(n)

    for sweep in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            logger.debug(f"Jacobi converged after {sweep} sweeps (off={off:.3e})")
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sn * row_q
                a[q, :] = sn * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - sn * vec_q
                v[:, q] = sn * vec_p + c * vec_q
    else:
        off = np.sqrt(2.0 * np.sum(np.tril(a, -1) ** 2))
        if off >= tol:
            logger.warning(f"Jacobi stopped at the {max_sweeps}-sweep cap (off={off:.3e})")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def sigmoid(x):
    """Logistic function, saturating without overflow warnings."""
    return expit(x)


def bce(y, p, eps: float = BCE_EPS) -> float:
    """
    Mean binary cross entropy.

    Args:
        y: Labels in {0, 1}
        p: Predicted probabilities, clipped to [eps, 1 - eps]

    Returns:
        Non-negative mean loss
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    p = np.asarray(p, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise ShapeError(f"label/probability length mismatch: {y.size} vs {p.size}")
    if y.size == 0:
        raise ShapeError("bce needs at least one prediction")
    p = np.clip(p, eps, 1.0 - eps)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
