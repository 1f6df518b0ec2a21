"""
Gaussian fits and the Frechet distance between them.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from signface.core.errors import CovarianceError, ShapeError

logger = logging.getLogger(__name__)

# Added to every fitted covariance
COVARIANCE_STABILIZER = 1e-6

# Largest imaginary residue of the matrix square root that is discarded
IMAGINARY_TOLERANCE = 1e-6


@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray


def fit_gaussian(features: np.ndarray) -> GaussianStats:
    """Mean and stabilized covariance of (N, D) features.

    Args:
        features: One feature vector per row

    Returns:
        GaussianStats with cov + 1e-6 I
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"features must be (N, D), got {features.shape}")
    if features.shape[0] < 2:
        raise CovarianceError(f"covariance needs at least 2 samples, got {features.shape[0]}")

    mean = features.mean(axis=0)
    cov = np.atleast_2d(np.cov(features, rowvar=False))
    cov = cov + COVARIANCE_STABILIZER * np.eye(cov.shape[0])
    return GaussianStats(mean=mean, cov=cov)


def _real_sqrtm(matrix: np.ndarray) -> np.ndarray:
    root = linalg.sqrtm(matrix)
    if np.iscomplexobj(root):
        residue = np.max(np.abs(root.imag))
        if residue > IMAGINARY_TOLERANCE:
            raise CovarianceError(f"matrix square root has imaginary residue {residue:.3e}")
        root = root.real
    if not np.isfinite(root).all():
        raise np.linalg.LinAlgError("matrix square root is not finite")
    return root


def _trace_sqrt_product(cov1: np.ndarray, cov2: np.ndarray) -> float:
    """Tr((cov1 cov2)^1/2) via the symmetric form s1 cov2 s1, s1 = cov1^1/2."""
    root = _real_sqrtm(cov1)
    product = root @ cov2 @ root
    eigenvalues = np.linalg.eigvalsh((product + product.T) / 2.0)
    return float(np.sqrt(np.clip(eigenvalues, 0.0, None)).sum())


def frechet_distance(mu1: np.ndarray, cov1: np.ndarray, mu2: np.ndarray, cov2: np.ndarray) -> float:
    """||mu1 - mu2||^2 + Tr(cov1 + cov2 - 2 (cov1 cov2)^1/2).

    Args:
        mu1: Mean of the first Gaussian
        cov1: Covariance of the first Gaussian
        mu2: Mean of the second Gaussian
        cov2: Covariance of the second Gaussian

    Returns:
        Non-negative distance
    """
    mu1, mu2 = np.atleast_1d(np.asarray(mu1, dtype=np.float64)), np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    cov1, cov2 = np.atleast_2d(np.asarray(cov1, dtype=np.float64)), np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    if mu1.shape != mu2.shape:
        raise ShapeError(f"means differ in shape: {mu1.shape} vs {mu2.shape}")
    if cov1.shape != cov2.shape or cov1.shape != (mu1.size, mu1.size):
        raise ShapeError(f"covariances {cov1.shape}, {cov2.shape} do not match dimension {mu1.size}")

    diff = mu1 - mu2
    try:
        trace_sqrt = _trace_sqrt_product(cov1, cov2)
    except np.linalg.LinAlgError:
        offset = COVARIANCE_STABILIZER * np.eye(cov1.shape[0])
        logger.warning(f"Matrix square root failed (cond {np.linalg.cond(cov1):.3e}); retrying with offset")
        try:
            trace_sqrt = _trace_sqrt_product(cov1 + offset, cov2 + offset)
        except np.linalg.LinAlgError as e:
            raise CovarianceError(
                f"matrix square root failed; condition numbers {np.linalg.cond(cov1):.3e}, {np.linalg.cond(cov2):.3e}"
            ) from e

    value = float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * trace_sqrt)
    return max(value, 0.0)
