"""Shared fixtures-in-spirit: seeded instances and independent oracles."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from krylov_sqrt import matgen


def make_pd_matrix(seed: int, n: int, kind: str = "uniform", skew: bool = True):
    """Seeded positive-definite test matrix (ndarray) plus its prescribed
    symmetric-part eigenvalues."""
    if kind == "uniform":
        spec = matgen.SpectrumSpec.uniform(n, 1.0, 1000.0)
    else:
        spec = matgen.SpectrumSpec.clustered(n, 1000.0, 100.0, 0.95, 10.0, 5.0)
    sm = matgen.spectrum_matrix(spec, seed)
    a = sm.matrix.array.real.copy()
    if skew:
        a = a + matgen.skew_part(n, seed + 1)
    return a, sm.eigenvalues, sm


def charpoly_coefficients(a: np.ndarray) -> np.ndarray:
    """Characteristic polynomial coefficients (monic, highest power first)
    from sums of principal minors computed by LU determinants.

    Exponential in n; intended for n <= 8 oracle work only.
    """
    n = a.shape[0]
    coeffs = np.zeros(n + 1, dtype=np.complex128)
    coeffs[0] = 1.0
    idx = range(n)
    for j in range(1, n + 1):
        minors = 0.0 + 0.0j
        for rows in combinations(idx, j):
            sub = a[np.ix_(rows, rows)]
            minors += np.linalg.det(sub)
        coeffs[j] = (-1.0) ** j * minors
    return coeffs


def durand_kerner(coeffs: np.ndarray, iterations: int = 300) -> np.ndarray:
    """All roots of a monic polynomial by Weierstrass simultaneous
    iteration; independent of any LAPACK eigensolver."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    n = coeffs.size - 1
    # distinct, non-real starting points on a spiral scaled to the
    # coefficient magnitude so huge-modulus roots still converge
    radius = 1.0 + np.max(np.abs(coeffs[1:])) ** (1.0 / n)
    roots = radius * (0.4 + 0.9j) ** np.arange(1, n + 1)
    for _ in range(iterations):
        shifted = roots[:, None] - roots[None, :]
        np.fill_diagonal(shifted, 1.0)
        denom = np.prod(shifted, axis=1)
        delta = np.polyval(coeffs, roots) / denom
        roots = roots - delta
        if np.max(np.abs(delta)) < 1e-14 * max(1.0, np.max(np.abs(roots))):
            break
    return roots


def eig_sqrt_action(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Square-root action through a symmetric eigendecomposition; the
    independent oracle for SPD matrices."""
    w, v = np.linalg.eigh(a)
    return (v * np.sqrt(w)) @ (v.T @ b)
