"""Spin matrices and Clifford bookkeeping.

The pinned convention is sigma_1 sigma_2 = -i sigma_3, realised by
(sigma_x, sigma_y, -sigma_z).  Under it the signs of the curvature entries
of the fg-family come out exactly as the closed forms in the docs.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[-1, 0], [0, 1]], dtype=complex),
)
# Clifford basis order used for components: I, s1, s2, s3
BASIS = (I2,) + SIGMA
LABELS = ("I", "s1", "s2", "s3")


def decompose(mat: np.ndarray) -> np.ndarray:
    """Coefficients of a 2x2 matrix in the basis (I, s1, s2, s3)."""
    return np.array([0.5 * np.trace(b.conj().T @ mat) for b in BASIS])


def _product_table():
    table = {}
    for i, a in enumerate(BASIS):
        for j, b in enumerate(BASIS):
            coeffs = decompose(a @ b)
            nz = [(l, complex(v)) for l, v in enumerate(coeffs) if abs(v) > 1e-14]
            assert len(nz) == 1
            table[i, j] = nz[0]
    return table


# PRODUCT[i, j] = (l, phase) with BASIS[i] @ BASIS[j] = phase * BASIS[l]
PRODUCT = _product_table()
