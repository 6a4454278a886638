"""Cyclic Jacobi eigensolver for small dense Hermitian matrices."""

from __future__ import annotations

import numpy as np

OFF_TOL = 1e-13
MAX_SWEEPS = 60


class NotHermitianError(ValueError):
    pass


def hermitian_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


def _off_norm(a: np.ndarray) -> float:
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.linalg.norm(off))


def jacobi_eigh(a: np.ndarray, tol: float = OFF_TOL, want_vectors: bool = True,
                herm_tol: float = 1e-10):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Returns ``(w, V)`` with ascending eigenvalues ``w`` and unitary ``V`` such
    that ``a = V diag(w) V^dag``. Sweeps stop once the off-diagonal Frobenius
    norm drops below ``tol * max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"square matrix required, got {a.shape}")
    if hermitian_defect(a) > herm_tol:
        raise NotHermitianError(f"matrix is not Hermitian (defect {hermitian_defect(a):.3e})")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex) if want_vectors else None
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(MAX_SWEEPS):
        if _off_norm(a) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                mag = abs(g)
                if mag < 1e-300:
                    continue
                phase = g / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # R = diag(1, conj(phase)) @ [[c, s], [-s, c]] diagonalizes the (p, q) block
                r = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = a[:, [p, q]] @ r
                a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
                rows = r.conj().T @ a[[p, q], :]
                a[p, :], a[q, :] = rows[0], rows[1]
                a[p, q] = a[q, p] = 0.0
                if v is not None:
                    vc = v[:, [p, q]] @ r
                    v[:, p], v[:, q] = vc[:, 0], vc[:, 1]
    else:
        raise RuntimeError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    w = w[order]
    if v is None:
        return w, None
    return w, v[:, order]


def jacobi_eigvalsh(a: np.ndarray, tol: float = OFF_TOL) -> np.ndarray:
    return jacobi_eigh(a, tol=tol, want_vectors=False)[0]
