"""Negativity E = -2 * (sum of negative eigenvalues of the partial transpose)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import ecs_abcd, ecs_decohered, epp_decohered
from .fock import FockOperator, partial_transpose_array
from .linalg import NotHermitianError, hermitian_defect, jacobi_eigvalsh

NEG_THRESHOLD = -1e-12


@dataclass(frozen=True)
class EntanglementResult:
    value: float
    negative_eigenvalues: list[float] = field(default_factory=list)
    threshold: float = NEG_THRESHOLD


def negativity(rho, dims: Sequence[int] | None = None, transposed: Sequence[int] = (1,)) -> EntanglementResult:
    """Negativity of ``rho`` split into subsystems ``dims``, transposing ``transposed``.

    ``rho`` may be a FockOperator (the split is per mode) or a plain matrix
    together with ``dims``. Eigenvalues in [-1e-12, 0] count as zero.
    """
    if isinstance(rho, FockOperator):
        mat = rho.dense()
        dims = [rho.spec.levels] * rho.spec.mode_count
    else:
        mat = np.asarray(rho, dtype=complex)
        if dims is None:
            d = int(round(math.sqrt(mat.shape[0])))
            dims = [d, d]
    if hermitian_defect(mat) > 1e-10:
        raise NotHermitianError(f"density matrix not Hermitian (defect {hermitian_defect(mat):.3e})")
    pt = partial_transpose_array(mat, dims, transposed)
    w = jacobi_eigvalsh(pt)
    neg = [float(x) for x in w if x < NEG_THRESHOLD]
    return EntanglementResult(value=-2.0 * math.fsum(neg), negative_eigenvalues=neg)


def ecs_negativity_numeric(alpha: float, r: float) -> float:
    return negativity(ecs_decohered(alpha, -1, r).matrix4, dims=(2, 2)).value


def ecs_negativity_closed(alpha: float, r: float) -> float:
    """Closed-form negativity of the decohered odd ECS.

    -(A + C - sqrt(A^2 + 4B^2 - 2AC + C^2)) with A, B, C already divided by
    4(e^{4a^2} - 1); the expm1 form of the entries keeps this finite for any alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    A, B, C, _ = ecs_abcd(alpha, r)
    root = math.sqrt((A - C) ** 2 + 4 * B * B)
    # A + C - root loses digits when B is small; rationalize
    s = A + C
    val = (root * root - s * s) / (s + root) if s + root > 0 else 0.0
    return max(val, 0.0)


def epp_negativity_closed(r: float) -> float:
    return (1.0 - r * r) ** 2


def ecs_negativity_small_alpha(r: float) -> float:
    r2 = r * r
    return -r2 + math.sqrt(1 - 2 * r2 + 2 * r2 * r2)


def epp_negativity_numeric(r: float) -> float:
    return negativity(epp_decohered(r).matrix9, dims=(3, 3)).value
