"""Photon-loss channels.

Amplitude damping in Kraus form for the Fock-space oracle, and the closed-form
decohered ECS and EPP density matrices.

Loss is parameterized by the normalized time r = sqrt(1 - t^2), where
t = exp(-gamma tau / 2) is the amplitude transmission of each mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .fock import (
    DyadEnsemble,
    FockOperator,
    FockVector,
    ModeSpec,
    coherent_amplitudes,
)


@dataclass(frozen=True)
class LossParams:
    r: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"normalized time r must be in [0, 1], got {self.r}")

    @property
    def t2(self) -> float:
        return 1.0 - self.r * self.r

    @property
    def t(self) -> float:
        return math.sqrt(self.t2)

    @classmethod
    def from_transmission(cls, t: float) -> "LossParams":
        return cls(math.sqrt(max(0.0, 1.0 - t * t)))


def _as_loss(loss) -> LossParams:
    return loss if isinstance(loss, LossParams) else LossParams(float(loss))


# --- Kraus form ------------------------------------------------------------------

def damping_kraus_matrices(transmission2: float, cutoff: int) -> list[np.ndarray]:
    """Kraus matrices K_k, <n-k|K_k|n> = sqrt(C(n,k) T^(n-k) (1-T)^k), T = ``transmission2``.

    Operators that vanish identically (all k > 0 when T = 1, or every k != n
    pattern when T = 0) are dropped.
    """
    T = float(transmission2)
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmission must be in [0, 1], got {T}")
    L = cutoff + 1
    out = []
    for k in range(L):
        n = np.arange(k, L)
        m = n - k
        vals = np.sqrt(comb(n, k) * np.power(T, m) * (1.0 - T) ** k)
        if not np.any(vals > 0):
            continue
        K = np.zeros((L, L))
        K[m, n] = vals
        out.append(K)
    return out


def damping_kraus(loss, spec: ModeSpec | int, mode: int = 0) -> list[FockOperator]:
    """Amplitude-damping Kraus operators of ``loss`` on one mode of ``spec``."""
    loss = _as_loss(loss)
    if isinstance(spec, int):
        spec = ModeSpec(1, spec)
    return [FockOperator(spec, K, (mode,)) for K in damping_kraus_matrices(loss.t2, spec.cutoff)]


def apply_channel_dense(rho: np.ndarray, kraus: list[np.ndarray], mode: int, spec: ModeSpec) -> np.ndarray:
    """sum_k K_k rho K_k^dag with K_k acting on ``mode`` of a dense density matrix."""
    L, M = spec.levels, spec.mode_count
    t = rho.reshape(spec.shape * 2)
    out = np.zeros_like(t)
    for K in kraus:
        x = np.moveaxis(np.tensordot(K, t, axes=([1], [mode])), 0, mode)
        x = np.moveaxis(np.tensordot(x, K.conj(), axes=([M + mode], [1])), -1, M + mode)
        out += x
    return out.reshape(L ** M, L ** M)


# --- decohered ECS -----------------------------------------------------------------

def ecs_norm2(alpha: float, sign: int) -> float:
    """(N_alpha^pm)^2 = 1/(2 +- 2 e^{-4 alpha^2})."""
    if sign > 0:
        return 1.0 / (2.0 + 2.0 * math.exp(-4 * alpha * alpha))
    return 1.0 / (-2.0 * math.expm1(-4 * alpha * alpha))


def dynamic_basis_norms(t_alpha: float) -> tuple[float, float]:
    """(n_+, n_-) with |+-> = n_+-(|t a> +- |-t a>)."""
    e = math.exp(-2 * t_alpha * t_alpha)
    minus = -2.0 * math.expm1(-2 * t_alpha * t_alpha)
    n_minus = math.inf if minus == 0.0 else 1.0 / math.sqrt(minus)
    return 1.0 / math.sqrt(2 + 2 * e), n_minus


def _coherent_in_dynamic_basis(t_alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of |t a> and |-t a> in the orthonormal basis (|+>, |->).

    |+-t a> = (|+>/n_+ +- |->/n_-)/2, and 1/n_- = sqrt(2 - 2e^{-2 t^2 a^2}) stays
    finite as t a -> 0.
    """
    e = math.exp(-2 * t_alpha * t_alpha)
    inv_np = math.sqrt(2 + 2 * e)
    inv_nm = math.sqrt(-2.0 * math.expm1(-2 * t_alpha * t_alpha))
    plus = np.array([inv_np, inv_nm]) / 2
    minus = np.array([inv_np, -inv_nm]) / 2
    return plus, minus


def ecs_sign_dyads(alpha: float, sign: int, loss) -> list[tuple[float, tuple[int, int], tuple[int, int]]]:
    """Coherent-dyad form of the decohered ECS with sign labels.

    Returns [(weight, (s1, s2), (s1', s2'))] meaning
    weight |s1 t a, s2 t a><s1' t a, s2' t a|; the kets sit at the decayed
    amplitude t*alpha and the cross dyads carry e^{-4 a^2 r^2}.
    """
    loss = _as_loss(loss)
    n2 = ecs_norm2(alpha, sign)
    cross = sign * math.exp(-4 * alpha * alpha * loss.r * loss.r)
    x, y = (1, -1), (-1, 1)
    return [(n2, x, x), (n2, y, y), (n2 * cross, x, y), (n2 * cross, y, x)]


def ecs_matrix4(alpha: float, sign: int, loss) -> np.ndarray:
    """4x4 density matrix in {|+>,|->}^2 built from the coherent-dyad form."""
    loss = _as_loss(loss)
    plus, minus = _coherent_in_dynamic_basis(loss.t * alpha)
    coord = {1: plus, -1: minus}
    rho = np.zeros((4, 4), dtype=complex)
    for w, (x1, x2), (y1, y2) in ecs_sign_dyads(alpha, sign, loss):
        rho += w * np.outer(np.kron(coord[x1], coord[x2]), np.kron(coord[y1], coord[y2]))
    return rho


def ecs_abcd(alpha: float, r: float) -> tuple[float, float, float, float]:
    """A, B, C, D of the odd-ECS matrix, each divided by 4(e^{4a^2} - 1).

    Written with expm1 so the entries are finite for tiny alpha and do not
    overflow for large alpha; see ``ecs_abcd_direct`` for the unscaled form.
    """
    a2 = alpha * alpha
    t2 = 1.0 - r * r
    denom = -4.0 * math.expm1(-4 * a2)  # 4(1 - e^{-4a^2})
    one_minus_x = -math.expm1(-4 * a2 * r * r)
    e = math.exp(-2 * t2 * a2)
    one_minus_e = -math.expm1(-2 * t2 * a2)
    one_minus_e2 = -math.expm1(-4 * t2 * a2)
    A = one_minus_x * (1 + e) ** 2 / denom
    C = one_minus_x * one_minus_e ** 2 / denom
    B = one_minus_e2 * (1 + math.exp(-4 * a2 * r * r)) / denom
    D = -one_minus_e2 * one_minus_x / denom
    return A, B, C, D


def ecs_abcd_direct(alpha: float, r: float) -> tuple[float, float, float, float, float]:
    """Unscaled A, B, C, D and the prefactor 1/(4(-1 + e^{4a^2})); overflows for alpha >~ 13."""
    a2, r2 = alpha * alpha, r * r
    ex = math.exp
    A = ex(-4 * (-1 + r2) * a2) * (-1 + ex(4 * r2 * a2)) * (1 + ex(2 * (-1 + r2) * a2)) ** 2
    B = -1 + ex(4 * a2) - ex(4 * r2 * a2) + ex(-4 * (-1 + r2) * a2)
    C = ex(-4 * (-1 + r2) * a2) * (-1 + ex(4 * r2 * a2)) * (-1 + ex(2 * (-1 + r2) * a2)) ** 2
    D = -1 - ex(4 * a2) + ex(4 * r2 * a2) + ex(-4 * (-1 + r2) * a2)
    return A, B, C, D, 1.0 / (4 * (-1 + ex(4 * a2)))


def ecs_matrix4_closed(alpha: float, r: float) -> np.ndarray:
    A, B, C, D = ecs_abcd(alpha, r)
    return np.array([[A, 0, 0, D], [0, B, -B, 0], [0, -B, B, 0], [D, 0, 0, C]], dtype=complex)


@dataclass(frozen=True)
class EcsChannel:
    alpha: float
    sign: int
    loss: LossParams
    matrix4: np.ndarray = field(repr=False)

    @property
    def t_alpha(self) -> float:
        return self.loss.t * self.alpha

    def dyads(self):
        return ecs_sign_dyads(self.alpha, self.sign, self.loss)

    def fock_ensemble(self, cutoff: int) -> DyadEnsemble:
        """Two-mode DyadEnsemble of the channel in a truncated Fock register."""
        spec = ModeSpec(2, cutoff)
        ens = DyadEnsemble(spec)
        amp = {s: coherent_amplitudes(s * self.t_alpha, cutoff) for s in (1, -1)}
        kets = {}
        for w, x, y in self.dyads():
            for pair in (x, y):
                if pair not in kets:
                    kets[pair] = np.multiply.outer(amp[pair[0]], amp[pair[1]]).astype(complex)
            ens.add(w, kets[x], kets[y])
        return ens

    def fock_density(self, cutoff: int) -> np.ndarray:
        return self.fock_ensemble(cutoff).to_operator().entries


def ecs_decohered(alpha: float, sign: int, loss) -> EcsChannel:
    """Decohered even (sign=+1) or odd (sign=-1) entangled coherent state."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 (even) or -1 (odd)")
    loss = _as_loss(loss)
    if sign > 0 and alpha < 1e-3:
        warnings.warn(f"even ECS with alpha={alpha} is vacuum dominated", RuntimeWarning, stacklevel=2)
    m = ecs_matrix4(alpha, sign, loss)
    m.setflags(write=False)
    return EcsChannel(alpha, sign, loss, m)


# --- decohered EPP -------------------------------------------------------------------

# polarization register per party: index 0 = |H>, 1 = |V>, 2 = vacuum
H, V, VAC = 0, 1, 2


def _pol_ket(a: int, b: int) -> np.ndarray:
    k = np.zeros(9, dtype=complex)
    k[3 * a + b] = 1.0
    return k


def epp_pure() -> np.ndarray:
    return (_pol_ket(H, V) + _pol_ket(V, H)) / math.sqrt(2)


def epp_sector_weights(loss) -> tuple[float, float, float]:
    """(two-photon, one-photon, vacuum) weights ((1-r^2)^2, 2r^2(1-r^2), r^4)."""
    loss = _as_loss(loss)
    r2 = loss.r * loss.r
    t2 = loss.t2
    return t2 * t2, 2 * r2 * t2, r2 * r2


@dataclass(frozen=True)
class EppChannel:
    loss: LossParams
    matrix9: np.ndarray = field(repr=False)

    @property
    def sector_weights(self):
        return epp_sector_weights(self.loss)


def epp_decohered(loss) -> EppChannel:
    """9x9 matrix of the decohered photon pair in the {H, V, 0}^2 basis."""
    loss = _as_loss(loss)
    w2, w1, w0 = epp_sector_weights(loss)
    psi = epp_pure()
    rho = w2 * np.outer(psi, psi.conj())
    for k in (_pol_ket(H, VAC), _pol_ket(V, VAC), _pol_ket(VAC, H), _pol_ket(VAC, V)):
        rho += 0.25 * w1 * np.outer(k, k)
    vac = _pol_ket(VAC, VAC)
    rho += w0 * np.outer(vac, vac)
    rho.setflags(write=False)
    return EppChannel(loss, rho)


# dual-rail: party p occupies Fock modes (2p, 2p+1) = (H rail, V rail)
DUAL_RAIL_CUTOFF = 2


def epp_dual_rail_state() -> FockVector:
    spec = ModeSpec(4, DUAL_RAIL_CUTOFF)
    t = np.zeros(spec.shape, dtype=complex)
    t[1, 0, 0, 1] = t[0, 1, 1, 0] = 1 / math.sqrt(2)
    return FockVector.from_tensor(spec, t)


def epp_dual_rail_decohered(loss) -> np.ndarray:
    """Dense 81x81 density matrix: damping_kraus applied to each of the four rails."""
    loss = _as_loss(loss)
    psi = epp_dual_rail_state()
    spec = psi.spec
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    kraus = damping_kraus_matrices(loss.t2, spec.cutoff)
    for mode in range(4):
        rho = apply_channel_dense(rho, kraus, mode, spec)
    return rho


_RAIL_TO_POL = {(1, 0): H, (0, 1): V, (0, 0): VAC}


def dual_rail_to_polarization(rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Fold a 4-rail density matrix into the 9x9 {H, V, 0}^2 basis.

    Returns the folded matrix and the population left outside the
    single-photon-or-vacuum subspace (zero for loss-only evolution).
    """
    spec = ModeSpec(4, DUAL_RAIL_CUTOFF)
    idx = []
    for (h1, v1), p1 in _RAIL_TO_POL.items():
        for (h2, v2), p2 in _RAIL_TO_POL.items():
            flat = np.ravel_multi_index((h1, v1, h2, v2), spec.shape)
            idx.append((3 * p1 + p2, flat))
    idx.sort()
    flat = [f for _, f in idx]
    folded = rho[np.ix_(flat, flat)]
    outside = float(np.trace(rho).real - np.trace(folded).real)
    return folded, outside
