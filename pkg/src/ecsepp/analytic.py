"""Analytic teleportation figures of merit for ECS and EPP channels.

The primary path evaluates the per-outcome probability p_j and p_j f_j of the
retained Bell outcomes (j = 2, 4) and averages over the Bloch sphere with a
Gauss-Legendre x trapezoid rule. Closed forms are kept alongside and checked
against the quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import dynamic_basis_norms, ecs_norm2

CLASSICAL_LIMIT = 2.0 / 3.0
RETAINED_ECS = (2, 4)
R_EPP = 1.0 / math.sqrt(3.0)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    n_polar: int = 32
    n_azimuth: int = 64

    def __post_init__(self):
        if self.n_polar < 8 or self.n_azimuth < 8:
            raise ValueError("quadrature needs at least 8 nodes per direction")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.n_polar, 2 * self.n_azimuth)

    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, w) on a (n_polar, n_azimuth) grid; sum(w * f) = (1/4pi) int f dOmega."""
        z, wz = np.polynomial.legendre.leggauss(self.n_polar)
        v = 2 * np.pi * np.arange(self.n_azimuth) / self.n_azimuth
        u = np.arccos(z)
        U, V = np.meshgrid(u, v, indexing="ij")
        W = np.repeat(wz[:, None], self.n_azimuth, axis=1) / (2.0 * self.n_azimuth)
        return U, V, W


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class InputQubit:
    u: float
    v: float
    a: complex
    b: complex
    t_alpha: float


@dataclass(frozen=True)
class OutcomeRecord:
    j: str
    p: float
    f: float | None = None

    @property
    def pf(self) -> float | None:
        return None if self.f is None else self.p * self.f


def qubit_coefficients(u, v, t_alpha: float):
    """(a, b) of a|t a> + b|-t a> for Bloch angles (u, v); works on arrays."""
    n_plus, n_minus = dynamic_basis_norms(t_alpha)
    cp = np.cos(np.asarray(u) / 2) * np.exp(0.5j * np.asarray(v))
    sm = np.sin(np.asarray(u) / 2) * np.exp(-0.5j * np.asarray(v))
    return n_plus * cp + n_minus * sm, n_plus * cp - n_minus * sm


def input_qubit(u: float, v: float, alpha: float, r: float) -> InputQubit:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    ta = math.sqrt(1 - r * r) * alpha
    a, b = qubit_coefficients(u, v, ta)
    return InputQubit(u, v, complex(a), complex(b), ta)


# --- per-outcome formulas -------------------------------------------------------------

def _ecs_terms(alpha: float, r: float, eta: float):
    a2 = alpha * alpha
    t2 = 1.0 - r * r
    E = math.exp(-2 * t2 * a2)
    X = math.exp(-4 * a2 * r * r)
    C2 = math.exp(-4 * t2 * a2 * (1 - eta))
    D = -0.5 * math.expm1(-4 * eta * t2 * a2)  # e^{-x} sinh(x), x = 2 eta t^2 a^2
    return E, X, C2, D * ecs_norm2(alpha, -1)


def ecs_pf_p(alpha: float, r: float, eta: float, a, b):
    """(p_4 f_4, p_4) for coefficient arrays a, b; identical for j = 2."""
    E, X, C2, pref = _ecs_terms(alpha, r, eta)
    a = np.asarray(a)
    b = np.asarray(b)
    M = a.conj() * (a + b * E)
    L = b.conj() * (a * E + b)
    pf = pref * (np.abs(L) ** 2 + np.abs(M) ** 2 + 2 * X * C2 * np.real(M.conj() * L))
    p = pref * (np.abs(a) ** 2 + np.abs(b) ** 2 + 2 * X * E * C2 * np.real(a.conj() * b))
    return pf, p


def _check_params(alpha, r, eta):
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not 0 <= r <= 1:
        raise ValueError("r must be in [0, 1]")
    if not 0 < eta <= 1:
        raise ValueError("eta must be in (0, 1]")


def ecs_outcome(alpha: float, r: float, eta: float, qubit: InputQubit) -> list[OutcomeRecord]:
    """Records for the retained outcomes j = 4 (Psi-) and j = 2 (Phi-)."""
    _check_params(alpha, r, eta)
    pf, p = ecs_pf_p(alpha, r, eta, qubit.a, qubit.b)
    pf, p = float(pf), float(p)
    f = pf / p if p > 0 else None
    return [OutcomeRecord("4", p, f), OutcomeRecord("2", p, f)]


# --- Bloch averages -----------------------------------------------------------------

def _bloch_average(alpha, r, eta, quad: QuadratureSpec):
    U, V, W = quad.nodes()
    a, b = qubit_coefficients(U, V, math.sqrt(1 - r * r) * alpha)
    pf, p = ecs_pf_p(alpha, r, eta, a, b)
    # two retained outcomes with equal p and pf
    ratio = (2 * pf) / (2 * p)
    return float(np.sum(W * ratio)), float(np.sum(W * 2 * p))


def _averaged(alpha, r, eta, quad, check, which):
    _check_params(alpha, r, eta)
    if r == 1.0:
        return (0.5, eta / 2)[which]
    val = _bloch_average(alpha, r, eta, quad)[which]
    if check:
        fine = _bloch_average(alpha, r, eta, quad.doubled())[which]
        if abs(fine - val) >= 1e-8:
            raise QuadratureError(
                f"quadrature {quad} not converged at alpha={alpha}, r={r}, eta={eta}: "
                f"doubling changed the value by {abs(fine - val):.2e}"
            )
    return val


def avg_fidelity_ecs(alpha: float, r: float, eta: float = 1.0, quad: QuadratureSpec = DEFAULT_QUAD,
                     check: bool = False) -> float:
    """Bloch-averaged fidelity over the retained outcomes; r = 1 returns the limit 1/2."""
    return _averaged(alpha, r, eta, quad, check, 0)


def success_prob_ecs(alpha: float, r: float, eta: float = 1.0, quad: QuadratureSpec = DEFAULT_QUAD,
                     check: bool = False) -> float:
    """Bloch-averaged p_2 + p_4; r = 1 returns the limit eta/2."""
    return _averaged(alpha, r, eta, quad, check, 1)


# --- closed forms --------------------------------------------------------------------

def _t3(x: float) -> float:
    """(arctanh x - x) / x^3 without cancellation near 0."""
    if abs(x) < 0.05:
        x2 = x * x
        return math.fsum(x2 ** j / (2 * j + 3) for j in range(12))
    return (math.atanh(x) - x) / x ** 3


def _t1m1(x: float) -> float:
    """arctanh(x)/x - 1."""
    if abs(x) < 0.05:
        x2 = x * x
        return math.fsum(x2 ** j / (2 * j + 1) for j in range(1, 13))
    return math.atanh(x) / x - 1.0


def fidelity_coefficients(alpha: float, r: float, eta: float = 1.0) -> dict[str, float]:
    """l, m, n, c, d of the reference fidelity formula in terms of S = e^{-2a^2}."""
    S = math.exp(-2 * alpha * alpha)
    r2 = r * r
    P = lambda e: S ** e  # noqa: E731
    return dict(
        l=3 * P(2 * (1 + eta)) - 5 * P(2 * (r2 + eta)) + 5 * P(2 * (2 + r2 * eta)) - 3 * P(2 * (1 + r2 * (1 + eta))),
        m=(P(2) + P(2 * r2)) * (P(2 * eta) - P(2 * (1 + r2 * eta))),
        n=P(-2 * (1 + r2 * eta)) / 16,
        c=P(2) - P(-2 * (-1 + r2) * (-1 + eta)),
        d=-P(1 + r2) + P(-(-1 + r2) * (-1 + 2 * eta)),
    )


def fidelity_reference_form(alpha: float, r: float, eta: float = 1.0) -> float:
    """Reference closed form with the grouping that matches quadrature:

    F = 2n(l - m)/c + 2n (d^2 (l - m) + 2 c^2 m) (arctanh(d/c) - d/c) / (c^3 (d/c)^3)
    """
    k = fidelity_coefficients(alpha, r, eta)
    l, m, n, c, d = k["l"], k["m"], k["n"], k["c"], k["d"]
    x = d / c
    return 2 * n * (l - m) / c + 2 * n * (d * d * (l - m) + 2 * c * c * m) * _t3(x) / c ** 3


def _stable_pieces(alpha: float, r: float, eta: float):
    a2 = alpha * alpha
    t2 = 1.0 - r * r
    log_e2 = -4 * t2 * a2
    log_k = -4 * a2 * r * r - 4 * t2 * a2 * (1 - eta)
    E2 = math.exp(log_e2)
    E = math.exp(0.5 * log_e2)
    K = math.exp(log_k)
    A0 = -math.expm1(log_k + log_e2)  # 1 - E^2 K
    one_minus_k = -math.expm1(log_k)
    x = E * one_minus_k / A0
    q0 = 3 + K - E2 * (1 + 3 * K)
    q2 = one_minus_k * (1 + E2)
    k_minus_e2 = E2 * math.expm1(log_k - log_e2)
    return A0, x, q0, q2, k_minus_e2


def fidelity_excess_ecs(alpha: float, r: float, eta: float = 1.0) -> float:
    """F_ECS - 2/3 evaluated without cancellation.

    With E = e^{-2t^2a^2} and K = e^{-4a^2r^2} e^{-4t^2a^2(1-eta)}, the Bloch
    average is (1/8) int_{-1}^{1} (q0 - q2 z^2)/(A0 - B0 z) dz, which gives
    F - 2/3 = [4(K - E^2)/3 + q0 (T1 - 1) - q2 (T3 - 1/3)] / (4 A0).
    """
    _check_params(alpha, r, eta)
    if r == 1.0:
        return 0.5 - CLASSICAL_LIMIT
    A0, x, q0, q2, kme = _stable_pieces(alpha, r, eta)
    return (4 * kme / 3 + q0 * _t1m1(x) - q2 * (_t3(x) - 1.0 / 3.0)) / (4 * A0)


def closed_form_F_ecs(alpha: float, r: float, eta: float = 1.0) -> float:
    """Closed-form average fidelity.

    Uses the reference form up to alpha = 1.8 and the cancellation-free
    rearrangement above that, where the reference form loses digits.
    """
    _check_params(alpha, r, eta)
    if r == 1.0:
        return 0.5
    if alpha > 1.8:
        return CLASSICAL_LIMIT + fidelity_excess_ecs(alpha, r, eta)
    return fidelity_reference_form(alpha, r, eta)


def success_per_outcome(alpha: float, r: float, eta: float = 1.0) -> float:
    """Single-outcome success-probability expression; it equals the average of one p_j."""
    S = math.exp(-2 * alpha * alpha)
    r2 = r * r
    return (0.25 * S ** (-2 * (-1 + r2) * (-1 + eta)) * (-1 + S ** (2 * (-1 + r2) * eta))
            * (-1 + S ** (2 * (1 + (-1 + r2) * (-1 + eta)))) / (-1 + S ** 2) / (-1 + S ** (2 * (-1 + r2))))


def _expm1_ratio(a: float, b: float) -> float:
    """expm1(a)/expm1(b), continuous at b = 0."""
    if b == 0.0:
        return a / b if a != 0 else 1.0 if a == b else 0.0
    if abs(b) < 1e-300:
        return a / b
    return math.expm1(a) / math.expm1(b)


def closed_form_P_ecs(alpha: float, r: float, eta: float = 1.0) -> float:
    """Total success probability over both retained outcomes (twice the single-outcome expression).

    Written as (1/2) (1 - E^{2eta})/(1 - E^2) (1 - S^{2 + 2t^2(1-eta)})/(1 - S^2)
    with E = e^{-2t^2a^2}, S = e^{-2a^2}, which is finite at r = 1.
    """
    _check_params(alpha, r, eta)
    a2 = alpha * alpha
    t2 = 1 - r * r
    if t2 == 0.0:
        first = eta
    else:
        first = _expm1_ratio(-4 * eta * t2 * a2, -4 * t2 * a2)
    second = _expm1_ratio(-2 * a2 * (2 + 2 * t2 * (1 - eta)), -4 * a2)
    return 0.5 * first * second


# --- EPP ------------------------------------------------------------------------------

def epp_metrics(r: float, eta: float = 1.0) -> tuple[float, float]:
    """(F, P) for the photon-pair channel: F = 1 - r^2, P = eta^2 (1 - r^2)/2."""
    if not 0 <= r <= 1:
        raise ValueError("r must be in [0, 1]")
    if not 0 < eta <= 1:
        raise ValueError("eta must be in (0, 1]")
    t2 = 1.0 - r * r
    return t2, eta * eta * t2 / 2


# --- thresholds ------------------------------------------------------------------------

SCAN_STEP = 0.01
ROOT_TOL = 1e-12


def _bisect(g: Callable[[float], float], lo: float, hi: float, glo: float, tol: float = ROOT_TOL) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _first_root(g: Callable[[float], float], start: float, stop: float = 1.0) -> float | None:
    steps = int(round((stop - start) / SCAN_STEP))
    grid = [start + i * SCAN_STEP for i in range(steps + 1)]
    prev_r, prev_g = grid[0], g(grid[0])
    if prev_g == 0.0:
        return prev_r
    for r in grid[1:]:
        gr = g(min(r, 1.0))
        if gr == 0.0:
            return r
        if (gr > 0) != (prev_g > 0):
            return _bisect(g, prev_r, r, prev_g)
        prev_r, prev_g = r, gr
    return None


def threshold_r(kind: str, eta: float = 1.0, alpha: float | None = None) -> float | None:
    """Normalized time at which a fidelity curve crosses its reference.

    kind:
      'epp_classical'  F_EPP(r) = 2/3
      'ecs_classical'  F_ECS(alpha, r, eta) = 2/3
      'crossover'      F_ECS(alpha, r, eta) = F_EPP(r), smallest root in (0, 1)

    Returns None when the scan finds no sign change; for 'crossover' that
    means the ECS fidelity is never below the EPP one (r_c ~ 0).
    """
    if kind == "epp_classical":
        return _first_root(lambda r: epp_metrics(r, eta)[0] - CLASSICAL_LIMIT, 0.0)
    if alpha is None:
        raise ValueError(f"{kind} threshold needs alpha")
    if kind == "ecs_classical":
        return _first_root(lambda r: fidelity_excess_ecs(alpha, r, eta), 0.0)
    if kind == "crossover":
        # F_ECS - F_EPP = (F_ECS - 2/3) + r^2 - 1/3; r = 0 is a trivial zero at eta = 1
        return _first_root(lambda r: fidelity_excess_ecs(alpha, r, eta) + r * r - 1.0 / 3.0, SCAN_STEP)
    raise ValueError(f"unknown threshold kind {kind!r}")
