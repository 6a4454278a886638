"""Brute-force teleportation in truncated Fock space (ECS) or the {H, V, 0} register (EPP).

Mode order for ECS runs: 0 = input (port A after the beam splitter),
1 = sender half of the channel (port B), 2 = receiver mode C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .analytic import DEFAULT_QUAD, OutcomeRecord, QuadratureSpec, ecs_pf_p, qubit_coefficients
from .channels import (
    H,
    V,
    VAC,
    LossParams,
    _as_loss,
    damping_kraus_matrices,
    apply_channel_dense,
    ecs_decohered,
    epp_decohered,
)
from .fock import (
    PRUNE_TOL,
    TAIL_TOL,
    DyadEnsemble,
    ModeSpec,
    apply_local,
    beam_splitter,
    coherent_amplitudes,
    cutoff_for_amplitude,
    iter_kraus_two_modes,
    parity_masks,
    phase_shifter,
)

CHANNEL_KINDS = ("ecs_odd", "ecs_even", "epp")
OUTCOME_KEYS = ("1", "2", "3", "4", "e", "both")
RETAINED = {"ecs_odd": ("2", "4"), "ecs_even": ("1", "3"), "epp": ("3", "4")}
LEAKAGE_TOL = 1e-9

# Phase (radians) applied to mode C per retained outcome. Frozen after
# resolve_corrections found these to be the only assignments with ideal fidelity 1.
ECS_CORRECTIONS = {
    "ecs_odd": {"4": 0.0, "2": math.pi},
    "ecs_even": {"3": 0.0, "1": math.pi},
}
# Pauli correction on the receiver photon for the Psi'+ (3) and Psi'- (4) outcomes.
EPP_CORRECTIONS = {"3": "I", "4": "Z"}


class WiringError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolConfig:
    channel_kind: str
    alpha: float
    loss: LossParams
    eta: float = 1.0
    qubit_point: tuple[float, float] = (0.0, 0.0)
    tail_tol: float = TAIL_TOL
    cutoff: int | None = None
    corrections: Mapping[str, object] | None = None

    def __post_init__(self):
        if self.channel_kind not in CHANNEL_KINDS:
            raise ValueError(f"channel_kind must be one of {CHANNEL_KINDS}")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if self.channel_kind != "epp":
            if self.alpha <= 0:
                raise ValueError("alpha must be positive")
            if self.loss.r >= 1:
                raise ValueError("the ECS input qubit is undefined at r = 1")

    @property
    def sign(self) -> int:
        return -1 if self.channel_kind == "ecs_odd" else 1

    @property
    def t_alpha(self) -> float:
        return self.loss.t * self.alpha

    def resolved_cutoff(self) -> int:
        if self.cutoff is not None:
            return self.cutoff
        return cutoff_for_amplitude(math.sqrt(2) * self.t_alpha, self.tail_tol)


@dataclass
class OracleResult:
    kind: str
    outcomes: list[OutcomeRecord]
    total_probability: float
    cutoff: int | None = None

    def record(self, j: str) -> OutcomeRecord:
        for rec in self.outcomes:
            if rec.j == j:
                return rec
        raise KeyError(j)

    @property
    def retained(self) -> list[OutcomeRecord]:
        return [self.record(j) for j in RETAINED[self.kind]]

    @property
    def success_probability(self) -> float:
        return math.fsum(rec.p for rec in self.retained)

    @property
    def fidelity(self) -> float:
        recs = [rec for rec in self.retained if rec.p > 0]
        return math.fsum(rec.p * rec.f for rec in recs) / math.fsum(rec.p for rec in recs)


# --- corrections ------------------------------------------------------------------

def _phase_diag(cutoff: int, phi: float) -> np.ndarray:
    return np.exp(1j * phi * np.arange(cutoff + 1))


def correction_unitary(j: str, spec: ModeSpec, kind: str = "ecs_odd", mode: int = 0,
                       assignment: Mapping[str, float] | None = None):
    """Identity or pi phase shift on ``mode`` for retained ECS outcome ``j``."""
    table = ECS_CORRECTIONS[kind] if assignment is None else assignment
    j = str(j)
    if j not in table:
        raise ValueError(f"outcome {j} is not retained for {kind}")
    return phase_shifter(spec, mode, table[j])


_PAULI = {
    "I": np.eye(3, dtype=complex),
    "Z": np.diag([1, -1, 1]).astype(complex),
    "X": np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex),
    "XZ": np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex),
}


# --- ECS engine -------------------------------------------------------------------

def _ecs_channel_terms(alpha: float, sign: int, loss: LossParams, cutoff: int):
    ens = ecs_decohered(alpha, sign, loss).fock_ensemble(cutoff)
    return [(d.weight, d.left, d.right) for d in ens.terms]


def _run_ecs(inputs, channel_terms, cutoff: int, eta: float, keep: Sequence[str],
             prune: float = PRUNE_TOL):
    """Push every input-dyad x channel-dyad term through BS, detector loss and the masks.

    ``inputs`` is (weight, left, right) on mode 0; returns (probs, ops) with
    probs[key] = tr(O_key rho) and ops[j] the unnormalized mode-C operator for j in ``keep``.
    """
    spec = ModeSpec(3, cutoff)
    ens = DyadEnsemble(spec)
    for wi, li, ri in inputs:
        for wc, lc, rc in channel_terms:
            left = np.multiply.outer(li, lc)
            if li is ri and lc is rc:
                ens.add(wi * wc, left)
            else:
                ens.add(wi * wc, left, np.multiply.outer(ri, rc))
    ens = ens.apply(beam_splitter(spec, 0, 1, math.pi / 2), max_leakage=LEAKAGE_TOL)

    masks = parity_masks(cutoff)
    probs = {k: 0j for k in OUTCOME_KEYS}
    ops = {j: np.zeros((cutoff + 1, cutoff + 1), dtype=complex) for j in keep}
    kraus = damping_kraus_matrices(eta, cutoff)
    for d in iter_kraus_two_modes(ens, kraus, 0, kraus, 1, prune):
        for key in OUTCOME_KEYS:
            lm = d.left[masks[key]]
            rm = lm if d.right is d.left else d.right[masks[key]]
            probs[key] += d.weight * np.vdot(rm, lm)
            if key in ops:
                ops[key] += d.weight * (lm.T @ rm.conj())
    return probs, ops


def _coherent_basis(t_alpha: float, cutoff: int) -> np.ndarray:
    return np.array([coherent_amplitudes(t_alpha, cutoff), coherent_amplitudes(-t_alpha, cutoff)], dtype=complex)


def _ecs_input_ket(config: ProtocolConfig, cutoff: int) -> np.ndarray:
    u, v = config.qubit_point
    a, b = qubit_coefficients(u, v, config.t_alpha)
    basis = _coherent_basis(config.t_alpha, cutoff)
    return complex(a) * basis[0] + complex(b) * basis[1]


def simulate_ecs(config: ProtocolConfig, prune: float = PRUNE_TOL) -> OracleResult:
    if config.channel_kind not in ("ecs_odd", "ecs_even"):
        raise ValueError("simulate_ecs needs an ECS channel kind")
    cutoff = config.resolved_cutoff()
    phi = _ecs_input_ket(config, cutoff)
    channel = _ecs_channel_terms(config.alpha, config.sign, config.loss, cutoff)
    keep = RETAINED[config.channel_kind]
    probs, ops = _run_ecs([(1.0, phi, phi)], channel, cutoff, config.eta, keep, prune)
    table = ECS_CORRECTIONS[config.channel_kind] if config.corrections is None else config.corrections
    records = []
    for key in OUTCOME_KEYS:
        p = float(probs[key].real)
        f = None
        if key in ops and p > 0:
            ph = _phase_diag(cutoff, table[key])
            rho = ph[:, None] * ops[key] * ph.conj()[None, :]
            f = float(np.vdot(phi, rho @ phi).real / p)
        records.append(OutcomeRecord(key, p, f))
    total = math.fsum(rec.p for rec in records)
    return OracleResult(config.channel_kind, records, total, cutoff)


# --- EPP engine ------------------------------------------------------------------

def _pol_kraus(eta: float) -> list[np.ndarray]:
    k0 = np.diag([math.sqrt(eta), math.sqrt(eta), 1.0]).astype(complex)
    out = [k0]
    if eta < 1:
        for src in (H, V):
            k = np.zeros((3, 3), dtype=complex)
            k[VAC, src] = math.sqrt(1 - eta)
            out.append(k)
    return out


def _bell_ab() -> dict[str, np.ndarray]:
    def ket(a, b):
        k = np.zeros(9, dtype=complex)
        k[3 * a + b] = 1
        return k

    s = 1 / math.sqrt(2)
    return {
        "1": s * (ket(H, H) + ket(V, V)),
        "2": s * (ket(H, H) - ket(V, V)),
        "3": s * (ket(H, V) + ket(V, H)),
        "4": s * (ket(H, V) - ket(V, H)),
    }


def _run_epp(left_in: np.ndarray, right_in: np.ndarray, loss, eta: float,
             corrections: Mapping[str, str]):
    """Returns probs[key] and corrected receiver operators (3x3) for retained outcomes."""
    chan = epp_decohered(loss).matrix9
    rho = np.kron(np.outer(left_in, right_in.conj()), chan)
    spec = ModeSpec(3, 2)  # three qutrit parties; reuse the per-mode Kraus helper
    kraus = _pol_kraus(eta)
    rho = apply_channel_dense(rho, kraus, 0, spec)
    rho = apply_channel_dense(rho, kraus, 1, spec)
    r6 = rho.reshape(9, 3, 9, 3)
    probs, ops = {}, {}
    bells = _bell_ab()
    for key, beta in bells.items():
        op = np.einsum("a,aibj,b->ij", beta.conj(), r6, beta)
        probs[key] = np.trace(op)
        if key in corrections:
            U = _PAULI[corrections[key]]
            ops[key] = U @ op @ U.conj().T
    probs["e"] = np.einsum("aiai->", r6) - sum(probs[k] for k in bells)
    probs["both"] = 0j
    return probs, ops


def _epp_input(u: float, v: float) -> np.ndarray:
    return np.array([math.cos(u / 2) * np.exp(0.5j * v), math.sin(u / 2) * np.exp(-0.5j * v), 0.0])


def simulate_epp(loss, eta: float = 1.0, qubit_point: tuple[float, float] = (0.0, 0.0),
                 corrections: Mapping[str, str] | None = None) -> OracleResult:
    loss = _as_loss(loss)
    if not 0 < eta <= 1:
        raise ValueError("eta must be in (0, 1]")
    table = EPP_CORRECTIONS if corrections is None else corrections
    phi = _epp_input(*qubit_point)
    probs, ops = _run_epp(phi, phi, loss, eta, table)
    records = []
    for key in OUTCOME_KEYS:
        p = float(probs[key].real)
        f = float(np.vdot(phi, ops[key] @ phi).real / p) if key in ops and p > 0 else None
        records.append(OutcomeRecord(key, p, f))
    return OracleResult("epp", records, math.fsum(rec.p for rec in records))


# --- Bloch averages via linearity in the input dyad ---------------------------

@dataclass
class Transfer:
    """Output of the protocol for the four input dyads |e_i><e_k|.

    ``probs[key][i, k]`` is the trace for outcome ``key`` and ``gram[j][i, k, l, m]``
    is <e_l| rho_j(|e_i><e_k|) |e_m> after correction, so a qubit c_0 e_0 + c_1 e_1
    gives p_j = c_i c_k* probs and p_j f_j = c_i c_k* c_l* c_m gram.
    """

    kind: str
    probs: dict[str, np.ndarray]
    gram: dict[str, np.ndarray] = field(repr=False)

    def evaluate(self, c0, c1) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
        c = np.stack([np.asarray(c0, dtype=complex), np.asarray(c1, dtype=complex)])
        p = {key: np.einsum("i...,k...,ik->...", c, c.conj(), m).real for key, m in self.probs.items()}
        pf = {
            j: np.einsum("i...,k...,l...,m...,iklm->...", c, c.conj(), c.conj(), c, g).real
            for j, g in self.gram.items()
        }
        return p, pf


def ecs_transfer(alpha: float, r: float, eta: float, sign: int = -1, cutoff: int | None = None,
                 corrections: Mapping[str, float] | None = None, prune: float = PRUNE_TOL) -> Transfer:
    kind = "ecs_odd" if sign < 0 else "ecs_even"
    config = ProtocolConfig(kind, alpha, LossParams(r), eta, cutoff=cutoff)
    cutoff = config.resolved_cutoff()
    basis = _coherent_basis(config.t_alpha, cutoff)
    channel = _ecs_channel_terms(alpha, sign, config.loss, cutoff)
    keep = RETAINED[kind]
    table = ECS_CORRECTIONS[kind] if corrections is None else corrections
    probs = {key: np.zeros((2, 2), dtype=complex) for key in OUTCOME_KEYS}
    gram = {j: np.zeros((2, 2, 2, 2), dtype=complex) for j in keep}
    for i in range(2):
        for k in range(2):
            right = basis[k] if k != i else basis[i]
            pr, ops = _run_ecs([(1.0, basis[i], right)], channel, cutoff, eta, keep, prune)
            for key in OUTCOME_KEYS:
                probs[key][i, k] = pr[key]
            for j in keep:
                ph = _phase_diag(cutoff, table[j])
                rho = ph[:, None] * ops[j] * ph.conj()[None, :]
                gram[j][i, k] = basis.conj() @ rho @ basis.T
    return Transfer(kind, probs, gram)


def epp_transfer(r: float, eta: float, corrections: Mapping[str, str] | None = None) -> Transfer:
    table = EPP_CORRECTIONS if corrections is None else corrections
    basis = np.eye(3, dtype=complex)[:2]
    probs = {key: np.zeros((2, 2), dtype=complex) for key in OUTCOME_KEYS}
    gram = {j: np.zeros((2, 2, 2, 2), dtype=complex) for j in RETAINED["epp"]}
    for i in range(2):
        for k in range(2):
            pr, ops = _run_epp(basis[i], basis[k], LossParams(r), eta, table)
            for key in OUTCOME_KEYS:
                probs[key][i, k] = pr[key]
            for j in gram:
                gram[j][i, k] = basis.conj() @ ops[j] @ basis.T
    return Transfer("epp", probs, gram)


def transfer_average(tr: Transfer, coeffs, quad: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """(F, P) averaged over the Bloch sphere; ``coeffs(U, V)`` gives the input coefficients."""
    U, V, W = quad.nodes()
    p, pf = tr.evaluate(*coeffs(U, V))
    keep = RETAINED[tr.kind]
    ptot = sum(p[j] for j in keep)
    pftot = sum(pf[j] for j in keep)
    return float(np.sum(W * pftot / ptot)), float(np.sum(W * ptot))


def oracle_average(kind: str, alpha: float, r: float, eta: float = 1.0,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Bloch-averaged (F, P) from the brute-force simulation."""
    if kind == "epp":
        tr = epp_transfer(r, eta)
        return transfer_average(tr, lambda U, V: (np.cos(U / 2) * np.exp(0.5j * V),
                                                  np.sin(U / 2) * np.exp(-0.5j * V)), quad)
    sign = -1 if kind == "ecs_odd" else 1
    tr = ecs_transfer(alpha, r, eta, sign)
    ta = math.sqrt(1 - r * r) * alpha
    return transfer_average(tr, lambda U, V: qubit_coefficients(U, V, ta), quad)


# --- wiring checks --------------------------------------------------------------

IDEAL_POINTS = ((0.0, 0.0), (math.pi, 0.0), (math.pi / 2, 0.0), (math.pi / 3, math.pi / 5), (2.0, 4.0))


def ideal_fidelities(kind: str, assignment: Mapping, alpha: float = 1.0) -> dict[str, float]:
    """Smallest fidelity per retained outcome at r = 0, eta = 1 over IDEAL_POINTS."""
    worst = {j: 1.0 for j in RETAINED[kind]}
    for point in IDEAL_POINTS:
        if kind == "epp":
            res = simulate_epp(LossParams(0.0), 1.0, point, assignment)
        else:
            res = simulate_ecs(ProtocolConfig(kind, alpha, LossParams(0.0), 1.0, point, corrections=assignment))
        for rec in res.retained:
            if rec.p > 1e-12:
                worst[rec.j] = min(worst[rec.j], rec.f)
    return worst


def resolve_corrections(kind: str, alpha: float = 1.0, tol: float = 1e-8) -> dict:
    """Find the correction assignment with ideal fidelity 1 on every retained outcome."""
    j1, j2 = RETAINED[kind]
    if kind == "epp":
        candidates = [{j1: x, j2: y} for x in _PAULI for y in _PAULI]
    else:
        candidates = [{j1: 0.0, j2: math.pi}, {j1: math.pi, j2: 0.0}]
    for cand in candidates:
        if min(ideal_fidelities(kind, cand, alpha).values()) >= 1 - tol:
            return cand
    raise WiringError(f"no correction assignment reaches ideal fidelity 1 for {kind}")


def swapped(assignment: Mapping) -> dict:
    keys = list(assignment)
    return {keys[0]: assignment[keys[1]], keys[1]: assignment[keys[0]]}


# --- structural checks ------------------------------------------------------------

BELL_SIGNS = {"phi+": (1, 1), "phi-": (1, -1), "psi+": (-1, 1), "psi-": (-1, -1)}


def bell_state_overlaps(alpha: float, r: float = 0.0, tol: float = TAIL_TOL) -> dict[str, dict[str, float]]:
    """Weight of each mapped coherent Bell state on every detector signature.

    phi+- ~ |b, b> +- |-b, -b>, psi+- ~ |b, -b> +- |-b, b> with b = t * alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    beta = math.sqrt(1 - r * r) * alpha
    cutoff = cutoff_for_amplitude(math.sqrt(2) * beta, tol)
    spec = ModeSpec(2, cutoff)
    bs = beam_splitter(spec, 0, 1, math.pi / 2)
    plus, minus = coherent_amplitudes(beta, cutoff), coherent_amplitudes(-beta, cutoff)
    masks = parity_masks(cutoff)
    out = {}
    for name, (second, rel) in BELL_SIGNS.items():
        other = plus if second > 0 else minus
        other_flip = minus if second > 0 else plus
        ket = np.multiply.outer(plus, other) + rel * np.multiply.outer(minus, other_flip)
        ket = apply_local(bs.entries, bs.modes, ket.astype(complex))
        ket /= np.linalg.norm(ket)
        prob = np.abs(ket) ** 2
        out[name] = {key: float(prob[m].sum()) for key, m in masks.items()}
    return out


def cross_term_damping(alpha: float, eta: float, tol: float = TAIL_TOL) -> tuple[float, float]:
    """Weight of the |a, a><-a, -a| dyad after detector loss on both modes vs e^{-4(1-eta)a^2}.

    The damped dyad is c |sqrt(eta) a, sqrt(eta) a><-sqrt(eta) a, -sqrt(eta) a|; returns (c, expected).
    """
    cutoff = cutoff_for_amplitude(alpha, tol)
    spec = ModeSpec(2, cutoff)
    p, m = coherent_amplitudes(alpha, cutoff), coherent_amplitudes(-alpha, cutoff)
    ens = DyadEnsemble(spec).add(1.0, np.multiply.outer(p, p), np.multiply.outer(m, m))
    kraus = damping_kraus_matrices(eta, cutoff)
    rho = np.zeros((spec.dim, spec.dim), dtype=complex)
    for d in iter_kraus_two_modes(ens, kraus, 0, kraus, 1, prune=0.0):
        rho += d.weight * np.outer(d.left.reshape(-1), d.right.reshape(-1).conj())
    se = math.sqrt(eta) * alpha
    lp, lm = coherent_amplitudes(se, cutoff), coherent_amplitudes(-se, cutoff)
    left, right = np.kron(lp, lp), np.kron(lm, lm)
    c = np.vdot(left, rho @ right) / (np.vdot(left, left) * np.vdot(right, right))
    return float(c.real), math.exp(-4 * (1 - eta) * alpha * alpha)


def end_to_end_ecs(alpha: float = 1.0, r: float = 0.5, eta: float = 0.8,
                   qubit_point: tuple[float, float] = (math.pi / 3, math.pi / 5),
                   tol: float = TAIL_TOL) -> dict[str, tuple[float, float, float, float]]:
    """Channel loss by dense Kraus evolution of the pure ECS, then the full protocol.

    Returns {j: (p_oracle, pf_oracle, p_analytic, pf_analytic)} for the retained outcomes.
    """
    loss = LossParams(r)
    t_alpha = loss.t * alpha
    cutoff = max(cutoff_for_amplitude(alpha, tol), cutoff_for_amplitude(math.sqrt(2) * t_alpha, tol))
    spec2 = ModeSpec(2, cutoff)
    p, m = coherent_amplitudes(alpha, cutoff), coherent_amplitudes(-alpha, cutoff)
    ket = np.kron(p, m) - np.kron(m, p)
    ket /= np.linalg.norm(ket)
    rho = np.outer(ket, ket.conj())
    kraus = damping_kraus_matrices(loss.t2, cutoff)
    for mode in (0, 1):
        rho = apply_channel_dense(rho, kraus, mode, spec2)
    w, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    channel = []
    for lam, vec in zip(w, vecs.T):
        if lam > 1e-14:
            t = vec.reshape(spec2.shape).astype(complex)
            channel.append((float(lam), t, t))
    config = ProtocolConfig("ecs_odd", alpha, loss, eta, qubit_point, cutoff=cutoff)
    phi = _ecs_input_ket(config, cutoff)
    keep = RETAINED["ecs_odd"]
    probs, ops = _run_ecs([(1.0, phi, phi)], channel, cutoff, eta, keep)
    a, b = qubit_coefficients(*qubit_point, t_alpha)
    pf_a, p_a = ecs_pf_p(alpha, r, eta, a, b)
    out = {}
    for j in keep:
        ph = _phase_diag(cutoff, ECS_CORRECTIONS["ecs_odd"][j])
        rho_c = ph[:, None] * ops[j] * ph.conj()[None, :]
        out[j] = (probs[j].real, float(np.vdot(phi, rho_c @ phi).real), float(p_a), float(pf_a))
    return out
