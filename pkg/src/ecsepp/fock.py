"""Truncated multimode Fock-space linear algebra.

States are stored as flat complex vectors over the mixed-radix photon-number
basis (n_1, ..., n_M) in row-major order, mode 1 most significant; this is
``numpy.reshape`` C order, so ``vec.tensor()`` is a zero-copy view with one
axis per mode. Operators carry the tuple of modes they act on, which lets a
two-mode beam splitter be applied inside a three-mode register without ever
building the full D x D matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

TAIL_TOL = 1e-12
MAX_MODES = 4


class TruncationError(ValueError):
    """Raised when a cutoff is too small for the requested amplitudes."""


@dataclass(frozen=True)
class ModeSpec:
    mode_count: int
    cutoff: int

    def __post_init__(self):
        if self.mode_count < 1 or self.mode_count > MAX_MODES:
            raise ValueError(f"mode_count must be in 1..{MAX_MODES}, got {self.mode_count}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")

    @property
    def levels(self) -> int:
        return self.cutoff + 1

    @property
    def dim(self) -> int:
        return self.levels ** self.mode_count

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.levels,) * self.mode_count

    def sub(self, mode_count: int) -> "ModeSpec":
        return ModeSpec(mode_count, self.cutoff)


def poisson_tail(mu: float, cutoff: int) -> float:
    """Mass of a Poisson(mu**2) distribution above ``cutoff``."""
    mean = mu * mu
    if mean == 0.0:
        return 0.0
    n = np.arange(cutoff + 1)
    logp = -mean + n * math.log(mean) - gammaln(n + 1)
    head = math.fsum(np.exp(logp))
    if head < 0.5:
        return 1.0 - head
    # 1 - head loses everything below 1e-16; sum the tail terms instead
    m = np.arange(cutoff + 1, cutoff + 1 + int(10 * mean + 200))
    return math.fsum(np.exp(-mean + m * math.log(mean) - gammaln(m + 1)))


def cutoff_for_amplitude(mu: float, tol: float = TAIL_TOL) -> int:
    """Smallest cutoff N with Poisson tail sum_{n>N} e^{-mu^2} mu^{2n}/n! < tol."""
    n = 1
    while poisson_tail(abs(mu), n) >= tol:
        n += 1
    return n


@dataclass(frozen=True)
class FockVector:
    spec: ModeSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.spec.dim:
            raise ValueError(f"expected {self.spec.dim} amplitudes, got {amps.size}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_tensor(cls, spec: ModeSpec, tensor: np.ndarray) -> "FockVector":
        return cls(spec, np.ascontiguousarray(tensor).reshape(-1))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.spec.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "FockVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def scaled(self, c: complex) -> "FockVector":
        return FockVector(self.spec, c * self.amplitudes)

    def __add__(self, other: "FockVector") -> "FockVector":
        _check_same(self.spec, other.spec)
        return FockVector(self.spec, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "FockVector") -> "FockVector":
        _check_same(self.spec, other.spec)
        return FockVector(self.spec, self.amplitudes - other.amplitudes)


@dataclass(frozen=True)
class FockOperator:
    """Matrix acting on ``modes`` of a register described by ``spec``.

    ``entries`` has dimension levels**len(modes). With the default
    ``modes=None`` the operator acts on every mode.
    """

    spec: ModeSpec
    entries: np.ndarray
    modes: tuple[int, ...] | None = None
    # exact only on states with at most this many photons in ``modes`` (None: everywhere)
    exact_photons: int | None = None

    def __post_init__(self):
        modes = tuple(range(self.spec.mode_count)) if self.modes is None else tuple(self.modes)
        if len(set(modes)) != len(modes) or any(m < 0 or m >= self.spec.mode_count for m in modes):
            raise ValueError(f"invalid modes {modes} for {self.spec.mode_count}-mode register")
        d = self.spec.levels ** len(modes)
        mat = np.asarray(self.entries, dtype=complex)
        if mat.shape != (d, d):
            raise ValueError(f"expected {d}x{d} entries, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)
        object.__setattr__(self, "modes", modes)

    @property
    def is_full(self) -> bool:
        return self.modes == tuple(range(self.spec.mode_count))

    def dense(self) -> np.ndarray:
        """Embed into the full register as a D x D matrix (small registers only)."""
        if self.is_full:
            return np.array(self.entries)
        D = self.spec.dim
        cols = np.eye(D, dtype=complex).reshape(self.spec.shape + (D,))
        return apply_local(self.entries, self.modes, cols).reshape(D, D)

    def apply(self, vec: FockVector) -> FockVector:
        _check_same(self.spec, vec.spec)
        return FockVector.from_tensor(self.spec, apply_local(self.entries, self.modes, vec.tensor()))

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.spec, self.entries.conj().T, self.modes)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        _check_same(self.spec, other.spec)
        if self.modes != other.modes:
            return FockOperator(self.spec, self.dense() @ other.dense())
        return FockOperator(self.spec, self.entries @ other.entries, self.modes,
                            _min_exact(self.exact_photons, other.exact_photons))


def _min_exact(a: int | None, b: int | None) -> int | None:
    return b if a is None else a if b is None else min(a, b)


def apply_local(matrix: np.ndarray, modes: Sequence[int], tensor: np.ndarray) -> np.ndarray:
    """Contract ``matrix`` into the given axes of a state tensor."""
    k = len(modes)
    M = tensor.ndim
    L = tensor.shape[0]
    if k == M and tuple(modes) == tuple(range(M)) and tensor.ndim == M:
        return (matrix @ tensor.reshape(-1)).reshape(tensor.shape)
    local = matrix.reshape((L,) * (2 * k))
    moved = np.moveaxis(tensor, list(modes), list(range(k)))
    out = np.tensordot(local, moved, axes=(list(range(k, 2 * k)), list(range(k))))
    return np.moveaxis(out, list(range(k)), list(modes))


def _check_same(a: ModeSpec, b: ModeSpec):
    if a != b:
        raise ValueError(f"incompatible mode specs {a} and {b}")


# --- states -----------------------------------------------------------------

def coherent_amplitudes(alpha: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    if alpha == 0.0:
        out = np.zeros(cutoff + 1)
        out[0] = 1.0
        return out
    logmag = -0.5 * alpha * alpha + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.sign(alpha) ** n


def coherent_ket(amplitude: float, spec: ModeSpec | int, tol: float = TAIL_TOL) -> FockVector:
    """Truncated coherent state e^{-a^2/2} a^n / sqrt(n!) for real ``amplitude``.

    Raises TruncationError when the Poisson tail beyond the cutoff is >= tol.
    """
    if isinstance(spec, int):
        spec = ModeSpec(1, spec)
    if spec.mode_count != 1:
        raise ValueError("coherent_ket needs a single-mode spec")
    tail = poisson_tail(amplitude, spec.cutoff)
    if tail >= tol:
        need = cutoff_for_amplitude(amplitude, tol)
        raise TruncationError(
            f"cutoff {spec.cutoff} leaves tail {tail:.3e} for amplitude {amplitude}; need >= {need}"
        )
    return FockVector(spec, coherent_amplitudes(amplitude, spec.cutoff))


def number_ket(photons: Sequence[int], spec: ModeSpec) -> FockVector:
    if len(photons) != spec.mode_count or any(n < 0 or n > spec.cutoff for n in photons):
        raise ValueError(f"photon numbers {photons} outside {spec}")
    t = np.zeros(spec.shape, dtype=complex)
    t[tuple(photons)] = 1.0
    return FockVector.from_tensor(spec, t)


def tensor(a, b):
    """Kronecker composition with mode order (a-modes, b-modes)."""
    if a.spec.cutoff != b.spec.cutoff:
        raise ValueError("tensor() needs equal cutoffs")
    spec = ModeSpec(a.spec.mode_count + b.spec.mode_count, a.spec.cutoff)
    if isinstance(a, FockVector) and isinstance(b, FockVector):
        return FockVector(spec, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, FockOperator) and isinstance(b, FockOperator):
        return FockOperator(spec, np.kron(a.dense(), b.dense()))
    raise TypeError("tensor() needs two vectors or two operators")


def ket_to_operator(vec: FockVector) -> FockOperator:
    return FockOperator(vec.spec, np.outer(vec.amplitudes, vec.amplitudes.conj()))


# --- partial operations -------------------------------------------------------

def partial_trace(rho: FockOperator | np.ndarray, keep: Sequence[int], spec: ModeSpec | None = None):
    """Trace out every mode not in ``keep``; kept modes stay in ascending order."""
    if isinstance(rho, FockOperator):
        spec, mat = rho.spec, rho.dense()
    else:
        mat = np.asarray(rho)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("partial_trace needs a non-empty keep set")
    M = spec.mode_count
    if keep[0] < 0 or keep[-1] >= M:
        raise ValueError(f"keep {keep} out of range for {M} modes")
    L = spec.levels
    t = mat.reshape((L,) * (2 * M))
    letters = "abcdefgh"
    out_idx = list(letters[:M])
    in_idx = list(letters[M:2 * M])
    for m in range(M):
        if m not in keep:
            in_idx[m] = out_idx[m]
    res = "".join(out_idx[m] for m in keep) + "".join(in_idx[m] for m in keep)
    reduced = np.einsum("".join(out_idx) + "".join(in_idx) + "->" + res, t)
    d = L ** len(keep)
    return FockOperator(ModeSpec(len(keep), spec.cutoff), reduced.reshape(d, d))


def partial_transpose_array(mat: np.ndarray, dims: Sequence[int], transposed: Sequence[int]) -> np.ndarray:
    """Partial transpose of a matrix over subsystems of sizes ``dims``."""
    dims = list(dims)
    n = len(dims)
    t = np.asarray(mat).reshape(dims + dims)
    axes = list(range(2 * n))
    for m in transposed:
        axes[m], axes[n + m] = axes[n + m], axes[m]
    return np.transpose(t, axes).reshape(mat.shape)


def partial_transpose(rho: FockOperator, transposed: Sequence[int]) -> FockOperator:
    dims = [rho.spec.levels] * rho.spec.mode_count
    return FockOperator(rho.spec, partial_transpose_array(rho.dense(), dims, transposed))


# --- optical elements ---------------------------------------------------------

def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(complex)


def _bs_block(n_total: int, cutoff: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact unitary of the beam splitter on the fixed-photon-number block."""
    k = np.arange(max(0, n_total - cutoff), min(n_total, cutoff) + 1)
    size = k.size
    gen = np.zeros((size, size))
    # a_i^dag a_j |k, n-k> = sqrt(k+1) sqrt(n-k) |k+1, n-k-1>
    for idx in range(size - 1):
        kk = k[idx]
        amp = math.sqrt((kk + 1) * (n_total - kk))
        gen[idx + 1, idx] = amp
        gen[idx, idx + 1] = -amp
    return k, expm(0.5 * theta * gen)


def beam_splitter(spec: ModeSpec, mode_i: int, mode_j: int, theta: float) -> FockOperator:
    """Beam splitter on modes (i, j) with transmittivity cos^2(theta/2).

    Implements exp[(theta/2)(a_i^dag a_j - a_i a_j^dag)], the sign for which
    theta = pi/2 maps |a>|b> to |(a+b)/sqrt2>|(-a+b)/sqrt2>. Built block by block
    in total photon number, so it conserves n_i + n_j exactly.
    """
    if mode_i == mode_j:
        raise ValueError("beam splitter needs two distinct modes")
    N = spec.cutoff
    L = N + 1
    U = np.zeros((L * L, L * L), dtype=complex)
    for n_total in range(2 * N + 1):
        k, block = _bs_block(n_total, N, theta)
        idx = k * L + (n_total - k)
        U[np.ix_(idx, idx)] = block
    # blocks with n_i + n_j > N are cut short by the cutoff, so only lower blocks are exact
    return FockOperator(spec, U, (mode_i, mode_j), exact_photons=N)


def phase_shifter(spec: ModeSpec, mode: int, phi: float) -> FockOperator:
    """Diagonal e^{i phi n} on one mode; maps |a> to |e^{i phi} a>."""
    n = np.arange(spec.levels)
    return FockOperator(spec, np.diag(np.exp(1j * phi * n)), (mode,))


def _truncated_weight(op: FockOperator, t: np.ndarray) -> float:
    if op.exact_photons is None:
        out = apply_local(op.entries, op.modes, t)
        return float(np.vdot(t, t).real - np.vdot(out, out).real)
    grids = np.indices(t.shape, sparse=True)
    total = sum(grids[m] for m in op.modes)
    return float(np.sum(np.abs(t[np.broadcast_to(total > op.exact_photons, t.shape)]) ** 2))


def leakage(vec: FockVector, op: FockOperator) -> float:
    """Weight of ``vec`` on which the truncated ``op`` is not exact.

    For a beam splitter this is the mass with n_i + n_j above the cutoff;
    for other operators it is the squared norm lost on application.
    """
    return _truncated_weight(op, vec.tensor())


# --- parity measurement -------------------------------------------------------

OUTCOMES = ("1", "2", "3", "4", "e")


def parity_masks(cutoff: int) -> dict[str, np.ndarray]:
    """Boolean (n_A, n_B) masks for O_1..O_4, O_e and the 'both' complement."""
    n = np.arange(cutoff + 1)
    even = (n % 2 == 0) & (n > 0)
    odd = n % 2 == 1
    vac = n == 0
    masks = {
        "1": np.outer(even, vac),
        "2": np.outer(odd, vac),
        "3": np.outer(vac, even),
        "4": np.outer(vac, odd),
        "e": np.outer(vac, vac),
    }
    masks["both"] = np.outer(n > 0, n > 0)
    return masks


def parity_projectors(spec: ModeSpec, modes: tuple[int, int] = (0, 1)) -> dict[str, FockOperator]:
    """Projectors O_1..O_4, O_e (keys '1'..'4', 'e') plus 'both' on two modes."""
    return {
        key: FockOperator(spec, np.diag(mask.reshape(-1).astype(complex)), modes)
        for key, mask in parity_masks(spec.cutoff).items()
    }


# --- low-rank density operators ------------------------------------------------

PRUNE_TOL = 1e-14


@dataclass(frozen=True)
class Dyad:
    weight: complex
    left: np.ndarray
    right: np.ndarray


@dataclass
class DyadEnsemble:
    """Density operator sum_k w_k |L_k><R_k| kept in factored form.

    ``left``/``right`` are stored as state tensors (one axis per mode).
    """

    spec: ModeSpec
    terms: list[Dyad] = field(default_factory=list)

    def add(self, weight: complex, left, right=None):
        left = _as_tensor(left, self.spec)
        right = left if right is None else _as_tensor(right, self.spec)
        self.terms.append(Dyad(complex(weight), left, right))
        return self

    def __len__(self):
        return len(self.terms)

    def trace(self) -> complex:
        return sum(d.weight * np.vdot(d.right, d.left) for d in self.terms)

    def to_operator(self) -> FockOperator:
        mat = np.zeros((self.spec.dim, self.spec.dim), dtype=complex)
        for d in self.terms:
            mat += d.weight * np.outer(d.left.reshape(-1), d.right.reshape(-1).conj())
        return FockOperator(self.spec, mat)

    def product(self, other: "DyadEnsemble") -> "DyadEnsemble":
        """Tensor product with mode order (self, other)."""
        out = DyadEnsemble(ModeSpec(self.spec.mode_count + other.spec.mode_count, self.spec.cutoff))
        for a in self.terms:
            for b in other.terms:
                out.add(a.weight * b.weight, np.multiply.outer(a.left, b.left), np.multiply.outer(a.right, b.right))
        return out

    def apply(self, op: FockOperator, max_leakage: float | None = None) -> "DyadEnsemble":
        """Conjugate every dyad by ``op``; optionally abort when truncation bites."""
        out = DyadEnsemble(self.spec)
        for d in self.terms:
            if max_leakage is not None:
                lost = max(_truncated_weight(op, k) / max(np.vdot(k, k).real, 1e-300) for k in (d.left, d.right))
                if lost > max_leakage:
                    raise TruncationError(
                        f"operator on modes {op.modes} sees weight {lost:.3e} beyond cutoff {self.spec.cutoff}; "
                        "raise the cutoff"
                    )
            left = apply_local(op.entries, op.modes, d.left)
            right = left if d.right is d.left else apply_local(op.entries, op.modes, d.right)
            out.terms.append(Dyad(d.weight, left, right))
        return out

    def kraus_branches(self, kraus: Sequence[np.ndarray], mode: int, prune: float = PRUNE_TOL) -> Iterator[Dyad]:
        """Lazily yield K d K^dag for every dyad d and Kraus operator K on ``mode``."""
        for d in self.terms:
            yield from _branch(d, kraus, mode, prune)

    def apply_kraus(self, kraus: Sequence[np.ndarray], mode: int, prune: float = PRUNE_TOL) -> "DyadEnsemble":
        out = DyadEnsemble(self.spec)
        out.terms.extend(self.kraus_branches(kraus, mode, prune))
        return out


def _as_tensor(v, spec: ModeSpec) -> np.ndarray:
    arr = v.tensor() if isinstance(v, FockVector) else np.asarray(v, dtype=complex)
    return arr.reshape(spec.shape)


def _branch(d: Dyad, kraus: Sequence[np.ndarray], mode: int, prune: float) -> Iterator[Dyad]:
    same = d.right is d.left
    for K in kraus:
        left = apply_local(K, (mode,), d.left)
        nl = np.vdot(left, left).real
        if same:
            right, nr = left, nl
        else:
            right = apply_local(K, (mode,), d.right)
            nr = np.vdot(right, right).real
        if abs(d.weight) * math.sqrt(nl * nr) < prune:
            continue
        yield Dyad(d.weight, left, right)


def iter_kraus_two_modes(ens: DyadEnsemble, kraus_a, mode_a, kraus_b, mode_b, prune=PRUNE_TOL) -> Iterator[Dyad]:
    """Stream the branches of independent Kraus channels on two modes."""
    for d in ens.terms:
        for da in _branch(d, kraus_a, mode_a, prune):
            yield from _branch(da, kraus_b, mode_b, prune)
