"""Statevector / density-matrix engine and exact-diagonalization oracle.

Basis convention: qubit ``i`` is the i-th letter of a bitstring written left
to right, and a computational basis state corresponds to the integer whose
binary expansion is that bitstring (qubit 0 is the most significant bit).
``|010101>`` on six qubits is amplitude index 0b010101 = 21.  Pauli bitmasks
from :mod:`.pauli` put qubit ``i`` at bit ``i``, so they are bit-reversed
once per string before touching amplitude arrays.

A Pauli string acts on a basis state as

    P |b> = i**wy * (-1)**parity(z & b) * |b xor x>

where ``wy`` is the number of Y letters; all expectation kernels below are
vectorized forms of this action.

Randomness policy: every random quantity is drawn from an explicitly passed
seed or ``numpy.random.Generator`` (PCG64 via ``numpy.random.default_rng``).
There is no module-level RNG state; the seed-to-sample mapping is part of
the package's reproducibility contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .pauli import PauliString, PauliSum

__all__ = [
    "StateVector",
    "DensityMatrix",
    "HermitianMatrix",
    "State",
    "expectation",
    "expectation_table",
    "exact_ground_state",
    "depolarize",
    "depolarize_global",
    "random_gue_hermitian",
    "rotate_trial",
    "fidelity",
    "tune_theta_for_fidelity",
    "pauli_dense",
    "sum_dense",
    "instrumentation",
]

# Dense diagonalization below this dimension; Lanczos (ARPACK) above.
_DENSE_DIM_LIMIT = 1024
# Hard budget on exact diagonalization, dim = 2^14 = 16384.
_MAX_QUBITS = 14

# Fixed entropy for the ARPACK start vector: determinism of the sparse path
# must not depend on caller-provided seeds.
_ARPACK_SEED = 0x51AC5


@dataclass(frozen=True)
class StateVector:
    """Pure state on ``n_qubits`` qubits; amplitudes indexed as above."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.size < 2 or amp.size & (amp.size - 1):
            raise ValueError("amplitude vector length must be a power of two >= 2")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValueError("state vector must be normalized to 1e-12")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_amplitudes(cls, values: Iterable[complex], normalize: bool = False) -> "StateVector":
        amp = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                         dtype=np.complex128)
        if normalize:
            amp = amp / np.linalg.norm(amp)
        return cls(amp)

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        amp = np.zeros(1 << n_qubits, dtype=np.complex128)
        amp[index] = 1.0
        return cls(amp)

    @classmethod
    def from_bits(cls, bits: str) -> "StateVector":
        """Computational basis state from a bitstring, qubit 0 leftmost."""
        if not bits or any(b not in "01" for b in bits):
            raise ValueError(f"invalid bitstring {bits!r}")
        return cls.basis_state(len(bits), int(bits, 2))

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state; Hermitian, unit trace, positive semidefinite."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        dim = m.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError("dimension must be a power of two >= 2")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("density matrix must be Hermitian to 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("density matrix must have unit trace to 1e-12")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix must be positive semidefinite")
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_pure(cls, state: StateVector) -> "DensityMatrix":
        return state.density_matrix()

    @property
    def n_qubits(self) -> int:
        return self.entries.shape[0].bit_length() - 1


@dataclass(frozen=True)
class HermitianMatrix:
    """Dense Hermitian matrix, e.g. a random rotation generator."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("matrix must be Hermitian to 1e-12")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


State = Union[StateVector, DensityMatrix]


@dataclass
class _Instrumentation:
    """Counters for the measure-once architecture tests.

    ``table_builds`` counts calls to :func:`expectation_table`; parameter
    sweeps must never increase it.  Single-threaded counters; parallel
    callers would need per-worker copies merged at the end.
    """

    table_builds: int = 0
    string_contractions: int = 0

    def reset(self) -> None:
        self.table_builds = 0
        self.string_contractions = 0


instrumentation = _Instrumentation()


def _reverse_mask(mask: int, n: int) -> int:
    out = 0
    for i in range(n):
        if mask >> i & 1:
            out |= 1 << (n - 1 - i)
    return out


if hasattr(np, "bitwise_count"):

    def _parity(values: np.ndarray) -> np.ndarray:
        return np.bitwise_count(values) & 1

else:  # pragma: no cover - numpy < 2.0

    def _parity(values: np.ndarray) -> np.ndarray:
        v = values.astype(np.int64)
        for shift in (32, 16, 8, 4, 2, 1):
            v ^= v >> shift
        return v & 1


def _string_action(string: PauliString) -> tuple[int, int, complex]:
    """Index-space (x, z) masks and the i**wy phase of a string's action."""
    n = string.n_qubits
    rx = _reverse_mask(string.x_mask, n)
    rz = _reverse_mask(string.z_mask, n)
    wy = (string.x_mask & string.z_mask).bit_count()
    return rx, rz, 1j ** wy


def expectation(state: State, string: PauliString) -> float:
    """<psi|P|psi> or Tr(rho P); exact and real for any valid state."""
    if state.n_qubits != string.n_qubits:
        raise ValueError(
            f"qubit-count mismatch: state has {state.n_qubits}, string {string.n_qubits}"
        )
    instrumentation.string_contractions += 1
    rx, rz, phase = _string_action(string)
    dim = 1 << string.n_qubits
    idx = np.arange(dim)
    signs = 1.0 - 2.0 * _parity(idx & rz)
    if isinstance(state, StateVector):
        amp = state.amplitudes
        # <P> = (-i)^wy * sum_c conj(psi_c) (-1)^parity(c&z) psi_(c xor x)
        value = np.conj(phase) * np.sum(np.conj(amp) * signs * amp[idx ^ rx])
    else:
        rho = state.entries
        # Tr(rho P) = i^wy * sum_b rho[b, b xor x] (-1)^parity(b&z)
        value = phase * np.sum(rho[idx, idx ^ rx] * signs)
    return float(value.real)


def expectation_table(
    state: State, strings: Iterable[PauliString]
) -> dict[PauliString, float]:
    """Batch expectations for a set of strings against one state.

    One call corresponds to one round of measurements on a prepared state;
    downstream estimators recombine table entries classically, so sweeping
    parameters never adds table builds.  The identity maps to 1.
    """
    instrumentation.table_builds += 1
    strings = list(strings)
    n = state.n_qubits
    dim = 1 << n
    idx = np.arange(dim)
    out: dict[PauliString, float] = {}
    if isinstance(state, StateVector):
        amp = state.amplitudes
        amp_conj = np.conj(amp)
        for s in strings:
            if s.n_qubits != n:
                raise ValueError("qubit-count mismatch in expectation table")
            if s.is_identity():
                out[s] = 1.0
                continue
            rx, rz, phase = _string_action(s)
            signs = 1.0 - 2.0 * _parity(idx & rz)
            value = np.conj(phase) * np.sum(amp_conj * signs * amp[idx ^ rx])
            out[s] = float(value.real)
    else:
        rho = state.entries
        for s in strings:
            if s.n_qubits != n:
                raise ValueError("qubit-count mismatch in expectation table")
            if s.is_identity():
                out[s] = 1.0
                continue
            rx, rz, phase = _string_action(s)
            signs = 1.0 - 2.0 * _parity(idx & rz)
            value = phase * np.sum(rho[idx, idx ^ rx] * signs)
            out[s] = float(value.real)
    instrumentation.string_contractions += len(strings)
    return out


def pauli_dense(string: PauliString) -> np.ndarray:
    """Dense matrix of a single string (index-space action, not kron chains)."""
    dim = 1 << string.n_qubits
    rx, rz, phase = _string_action(string)
    idx = np.arange(dim)
    signs = 1.0 - 2.0 * _parity(idx & rz)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[idx ^ rx, idx] = phase * signs
    return mat


def _constant_coefficients(op: PauliSum) -> list[tuple[PauliString, complex]]:
    pairs = []
    for s, poly in op.terms.items():
        pairs.append((s, poly.constant_value()))
    return pairs


def sum_dense(op: PauliSum) -> np.ndarray:
    """Dense matrix of a fully bound sum."""
    dim = 1 << op.n_qubits
    idx = np.arange(dim)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for s, coeff in _constant_coefficients(op):
        rx, rz, phase = _string_action(s)
        signs = 1.0 - 2.0 * _parity(idx & rz)
        mat[idx ^ rx, idx] += coeff * phase * signs
    return mat


def _sum_sparse(op: PauliSum) -> scipy.sparse.csr_matrix:
    dim = 1 << op.n_qubits
    idx = np.arange(dim)
    n_terms = len(op.terms)
    rows = np.empty(n_terms * dim, dtype=np.int64)
    cols = np.empty(n_terms * dim, dtype=np.int64)
    vals = np.empty(n_terms * dim, dtype=np.complex128)
    for t, (s, coeff) in enumerate(_constant_coefficients(op)):
        rx, rz, phase = _string_action(s)
        signs = 1.0 - 2.0 * _parity(idx & rz)
        sl = slice(t * dim, (t + 1) * dim)
        rows[sl] = idx ^ rx
        cols[sl] = idx
        vals[sl] = coeff * phase * signs
    mat = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    if mat.nnz and np.abs(mat.data.imag).max() < 1e-14 * max(1.0, np.abs(mat.data).max()):
        mat = scipy.sparse.csr_matrix((mat.data.real, mat.indices, mat.indptr), shape=mat.shape)
    return mat


def exact_ground_state(
    hamiltonian: PauliSum,
    *,
    degeneracy_tol: float = 1e-9,
    projection_tol: float = 1e-8,
) -> tuple[float, StateVector]:
    """Ground energy and a deterministic ground vector of a bound Hamiltonian.

    Degenerate (or numerically near-degenerate) ground spaces are resolved
    by projecting the computational basis state of smallest binary index
    with projection norm above ``projection_tol`` onto the ground space and
    normalizing.  The projector is basis-independent, so the returned vector
    (including its global phase: the tie-break amplitude is real positive)
    does not depend on eigensolver gauge choices.
    """
    n = hamiltonian.n_qubits
    if n > _MAX_QUBITS:
        raise ValueError(f"exact diagonalization limited to {_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    if dim <= _DENSE_DIM_LIMIT:
        evals, evecs = np.linalg.eigh(sum_dense(hamiltonian))
    else:
        evals, evecs = _lanczos_lowest(_sum_sparse(hamiltonian), dim)
    e0 = float(evals[0])
    cluster = evals <= e0 + degeneracy_tol * max(1.0, abs(e0))
    ground = np.ascontiguousarray(evecs[:, cluster])
    # Projection weights of each basis state on the ground space.
    basis_weight = np.sum(np.abs(ground) ** 2, axis=1)
    hits = np.nonzero(basis_weight > projection_tol**2)[0]
    if hits.size == 0:
        raise RuntimeError("no basis state overlaps the ground space")
    anchor = int(hits[0])
    vec = ground @ ground[anchor, :].conj()
    vec /= np.linalg.norm(vec)
    return e0, StateVector(vec)


def _lanczos_lowest(mat: scipy.sparse.csr_matrix, dim: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_ARPACK_SEED)
    v0 = rng.standard_normal(dim)
    if np.iscomplexobj(mat.data):
        v0 = v0 + 1j * rng.standard_normal(dim)
    k = 6
    while True:
        vals, vecs = scipy.sparse.linalg.eigsh(
            mat, k=k, which="SA", v0=v0, tol=1e-10, ncv=min(dim - 1, max(4 * k, 40))
        )
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        spread = vals[-1] - vals[0]
        # All returned values clustered at the bottom: ask for more to make
        # sure the full (near-)degenerate ground space was captured.
        if spread > 1e-9 * max(1.0, abs(vals[0])) or k >= min(32, dim - 2):
            return vals, vecs
        k = min(2 * k, 32, dim - 2)


def depolarize(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Single-qubit depolarizing channel applied independently to every qubit.

    Per qubit: rho -> (1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z),
    which equals (1 - p) rho + p * Tr_q(rho) (x) I/2.  The expectation of a
    weight-w Pauli string therefore contracts by (1 - p)**w.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise strength must lie in [0, 1], got {p}")
    n = rho.n_qubits
    tensor = rho.entries.reshape((2,) * (2 * n))
    for q in range(n):
        moved = np.moveaxis(tensor, (q, n + q), (0, 1)).copy()
        traced = moved[0, 0] + moved[1, 1]
        moved *= 1.0 - p
        moved[0, 0] += 0.5 * p * traced
        moved[1, 1] += 0.5 * p * traced
        tensor = np.moveaxis(moved, (0, 1), (q, n + q))
    dim = 1 << n
    return DensityMatrix(tensor.reshape(dim, dim))


def depolarize_global(rho: DensityMatrix, p: float) -> DensityMatrix:
    """White-noise variant: rho -> (1 - p) rho + p I / 2^n."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise strength must lie in [0, 1], got {p}")
    dim = rho.entries.shape[0]
    mixed = np.eye(dim, dtype=np.complex128) / dim
    return DensityMatrix((1.0 - p) * rho.entries + p * mixed)


def random_gue_hermitian(dim: int, seed: int | np.random.Generator) -> HermitianMatrix:
    """Gaussian-unitary-ensemble sample M = (A + A^dagger)/2.

    A has independent standard complex Gaussian entries.  The mapping from
    (dim, seed) to the matrix is deterministic: entries are drawn from
    ``numpy.random.default_rng(seed)`` (PCG64) in a fixed order.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    return HermitianMatrix((a + a.conj().T) / 2.0)


def rotate_trial(psi0: StateVector, generator: HermitianMatrix, theta: float) -> StateVector:
    """exp(-i theta M) |psi0> via Hermitian eigendecomposition (exact)."""
    if generator.dim != psi0.amplitudes.size:
        raise ValueError("generator dimension does not match the state")
    evals, evecs = np.linalg.eigh(generator.entries)
    rotated = evecs @ (np.exp(-1j * theta * evals) * (evecs.conj().T @ psi0.amplitudes))
    return StateVector(rotated / np.linalg.norm(rotated))


def fidelity(a: StateVector, b: State) -> float:
    """|<a|b>|^2 for pure b, <a|rho|a> for mixed b."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit-count mismatch in fidelity")
    if isinstance(b, StateVector):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    return float(np.real(np.vdot(a.amplitudes, b.entries @ a.amplitudes)))


class FidelityTargetError(RuntimeError):
    """The rotation angle scan never reached the requested overlap."""


def tune_theta_for_fidelity(
    psi0: StateVector,
    generator: HermitianMatrix,
    f_target: float,
    tol: float = 1e-3,
    *,
    theta_step: float = 0.01,
    theta_max: float = 10.0,
) -> tuple[float, float]:
    """Smallest rotation angle bringing |<psi_t|psi0>|^2 down to ``f_target``.

    Scans theta upward from 0 in ``theta_step`` increments until the
    fidelity first drops to or below the target, then bisects the bracketing
    interval.  F(theta) is not monotonic, so this is a first-crossing
    search, not a global solve.
    """
    if not 0.0 < f_target <= 1.0:
        raise ValueError("fidelity target must lie in (0, 1]")
    if generator.dim != psi0.amplitudes.size:
        raise ValueError("generator dimension does not match the state")
    evals, evecs = np.linalg.eigh(generator.entries)
    weights = np.abs(evecs.conj().T @ psi0.amplitudes) ** 2

    def overlap(theta: float) -> float:
        return float(abs(np.sum(weights * np.exp(-1j * theta * evals))) ** 2)

    lo, f_lo = 0.0, overlap(0.0)
    if f_lo <= f_target:
        return 0.0, f_lo
    hi = theta_step
    while True:
        if hi > theta_max:
            raise FidelityTargetError(
                f"fidelity never reached {f_target} for theta <= {theta_max};"
                " resample the rotation generator"
            )
        f_hi = overlap(hi)
        if f_hi <= f_target:
            break
        lo, f_lo = hi, f_hi
        hi += theta_step
    theta, f_theta = hi, f_hi
    for _ in range(200):
        if abs(f_theta - f_target) <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = overlap(mid)
        if f_mid <= f_target:
            hi, theta, f_theta = mid, mid, f_mid
        else:
            lo = mid
    return theta, f_theta
