"""Dense statevector representation and Pauli algebra.

Conventions used throughout the package:
  - qubit 0 is the most significant bit of the amplitude index, so
    basis state |q0 q1 ... q_{N-1}> lives at index int("".join(bits), 2);
  - operations never mutate their inputs, they return new Statevectors.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityExceededError,
    DegenerateInputError,
    InternalInconsistencyError,
    InvalidArgumentError,
)

MAX_DENSE_QUBITS = 12
MAX_DOMAIN_QUBITS = 6

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_Z_SIGNS = np.array([1.0, -1.0])
_Y_PHASES = np.array([1.0j, -1.0j])


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; empty ops is the identity."""

    ops: tuple[tuple[int, str], ...]

    def __post_init__(self):
        prev = -1
        for q, p in self.ops:
            if q <= prev:
                raise InvalidArgumentError(
                    f"qubit indices must be strictly increasing, got {self.ops}"
                )
            if p not in ("X", "Y", "Z"):
                raise InvalidArgumentError(f"unknown Pauli letter {p!r}")
            prev = q

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)


@dataclass(frozen=True)
class LocalTerm:
    """One weighted Pauli string of a local Hamiltonian."""

    coefficient: float
    pauli: PauliString

    @property
    def support(self) -> tuple[int, ...]:
        return self.pauli.support


@dataclass
class Hamiltonian:
    num_qubits: int
    terms: list[LocalTerm] = field(default_factory=list)

    def __post_init__(self):
        for t in self.terms:
            for q in t.support:
                if q >= self.num_qubits:
                    raise InvalidArgumentError(
                        f"term acts on qubit {q} but system has {self.num_qubits}"
                    )


@dataclass
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise InvalidArgumentError(
                f"need 2^{self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "Statevector":
        n = self.norm()
        if n < 1e-300:
            raise DegenerateInputError("cannot normalize a zero vector")
        return Statevector(self.num_qubits, self.amplitudes / n)


def plus_state(num_qubits: int) -> Statevector:
    """Uniform superposition (|0>+|1>)^N / sqrt(2^N)."""
    if num_qubits < 1:
        raise InvalidArgumentError("num_qubits must be >= 1")
    amp = np.full(2**num_qubits, 2.0 ** (-num_qubits / 2), dtype=complex)
    return Statevector(num_qubits, amp)


def basis_state(num_qubits: int, bits: str) -> Statevector:
    """Computational basis state from a bitstring, qubit 0 first."""
    if len(bits) != num_qubits or set(bits) - {"0", "1"}:
        raise InvalidArgumentError(f"bad bitstring {bits!r} for {num_qubits} qubits")
    amp = np.zeros(2**num_qubits, dtype=complex)
    amp[int(bits, 2)] = 1.0
    return Statevector(num_qubits, amp)


def _apply_pauli_amps(amps: np.ndarray, num_qubits: int, ops) -> np.ndarray:
    """Apply a Pauli string to a raw amplitude array."""
    out = amps.reshape((2,) * num_qubits)
    for q, p in ops:
        if p == "X":
            out = np.flip(out, axis=q)
        elif p == "Z":
            shape = [1] * num_qubits
            shape[q] = 2
            out = out * _Z_SIGNS.reshape(shape)
        else:  # Y
            shape = [1] * num_qubits
            shape[q] = 2
            out = np.flip(out * _Y_PHASES.reshape(shape), axis=q)
    return out.reshape(-1)


def apply_pauli(state: Statevector, p: PauliString) -> Statevector:
    for q, _ in p.ops:
        if q >= state.num_qubits:
            raise InvalidArgumentError(f"qubit {q} out of range")
    return Statevector(
        state.num_qubits, _apply_pauli_amps(state.amplitudes, state.num_qubits, p.ops)
    )


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b> with the ket conjugated on the left."""
    if a.num_qubits != b.num_qubits:
        raise InvalidArgumentError("dimension mismatch")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: Statevector, b: Statevector) -> float:
    """|<a|b>|, the pure-state overlap fidelity, phase invariant."""
    return abs(inner_product(a, b))


def expectation(state: Statevector, h: Hamiltonian) -> float:
    """<psi|H|psi> as a sum over weighted Pauli strings."""
    acc = 0.0 + 0.0j
    for term in h.terms:
        sigma = _apply_pauli_amps(state.amplitudes, state.num_qubits, term.pauli.ops)
        acc += term.coefficient * np.vdot(state.amplitudes, sigma)
    if abs(acc.imag) > 1e-8:
        raise InternalInconsistencyError(
            f"expectation has imaginary residue {acc.imag:.3e}"
        )
    return float(acc.real)


def hamiltonian_matrix(h: Hamiltonian) -> np.ndarray:
    """Dense 2^N x 2^N matrix of the Hamiltonian (N <= 12)."""
    if h.num_qubits > MAX_DENSE_QUBITS:
        raise CapacityExceededError(f"dense matrix capped at N={MAX_DENSE_QUBITS}")
    dim = 2**h.num_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    for term in h.terms:
        factor = np.array([[1.0 + 0.0j]])
        lookup = dict(term.pauli.ops)
        for q in range(h.num_qubits):
            factor = np.kron(factor, PAULI_MATS[lookup.get(q, "I")])
        mat += term.coefficient * factor
    return mat


def exact_ite(h: Hamiltonian, init: Statevector, beta: float) -> Statevector:
    """Normalized e^{-beta H}|init> via dense Hermitian eigendecomposition."""
    if beta < 0:
        raise InvalidArgumentError("beta must be >= 0")
    if h.num_qubits > MAX_DENSE_QUBITS:
        raise CapacityExceededError(f"exact evolution capped at N={MAX_DENSE_QUBITS}")
    w, v = np.linalg.eigh(hamiltonian_matrix(h))
    # shift by the ground energy so weights never overflow for large beta
    weights = np.exp(-beta * (w - w[0]))
    out = v @ (weights * (v.conj().T @ init.amplitudes))
    n = np.linalg.norm(out)
    if n < 1e-300:
        raise DegenerateInputError("initial state has no weight in the evolved space")
    return Statevector(h.num_qubits, out / n)


@functools.lru_cache(maxsize=8)
def domain_pauli_basis(domain_size: int):
    """All 4^D - 1 non-identity Pauli patterns on D qubits.

    Returns (patterns, mats): patterns is a tuple of letter tuples like
    ('X', 'I'), mats is a (4^D-1, 2^D, 2^D) complex array, in lockstep order.
    """
    patterns = []
    mats = []
    for combo in itertools.product("IXYZ", repeat=domain_size):
        if all(c == "I" for c in combo):
            continue
        m = np.array([[1.0 + 0.0j]])
        for c in combo:
            m = np.kron(m, PAULI_MATS[c])
        patterns.append(combo)
        mats.append(m)
    return tuple(patterns), np.array(mats)


def _to_domain_axes(amps: np.ndarray, num_qubits: int, domain) -> tuple[np.ndarray, list]:
    """Reshape amplitudes to (2^D, rest) with the domain qubits leading."""
    rest = [q for q in range(num_qubits) if q not in domain]
    perm = list(domain) + rest
    mat = amps.reshape((2,) * num_qubits).transpose(perm).reshape(2 ** len(domain), -1)
    return mat, perm


def _from_domain_axes(mat: np.ndarray, num_qubits: int, perm) -> np.ndarray:
    inv = np.argsort(perm)
    return mat.reshape((2,) * num_qubits).transpose(inv).reshape(-1)


def apply_domain_unitary(
    state: Statevector, a_coeffs: dict, domain, dt: float
) -> Statevector:
    """Apply exp(-i dt A) where A = sum_K a_K sigma_K on the domain qubits.

    a_coeffs maps PauliString (absolute qubit indices, support inside the
    domain) to a real coefficient. The unitary is built by Hermitian
    eigendecomposition, so the output norm is exact up to roundoff.
    """
    domain = tuple(domain)
    d = len(domain)
    if d > MAX_DOMAIN_QUBITS:
        raise CapacityExceededError(f"domain capped at {MAX_DOMAIN_QUBITS} qubits")
    pos = {q: i for i, q in enumerate(domain)}
    patterns, mats = domain_pauli_basis(d)
    index = {pat: k for k, pat in enumerate(patterns)}
    coeff = np.zeros(len(patterns))
    for pstring, value in a_coeffs.items():
        if isinstance(value, complex) or (
            hasattr(value, "imag") and abs(np.imag(value)) > 0
        ):
            raise InvalidArgumentError("coefficients must be real")
        letters = ["I"] * d
        for q, p in pstring.ops:
            if q not in pos:
                raise InvalidArgumentError(f"string acts outside the domain: qubit {q}")
            letters[pos[q]] = p
        pat = tuple(letters)
        if pat not in index:
            # the all-identity string only shifts the global phase; skip it
            continue
        coeff[index[pat]] += float(np.real(value))
    a_mat = np.einsum("k,kij->ij", coeff, mats)
    w, v = np.linalg.eigh(a_mat)
    unitary = (v * np.exp(-1.0j * dt * w)) @ v.conj().T
    psi_mat, perm = _to_domain_axes(state.amplitudes, state.num_qubits, domain)
    out = _from_domain_axes(unitary @ psi_mat, state.num_qubits, perm)
    return Statevector(state.num_qubits, out)
