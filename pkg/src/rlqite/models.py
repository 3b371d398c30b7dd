"""Problem instances: transverse-field Ising chain and SK spin glass."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapacityExceededError,
    DegenerateInputError,
    InvalidArgumentError,
    NotConvergedError,
)
from .states import (
    Hamiltonian,
    LocalTerm,
    PauliString,
    Statevector,
    exact_ite,
    expectation,
    hamiltonian_matrix,
)

MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class TfimSpec:
    """Open-boundary chain -sum_j (J Z_j Z_{j+1}) - sum_j (h X_j)."""

    num_qubits: int
    J: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if self.num_qubits < 2:
            raise InvalidArgumentError("TFIM needs at least 2 qubits")


@dataclass(frozen=True)
class SkSpec:
    """Complete-graph ZZ glass: sum_{i<j} J_ij Z_i Z_j, 0-based pairs."""

    num_qubits: int
    couplings: tuple  # ((i, j, J_ij), ...) with i < j

    def coupling_map(self) -> dict:
        return {(i, j): v for i, j, v in self.couplings}


def build_tfim(spec: TfimSpec) -> Hamiltonian:
    """Field terms X_0..X_{N-1} first, then bonds Z_0Z_1..Z_{N-2}Z_{N-1}."""
    n = spec.num_qubits
    terms = [
        LocalTerm(-spec.h, PauliString(((q, "X"),))) for q in range(n)
    ] + [
        LocalTerm(-spec.J, PauliString(((q, "Z"), (q + 1, "Z")))) for q in range(n - 1)
    ]
    return Hamiltonian(n, terms)


def build_sk(spec: SkSpec) -> Hamiltonian:
    """Terms in lexicographic (i, j) order; every pair must be present."""
    n = spec.num_qubits
    cmap = spec.coupling_map()
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in cmap:
                raise InvalidArgumentError(f"missing coupling for pair ({i}, {j})")
            terms.append(
                LocalTerm(float(cmap[(i, j)]), PauliString(((i, "Z"), (j, "Z"))))
            )
    return Hamiltonian(n, terms)


def sample_sk(num_qubits: int, seed: int) -> SkSpec:
    """Couplings i.i.d. uniform on (-1, 1) from a seeded generator."""
    rng = np.random.default_rng(seed)
    couplings = []
    for i in range(num_qubits):
        for j in range(i + 1, num_qubits):
            couplings.append((i, j, float(rng.uniform(-1.0, 1.0))))
    return SkSpec(num_qubits, tuple(couplings))


@dataclass
class GroundSolution:
    energy: float
    degeneracy: int
    # for diagonal Hamiltonians: the ground bitstring indices; otherwise an
    # orthonormal (dim, degeneracy) eigenbasis of the ground space
    ground_indices: list = field(default_factory=list)
    ground_basis: np.ndarray | None = None

    @property
    def is_diagonal(self) -> bool:
        return self.ground_basis is None

    def bitstrings(self, num_qubits: int) -> list[str]:
        return [format(i, f"0{num_qubits}b") for i in self.ground_indices]


def _is_diagonal(h: Hamiltonian) -> bool:
    return all(
        all(p == "Z" for _, p in t.pauli.ops) for t in h.terms
    )


def classical_energies(h: Hamiltonian) -> np.ndarray:
    """Diagonal of a Z-only Hamiltonian over all 2^N bitstrings."""
    n = h.num_qubits
    energies = np.zeros(2**n)
    # sign of Z on qubit q for every basis index, qubit 0 = MSB
    idx = np.arange(2**n)
    signs = np.array(
        [1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1) for q in range(n)]
    )
    for t in h.terms:
        prod = np.ones(2**n)
        for q, _ in t.pauli.ops:
            prod = prod * signs[q]
        energies += t.coefficient * prod
    return energies


def ground_solution(h: Hamiltonian, degeneracy_tol: float = 1e-9) -> GroundSolution:
    if h.num_qubits > MAX_DENSE_QUBITS:
        raise CapacityExceededError(f"ground solve capped at N={MAX_DENSE_QUBITS}")
    if _is_diagonal(h):
        energies = classical_energies(h)
        e0 = float(energies.min())
        idx = np.nonzero(energies <= e0 + degeneracy_tol)[0]
        return GroundSolution(e0, len(idx), ground_indices=[int(i) for i in idx])
    w, v = np.linalg.eigh(hamiltonian_matrix(h))
    mask = w <= w[0] + degeneracy_tol
    return GroundSolution(
        float(w[0]), int(mask.sum()), ground_basis=v[:, mask]
    )


def ground_state(h: Hamiltonian) -> Statevector:
    """Lowest eigenvector (first column of the ground space)."""
    gs = ground_solution(h)
    if gs.is_diagonal:
        amp = np.zeros(2**h.num_qubits, dtype=complex)
        amp[gs.ground_indices[0]] = 1.0
        return Statevector(h.num_qubits, amp)
    return Statevector(h.num_qubits, gs.ground_basis[:, 0].astype(complex))


def ground_probability(state: Statevector, gs: GroundSolution) -> float:
    """Weight of the state inside the ground space."""
    if gs.is_diagonal:
        for i in gs.ground_indices:
            if i >= state.amplitudes.size:
                raise InvalidArgumentError("dimension mismatch")
        return float(
            sum(abs(state.amplitudes[i]) ** 2 for i in gs.ground_indices)
        )
    if gs.ground_basis.shape[0] != state.amplitudes.size:
        raise InvalidArgumentError("dimension mismatch")
    overlaps = gs.ground_basis.conj().T @ state.amplitudes
    return float(np.sum(np.abs(overlaps) ** 2))


def adaptive_beta(
    h: Hamiltonian,
    init: Statevector,
    gap_target: float,
    beta_max: float = 100.0,
) -> float:
    """Smallest beta whose exact-ITE energy sits gap_target above ground.

    Bisection on the monotone gap(beta) = <ite(beta)|H|ite(beta)> - E_gs;
    accepts when the gap is within 10% of the target.
    """
    if gap_target <= 0:
        raise InvalidArgumentError("gap_target must be positive")
    e_gs = ground_solution(h).energy
    w, v = np.linalg.eigh(hamiltonian_matrix(h))
    amps0 = init.amplitudes

    def gap(beta: float) -> float:
        weights = np.exp(-beta * (w - w[0]))
        out = v @ (weights * (v.conj().T @ amps0))
        n = np.linalg.norm(out)
        if n < 1e-300:
            raise DegenerateInputError("no overlap with the low-energy space")
        out = out / n
        return float(np.real(np.vdot(out, (v * w) @ (v.conj().T @ out)))) - e_gs

    if gap(0.0) <= gap_target:
        return 0.0
    if gap(beta_max) > 1.1 * gap_target:
        raise NotConvergedError(f"gap target not bracketed below beta={beta_max}")
    lo, hi = 0.0, beta_max
    while hi - lo > 1e-3 * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if gap(mid) > gap_target:
            lo = mid
        else:
            hi = mid
    return hi


def ite_energy(h: Hamiltonian, init: Statevector, beta: float) -> float:
    return expectation(exact_ite(h, init, beta), h)
