"""
Qubit-level Pauli Hamiltonians and their fixed-particle-number sectors.

Site n of a chain is qubit n + L; on two chains, chain 1 occupies qubits
0..2L and chain 2 occupies 2L+1..4L+1. Qubit 0 is the leftmost Kronecker
factor, so it is the most significant bit of a computational index.
A qubit in |1> (sigma_z = -1) carries a particle.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError
from .lattice import (
    LatticeBasis,
    ModelSpec,
    SectorOperator,
    build_hamiltonian,
    build_potential,
)

MAX_CHAIN_L = 5
MAX_TWO_CHAIN_L = 2

PAULI = {
    "I": sp.identity(2, dtype=complex, format="csr"),
    "X": sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex)),
    "Y": sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex)),
    "Z": sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex)),
}


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    ops: Tuple[Tuple[int, str], ...]
    group: str

    def label(self, n_qubits: int) -> str:
        """Pauli string with qubit 0 first, e.g. 'IXXI'."""
        chars = ["I"] * n_qubits
        for qubit, op in self.ops:
            chars[qubit] = op
        return "".join(chars)


def pauli_string_matrix(n_qubits: int, ops: Sequence[Tuple[int, str]]) -> sp.csr_matrix:
    factors = [PAULI["I"]] * n_qubits
    for qubit, op in ops:
        factors[qubit] = PAULI[op]
    out = factors[0]
    for factor in factors[1:]:
        out = sp.kron(out, factor, format="csr")
    return out


def number_operator(n_qubits: int, qubits: Optional[Sequence[int]] = None) -> sp.csr_matrix:
    """Sum of (1 - sigma_z)/2 over `qubits` (all qubits by default)."""
    if qubits is None:
        qubits = range(n_qubits)
    indices = np.arange(2 ** n_qubits)
    counts = np.zeros(indices.size)
    for q in qubits:
        counts += (indices >> (n_qubits - 1 - q)) & 1
    return sp.diags(counts, format="csr")


@dataclass(frozen=True, eq=False)
class PauliHamiltonian:
    """Weighted sum of Pauli strings, grouped by the lattice term they realize."""

    n_qubits: int
    terms: Tuple[PauliTerm, ...]
    L: int
    chains: int = 1

    @property
    def groups(self) -> List[str]:
        seen: List[str] = []
        for term in self.terms:
            if term.group not in seen:
                seen.append(term.group)
        return seen

    def group_matrix(self, group: str) -> sp.csr_matrix:
        dim = 2 ** self.n_qubits
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for term in self.terms:
            if term.group == group:
                out = out + term.coefficient * pauli_string_matrix(self.n_qubits, term.ops)
        return out

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        dim = 2 ** self.n_qubits
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for group in self.groups:
            out = out + self.group_matrix(group)
        return out

    def chain_qubits(self, chain: int) -> range:
        width = 2 * self.L + 1
        return range((chain - 1) * width, chain * width)

    def max_commutator(self, operator: sp.spmatrix, group: Optional[str] = None) -> float:
        h = self.matrix if group is None else self.group_matrix(group)
        commutator = abs(h @ operator - operator @ h)
        return float(commutator.max()) if commutator.nnz else 0.0

    def conserves_particle_number(self, tol: float = 1e-12) -> bool:
        """Every group commutes with the particle number of every chain."""
        numbers = [number_operator(self.n_qubits, self.chain_qubits(c)) for c in range(1, self.chains + 1)]
        return all(
            self.max_commutator(n_op, group) <= tol for group in self.groups for n_op in numbers
        )


def _hopping_terms(q_low: int, q_high: int, scale: float, group: str) -> List[PauliTerm]:
    # -1/4 (X X + Y Y) on the bond between q_low and q_high
    return [
        PauliTerm(-0.25 * scale, ((q_high, "X"), (q_low, "X")), group),
        PauliTerm(-0.25 * scale, ((q_high, "Y"), (q_low, "Y")), group),
    ]


def _number_terms(qubit: int, weight: float, group: str) -> List[PauliTerm]:
    # weight * (1 - Z) / 2
    return [PauliTerm(0.5 * weight, (), group), PauliTerm(-0.5 * weight, ((qubit, "Z"),), group)]


def _pair_terms(qa: int, qb: int, weight: float, group: str) -> List[PauliTerm]:
    # weight * (1 - Z_a)(1 - Z_b) / 4
    quarter = 0.25 * weight
    return [
        PauliTerm(quarter, (), group),
        PauliTerm(-quarter, ((qa, "Z"),), group),
        PauliTerm(-quarter, ((qb, "Z"),), group),
        PauliTerm(quarter, ((qa, "Z"), (qb, "Z")), group),
    ]


def _chain_hopping(L: int, offset: int, scale: float, even_group: str, odd_group: str) -> List[PauliTerm]:
    terms: List[PauliTerm] = []
    for n in range(-L, L):
        group = even_group if n % 2 == 0 else odd_group
        terms += _hopping_terms(offset + n + L, offset + n + 1 + L, scale, group)
    return terms


def build_chain_pauli(
    L: int, potential: Mapping[int, float], kinetic_scale: float = 1.0
) -> PauliHamiltonian:
    """
    Single-chain qubit Hamiltonian D + V + A + B.

    Args:
        L: Half-extent (at most 5)
        potential: Site -> V_n
        kinetic_scale: Multiplier on the hopping and number terms of K

    Returns:
        PauliHamiltonian on 2L+1 qubits
    """
    if L > MAX_CHAIN_L or L < 0:
        raise ConfigurationError(f"Single-chain qubit check supports 0 <= L <= {MAX_CHAIN_L}, got {L}")
    terms = _chain_hopping(L, 0, kinetic_scale, "A", "B")
    for n in range(-L, L + 1):
        terms += _number_terms(n + L, kinetic_scale, "D")
    for n, v in sorted(potential.items()):
        if abs(n) > L:
            raise ConfigurationError(f"Potential site {n} is outside -{L}..{L}")
        if v:
            terms += _number_terms(n + L, v, "V")
    return PauliHamiltonian(2 * L + 1, tuple(terms), L, chains=1)


def build_two_chain_pauli(
    L: int,
    potential: Mapping[int, float],
    coupling: Mapping[Tuple[int, int], float],
    kinetic_scale: float = 1.0,
) -> PauliHamiltonian:
    """Two-chain qubit Hamiltonian A1 + B1 + A2 + B2 + D + V + W."""
    if L > MAX_TWO_CHAIN_L or L < 0:
        raise ConfigurationError(f"Two-chain qubit check supports 0 <= L <= {MAX_TWO_CHAIN_L}, got {L}")
    width = 2 * L + 1
    terms = _chain_hopping(L, 0, kinetic_scale, "A1", "B1")
    terms += _chain_hopping(L, width, kinetic_scale, "A2", "B2")
    for n1 in range(-L, L + 1):
        for n2 in range(-L, L + 1):
            terms += _pair_terms(n1 + L, width + n2 + L, kinetic_scale, "D")
    for n, v in sorted(potential.items()):
        if abs(n) > L:
            raise ConfigurationError(f"Potential site {n} is outside -{L}..{L}")
        if v:
            terms += _number_terms(n + L, v, "V")
            terms += _number_terms(width + n + L, v, "V")
    for (n1, n2), w in sorted(coupling.items()):
        if max(abs(n1), abs(n2)) > L:
            raise ConfigurationError(f"Coupling site ({n1}, {n2}) is outside the lattice")
        if w:
            terms += _pair_terms(n1 + L, width + n2 + L, w, "W")
    return PauliHamiltonian(2 * width, tuple(terms), L, chains=2)


def pauli_from_spec(spec: ModelSpec) -> PauliHamiltonian:
    if spec.chains == 1:
        return build_chain_pauli(spec.L, spec.potential, spec.kinetic_scale)
    grid = spec.coupling_array()
    coupling = {
        (i1 - spec.L, i2 - spec.L): float(grid[i1, i2]) for i1, i2 in zip(*np.nonzero(grid))
    }
    return build_two_chain_pauli(spec.L, spec.potential, coupling, spec.kinetic_scale)


def sector_indices(Hq: PauliHamiltonian) -> np.ndarray:
    """Computational indices of |[n]> (or |[n1,n2]>) in lattice basis order."""
    width = 2 * Hq.L + 1
    bits = [1 << (Hq.n_qubits - 1 - q) for q in range(Hq.n_qubits)]
    if Hq.chains == 1:
        return np.array([bits[q] for q in range(width)])
    return np.array([bits[q1] | bits[width + q2] for q1 in range(width) for q2 in range(width)])


def sector_restrict(
    Hq: PauliHamiltonian, sector: str = "auto", group: Optional[str] = None
) -> SectorOperator:
    """
    Matrix of Hq between the sector's basis kets, ordered like the lattice basis.

    Args:
        Hq: Qubit Hamiltonian
        sector: 'one-particle' (one chain), 'one-per-chain' (two chains) or 'auto'
        group: Restrict a single term group instead of the whole Hamiltonian

    Returns:
        SectorOperator on the matching LatticeBasis
    """
    expected = "one-particle" if Hq.chains == 1 else "one-per-chain"
    if sector == "auto":
        sector = expected
    if sector != expected:
        raise ConfigurationError(f"Sector '{sector}' does not fit a {Hq.chains}-chain Hamiltonian")
    idx = sector_indices(Hq)
    source = Hq.matrix if group is None else Hq.group_matrix(group)
    block = source[idx][:, idx]
    tag = group if group is not None else "H-composite"
    return SectorOperator(LatticeBasis(Hq.L, Hq.chains), block, tag)


@dataclass(frozen=True)
class SectorComparison:
    exact_deviation: float
    shift: float
    shifted_deviation: float
    hopping_deviation: float
    potential_deviation: float
    chains: int

    def passed(self, tol: float = 1e-12) -> bool:
        if self.chains == 1:
            return self.exact_deviation <= tol
        return (
            self.shifted_deviation <= tol
            and self.hopping_deviation <= tol
            and self.potential_deviation <= tol
        )

    @property
    def max_deviation(self) -> float:
        return self.exact_deviation if self.chains == 1 else self.shifted_deviation


def compare_sectors(spec: ModelSpec) -> SectorComparison:
    """
    Compare the qubit Hamiltonian's sector with the lattice Hamiltonian.

    The two-chain kinetic diagonal differs by a constant, so the comparison
    reports the shift and checks H - (trace/dim) I, plus the hopping and
    potential parts separately.
    """
    Hq = pauli_from_spec(spec)
    restricted = sector_restrict(Hq).dense()
    lattice = build_hamiltonian(spec).dense()
    diff = restricted - lattice
    dim = diff.shape[0]
    shift = float(np.trace(diff).real / dim)
    off_diagonal = diff - np.diag(np.diag(diff))

    potential_groups = ["V"] if spec.chains == 1 else ["V", "W"]
    potential = np.zeros((dim, dim), dtype=complex)
    for group in potential_groups:
        if group in Hq.groups:
            potential += sector_restrict(Hq, group=group).dense()

    return SectorComparison(
        exact_deviation=float(np.abs(diff).max()),
        shift=shift,
        shifted_deviation=float(np.abs(diff - shift * np.eye(dim)).max()),
        hopping_deviation=float(np.abs(off_diagonal).max()),
        potential_deviation=float(np.abs(potential - build_potential(spec).dense()).max()),
        chains=spec.chains,
    )
