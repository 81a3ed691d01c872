"""
Lattice bases, sector operators and model presets.

Sites run over n = -L..L on one chain (one-particle sector) or on two linked
chains (two-particle sector, one particle per chain). Two-particle kets
|[n1,n2]> are stored row-major with n1 as the slow index.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import math

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError, SimulationError

HERMITIAN_TOL = 1e-12

KINETIC_TAGS = ("K", "A", "B", "D", "A1", "B1", "A2", "B2")
POTENTIAL_TAGS = ("V", "W")
OPERATOR_TAGS = KINETIC_TAGS + POTENTIAL_TAGS + ("H-composite",)

INITIAL_KINDS = ("point", "spread", "random", "gaussian")

# Smeared initial states, coefficients before normalization.
SPREAD_ONE_PARTICLE = {0: 0.75, 1: 0.43, -1: 0.43, 2: 0.26, -2: 0.26}
SPREAD_TWO_PARTICLE = {
    (0, 0): 0.81,
    (1, 0): 0.30,
    (-1, 0): 0.30,
    (0, 1): 0.30,
    (0, -1): 0.30,
}


@dataclass(frozen=True)
class LatticeBasis:
    """Position basis of the one- or two-particle sector."""

    L: int
    particles: int = 1

    @property
    def n_sites(self) -> int:
        return 2 * self.L + 1

    @property
    def dimension(self) -> int:
        return self.n_sites ** self.particles

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def index(self, *sites: int) -> int:
        """
        Basis index of |[n]> or |[n1,n2]>.

        Args:
            sites: One site per particle

        Returns:
            Position of the ket in the amplitude vector
        """
        if len(sites) != self.particles:
            raise ConfigurationError(
                f"Expected {self.particles} site(s), got {len(sites)}"
            )
        idx = 0
        for n in sites:
            if abs(n) > self.L:
                raise ConfigurationError(f"Site {n} is outside -{self.L}..{self.L}")
            idx = idx * self.n_sites + (n + self.L)
        return idx

    def sites_of(self, index: int) -> Tuple[int, ...]:
        """Inverse of `index`."""
        if self.particles == 1:
            return (index - self.L,)
        i1, i2 = divmod(index, self.n_sites)
        return (i1 - self.L, i2 - self.L)

    def max_abs_site(self) -> np.ndarray:
        """max(|n1|, |n2|) (or |n|) for every basis state."""
        radius = np.abs(self.sites)
        if self.particles == 1:
            return radius
        return np.maximum.outer(radius, radius).ravel()

    def to_grid(self, amplitudes: np.ndarray) -> np.ndarray:
        """Reshape a two-particle vector to an (n1, n2) grid."""
        if self.particles != 2:
            raise ConfigurationError("Grids are only defined for the two-particle sector")
        return np.asarray(amplitudes).reshape(self.n_sites, self.n_sites)

    def edge_mask(self, width: int = 2) -> np.ndarray:
        """Basis states with some particle on the outermost `width` sites of its chain."""
        return self.max_abs_site() > self.L - width

    @cached_property
    def exchange_permutation(self) -> np.ndarray:
        """Index of |[n2,n1]> for every |[n1,n2]>."""
        if self.particles != 2:
            raise ConfigurationError("Chain exchange needs the two-particle sector")
        n = self.n_sites
        return np.arange(n * n).reshape(n, n).T.ravel()

    @cached_property
    def exchange_transform(self) -> Tuple[sp.csc_matrix, int]:
        """
        Orthogonal change of basis to chain-exchange eigenstates.

        Columns are (|[n1,n2]> + |[n2,n1]>)/sqrt(2) for n1 < n2 and |[n,n]>
        (symmetric), followed by (|[n1,n2]> - |[n2,n1]>)/sqrt(2) for n1 < n2.

        Returns:
            (Q, n_symmetric) with Q of shape (dimension, dimension)
        """
        if self.particles != 2:
            raise ConfigurationError("Chain exchange needs the two-particle sector")
        n = self.n_sites
        i, j = np.triu_indices(n)
        off = i != j
        half = 1.0 / math.sqrt(2.0)
        n_sym = i.size
        sym_cols = np.arange(n_sym)
        anti_cols = n_sym + np.arange(int(off.sum()))
        io, jo = i[off], j[off]
        rows = np.concatenate([i * n + j, jo * n + io, io * n + jo, jo * n + io])
        cols = np.concatenate([sym_cols, sym_cols[off], anti_cols, anti_cols])
        values = np.concatenate([
            np.where(off, half, 1.0),
            np.full(io.size, half),
            np.full(io.size, half),
            np.full(io.size, -half),
        ])
        Q = sp.csc_matrix((values, (rows, cols)), shape=(self.dimension, self.dimension))
        return Q, n_sym


@dataclass(frozen=True)
class ModelSpec:
    """
    Declarative description of a lattice model.

    `potential` maps site -> V_n. `coupling` maps (n1, n2) -> W_{n1,n2} and
    `contact_coupling` adds c * delta_{n1,n2} on top of it; both are only
    meaningful for two chains.
    """

    chains: int = 1
    L: int = 25
    R: int = 5
    kinetic_scale: float = 1.0
    potential: Dict[int, float] = field(default_factory=dict)
    coupling: Optional[Dict[Tuple[int, int], float]] = None
    contact_coupling: float = 0.0
    name: str = "custom"
    allow_soft_kinetic: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Raise ConfigurationError unless this describes a valid lattice."""
        if self.chains not in (1, 2):
            raise ConfigurationError(f"chains must be 1 or 2, got {self.chains}")
        if not isinstance(self.L, (int, np.integer)) or self.L < 0:
            raise ConfigurationError(f"L must be a nonnegative integer, got {self.L}")
        if not isinstance(self.R, (int, np.integer)):
            raise ConfigurationError(f"R must be an integer, got {self.R}")
        if self.L == 0:
            if self.R != 0:
                raise ConfigurationError("A single-site lattice (L=0) requires R=0")
        elif not 0 < self.R < self.L:
            raise ConfigurationError(f"Require 0 < R < L, got R={self.R}, L={self.L}")
        if not math.isfinite(self.kinetic_scale) or self.kinetic_scale <= 0:
            raise ConfigurationError(f"kinetic_scale must be positive, got {self.kinetic_scale}")
        if self.kinetic_scale < 1 and not self.allow_soft_kinetic:
            raise ConfigurationError(
                f"kinetic_scale {self.kinetic_scale} < 1 requires allow_soft_kinetic=True"
            )
        for n, value in self.potential.items():
            if abs(n) > self.L:
                raise ConfigurationError(f"Potential site {n} is outside -{self.L}..{self.L}")
            if not math.isfinite(value):
                raise ConfigurationError(f"Potential at site {n} is not finite")
        if self.chains == 1 and (self.coupling or self.contact_coupling):
            raise ConfigurationError("A coupling W is only defined for two chains")
        for (n1, n2), value in (self.coupling or {}).items():
            if abs(n1) > self.L or abs(n2) > self.L:
                raise ConfigurationError(f"Coupling site ({n1}, {n2}) is outside the lattice")
            if not math.isfinite(value):
                raise ConfigurationError(f"Coupling at ({n1}, {n2}) is not finite")

    @property
    def basis(self) -> LatticeBasis:
        return LatticeBasis(L=self.L, particles=self.chains)

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def potential_array(self) -> np.ndarray:
        """V_n on every site of one chain."""
        values = np.zeros(2 * self.L + 1)
        for n, v in self.potential.items():
            values[n + self.L] = v
        return values

    def coupling_array(self) -> np.ndarray:
        """W_{n1,n2} on the full (n1, n2) grid."""
        n_sites = 2 * self.L + 1
        values = self.contact_coupling * np.eye(n_sites)
        for (n1, n2), w in (self.coupling or {}).items():
            values[n1 + self.L, n2 + self.L] += w
        return values

    def with_extent(self, L: int, R: Optional[int] = None) -> "ModelSpec":
        """
        Same model on a chain of half-extent L (sites beyond ±L are dropped).

        Args:
            L: New half-extent
            R: New interior radius; the current one is kept if None

        Returns:
            Validated ModelSpec
        """
        R = self.R if R is None else R
        potential = {n: v for n, v in self.potential.items() if abs(n) <= L}
        coupling = None
        if self.coupling is not None:
            coupling = {
                k: v for k, v in self.coupling.items() if max(abs(k[0]), abs(k[1])) <= L
            }
        return replace(self, L=L, R=R, potential=potential, coupling=coupling)

    def with_kinetic_scale(self, scale: float) -> "ModelSpec":
        return replace(self, kinetic_scale=scale, allow_soft_kinetic=scale < 1)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly form; integer keys become strings."""
        data = {
            "name": self.name,
            "chains": self.chains,
            "L": self.L,
            "R": self.R,
            "kinetic_scale": self.kinetic_scale,
            "potential": {str(n): v for n, v in sorted(self.potential.items())},
            "contact_coupling": self.contact_coupling,
            "allow_soft_kinetic": self.allow_soft_kinetic,
        }
        if self.coupling is not None:
            data["coupling"] = {
                f"{n1},{n2}": v for (n1, n2), v in sorted(self.coupling.items())
            }
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelSpec":
        known = {
            "name", "chains", "L", "R", "kinetic_scale", "potential",
            "coupling", "contact_coupling", "allow_soft_kinetic",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown model keys: {', '.join(sorted(unknown))}")
        try:
            potential = {int(n): float(v) for n, v in data.get("potential", {}).items()}
            coupling = None
            if data.get("coupling") is not None:
                coupling = {}
                for key, v in data["coupling"].items():
                    n1, n2 = (int(part) for part in key.split(","))
                    coupling[(n1, n2)] = float(v)
            return cls(
                chains=int(data.get("chains", 1)),
                L=int(data.get("L", 25)),
                R=int(data.get("R", 5)),
                kinetic_scale=float(data.get("kinetic_scale", 1.0)),
                potential=potential,
                coupling=coupling,
                contact_coupling=float(data.get("contact_coupling", 0.0)),
                name=str(data.get("name", "custom")),
                allow_soft_kinetic=bool(data.get("allow_soft_kinetic", False)),
            )
        except (TypeError, ValueError, AttributeError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Malformed model description: {e}") from e


def _truncated(potential: Dict[int, float], L: int) -> Dict[int, float]:
    return {n: v for n, v in potential.items() if abs(n) <= L}


def model_1a(L: int = 25, R: int = 5) -> ModelSpec:
    """Single attractive delta at the origin; one bound state."""
    return ModelSpec(chains=1, L=L, R=R, potential=_truncated({0: -1.0}, L), name="model1a")


def model_1b(L: int = 25, R: int = 5) -> ModelSpec:
    """Four attractive sites; four bound states."""
    potential = {0: -1.6, 2: -1.5, 3: -1.5, -2: -1.4}
    return ModelSpec(chains=1, L=L, R=R, potential=_truncated(potential, L), name="model1b")


def model_2(L: int = 25, R: int = 5) -> ModelSpec:
    """Two linked chains with on-site inter-chain attraction."""
    potential = {0: -1.0, 1: 0.2, 2: -0.9, 3: -0.9, -1: -0.3}
    return ModelSpec(
        chains=2,
        L=L,
        R=R,
        potential=_truncated(potential, L),
        contact_coupling=-0.2,
        name="model2",
    )


PRESETS = {"model1a": model_1a, "model1b": model_1b, "model2": model_2}


def preset(name: str, **kwargs) -> ModelSpec:
    """Look up a preset factory by name."""
    try:
        factory = PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"Unknown model preset '{name}' (choose from {', '.join(PRESETS)})"
        ) from None
    return factory(**kwargs)


def required_extent(R: int, s_max: float, t_total: float, margin: int = 5) -> int:
    """
    Chain half-extent keeping wave fronts away from the boundary.

    The group velocity of s(1 - cos k) never exceeds s, so a front leaving
    the interior travels at most s_max * t_total sites.
    """
    return int(math.ceil(R + s_max * t_total + margin))


def required_extent_cooling(
    R: int, tau: float, t_total: float, kappa: float = 10.0, margin: int = 5
) -> int:
    """Sizing rule for a kinetic scale decaying from kappa to 1 with time constant tau."""
    return int(math.ceil(R + kappa * tau + t_total + margin))


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over a sector basis."""

    basis: LatticeBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ConfigurationError(
                f"State has shape {amps.shape}, basis dimension is {self.basis.dimension}"
            )
        if not np.all(np.isfinite(amps)):
            raise SimulationError("State contains non-finite amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def ket(cls, basis: LatticeBasis, *sites: int) -> "StateVector":
        """|[n]> or |[n1,n2]>."""
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[basis.index(*sites)] = 1.0
        return cls(basis, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ConfigurationError("Cannot normalize a zero state")
        return StateVector(self.basis, self.amplitudes / nrm)

    def vdot(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def with_amplitudes(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(self.basis, amplitudes)

    @property
    def exchange_symmetric(self) -> bool:
        """Two-particle state left unchanged by swapping the chains."""
        if self.basis.particles != 2:
            return False
        return bool(np.array_equal(self.amplitudes[self.basis.exchange_permutation], self.amplitudes))


@dataclass(frozen=True, eq=False)
class SectorOperator:
    """Hermitian operator on a sector basis, stored as a sparse matrix."""

    basis: LatticeBasis
    matrix: sp.spmatrix
    tag: str = "H-composite"

    def __post_init__(self):
        if self.tag not in OPERATOR_TAGS:
            raise ConfigurationError(f"Unknown operator tag '{self.tag}'")
        matrix = sp.csr_matrix(self.matrix)
        dim = self.basis.dimension
        if matrix.shape != (dim, dim):
            raise ConfigurationError(f"Operator shape {matrix.shape} does not match basis ({dim})")
        deviation = abs(matrix - matrix.conj().T)
        if deviation.nnz and deviation.max() > HERMITIAN_TOL:
            raise SimulationError(f"Operator {self.tag} is not Hermitian (deviation {deviation.max():.3e})")
        object.__setattr__(self, "matrix", matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real

    @cached_property
    def is_diagonal(self) -> bool:
        return sp.triu(self.matrix, k=1).count_nonzero() == 0

    @cached_property
    def _blocks(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        # Upper-triangle couplings; every index may appear in at most one pair.
        upper = sp.triu(self.matrix, k=1).tocoo()
        keep = upper.data != 0
        rows, cols, values = upper.row[keep], upper.col[keep], upper.data[keep]
        touched = np.concatenate([rows, cols])
        if np.unique(touched).size != touched.size:
            raise SimulationError(
                f"Operator {self.tag} is not a direct sum of disjoint 2x2 blocks"
            )
        return rows, cols, values.astype(complex)

    def apply(self, psi: StateVector) -> StateVector:
        return psi.with_amplitudes(self.matrix @ psi.amplitudes)

    def scaled(self, factor: float) -> "SectorOperator":
        return SectorOperator(self.basis, self.matrix * factor, self.tag)

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        if other.basis != self.basis:
            raise ConfigurationError("Cannot add operators on different bases")
        return SectorOperator(self.basis, self.matrix + other.matrix, "H-composite")

    @cached_property
    def exchange_symmetric(self) -> bool:
        """Two-particle operator commuting with the chain swap."""
        if self.basis.particles != 2:
            return False
        perm = self.basis.exchange_permutation
        diff = abs(self.matrix[perm][:, perm] - self.matrix)
        return diff.nnz == 0 or float(diff.max()) <= HERMITIAN_TOL

    def max_deviation(self, other: "SectorOperator") -> float:
        """Max-entry distance between two operators."""
        diff = abs(self.matrix - other.matrix)
        return float(diff.max()) if diff.nnz else 0.0

    def expectation(self, psi: StateVector) -> float:
        """<psi|O|psi> / <psi|psi>."""
        amps = psi.amplitudes
        weight = np.vdot(amps, amps).real
        return float(np.vdot(amps, self.matrix @ amps).real / weight)

    def exponential_action(self, psi: StateVector, dt: float) -> StateVector:
        """
        exp(-i * O * dt) |psi> for operators made of disjoint 2x2 blocks.

        Diagonal operators exponentiate entrywise; each coupled pair (i, j)
        is rotated with the closed-form exponential of its 2x2 block.

        Args:
            psi: State to propagate
            dt: Time step

        Returns:
            The propagated state
        """
        amps = psi.amplitudes
        diag = self.diagonal
        out = np.exp(-1j * dt * diag) * amps
        rows, cols, h = self._blocks
        if rows.size:
            a, b = diag[rows], diag[cols]
            mean = 0.5 * (a + b)
            half = 0.5 * (a - b)
            r = np.sqrt(half ** 2 + np.abs(h) ** 2)
            cos = np.cos(r * dt)
            sin_over_r = dt * np.sinc(r * dt / np.pi)
            phase = np.exp(-1j * dt * mean)
            x, y = amps[rows], amps[cols]
            out[rows] = phase * ((cos - 1j * sin_over_r * half) * x - 1j * sin_over_r * h * y)
            out[cols] = phase * (-1j * sin_over_r * np.conj(h) * x + (cos + 1j * sin_over_r * half) * y)
        return psi.with_amplitudes(out)


@dataclass(frozen=True)
class InteriorProjector:
    """Diagonal 0/1 projector onto states with every particle inside |n| <= R."""

    basis: LatticeBasis
    R: int

    @cached_property
    def mask(self) -> np.ndarray:
        mask = self.basis.max_abs_site() <= self.R
        mask.setflags(write=False)
        return mask

    @cached_property
    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def interior_dimension(self) -> int:
        return int(self.mask.sum())

    @property
    def matrix(self) -> sp.csr_matrix:
        return sp.diags(self.mask.astype(float), format="csr")

    def contains(self, *sites: int) -> bool:
        return bool(self.mask[self.basis.index(*sites)])

    def apply(self, psi: StateVector) -> StateVector:
        return psi.with_amplitudes(np.where(self.mask, psi.amplitudes, 0.0))

    def restrict(self, psi: StateVector) -> np.ndarray:
        """Interior amplitudes only, in basis order."""
        return psi.amplitudes[self.interior_indices]

    def weight(self, psi: StateVector) -> float:
        """||P psi||^2."""
        inner = self.restrict(psi)
        return float(np.vdot(inner, inner).real)

    def interior_grid(self, psi: StateVector) -> np.ndarray:
        """(2R+1) x (2R+1) grid of interior amplitudes for the two-particle sector."""
        side = 2 * self.R + 1
        return self.restrict(psi).reshape(side, side)


def _chain_kinetic(L: int) -> sp.csr_matrix:
    n_sites = 2 * L + 1
    if n_sites == 1:
        return sp.csr_matrix(np.ones((1, 1)))
    off = -0.5 * np.ones(n_sites - 1)
    return sp.diags([off, np.ones(n_sites), off], [-1, 0, 1], shape=(n_sites, n_sites), format="csr")


def _chain_bonds(L: int, parity: int) -> sp.csr_matrix:
    """Off-diagonal hopping on bonds (n, n+1) with n % 2 == parity."""
    n_sites = 2 * L + 1
    lower = np.arange(n_sites - 1)
    lower = lower[(lower - L) % 2 == parity]
    rows = np.concatenate([lower, lower + 1])
    cols = np.concatenate([lower + 1, lower])
    values = -0.5 * np.ones(rows.size)
    return sp.csr_matrix((values, (rows, cols)), shape=(n_sites, n_sites))


def _on_chain(chain_matrix: sp.spmatrix, chain: int, L: int) -> sp.csr_matrix:
    """Lift a one-chain operator to the two-particle product basis."""
    eye = sp.identity(2 * L + 1, format="csr")
    if chain == 1:
        return sp.kron(chain_matrix, eye, format="csr")
    return sp.kron(eye, chain_matrix, format="csr")


def build_kinetic(spec: ModelSpec) -> SectorOperator:
    """s * K on the sector; two particles get one kinetic term per chain."""
    chain = _chain_kinetic(spec.L)
    if spec.chains == 1:
        matrix = chain
    else:
        matrix = _on_chain(chain, 1, spec.L) + _on_chain(chain, 2, spec.L)
    return SectorOperator(spec.basis, spec.kinetic_scale * matrix, "K")


def build_single_particle_potential(spec: ModelSpec) -> SectorOperator:
    values = spec.potential_array()
    if spec.chains == 2:
        values = np.add.outer(values, values).ravel()
    return SectorOperator(spec.basis, sp.diags(values, format="csr"), "V")


def build_coupling(spec: ModelSpec) -> SectorOperator:
    """Diagonal inter-chain interaction W_{n1,n2}."""
    if spec.chains != 2:
        raise ConfigurationError("A coupling W is only defined for two chains")
    return SectorOperator(spec.basis, sp.diags(spec.coupling_array().ravel(), format="csr"), "W")


def build_potential(spec: ModelSpec) -> SectorOperator:
    """Diagonal potential: V_n, or V_{n1} + V_{n2} + W_{n1,n2} for two chains."""
    potential = build_single_particle_potential(spec)
    if spec.chains == 1:
        return potential
    return SectorOperator(spec.basis, potential.matrix + build_coupling(spec).matrix, "V")


def build_hamiltonian(spec: ModelSpec) -> SectorOperator:
    return build_kinetic(spec) + build_potential(spec)


def trotter_parts(spec: ModelSpec) -> List[SectorOperator]:
    """
    Split H into exactly exponentiable parts, in product order.

    One chain: [A, B, D, V]. Two chains: [A1, B1, A2, B2, D, V, W].
    A holds the kinetic bonds whose lower site is even, B those whose lower
    site is odd, D the kinetic diagonal.
    """
    s = spec.kinetic_scale
    L = spec.L
    basis = spec.basis
    even, odd = s * _chain_bonds(L, 0), s * _chain_bonds(L, 1)
    if spec.chains == 1:
        return [
            SectorOperator(basis, even, "A"),
            SectorOperator(basis, odd, "B"),
            SectorOperator(basis, s * sp.identity(basis.dimension, format="csr"), "D"),
            build_single_particle_potential(spec),
        ]
    return [
        SectorOperator(basis, _on_chain(even, 1, L), "A1"),
        SectorOperator(basis, _on_chain(odd, 1, L), "B1"),
        SectorOperator(basis, _on_chain(even, 2, L), "A2"),
        SectorOperator(basis, _on_chain(odd, 2, L), "B2"),
        SectorOperator(basis, 2 * s * sp.identity(basis.dimension, format="csr"), "D"),
        build_single_particle_potential(spec),
        build_coupling(spec),
    ]


def build_projector(spec: ModelSpec) -> InteriorProjector:
    return InteriorProjector(spec.basis, spec.R)


def initial_state(
    spec: ModelSpec,
    kind: str = "point",
    seed: Optional[int] = None,
    width: float = 1.5,
) -> StateVector:
    """
    Unit-norm initial state supported inside the interior region.

    Args:
        spec: Model the state lives on
        kind: 'point', 'spread', 'random' or 'gaussian'
        seed: Required for 'random'
        width: Standard deviation (in sites) of the 'gaussian' packet

    Returns:
        Normalized StateVector
    """
    basis = spec.basis
    projector = build_projector(spec)
    amps = np.zeros(basis.dimension, dtype=complex)

    if kind == "point":
        origin = (0,) * spec.chains
        amps[basis.index(*origin)] = 1.0
    elif kind == "spread":
        coefficients: Dict[Any, float]
        if spec.chains == 1:
            coefficients = {(n,): c for n, c in SPREAD_ONE_PARTICLE.items()}
        else:
            coefficients = SPREAD_TWO_PARTICLE
        for sites, c in coefficients.items():
            if max(abs(n) for n in sites) > spec.R:
                raise ConfigurationError(f"Spread state needs R >= 2, got R={spec.R}")
            amps[basis.index(*sites)] = c
    elif kind == "random":
        if seed is None:
            raise ConfigurationError("A random initial state needs a seed")
        rng = np.random.default_rng(seed)
        count = projector.interior_dimension
        draws = rng.standard_normal((2, count))
        amps[projector.interior_indices] = (draws[0] + 1j * draws[1]) / np.sqrt(2.0)
    elif kind == "gaussian":
        if width <= 0:
            raise ConfigurationError(f"Gaussian width must be positive, got {width}")
        profile = np.exp(-(basis.sites.astype(float) ** 2) / (4.0 * width ** 2))
        if spec.chains == 2:
            profile = np.multiply.outer(profile, profile).ravel()
        amps = np.where(projector.mask, profile, 0.0).astype(complex)
    else:
        raise ConfigurationError(
            f"Unknown initial state kind '{kind}' (choose from {', '.join(INITIAL_KINDS)})"
        )

    return StateVector(basis, amps).normalized()
