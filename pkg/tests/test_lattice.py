"""
Tests for lattice bases, operators, presets and initial states.
"""

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from projected_cooling.exceptions import ConfigurationError, SimulationError
from projected_cooling.lattice import (
    InteriorProjector,
    LatticeBasis,
    ModelSpec,
    SectorOperator,
    StateVector,
    build_coupling,
    build_hamiltonian,
    build_kinetic,
    build_potential,
    build_projector,
    initial_state,
    model_1a,
    model_1b,
    model_2,
    preset,
    required_extent,
    required_extent_cooling,
    trotter_parts,
)


class TestLatticeBasis:
    """Test cases for basis index bookkeeping."""

    def test_one_particle_indexing(self):
        basis = LatticeBasis(L=2)
        assert basis.dimension == 5
        assert basis.index(-2) == 0
        assert basis.index(2) == 4
        assert basis.sites_of(3) == (1,)

    def test_two_particle_indexing_is_row_major(self):
        basis = LatticeBasis(L=2, particles=2)
        assert basis.dimension == 25
        assert basis.index(1, -1) == 3 * 5 + 1
        assert basis.sites_of(16) == (1, -1)

    def test_index_rejects_bad_sites(self):
        basis = LatticeBasis(L=2, particles=2)
        with pytest.raises(ConfigurationError):
            basis.index(3, 0)
        with pytest.raises(ConfigurationError):
            basis.index(0)

    def test_to_grid(self):
        basis = LatticeBasis(L=1, particles=2)
        grid = basis.to_grid(np.arange(9))
        assert grid[2, 0] == basis.index(1, -1) == 6
        with pytest.raises(ConfigurationError):
            LatticeBasis(L=1).to_grid(np.arange(3))

    def test_edge_mask(self):
        basis = LatticeBasis(L=4, particles=2)
        mask = basis.edge_mask()
        assert mask[basis.index(3, 0)] and mask[basis.index(0, -4)]
        assert not mask[basis.index(2, -2)]
        assert LatticeBasis(L=4).edge_mask(width=1).sum() == 2

    def test_exchange_transform_is_orthogonal(self):
        basis = LatticeBasis(L=2, particles=2)
        Q, n_sym = basis.exchange_transform
        assert n_sym == 15
        np.testing.assert_allclose((Q.T @ Q).toarray(), np.eye(25), atol=1e-14)
        swapped = Q.toarray()[basis.exchange_permutation]
        np.testing.assert_allclose(swapped[:, :n_sym], Q.toarray()[:, :n_sym], atol=1e-14)
        np.testing.assert_allclose(swapped[:, n_sym:], -Q.toarray()[:, n_sym:], atol=1e-14)
        with pytest.raises(ConfigurationError):
            LatticeBasis(L=2).exchange_transform


class TestModelSpec:
    """Test cases for model validation and presets."""

    def test_extent_rules(self):
        with pytest.raises(ConfigurationError):
            ModelSpec(L=5, R=5)
        with pytest.raises(ConfigurationError):
            ModelSpec(L=5, R=0)
        with pytest.raises(ConfigurationError):
            ModelSpec(L=0, R=1)
        assert ModelSpec(L=0, R=0).dimension == 1

    def test_soft_kinetic_needs_flag(self):
        with pytest.raises(ConfigurationError):
            ModelSpec(L=5, R=2, kinetic_scale=0.5)
        assert ModelSpec(L=5, R=2, kinetic_scale=0.5, allow_soft_kinetic=True).kinetic_scale == 0.5
        with pytest.raises(ConfigurationError):
            ModelSpec(L=5, R=2, kinetic_scale=0.0, allow_soft_kinetic=True)

    def test_sites_must_be_on_lattice(self):
        with pytest.raises(ConfigurationError):
            ModelSpec(L=3, R=1, potential={4: -1.0})
        with pytest.raises(ConfigurationError):
            ModelSpec(chains=2, L=3, R=1, coupling={(0, 4): -1.0})

    def test_coupling_needs_two_chains(self):
        with pytest.raises(ConfigurationError):
            ModelSpec(L=3, R=1, contact_coupling=-0.2)
        with pytest.raises(ConfigurationError):
            build_coupling(model_1a(L=3, R=1))

    def test_presets(self):
        assert model_1a().L == 25 and model_1a().R == 5
        assert model_1b().potential == {0: -1.6, 2: -1.5, 3: -1.5, -2: -1.4}
        spec = model_2()
        assert spec.chains == 2
        assert spec.contact_coupling == -0.2
        assert preset("MODEL1B", L=10).L == 10
        with pytest.raises(ConfigurationError):
            preset("model3")

    def test_presets_truncate_small_lattices(self):
        assert set(model_1b(L=2, R=1).potential) == {0, 2, -2}
        assert set(model_2(L=2, R=1).potential) == {0, 1, 2, -1}

    def test_with_extent_and_scale(self):
        with pytest.raises(ConfigurationError):
            model_1b().with_extent(2)
        spec = model_1b().with_extent(2, R=1)
        assert spec.L == 2 and spec.R == 1 and set(spec.potential) == {0, 2, -2}
        assert model_1b().with_extent(40).R == 5
        soft = model_1b().with_kinetic_scale(0.5)
        assert soft.allow_soft_kinetic
        assert build_kinetic(soft).diagonal[0] == pytest.approx(0.5)

    def test_dict_round_trip(self):
        spec = ModelSpec(chains=2, L=4, R=2, potential={0: -1.0, -1: 0.3},
                         coupling={(1, -1): -0.5}, contact_coupling=-0.2, name="pair")
        assert ModelSpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError):
            ModelSpec.from_dict({"L": 5, "R": 2, "width": 3})
        with pytest.raises(ConfigurationError):
            ModelSpec.from_dict({"L": "wide", "R": 2})

    def test_sizing_rules(self):
        assert required_extent(5, 1.0, 50.0) == 60
        assert required_extent(5, 1.0, 50.0, margin=0) == 55
        assert required_extent_cooling(5, 4.0, 12.0) == 62


class TestOperators:
    """Test cases for the sector operators."""

    def test_single_chain_kinetic(self):
        K = build_kinetic(ModelSpec(L=2, R=1))
        expected = np.diag(np.ones(5)) - 0.5 * (np.eye(5, k=1) + np.eye(5, k=-1))
        np.testing.assert_allclose(K.dense(), expected)

    def test_single_site_lattice(self):
        H = build_hamiltonian(ModelSpec(L=0, R=0, potential={0: -1.0}))
        np.testing.assert_allclose(H.dense(), [[0.0]])

    def test_two_chain_potential_values(self):
        spec = model_2(L=2, R=1)
        V = build_potential(spec)
        basis = spec.basis
        assert V.diagonal[basis.index(0, 0)] == pytest.approx(-2.2)
        assert V.diagonal[basis.index(1, 0)] == pytest.approx(-0.8)
        W = build_coupling(spec)
        assert W.diagonal[basis.index(1, 1)] == pytest.approx(-0.2)
        assert W.diagonal[basis.index(1, 0)] == 0.0

    def test_rejects_non_hermitian(self):
        basis = LatticeBasis(L=1)
        with pytest.raises(SimulationError):
            SectorOperator(basis, sp.csr_matrix(np.triu(np.ones((3, 3)))), "V")

    def test_rejects_unknown_tag_and_shape(self):
        basis = LatticeBasis(L=1)
        with pytest.raises(ConfigurationError):
            SectorOperator(basis, sp.identity(3), "Q")
        with pytest.raises(ConfigurationError):
            SectorOperator(basis, sp.identity(4), "V")

    @pytest.mark.parametrize("spec", [model_1b(L=6, R=3), model_2(L=3, R=1)])
    def test_trotter_parts_sum_to_hamiltonian(self, spec):
        parts = trotter_parts(spec)
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        assert total.max_deviation(build_hamiltonian(spec)) <= 1e-14

    def test_trotter_part_tags(self):
        assert [p.tag for p in trotter_parts(model_1b(L=4, R=2))] == ["A", "B", "D", "V"]
        assert [p.tag for p in trotter_parts(model_2(L=2, R=1))] == [
            "A1", "B1", "A2", "B2", "D", "V", "W"
        ]

    def test_bond_parity(self):
        spec = ModelSpec(L=2, R=1)
        A, B, _, _ = trotter_parts(spec)
        basis = spec.basis
        # even lower site -> A, odd lower site -> B
        assert A.dense()[basis.index(0), basis.index(1)] == -0.5
        assert A.dense()[basis.index(-2), basis.index(-1)] == -0.5
        assert A.dense()[basis.index(-1), basis.index(0)] == 0.0
        assert B.dense()[basis.index(-1), basis.index(0)] == -0.5

    @pytest.mark.parametrize("index", [0, 1, 2, 3])
    def test_exponential_action_matches_expm(self, index):
        spec = model_1b(L=5, R=2)
        part = trotter_parts(spec)[index]
        rng = np.random.default_rng(3)
        amps = rng.standard_normal(spec.dimension) + 1j * rng.standard_normal(spec.dimension)
        psi = StateVector(spec.basis, amps)
        expected = scipy.linalg.expm(-1j * 0.3 * part.dense()) @ amps
        np.testing.assert_allclose(part.exponential_action(psi, 0.3).amplitudes, expected, atol=1e-12)

    def test_exponential_action_rejects_overlapping_blocks(self):
        H = build_hamiltonian(model_1a(L=3, R=1))
        psi = initial_state(model_1a(L=3, R=1))
        with pytest.raises(SimulationError):
            H.exponential_action(psi, 0.1)

    def test_expectation(self):
        spec = model_1a(L=3, R=1)
        psi = StateVector.ket(spec.basis, 0)
        assert build_hamiltonian(spec).expectation(psi) == pytest.approx(0.0)
        assert build_kinetic(spec).expectation(psi.with_amplitudes(2 * psi.amplitudes)) == pytest.approx(1.0)

    def test_translation_covariance(self):
        H = build_hamiltonian(ModelSpec(L=6, R=2, potential={0: -1.0})).dense()
        shifted = build_hamiltonian(ModelSpec(L=6, R=2, potential={1: -1.0})).dense()
        np.testing.assert_array_equal(shifted[1:, 1:], H[:-1, :-1])

    def test_open_boundary(self):
        H = build_hamiltonian(model_1b()).dense()
        assert H[0, -1] == 0.0 and H[-1, 0] == 0.0
        spec = model_2(L=3, R=1)
        H2 = build_hamiltonian(spec).dense()
        assert H2[spec.basis.index(-3, 0), spec.basis.index(3, 0)] == 0.0
        assert H2[spec.basis.index(0, 3), spec.basis.index(0, -3)] == 0.0

    def test_exchange_symmetry(self):
        assert build_hamiltonian(model_2(L=3, R=1)).exchange_symmetric
        lopsided = ModelSpec(chains=2, L=2, R=1, coupling={(0, 1): -1.0})
        assert not build_hamiltonian(lopsided).exchange_symmetric
        assert not build_hamiltonian(model_1b(L=3, R=1)).exchange_symmetric


class TestProjector:
    """Test cases for the interior projector."""

    def test_interior_counts(self):
        assert build_projector(model_1a(L=5, R=2)).interior_dimension == 5
        assert build_projector(model_2(L=3, R=1)).interior_dimension == 9
        assert build_projector(model_1b()).interior_dimension == 11
        assert build_projector(model_2()).interior_dimension == 121

    def test_idempotent(self):
        spec = model_2(L=3, R=1)
        P = build_projector(spec)
        np.testing.assert_array_equal((P.matrix @ P.matrix).toarray(), P.matrix.toarray())
        rng = np.random.default_rng(5)
        psi = StateVector(spec.basis, rng.standard_normal(spec.dimension) + 0j)
        np.testing.assert_array_equal(P.apply(P.apply(psi)).amplitudes, P.apply(psi).amplitudes)

    def test_contains_and_weight(self):
        spec = model_2(L=3, R=1)
        P = build_projector(spec)
        assert P.contains(1, -1)
        assert not P.contains(2, 0)
        psi = StateVector.ket(spec.basis, 2, 0)
        assert P.weight(psi) == 0.0
        assert P.apply(psi).norm() == 0.0

    def test_interior_grid_shape(self):
        spec = model_2(L=3, R=1)
        P = InteriorProjector(spec.basis, 1)
        psi = StateVector.ket(spec.basis, 1, -1)
        grid = P.interior_grid(psi)
        assert grid.shape == (3, 3)
        assert grid[2, 0] == 1.0


class TestInitialState:
    """Test cases for initial state construction."""

    def test_point(self):
        spec = model_2(L=3, R=1)
        psi = initial_state(spec, "point")
        assert psi.amplitudes[spec.basis.index(0, 0)] == 1.0
        assert psi.norm() == pytest.approx(1.0)

    @pytest.mark.parametrize("spec", [model_1b(L=8, R=3), model_2(L=4, R=2)])
    @pytest.mark.parametrize("kind", ["spread", "random", "gaussian"])
    def test_normalized_and_inside_interior(self, spec, kind):
        psi = initial_state(spec, kind, seed=11)
        P = build_projector(spec)
        assert psi.norm() == pytest.approx(1.0)
        assert P.weight(psi) == pytest.approx(1.0)

    def test_spread_needs_room(self):
        with pytest.raises(ConfigurationError):
            initial_state(model_1a(L=5, R=1), "spread")

    def test_random_is_seeded(self):
        spec = model_1a(L=10, R=5)
        with pytest.raises(ConfigurationError):
            initial_state(spec, "random")
        a = initial_state(spec, "random", seed=4)
        b = initial_state(spec, "random", seed=4)
        c = initial_state(spec, "random", seed=5)
        assert np.array_equal(a.amplitudes, b.amplitudes)
        assert not np.array_equal(a.amplitudes, c.amplitudes)

    def test_gaussian_is_symmetric(self):
        spec = model_1a(L=10, R=5)
        psi = initial_state(spec, "gaussian", width=2.0)
        amps = psi.amplitudes
        assert amps[spec.basis.index(2)] == pytest.approx(amps[spec.basis.index(-2)])
        assert abs(amps[spec.basis.index(0)]) > abs(amps[spec.basis.index(3)])

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            initial_state(model_1a(), "plane-wave")


class TestStateVector:
    """Test cases for state vectors."""

    def test_rejects_non_finite(self):
        basis = LatticeBasis(L=1)
        with pytest.raises(SimulationError):
            StateVector(basis, np.array([0.0, np.nan, 1.0]))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ConfigurationError):
            StateVector(LatticeBasis(L=1), np.ones(4))

    def test_amplitudes_are_read_only(self):
        psi = StateVector.ket(LatticeBasis(L=1), 0)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 2.0

    def test_normalize_zero_state(self):
        with pytest.raises(ConfigurationError):
            StateVector(LatticeBasis(L=1), np.zeros(3)).normalized()

    def test_exchange_symmetric(self):
        basis = LatticeBasis(L=2, particles=2)
        assert StateVector.ket(basis, 1, 1).exchange_symmetric
        assert not StateVector.ket(basis, 0, 1).exchange_symmetric
        assert initial_state(model_2(L=4, R=2), "spread").exchange_symmetric
        assert not StateVector.ket(LatticeBasis(L=2), 0).exchange_symmetric
