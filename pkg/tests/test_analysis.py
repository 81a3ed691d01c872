"""
Tests for the exact-diagonalization oracle and overlap diagnostics.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp

from projected_cooling.analysis import (
    OverlapSeries,
    accepted_probability,
    boundary_weight,
    count_localized_states,
    expectation_in_region,
    exterior_excitation_probabilities,
    fit_decay_exponent,
    ground_state,
    interior_overlap,
    normalized_overlap,
    oscillation_detected,
    relaxed_acceptance,
    signal_efficiency,
    smoothed_nondecreasing,
    tune_kinetic_scale,
)
from projected_cooling.exceptions import (
    ConfigurationError,
    DegenerateGroundStateError,
    FitError,
)
from projected_cooling.lattice import (
    LatticeBasis,
    SectorOperator,
    StateVector,
    build_hamiltonian,
    build_projector,
    initial_state,
    model_1a,
    model_1b,
    model_2,
    required_extent,
)
from projected_cooling.evolution import Schedule, evolve


class TestGroundState:
    """Test cases for the diagonalization oracle."""

    def test_model_1a_bound_state_energy(self):
        energy = ground_state(build_hamiltonian(model_1a(L=200, R=5))).ground_energy
        assert energy == pytest.approx(1.0 - math.sqrt(2.0), abs=1e-4)

    def test_eigenpairs_are_accurate(self):
        H = build_hamiltonian(model_1b(L=15, R=5))
        spectrum = ground_state(H)
        for i in range(4):
            assert spectrum.residual(H, i) < 1e-10
        assert np.all(np.diff(spectrum.eigenvalues) >= 0)

    def test_phase_convention(self):
        spectrum = ground_state(build_hamiltonian(model_1b(L=10, R=4)))
        for j in range(3):
            column = spectrum.eigenvectors[:, j]
            leading = column[np.flatnonzero(np.abs(column) > 1e-12 * np.abs(column).max())[0]]
            assert leading.imag == pytest.approx(0.0, abs=1e-12)
            assert leading.real > 0

    def test_degenerate_ground_state(self):
        identity = SectorOperator(LatticeBasis(L=1), sp.identity(3), "H-composite")
        with pytest.raises(DegenerateGroundStateError):
            ground_state(identity)
        assert ground_state(identity, check_degeneracy=False).ground_energy == pytest.approx(1.0)

    def test_partial_spectrum_falls_back_when_all_bound(self):
        H = build_hamiltonian(model_1b(L=12, R=5))
        spectrum = ground_state(H, n_lowest=1)
        assert len(spectrum) == H.basis.dimension

    def test_partial_spectrum(self):
        H = build_hamiltonian(model_1a(L=12, R=5))
        assert len(ground_state(H, n_lowest=3)) == 3


class TestOverlaps:
    """Test cases for overlaps and region expectations."""

    def setup_method(self):
        """Set up test fixtures."""
        self.spec = model_1a(L=12, R=3)
        self.P = build_projector(self.spec)
        self.ground = ground_state(build_hamiltonian(self.spec)).ground

    def test_normalized_overlap_invariances(self):
        psi = initial_state(self.spec, "spread")
        scaled = psi.with_amplitudes(3.0 * np.exp(0.7j) * psi.amplitudes)
        assert normalized_overlap(psi, self.ground) == pytest.approx(normalized_overlap(scaled, self.ground))
        assert normalized_overlap(psi, psi) == pytest.approx(1.0)

    def test_normalized_overlap_rejects_zero(self):
        zero = StateVector(self.spec.basis, np.zeros(self.spec.dimension))
        with pytest.raises(ConfigurationError):
            normalized_overlap(zero, self.ground)

    def test_interior_overlap_of_ground_state(self):
        assert interior_overlap(self.ground, self.ground, self.P).value == pytest.approx(1.0)

    def test_escaped_state(self):
        outside = StateVector.ket(self.spec.basis, self.spec.L)
        result = interior_overlap(outside, self.ground, self.P)
        assert result.escaped
        assert float(result) == 0.0

    def test_signal_efficiency_of_point_state(self):
        psi = initial_state(self.spec, "point")
        expected = abs(self.ground.amplitudes[self.spec.basis.index(0)]) ** 2
        assert signal_efficiency(psi, self.ground, self.P) == pytest.approx(expected)

    def test_region_expectation(self):
        H = build_hamiltonian(self.spec)
        result = expectation_in_region(H, self.ground, self.P)
        assert not result.escaped
        assert result.probability == pytest.approx(self.P.weight(self.ground))
        outside = StateVector.ket(self.spec.basis, -self.spec.L)
        escaped = expectation_in_region(H, outside, self.P)
        assert escaped.escaped
        assert math.isnan(escaped.value)


class TestLocalization:
    """Test cases for bound and localized state counting."""

    def test_model_1a_has_one(self):
        spec = model_1a()
        assert count_localized_states(build_hamiltonian(spec), build_projector(spec)).count == 1

    def test_model_1b_has_four(self):
        spec = model_1b()
        report = count_localized_states(build_hamiltonian(spec), build_projector(spec))
        assert report.count == 4
        assert all(c.energy < 0 for c in report.candidates if c.localized)

    def test_kinetic_scale_removes_excited_states(self):
        spec = model_1b().with_kinetic_scale(10.0)
        assert count_localized_states(build_hamiltonian(spec), build_projector(spec)).count <= 1

    def test_tune_kinetic_scale(self):
        scale = tune_kinetic_scale(model_1b())
        assert scale is not None
        assert 1.0 < scale <= 10.0

    @pytest.mark.slow
    def test_model_2_has_four(self):
        spec = model_2()
        assert count_localized_states(build_hamiltonian(spec), build_projector(spec)).count == 4


class TestDecayFit:
    """Test cases for the power-law fitter."""

    def setup_method(self):
        """Set up test fixtures."""
        self.times = np.arange(5.0, 100.0, 0.1)

    def test_recovers_exponent_with_oscillation(self):
        residual = 0.5 * self.times ** -1.5 * (1 + 0.3 * np.cos(2.0 * self.times))
        fit = fit_decay_exponent(OverlapSeries(self.times, 1.0 - residual))
        assert fit.used_envelope
        assert fit.alpha == pytest.approx(1.5, abs=0.1)
        assert fit.frequency == pytest.approx(2.0, abs=0.2)

    def test_recovers_exponent_without_oscillation(self):
        residual = 0.2 * self.times ** -0.5
        fit = fit_decay_exponent(OverlapSeries(self.times, 1.0 - residual))
        assert not fit.used_envelope
        assert fit.alpha == pytest.approx(0.5, abs=1e-6)
        assert fit.amplitude == pytest.approx(0.2, rel=1e-6)

    def test_too_few_points(self):
        times = np.arange(5.0, 6.0, 0.1)
        with pytest.raises(FitError):
            fit_decay_exponent(OverlapSeries(times, 1.0 - 0.1 / times))

    def test_nothing_to_fit(self):
        with pytest.raises(FitError):
            fit_decay_exponent(OverlapSeries(self.times, np.ones_like(self.times)))

    def test_series_validates_range(self):
        with pytest.raises(ConfigurationError):
            OverlapSeries(np.arange(3.0), np.array([0.5, 1.5, 0.2]))
        with pytest.raises(ConfigurationError):
            OverlapSeries(np.arange(3.0), np.array([0.5, 0.2]))


class TestDiagnostics:
    """Test cases for oscillation, monotonicity and post-selection helpers."""

    def test_oscillation_detected(self):
        times = np.arange(0.0, 60.0, 0.3)
        oscillating = 0.7 + 0.2 * np.cos(1.3 * times)
        settling = 1.0 - 0.5 / (1.0 + times)
        assert oscillation_detected(OverlapSeries(times, oscillating))
        assert not oscillation_detected(OverlapSeries(times, settling))

    def test_smoothed_nondecreasing(self):
        times = np.arange(0.0, 50.0, 0.25)
        rising = 1.0 - 0.5 / (1.0 + times) + 0.01 * np.sin(5.0 * times)
        assert smoothed_nondecreasing(times, rising)
        falling = np.where(times < 25.0, 0.9, 0.5)
        assert not smoothed_nondecreasing(times, falling)

    def test_exterior_excitations(self):
        spec = model_2(L=4, R=1)
        P = build_projector(spec)
        one_out = StateVector.ket(spec.basis, 0, 3)
        np.testing.assert_allclose(exterior_excitation_probabilities(one_out, P), [0.0, 1.0, 0.0])
        both_in = StateVector.ket(spec.basis, 1, -1)
        np.testing.assert_allclose(exterior_excitation_probabilities(both_in, P), [1.0, 0.0, 0.0])

    def test_relaxed_acceptance(self):
        assert relaxed_acceptance(0, 1)
        assert not relaxed_acceptance(1, 2)
        assert relaxed_acceptance(1, 4, delta=0.5)
        with pytest.raises(ConfigurationError):
            relaxed_acceptance(-1, 2)

    def test_accepted_probability(self):
        spec = model_2(L=4, R=1)
        P = build_projector(spec)
        amplitudes = np.zeros(spec.dimension, dtype=complex)
        amplitudes[spec.basis.index(0, 0)] = math.sqrt(0.75)
        amplitudes[spec.basis.index(0, 3)] = math.sqrt(0.25)
        mixed = StateVector(spec.basis, amplitudes)
        assert accepted_probability(mixed, P) == pytest.approx(0.75)
        assert accepted_probability(mixed, P, delta=1.0) == pytest.approx(1.0)

    def test_boundary_weight(self):
        spec = model_1a(L=10, R=3)
        edge = StateVector.ket(spec.basis, -spec.L + 1)
        assert boundary_weight(edge) == pytest.approx(1.0)
        assert boundary_weight(edge, width=1) == 0.0
        assert boundary_weight(initial_state(spec, "spread")) == 0.0
        with pytest.raises(ConfigurationError):
            boundary_weight(StateVector(spec.basis, np.zeros(spec.dimension)))


class TestAsymptotics:
    """Test cases tying long-time runs to the diagonalization oracle."""

    def test_decay_fit_on_unit_exponent(self):
        times = np.arange(5.0, 100.0, 0.05)
        residual = times ** -1.0 * (1 + 0.3 * np.sin(5.0 * times))
        fit = fit_decay_exponent(OverlapSeries(times, 1.0 - residual))
        assert fit.alpha == pytest.approx(1.0, abs=0.1)

    def test_interior_weight_converges_to_signal_efficiency(self):
        spec = model_1a(L=required_extent(5, 1.0, 100.0), R=5)
        P = build_projector(spec)
        ground = ground_state(build_hamiltonian(spec)).ground
        psi = initial_state(spec, "spread")
        trajectory = evolve(spec, Schedule.static(spec), "full", 0.25, 400, psi, reference=ground)
        limit = signal_efficiency(psi, ground, P) * P.weight(psi)
        weights = np.array([r.interior_weight for r in trajectory.records])
        times = trajectory.times

        def deviation(start, stop):
            window = (times >= start) & (times <= stop)
            return float(np.abs(weights[window] - limit).max())

        early, late = deviation(30.0, 50.0), deviation(80.0, 100.0)
        assert late <= 0.01
        assert late < early

    def test_model_1b_cooling_energy(self):
        spec = model_1b()
        exact = ground_state(build_hamiltonian(spec)).ground_energy
        trajectory = evolve(spec, Schedule.projected_cooling(spec), "full", 0.3, 40,
                            initial_state(spec, "spread"))
        assert trajectory.records[-1].energy == pytest.approx(exact, abs=0.05)
