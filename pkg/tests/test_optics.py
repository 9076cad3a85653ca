"""Switches, fiber, delay loops, dephasing, and the Fourier-basis measurement."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditlink.optics import (
    DetectionParams,
    MeasurementOutcome,
    SwitchParams,
    detection_transmission_per_bin,
    fiber_transmission,
    interferometer_dephase,
    loop_transmissions,
    qft_matrix,
    qft_measure,
    qft_outcome_probabilities,
    switch_channel,
)
from quditlink.qstate import HilbertLayout, PureState, to_density


def photon_state(amps):
    amps = np.asarray(amps, dtype=np.complex128)
    layout = HilbertLayout((len(amps),), ("photon",))
    return PureState(amps / np.linalg.norm(amps), layout)


class TestSwitchParams:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SwitchParams(eta_sw=1.2)
        with pytest.raises(ValueError):
            SwitchParams(e_sw=-0.1)


class TestDetectionParams:
    def test_sigma_x_default_scales_with_m(self):
        det = DetectionParams()
        assert det.sigma_x_for(1) == pytest.approx(0.1)
        assert det.sigma_x_for(5) == pytest.approx(0.5)

    def test_sigma_x_override(self):
        det = DetectionParams(sigma_X=0.3)
        assert det.sigma_x_for(5) == pytest.approx(0.3)

    def test_default_loops_align_to_last_bin(self):
        det = DetectionParams()
        assert det.loops_for_bin(0, 8) == 7
        assert det.loops_for_bin(7, 8) == 0


class TestMeasurementOutcome:
    def test_heralded_requires_k(self):
        with pytest.raises(ValueError):
            MeasurementOutcome(heralded=True)
        with pytest.raises(ValueError):
            MeasurementOutcome(heralded=False, k=3)

    def test_unknown_loss_cause_rejected(self):
        with pytest.raises(ValueError):
            MeasurementOutcome(heralded=False, loss_cause="gremlins")


class TestSwitchChannel:
    def test_weights_sum_to_one(self):
        state = photon_state([1.0, 1.0])
        branches = switch_channel(state, SwitchParams(0.9, 0.01), np.array([False, True]))
        assert sum(b.weight for b in branches) == pytest.approx(1.0)
        kinds = {b.kind for b in branches}
        assert kinds == {"correct", "wrong", "loss"}

    def test_wrong_branch_inverts_routing(self):
        state = photon_state([1.0, 1.0])
        intended = np.array([False, True])
        branches = {b.kind: b for b in switch_channel(state, SwitchParams(0.9, 0.01), intended)}
        np.testing.assert_array_equal(branches["correct"].routed, intended)
        np.testing.assert_array_equal(branches["wrong"].routed, ~intended)
        assert branches["loss"].state is None

    def test_zero_weight_branches_omitted(self):
        state = photon_state([1.0, 1.0])
        branches = switch_channel(state, SwitchParams(1.0, 0.0), np.array([True, False]))
        assert [b.kind for b in branches] == ["correct"]


class TestFiberTransmission:
    def test_attenuation_length(self):
        assert fiber_transmission(20.0, 20.0) == pytest.approx(math.exp(-1.0))
        assert fiber_transmission(0.0, 20.0) == 1.0

    def test_invalid_lengths(self):
        with pytest.raises(ValueError):
            fiber_transmission(-1.0, 20.0)
        with pytest.raises(ValueError):
            fiber_transmission(1.0, 0.0)


class TestDetectionTransmission:
    def test_per_bin_formula(self):
        sw = SwitchParams(0.9, 0.01)
        det = DetectionParams(eta_lag=0.01)
        m = 2
        for l in range(4):
            expected = (0.9 * 0.99) ** 2 * 0.99 ** (3 - l)
            assert detection_transmission_per_bin(l, m, sw, det) == pytest.approx(expected)

    def test_bin_out_of_range(self):
        with pytest.raises(ValueError):
            detection_transmission_per_bin(4, 2, SwitchParams(), DetectionParams())

    def test_loop_transmissions_vector(self):
        det = DetectionParams(eta_lag=0.1)
        out = loop_transmissions(2, det)
        np.testing.assert_allclose(out, [0.9**3, 0.9**2, 0.9, 1.0])


class TestInterferometerDephase:
    def test_exact_mode_scales_off_diagonals(self):
        state = photon_state([1.0, 1.0])
        rho = to_density(state)
        out = interferometer_dephase(rho, sigma_x=0.4, mode="exact")
        factor = math.exp(-(0.4**2) / 2.0)
        assert out.matrix[0, 1].real == pytest.approx(0.5 * factor)
        assert out.matrix[0, 0].real == pytest.approx(0.5)

    def test_sampled_mode_reproduces_exact_on_average(self):
        rng = np.random.default_rng(21)
        state = photon_state([1.0, 1.0])
        sigma = 0.5
        acc = 0.0
        n = 20_000
        for _ in range(n):
            out = interferometer_dephase(state, sigma, mode="sampled", rng=rng)
            acc += (out.amplitudes[0] * out.amplitudes[1].conjugate()).real
        assert 2.0 * acc / n == pytest.approx(math.exp(-(sigma**2) / 2.0), abs=0.01)

    def test_sampled_preserves_populations(self):
        rng = np.random.default_rng(22)
        state = photon_state([1.0, 2.0, 3.0, 4.0])
        out = interferometer_dephase(state, 0.7, mode="sampled", rng=rng)
        np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(state.amplitudes),
                                   atol=1e-12)

    def test_mode_type_mismatch(self):
        state = photon_state([1.0, 1.0])
        with pytest.raises(TypeError):
            interferometer_dephase(state, 0.1, mode="exact")
        with pytest.raises(TypeError):
            interferometer_dephase(to_density(state), 0.1, mode="sampled")
        with pytest.raises(ValueError):
            interferometer_dephase(state, 0.1, mode="sampled")  # no rng
        with pytest.raises(ValueError):
            interferometer_dephase(state, 0.1, mode="bogus")


class TestQftMeasurement:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_matrix_is_unitary(self, m):
        q = qft_matrix(m)
        n = 2**m
        np.testing.assert_allclose(q @ q.conj().T, np.eye(n), atol=1e-12)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_matrix_agrees_with_fft_probabilities(self, m):
        rng = np.random.default_rng(m)
        n = 2**m
        amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        amps /= np.linalg.norm(amps)
        via_matrix = np.abs(qft_matrix(m) @ amps) ** 2
        np.testing.assert_allclose(via_matrix, qft_outcome_probabilities(amps),
                                   atol=1e-12)

    def test_uniform_input_heralds_k0(self):
        n = 4
        amps = np.full(n, 1.0 / math.sqrt(n))
        probs = qft_outcome_probabilities(amps)
        np.testing.assert_allclose(probs, [1.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_probabilities_sum_to_branch_norm(self):
        amps = 0.5 * np.array([1.0, 1.0j, -1.0, 0.5])
        probs = qft_outcome_probabilities(amps)
        assert probs.sum() == pytest.approx(float(np.vdot(amps, amps).real))

    def test_lossy_branch_can_fail_to_herald(self):
        rng = np.random.default_rng(3)
        amps = np.full(4, 0.1)  # squared norm 0.04
        heralds = sum(
            qft_measure(amps, rng).heralded for _ in range(2000)
        )
        assert heralds / 2000 == pytest.approx(0.04, abs=0.02)

    @given(seed=st.integers(0, 10_000), m=st.integers(1, 3))
    @settings(max_examples=25, deadline=None)
    def test_sampled_outcome_matches_distribution_support(self, seed, m):
        rng = np.random.default_rng(seed)
        n = 2**m
        amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        amps /= np.linalg.norm(amps)
        out = qft_measure(amps, rng)
        if out.heralded:
            assert 0 <= out.k < n
            assert qft_outcome_probabilities(amps)[out.k] > 0
