import json

import numpy as np
import pytest

from mkdv_lab.core.Spectral import (AliasingError, FourierState, GridFunction, conjugate_reflect,
                                    dealiased_triple_product, derivative, is_real_valued, japanese_bracket,
                                    load_state, padded_grid_size, project_high, project_low, state_from_csv,
                                    state_from_json, state_to_csv, state_to_json, to_fourier, to_physical)


def brute_force_product(a, b, c):
    """Discrete convolution of three coefficient vectors restricted to |n| <= M."""
    M = a.mode_cap
    out = np.zeros(2 * M + 1, dtype=np.complex128)
    for n1 in range(-M, M + 1):
        for n2 in range(-M, M + 1):
            for n3 in range(-M, M + 1):
                n = n1 + n2 + n3
                if abs(n) <= M:
                    out[n + M] += a.coeff(n1) * b.coeff(n2) * c.coeff(n3)
    return out


class TestFourierState:

    def test_rejects_even_length(self):
        with pytest.raises(ValueError):
            FourierState(np.zeros(4))

    def test_real_flag_is_validated(self):
        with pytest.raises(ValueError):
            FourierState.from_modes(2, {1: 1.0}, real_valued=True)
        state = FourierState.from_modes(2, {1: 1.0, -1: 1.0}, real_valued=True)
        assert state.real_valued

    def test_coefficients_are_read_only(self):
        state = FourierState.zeros(3)
        with pytest.raises(ValueError):
            state.coeffs[0] = 1.0

    def test_coeff_outside_cap_is_zero(self):
        state = FourierState.from_modes(2, {2: 1 + 1j})
        assert state.coeff(2) == 1 + 1j
        assert state.coeff(5) == 0

    def test_with_coeffs_symmetrizes_real_states(self):
        state = FourierState.zeros(2)
        updated = state.with_coeffs(np.array([0, 0, 0, 1.0, 0]))
        assert updated.real_valued
        assert updated.coeff(1) == pytest.approx(0.5)
        assert updated.coeff(-1) == pytest.approx(0.5)


class TestTransforms:

    def test_round_trip_is_identity(self, random_state):
        state = random_state(8)
        recovered = to_fourier(to_physical(state, 17), 8)
        assert np.max(np.abs(recovered.coeffs - state.coeffs)) < 1e-14

    def test_single_mode_samples(self):
        grid = to_physical(FourierState.from_modes(2, {1: 1.0}), 8)
        np.testing.assert_allclose(grid.samples, np.exp(1j * grid.points), atol=1e-15)

    def test_cosine_samples(self):
        grid = to_physical(FourierState.from_modes(4, {1: 0.5, -1: 0.5}), 16)
        assert np.max(np.abs(grid.samples - np.cos(grid.points))) <= 1e-15

    def test_seventeen_modes_on_fine_grid(self, random_state):
        state = random_state(8)
        recovered = to_fourier(to_physical(state, 64), 8)
        assert np.max(np.abs(recovered.coeffs - state.coeffs)) <= 1e-13

    def test_mean_only_state(self):
        state = FourierState(np.array([0.7 - 0.2j]))
        grid = to_physical(state, padded_grid_size(0))
        np.testing.assert_allclose(grid.samples, 0.7 - 0.2j, atol=1e-16)
        assert to_fourier(grid, 0).coeff(0) == pytest.approx(0.7 - 0.2j, abs=1e-16)

    def test_coarse_grid_is_refused(self, random_state):
        with pytest.raises(AliasingError):
            to_physical(random_state(8), 16)
        with pytest.raises(AliasingError):
            to_fourier(GridFunction(np.ones(8)), 4)

    @pytest.mark.parametrize('mode_cap', [1, 4, 16, 32])
    def test_padded_grid_is_large_enough(self, mode_cap):
        assert padded_grid_size(mode_cap) >= 4 * mode_cap + 1


class TestProjections:

    def test_low_plus_high_is_identity(self, random_state):
        state = random_state(10)
        total = project_low(state, 4).coeffs + project_high(state, 4).coeffs
        assert np.array_equal(total, state.coeffs)

    def test_low_projection_keeps_real_flag(self, random_state):
        state = random_state(6, real_valued=True)
        assert project_low(state, 3).real_valued
        assert is_real_valued(project_low(state, 3))

    def test_negative_cutoff(self, random_state):
        with pytest.raises(ValueError):
            project_low(random_state(2), -1)


class TestDerivative:

    def test_third_derivative_of_mode_two(self):
        state = FourierState.from_modes(4, {2: 1.0})
        assert derivative(state, 3).coeff(2) == -8j

    def test_zeroth_derivative(self, random_state):
        state = random_state(3)
        assert np.array_equal(derivative(state, 0).coeffs, state.coeffs)

    @pytest.mark.parametrize('order', [1, 2, 3])
    def test_commutes_with_projections(self, random_state, order):
        state = random_state(12)
        for cutoff in (0, 5, 12):
            assert np.array_equal(derivative(project_low(state, cutoff), order).coeffs,
                                  project_low(derivative(state, order), cutoff).coeffs)
            assert np.array_equal(derivative(project_high(state, cutoff), order).coeffs,
                                  project_high(derivative(state, order), cutoff).coeffs)

    @pytest.mark.parametrize('order', [1, 2, 3])
    def test_keeps_real_states_real(self, random_state, order):
        result = derivative(random_state(8, real_valued=True), order)
        assert result.real_valued
        assert is_real_valued(result)


class TestTripleProduct:

    def test_matches_brute_force_convolution(self, random_state):
        a, b, c = random_state(5), random_state(5), random_state(5)
        product = dealiased_triple_product(a, b, c)
        np.testing.assert_allclose(product.coeffs, brute_force_product(a, b, c), atol=1e-13)

    def test_real_inputs_give_real_output(self, random_state):
        a = random_state(4, real_valued=True)
        product = dealiased_triple_product(a, a, a)
        assert product.real_valued

    def test_conjugate_reflect_of_real_state_is_identity(self, random_state):
        state = random_state(4, real_valued=True)
        np.testing.assert_allclose(conjugate_reflect(state).coeffs, state.coeffs, atol=1e-15)

    def test_mode_caps_must_agree(self, random_state):
        with pytest.raises(ValueError):
            dealiased_triple_product(random_state(2), random_state(3), random_state(2))


def test_japanese_bracket():
    np.testing.assert_allclose(japanese_bracket([0, 1, -3]), [1.0, np.sqrt(2), np.sqrt(10)])


class TestSerialization:

    def test_csv_keeps_every_bit(self, random_state, tmp_path):
        state = random_state(6)
        path = str(tmp_path / 'nested' / 'state.csv')
        state_to_csv(state, path)
        assert np.array_equal(state_from_csv(path).coeffs, state.coeffs)
        with open(path) as f:
            assert f.readline().strip() == 'n,re,im'

    def test_json_keeps_every_bit(self, random_state):
        state = random_state(3).at_time(0.25)
        recovered = state_from_json(state_to_json(state))
        assert np.array_equal(recovered.coeffs, state.coeffs)
        assert recovered.time == 0.25

    def test_json_mode_cap_mismatch(self, random_state):
        data = json.loads(state_to_json(random_state(2)))
        data['mode_cap'] = 3
        with pytest.raises(ValueError):
            state_from_json(json.dumps(data))

    def test_load_state_dispatches_on_extension(self, random_state, tmp_path):
        state = random_state(2)
        path = tmp_path / 'state.json'
        path.write_text(state_to_json(state))
        assert np.array_equal(load_state(str(path)).coeffs, state.coeffs)
