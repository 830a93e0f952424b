import math

import numpy as np
import pytest

from mkdv_lab.core.Equations import EquationSpec
from mkdv_lab.core.Norms import (MomentumVerdict, NormSpec, ScheduleError, apriori_admissible,
                                 classify_momentum_series, energy_estimate_admissible, fl_norm, lwp_admissible,
                                 mass, momentum, momentum_limit_diagnostic, raised_cosine_window,
                                 scaling_critical_regularity, sobolev_norm, sobolev_scaling_index,
                                 truncated_momentum, window_modulation_norm, xsb_norm)
from mkdv_lab.core.Presets import ICPreset, build_initial_state, one_sided_momentum
from mkdv_lab.core.Spectral import FourierState, conjugate_reflect, project_high
from mkdv_lab.core.Trajectory import Trajectory


def free_trajectory(state: FourierState, samples: int, dt: float) -> Trajectory:
    times = dt * np.arange(samples)
    cubes = state.modes.astype(np.float64) ** 3
    return Trajectory(times, state.coeffs * np.exp(1j * np.outer(times, cubes)), EquationSpec(), dt)


class TestNormSpec:

    def test_parse(self):
        assert NormSpec.parse('0.5,2') == NormSpec(0.5, 2)
        assert NormSpec.parse('0,0.5,2,2') == NormSpec(0, 2, 0.5, 2)
        assert NormSpec.parse('0,inf').p == math.inf

    @pytest.mark.parametrize('text', ['1', '0,0.5', '0,1,2'])
    def test_parse_rejects_wrong_arity(self, text):
        with pytest.raises(ValueError):
            NormSpec.parse(text)

    def test_p_below_one(self):
        with pytest.raises(ValueError):
            NormSpec(0, 0.5)


class TestFourierLebesgue:

    def test_l2_norm_is_root_mass(self, random_state):
        state = random_state(12)
        assert fl_norm(state, NormSpec(0, 2)) == math.sqrt(mass(state))

    def test_zero_state(self):
        assert fl_norm(FourierState.zeros(4), NormSpec(1, 3)) == 0.0

    def test_single_mode(self):
        state = FourierState.from_modes(4, {3: 2.0})
        assert fl_norm(state, NormSpec(0.5, 3)) == pytest.approx(10 ** 0.25 * 2.0)

    def test_sup_norm(self):
        state = FourierState.from_modes(4, {1: 3.0, -2: 1.0})
        assert fl_norm(state, NormSpec(0, math.inf)) == pytest.approx(3.0)

    def test_sobolev_norm_is_p_two(self, random_state):
        state = random_state(5)
        assert sobolev_norm(state, 1.0) == fl_norm(state, NormSpec(1.0, 2))

    def test_monotone_in_s(self, random_state):
        state = random_state(8)
        assert fl_norm(state, NormSpec(0.25, 2)) <= fl_norm(state, NormSpec(0.75, 2))


class TestConservedQuantities:

    def test_momentum_of_real_state_is_zero(self, random_state):
        assert momentum(random_state(16, real_valued=True)) == 0.0

    def test_momentum_of_plane_wave(self):
        assert momentum(FourierState.from_modes(8, {5: 0.5})) == pytest.approx(5 * 0.25)

    def test_momentum_is_odd_under_conjugation(self, random_state):
        for mode_cap in (1, 4, 16):
            state = random_state(mode_cap)
            assert momentum(conjugate_reflect(state)) == -momentum(state)

    def test_truncated_momentum_is_additive(self, random_state):
        state = random_state(16, amplitude=1.0)
        for cutoff in (0, 3, 8, 16):
            total = truncated_momentum(state, cutoff) + momentum(project_high(state, cutoff))
            assert total == pytest.approx(momentum(state), rel=1e-12, abs=1e-14)

    def test_mean_only_state(self):
        state = FourierState(np.array([0.6 + 0.8j]))
        assert mass(state) == pytest.approx(1.0, rel=1e-15)
        assert momentum(state) == 0.0
        assert fl_norm(state, NormSpec(0.5, 2)) == pytest.approx(1.0, rel=1e-15)
        assert fl_norm(state, NormSpec(1.0, math.inf)) == pytest.approx(1.0, rel=1e-15)

    def test_truncated_momentum_matches_series(self):
        state = build_initial_state(ICPreset('one_sided', (0.9,)), 64)
        assert truncated_momentum(state, 16) == pytest.approx(one_sided_momentum(0.9, 16), rel=1e-12)


class TestMomentumDiagnostic:

    def test_smooth_data_converges(self):
        state = build_initial_state(ICPreset('gaussian_bump', (0.5, 1.0, 3.0)), 256)
        series = momentum_limit_diagnostic(state, [32, 64, 128, 256])
        assert series.verdict == MomentumVerdict.CONVERGED
        assert series.limit == pytest.approx(momentum(state), rel=1e-9)

    def test_one_sided_rough_data_diverges(self):
        state = build_initial_state(ICPreset('one_sided', (0.9,)), 512)
        series = momentum_limit_diagnostic(state, [64, 128, 256, 512])
        assert series.verdict == MomentumVerdict.DIVERGING
        assert series.limit is None

    def test_fast_octave_growth_diverges(self):
        verdict, _ = classify_momentum_series([1, 2, 4, 8], [1.0, 3.0, 4.0, 9.0])
        assert verdict == MomentumVerdict.DIVERGING

    def test_oscillating_series_is_undetermined(self):
        verdict, limit = classify_momentum_series([1, 2, 3, 4, 5], [1.0, 2.0, 1.0, 2.0, 1.0])
        assert verdict == MomentumVerdict.UNDETERMINED
        assert limit is None

    def test_short_schedule(self, random_state):
        with pytest.raises(ScheduleError):
            momentum_limit_diagnostic(random_state(8), [1, 2, 4])

    def test_non_increasing_schedule(self, random_state):
        with pytest.raises(ScheduleError):
            momentum_limit_diagnostic(random_state(8), [1, 4, 2, 8])


class TestSpaceTimeNorm:

    def test_window_vanishes_at_ends(self):
        window = raised_cosine_window(np.linspace(0, 2, 9))
        assert window[0] == 0.0
        assert window[-1] == pytest.approx(0.0, abs=1e-15)
        assert window[4] == pytest.approx(1.0)

    def test_window_needs_span(self):
        with pytest.raises(ValueError):
            raised_cosine_window(np.zeros(4))

    def test_zero_modulation_weight_is_parseval(self, random_state):
        state = random_state(4)
        traj = free_trajectory(state, 64, 1 / 64)
        window = raised_cosine_window(traj.times)
        expected = math.sqrt(traj.dt * np.sum(window ** 2) * mass(state))
        assert xsb_norm(traj, NormSpec(0, 2, 0, 2)) == pytest.approx(expected, rel=1e-12)

    def test_free_evolution_factorises(self, random_state):
        state = random_state(4)
        traj = free_trajectory(state, 64, 1 / 64)
        expected = window_modulation_norm(traj.times, 0.5) * fl_norm(state, NormSpec(1, 2))
        assert xsb_norm(traj, NormSpec(1, 2, 0.5, 2)) == pytest.approx(expected, rel=1e-10)

    def test_too_few_samples(self, random_state):
        with pytest.raises(ValueError):
            xsb_norm(free_trajectory(random_state(2), 4, 0.1), NormSpec(0, 2, 0.5, 2))


class TestRanges:

    def test_scaling(self):
        assert scaling_critical_regularity(4) == -0.25
        assert sobolev_scaling_index(0.5, 2) == 0.5

    @pytest.mark.parametrize('s, p, expected', [
        (0.5, 2, True),
        (0.5, 8, False),
        (0.75, 8, True),
        (0.4, 2, False),
        (0.6, 2.5, True),
    ])
    def test_lwp_range(self, s, p, expected):
        assert lwp_admissible(s, p) is expected

    def test_energy_and_apriori_ranges(self):
        assert energy_estimate_admissible(0.5, 2)
        assert not energy_estimate_admissible(0.5, 1.5)
        assert apriori_admissible(0.6, 3)
        assert not apriori_admissible(0.7, 3)
