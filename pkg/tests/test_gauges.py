import numpy as np
import pytest

from mkdv_lab.core.Dynamics import solve, sup_distance
from mkdv_lab.core.Equations import EquationSpec, GaugeKind, GaugeSpec, Variant
from mkdv_lab.core.Gauges import GaugeMismatchError, apply_gauge1, apply_gauge2, gauge_phases, invert_gauge
from mkdv_lab.core.Norms import NormSpec, coeffs_mass, distance_series, trajectory_fl_norms
from mkdv_lab.core.Presets import ICPreset, build_initial_state
from mkdv_lab.core.Trajectory import Trajectory, load_trajectory, save_trajectory

T, DT, M = 0.2, 1e-3, 16


@pytest.fixture(params=[1, -1])
def flows(request):
    ic = build_initial_state(ICPreset.parse('random_smooth:0.5,11'), M)
    return {variant: solve(ic, EquationSpec(variant, request.param), T, DT, save_every=10) for variant in Variant}


class TestFlowEquivalence:

    def test_gauge1_maps_mkdv_to_mkdv1(self, flows):
        gauged = apply_gauge1(flows[Variant.MKDV], flows[Variant.MKDV].equation.sign)
        assert gauged.equation.variant == Variant.MKDV1
        assert sup_distance(gauged, flows[Variant.MKDV1]) <= 1e-6

    def test_gauge2_maps_mkdv1_to_mkdv2(self, flows):
        gauged = apply_gauge2(flows[Variant.MKDV1], flows[Variant.MKDV1].equation.sign)
        assert gauged.equation.variant == Variant.MKDV2
        assert sup_distance(gauged, flows[Variant.MKDV2]) <= 1e-6

    def test_composition_maps_mkdv_to_mkdv2(self, flows):
        sign = flows[Variant.MKDV].equation.sign
        gauged = apply_gauge2(apply_gauge1(flows[Variant.MKDV], sign), sign)
        assert [g.which for g in gauged.gauges] == [GaugeKind.G1, GaugeKind.G2]
        assert sup_distance(gauged, flows[Variant.MKDV2]) <= 1e-6


class TestGaugeAlgebra:

    def test_isometry(self, flows):
        traj = flows[Variant.MKDV]
        gauged = apply_gauge1(traj, traj.equation.sign)
        for spec in (NormSpec(0.5, 2), NormSpec(0, 3)):
            np.testing.assert_allclose(trajectory_fl_norms(gauged, spec), trajectory_fl_norms(traj, spec),
                                       rtol=1e-14)
        np.testing.assert_allclose(coeffs_mass(gauged.coeffs), coeffs_mass(traj.coeffs), rtol=1e-14)

    def test_invert_pops_the_stack(self, flows):
        traj = flows[Variant.MKDV1]
        sign = traj.equation.sign
        gauged = apply_gauge2(traj, sign, 0.7)
        restored = invert_gauge(gauged, GaugeSpec(GaugeKind.G2, sign, 0.7))
        assert restored.gauges == ()
        assert restored.equation.variant == Variant.MKDV1
        assert np.max(distance_series(restored, traj, NormSpec(0, 2))) <= 1e-14

    def test_invert_on_ungauged_records_inverse(self, flows):
        traj = flows[Variant.MKDV2]
        sign = traj.equation.sign
        spec = GaugeSpec(GaugeKind.G2, sign, 1.5)
        back = invert_gauge(traj, spec)
        assert back.gauges == (spec.inverted(),)
        assert back.equation.variant == Variant.MKDV1
        again = apply_gauge2(back, sign, 1.5)
        assert np.max(distance_series(again, traj, NormSpec(0, 2))) <= 1e-14

    def test_mismatched_inverse(self, flows):
        traj = flows[Variant.MKDV]
        sign = traj.equation.sign
        gauged = apply_gauge1(traj, sign, 0.3)
        with pytest.raises(GaugeMismatchError):
            invert_gauge(gauged, GaugeSpec(GaugeKind.G2, sign, 0.3))
        with pytest.raises(GaugeMismatchError):
            invert_gauge(gauged, GaugeSpec(GaugeKind.G1, sign, 0.31))

    def test_sign_mismatch(self, flows):
        traj = flows[Variant.MKDV]
        with pytest.raises(GaugeMismatchError):
            apply_gauge1(traj, -traj.equation.sign)

    def test_real_data_make_gauge2_trivial(self):
        ic = build_initial_state(ICPreset.parse('gaussian_bump:0.5,0.5'), 8)
        traj = solve(ic, EquationSpec(Variant.MKDV1, 1), 0.05, 1e-3, save_every=10)
        gauged = apply_gauge2(traj, 1)
        assert gauged.gauges[-1].scalar == 0.0
        assert np.array_equal(gauged.coeffs, traj.coeffs)

    def test_phase_shapes(self):
        phases = gauge_phases(GaugeSpec(GaugeKind.G1, 1, 2.0), np.array([0.0, 0.5]), np.arange(-2, 3))
        assert phases.shape == (2, 5)
        np.testing.assert_allclose(phases[1], np.exp(-1j * np.arange(-2, 3)))


def test_gauge_stack_survives_serialization(flows, tmp_path):
    traj = apply_gauge1(flows[Variant.MKDV], flows[Variant.MKDV].equation.sign)
    save_trajectory(traj, str(tmp_path))
    loaded = load_trajectory(str(tmp_path))
    assert isinstance(loaded, Trajectory)
    assert loaded.gauges == traj.gauges
    assert loaded.equation == traj.equation
    assert np.array_equal(loaded.coeffs, traj.coeffs)
    np.testing.assert_allclose(loaded.times, traj.times, rtol=1e-12)
