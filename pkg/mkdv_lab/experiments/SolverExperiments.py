"""Conservation, gauge equivalence, high-frequency momentum drift, a priori
bound and order-of-accuracy checks on solver output."""
import logging

import numpy as np

from mkdv_lab.core.Dynamics import SolverAbort, residual_check, sampling_stride, solve, step_count
from mkdv_lab.core.Equations import EquationSpec, Variant
from mkdv_lab.core.Gauges import apply_gauge1, apply_gauge2
from mkdv_lab.core.Norms import (NormSpec, apriori_admissible, coeffs_mass, coeffs_momentum, distance_series,
                                 fl_norm, trajectory_fl_norms)
from mkdv_lab.core.Presets import ICPreset, build_initial_state, plane_wave_state
from mkdv_lab.core.Spectral import FourierState
from mkdv_lab.experiments.Base import (BaseExperiments, ExperimentReport, merge_thresholds, new_report,
                                       solver_abort_decorator, stamp)

logger = logging.getLogger(__name__)

TARGET_SAMPLES = 200
HALF_TWO = NormSpec(0.5, 2)

CONSERVATION_THRESHOLDS = {'mass_drift': 1e-8, 'momentum_drift': 1e-8}
GAUGE_THRESHOLDS = {'gauge_distance': 1e-6}
ENERGY_THRESHOLDS = {'drift_slope': -0.1, 'noise_floor': 1e-13}
APRIORI_THRESHOLDS = {'ratio_growth': 2.0, 'max_failures': 0.0}
ORDER_THRESHOLDS = {'order_slope': 4.0, 'order_tolerance': 0.3, 'residual_slope': 2.0, 'residual_tolerance': 0.3}


def _solve_sampled(ic: FourierState, equation: EquationSpec, T: float, dt: float):
    return solve(ic, equation, T, dt, sampling_stride(step_count(T, dt), TARGET_SAMPLES))


def _relative_drift(series: np.ndarray) -> float:
    reference = abs(series[0])
    drift = float(np.max(np.abs(series - series[0])))
    return drift / reference if reference > 0 else drift


def exp_conservation(equation: EquationSpec, ic_preset: ICPreset, T: float, dt: float, M: int,
                     thresholds: dict | None = None) -> ExperimentReport:
    """Mass, momentum and ``FL^{1/2,2}`` along one solve."""
    thresholds = merge_thresholds(CONSERVATION_THRESHOLDS, thresholds)
    report = new_report('conservation', {'equation': equation.to_dict(), 'ic': str(ic_preset), 'T': T, 'dt': dt,
                                         'M': M}, thresholds)
    try:
        traj = _solve_sampled(build_initial_state(ic_preset, M), equation, T, dt)
    except SolverAbort as abort:
        report.aborted = True
        report.notes.append(abort.diagnostic)
        traj = abort.trajectory
        if traj is None:
            # rejected before the first step, nothing to measure
            report.add_verdict('solver_completed', False, None, 'mass_drift', abort.diagnostic)
            return stamp(report)

    masses = coeffs_mass(traj.coeffs)
    momenta = coeffs_momentum(traj.coeffs)
    norms = trajectory_fl_norms(traj, HALF_TWO)
    report.add_series('mass', ('t', 'mass'), zip(traj.times, masses))
    report.add_series('momentum', ('t', 'momentum'), zip(traj.times, momenta))
    report.add_series('fl_half_two', ('t', 'fl_norm'), zip(traj.times, norms))

    mass_drift = _relative_drift(masses)
    momentum_drift = float(np.max(np.abs(momenta - momenta[0])))
    report.add_scalar('mass_drift_relative', mass_drift)
    report.add_scalar('momentum_drift_absolute', momentum_drift)
    report.add_scalar('fl_half_two_drift_relative', _relative_drift(norms))
    report.add_verdict('mass_conserved', mass_drift <= thresholds['mass_drift'], mass_drift, 'mass_drift')
    report.add_verdict('momentum_conserved', momentum_drift <= thresholds['momentum_drift'], momentum_drift,
                       'momentum_drift')
    return stamp(report)


def exp_gauge_equivalence(ic_preset: ICPreset, T: float, dt: float, M: int, sign: int = 1,
                          thresholds: dict | None = None) -> ExperimentReport:
    """Runs mKdV, mKdV1 and mKdV2 from the same data and compares the gauged flows."""
    thresholds = merge_thresholds(GAUGE_THRESHOLDS, thresholds)
    report = new_report('gauge_equivalence', {'ic': str(ic_preset), 'T': T, 'dt': dt, 'M': M, 'sign': sign},
                        thresholds)
    ic = build_initial_state(ic_preset, M)
    flows = {variant: _solve_sampled(ic, EquationSpec(variant, sign), T, dt) for variant in Variant}
    mkdv, mkdv1, mkdv2 = flows[Variant.MKDV], flows[Variant.MKDV1], flows[Variant.MKDV2]

    comparisons = {
        'g1_mkdv_vs_mkdv1': distance_series(apply_gauge1(mkdv, sign), mkdv1, HALF_TWO),
        'g2_mkdv1_vs_mkdv2': distance_series(apply_gauge2(mkdv1, sign), mkdv2, HALF_TWO),
        'g2g1_mkdv_vs_mkdv2': distance_series(apply_gauge2(apply_gauge1(mkdv, sign), sign), mkdv2, HALF_TWO),
    }
    for name, distances in comparisons.items():
        report.add_series(name, ('t', 'distance'), zip(mkdv.times, distances))
        worst = float(np.max(distances))
        report.add_scalar(f'{name}_sup', worst)
        report.add_verdict(name, worst <= thresholds['gauge_distance'], worst, 'gauge_distance')
    report.add_scalar('mass', float(coeffs_mass(ic.coeffs)))
    report.add_scalar('momentum', float(coeffs_momentum(ic.coeffs)))
    return stamp(report)


def exp_energy_drift(ic_preset: ICPreset, N_schedule, T: float, dt: float, M: int, sign: int = 1,
                     thresholds: dict | None = None) -> ExperimentReport:
    """``sup_t |P(P_{>N} u(t)) - P(P_{>N} u(0))|`` against N on one mKdV2 solve.

    The slope threshold is a choice of this tool; no decay rate is known for it.
    """
    thresholds = merge_thresholds(ENERGY_THRESHOLDS, thresholds)
    report = new_report('energy_drift', {'ic': str(ic_preset), 'N_schedule': list(N_schedule), 'T': T, 'dt': dt,
                                         'M': M, 'sign': sign}, thresholds)
    traj = _solve_sampled(build_initial_state(ic_preset, M), EquationSpec(Variant.MKDV2, sign), T, dt)

    drifts = []
    for cutoff in N_schedule:
        high = coeffs_momentum(np.where(np.abs(traj.modes) > cutoff, traj.coeffs, 0))
        drifts.append(float(np.max(np.abs(high - high[0]))))
    report.add_series('high_momentum_drift', ('N', 'drift'), zip(N_schedule, drifts))

    measurable = [(n, d) for n, d in zip(N_schedule, drifts) if d > thresholds['noise_floor']]
    if len(measurable) < 2:
        report.notes.append('drift below noise floor')
        report.add_verdict('drift_decay', True, None, 'noise_floor', 'below noise')
    else:
        slope = float(np.polyfit(np.log([n for n, _ in measurable]), np.log([d for _, d in measurable]), 1)[0])
        report.add_scalar('drift_slope', slope)
        report.add_verdict('drift_decay', slope <= thresholds['drift_slope'], slope, 'drift_slope')
    return stamp(report)


def exp_apriori_probe(s: float, p: float, ic_family: ICPreset, amplitudes, T: float, dt: float, M: int,
                      sign: int = 1, thresholds: dict | None = None) -> ExperimentReport:
    """``sup_t ||u(t)||_{FL^{s,p}} / ((1 + ||u0||)^{p/2 - 1} ||u0||)`` over scaled data under mKdV1.

    The maximum ratio is an observed lower bound for the constant of the bound.
    """
    if not apriori_admissible(s, p):
        raise ValueError(f'(s, p) = ({s}, {p}) outside 2 <= p < inf, 0 < s < 1 - 1/p')
    thresholds = merge_thresholds(APRIORI_THRESHOLDS, thresholds)
    report = new_report('apriori_probe', {'s': s, 'p': p, 'ic_family': str(ic_family), 'amplitudes': list(amplitudes),
                                          'T': T, 'dt': dt, 'M': M, 'sign': sign}, thresholds)
    spec = NormSpec(s, p)
    base = build_initial_state(ic_family, M)
    equation = EquationSpec(Variant.MKDV1, sign)

    rows, failures = [], 0
    for amplitude in amplitudes:
        ic = base.with_coeffs(amplitude * base.coeffs)
        initial = fl_norm(ic, spec)
        if initial == 0:
            logger.warning('Amplitude %s gives zero data, skipped', amplitude)
            continue
        try:
            traj = _solve_sampled(ic, equation, T, dt)
        except SolverAbort as abort:
            logger.warning('Amplitude %s aborted: %s', amplitude, abort.diagnostic)
            report.notes.append(f'amplitude {amplitude}: {abort.diagnostic}')
            failures += 1
            continue
        bound = (1 + initial) ** (p / 2 - 1) * initial
        rows.append((amplitude, float(np.max(trajectory_fl_norms(traj, spec)) / bound)))

    report.add_series('ratio', ('amplitude', 'ratio'), rows)
    report.add_scalar('member_failures', failures)
    ratios = np.array([r for _, r in rows])
    finite = failures <= thresholds['max_failures'] and bool(rows) and bool(np.all(np.isfinite(ratios)))
    report.add_scalar('max_ratio', float(np.max(ratios)) if rows else None)
    growth = float(np.max(ratios[1:] / ratios[:-1])) if ratios.size > 1 else 1.0
    report.add_scalar('max_ratio_growth', growth)
    report.add_verdict('ratio_finite', finite, failures, 'max_failures')
    report.add_verdict('ratio_stable', finite and growth <= thresholds['ratio_growth'], growth, 'ratio_growth')
    return stamp(report)


def exp_order_of_accuracy(N: int, amplitude: float, T: float, dts, M: int, sign: int = 1,
                          thresholds: dict | None = None) -> ExperimentReport:
    """Error of the plane-wave solve against ``a e^{i(N^3 + sign |a|^2 N) t}`` as dt shrinks."""
    thresholds = merge_thresholds(ORDER_THRESHOLDS, thresholds)
    report = new_report('order_of_accuracy', {'N': N, 'amplitude': amplitude, 'T': T, 'dts': list(dts), 'M': M,
                                              'sign': sign}, thresholds)
    equation = EquationSpec(Variant.MKDV, sign)
    ic = plane_wave_state(M, N, amplitude, 0.0)
    omega = N ** 3 + sign * amplitude ** 2 * N
    exact = plane_wave_state(M, N, amplitude * np.exp(1j * omega * T), 0.0).coeffs

    errors, residuals = [], []
    for dt in dts:
        traj = solve(ic, equation, T, dt)
        errors.append(float(np.max(np.abs(traj.final.coeffs - exact))))
        residuals.append(float(np.median(residual_check(traj))))
    report.add_series('error', ('dt', 'error'), zip(dts, errors))
    report.add_series('residual', ('dt', 'median_residual'), zip(dts, residuals))

    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    residual_order = float(np.polyfit(np.log(dts), np.log(residuals), 1)[0])
    report.add_scalar('order_slope', order)
    report.add_scalar('residual_slope', residual_order)
    report.add_verdict('fourth_order', abs(order - thresholds['order_slope']) <= thresholds['order_tolerance'],
                       order, 'order_slope')
    report.add_verdict('residual_second_order',
                       abs(residual_order - thresholds['residual_slope']) <= thresholds['residual_tolerance'],
                       residual_order, 'residual_slope')
    return stamp(report)


class SolverExperiments(BaseExperiments):
    """Checks of the integrator against conservation laws, gauges and exact solutions."""

    @property
    @solver_abort_decorator
    def conservation_experiment(self):
        """Mass and momentum drift along one solve."""
        self.resolve({})
        report = exp_conservation(EquationSpec(self.value('eq', Variant.MKDV), self.config.sign),
                                  ICPreset.parse(self.value('ic', 'random_smooth:0.5,0')),
                                  self.value('T', 1.0), self.value('dt', 1e-4), self.value('modes', 32),
                                  self.config.thresholds)
        return self.finish(report)

    @property
    @solver_abort_decorator
    def gauge_equivalence_experiment(self):
        """G1 and G2 map mKdV to mKdV1 to mKdV2 solutions."""
        self.resolve({})
        report = exp_gauge_equivalence(ICPreset.parse(self.value('ic', 'random_smooth:0.5,0')),
                                       self.value('T', 0.5), self.value('dt', 1e-4), self.value('modes', 32),
                                       self.config.sign, self.config.thresholds)
        return self.finish(report)

    @property
    @solver_abort_decorator
    def energy_drift_experiment(self):
        """High-frequency momentum drift against the cutoff N."""
        params = self.resolve({'N_schedule': (8, 16, 32, 64)})
        report = exp_energy_drift(ICPreset.parse(self.value('ic', 'gaussian_bump:0.1,1,2')), params['N_schedule'],
                                  self.value('T', 0.5), self.value('dt', 1e-4), self.value('modes', 128),
                                  self.config.sign, self.config.thresholds)
        return self.finish(report)

    @property
    @solver_abort_decorator
    def apriori_probe_experiment(self):
        """Empirical constant of the FL^{s,p} a priori bound over an amplitude family."""
        params = self.resolve({'s': 0.6, 'p': 3.0, 'amplitudes': (0.5, 1.0, 2.0, 4.0)})
        report = exp_apriori_probe(params['s'], params['p'], ICPreset.parse(self.value('ic', 'random_smooth:0.5,0')),
                                   params['amplitudes'], self.value('T', 0.5), self.value('dt', 1e-4),
                                   self.value('modes', 32), self.config.sign, self.config.thresholds)
        return self.finish(report)

    @property
    @solver_abort_decorator
    def order_of_accuracy_experiment(self):
        """Log-log error slope of the integrator on a plane wave."""
        params = self.resolve({'N': 10, 'amplitude': 2.0, 'dts': (1e-3, 5e-4, 2.5e-4)})
        report = exp_order_of_accuracy(params['N'], params['amplitude'], self.value('T', 1.0), params['dts'],
                                       self.value('modes', 16), self.config.sign, self.config.thresholds)
        return self.finish(report)
