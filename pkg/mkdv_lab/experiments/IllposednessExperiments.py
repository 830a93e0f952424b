"""Failure of uniform continuity below s = 1/2, on explicit plane waves.

``u^{N,a}(t, x) = N^{-s} a e^{i(Nx + N^3 t + sign |a|^2 N^{1-2s} t)}`` solves mKdV.
Data with ``a = 1`` and ``a = 1 + 1/n`` start ``~1/n`` apart and reach opposite
phases at ``t_n = pi N^{2s-1} / ((1 + 1/n)^2 - 1)``.
"""
import logging
import math

import numpy as np

from mkdv_lab.core.Dynamics import solve
from mkdv_lab.core.Equations import EquationSpec, Variant
from mkdv_lab.core.Norms import NormSpec, fl_norm
from mkdv_lab.core.Presets import plane_wave_state
from mkdv_lab.core.Spectral import japanese_bracket
from mkdv_lab.experiments.Base import (BaseExperiments, ExperimentReport, merge_thresholds, new_report,
                                       solver_abort_decorator, stamp)

logger = logging.getLogger(__name__)

ILLPOSEDNESS_THRESHOLDS = {
    'initial_distance_ratio': 1.0,
    'solution_distance_floor': 1.9,
    'separation_time_factor': 1.0,
    'solver_agreement': 1e-6,
}
# nonlinear phase advanced per solver step
PHASE_PER_STEP = 0.01


class NRuleError(ValueError):
    """Frequency rule gives a separation time beyond 1/n."""


def separation_time(n: int, N: int, s: float) -> float:
    return math.pi * N ** (2 * s - 1) / ((1 + 1 / n) ** 2 - 1)


def choose_frequency(n: int, s: float, rule: str) -> int:
    """``minimal``: smallest N with ``t_n <= 1/n``; ``fixed:<N>``: that N, checked."""
    kind, _, value = rule.partition(':')
    if kind == 'fixed':
        N = int(value)
        if separation_time(n, N, s) > 1 / n:
            raise NRuleError(f'N = {N} gives t_{n} = {separation_time(n, N, s):.4g} > 1/{n}')
        return N
    if kind != 'minimal':
        raise ValueError(f'unknown N rule {rule!r}; expected minimal or fixed:<N>')
    N = max(1, math.ceil((n * math.pi / ((1 + 1 / n) ** 2 - 1)) ** (1 / (1 - 2 * s))) - 1)
    while separation_time(n, N, s) > 1 / n:
        N += 1
    return N


def plane_wave_solution(N: int, a: float, s: float, sign: int, t: float) -> complex:
    """Fourier coefficient at mode N of ``u^{N,a}(t)``."""
    omega = N ** 3 + sign * a ** 2 * N ** (1 - 2 * s)
    return N ** (-s) * a * np.exp(1j * omega * t)


def exp_illposedness(s: float, p: float, n_list, N_rule: str = 'minimal', sign: int = 1,
                     solver_mode_cap: int = 1024, thresholds: dict | None = None) -> ExperimentReport:
    """Analytic distances at t = 0 and t = t_n, plus a separate solver cross-check.

    Members whose frequency exceeds ``solver_mode_cap`` are reported with the
    analytic values only.
    """
    if not s < 0.5:
        raise ValueError(f'the construction needs s < 1/2, got s = {s}')
    thresholds = merge_thresholds(ILLPOSEDNESS_THRESHOLDS, thresholds)
    report = new_report('illposedness', {'s': s, 'p': p, 'n_list': list(n_list), 'N_rule': N_rule, 'sign': sign,
                                         'solver_mode_cap': solver_mode_cap}, thresholds)
    spec = NormSpec(s, p)
    rows, solver_rows = [], []
    for n in n_list:
        N = choose_frequency(n, s, N_rule)
        t_n = separation_time(n, N, s)
        weight = float(japanese_bracket(N)) ** s * N ** (-s)
        # single-mode states: the FL^{s,p} distance is <N>^s |difference of the mode-N coefficients|
        initial = weight / n
        final = float(np.abs(plane_wave_solution(N, 1.0, s, sign, t_n)
                             - plane_wave_solution(N, 1 + 1 / n, s, sign, t_n))) * float(japanese_bracket(N)) ** s
        rows.append((n, N, t_n, initial, final))

        if N > solver_mode_cap:
            logger.warning('n = %s: N = %s above the solver mode cap %s, solver check skipped', n, N, solver_mode_cap)
            continue
        nonlinear_phase = (1 + 1 / n) ** 2 * N ** (1 - 2 * s) * t_n
        steps = max(1, math.ceil(nonlinear_phase / PHASE_PER_STEP))
        equation = EquationSpec(Variant.MKDV, sign)
        solutions, error = [], 0.0
        for a in (1.0, 1 + 1 / n):
            traj = solve(plane_wave_state(N, N, a, s), equation, t_n, t_n / steps, steps)
            exact = plane_wave_solution(N, a, s, sign, t_n)
            error = max(error, abs(traj.final.coeff(N) - exact))
            solutions.append(traj.final)
        distance = fl_norm(solutions[0].with_coeffs(solutions[0].coeffs - solutions[1].coeffs), spec)
        solver_rows.append((n, N, distance, error))
        logger.info('n = %s: N = %s, t_n = %.4g, solver distance %.6g', n, N, t_n, distance)

    report.add_series('members', ('n', 'N', 't_n', 'initial_distance', 'solution_distance'), rows)
    report.add_series('solver', ('n', 'N', 'solver_distance', 'coefficient_error'), solver_rows)

    initial = [r[3] for r in rows]
    final = [r[4] for r in rows]
    ratio = max((b / a for a, b in zip(initial, initial[1:])), default=0.0)
    report.add_scalar('last_initial_distance', initial[-1])
    report.add_verdict('initial_distance_vanishes', ratio < thresholds['initial_distance_ratio'], ratio,
                       'initial_distance_ratio', 'largest ratio of consecutive initial distances')
    report.add_verdict('solution_distance_separated', min(final) >= thresholds['solution_distance_floor'], min(final),
                       'solution_distance_floor')
    separation = max(r[2] * r[0] for r in rows)
    report.add_verdict('separation_time_within_one_over_n', separation <= thresholds['separation_time_factor'],
                       separation, 'separation_time_factor', 'largest n t_n')

    analytic = {r[0]: r[4] for r in rows}
    disagreement = max((max(abs(d - analytic[n]), e) for n, _, d, e in solver_rows), default=0.0)
    report.add_scalar('solver_checked_members', len(solver_rows))
    report.add_verdict('solver_agrees', disagreement <= thresholds['solver_agreement'], disagreement,
                       'solver_agreement')
    return stamp(report)


class IllposednessExperiments(BaseExperiments):

    @property
    @solver_abort_decorator
    def illposedness_experiment(self):
        """Plane-wave pairs: initial distance ~1/n, distance ~2 at t_n -> 0."""
        params = self.resolve({'s': 0.0, 'p': 2.0, 'n_list': (2, 4, 8, 16), 'N_rule': 'minimal',
                               'solver_mode_cap': 1024})
        report = exp_illposedness(params['s'], params['p'], params['n_list'], params['N_rule'], self.config.sign,
                                  params['solver_mode_cap'], self.config.thresholds)
        return self.finish(report)
