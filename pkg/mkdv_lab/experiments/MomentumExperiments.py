"""Momentum of rough data: divergence of truncated momenta, the resulting
oscillation of truncated-data solutions, and Gaussian random data."""
import logging

import numpy as np

from mkdv_lab.core.Dynamics import sampling_stride, solve_ensemble, step_count
from mkdv_lab.core.Equations import EquationSpec, GaugeKind, GaugeSpec, Variant
from mkdv_lab.core.Gauges import invert_gauge
from mkdv_lab.core.Norms import (MomentumVerdict, NormSpec, ScheduleError, coeffs_mass, distance_series, fl_norm,
                                 momentum, momentum_limit_diagnostic, raised_cosine_window)
from mkdv_lab.core.Presets import ICPreset, build_initial_state, one_sided_momentum
from mkdv_lab.core.Spectral import project_low
from mkdv_lab.experiments.Base import (BaseExperiments, ExperimentReport, merge_thresholds, new_report,
                                       solver_abort_decorator, stamp)

logger = logging.getLogger(__name__)

TARGET_SAMPLES = 200
SAMPLE_CHUNK = 1000
CROSS_CHECK_FACTOR = 10

NONEXISTENCE_THRESHOLDS = {
    'v_shrink_factor': 4.0,
    'u_separation_fraction': 0.1,
    'pairing_decay': 0.5,
    'control_pairing_floor': 0.5,
    'control_tolerance': 1e-12,
    'membership_margin': 1.0,
    'divergence_alpha': 1.0,
}
RANDOM_MOMENTUM_THRESHOLDS = {'standard_errors': 4.0}
MOMENTUM_LIMIT_THRESHOLDS = {'oracle_tolerance': 1e-9}


def parse_test_function(testfn: str) -> int:
    """``raised_cosine`` or ``raised_cosine:<mode>``; returns the spatial mode of the test function."""
    kind, _, mode = testfn.partition(':')
    if kind != 'raised_cosine':
        raise ValueError(f'unknown test function {testfn!r}; expected raised_cosine[:mode]')
    return int(mode) if mode else 1


def pairing(coeffs: np.ndarray, times: np.ndarray, dt: float, mode: int) -> complex:
    """``<u, w(t) e^{i mode x}>_{t,x} = int w(t) c(t, mode) dt`` with the raised-cosine window."""
    mode_cap = (coeffs.shape[1] - 1) // 2
    return complex(dt * np.sum(raised_cosine_window(times) * coeffs[:, mode + mode_cap]))


def _member_runs(datasets, schedule, equation: EquationSpec, T: float, dt: float, save_every: int):
    """Per data set, per cutoff: (P_N, v_N solving mKdV2, u_N = inverse G2 of v_N).

    All truncations of all data sets are integrated as one ensemble.
    """
    ics, momenta = [], []
    for data in datasets:
        for cutoff in schedule:
            ic = project_low(data, cutoff)
            ics.append(ic)
            momenta.append(momentum(ic))
            logger.info('Truncation N = %s, P_N = %.6g', cutoff, momenta[-1])
    trajectories = solve_ensemble(ics, equation, T, dt, save_every)
    runs = [(P, v, invert_gauge(v, GaugeSpec(GaugeKind.G2, equation.sign, P))) for P, v in zip(momenta, trajectories)]
    return [runs[k:k + len(schedule)] for k in range(0, len(runs), len(schedule))]


def _cauchy(runs, index: int, spec: NormSpec) -> list[float]:
    return [float(np.max(distance_series(a[index], b[index], spec))) for a, b in zip(runs, runs[1:])]


def exp_nonexistence(s: float, p: float, alpha: float, N_schedule, T: float, dt: float, M: int,
                     testfn: str = 'raised_cosine', sign: int = 1, cauchy_s: float = -1.0,
                     local_T: float = 0.005, local_dt: float = 1e-6,
                     thresholds: dict | None = None) -> ExperimentReport:
    """Truncations of one-sided data ``c(n) = n^{-alpha}`` solved under mKdV2 and gauged back.

    v_N (mKdV2) settle as N grows while u_N = e^{i sign P_N t} v_N keep rotating
    with the diverging P_N, so their pairing with a fixed smooth test function
    decays over ``[0, T]``.

    The v-verdict is taken on the short window ``[0, local_T]`` integrated with
    ``local_dt``: at the desk step ``dt`` the nonresonant phases coupling the top
    shells to the low modes turn by several radians per step, and the step error
    they leave at the low modes outgrows the data differences of the last pairs.
    The ``[0, T]`` v-differences are reported alongside. v-differences are
    measured in ``FL^{cauchy_s,p}`` (the ``FL^{s,p}`` tail of the data shrinks too
    slowly to show at desk scale) and also reported in ``FL^{s,p}``. A
    conjugate-symmetric control run has ``P_N = 0`` and must give ``u_N = v_N``.
    """
    thresholds = merge_thresholds(NONEXISTENCE_THRESHOLDS, thresholds)
    schedule = [int(n) for n in N_schedule]
    if any(n > M for n in schedule):
        raise ScheduleError(f'schedule {schedule} exceeds the mode cap M = {M}')
    if len(schedule) < 2:
        raise ScheduleError('non-existence needs at least two truncations')
    if not local_T <= T:
        raise ValueError(f'local window {local_T} is longer than T = {T}')
    test_mode = parse_test_function(testfn)
    report = new_report('nonexistence', {'s': s, 'p': p, 'alpha': alpha, 'N_schedule': schedule, 'T': T, 'dt': dt,
                                         'M': M, 'testfn': testfn, 'sign': sign, 'cauchy_s': cauchy_s,
                                         'local_T': local_T, 'local_dt': local_dt}, thresholds)
    spec, weak = NormSpec(s, p), NormSpec(cauchy_s, p)
    equation = EquationSpec(Variant.MKDV2, sign)
    save_every = sampling_stride(step_count(T, dt), TARGET_SAMPLES)
    local_every = sampling_stride(step_count(local_T, local_dt), TARGET_SAMPLES)

    # membership in FL^{s,p} needs p (alpha - s) > 1; divergence of sum n^{1 - 2 alpha} needs alpha <= 1
    membership = p * (alpha - s)
    report.add_scalar('membership_exponent', membership)
    report.add_verdict('data_in_space', membership > thresholds['membership_margin'], membership,
                       'membership_margin')
    data = build_initial_state(ICPreset('one_sided', (alpha,)), M)
    diagnostic = momentum_limit_diagnostic(data, schedule) if len(schedule) >= 4 else None
    diverging = alpha <= thresholds['divergence_alpha'] and (
        diagnostic is None or diagnostic.verdict == MomentumVerdict.DIVERGING)
    report.add_verdict('momentum_diverging', diverging, alpha, 'divergence_alpha',
                       diagnostic.verdict.value if diagnostic else 'series test only')

    control_data = build_initial_state(ICPreset('one_sided_real', (alpha,)), M)
    runs, control = _member_runs([data, control_data], schedule, equation, T, dt, save_every)
    (local,) = _member_runs([data], schedule, equation, local_T, local_dt, local_every)
    momenta = [P for P, _, _ in runs]
    report.add_series('momentum', ('N', 'P_N'), zip(schedule, momenta))
    report.add_series('momentum_oracle', ('N', 'P_N'), ((n, one_sided_momentum(alpha, n)) for n in schedule))

    pairs = list(zip(schedule, schedule[1:]))
    v_weak = _cauchy(local, 1, weak)
    v_strong = _cauchy(local, 1, spec)
    v_weak_full = _cauchy(runs, 1, weak)
    u_strong = _cauchy(runs, 2, spec)
    pairings = [abs(pairing(u.coeffs, u.times, u.dt, test_mode)) for _, _, u in runs]
    for name, values in (('v_cauchy_weak', v_weak), ('v_cauchy', v_strong), ('v_cauchy_weak_full', v_weak_full),
                         ('u_cauchy', u_strong)):
        report.add_series(name, ('N', 'N_next', 'distance'), ((a, b, d) for (a, b), d in zip(pairs, values)))
    report.add_series('pairing', ('N', 'abs_pairing'), zip(schedule, pairings))

    shrink = v_weak[0] / v_weak[-1] if v_weak[-1] > 0 else float('inf')
    report.add_scalar('v_shrink', shrink)
    report.add_scalar('v_shrink_full', v_weak_full[0] / v_weak_full[-1] if v_weak_full[-1] > 0 else float('inf'))
    report.add_verdict('v_cauchy_shrinks', shrink >= thresholds['v_shrink_factor'], shrink, 'v_shrink_factor',
                       f'on [0, {local_T:g}] with dt = {local_dt:g}')
    reference = fl_norm(project_low(data, schedule[-1]), spec)
    separation = min(u_strong) / reference if reference > 0 else 0.0
    report.add_scalar('u_separation', separation)
    report.add_verdict('u_stays_separated', separation >= thresholds['u_separation_fraction'], separation,
                       'u_separation_fraction')
    decay = pairings[-1] / pairings[0] if pairings[0] > 0 else 0.0
    report.add_scalar('pairing_ratio', decay)
    report.add_verdict('pairing_decays', decay <= thresholds['pairing_decay'], decay, 'pairing_decay')

    control_momenta = [abs(P) for P, _, _ in control]
    control_gauge = max(float(np.max(distance_series(u, v, spec))) for _, v, u in control)
    control_pairings = [abs(pairing(u.coeffs, u.times, u.dt, test_mode)) for _, _, u in control]
    report.add_series('control_pairing', ('N', 'abs_pairing'), zip(schedule, control_pairings))
    tolerance = thresholds['control_tolerance'] * max(1.0, float(coeffs_mass(control_data.coeffs)))
    report.add_verdict('control_momentum_zero', max(control_momenta) <= tolerance, max(control_momenta),
                       'control_tolerance')
    report.add_verdict('control_gauge_trivial', control_gauge <= tolerance, control_gauge, 'control_tolerance')
    persistence = control_pairings[-1] / control_pairings[0] if control_pairings[0] > 0 else 0.0
    report.add_verdict('control_pairing_persists', persistence >= thresholds['control_pairing_floor'], persistence,
                       'control_pairing_floor')
    return stamp(report)


def sample_momenta(rng: np.random.Generator, samples: int, N: int, real_only: bool = False) -> np.ndarray:
    """``P(P_{<=N} u0)`` for ``u0 = sum_{n != 0} g_n / |n| e^{inx}``, complex standard Gaussians ``g_n``.

    ``P = sum_{n=1}^N (|g_n|^2 - |g_{-n}|^2) / n``. With ``real_only`` the data
    is conjugate symmetric (``g_{-n} = conj(g_n)``) and every sample is zero.
    """
    weights = 1.0 / np.arange(1, N + 1, dtype=np.float64)
    momenta = np.empty(samples)
    for start in range(0, samples, SAMPLE_CHUNK):
        size = min(SAMPLE_CHUNK, samples - start)
        positive = rng.standard_normal((size, N)) ** 2 + rng.standard_normal((size, N)) ** 2
        negative = positive if real_only else rng.standard_normal((size, N)) ** 2 + rng.standard_normal((size, N)) ** 2
        momenta[start:start + size] = (positive - negative) @ weights
    return momenta


def random_momentum_second_moment(N: int) -> float:
    """``E[P^2] = 8 sum_{n<=N} n^{-2}``."""
    return float(8.0 * np.sum(1.0 / np.arange(1, N + 1, dtype=np.float64) ** 2))


def exp_random_momentum(samples: int, N: int, seed: int, real_only: bool = False, cross_check: bool = True,
                        thresholds: dict | None = None) -> ExperimentReport:
    if samples < 100:
        raise ValueError(f'at least 100 samples are needed, got {samples}')
    thresholds = merge_thresholds(RANDOM_MOMENTUM_THRESHOLDS, thresholds)
    report = new_report('random_momentum', {'samples': samples, 'N': N, 'seed': seed, 'real_only': real_only,
                                            'cross_check': cross_check}, thresholds)
    main_seed, cross_seed = np.random.SeedSequence(seed).spawn(2)
    momenta = sample_momenta(np.random.default_rng(main_seed), samples, N, real_only)
    squares = momenta ** 2
    expected = 0.0 if real_only else random_momentum_second_moment(N)
    second_moment = float(np.mean(squares))
    standard_error = float(np.std(squares, ddof=1) / np.sqrt(samples))
    mean = float(np.mean(momenta))
    mean_error = float(np.std(momenta, ddof=1) / np.sqrt(samples))

    report.add_scalar('sample_mean', mean)
    report.add_scalar('sample_second_moment', second_moment)
    report.add_scalar('analytic_second_moment', expected)
    report.add_scalar('standard_error', standard_error)
    limit = thresholds['standard_errors']
    report.add_verdict('mean_vanishes', abs(mean) <= limit * mean_error, mean, 'standard_errors')
    report.add_verdict('second_moment_matches', abs(second_moment - expected) <= limit * standard_error,
                       second_moment, 'standard_errors')

    if cross_check:
        cross = sample_momenta(np.random.default_rng(cross_seed), CROSS_CHECK_FACTOR * samples, N, real_only) ** 2
        cross_moment = float(np.mean(cross))
        cross_error = float(np.std(cross, ddof=1) / np.sqrt(cross.size))
        combined = float(np.hypot(standard_error, cross_error))
        report.add_scalar('cross_check_second_moment', cross_moment)
        report.add_verdict('cross_check_agrees', abs(second_moment - cross_moment) <= limit * combined,
                           cross_moment, 'standard_errors')
    return stamp(report, seed)


def exp_momentum_limit(ic_preset: ICPreset, schedule, M: int, thresholds: dict | None = None) -> ExperimentReport:
    """Truncated momenta along a schedule, compared with the exact partial sums for one-sided data."""
    thresholds = merge_thresholds(MOMENTUM_LIMIT_THRESHOLDS, thresholds)
    report = new_report('momentum_limit', {'ic': str(ic_preset), 'schedule': list(schedule), 'M': M}, thresholds)
    series = momentum_limit_diagnostic(build_initial_state(ic_preset, M), schedule)
    report.add_series('truncated_momentum', ('N', 'P_N'), series.truncations)
    report.scalars.update(series.verdict_dict())
    if ic_preset.kind == 'one_sided':
        (alpha,) = ic_preset.args
        oracle = np.array([one_sided_momentum(alpha, min(n, M)) for n in series.cutoffs])
        error = float(np.max(np.abs(np.array(series.values) - oracle) / np.maximum(1.0, np.abs(oracle))))
        report.add_series('oracle', ('N', 'P_N'), zip(series.cutoffs, oracle))
        report.add_verdict('oracle_agreement', error <= thresholds['oracle_tolerance'], error, 'oracle_tolerance')
    return stamp(report)


class MomentumExperiments(BaseExperiments):

    @property
    @solver_abort_decorator
    def nonexistence_experiment(self):
        """Oscillation of gauged truncated-data solutions when the momentum diverges."""
        params = self.resolve({'s': 0.5, 'p': 3.0, 'alpha': 0.9, 'N_schedule': (32, 64, 128, 256),
                               'testfn': 'raised_cosine', 'cauchy_s': -1.0, 'local_T': 0.005, 'local_dt': 1e-6})
        report = exp_nonexistence(params['s'], params['p'], params['alpha'], params['N_schedule'],
                                  self.value('T', 1.0), self.value('dt', 5e-5), self.value('modes', 512),
                                  params['testfn'], self.config.sign, params['cauchy_s'], params['local_T'],
                                  params['local_dt'], self.config.thresholds)
        return self.finish(report)

    @property
    def random_momentum_experiment(self):
        """Second moment of the truncated momentum of Gaussian random data."""
        params = self.resolve({'samples': 10000, 'N': 1000, 'real_only': False, 'cross_check': True})
        report = exp_random_momentum(params['samples'], params['N'], self.config.seed, params['real_only'],
                                     params['cross_check'], self.config.thresholds)
        return self.finish(report)

    @property
    def momentum_limit_experiment(self):
        """Finite-momentum diagnostic along a dyadic truncation schedule."""
        params = self.resolve({'schedule': (16, 32, 64, 128, 256, 512, 1024, 2048, 4096)})
        report = exp_momentum_limit(ICPreset.parse(self.value('ic', 'one_sided:0.9')), params['schedule'],
                                    self.value('modes', 4096), self.config.thresholds)
        return self.finish(report)
