import importlib
import logging
import os
from datetime import datetime, timezone
from enum import IntEnum

import scipy.fft

from mkdv_lab.Reporter import Reporter, ReporterTypes
from mkdv_lab.core.Dynamics import SolverAbort, solve
from mkdv_lab.core.Equations import EquationSpec, GaugeKind, Variant
from mkdv_lab.core.Gauges import apply_gauge1, apply_gauge2
from mkdv_lab.core.Norms import coeffs_mass, coeffs_momentum, fl_norm, mass, momentum, trajectory_fl_norms
from mkdv_lab.core.Presets import build_initial_state
from mkdv_lab.core.Spectral import load_state
from mkdv_lab.core.Trajectory import MANIFEST_NAME, Trajectory, load_trajectory, save_trajectory
from mkdv_lab.experiments.Base import ExperimentReport, get_all_experiments, new_report, stamp
from mkdv_lab.utils import ConfigError, RunConfig

logger = logging.getLogger(__name__)

DEFAULT_MODES = 32
DEFAULT_DT = 1e-4
DEFAULT_T = 1.0


class ExitCodes(IntEnum):
    OK = 0
    CONFIG_ERROR = 1
    NUMERICAL_ABORT = 2
    VERDICT_FAILURE = 3


class CommandRunner:
    """Dispatches one subcommand of a resolved ``RunConfig`` and maps its outcome to an exit code."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.started = datetime.now(timezone.utc)
        self.__existing_experiments = get_all_experiments()

    def print_status(self, prefix, name):
        print(' ' * 100, end='\r')
        print(f'{prefix}: {name} ...', end='\r')

    def run(self) -> int:
        with scipy.fft.set_workers(self.config.threads or 1):
            try:
                report = getattr(self, f'_run_{self.config.subcommand}')()
            except ConfigError as error:
                print(f'Configuration error: {error}')
                return ExitCodes.CONFIG_ERROR
            except SolverAbort as error:
                print(f'Numerical abort: {error.diagnostic}')
                return ExitCodes.NUMERICAL_ABORT
            except (ValueError, OSError) as error:
                print(f'Invalid input: {error}')
                return ExitCodes.CONFIG_ERROR
            except KeyError as error:
                print(f'Invalid input: missing field {error}')
                return ExitCodes.CONFIG_ERROR
        return self.__done(report)

    def _run_solve(self) -> ExperimentReport:
        equation = self._equation()
        ic_preset = self.config.ic_preset
        if ic_preset is None:
            raise ConfigError('missing required field: ic')
        ic = build_initial_state(ic_preset, self.config.modes or DEFAULT_MODES)
        self.print_status('Solve', equation)
        traj = self._solve(ic, equation)
        return self._trajectory_report('solve', traj)

    def _run_gauge(self) -> ExperimentReport:
        if self.config.state and os.path.isdir(self.config.state):
            traj = load_trajectory(self.config.state)
        elif self.config.state:
            raise ConfigError(f'gauge needs a trajectory directory with {MANIFEST_NAME}, got {self.config.state}')
        else:
            ic_preset = self.config.ic_preset
            if ic_preset is None:
                raise ConfigError('missing required field: state or ic')
            traj = self._solve(build_initial_state(ic_preset, self.config.modes or DEFAULT_MODES), self._equation())
        self.print_status('Gauge', self.config.gauge)
        if GaugeKind(self.config.gauge) == GaugeKind.G1:
            gauged = apply_gauge1(traj, self.config.sign, self.config.mu)
        else:
            gauged = apply_gauge2(traj, self.config.sign, self.config.P0)
        save_trajectory(gauged, self.config.out_dir)
        report = self._trajectory_report('gauge', gauged)
        report.add_scalar('gauge_scalar', gauged.gauges[-1].scalar)
        return report

    def _run_norms(self) -> ExperimentReport:
        state = load_state(self.config.state)
        report = new_report('norms', {'state': self.config.state}, {})
        rows = [(spec.s, spec.p, fl_norm(state, spec)) for spec in self.config.norm_specs]
        report.add_series('fl_norms', ('s', 'p', 'fl_norm'), rows)
        report.add_scalar('mass', mass(state))
        report.add_scalar('momentum', momentum(state))
        if ReporterTypes(self.config.reporter_type) == ReporterTypes.PRINT:
            print(f'{"s":>10} {"p":>10} {"FL norm":>24}')
            for s, p, value in rows:
                print(f'{s:>10g} {p:>10g} {value:>24.17g}')
            print(f'mass = {mass(state):.17g}, momentum = {momentum(state):.17g}')
        return self._finish(report)

    def _run_experiment(self) -> ExperimentReport:
        name = self.config.experiment
        current_experiment = self.__existing_experiments.get(name)
        if not current_experiment:
            raise ConfigError(f'{name} - experiment not found; known: {", ".join(sorted(self.__existing_experiments))}')
        self.print_status('Experiment', name)
        module = importlib.import_module(current_experiment['module_name'])
        _class = getattr(module, current_experiment['class_name'])
        return getattr(_class(self.config), current_experiment['experiment_name'])

    def _equation(self) -> EquationSpec:
        return EquationSpec(self.config.eq or Variant.MKDV, self.config.sign)

    def _solve(self, ic, equation: EquationSpec) -> Trajectory:
        """Solves and stores the trajectory in the output directory, partial on abort."""
        T, dt = self.config.T or DEFAULT_T, self.config.dt or DEFAULT_DT
        logger.info('Solving %s with M = %s, dt = %s up to T = %s', equation, ic.mode_cap, dt, T)
        try:
            traj = solve(ic, equation, T, dt, self.config.save_every)
        except SolverAbort as abort:
            logger.error('Solve aborted: %s', abort.diagnostic)
            if abort.trajectory is not None:
                save_trajectory(abort.trajectory, self.config.out_dir)
                Reporter({'name': self.config.subcommand, 'passed': False}, self.config, self.started).create_manifest()
            raise
        save_trajectory(traj, self.config.out_dir)
        return traj

    def _trajectory_report(self, name: str, traj: Trajectory) -> ExperimentReport:
        report = new_report(name, {'equation': traj.equation.to_dict(), 'M': traj.mode_cap, 'dt': traj.dt,
                                   'samples': len(traj)}, {})
        report.add_series('mass', ('t', 'mass'), zip(traj.times, coeffs_mass(traj.coeffs)))
        report.add_series('momentum', ('t', 'momentum'), zip(traj.times, coeffs_momentum(traj.coeffs)))
        for spec in self.config.norm_specs:
            norms = trajectory_fl_norms(traj, spec)
            report.add_series(f'fl_s{spec.s:g}_p{spec.p:g}', ('t', 'fl_norm'), zip(traj.times, norms))
        return self._finish(report)

    def _finish(self, report: ExperimentReport) -> ExperimentReport:
        report.parameters['config'] = self.config.model_dump(mode='json')
        return stamp(report, self.config.seed)

    def __done(self, report: ExperimentReport) -> int:
        print(' ' * 100, end='\r')
        Reporter(report.to_dict(), self.config, self.started).run()
        failed = [v.name for v in report.verdicts if not v.passed]
        print(f'{report.name} Done! Verdicts passed: {len(report.verdicts) - len(failed)}/{len(report.verdicts)}')
        if report.aborted:
            return ExitCodes.NUMERICAL_ABORT
        if failed:
            print(f'Failed verdicts: {", ".join(failed)}')
            return ExitCodes.VERDICT_FAILURE
        return ExitCodes.OK
