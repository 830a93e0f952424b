import functools
import hashlib
import importlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from mkdv_lab.__version__ import __version__
from mkdv_lab.core.Dynamics import SolverAbort

logger = logging.getLogger(__name__)

DEFAULT_EXPERIMENTS_DIR = os.path.dirname(os.path.realpath(__file__))


class ParameterError(ValueError):
    """Unknown or malformed experiment parameter or threshold."""


def plain(value):
    """Converts numpy scalars and containers to JSON-ready Python values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(i) for i in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


@dataclass
class Verdict:
    """Pass/fail of one check; ``threshold`` names a key of the report's thresholds."""
    name: str
    passed: bool
    value: float | None
    threshold: str
    detail: str = ''


@dataclass
class ExperimentReport:
    name: str
    parameters: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    aborted: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def thresholds(self) -> dict:
        return self.parameters.setdefault('thresholds', {})

    @property
    def passed(self) -> bool:
        return not self.aborted and all(v.passed for v in self.verdicts)

    def add_series(self, name: str, columns, rows):
        self.series[name] = {'columns': list(columns), 'rows': plain(list(rows))}

    def add_scalar(self, name: str, value):
        self.scalars[name] = plain(value)

    def add_verdict(self, name: str, passed: bool, value, threshold: str, detail: str = ''):
        if threshold not in self.thresholds:
            raise KeyError(f'verdict {name} references unknown threshold {threshold}')
        self.verdicts.append(Verdict(name, bool(passed), plain(value), threshold, detail))

    def verdict(self, name: str) -> Verdict:
        for item in self.verdicts:
            if item.name == name:
                return item
        raise KeyError(name)

    def to_dict(self) -> dict:
        data = asdict(self)
        data['passed'] = self.passed
        return plain(data)


def merge_thresholds(defaults: dict, overrides: dict | None) -> dict:
    overrides = overrides or {}
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ParameterError(f'unknown thresholds {sorted(unknown)}; known: {sorted(defaults)}')
    return {key: float(overrides.get(key, value)) for key, value in defaults.items()}


def new_report(name: str, parameters: dict, thresholds: dict) -> ExperimentReport:
    return ExperimentReport(name, parameters={'experiment': plain(parameters), 'thresholds': plain(thresholds)})


def stamp(report: ExperimentReport, seed=None) -> ExperimentReport:
    """Sets provenance; wall-clock times are kept out so reports are reproducible byte for byte."""
    digest = hashlib.sha256(json.dumps(plain(report.parameters), sort_keys=True).encode()).hexdigest()
    report.provenance = {'seed': seed, 'version': __version__, 'config_digest': digest[:16]}
    return report


def solver_abort_decorator(func):
    """Turns a solver abort escaping an experiment into a report flagged as aborted."""

    @functools.wraps(func)
    def inner(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SolverAbort as error:
            experiments = args[0]  # get experiments object for access to config
            name = func.__name__.removesuffix('_experiment')
            logger.error('Experiment %s aborted: %s', name, error.diagnostic)
            report = new_report(name, {}, {'solver_completed': 1.0})
            report.aborted = True
            report.notes.append(error.diagnostic)
            if error.trajectory is not None:
                report.add_scalar('partial_samples', len(error.trajectory))
                report.add_scalar('abort_time', float(error.trajectory.times[-1]))
            report.add_verdict('solver_completed', False, None, 'solver_completed', error.diagnostic)
            return experiments.finish(report)

    return inner


def get_class_properties(cls):
    """Return list of properties' names and endswith _experiment."""
    return [k for k, v in vars(cls).items() if isinstance(v, property) and k.endswith('_experiment')]


def get_all_experiments():
    """Getting all experiments by getting all properties."""
    modules = [f'experiments.{i.split(".")[0]}' for i in sorted(os.listdir(DEFAULT_EXPERIMENTS_DIR))
               if i.endswith('.py') and not i.startswith('__')]
    collected_experiments = {}
    for module in modules:
        if module == 'experiments.Base':
            continue
        tmp_module = importlib.import_module('mkdv_lab.' + module)
        for i in dir(tmp_module):
            if not i.endswith('Experiments'):
                continue
            cls: object = getattr(tmp_module, i)
            for name in get_class_properties(cls):
                collected_experiments.update(
                    {name.removesuffix('_experiment'): {
                        'class_name': f'{cls.__name__}',
                        'experiment_name': f'{name}',
                        'module_name': f'{cls.__module__}',
                        'description': getattr(cls, name).__doc__,
                    }}
                )
    return collected_experiments


def _cast(raw: str, default):
    if isinstance(default, bool):
        if raw.strip().lower() in ('1', 'true', 'yes', 'on'):
            return True
        if raw.strip().lower() in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(raw)
    if isinstance(default, tuple):
        element = type(default[0]) if default else float
        return tuple(element(i.strip()) for i in raw.split(',') if i.strip())
    return type(default)(raw.strip())


class BaseExperiments:
    """Experiments read their inputs from ``config.params`` and ``config.thresholds``."""

    def __init__(self, config, *args, **kwargs):
        self.config = config

    def resolve(self, defaults: dict) -> dict:
        """Experiment parameters: ``defaults`` overridden by ``param.<key>`` values."""
        params = dict(self.config.params)
        unknown = set(params) - set(defaults)
        if unknown:
            raise ParameterError(f'unknown parameters {sorted(unknown)}; known: {sorted(defaults)}')
        resolved = {}
        for key, default in defaults.items():
            if key not in params:
                resolved[key] = default
                continue
            try:
                resolved[key] = _cast(params[key], default)
            except ValueError as error:
                raise ParameterError(f'malformed parameter {key} = {params[key]!r}') from error
        return resolved

    def value(self, name: str, default):
        """Top-level config field, or ``default`` when the run left it unset."""
        value = getattr(self.config, name, None)
        return default if value is None else value

    def finish(self, report: ExperimentReport) -> ExperimentReport:
        report.parameters['config'] = self.config.model_dump(mode='json')
        return stamp(report, self.config.seed)
