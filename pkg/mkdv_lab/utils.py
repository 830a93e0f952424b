import logging
import optparse
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from mkdv_lab.Reporter import ReporterTypes
from mkdv_lab.__version__ import __version__
from mkdv_lab.core.Equations import Variant
from mkdv_lab.core.Norms import NormSpec
from mkdv_lab.core.Presets import ICPreset
from mkdv_lab.experiments.Base import get_all_experiments

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('solve', 'gauge', 'norms', 'experiment')
# option dest -> RunConfig field, for options that map one to one
OPTION_FIELDS = ('eq', 'sign', 'modes', 'dt', 'T', 'save_every', 'ic', 'seed', 'out_dir', 'state', 'gauge',
                 'mu', 'P0', 'reporter_type', 'threads')


class ConfigError(Exception):
    """Invalid command line or configuration file."""


class RunConfig(BaseModel):
    """Fully resolved run configuration, echoed into every manifest and report."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    subcommand: Literal['solve', 'gauge', 'norms', 'experiment']
    eq: Variant | None = None
    sign: int = 1
    modes: int | None = Field(default=None, gt=0)
    dt: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    T: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    save_every: int = Field(default=1, gt=0)
    ic: str | None = None
    norms: tuple[tuple[float, float], ...] = ((0.5, 2.0),)
    experiment: str | None = None
    params: dict[str, str] = Field(default_factory=dict)
    thresholds: dict[str, float] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0)
    out_dir: str = 'runs'
    state: str | None = None
    gauge: Literal['G1', 'G2'] | None = None
    # frozen gauge scalars; unset means the mass or momentum of the first slice
    mu: float | None = Field(default=None, allow_inf_nan=False)
    P0: float | None = Field(default=None, allow_inf_nan=False)
    reporter_type: ReporterTypes = ReporterTypes.JSON
    threads: int | None = Field(default=None, gt=0)

    @field_validator('sign', mode='before')
    @classmethod
    def _sign(cls, value):
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ValueError(f'malformed number {value!r}') from None
        if number not in (-1.0, 1.0):
            raise ValueError(f'sign must be +1 or -1, got {value}')
        return int(number)

    @field_validator('ic')
    @classmethod
    def _ic(cls, value):
        if value is not None:
            ICPreset.parse(value)
        return value

    @field_validator('norms')
    @classmethod
    def _norms(cls, value):
        for s, p in value:
            NormSpec(s, p)
        return value

    @model_validator(mode='after')
    def _required(self):
        if self.subcommand == 'experiment' and not self.experiment:
            raise ValueError('missing required field: experiment')
        if self.subcommand == 'norms' and not self.state:
            raise ValueError('missing required field: state')
        if self.subcommand == 'gauge' and not self.gauge:
            raise ValueError('missing required field: gauge')
        return self

    @property
    def norm_specs(self) -> list[NormSpec]:
        return [NormSpec(s, p) for s, p in self.norms]

    @property
    def ic_preset(self) -> ICPreset | None:
        return ICPreset.parse(self.ic) if self.ic else None


def print_version():
    print(f'Current mkdv_lab version: {__version__}')


def print_all_experiments():
    print('All existing experiments: ')
    for name, experiment in get_all_experiments().items():
        print(f'{experiment["class_name"].lower()}.{name}', f'Desc: {experiment["description"]}')


def _split_pair(item: str, separator: str = '=') -> tuple[str, str]:
    key, found, value = item.partition(separator)
    if not found or not key.strip():
        raise ConfigError(f'expected key{separator}value, got {item!r}')
    return key.strip(), value.strip()


def parse_norms(text: str) -> tuple[tuple[float, float], ...]:
    """``s,p`` entries separated by ``;``."""
    try:
        return tuple((spec.s, spec.p) for spec in (NormSpec.parse(i) for i in text.split(';') if i.strip()))
    except ValueError as error:
        raise ConfigError(f'malformed number in norms {text!r}: {error}') from error


def read_config_file(file_path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, ``param.`` and ``threshold.`` prefixes nest."""
    values: dict = {'params': {}, 'thresholds': {}}
    try:
        with open(file_path) as f:
            lines = f.readlines()
    except OSError as error:
        raise ConfigError(f'cannot read config file {file_path}: {error}') from error
    for number, line in enumerate(lines, 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            key, value = _split_pair(line)
        except ConfigError as error:
            raise ConfigError(f'{file_path}:{number}: {error}') from error
        if key.startswith('param.'):
            values['params'][key.removeprefix('param.')] = value
        elif key.startswith('threshold.'):
            values['thresholds'][key.removeprefix('threshold.')] = value
        elif key == 'norms':
            values['norms'] = parse_norms(value)
        else:
            values[key.replace('-', '_')] = value
    return values


def _describe(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        location = '.'.join(str(i) for i in item['loc']) or 'config'
        if item['type'] == 'extra_forbidden':
            messages.append(f'unknown key: {location}')
        elif item['type'] == 'missing':
            messages.append(f'missing required field: {location}')
        elif item['type'] in ('float_parsing', 'int_parsing', 'int_from_float', 'finite_number'):
            messages.append(f'malformed number: {location} = {item.get("input")!r}')
        else:
            messages.append(f'{location}: {item["msg"]}')
    return '; '.join(messages)


def parse_config(options: optparse.Values, args: list[str]) -> RunConfig:
    """Model defaults, then the ``--config`` file, then command-line flags."""
    if not args or args[0] not in SUBCOMMANDS:
        raise ConfigError(f"expected a subcommand out of {', '.join(SUBCOMMANDS)}, got {args}")
    extra = 2 if args[0] == 'experiment' else 1
    if len(args) > extra:
        raise ConfigError(f'unexpected arguments {args[extra:]}')
    values = read_config_file(options.config) if getattr(options, 'config', None) else {'params': {},
                                                                                       'thresholds': {}}
    values['subcommand'] = args[0]
    if len(args) == 2:
        values['experiment'] = args[1]
    for name in OPTION_FIELDS:
        value = getattr(options, name, None)
        if value is not None:
            values[name] = value
    if getattr(options, 'norms', None):
        values['norms'] = parse_norms(';'.join(options.norms))
    for name in ('params', 'thresholds'):
        for item in getattr(options, name, None) or []:
            key, value = _split_pair(item)
            values[name][key] = value
    try:
        return RunConfig.model_validate(values)
    except ValidationError as error:
        raise ConfigError(_describe(error)) from error
    except ValueError as error:
        raise ConfigError(str(error)) from error
