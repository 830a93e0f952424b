import csv
import json
import os
from datetime import datetime, timezone
from enum import Enum
from pprint import pprint

from mkdv_lab.__version__ import __version__
from mkdv_lab.core.Trajectory import MANIFEST_NAME

REPORT_NAME = 'report.json'
SERIES_DIR = 'series'


class ReporterTypes(Enum):
    """Enumerate of report types."""
    JSON = 'json'
    CSV = 'csv'
    PRINT = 'print'

    @staticmethod
    def get_all_reporters_types():
        """Returns all report types."""
        return list(map(
            lambda x: x.value,
            ReporterTypes))


def _format(value):
    if isinstance(value, float):
        return format(value, '.17g')
    return '' if value is None else value


class Reporter:
    """Writes an experiment report (``ExperimentReport.to_dict()``) into ``config.out_dir``.

    Every format also writes ``manifest.json``: the config echo and wall-clock
    times under ``run``, merged into the trajectory manifest when one is there.
    """

    def __init__(self, data: dict, config, started: datetime | None = None):
        self.reporter_type = ReporterTypes(config.reporter_type)
        self.data = data
        self.config = config
        self.started = started or datetime.now(timezone.utc)

    @property
    def output_dir(self) -> str:
        return self.config.out_dir

    def run(self):
        if not self.data:
            return
        os.makedirs(self.output_dir, exist_ok=True)
        if self.reporter_type == ReporterTypes.PRINT:
            pprint({k: self.data.get(k) for k in ('name', 'scalars', 'verdicts', 'passed', 'notes')}, width=120)
        elif self.reporter_type == ReporterTypes.JSON:
            self.create_json_report()
            self.create_series_reports()
        elif self.reporter_type == ReporterTypes.CSV:
            self.create_series_reports()
            self.create_csv_reports()
        self.create_manifest()

    def create_json_report(self):
        self._write_json(self.data, os.path.join(self.output_dir, REPORT_NAME))

    def create_series_reports(self):
        """One CSV per named series, header row from the series columns."""
        series_dir = os.path.join(self.output_dir, SERIES_DIR)
        os.makedirs(series_dir, exist_ok=True)
        for name, series in self.data.get('series', {}).items():
            with open(os.path.join(series_dir, f'{name}.csv'), 'w', newline='') as f:
                writer = csv.writer(f)
                writer.writerow(series['columns'])
                for row in series['rows']:
                    writer.writerow([_format(i) for i in row])

    def create_csv_reports(self):
        with open(os.path.join(self.output_dir, 'scalars.csv'), 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(('name', 'value'))
            for k, v in sorted(self.data.get('scalars', {}).items()):
                writer.writerow((k, _format(v)))
        thresholds = self.data.get('parameters', {}).get('thresholds', {})
        with open(os.path.join(self.output_dir, 'verdicts.csv'), 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(('name', 'passed', 'value', 'threshold', 'threshold_value', 'detail'))
            for verdict in self.data.get('verdicts', []):
                writer.writerow((verdict['name'], verdict['passed'], _format(verdict['value']), verdict['threshold'],
                                 _format(thresholds.get(verdict['threshold'])), verdict['detail']))

    def create_manifest(self):
        path = os.path.join(self.output_dir, MANIFEST_NAME)
        manifest = {}
        if os.path.exists(path):
            with open(path) as f:
                manifest = json.load(f)
        manifest['run'] = {
            'config': self.config.model_dump(mode='json'),
            'version': __version__,
            'report': self.data.get('name'),
            'passed': self.data.get('passed'),
            'started': self.started.isoformat(),
            'finished': datetime.now(timezone.utc).isoformat(),
        }
        self._write_json(manifest, path)

    def _write_json(self, data: dict, file_path: str):
        with open(file_path, 'w') as f:
            f.write(json.dumps(data, indent=4, sort_keys=True))
