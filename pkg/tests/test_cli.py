import json
import os

import numpy as np
import pytest

from mkdv_lab.Reporter import ReporterTypes
from mkdv_lab.Runners import ExitCodes
from mkdv_lab.__main__ import main, parser
from mkdv_lab.core.Trajectory import load_trajectory
from mkdv_lab.utils import ConfigError, RunConfig, parse_config, parse_norms, read_config_file


def configure(argv: list[str]) -> RunConfig:
    options, args = parser.parse_args(argv)
    return parse_config(options, args)


@pytest.fixture
def config_file(tmp_path):
    def write(text: str) -> str:
        path = tmp_path / 'lab.cfg'
        path.write_text(text)
        return str(path)

    return write


class TestParseConfig:

    def test_flags_override_file(self, config_file):
        path = config_file('dt = 1e-3\nmodes = 8  # comment\nic = zero\n')
        config = configure(['solve', '--config', path, '--dt', '1e-4'])
        assert config.dt == 1e-4
        assert config.modes == 8
        assert config.ic == 'zero'

    def test_file_sections(self, config_file):
        path = config_file('param.n_list = 2,4\nthreshold.solver_agreement = 1e-5\nnorms = 0.5,2; 0,3\nout-dir = x\n')
        values = read_config_file(path)
        assert values['params'] == {'n_list': '2,4'}
        assert values['thresholds'] == {'solver_agreement': '1e-5'}
        assert values['norms'] == ((0.5, 2.0), (0.0, 3.0))
        assert values['out_dir'] == 'x'

    def test_repeatable_flags(self):
        config = configure(['experiment', 'illposedness', '--param', 's=0.25', '--param', 'n_list=2,4',
                            '--threshold', 'solver_agreement=1e-5', '--norm', '0,2', '--norm', '1,4'])
        assert config.experiment == 'illposedness'
        assert config.params == {'s': '0.25', 'n_list': '2,4'}
        assert config.thresholds == {'solver_agreement': 1e-5}
        assert config.norms == ((0.0, 2.0), (1.0, 4.0))

    def test_defaults(self):
        config = configure(['experiment', 'random_momentum'])
        assert config.sign == 1
        assert config.out_dir == 'runs'
        assert config.reporter_type == ReporterTypes.JSON
        assert config.modes is None

    def test_round_trip(self):
        config = configure(['solve', '--ic', 'plane_wave:5,1,0.5', '--eq', 'mkdv2', '--sign', '-1', '--modes', '64'])
        assert RunConfig.model_validate(config.model_dump()) == config
        assert RunConfig.model_validate_json(config.model_dump_json()) == config

    @pytest.mark.parametrize('argv, message', [
        (['solve', '--modes', '-3'], 'modes'),
        (['solve', '--dt', 'abc'], 'malformed number: dt'),
        (['solve', '--sign', '2'], 'sign must be +1 or -1'),
        (['solve', '--sign', 'x'], 'malformed number'),
        (['solve', '--ic', 'triangle:1'], 'unknown initial condition'),
        (['solve', '--norm', '0.5'], 'malformed number in norms'),
        (['experiment'], 'missing required field: experiment'),
        (['norms'], 'missing required field: state'),
        (['gauge'], 'missing required field: gauge'),
        (['integrate'], 'expected a subcommand'),
        (['solve', 'extra'], 'unexpected arguments'),
        (['experiment', 'conservation', '--param', 'broken'], 'expected key=value'),
    ])
    def test_errors(self, argv, message):
        with pytest.raises(ConfigError, match=message):
            configure(argv)

    def test_unknown_key_in_file(self, config_file):
        with pytest.raises(ConfigError, match='unknown key: bogus'):
            configure(['solve', '--config', config_file('bogus = 1\n')])

    def test_malformed_number_in_file(self, config_file):
        with pytest.raises(ConfigError, match='malformed number: T'):
            configure(['solve', '--config', config_file('T = soon\n')])

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError, match='cannot read config file'):
            configure(['solve', '--config', str(tmp_path / 'absent.cfg')])

    def test_parse_norms(self):
        assert parse_norms('0.5,2;0,3;') == ((0.5, 2.0), (0.0, 3.0))


class TestMain:

    def test_version(self, capsys):
        assert main(['-V']) == ExitCodes.OK
        assert 'Current mkdv_lab version' in capsys.readouterr().out

    def test_experiment_list(self, capsys):
        assert main(['-l']) == ExitCodes.OK
        out = capsys.readouterr().out
        for name in ('nonexistence', 'illposedness', 'multiplier_probe'):
            assert name in out

    def test_bad_option(self):
        assert main(['solve', '--eq', 'kdv']) == ExitCodes.CONFIG_ERROR

    def test_unknown_experiment(self, tmp_path):
        assert main(['experiment', 'nothing', '--out-dir', str(tmp_path)]) == ExitCodes.CONFIG_ERROR

    def test_unknown_parameter(self, tmp_path):
        assert main(['experiment', 'illposedness', '--param', 'q=1', '--out-dir', str(tmp_path)]) == \
            ExitCodes.CONFIG_ERROR

    def test_illposedness_experiment(self, tmp_path):
        out_dir = str(tmp_path / 'ill')
        assert main(['experiment', 'illposedness', '--out-dir', out_dir]) == ExitCodes.OK
        with open(os.path.join(out_dir, 'report.json')) as f:
            report = json.load(f)
        assert report['passed']
        assert report['parameters']['config']['experiment'] == 'illposedness'
        with open(os.path.join(out_dir, 'manifest.json')) as f:
            manifest = json.load(f)
        assert manifest['run']['report'] == 'illposedness'
        assert os.path.exists(os.path.join(out_dir, 'series', 'members.csv'))

    def test_verdict_failure(self, tmp_path):
        argv = ['experiment', 'conservation', '--ic', 'zero', '--modes', '4', '--dt', '1e-2', '--T', '0.1',
                '--threshold', 'mass_drift=-1', '--out-dir', str(tmp_path)]
        assert main(argv) == ExitCodes.VERDICT_FAILURE

    def test_csv_format(self, tmp_path):
        argv = ['experiment', 'momentum_limit', '--ic', 'one_sided:0.9', '--modes', '64', '-f', 'csv',
                '--param', 'schedule=8,16,32,64', '--out-dir', str(tmp_path)]
        assert main(argv) == ExitCodes.OK
        assert os.path.exists(tmp_path / 'scalars.csv')
        assert (tmp_path / 'verdicts.csv').read_text().splitlines()[1].startswith('oracle_agreement,True')
        assert not os.path.exists(tmp_path / 'report.json')

    def test_solve_then_gauge_then_norms(self, tmp_path):
        solve_dir, gauge_dir = str(tmp_path / 'solve'), str(tmp_path / 'gauge')
        argv = ['solve', '--ic', 'plane_wave:2,0.5,0', '--modes', '4', '--dt', '1e-3', '--T', '0.01',
                '--out-dir', solve_dir]
        assert main(argv) == ExitCodes.OK
        states = sorted(os.listdir(os.path.join(solve_dir, 'states')))
        assert len(states) == 11
        with open(os.path.join(solve_dir, 'manifest.json')) as f:
            manifest = json.load(f)
        assert manifest['samples'] == 11
        assert manifest['equation'] == {'variant': 'mkdv', 'sign': 1}

        assert main(['gauge', '--gauge', 'G1', '--state', solve_dir, '--out-dir', gauge_dir]) == ExitCodes.OK
        with open(os.path.join(gauge_dir, 'manifest.json')) as f:
            assert json.load(f)['equation']['variant'] == 'mkdv1'

        norms_dir = str(tmp_path / 'norms')
        state = os.path.join(solve_dir, 'states', states[-1])
        assert main(['norms', '--state', state, '--norm', '0,2', '--out-dir', norms_dir]) == ExitCodes.OK
        with open(os.path.join(norms_dir, 'report.json')) as f:
            report = json.load(f)
        assert report['series']['fl_norms']['rows'][0][2] == pytest.approx(0.5, rel=1e-12)
        assert report['scalars']['momentum'] == pytest.approx(0.5, rel=1e-12)

    def test_gauge_needs_directory(self, tmp_path):
        assert main(['gauge', '--gauge', 'G2', '--state', str(tmp_path / 'x.csv'), '--out-dir', str(tmp_path)]) == \
            ExitCodes.CONFIG_ERROR

    def test_numerical_abort(self, tmp_path):
        argv = ['solve', '--ic', 'plane_wave:1,10,0', '--modes', '4', '--dt', '0.03', '--T', '0.3',
                '--out-dir', str(tmp_path)]
        assert main(argv) == ExitCodes.NUMERICAL_ABORT
        with open(tmp_path / 'manifest.json') as f:
            manifest = json.load(f)
        assert manifest['aborted']
        assert manifest['run']['passed'] is False

    def test_norms_table_only_with_print_format(self, tmp_path, capsys):
        solve_dir = str(tmp_path / 'solve')
        argv = ['solve', '--ic', 'plane_wave:1,1,0', '--modes', '2', '--dt', '1e-2', '--T', '0.02',
                '--out-dir', solve_dir]
        assert main(argv) == ExitCodes.OK
        state = os.path.join(solve_dir, 'states', sorted(os.listdir(os.path.join(solve_dir, 'states')))[-1])
        capsys.readouterr()

        assert main(['norms', '--state', state, '--out-dir', str(tmp_path / 'quiet')]) == ExitCodes.OK
        assert 'FL norm' not in capsys.readouterr().out
        assert os.path.exists(tmp_path / 'quiet' / 'report.json')

        assert main(['norms', '--state', state, '-f', 'print', '--out-dir', str(tmp_path / 'loud')]) == ExitCodes.OK
        out = capsys.readouterr().out
        assert 'FL norm' in out
        assert 'mass = ' in out

    def test_gauge_with_explicit_P0(self, tmp_path):
        solve_dir, gauge_dir = str(tmp_path / 'solve'), str(tmp_path / 'gauge')
        argv = ['solve', '--eq', 'mkdv1', '--ic', 'plane_wave:2,0.5,0', '--modes', '4', '--dt', '1e-3',
                '--T', '0.01', '--out-dir', solve_dir]
        assert main(argv) == ExitCodes.OK
        argv = ['gauge', '--gauge', 'G2', '--P0', '0', '--state', solve_dir, '--out-dir', gauge_dir]
        assert main(argv) == ExitCodes.OK
        with open(os.path.join(gauge_dir, 'report.json')) as f:
            assert json.load(f)['scalars']['gauge_scalar'] == 0.0
        np.testing.assert_allclose(load_trajectory(gauge_dir).coeffs, load_trajectory(solve_dir).coeffs,
                                   rtol=0, atol=1e-15)

    def test_gauge_P0_defaults_to_initial_momentum(self, tmp_path):
        gauge_dir = str(tmp_path / 'gauge')
        argv = ['gauge', '--gauge', 'G2', '--eq', 'mkdv1', '--ic', 'plane_wave:2,0.5,0', '--modes', '4',
                '--dt', '1e-3', '--T', '0.01', '--out-dir', gauge_dir]
        assert main(argv) == ExitCodes.OK
        with open(os.path.join(gauge_dir, 'report.json')) as f:
            assert json.load(f)['scalars']['gauge_scalar'] == pytest.approx(0.5, rel=1e-12)

    def test_missing_state_file(self, tmp_path, capsys):
        argv = ['norms', '--state', str(tmp_path / 'absent.csv'), '--out-dir', str(tmp_path)]
        assert main(argv) == ExitCodes.CONFIG_ERROR
        assert 'Invalid input' in capsys.readouterr().out

    def test_state_file_without_mode_column(self, tmp_path, capsys):
        path = tmp_path / 'state.csv'
        path.write_text('foo,bar\n1,2\n')
        assert main(['norms', '--state', str(path), '--out-dir', str(tmp_path)]) == ExitCodes.CONFIG_ERROR
        assert 'missing columns n, re, im' in capsys.readouterr().out

    def test_trajectory_manifest_without_fields(self, tmp_path, capsys):
        run_dir = tmp_path / 'run'
        run_dir.mkdir()
        (run_dir / 'manifest.json').write_text('{}')
        argv = ['gauge', '--gauge', 'G1', '--state', str(run_dir), '--out-dir', str(tmp_path / 'out')]
        assert main(argv) == ExitCodes.CONFIG_ERROR
        assert 'Invalid input: missing field' in capsys.readouterr().out

    def test_conservation_on_data_rejected_before_first_step(self, tmp_path):
        argv = ['experiment', 'conservation', '--ic', 'one_sided:-400', '--modes', '32', '--out-dir', str(tmp_path)]
        assert main(argv) == ExitCodes.NUMERICAL_ABORT
        with open(tmp_path / 'report.json') as f:
            report = json.load(f)
        assert report['aborted']
        assert report['verdicts'][0]['name'] == 'solver_completed'
        assert 'non-finite' in report['notes'][0]
