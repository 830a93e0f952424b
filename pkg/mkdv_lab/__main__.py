import logging
import os
import sys
from optparse import OptionParser

from mkdv_lab.Reporter import ReporterTypes
from mkdv_lab.Runners import CommandRunner, ExitCodes
from mkdv_lab.core.Equations import Variant
from mkdv_lab.utils import ConfigError, parse_config, print_all_experiments, print_version

USAGE = '%prog [options] {solve|gauge|norms|experiment <name>}'


class LabOptionParser(OptionParser):
    """Reports bad options as ``ConfigError`` instead of exiting with status 2."""

    def error(self, msg):
        raise ConfigError(msg)


parser = LabOptionParser(usage=USAGE)
parser.add_option('--config', dest='config', help='plain key=value config file; flags override its values')
parser.add_option('--eq', dest='eq', choices=Variant.get_all_variants(), help='equation: mkdv, mkdv1 or mkdv2')
parser.add_option('--sign', dest='sign', help='sign of the nonlinearity, +1 or -1')
parser.add_option('--modes', dest='modes', help='mode cap M, modes -M..M are kept')
parser.add_option('--dt', dest='dt', help='solver time step')
parser.add_option('--T', dest='T', help='final time')
parser.add_option('--save-every', dest='save_every', help='keep every k-th solver step')
parser.add_option('--ic', dest='ic', help='initial condition preset, kind:arg1,arg2,...')
parser.add_option('--seed', dest='seed', help='seed for randomised experiments')
parser.add_option('--out-dir', dest='out_dir', help='directory for manifest, reports, series and states. DEFAULT: runs')
parser.add_option('--state', dest='state', help='serialized state (.csv/.json) or trajectory directory')
parser.add_option('--gauge', dest='gauge', choices=['G1', 'G2'], help='gauge to apply')
parser.add_option('--mu', dest='mu', help='G1 translation rate. DEFAULT: mass of the first slice')
parser.add_option('--P0', dest='P0', help='G2 phase rate. DEFAULT: momentum of the first slice')
parser.add_option('--norm', dest='norms', action='append', help='norm s,p to report; repeatable')
parser.add_option('--param', dest='params', action='append', help='experiment parameter key=value; repeatable')
parser.add_option('--threshold', dest='thresholds', action='append', help='verdict threshold key=value; repeatable')
parser.add_option('-f', '--format', choices=ReporterTypes.get_all_reporters_types(), dest='reporter_type',
                  help=f'Type of Reports: {ReporterTypes.get_all_reporters_types()}')
parser.add_option('--threads', dest='threads', default=os.environ.get('MKDV_LAB_THREADS'),
                  help='FFT worker threads.\nCan set by env variable MKDV_LAB_THREADS')
parser.add_option('-l', '--experiments-list', dest='only_print_experiments', action='store_true', default=False,
                  help='list of all existing experiments')
parser.add_option(
    '-V', '--version', dest='only_print_version', action='store_true', default=False, help='prints version')
parser.add_option('-v', '--verbose', dest='verbose', action='count', default=0, help='more logging; repeatable')


def main(argv=None) -> int:
    try:
        (options, args) = parser.parse_args(argv)
    except ConfigError as error:
        print(f'Configuration error: {error}')
        return ExitCodes.CONFIG_ERROR

    logging.basicConfig(level=logging.WARNING - 10 * min(options.verbose, 2),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    if options.only_print_experiments:
        print_all_experiments()
        return ExitCodes.OK

    if options.only_print_version:
        print_version()
        return ExitCodes.OK

    try:
        config = parse_config(options, args)
    except ConfigError as error:
        print(f'Configuration error: {error}')
        return ExitCodes.CONFIG_ERROR
    return CommandRunner(config).run()


if __name__ == '__main__':
    sys.exit(main())
