#!/usr/bin/env python
""" Manages user config - command line options and key = value config files.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2020-2021 Ken Farmer

    Layers, lowest priority first:
    1. built-in defaults (the calibrated canonical configs)
    2. the --config file, in the line-oriented 'key = value' format
    3. command line options
    Some input is interactive-only - such as --version, --help, --long-help.
"""
import argparse
import collections
import dataclasses
from dataclasses import dataclass
import glob
import logging
import os
from os.path import abspath, basename, dirname, isabs, isfile, join as pjoin, splitext
import sys
from typing import Any, Dict, List, Optional, Tuple

from stackpdn._version import __version__
from stackpdn import common as comm
from stackpdn.aging import WorkloadProfile, DEFAULT_HORIZON_YEARS
from stackpdn import em
from stackpdn import geometry
from stackpdn import irdrop
from stackpdn.perf import DramTiming


logger = logging.getLogger(__name__)

PROFILE_DIR = pjoin(dirname(abspath(__file__)), 'profiles')
WORKLOAD_DIR = pjoin(PROFILE_DIR, 'workloads')
DEFAULT_VOID_TABLE = pjoin(PROFILE_DIR, 'void_resistance.csv')

DESIGN_CHOICES = ('clustered', 'distributed', 'both')
VOID_MODEL_CHOICES = em.VOID_MODEL_KINDS
POLICY_CHOICES = tuple(x.value for x in irdrop.PlacementPolicy)

# override prefix -> the dataclass its fields come from
OVERRIDE_SECTIONS = {'pdn': geometry.PdnParams,
                     'clustered': geometry.PdnParams,
                     'distributed': geometry.PdnParams,
                     'stack': geometry.StackConfig,
                     'em': em.EmParams,
                     'timing': DramTiming}



def bundled_workloads() -> Tuple[str, ...]:
    return tuple(sorted(glob.glob(pjoin(WORKLOAD_DIR, '*.cfg'))))



@dataclass(frozen=True)
class RunConfig:
    design: str = 'both'
    margin_mv: float = 75.0
    horizon_years: float = DEFAULT_HORIZON_YEARS
    seed: int = 0
    out_dir: str = '.'
    workloads: Tuple[str, ...] = dataclasses.field(default_factory=bundled_workloads)
    void_model: str = 'calibration_table'
    void_table: Optional[str] = DEFAULT_VOID_TABLE
    clustered_policy: str = irdrop.PlacementPolicy.adversarial_greedy.value
    distributed_policy: str = irdrop.PlacementPolicy.uniform_per_section.value
    overrides: Tuple[Tuple[str, Any], ...] = ()

    def __post_init__(self) -> None:
        # stored absolute so to_text() and parse_config() agree
        object.__setattr__(self, 'out_dir', abspath(self.out_dir))

    @property
    def designs(self) -> List[str]:
        if self.design == 'both':
            return list(geometry.DESIGNS)
        return [self.design]

    def _section_overrides(self, section: str) -> Dict[str, Any]:
        prefix = section + '.'
        return {key[len(prefix):]: val for key, val in self.overrides if key.startswith(prefix)}

    def pdn_params(self, design: str) -> geometry.PdnParams:
        params = geometry.canonical_params(design)
        changes = {**self._section_overrides('pdn'), **self._section_overrides(design)}
        return dataclasses.replace(params, **changes)

    def stack_config(self) -> geometry.StackConfig:
        return geometry.StackConfig(**self._section_overrides('stack'))

    def em_params(self) -> em.EmParams:
        return em.EmParams(**self._section_overrides('em'))

    def timing(self) -> DramTiming:
        return DramTiming(**self._section_overrides('timing'))

    def void_resistance_model(self) -> em.VoidResistanceModel:
        tsv_radius = self.em_params().tsv_radius
        if self.void_model == 'calibration_table':
            return em.load_void_table(self.void_table or DEFAULT_VOID_TABLE, tsv_radius)
        return em.VoidResistanceModel(kind=self.void_model, tsv_radius=tsv_radius)

    def policy(self, design: str) -> irdrop.PlacementPolicy:
        if design == 'distributed':
            return irdrop.PlacementPolicy(self.distributed_policy)
        return irdrop.PlacementPolicy(self.clustered_policy)

    @property
    def horizon_seconds(self) -> float:
        return self.horizon_years * comm.SECONDS_PER_YEAR

    def validate(self) -> None:
        for design in geometry.DESIGNS:
            self.pdn_params(design).validate()
        self.stack_config().validate()
        self.em_params().validate()
        self.timing().validate()
        if not self.margin_mv > 0:
            raise comm.InvalidParamsError('margin_mv must be > 0')
        if not self.horizon_years > 0:
            raise comm.InvalidParamsError('horizon_years must be > 0')

    def to_text(self) -> str:
        """ Writes the config in the format parse_config reads back to an equal RunConfig.
        """
        lines = ['# stackpdn run config',
                 f'design = {self.design}',
                 f'margin_mv = {self.margin_mv!r}',
                 f'horizon_years = {self.horizon_years!r}',
                 f'seed = {self.seed}',
                 f'out_dir = {self.out_dir}',
                 f'workloads = {",".join(self.workloads)}',
                 f'em.void_model = {self.void_model}']
        if self.void_table:
            lines.append(f'em.void_table = {self.void_table}')
        lines.append(f'policy.clustered = {self.clustered_policy}')
        lines.append(f'policy.distributed = {self.distributed_policy}')
        for key, val in self.overrides:
            lines.append(f'{key} = {val!r}' if isinstance(val, float) else f'{key} = {val}')
        return '\n'.join(lines) + '\n'



def parse_key_values(text: str) -> List[Tuple[int, str, str]]:
    """ Splits 'key = value' text into (line number, key, value) triples.

        Blank lines and '#' comments are skipped; line numbers start at 1.
    """
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise comm.ConfigError(f"expected 'key = value', got: {raw.strip()}", line_no)
        key, value = (x.strip() for x in line.split('=', 1))
        if not key:
            raise comm.ConfigError('missing key', line_no)
        entries.append((line_no, key, value))
    return entries


def _convert(value: str, intended_type: Any, key: str, line_no: Optional[int]) -> Any:
    try:
        if intended_type is int:
            return int(value)
        elif intended_type is float:
            return float(value)
        return str(value)
    except ValueError:
        raise comm.TypeMismatchError(f"'{key}' expects {intended_type.__name__}, got '{value}'", line_no)


def _convert_file_path(path: str, base_dir: Optional[str]) -> str:
    """ Relative paths in a config file are relative to the config file's directory.
    """
    if isabs(path) or base_dir is None:
        return abspath(path)
    return abspath(pjoin(base_dir, path))


def _choice(value: str, choices: Tuple[str, ...], key: str, line_no: Optional[int]) -> str:
    if value not in choices:
        raise comm.TypeMismatchError(f"'{key}' must be one of {', '.join(choices)}, got '{value}'", line_no)
    return value


def parse_config(text: str,
                 base_dir: Optional[str] = None) -> RunConfig:
    """ Parses and validates run config text; missing keys take their defaults.
    """
    settings: Dict[str, Any] = {}
    overrides: Dict[str, Any] = {}
    for line_no, key, value in parse_key_values(text):
        if key == 'design':
            settings['design'] = _choice(value, DESIGN_CHOICES, key, line_no)
        elif key in ('margin_mv', 'horizon_years'):
            settings[key] = _convert(value, float, key, line_no)
        elif key == 'seed':
            settings[key] = _convert(value, int, key, line_no)
        elif key == 'out_dir':
            settings[key] = _convert_file_path(value, base_dir)
        elif key == 'workloads':
            paths = []
            for path in [x.strip() for x in value.split(',') if x.strip()]:
                full_path = _convert_file_path(path, base_dir)
                if not isfile(full_path):
                    raise comm.MissingWorkloadFileError(f'workload file not found: {path}', line_no)
                paths.append(full_path)
            settings['workloads'] = tuple(paths)
        elif key == 'em.void_model':
            settings['void_model'] = _choice(value, VOID_MODEL_CHOICES, key, line_no)
        elif key == 'em.void_table':
            full_path = _convert_file_path(value, base_dir)
            if not isfile(full_path):
                raise comm.ConfigError(f'void calibration table not found: {value}', line_no)
            settings['void_table'] = full_path
        elif key in ('policy.clustered', 'policy.distributed'):
            settings[key.split('.')[1] + '_policy'] = _choice(value, POLICY_CHOICES, key, line_no)
        else:
            section, _, field_name = key.partition('.')
            if section not in OVERRIDE_SECTIONS:
                raise comm.UnknownKeyError(f'unknown key: {key}', line_no)
            fields = {f.name: f.type for f in dataclasses.fields(OVERRIDE_SECTIONS[section])}
            if field_name not in fields:
                raise comm.UnknownKeyError(f'unknown key: {key}', line_no)
            overrides[key] = _convert(value, fields[field_name], key, line_no)

    config = RunConfig(overrides=tuple(sorted(overrides.items())), **settings)
    config.validate()
    return config


def read_config_file(path: str) -> RunConfig:
    if not isfile(path):
        raise comm.ConfigError(f'config file not found: {path}')
    with open(path, 'rt', encoding='utf-8') as infile:
        return parse_config(infile.read(), base_dir=dirname(abspath(path)))


def load_workload_profile(path: str) -> WorkloadProfile:
    """ Reads one workload profile file; name defaults to the file's base name.
    """
    if not isfile(path):
        raise comm.MissingWorkloadFileError(f'workload file not found: {path}')
    with open(path, 'rt', encoding='utf-8') as infile:
        text = infile.read()
    fields = {f.name: f.type for f in dataclasses.fields(WorkloadProfile)}
    values: Dict[str, Any] = {'name': splitext(basename(path))[0]}
    for line_no, key, value in parse_key_values(text):
        if key not in fields:
            raise comm.UnknownKeyError(f'{basename(path)}: unknown workload key: {key}', line_no)
        values[key] = _convert(value, fields[key], key, line_no)
    profile = WorkloadProfile(**values)
    profile.validate()
    return profile



STANDARD_CONFIGS: Dict[str, Dict[str, Any]] = {}
STANDARD_CONFIGS['config'] = {'default': None,
                              'type': str,
                              'metavar': 'PATH'}
STANDARD_CONFIGS['design'] = {'default': None,
                              'type': str,
                              'choices': list(DESIGN_CHOICES)}
STANDARD_CONFIGS['n'] = {'default': None,
                         'type': int}
STANDARD_CONFIGS['workload'] = {'default': None,
                                'type': str,
                                'nargs': '*',
                                'metavar': 'PATH'}
STANDARD_CONFIGS['out'] = {'default': None,
                           'type': str,
                           'metavar': 'DIR'}
STANDARD_CONFIGS['margin_mv'] = {'default': None,
                                 'type': float}
STANDARD_CONFIGS['horizon_years'] = {'default': None,
                                     'type': float}
STANDARD_CONFIGS['verbosity'] = {'default': 'normal',
                                 'type': str,
                                 'choices': ['quiet', 'normal', 'high', 'debug']}
STANDARD_CONFIGS['gen_config'] = {'default': None,
                                  'type': str,
                                  'metavar': 'PATH'}



class Config(object):
    """ Command line config of one stackpdn script.

        Scripts declare their options, then get_config() returns the cli
        values (as a namedtuple) and the consolidated RunConfig.
    """

    def __init__(self,
                 app_name: str,
                 short_help: str,
                 long_help: str) -> None:

        self.app_name = splitext(basename(app_name))[0]
        self.short_help = short_help
        self.long_help = long_help
        self._app_metadata: Dict[str, Dict[str, Any]] = {}
        self.config: Dict[str, Any] = {}
        self.nconfig: Any = None
        self.run_config = RunConfig()


    def define_user_config(self) -> None:
        """ Placeholder for calling programs to declare their options.
        """
        self.add_standard_metadata('config')
        self.add_standard_metadata('design')
        self.add_standard_metadata('out')
        self.add_standard_metadata('margin_mv')
        self.add_standard_metadata('verbosity')
        self.add_standard_metadata('gen_config')


    def validate_custom_config(self, config: Dict[str, Any]) -> None:
        """ Placeholder for calling programs to check their own options.
        """
        pass


    def add_standard_metadata(self, name: str) -> None:
        self._app_metadata[name] = STANDARD_CONFIGS[name]


    def add_custom_metadata(self, name: str, **kwargs: Any) -> None:
        self._app_metadata.setdefault(name, {}).update(kwargs)


    def get_config(self,
                   test_cli_args: Optional[List[str]] = None) -> Tuple[Any, RunConfig]:
        self.define_user_config()
        try:
            self.process_configs(test_cli_args)
        except comm.PdnError as err:
            comm.abort(err.kind, str(err))

        comm.configure_logging(self.nconfig.verbosity)
        if self.nconfig.verbosity == 'debug':
            self.print_config()
        if self.nconfig.gen_config:
            with open(self.nconfig.gen_config, 'wt', encoding='utf-8') as outbuf:
                outbuf.write(self.run_config.to_text())
            sys.exit(0)
        return self.nconfig, self.run_config


    def process_configs(self,
                        test_cli_args: Optional[List[str]] = None) -> None:
        cli_args = _CommandLineArgs(self.short_help, self.long_help, self._app_metadata,
                                    test_cli_args).cli_args
        config_fn = cli_args.get('config')
        if config_fn:
            run_config = read_config_file(config_fn)
        else:
            run_config = RunConfig()

        run_config = self._apply_cli_args(run_config, cli_args)
        run_config.validate()
        self.validate_custom_config(cli_args)

        for key in self._app_metadata:
            if cli_args.get(key) is None:
                cli_args[key] = self._app_metadata[key].get('default')
        self.config = cli_args
        self.nconfig = collections.namedtuple('Config', self.config.keys())(**self.config)
        self.run_config = run_config


    def _apply_cli_args(self,
                        run_config: RunConfig,
                        cli_args: Dict[str, Any]) -> RunConfig:
        changes: Dict[str, Any] = {}
        if cli_args.get('design') is not None:
            changes['design'] = cli_args['design']
        if cli_args.get('out') is not None:
            changes['out_dir'] = abspath(cli_args['out'])
        if cli_args.get('margin_mv') is not None:
            changes['margin_mv'] = cli_args['margin_mv']
        if cli_args.get('horizon_years') is not None:
            changes['horizon_years'] = cli_args['horizon_years']
        if cli_args.get('workload'):
            paths = []
            for path in cli_args['workload']:
                if not isfile(path):
                    raise comm.MissingWorkloadFileError(f'workload file not found: {path}')
                paths.append(abspath(path))
            changes['workloads'] = tuple(paths)
        return dataclasses.replace(run_config, **changes)


    def print_config(self) -> None:
        print('Config contents: ', file=sys.stderr)
        for key, val in self.config.items():
            print(f'    {key}:  {val}', file=sys.stderr)
        print('Run config: ', file=sys.stderr)
        print(self.run_config.to_text(), file=sys.stderr)



class _CommandLineArgs(object):

    def __init__(self,
                 short_help: str,
                 long_help: str,
                 app_metadata: Dict[str, Dict[str, Any]],
                 test_cli_args: Optional[List[str]] = None) -> None:

        self._app_metadata = app_metadata
        self.short_help = short_help
        self.long_help = long_help
        self.test_cli_args = test_cli_args
        self.cli_args = self._get_args()


    def _get_args(self) -> Dict[str, Any]:
        """ Gets config items from cli arguments.
        """
        self._build_parser()
        known_args, unknown_args = self.parser.parse_known_args(self.test_cli_args)
        self._process_unknown_args(unknown_args)
        self._process_help_args(known_args)
        args = vars(known_args)
        for key in ('help', 'long_help', 'version'):
            args.pop(key, None)
        return args


    def _build_parser(self) -> None:
        self.parser = argparse.ArgumentParser(usage='%(prog)s --long-help for detailed usage and help',
                                              add_help=False)
        self.parser.add_argument('-h', '--help',
                                 action='store_true',
                                 default=False)
        self.parser.add_argument('--long-help',
                                 action='store_true',
                                 default=False,
                                 help='Print more verbose help')
        for key in self._app_metadata:
            self._add_argument_from_metadata(key)
        self.parser.add_argument('-V', '--version',
                                 action='store_true',
                                 default=False,
                                 help='show version number then exit')


    def _add_argument_from_metadata(self, key: str) -> None:
        metadata = self._app_metadata[key]
        kwargs: Dict[str, Any] = {'dest': key, 'default': None}
        for prop in ('nargs', 'choices', 'metavar'):
            if prop in metadata:
                kwargs[prop] = metadata[prop]
        kwargs['type'] = metadata['type']
        self.parser.add_argument(f'--{key}'.replace('_', '-'), **kwargs)


    def _process_unknown_args(self, unknown_args: List[str]) -> None:
        for arg in unknown_args:
            comm.abort('unknown option', arg)


    def _process_help_args(self,
                           known_args: argparse.Namespace) -> None:
        if known_args.help:
            print(self.short_help)
            sys.exit(0)
        if known_args.long_help:
            print(self.long_help)
            sys.exit(0)
        if known_args.version:
            print(__version__)
            sys.exit(0)
