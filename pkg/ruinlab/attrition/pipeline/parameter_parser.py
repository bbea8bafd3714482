import argparse
import json
import logging
import multiprocessing
import os
import re
import sys

from ruinlab.attrition.pipeline import analysis
from ruinlab.attrition.pipeline import exact
from ruinlab.attrition.pipeline import simulate

log = logging.getLogger('RUINLAB')

DEFAULT_SEED = simulate.DEFAULT_SEED
SEED_ENV_VAR = 'RUINLAB_SEED'
VERIFY_DEFAULTS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config',
                               'verify_defaults.json')

COMMANDS = ('exact', 'table', 'simulate', 'verify', 'specfn')
# Keys that are positional tokens rather than flags.
POSITIONAL_KEYS = ('command', 'experiment', 'action', 'function')
SPECFN_FUNCTIONS = ('kummer', 'log-kummer', 'h', 'log-h', 'h-derivative', 'g', 'laguerre', 'ncx2-cdf',
                    'ncx2-moment', 's-moment')

convert_to_int_list = {'ladder'}
convert_to_float_list = {'x_grid', 't_grid', 'rho', 'z', 'x'}
store_true_flags = {'fresh_seed', 'record_runtime', 'verbose', 'residuals', 'trajectory'}
null_options = ['null', 'Null', 'none', 'None', 'N/A', 'n/a', 'NaN', 'nan', 'NAN', 'NONE', 'NULL', 'NA']

# Values such as -2,-1,0 that argparse would otherwise read as an option.
NEGATIVE_VALUE = re.compile(r"^-\.?\d")

# Experiments whose --ladder is a list of N (rather than m) and that accept --n-scale as the last rung.
N_LADDER_EXPERIMENTS = {'fluid', 'winner', 'diffusion', 'residual', 'stopping', 'proxy-bound'}


#**********************************************************************************************************
def wrapper(*any_arg):
    """Builds a fully processed parameter Namespace from a config file path (str), a dict, an argparse.Namespace,
    or a list of command line tokens. A list may start with '--config_file <path>'; the remaining tokens then
    override the file.

    Returns:
        argparse.Namespace: default parameters + user specified parameters

    Raises:
        TypeError: input is none of the accepted types
    """
    if len(any_arg) != 1:
        raise TypeError("Input argument must be a configuration file (str), dict, argparse.Namespace, or list")
    inp_arg = any_arg[0]
    if isinstance(inp_arg, str):
        return parse_command_line(parse_config_file(inp_arg))
    elif isinstance(inp_arg, (dict, argparse.Namespace)):
        return parse_command_line(parse_namespace(inp_arg))
    elif isinstance(inp_arg, list):
        if inp_arg and inp_arg[0] in ('--config_file', '--config-file'):
            list_inp = parse_config_file(inp_arg[1])
            overrides = inp_arg[2:]
            positional = overrides[:_leading_positionals(overrides)]
            if positional:
                # Positional tokens on the command line replace those of the file.
                n_file = _leading_positionals(list_inp)
                list_inp = positional + list_inp[n_file:]
                overrides = overrides[len(positional):]
            list_inp = join_negative_values(list_inp)
            for item in [x.split('=')[0] for x in join_negative_values(overrides) if x.startswith('--')]:
                matches = [i for i, token in enumerate(list_inp) if token.split('=')[0] == item]
                if matches:
                    idx = matches[0]
                    if '=' not in list_inp[idx] and idx + 1 < len(list_inp) and not list_inp[idx + 1].startswith('--'):
                        list_inp[idx:idx + 2] = []
                    else:
                        list_inp[idx:idx + 1] = []
            return parse_command_line(list_inp + overrides)
        return parse_command_line(inp_arg)
    raise TypeError("Input argument must be a configuration file (str), dict, argparse.Namespace, or list")


def _leading_positionals(tokens):
    count = 0
    for token in tokens:
        if token.startswith('--'):
            break
        count += 1
    return count


#**********************************************************************************************************
def parse_config_file(config_file_path):
    """Converts a (possibly hierarchical) .json configuration file to a list of command line tokens.

    Args:
        config_file_path (str): path to the configuration file

    Returns:
        (list): tokens for parse_command_line
    """
    with open(config_file_path) as f:
        config = json.loads(f.read())
    flat_dict = flatten_dict(config, {})
    return dict_to_list(_keep_accepted(flat_dict))


def parse_namespace(namespace_params):
    """Converts a dict or argparse.Namespace to a list of command line tokens."""
    if isinstance(namespace_params, argparse.Namespace):
        namespace_params = vars(namespace_params)
    flat_dict = flatten_dict(namespace_params, {})
    return dict_to_list(_keep_accepted(flat_dict))


def _keep_accepted(flat_dict):
    keep = accepted_keys()
    newdict = {k: v for k, v in flat_dict.items() if k in keep or k in POSITIONAL_KEYS}
    extra_keys = [x for x in flat_dict.keys() if x not in newdict]
    if len(extra_keys) > 0:
        log.warning(str(extra_keys) + " are not part of the accepted list of parameters and will be ignored")
    return newdict


#***********************************************************************************************************
def flatten_dict(inp_dict, newdict):
    """Flattens a hierarchical dictionary. Keys repeated with different values are overwritten by the last one
    seen, with a warning.

    Args:
        inp_dict (dict): hierarchical dictionary

        newdict (dict): output dictionary, usually empty

    Returns:
        newdict (dict): flattened dictionary
    """
    for key, val in inp_dict.items():
        if isinstance(val, dict):
            flatten_dict(val, newdict)
        else:
            if key in newdict and newdict[key] != val:
                log.warning(str(key) + " appears several times. Overwriting with value: " + str(val))
            newdict[key] = val
    return newdict


#***********************************************************************************************************
def dict_to_list(inp_dictionary):
    """Converts a flat dictionary to command line tokens. Positional keys (command, experiment, action,
    function) come first, other keys become '--key-name value'.

    Returns:
        (list): tokens
    """
    if not isinstance(inp_dictionary, dict):
        raise ValueError("input to dict_to_list should be a dictionary!")
    flags = flag_names()
    tokens = [str(inp_dictionary[key]) for key in POSITIONAL_KEYS if inp_dictionary.get(key) is not None]
    for key, value in inp_dictionary.items():
        if key in POSITIONAL_KEYS:
            continue
        flag = flags.get(key) or '--' + key.replace('_', '-')
        if key in store_true_flags:
            if str(value) in ('True', 'true', 'TRUE', '1'):
                tokens.append(flag)
            continue
        if value is None or str(value) in null_options:
            continue
        tokens.append(flag)
        if isinstance(value, list):
            tokens.append(','.join([str(item) for item in value]))
        else:
            tokens.append(str(value))
    return tokens


#***********************************************************************************************************
def list_defaults(command='verify'):
    """Namespace of defaults for a subcommand, before config-file defaults are applied."""
    required = {'exact': ['exact', '--m', '1', '--n', '1'], 'verify': ['verify', 'table'],
                'specfn': ['specfn', 'eval', 'h']}
    parser = get_parser()
    return parser.parse_args(required.get(command, [command]))


def accepted_keys():
    """All parameter names accepted by any subcommand."""
    return set(flag_names().keys())


def flag_names(parser=None):
    """Maps every parameter name to its long flag, or to None for positional arguments."""
    parser = get_parser() if parser is None else parser
    names = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            names[action.dest] = None
            for sub in action.choices.values():
                names.update(flag_names(sub))
        elif action.dest != 'help':
            names[action.dest] = action.option_strings[0] if action.option_strings else None
    return names


#***********************************************************************************************************
def parse_command_line(args=None):
    """Parses a list of tokens (or sys.argv) into a processed Namespace.

    Raises:
        ValueError: a flag appears more than once
    """
    if args is not None:
        newlist = re.split(" ", args) if isinstance(args, str) else args
        args = join_negative_values(newlist)
        just_args = [x.split("=")[0] for x in args if x.startswith("--")]
        duplicates = set([x for x in just_args if just_args.count(x) > 1])
        if len(duplicates) > 0:
            raise ValueError(str(duplicates) + " appears several times. ")
    parser = get_parser()
    parsed_args = parser.parse_args(args)
    return postprocess_args(parsed_args)


def join_negative_values(tokens):
    """Rewrites '--flag -2,-1' as '--flag=-2,-1' so that negative numbers and lists reach their flag."""
    joined = []
    for token in tokens:
        if (joined and NEGATIVE_VALUE.match(token) and joined[-1].startswith('--') and '=' not in joined[-1]):
            joined[-1] = joined[-1] + '=' + token
        else:
            joined.append(token)
    return joined


#***********************************************************************************************************
def _add_shared_arguments(parser):
    parser.add_argument(
        '--seed', dest='seed', type=int, default=None,
        help='Root seed of the random streams. Falls back to $%s, then to %d.' % (SEED_ENV_VAR, DEFAULT_SEED))
    parser.add_argument(
        '--fresh-seed', dest='fresh_seed', action='store_true',
        help='Draw a fresh 64-bit seed from OS entropy and log it. Overrides --seed.')
    parser.add_argument(
        '--threads', dest='threads', type=int, default=None,
        help='Maximum number of worker processes. Defaults to the number of CPUs.')
    parser.add_argument(
        '--out', dest='out', default='.',
        help='Output directory for result files.')
    parser.add_argument(
        '--format', dest='format', default=None, choices=['json', 'csv'],
        help='json prints machine-readable results; csv also writes plot data of verify runs. exact and specfn print '
             'plain text when unset.')
    parser.add_argument(
        '--record-runtime', dest='record_runtime', action='store_true',
        help='Write the runtime into reports. It is always logged; recorded runtimes make reruns differ.')
    parser.add_argument(
        '--verbose', dest='verbose', action='store_true',
        help='Log at DEBUG level.')
    parser.add_argument(
        '--config-file', '--config_file', dest='config_file', default=None,
        help='JSON configuration file. Only honored as the first argument.')


def _add_model_arguments(parser):
    parser.add_argument(
        '--n-scale', dest='n_scale', type=int, default=None,
        help='Scale N: one unit of fortune is 1/N.')
    parser.add_argument(
        '--x0', dest='x0', type=float, default=None,
        help='Initial macroscopic fortune of army A.')
    parser.add_argument(
        '--y0', dest='y0', type=float, default=None,
        help='Initial macroscopic fortune of army B.')
    parser.add_argument(
        '--z0', dest='z0', type=float, default=None,
        help='Scaled initial difference sqrt(N)(x0-y0) offset in critical runs.')
    parser.add_argument(
        '--total-fortune', dest='T', type=float, default=None,
        help='Total fortune T = x0 + y0 of critical experiments.')
    parser.add_argument(
        '--reps', dest='reps', type=int, default=None,
        help='Number of independent replications.')
    parser.add_argument(
        '--t-grid', dest='t_grid', type=str, default=None,
        help='Comma separated macroscopic times.')
    parser.add_argument(
        '--mode', dest='mode', default=None, choices=['shortcut', 'per_event', 'both'],
        help='Ruin-time sampling: Gamma shortcut, per-event exponential clock, or both (residual experiment).')


def get_parser():
    """Builds the argument parser with one subparser per command.

    Returns:
        parser (argparse.ArgumentParser)
    """
    parser = argparse.ArgumentParser(
        prog='ruinlab',
        description='Exact ruin probabilities, simulations and limit-theorem experiments for the war of ruins.',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    fmt = argparse.ArgumentDefaultsHelpFormatter

    # **********************************************************************************************************
    exact_parser = subparsers.add_parser('exact', formatter_class=fmt,
                                         help='Print p(m, n) (or q(m, n)) at 15 significant digits.')
    _add_shared_arguments(exact_parser)
    exact_parser.add_argument(
        '--m', dest='m', type=int, default=None,
        help='Units of army A.')
    exact_parser.add_argument(
        '--n', dest='n', type=int, default=None,
        help='Units of army B.')
    exact_parser.add_argument(
        '--kind', dest='kind', default='proportional', choices=list(exact.TABLE_KINDS),
        help='proportional: p(m, n); simple: q(m, n).')

    # **********************************************************************************************************
    table_parser = subparsers.add_parser('table', formatter_class=fmt,
                                         help='Reproduce the reference table, or export a dense table with --max.')
    _add_shared_arguments(table_parser)
    table_parser.add_argument(
        '--max', dest='max', type=int, default=None,
        help='Largest m+n of the exported dense table. Without it the reference table is written.')
    table_parser.add_argument(
        '--kind', dest='kind', default='both', choices=list(exact.TABLE_KINDS) + ['both'],
        help='Which dense tables to export.')

    # **********************************************************************************************************
    simulate_parser = subparsers.add_parser('simulate', formatter_class=fmt,
                                            help='Simulate games and write residual or trajectory CSV files.')
    _add_shared_arguments(simulate_parser)
    _add_model_arguments(simulate_parser)
    simulate_parser.add_argument(
        '--residuals', dest='residuals', action='store_true',
        help='Write residuals.csv; the configuration must be critical. Default for critical configurations.')
    simulate_parser.add_argument(
        '--trajectory', dest='trajectory', action='store_true',
        help='Write trajectory.csv for the first replication. Default for non-critical configurations.')

    # **********************************************************************************************************
    verify_parser = subparsers.add_parser('verify', formatter_class=fmt,
                                          help='Run a named experiment and write its JSON report.')
    verify_parser.add_argument(
        'experiment', choices=list(analysis.EXPERIMENTS.keys()),
        help='Experiment to run.')
    _add_shared_arguments(verify_parser)
    _add_model_arguments(verify_parser)
    verify_parser.add_argument(
        '--ladder', dest='ladder', type=str, default=None,
        help='Comma separated scale ladder (m for CLT experiments, N otherwise).')
    verify_parser.add_argument(
        '--x-grid', dest='x_grid', type=str, default=None,
        help='Comma separated CLT grid points within [-3, 3].')
    verify_parser.add_argument(
        '--rho', dest='rho', type=str, default=None,
        help='Comma separated rho values of the optional stopping experiment.')
    verify_parser.add_argument(
        '--draws', dest='draws', type=int, default=None,
        help='Random draws of the inequality experiment.')
    verify_parser.add_argument(
        '--max', dest='max', type=int, default=None,
        help='Largest m+n of the Eulerian experiment.')
    verify_parser.add_argument(
        '--tolerance', dest='tolerance', type=float, default=None,
        help='Final-rung tolerance.')
    verify_parser.add_argument(
        '--rung-slack', dest='rung_slack', type=int, default=None,
        help='Allowed number of monotonicity violations along the ladder.')
    verify_parser.add_argument(
        '--clt-scale', dest='clt_scale', type=float, default=None,
        help='Scale c of the CLT limit Phi(c x). Defaults to sqrt(3/2) (proportional) or 1/sqrt(2) (simple).')

    # **********************************************************************************************************
    specfn_parser = subparsers.add_parser('specfn', formatter_class=fmt, help='Evaluate special functions.')
    specfn_sub = specfn_parser.add_subparsers(dest='action', metavar='action')
    specfn_sub.required = True
    eval_parser = specfn_sub.add_parser('eval', formatter_class=fmt, help='Evaluate one function.')
    eval_parser.add_argument(
        'function', nargs='?', default='h', choices=list(SPECFN_FUNCTIONS),
        help='Function to evaluate.')
    _add_shared_arguments(eval_parser)
    eval_parser.add_argument('--a', dest='a', type=float, default=None, help='Kummer parameter a.')
    eval_parser.add_argument('--b', dest='b', type=float, default=None, help='Kummer parameter b.')
    eval_parser.add_argument('--z', dest='z', type=str, default=None, help='Comma separated Kummer arguments.')
    eval_parser.add_argument('--rho', dest='rho', type=str, default=None, help='Parameter rho of h_rho and g_rho.')
    eval_parser.add_argument('--x', dest='x', type=str, default=None,
                             help='Comma separated arguments of h_rho, g_rho, Laguerre and ncx2-cdf.')
    eval_parser.add_argument('--k', dest='k', type=int, default=1, help='Derivative order of h-derivative.')
    eval_parser.add_argument('--degree', dest='degree', type=int, default=None,
                             help='Laguerre degree or ncx2 moment order.')
    eval_parser.add_argument('--alpha', dest='alpha', type=float, default=0.0, help='Laguerre parameter alpha.')
    eval_parser.add_argument('--lam', dest='lam', type=float, default=None, help='ncx2 non-centrality.')
    eval_parser.add_argument('--q', dest='q', type=float, default=None, help='Moment order of s-moment.')
    eval_parser.add_argument('--z0', dest='z0', type=float, default=0.0, help='z0 of s-moment.')
    eval_parser.add_argument('--total-fortune', dest='T', type=float, default=1.0, help='T of s-moment.')
    return parser


#***********************************************************************************************************
def resolve_seed(parsed_args):
    """--fresh-seed, then --seed, then $RUINLAB_SEED, then DEFAULT_SEED."""
    if parsed_args.fresh_seed:
        seed = int.from_bytes(os.urandom(8), 'little')
        log.info("Using fresh seed %d" % seed)
        return seed
    if parsed_args.seed is not None:
        return parsed_args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip() != '':
        try:
            return int(env)
        except ValueError:
            raise ValueError("%s must be an integer, got %s" % (SEED_ENV_VAR, env))
    return DEFAULT_SEED


def load_verify_defaults(experiment, path=VERIFY_DEFAULTS):
    """Flattened defaults for one experiment: the 'defaults' block overlaid with the experiment's block."""
    with open(path) as f:
        config = json.loads(f.read())
    merged = dict(flatten_dict(config.get('defaults', {}), {}))
    merged.update(flatten_dict(config.get('experiments', {}).get(experiment, {}), {}))
    return merged


def _convert_lists(parsed_args):
    for item in convert_to_int_list | convert_to_float_list:
        value = parsed_args.__dict__.get(item)
        if value is None or isinstance(value, list):
            continue
        try:
            if item in convert_to_int_list:
                parsed_args.__dict__[item] = [int(x.strip()) for x in str(value).split(',')]
            else:
                parsed_args.__dict__[item] = [float(x.strip()) for x in str(value).split(',')]
        except ValueError:
            raise ValueError("--%s must be a comma separated list of numbers, got %s"
                             % (item.replace('_', '-'), str(value)))


def postprocess_args(parsed_args):
    """Postprocessing for the parsed arguments.

    Replaces null strings with None, converts comma separated lists, resolves the seed and the thread count,
    fills unset verify parameters from the checked-in defaults and checks command specific requirements.

    Raises:
        ValueError: invalid parameter combination
    """
    for keys, vals in parsed_args.__dict__.items():
        if vals in null_options:
            parsed_args.__dict__[keys] = None

    seed_given = (parsed_args.fresh_seed or parsed_args.seed is not None
                  or os.environ.get(SEED_ENV_VAR, '').strip() != '')
    parsed_args.seed = resolve_seed(parsed_args)
    if parsed_args.seed < 0 or parsed_args.seed >= 2**64:
        raise ValueError("--seed must lie in [0, 2**64), got %d" % parsed_args.seed)
    if parsed_args.threads is None:
        parsed_args.threads = multiprocessing.cpu_count()
    if parsed_args.threads < 1:
        raise ValueError("--threads must be positive, got %d" % parsed_args.threads)

    _convert_lists(parsed_args)
    if parsed_args.command == 'exact':
        if parsed_args.m is None or parsed_args.n is None:
            raise ValueError("exact needs --m and --n")
    elif parsed_args.command == 'simulate':
        if parsed_args.n_scale is None or parsed_args.x0 is None or parsed_args.y0 is None:
            raise ValueError("simulate needs --n-scale, --x0 and --y0")
        if parsed_args.z0 is None:
            parsed_args.z0 = 0.0
        if parsed_args.reps is None:
            parsed_args.reps = 1
        if parsed_args.mode is None:
            parsed_args.mode = 'shortcut'
        if parsed_args.mode == 'both':
            raise ValueError("--mode both is only available to the residual experiment")
    elif parsed_args.command == 'verify':
        _fill_verify_defaults(parsed_args, seed_given)
    return parsed_args


def _fill_verify_defaults(parsed_args, seed_given):
    experiment = parsed_args.experiment
    defaults = load_verify_defaults(experiment)
    if (experiment in N_LADDER_EXPERIMENTS and parsed_args.ladder is None and parsed_args.n_scale is not None
            and defaults.get('ladder')):
        # A single --n-scale becomes the last rung of the default ladder.
        parsed_args.ladder = [v for v in defaults['ladder'] if v < parsed_args.n_scale] + [parsed_args.n_scale]
    for key, value in defaults.items():
        if key == 'seed':
            continue
        if key in parsed_args.__dict__ and parsed_args.__dict__[key] is None:
            parsed_args.__dict__[key] = value
    # Config seeds apply only when neither --seed, --fresh-seed nor the environment chose one.
    if 'seed' in defaults and not seed_given:
        parsed_args.seed = int(defaults['seed'])
    _convert_lists(parsed_args)
    if parsed_args.mode is None:
        parsed_args.mode = 'shortcut'


#***********************************************************************************************************
def main(argument):
    """Entry point when script is run from a shell"""
    if argument and argument[0] in ['--help', '-h']:
        params = parse_command_line(argument)
    else:
        params = wrapper(argument)
        print(params)
    return params


if __name__ == '__main__' and len(sys.argv) > 1:
    main(sys.argv[1:])
    sys.exit(0)
