import argparse
import inspect
import logging
import multiprocessing
import os

import pytest

currentdir = os.path.dirname(os.path.abspath(inspect.getfile(inspect.currentframe())))
parentdir = os.path.dirname(currentdir)
import ruinlab.attrition.pipeline.parameter_parser as parse

config_path = currentdir + '/config_verify_residual.json'
dupe_config_path = currentdir + '/config_dupe_inputs.json'
wrong_config_path = currentdir + '/config_wrong_inputs.json'
list_config_path = currentdir + '/config_list_inputs.json'

exact_inputs = ['exact', '--m', '10', '--n', '10']
dupe_inputs = ['exact', '--m', '10', '--n', '10', '--m', '3']
undefined_inputs = ['exact', '--m', '10', '--n', '10', '--wrong_thing', '1,2,3']
list_inputs = ['verify', 'clt-proportional', '--ladder', '100,400,1600', '--x-grid', '-1,0,1', '--clt-scale', '1']
config_inputs = ['--config_file', config_path, '--reps', '300', '--seed', '99']

required_inputs_namespace = argparse.Namespace(command='exact', m=4, n=6)
undefined_inputs_namespace = argparse.Namespace(command='exact', m=4, n=6, wrong_thing='1,2,3')
list_inputs_dict = {'command': 'verify', 'experiment': 'diffusion', 'ladder': [100, 1000], 't_grid': '0.25,0.5',
                    'T': 2.0, 'reps': 400}
hierarchical_dict = {'command': 'simulate',
                     'Model': {'n_scale': 100, 'x0': 0.6, 'y0': 0.4},
                     'Run': {'reps': 5, 'threads': 1, 'Output': {'out': 'sim_out', 'trajectory': True}}}


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(parse.SEED_ENV_VAR, raising=False)


#-------------------------------------------------------------------------------------------------------------
def test_default_params_command():
    params = parse.wrapper(exact_inputs)
    assert params.command == 'exact'
    assert (params.m, params.n) == (10, 10)
    assert params.kind == 'proportional'
    assert params.seed == parse.DEFAULT_SEED
    assert params.threads == multiprocessing.cpu_count()
    assert params.out == '.'
    assert params.format is None


def test_dupe_param_command():
    with pytest.raises(ValueError):
        parse.wrapper(dupe_inputs)


def test_undefined_param_command():
    with pytest.raises(SystemExit):
        parse.wrapper(undefined_inputs)


def test_required_vals_command():
    with pytest.raises(SystemExit):
        parse.wrapper([])
    with pytest.raises(ValueError):
        parse.wrapper(['exact', '--m', '3'])
    with pytest.raises(ValueError):
        parse.wrapper(['simulate', '--n-scale', '100', '--x0', '0.5'])


def test_wrong_type_command():
    with pytest.raises(SystemExit):
        parse.wrapper(['exact', '--m', 'three', '--n', '4'])
    with pytest.raises(SystemExit):
        parse.wrapper(['verify', 'no-such-experiment'])
    with pytest.raises(ValueError):
        parse.wrapper(['verify', 'fluid', '--ladder', '100,a'])


def test_correct_input_type_command():
    params = parse.wrapper(list_inputs)
    assert params.ladder == [100, 400, 1600]
    assert params.x_grid == [-1.0, 0.0, 1.0]
    assert params.clt_scale == 1.0
    assert params.tolerance == 0.01
    assert params.rung_slack == 2


#-------------------------------------------------------------------------------------------------------------
def test_seed_resolution(monkeypatch):
    assert parse.wrapper(exact_inputs + ['--seed', '5']).seed == 5
    monkeypatch.setenv(parse.SEED_ENV_VAR, '77')
    assert parse.wrapper(exact_inputs).seed == 77
    assert parse.wrapper(exact_inputs + ['--seed', '5']).seed == 5
    monkeypatch.setenv(parse.SEED_ENV_VAR, 'abc')
    with pytest.raises(ValueError):
        parse.wrapper(exact_inputs)


def test_fresh_seed(caplog):
    caplog.set_level(logging.INFO, logger='RUINLAB')
    params = parse.wrapper(exact_inputs + ['--fresh-seed', '--seed', '5'])
    assert 0 <= params.seed < 2 ** 64
    assert any('fresh seed' in r.getMessage() for r in caplog.records)


def test_seed_range():
    with pytest.raises(ValueError):
        parse.wrapper(exact_inputs + ['--seed', '-1'])
    with pytest.raises(ValueError):
        parse.wrapper(exact_inputs + ['--seed', str(2 ** 64)])


def test_threads():
    assert parse.wrapper(exact_inputs + ['--threads', '3']).threads == 3
    with pytest.raises(ValueError):
        parse.wrapper(exact_inputs + ['--threads', '0'])


#-------------------------------------------------------------------------------------------------------------
def test_verify_defaults_from_config():
    params = parse.wrapper(['verify', 'fluid'])
    assert params.seed == 20190801
    assert params.ladder == [100, 1000, 10000]
    assert params.reps == 200
    assert (params.x0, params.y0) == (0.6, 0.4)
    assert params.t_grid[-1] == 0.45
    assert params.mode == 'shortcut'


def test_explicit_seed_beats_config_seed(monkeypatch):
    assert parse.wrapper(['verify', 'fluid', '--seed', '5']).seed == 5
    # The documented default is still an explicit choice.
    assert parse.wrapper(['verify', 'fluid', '--seed', str(parse.DEFAULT_SEED)]).seed == parse.DEFAULT_SEED
    monkeypatch.setenv(parse.SEED_ENV_VAR, '8')
    assert parse.wrapper(['verify', 'fluid']).seed == 8


def test_n_scale_becomes_last_rung():
    assert parse.wrapper(['verify', 'residual', '--n-scale', '5000']).ladder == [100, 1000, 5000]
    assert parse.wrapper(['verify', 'residual', '--n-scale', '50']).ladder == [50]
    assert parse.wrapper(['verify', 'residual', '--n-scale', '5000', '--ladder', '10,20']).ladder == [10, 20]


def test_null_strings():
    params = parse.wrapper(['verify', 'stopping', '--ladder', 'none'])
    assert params.ladder == [1000, 10000]


def test_simulate_defaults():
    params = parse.wrapper(['simulate', '--n-scale', '100', '--x0', '0.5', '--y0', '0.5'])
    assert params.z0 == 0.0
    assert params.reps == 1
    assert params.mode == 'shortcut'
    assert not params.residuals and not params.trajectory
    with pytest.raises(ValueError):
        parse.wrapper(['simulate', '--n-scale', '100', '--x0', '0.5', '--y0', '0.5', '--mode', 'both'])


def test_specfn_params():
    params = parse.wrapper(['specfn', 'eval', 'h', '--rho', '3', '--x', '0,1,2.5'])
    assert params.action == 'eval'
    assert params.function == 'h'
    assert params.rho == [3.0]
    assert params.x == [0.0, 1.0, 2.5]
    assert params.k == 1
    params = parse.wrapper(['specfn', 'eval', '--rho', '2.5', '--x', '1'])
    assert params.function == 'h'


def test_negative_values():
    params = parse.wrapper(['verify', 'clt-proportional', '--x-grid', '-2,-1,0,1,2'])
    assert params.x_grid == [-2.0, -1.0, 0.0, 1.0, 2.0]
    params = parse.wrapper(['specfn', 'eval', 'kummer', '--a', '1', '--b', '0.5', '--z', '-5,-.5,3'])
    assert params.z == [-5.0, -0.5, 3.0]
    params = parse.wrapper(['simulate', '--n-scale', '100', '--x0', '0.5', '--y0', '0.5', '--z0', '-1'])
    assert params.z0 == -1.0
    params = parse.wrapper({'command': 'verify', 'experiment': 'clt-simple', 'x_grid': [-2, -1.5, 0]})
    assert params.x_grid == [-2.0, -1.5, 0.0]
    with pytest.raises(ValueError):
        parse.wrapper(['verify', 'fluid', '--z0', '-1', '--z0=-2'])


def test_join_negative_values():
    tokens = ['verify', 'clt-simple', '--x-grid', '-2,-1', '--seed', '5', '--verbose']
    assert parse.join_negative_values(tokens) == ['verify', 'clt-simple', '--x-grid=-2,-1', '--seed', '5',
                                                 '--verbose']


#-------------------------------------------------------------------------------------------------------------
def test_config_file():
    params = parse.wrapper(config_path)
    assert params.command == 'verify'
    assert params.experiment == 'residual'
    assert params.reps == 500
    assert params.ladder == [100, 1000]
    assert params.z0 == 0.5
    assert params.T == 2.0
    assert params.format == 'csv'
    assert params.out == 'residual_results'
    assert params.seed == 20190803


def test_config_file_with_overrides():
    params = parse.wrapper(config_inputs)
    assert params.reps == 300
    assert params.seed == 99
    assert params.ladder == [100, 1000]
    params = parse.wrapper(['--config_file', config_path, 'verify', 'diffusion'])
    assert params.experiment == 'diffusion'
    assert params.reps == 500
    params = parse.wrapper(['--config_file', config_path, '--z0', '-0.5'])
    assert params.z0 == -0.5


def test_dupe_params_json(caplog):
    params = parse.wrapper(dupe_config_path)
    assert caplog.records[0].levelname == 'WARNING'
    assert params.reps == 200
    assert params.t_grid == [0.25, 0.5]


def test_incorrect_params_json(caplog):
    params = parse.wrapper(wrong_config_path)
    assert caplog.records[0].levelname == 'WARNING'
    assert 'wrong_thing' in caplog.records[0].getMessage()
    assert (params.m, params.n) == (3, 4)


def test_correct_input_type_json():
    params = parse.wrapper(list_config_path)
    assert params.rho == [3.0, 4.5]
    assert params.ladder == [1000, 10000]
    assert params.seed == 11
    assert params.tolerance == 0.1
    assert params.record_runtime
    assert not params.verbose


#-------------------------------------------------------------------------------------------------------------
def test_default_params_namespace():
    params = parse.wrapper(required_inputs_namespace)
    assert (params.command, params.m, params.n) == ('exact', 4, 6)
    again = parse.wrapper(params)
    assert vars(again) == vars(params)


def test_undefined_param_namespace(caplog):
    params = parse.wrapper(undefined_inputs_namespace)
    assert caplog.records[0].levelname == 'WARNING'
    assert params.m == 4


def test_dict_input():
    params = parse.wrapper(list_inputs_dict)
    assert params.experiment == 'diffusion'
    assert params.ladder == [100, 1000]
    assert params.t_grid == [0.25, 0.5]
    assert params.T == 2.0
    assert params.reps == 400
    assert params.seed == 20190802


def test_hierarchical_dict():
    params = parse.wrapper(hierarchical_dict)
    assert params.command == 'simulate'
    assert params.n_scale == 100
    assert params.reps == 5
    assert params.threads == 1
    assert params.out == 'sim_out'
    assert params.trajectory


def test_wrapper_types():
    with pytest.raises(TypeError):
        parse.wrapper(5)
    with pytest.raises(TypeError):
        parse.wrapper(exact_inputs, exact_inputs)


#-------------------------------------------------------------------------------------------------------------
def test_flag_names():
    flags = parse.flag_names()
    assert flags['T'] == '--total-fortune'
    assert flags['n_scale'] == '--n-scale'
    assert flags['experiment'] is None
    keys = parse.accepted_keys()
    assert {'m', 'ladder', 'function', 'config_file'} <= keys


def test_dict_to_list():
    tokens = parse.dict_to_list({'ladder': [1, 2], 'experiment': 'winner', 'command': 'verify', 'verbose': True,
                                 'tolerance': 'None', 'T': 1.5})
    assert tokens == ['verify', 'winner', '--ladder', '1,2', '--verbose', '--total-fortune', '1.5']
    with pytest.raises(ValueError):
        parse.dict_to_list(['--m', '3'])


def test_flatten_dict():
    flat = parse.flatten_dict({'a': 1, 'b': {'c': 2, 'd': {'e': 3}}}, {})
    assert flat == {'a': 1, 'c': 2, 'e': 3}


def test_load_verify_defaults():
    defaults = parse.load_verify_defaults('residual')
    assert defaults['seed'] == 20190803
    assert defaults['reps'] == 2000
    assert defaults['ladder'] == [100, 1000, 10000]
    assert parse.load_verify_defaults('eulerian')['max'] == 12


def test_list_defaults():
    defaults = parse.list_defaults('exact')
    assert defaults.kind == 'proportional'
    assert defaults.seed is None
