import io
import json
import math
import os

import pandas as pd
import pytest

import ruinlab.attrition.pipeline.experiment_pipeline as ep
import ruinlab.attrition.pipeline.parameter_parser as parse


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(parse.SEED_ENV_VAR, raising=False)


def run(argv, capsys):
    code = ep.main(argv)
    captured = capsys.readouterr()
    return code, captured.out.splitlines(), captured.err


#-------------------------------------------------------------------------------------------------------------
def test_exact_output(capsys):
    code, out, _ = run(['exact', '--m', '10', '--n', '10'], capsys)
    assert code == ep.EXIT_PASS
    assert out == ['0.5', '1/2']
    code, out, _ = run(['exact', '--m', '0', '--n', '7'], capsys)
    assert out == ['1', '1']
    code, out, _ = run(['exact', '--m', '2', '--n', '1', '--kind', 'simple'], capsys)
    assert out == ['0.25']


def test_exact_json(capsys):
    code, out, _ = run(['exact', '--m', '1', '--n', '2', '--format', 'json'], capsys)
    assert code == ep.EXIT_PASS
    result = json.loads('\n'.join(out))
    assert result['rational'] == '5/6'
    assert result['value'] == pytest.approx(5.0 / 6.0, abs=1e-14)
    assert result['kind'] == 'proportional'


def test_exact_large_total_has_no_rational(capsys):
    code, out, _ = run(['exact', '--m', '980', '--n', '1020'], capsys)
    assert code == ep.EXIT_PASS
    assert len(out) == 1
    assert float(out[0]) == pytest.approx(0.93933, abs=1e-5)


def test_usage_errors(capsys):
    code, _, err = run(['exact', '--m', '-1', '--n', '3'], capsys)
    assert code == ep.EXIT_USAGE
    assert err.startswith('ruinlab: error:')
    code, _, _ = run(['exact', '--m', '3'], capsys)
    assert code == ep.EXIT_USAGE
    code, _, _ = run(['verify', 'fluid', '--ladder', '1,x'], capsys)
    assert code == ep.EXIT_USAGE
    code, _, _ = run(['specfn', 'eval', 'laguerre', '--x', '1'], capsys)
    assert code == ep.EXIT_USAGE
    with pytest.raises(SystemExit):
        ep.main([])


#-------------------------------------------------------------------------------------------------------------
def test_reference_table(tmp_path, capsys):
    code, out, _ = run(['table', '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_PASS
    frame = pd.read_csv(str(tmp_path / 'table.csv'))
    assert list(frame.columns) == ['m', 'n', 'p', 'q']
    assert len(frame) == 15
    assert os.path.isfile(str(tmp_path / 'table.csv.config.json'))
    with open(str(tmp_path / 'table.csv'), 'rb') as f:
        assert b'\r\n' not in f.read()


def test_dense_tables(tmp_path, capsys):
    code, out, _ = run(['table', '--max', '20', '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_PASS
    for name, column in (('p_table.csv', 'p'), ('q_table.csv', 'q')):
        frame = pd.read_csv(str(tmp_path / name))
        assert len(frame) == 230
        assert column in frame.columns
    code, out, _ = run(['table', '--max', '5', '--kind', 'simple', '--out', str(tmp_path / 'simple')], capsys)
    assert os.listdir(str(tmp_path / 'simple')) == ['q_table.csv']


#-------------------------------------------------------------------------------------------------------------
def test_verify_exact_experiments(tmp_path, capsys):
    for experiment in ('table', 'eulerian', 'generating-function'):
        code, out, _ = run(['verify', experiment, '--out', str(tmp_path)], capsys)
        assert code == ep.EXIT_PASS
        assert out == ['%s: pass' % experiment]
        with open(str(tmp_path / ('%s_report.json' % experiment))) as f:
            report = json.load(f)
        assert report['verdict'] == 'pass'
        assert report['runtime_seconds'] is None


def test_verify_failing_verdict(tmp_path, capsys):
    # The literal CLT scale misses the limit by far more than the tolerance.
    code, out, _ = run(['verify', 'clt-proportional', '--ladder', '100,1000', '--clt-scale', '1',
                        '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_FAIL
    assert out == ['clt-proportional: fail']


def test_verify_csv_output(tmp_path, capsys):
    argv = ['verify', 'residual', '--ladder', '100,200', '--reps', '300', '--format', 'csv',
            '--record-runtime', '--out', str(tmp_path)]
    code, _, _ = run(argv, capsys)
    assert code in (ep.EXIT_PASS, ep.EXIT_FAIL)
    for name in ('residual_report.json', 'residual_plot.csv', 'residual_plot.csv.config.json', 'residuals.csv'):
        assert os.path.isfile(str(tmp_path / name))
    with open(str(tmp_path / 'residual_report.json')) as f:
        report = json.load(f)
    assert report['seed'] == 20190803
    assert report['runtime_seconds'] > 0
    assert len(pd.read_csv(str(tmp_path / 'residuals.csv'))) == 300


def test_verify_reports_do_not_depend_on_threads(tmp_path, capsys):
    contents = []
    for threads in ('1', '2'):
        out_dir = tmp_path / ('threads%s' % threads)
        run(['verify', 'residual', '--ladder', '100,200', '--reps', '300', '--seed', '17', '--threads', threads,
             '--out', str(out_dir)], capsys)
        with open(str(out_dir / 'residual_report.json'), 'rb') as f:
            contents.append(f.read())
    assert contents[0] == contents[1]


#-------------------------------------------------------------------------------------------------------------
def test_simulate_critical_writes_residuals(tmp_path, capsys):
    code, out, _ = run(['simulate', '--n-scale', '100', '--x0', '0.5', '--y0', '0.5', '--reps', '20',
                        '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_PASS
    frame = pd.read_csv(str(tmp_path / 'residuals.csv'))
    assert list(frame.columns) == ['rep', 's', 's_hat', 'r']
    assert len(frame) == 20
    assert not os.path.isfile(str(tmp_path / 'trajectory.csv'))
    with open(str(tmp_path / 'residuals.csv.config.json')) as f:
        sidecar = json.load(f)
    assert (sidecar['m0'], sidecar['n0']) == (50, 50)
    assert sidecar['mode'] == 'shortcut'


def test_simulate_rerun_is_identical(tmp_path, capsys):
    contents = []
    for rerun, threads in (('first', '1'), ('second', '2')):
        out_dir = tmp_path / rerun
        run(['simulate', '--n-scale', '400', '--x0', '0.5', '--y0', '0.5', '--reps', '300', '--seed', '7',
             '--threads', threads, '--out', str(out_dir)], capsys)
        with open(str(out_dir / 'residuals.csv'), 'rb') as f:
            contents.append(f.read())
    assert contents[0] == contents[1]


def test_simulate_trajectory(tmp_path, capsys):
    code, out, _ = run(['simulate', '--n-scale', '200', '--x0', '0.6', '--y0', '0.4', '--t-grid', '0,0.1,0.2',
                        '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_PASS
    frame = pd.read_csv(str(tmp_path / 'trajectory.csv'))
    assert list(frame.columns) == ['t', 'x', 'y', 'z']
    assert frame['t'].iloc[0] == 0.0
    assert frame['x'].iloc[0] == pytest.approx(0.6)
    assert min(frame['x'].iloc[-1], frame['y'].iloc[-1]) == 0.0
    assert not os.path.isfile(str(tmp_path / 'residuals.csv'))


def test_simulate_both_files(tmp_path, capsys):
    code, out, _ = run(['simulate', '--n-scale', '100', '--x0', '0.5', '--y0', '0.5', '--reps', '5',
                        '--trajectory', '--residuals', '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_PASS
    assert sorted(f for f in os.listdir(str(tmp_path)) if f.endswith('.csv')) == ['residuals.csv', 'trajectory.csv']


def test_simulate_residuals_need_criticality(tmp_path, capsys):
    code, _, _ = run(['simulate', '--n-scale', '400', '--x0', '0.7', '--y0', '0.3', '--residuals',
                      '--out', str(tmp_path)], capsys)
    assert code == ep.EXIT_USAGE


#-------------------------------------------------------------------------------------------------------------
def test_specfn(capsys):
    code, out, _ = run(['specfn', 'eval', 'h', '--rho', '3', '--x', '0,1'], capsys)
    assert code == ep.EXIT_PASS
    assert out == ['1', '7']
    code, out, _ = run(['specfn', 'eval', 's-moment', '--q', '4'], capsys)
    assert float(out[0]) == pytest.approx(1.0 / 3.0, rel=1e-13)
    code, out, _ = run(['specfn', 'eval', 'kummer', '--a', '1', '--b', '1', '--z', '0,1', '--format', 'json'],
                       capsys)
    result = json.loads('\n'.join(out))
    assert result['function'] == 'kummer'
    assert result['values'] == pytest.approx([1.0, 2.718281828459045], rel=1e-14)


def test_specfn_default_function(capsys):
    code, out, _ = run(['specfn', 'eval', '--rho', '3', '--x', '0,1'], capsys)
    assert code == ep.EXIT_PASS
    assert out == ['1', '7']
    code, out, _ = run(['specfn', 'eval', 'kummer', '--a', '1', '--b', '1', '--z', '-1,0'], capsys)
    assert code == ep.EXIT_PASS
    assert [float(v) for v in out] == pytest.approx([math.exp(-1.0), 1.0], rel=1e-14)
    code, _, _ = run(['specfn', 'eval', 'ncx2-cdf', '--lam', '1', '--x', '-1'], capsys)
    assert code == ep.EXIT_USAGE


def test_specfn_numerical_failure(capsys):
    code, _, err = run(['specfn', 'eval', 'g', '--rho', '2.5', '--x', '5'], capsys)
    assert code == ep.EXIT_FAIL
    assert err.startswith('ruinlab: numerical failure:')


def test_pipeline_object():
    params = parse.wrapper(['exact', '--m', '1', '--n', '2'])
    stream = io.StringIO()
    pipeline = ep.ExperimentPipeline(params, stdout=stream)
    assert pipeline.run() == ep.EXIT_PASS
    assert stream.getvalue() == '0.833333333333333\n5/6\n'
