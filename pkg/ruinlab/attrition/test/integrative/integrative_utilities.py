import json
import os
import shutil

import ruinlab.attrition.pipeline.experiment_pipeline as ep
import ruinlab.attrition.pipeline.parameter_parser as parse


def clean_results(test_dir):
    """
    Clean integrative test results
    """
    result_dir = os.path.join(test_dir, 'result')
    if os.path.exists(result_dir):
        shutil.rmtree(result_dir)


def run_config(test_dir, config_file, **overrides):
    """
    Run one configuration file through the experiment pipeline

    Arguments:
        test_dir: Directory holding the configuration file; results go to test_dir/result
        config_file: Configuration file name
        overrides: Parameters replacing those of the file

    Returns:
        params, exit code
    """
    with open(os.path.join(test_dir, config_file)) as f:
        config = json.loads(f.read())
    config.update(overrides)
    config['out'] = os.path.join(test_dir, 'result')
    params = parse.wrapper(config)
    code = ep.ExperimentPipeline(params).run()
    return params, code


def load_report(test_dir, experiment):
    """
    Load <experiment>_report.json from the result directory
    """
    report_file = os.path.join(test_dir, 'result', '%s_report.json' % experiment)
    assert (os.path.isfile(report_file)), 'Error: Report file does not exist'
    with open(report_file) as f:
        return json.loads(f.read())


def check_report(report, expected_ladder=None):
    """
    Check a passing report

    Arguments:
        report: Report dict
        expected_ladder: Scales the ladder should have run at
    """
    assert (report['verdict'] == 'pass'), 'Error: %s verdict is %s' % (report['name'], report['verdict'])
    if expected_ladder is not None:
        assert ([r['scale'] for r in report['ladder']] == list(expected_ladder)), 'Error: Unexpected scale ladder'
    for rung in report['ladder']:
        if rung['tolerance'] is not None:
            assert (rung['metric'] <= rung['tolerance']), 'Error: Final rung above tolerance'
    for check in report['checks']:
        assert (check['pass']), 'Error: Check %s failed' % check['name']
