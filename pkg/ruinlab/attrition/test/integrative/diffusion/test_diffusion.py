#!/usr/bin/env python

import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
import integrative_utilities

test_dir = os.path.dirname(os.path.abspath(__file__))


def run_diffusion(z0):
    """
    Run the diffusion experiment from config_diffusion.json at offset z0 and check its report
    """

    # Clean
    # -----
    integrative_utilities.clean_results(test_dir)

    # Run experiment
    # --------------
    params, code = integrative_utilities.run_config(test_dir, 'config_diffusion.json', z0=z0)
    assert (code == 0), 'Error: diffusion experiment failed for z0=%g' % z0

    # Check report
    # ------------
    report = integrative_utilities.load_report(test_dir, 'diffusion')
    integrative_utilities.check_report(report, expected_ladder=[100, 1000, 10000])
    assert (report['seed'] == 20190802), 'Error: Wrong seed in report'
    assert (len(report['details']['exact_diffusion_ks']) == 3), 'Error: Missing diffusion comparison'
    return report


def test_centered():
    """
    Critical fluctuations Z_N(t) approach the Gaussian diffusion with variance (T^3 - (T-t)^3) / (3 T^2)
    """
    report = run_diffusion(0.0)
    names = [c['name'] for c in report['checks']]
    assert ('variance_t0.5' in names), 'Error: Variance at t=0.5 was not checked'
    assert ('mean_residual_time' in names), 'Error: Residual time was not checked'


def test_offset():
    """
    Same with the initial offset z0 = 1
    """
    report = run_diffusion(1.0)
    assert (report['config']['z0'] == 1.0), 'Error: Wrong z0 in report'


if __name__ == '__main__':
    test_centered()
    test_offset()
