#!/usr/bin/env python

import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
import integrative_utilities

test_dir = os.path.dirname(os.path.abspath(__file__))


def test():
    """
    The drift of the submartingale statistic stays non-negative and the proxy S_hat_N stays within its bound
    """

    # Clean
    # -----
    integrative_utilities.clean_results(test_dir)

    # Submartingale
    # -------------
    params, code = integrative_utilities.run_config(test_dir, 'config_submartingale.json')
    assert (code == 0), 'Error: submartingale experiment failed'
    report = integrative_utilities.load_report(test_dir, 'submartingale')
    integrative_utilities.check_report(report)
    assert (report['config']['N'] == 2000), 'Error: Wrong scale'

    # Proxy bound
    # -----------
    params, code = integrative_utilities.run_config(test_dir, 'config_proxy_bound.json')
    assert (code == 0), 'Error: proxy-bound experiment failed'
    integrative_utilities.check_report(integrative_utilities.load_report(test_dir, 'proxy-bound'),
                                       expected_ladder=[1000, 10000])


if __name__ == '__main__':
    test()
