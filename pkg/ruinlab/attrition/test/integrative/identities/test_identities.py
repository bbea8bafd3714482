#!/usr/bin/env python

import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
import integrative_utilities

test_dir = os.path.dirname(os.path.abspath(__file__))


def test():
    """
    Exact identities: Eulerian numbers, the generating function closed form and the difference inequality
    """

    # Clean
    # -----
    integrative_utilities.clean_results(test_dir)

    for experiment, config_file in [('eulerian', 'config_eulerian.json'),
                                    ('generating-function', 'config_generating_function.json'),
                                    ('inequality', 'config_inequality.json')]:
        # Run experiment
        # --------------
        params, code = integrative_utilities.run_config(test_dir, config_file)
        assert (code == 0), 'Error: %s experiment failed' % experiment

        # Check report
        # ------------
        integrative_utilities.check_report(integrative_utilities.load_report(test_dir, experiment))

    # Rerun gives the same report
    # ---------------------------
    first = integrative_utilities.load_report(test_dir, 'inequality')
    integrative_utilities.run_config(test_dir, 'config_inequality.json', threads=1)
    assert (integrative_utilities.load_report(test_dir, 'inequality') == first), 'Error: Report is not reproducible'


if __name__ == '__main__':
    test()
