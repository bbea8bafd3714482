#!/usr/bin/env python

import os
import sys

import pandas as pd

import ruinlab.attrition.pipeline.exact as exact

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))
import integrative_utilities

test_dir = os.path.dirname(os.path.abspath(__file__))


def test():
    """
    Reproduce the reference table and check it against the published three-digit values
    """

    # Clean
    # -----
    integrative_utilities.clean_results(test_dir)

    # Write table
    # -----------
    params, code = integrative_utilities.run_config(test_dir, 'config_table.json')
    assert (code == 0), 'Error: table command failed'
    table_file = os.path.join(test_dir, 'result', 'table.csv')
    assert (os.path.isfile(table_file)), 'Error: table.csv not created'

    # Check values
    # ------------
    table = pd.read_csv(table_file)
    reference = exact.reference_table()
    assert (table.shape[0] == 15), 'Error: Incorrect number of rows'
    assert (abs(table['p'] - reference['p_published']).max() <= exact.TABLE_ONE_TOLERANCE), 'Error: p differs'
    assert (abs(table['q'] - reference['q_published']).max() <= exact.TABLE_ONE_TOLERANCE), 'Error: q differs'

    # Verify experiment
    # -----------------
    params, code = integrative_utilities.run_config(test_dir, 'config_verify_table.json')
    assert (code == 0), 'Error: table experiment failed'
    integrative_utilities.check_report(integrative_utilities.load_report(test_dir, 'table'))


if __name__ == '__main__':
    test()
