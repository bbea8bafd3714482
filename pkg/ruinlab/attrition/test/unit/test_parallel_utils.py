import multiprocessing

import pytest

import ruinlab.attrition.utils.parallel_utils as parallel_utils


def scaled_block(block, count):
    return [block * 10 + i for i in range(count)]


def failing_block(block, count):
    if block == 1:
        raise ValueError("block %d failed" % block)
    return count


#-------------------------------------------------------------------------------------------------------------
def test_results_keep_input_order():
    inputs = [(b, 3) for b in range(5)]
    expected = [[b * 10 + i for i in range(3)] for b in range(5)]
    assert parallel_utils.run_blocks(scaled_block, inputs, threads=1) == expected
    assert parallel_utils.run_blocks(scaled_block, inputs, threads=3) == expected


def test_worker_errors_propagate():
    inputs = [(b, 2) for b in range(4)]
    with pytest.raises(ValueError):
        parallel_utils.run_blocks(failing_block, inputs, threads=1)
    with pytest.raises(ValueError):
        parallel_utils.run_blocks(failing_block, inputs, threads=2)
    # The failed pool leaves no worker processes behind.
    assert multiprocessing.active_children() == []
    assert parallel_utils.run_blocks(scaled_block, [(0, 1)], threads=2) == [[0]]
