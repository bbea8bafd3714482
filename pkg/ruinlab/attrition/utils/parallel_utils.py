"""Multiprocess execution of independent replication blocks."""

import logging
import multiprocessing

N_PROCS = multiprocessing.cpu_count()

log = logging.getLogger('RUINLAB')


def run_blocks(worker_fn, inputs, threads=None):
    """Runs worker_fn(*args) for each tuple in inputs and returns the results in input order.

    Args:
        worker_fn (function): module-level function, so that it can be pickled

        inputs (list): argument tuples, one per block

        threads (int): worker process cap; defaults to the number of CPUs. One thread runs serially in the
        calling process.

    Returns:
        (list): worker results, ordered like inputs
    """
    threads = N_PROCS if threads is None else int(threads)
    threads = max(1, min(threads, len(inputs)))
    if threads == 1:
        return [worker_fn(*args) for args in inputs]
    log.debug("Running %d blocks on %d processes" % (len(inputs), threads))
    with multiprocessing.Pool(processes=threads) as pool:
        return pool.starmap(worker_fn, inputs)
