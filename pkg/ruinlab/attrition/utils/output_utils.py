"""
Writers for result files. Every float is written with 15 significant digits and every file uses LF line
endings, so identical results give byte-identical files.
"""

import json
import logging
import math
import os

import numpy as np

log = logging.getLogger('RUINLAB')

FLOAT_FORMAT = '%.15g'


def format_number(value):
    """Formats an int, float or Fraction for printing."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return FLOAT_FORMAT % float(value)


def json_ready(obj):
    """Recursively converts numpy types to python types and rounds floats to 15 significant digits.

    Non-finite floats become None, since JSON has no representation for them.
    """
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return float(FLOAT_FORMAT % value)
    return obj


def write_json(obj, path):
    with open(path, 'w', newline='\n') as f:
        json.dump(json_ready(obj), f, indent=4)
        f.write('\n')
    log.debug("Wrote %s" % path)


def sidecar_path(path):
    return path + '.config.json'


def write_csv(frame, path, sidecar=None):
    """Writes a data frame as CSV and, when given, the sidecar dict as <path>.config.json."""
    out_dir = os.path.dirname(path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    if sidecar is not None:
        write_json(sidecar, sidecar_path(path))
    log.info("Wrote %d rows to %s" % (len(frame), path))
