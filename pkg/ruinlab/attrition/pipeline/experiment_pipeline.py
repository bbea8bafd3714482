#!/usr/bin/env python

"""
Contains class ExperimentPipeline, which runs one command of the ruinlab command line: exact win probabilities,
probability tables, simulations, named verification experiments and special function evaluation.

Exit codes: 0 on success or a passing verdict, 1 on a failing verdict or a numerical failure, 2 on invalid
parameters.
"""

import json
import logging
import os
import sys
import time

import numpy as np

from ruinlab.attrition.pipeline import analysis
from ruinlab.attrition.pipeline import exact
from ruinlab.attrition.pipeline import parameter_parser as parse
from ruinlab.attrition.pipeline import simulate
from ruinlab.attrition.pipeline import specfn
from ruinlab.attrition.utils import output_utils

logging.basicConfig(format='%(asctime)-15s %(message)s')

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ExperimentPipeline:
    """Runs the command selected by a parameter Namespace.

    Attributes:
        params (argparse.Namespace): processed parameters, see parameter_parser

        log (logging.Logger): the project logger

        output_dir (str): directory for result files

        stdout (file): stream for printed results
    """

    def __init__(self, params, stdout=None):
        self.params = params
        self.log = logging.getLogger('RUINLAB')
        self.output_dir = params.out
        self.stdout = sys.stdout if stdout is None else stdout

    def run(self):
        """Runs the command and returns the exit code."""
        commands = dict(exact=self.cmd_exact, table=self.cmd_table, simulate=self.cmd_simulate,
                        verify=self.cmd_verify, specfn=self.cmd_specfn)
        return commands[self.params.command]()

    def _print(self, text):
        self.stdout.write(text + '\n')

    def _print_json(self, obj):
        self._print(json.dumps(output_utils.json_ready(obj), indent=4))

    def _out_path(self, name):
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    # ****************************************************************************************
    def cmd_exact(self):
        """Prints p(m, n) (or q(m, n)) at 15 significant digits, plus the exact rational when m+n is small."""
        p = self.params
        value = float(exact.evaluate_pairs([(p.m, p.n)], p.kind)[0])
        result = dict(m=p.m, n=p.n, kind=p.kind, value=value)
        if p.m + p.n <= exact.MAX_EXPLICIT_TOTAL:
            if p.kind == 'proportional':
                result['rational'] = str(exact.p_explicit(p.m, p.n))
            else:
                result['explicit'] = exact.q_explicit(p.m, p.n)
        if p.format == 'json':
            self._print_json(result)
        else:
            self._print(output_utils.format_number(value))
            if 'rational' in result:
                self._print(result['rational'])
        return EXIT_PASS

    def cmd_table(self):
        """Writes the reference table (no --max) or dense tables up to --max as CSV."""
        p = self.params
        if p.max is None:
            frame = exact.reference_table()
            path = self._out_path('table.csv')
            output_utils.write_csv(frame[['m', 'n', 'p', 'q']], path,
                                   sidecar=dict(rows=[list(r) for r in exact.table_one_rows()]))
            self._print(frame.to_string(index=False, float_format=lambda v: '%.3f' % v))
            return EXIT_PASS
        kinds = exact.TABLE_KINDS if p.kind == 'both' else (p.kind,)
        for kind in kinds:
            table = exact.p_recurrence(p.max) if kind == 'proportional' else exact.q_recurrence(p.max)
            path = self._out_path('%s_table.csv' % exact.VALUE_NAMES[kind])
            table.save_csv(path)
            self._print(path)
        return EXIT_PASS

    def cmd_simulate(self):
        """Writes residuals.csv for critical configurations (or with --residuals) and trajectory.csv for the first
        replication otherwise (or with --trajectory)."""
        p = self.params
        config = simulate.SimConfig(p.n_scale, p.x0, p.y0, z0=p.z0, seed=p.seed, replications=p.reps)
        self.log.info("Simulation configuration: %s" % str(config))
        write_residuals = p.residuals or (not p.trajectory and config.is_critical())
        if write_residuals:
            sample = simulate.sample_residuals(config, threads=p.threads, mode=p.mode)
            path = self._out_path('residuals.csv')
            simulate.save_residuals_csv(sample, path)
            self._print(path)
        if p.trajectory or not write_residuals:
            trajectory = simulate.play_continuous(config, sample_grid=p.t_grid)
            path = self._out_path('trajectory.csv')
            simulate.save_trajectory_csv(trajectory, path, config)
            self._print(path)
        return EXIT_PASS

    # ****************************************************************************************
    def experiment_kwargs(self):
        """Maps parameters to the keyword arguments of the selected experiment."""
        p = self.params
        name = p.experiment
        sampled = dict(replications=p.reps, seed=p.seed, threads=p.threads)
        if name in ('clt-proportional', 'clt-simple'):
            kwargs = dict(m_ladder=p.ladder, x_grid=p.x_grid, tolerance=p.tolerance, rung_slack=p.rung_slack)
            if p.clt_scale is not None:
                kwargs['scale'] = p.clt_scale
            return kwargs
        if name == 'fluid':
            return dict(x0=p.x0, y0=p.y0, n_ladder=p.ladder, t_grid=p.t_grid, tolerance=p.tolerance,
                        rung_slack=p.rung_slack, **sampled)
        if name == 'winner':
            return dict(x0=p.x0, y0=p.y0, n_ladder=p.ladder, tolerance=p.tolerance, rung_slack=p.rung_slack)
        if name == 'diffusion':
            return dict(T=p.T, z0=p.z0, n_ladder=p.ladder, t_grid=p.t_grid, tolerance=p.tolerance,
                        rung_slack=p.rung_slack, **sampled)
        if name == 'residual':
            return dict(T=p.T, z0=p.z0, n_ladder=p.ladder, tolerance=p.tolerance, mode=p.mode,
                        rung_slack=p.rung_slack, **sampled)
        if name == 'stopping':
            return dict(T=p.T, z0=p.z0, rho_list=p.rho, n_ladder=p.ladder, tolerance=p.tolerance,
                        rung_slack=p.rung_slack, **sampled)
        if name == 'eulerian':
            return dict(m_max=p.max)
        if name == 'inequality':
            return dict(draws=p.draws, seed=p.seed, tolerance=p.tolerance)
        if name == 'submartingale':
            return dict(N=p.n_scale, T=p.T, z0=p.z0, t_grid=p.t_grid, **sampled)
        if name == 'proxy-bound':
            return dict(T=p.T, z0=p.z0, n_ladder=p.ladder, rung_slack=p.rung_slack, **sampled)
        return dict(tolerance=p.tolerance)

    def cmd_verify(self):
        """Runs the experiment, writes <experiment>_report.json (and plot data with --format csv) and returns 0
        exactly when the verdict is a pass."""
        p = self.params
        experiment = analysis.EXPERIMENTS[p.experiment]
        start = time.time()
        report = experiment(**self.experiment_kwargs())
        runtime = time.time() - start
        self.log.info("%s finished in %.1f s with verdict %s" % (p.experiment, runtime, report.verdict))
        if p.record_runtime:
            report.runtime_seconds = runtime
        self.save_report(report)
        self._print("%s: %s" % (p.experiment, report.verdict))
        return EXIT_PASS if report.verdict == 'pass' else EXIT_FAIL

    def save_report(self, report):
        output_utils.write_json(report.to_dict(), self._out_path('%s_report.json' % report.name))
        if self.params.format == 'csv':
            output_utils.write_csv(report.plot_frame(), self._out_path('%s_plot.csv' % report.name),
                                   sidecar=report.config)
            sample = getattr(report, 'residual_sample', None)
            if sample is not None:
                simulate.save_residuals_csv(sample, self._out_path('residuals.csv'))

    # ****************************************************************************************
    def _require(self, *names):
        missing = ['--' + name.replace('_', '-') for name in names if getattr(self.params, name) is None]
        if missing:
            raise ValueError("specfn eval %s needs %s" % (self.params.function, ', '.join(missing)))

    def cmd_specfn(self):
        """Evaluates one special function at the given arguments and prints one value per line."""
        p = self.params
        fn = p.function
        rho = p.rho[0] if p.rho else None
        if fn in ('kummer', 'log-kummer'):
            self._require('a', 'b', 'z')
            evaluate = specfn.kummer_m if fn == 'kummer' else specfn.log_kummer_m
            values = evaluate(p.a, p.b, np.asarray(p.z))
        elif fn in ('h', 'log-h', 'h-derivative', 'g'):
            self._require('rho', 'x')
            x = np.asarray(p.x)
            if fn == 'h':
                values = specfn.h_rho(rho, x)
            elif fn == 'log-h':
                values = specfn.log_h_rho(rho, x)
            elif fn == 'h-derivative':
                values = specfn.h_rho_derivative(rho, x, p.k)
            else:
                values = [specfn.g_rho_series(rho, u) for u in p.x]
        elif fn == 'laguerre':
            self._require('degree', 'x')
            values = specfn.laguerre(p.degree, p.alpha, np.asarray(p.x))
        elif fn == 'ncx2-cdf':
            self._require('lam', 'x')
            values = specfn.ncx2_cdf(specfn.NoncentralChiSq1(p.lam), np.asarray(p.x))
        elif fn == 'ncx2-moment':
            self._require('lam', 'degree')
            values = [specfn.ncx2_moment(specfn.NoncentralChiSq1(p.lam), p.degree)]
        else:
            self._require('q')
            values = [specfn.s_moment(specfn.SMomentSpec(p.T, p.z0, p.q))]
        values = [float(v) for v in np.atleast_1d(values)]
        if p.format == 'json':
            self._print_json(dict(function=fn, values=values))
        else:
            for value in values:
                self._print(output_utils.format_number(value))
        return EXIT_PASS


#***********************************************************************************************************
def main(argv=None):
    """Entry point when script is run from a shell"""
    argv = sys.argv[1:] if argv is None else argv
    logger = logging.getLogger('RUINLAB')
    try:
        params = parse.wrapper(argv)
    except ValueError as e:
        sys.stderr.write("ruinlab: error: %s\n" % str(e))
        return EXIT_USAGE
    logger.setLevel(logging.DEBUG if params.verbose else logging.INFO)
    try:
        return ExperimentPipeline(params).run()
    except ValueError as e:
        sys.stderr.write("ruinlab: error: %s\n" % str(e))
        return EXIT_USAGE
    except ArithmeticError as e:
        sys.stderr.write("ruinlab: numerical failure: %s\n" % str(e))
        return EXIT_FAIL


if __name__ == '__main__':
    sys.exit(main())
