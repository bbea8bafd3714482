"""
Verification harness: empirical CDFs, Kolmogorov-Smirnov distances and one experiment per limit theorem.

Every experiment returns a ConvergenceReport. A limit statement becomes a two part acceptance test: the error
metric must not increase along a scale ladder (up to a rung slack and sampling error), and the final rung must
meet an absolute tolerance. The tolerances are calibrated constants kept in config/verify_defaults.json.
"""

import collections
import logging
import math

import numpy as np
import pandas as pd
from scipy import stats
from scipy.special import erfc

from ruinlab.attrition.pipeline import exact
from ruinlab.attrition.pipeline import simulate
from ruinlab.attrition.pipeline import specfn

log = logging.getLogger('RUINLAB')

CLT_SCALE = math.sqrt(1.5)
SIMPLE_CLT_SCALE = 1.0 / math.sqrt(2.0)
X_GRID_LIMIT = 3.0
# Two-sample KS critical coefficient at the 0.1% level.
KS_TWO_SAMPLE_COEF = math.sqrt(-0.5 * math.log(0.0005))
TOLERANCE_NOTE = "final-rung tolerances are calibrated constants from config/verify_defaults.json"


class ExperimentConfigException(ValueError):
    pass


# ****************************************************************************************
def normal_cdf(x):
    """Standard normal CDF, 0.5 erfc(-x/sqrt(2))."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


class EmpiricalCDF(object):
    """Right-continuous empirical distribution function of a sample.

    Attributes:
        values (np.array): sorted sample
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise ExperimentConfigException("Empirical CDF of an empty sample")
        if not np.all(np.isfinite(values)):
            raise ExperimentConfigException("Sample contains non-finite values")
        self.values = np.sort(values)

    @property
    def n(self):
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side='right') / self.n

    def left_limit(self, x):
        """F(x-), the fraction of the sample strictly below x."""
        return np.searchsorted(self.values, x, side='left') / self.n


def ks_distance(sample, cdf, lower=None):
    """Kolmogorov-Smirnov distance sup_x |F_n(x) - F(x)| between a sample and a CDF.

    Both one-sided limits are compared at every distinct sample point: F_n(x) against F(x) and F_n(x-) against
    F evaluated just below x. Atoms of F at sample points are handled exactly.

    Args:
        sample (EmpiricalCDF or sequence): the sample

        cdf (function): vectorized, non-decreasing

        lower (float): lower end of the support of cdf; left limits are not evaluated below it

    Returns:
        (float): distance in [0, 1]
    """
    ecdf = sample if isinstance(sample, EmpiricalCDF) else EmpiricalCDF(sample)
    points = np.unique(ecdf.values)
    at = np.clip(np.asarray(cdf(points), dtype=float), 0.0, 1.0)
    before = np.nextafter(points, -np.inf)
    if lower is not None:
        before = np.maximum(before, lower)
    below = np.clip(np.asarray(cdf(before), dtype=float), 0.0, 1.0)
    right = np.max(np.abs(ecdf(points) - at))
    left = np.max(np.abs(ecdf.left_limit(points) - below))
    return float(min(1.0, max(right, left)))


# ****************************************************************************************
class ConvergenceReport(object):
    """Scale ladder of error metrics plus named checks for one experiment.

    Attributes:
        name (str): experiment name

        config (dict): parameters of the run

        seed (int): root seed, None for exact experiments

        rung_slack (int): allowed number of monotonicity violations

        rungs (list): dicts with scale, metric, tolerance, stderr

        checks (list): dicts with name, value, target, tolerance, relation

        details (dict): auxiliary results
    """

    RELATIONS = ('close', 'at_most', 'at_least')

    def __init__(self, name, config=None, seed=None, rung_slack=0):
        self.name = name
        self.config = dict(config or {})
        self.seed = seed
        self.rung_slack = int(rung_slack)
        self.rungs = []
        self.checks = []
        self.details = collections.OrderedDict()
        self.runtime_seconds = None
        self._plot_frames = []

    def add_rung(self, scale, metric, tolerance=None, stderr=0.0):
        if not np.isfinite(metric) or metric < 0:
            raise ExperimentConfigException("Rung metric must be finite and non-negative, got %s" % str(metric))
        if self.rungs and scale <= self.rungs[-1]['scale']:
            raise ExperimentConfigException("Scale ladder must be strictly increasing, got %s after %s"
                                            % (str(scale), str(self.rungs[-1]['scale'])))
        self.rungs.append(dict(scale=scale, metric=float(metric), tolerance=tolerance, stderr=float(stderr)))
        log.info("%s: scale %s metric %.6g" % (self.name, str(scale), metric))

    def add_check(self, name, value, target, tolerance, relation='close'):
        """Records a check: |value-target| <= tolerance ('close'), value <= target + tolerance ('at_most') or
        value >= target - tolerance ('at_least')."""
        if relation not in self.RELATIONS:
            raise ExperimentConfigException("Unknown check relation %s" % relation)
        self.checks.append(dict(name=name, value=value, target=target, tolerance=tolerance, relation=relation))

    @staticmethod
    def _rung_pass(rung):
        if rung['tolerance'] is None:
            return None
        return rung['metric'] <= rung['tolerance']

    @staticmethod
    def _check_pass(check):
        value, target, tol = check['value'], check['target'], check['tolerance']
        if value is None or not np.isfinite(value):
            return False
        if check['relation'] == 'at_most':
            return value <= target + tol
        if check['relation'] == 'at_least':
            return value >= target - tol
        return abs(value - target) <= tol

    @property
    def violations(self):
        count = 0
        for prev, cur in zip(self.rungs, self.rungs[1:]):
            if cur['metric'] > prev['metric'] + 2.0 * cur['stderr']:
                count += 1
        return count

    @property
    def monotone_ok(self):
        return self.violations <= self.rung_slack

    @property
    def final_ok(self):
        return all(self._rung_pass(rung) is not False for rung in self.rungs)

    @property
    def checks_ok(self):
        return all(self._check_pass(check) for check in self.checks)

    @property
    def verdict(self):
        return 'pass' if self.monotone_ok and self.final_ok and self.checks_ok else 'fail'

    def add_plot_rows(self, frame):
        self._plot_frames.append(frame)

    def plot_frame(self):
        if not self._plot_frames:
            return pd.DataFrame(columns=['scale', 'x', 'empirical', 'limit'])
        return pd.concat(self._plot_frames, ignore_index=True)

    def to_dict(self):
        details = collections.OrderedDict(self.details)
        details['monotone_violations'] = self.violations
        details['rung_slack'] = self.rung_slack
        details['tolerance_note'] = TOLERANCE_NOTE
        return collections.OrderedDict([
            ('name', self.name),
            ('config', self.config),
            ('ladder', [dict(scale=r['scale'], metric=r['metric'], tolerance=r['tolerance'],
                             **{'pass': self._rung_pass(r)}) for r in self.rungs]),
            ('checks', [dict(c, **{'pass': self._check_pass(c)}) for c in self.checks]),
            ('details', details),
            ('verdict', self.verdict),
            ('seed', self.seed),
            ('runtime_seconds', self.runtime_seconds)])


# ****************************************************************************************
def _check_ladder(name, ladder):
    ladder = list(ladder)
    if not ladder:
        raise ExperimentConfigException("%s must not be empty" % name)
    for value in ladder:
        if isinstance(value, bool) or int(value) != value or value < 1:
            raise ExperimentConfigException("%s entries must be positive integers, got %s" % (name, str(value)))
    ladder = [int(v) for v in ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ExperimentConfigException("%s must be strictly increasing, got %s" % (name, str(ladder)))
    return ladder


def _check_t_grid(t_grid, upper):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ExperimentConfigException("Time grid must be a non-empty list")
    if np.any(t_grid < 0) or np.any(t_grid > upper) or np.any(np.diff(t_grid) < 0):
        raise ExperimentConfigException("Time grid must be non-decreasing within [0, %g], got %s"
                                        % (upper, str(t_grid.tolist())))
    return t_grid


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def add_residual_time_check(report, residual, config, sigmas):
    """Checks mean(T - tau_N) against its critical scaling N^(-1/4) E[S] within sigmas standard errors."""
    residual = np.asarray(residual, dtype=float)
    target = config.N ** -0.25 * specfn.s_moment(specfn.SMomentSpec(config.T, config.realized_z0, 1))
    report.add_check('mean_residual_time', float(residual.mean()), target, sigmas * _mean_stderr(residual))
    return target


# ****************************************************************************************
def verify_clt(kind, m_ladder, x_grid, scale, tolerance, rung_slack=2, name=None):
    """Compares exact win probabilities with their normal limit along a ladder of m.

    At rung m and grid point x, n = round(m + x sqrt(m)) and the exact value at (m, n) is compared with
    Phi(scale * x_eff), where x_eff = (n - m)/sqrt(m) is the grid point actually realized by the rounding.

    Args:
        kind (str): 'proportional' (p tables) or 'simple' (q tables)

        m_ladder (list): increasing values of m

        x_grid (list): points within [-3, 3]

        scale (float): limit scale c in Phi(c x)

        tolerance (float): bound on the maximum error at the last rung

        rung_slack (int): allowed monotonicity violations

    Returns:
        (ConvergenceReport)
    """
    name = name or 'clt-%s' % kind
    m_ladder = _check_ladder('m_ladder', m_ladder)
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size == 0 or np.any(np.abs(x_grid) > X_GRID_LIMIT):
        raise ExperimentConfigException("x_grid must be a non-empty subset of [-3, 3], got %s" % str(x_grid.tolist()))
    report = ConvergenceReport(name, config=dict(kind=kind, m_ladder=m_ladder, x_grid=x_grid.tolist(),
                                                 scale=scale, tolerance=tolerance), rung_slack=rung_slack)

    pairs = []
    skipped = []
    for m in m_ladder:
        for x in x_grid:
            n = int(np.rint(m + x * math.sqrt(m)))
            if n < 0:
                skipped.append(dict(m=m, x=float(x), n=n))
                continue
            pairs.append((m, n, float(x)))
    table_rows = exact.TABLE_ONE
    values = exact.evaluate_pairs([(m, n) for m, n, _ in pairs] + [(m, n) for _, m, n, _, _ in table_rows], kind)
    grid_values = values[:len(pairs)]
    table_values = values[len(pairs):]

    frame = pd.DataFrame(pairs, columns=['scale', 'n', 'x'])
    frame['x_eff'] = (frame['n'] - frame['scale']) / np.sqrt(frame['scale'])
    frame['empirical'] = grid_values
    frame['limit'] = normal_cdf(scale * frame['x_eff'].values)
    frame['error'] = np.abs(frame['empirical'] - frame['limit'])
    for i, m in enumerate(m_ladder):
        rows = frame[frame['scale'] == m]
        if rows.empty:
            raise ExperimentConfigException("Every grid point was skipped at m=%d" % m)
        report.add_rung(m, rows['error'].max(), tolerance=tolerance if i == len(m_ladder) - 1 else None)
    report.add_plot_rows(frame[['scale', 'x', 'empirical', 'limit']])

    centre = frame[frame['n'] == frame['scale']]
    if not centre.empty:
        report.add_check('symmetric_point_value', float(centre['empirical'].max()), 0.5, 1e-12)
        report.add_check('symmetric_point_value_min', float(centre['empirical'].min()), 0.5, 1e-12)
    published = np.array([row[3] if kind == 'proportional' else row[4] for row in table_rows])
    report.add_check('reference_table_max_deviation', float(np.max(np.abs(table_values - published))), 0.0,
                     exact.TABLE_ONE_TOLERANCE, relation='at_most')
    report.details['skipped_points'] = skipped
    report.details['errors'] = frame[['scale', 'x', 'n', 'x_eff', 'error']].to_dict(orient='records')
    return report


def verify_clt_proportional(m_ladder=(100, 400, 1600, 6400, 10000), x_grid=(-2, -1, 0, 1, 2), scale=CLT_SCALE,
                            tolerance=0.01, rung_slack=2):
    return verify_clt('proportional', m_ladder, x_grid, scale, tolerance, rung_slack, name='clt-proportional')


def verify_clt_simple(m_ladder=(100, 400, 1600, 6400, 10000), x_grid=(-2, -1, 0, 1, 2), scale=SIMPLE_CLT_SCALE,
                      tolerance=0.01, rung_slack=2):
    return verify_clt('simple', m_ladder, x_grid, scale, tolerance, rung_slack, name='clt-simple')


# ****************************************************************************************
def verify_fluid(x0=0.6, y0=0.4, n_ladder=(100, 1000, 10000), t_grid=None, replications=200,
                 seed=simulate.DEFAULT_SEED, tolerance=0.05, extinction_tolerance=0.02, rung_slack=0, threads=1):
    """Compares ensemble means of the scaled fortunes with the deterministic fluid limit.

    Args:
        x0, y0 (float): initial fortunes with x0 >= y0

        n_ladder (list): increasing N

        t_grid (list): times at least 0.1 before the fluid extinction time; defaults to 10 points on [0, 0.45]

        tolerance (float): bound on the sup-grid error at the last rung

        extinction_tolerance (float): bound on |mean tau_N - extinction time| at the last rung

    Returns:
        (ConvergenceReport)
    """
    if x0 < y0:
        raise ExperimentConfigException("Fluid experiment needs x0 >= y0, got (%g, %g)" % (x0, y0))
    n_ladder = _check_ladder('n_ladder', n_ladder)
    T = x0 + y0
    extinction = simulate.fluid_extinction_time(x0, y0)
    upper = min(extinction, T) - 0.1
    t_grid = _check_t_grid(np.linspace(0.0, 0.45, 10) if t_grid is None else t_grid, upper)
    report = ConvergenceReport('fluid', config=dict(x0=x0, y0=y0, n_ladder=n_ladder, t_grid=t_grid.tolist(),
                                                    replications=replications, tolerance=tolerance,
                                                    extinction_tolerance=extinction_tolerance),
                               seed=seed, rung_slack=rung_slack)
    fluid_x = simulate.fluid_solution(x0, T, t_grid)
    fluid_y = simulate.fluid_solution(y0, T, t_grid)
    report.add_check('fluid_total_identity', float(np.max(np.abs(fluid_x + fluid_y - (T - t_grid)))), 0.0, 1e-12,
                     relation='at_most')

    ensemble = None
    for i, N in enumerate(n_ladder):
        config = simulate.SimConfig(N, x0, y0, seed=seed, replications=replications)
        ensemble = simulate.simulate_ensemble(config, t_grid, threads=threads)
        mean_x = ensemble.x.mean(axis=0)
        mean_y = ensemble.y.mean(axis=0)
        error = max(np.max(np.abs(mean_x - fluid_x)), np.max(np.abs(mean_y - fluid_y)))
        stderr = max(max(_mean_stderr(col) for col in ensemble.x.T), max(_mean_stderr(col) for col in ensemble.y.T))
        report.add_rung(N, error, tolerance=tolerance if i == len(n_ladder) - 1 else None, stderr=stderr)
        report.add_plot_rows(pd.DataFrame({'scale': N, 'x': t_grid, 'empirical': mean_x, 'limit': fluid_x}))

    mean_tau = float(ensemble.tau.mean())
    report.add_check('mean_ruin_time', mean_tau, extinction, extinction_tolerance)
    report.details['fluid_extinction_time'] = extinction
    report.details['mean_ruin_time'] = mean_tau
    if x0 > y0:
        t_late = 0.5 * (extinction + max(t_grid[-1], 0.0))
        report.details['fluid_weaker_at_%.4g' % t_late] = float(simulate.fluid_solution(y0, T, t_late))
    return report


# ****************************************************************************************
def verify_winner_degenerate(x0=0.4, y0=0.6, n_ladder=(100, 200, 500, 1000, 2000), tolerance=0.01, rung_slack=0):
    """Exact win probabilities p(N x0, N y0) approach 1{x0 < y0} along a ladder of N."""
    if x0 == y0:
        raise ExperimentConfigException("Degenerate winner experiment needs x0 != y0")
    n_ladder = _check_ladder('n_ladder', n_ladder)
    limit = 1.0 if x0 < y0 else 0.0
    report = ConvergenceReport('winner', config=dict(x0=x0, y0=y0, n_ladder=n_ladder, tolerance=tolerance),
                               rung_slack=rung_slack)
    pairs = [simulate.initial_fortunes(N, x0, y0) for N in n_ladder]
    anchor = (960, 1040)
    values = exact.evaluate_pairs(pairs + [(n, m) for m, n in pairs] + [anchor])
    direct = values[:len(pairs)]
    mirrored = values[len(pairs):2 * len(pairs)]
    for i, N in enumerate(n_ladder):
        report.add_rung(N, abs(direct[i] - limit), tolerance=tolerance if i == len(n_ladder) - 1 else None)
    report.add_plot_rows(pd.DataFrame({'scale': n_ladder, 'x': [m for m, _ in pairs], 'empirical': direct,
                                       'limit': limit}))
    report.add_check('complementarity', float(np.max(np.abs(direct + mirrored - 1.0))), 0.0, 1e-12,
                     relation='at_most')
    report.add_check('reference_anchor_960_1040', float(values[-1]), 0.999, exact.TABLE_ONE_TOLERANCE)
    report.details['pairs'] = [dict(N=N, m=m, n=n, p=float(p), p_mirrored=float(q))
                               for N, (m, n), p, q in zip(n_ladder, pairs, direct, mirrored)]
    return report


# ****************************************************************************************
def verify_diffusion(T=1.0, z0=0.0, n_ladder=(100, 1000, 10000), t_grid=(0.25, 0.5, 0.75), replications=2000,
                     seed=simulate.DEFAULT_SEED, tolerance=0.05, moment_sigmas=4.0,
                     rung_slack=0, threads=1):
    """Compares the law of z^N_t with the Gaussian limit at each grid time.

    The metric at each N is the largest KS distance over the grid. Means and variances at the last rung are
    checked within moment_sigmas standard errors, and the last rung is also compared with exact draws of
    the limiting process by a two-sample KS test (reported in details).
    """
    n_ladder = _check_ladder('n_ladder', n_ladder)
    t_grid = _check_t_grid(t_grid, T - 0.1)
    grid = np.concatenate([[0.0], t_grid])
    report = ConvergenceReport('diffusion', config=dict(T=T, z0=z0, n_ladder=n_ladder, t_grid=t_grid.tolist(),
                                                        replications=replications, tolerance=tolerance),
                               seed=seed, rung_slack=rung_slack)
    ensemble = None
    for i, N in enumerate(n_ladder):
        config = simulate.SimConfig.critical(N, T, z0, seed=seed, replications=replications)
        config.ensure_critical()
        ensemble = simulate.simulate_ensemble(config, grid, threads=threads)
        z = ensemble.z
        mu = simulate.diffusion_mean(T, config.realized_z0, t_grid)
        sigma = np.sqrt(simulate.diffusion_variance(T, t_grid))
        distances = [ks_distance(z[:, j + 1], lambda v, a=mu[j], s=sigma[j]: normal_cdf((v - a) / s))
                     for j in range(t_grid.size)]
        report.add_rung(N, max(distances), tolerance=tolerance if i == len(n_ladder) - 1 else None,
                        stderr=1.0 / math.sqrt(replications))
        report.details['ks_by_time_N%d' % N] = distances

    config = ensemble.config
    z = ensemble.z
    report.add_check('initial_value', float(np.max(np.abs(z[:, 0] - config.realized_z0))), 0.0, 1e-12,
                     relation='at_most')
    mu = simulate.diffusion_mean(T, config.realized_z0, t_grid)
    var = simulate.diffusion_variance(T, t_grid)
    for j, t in enumerate(t_grid):
        sample = z[:, j + 1]
        report.add_check('mean_t%g' % t, float(sample.mean()), float(mu[j]),
                         moment_sigmas * math.sqrt(var[j] / replications))
        report.add_check('variance_t%g' % t, float(sample.var(ddof=1)), float(var[j]),
                         moment_sigmas * var[j] * math.sqrt(2.0 / (replications - 1)))
        x = np.linspace(mu[j] - 3 * math.sqrt(var[j]), mu[j] + 3 * math.sqrt(var[j]), 25)
        report.add_plot_rows(pd.DataFrame({'scale': config.N, 't': t, 'x': x, 'empirical': EmpiricalCDF(sample)(x),
                                           'limit': normal_cdf((x - mu[j]) / math.sqrt(var[j]))}))
    add_residual_time_check(report, T - ensemble.tau, config, moment_sigmas)

    oracle = simulate.sample_diffusion(T, config.realized_z0, t_grid, simulate.replication_rng(seed, 2**32),
                                       replications=replications)
    comparison = []
    for j, t in enumerate(t_grid):
        result = stats.ks_2samp(z[:, j + 1], oracle.z[:, j])
        comparison.append(dict(t=float(t), statistic=float(result.statistic), pvalue=float(result.pvalue)))
    report.details['exact_diffusion_ks'] = comparison
    return report


# ****************************************************************************************
def verify_residual_law(T=1.0, z0=0.0, n_ladder=(100, 1000, 10000), replications=2000, seed=simulate.DEFAULT_SEED,
                        tolerance=0.05, moment_tolerance=0.1, mean_sigmas=5.0,
                        moment_orders=(1, 2, 4), mode='shortcut', rung_slack=0, threads=1):
    """Checks that R_N = 3 S_N^4 / T^3 approaches the noncentral chi-square law with one degree of freedom and
    noncentrality 3 z0^2 / T.

    Args:
        mode (str): 'shortcut', 'per_event', or 'both'; with 'both' the ladder uses the shortcut and the last
        rung is repeated with the per-event clock under another seed for a two-sample KS comparison of tau_N

    Returns:
        (ConvergenceReport)
    """
    if mode not in simulate.RESIDUAL_MODES + ('both',):
        raise ExperimentConfigException("Unknown residual mode %s" % mode)
    n_ladder = _check_ladder('n_ladder', n_ladder)
    sample_mode = 'shortcut' if mode == 'both' else mode
    report = ConvergenceReport('residual', config=dict(T=T, z0=z0, n_ladder=n_ladder, replications=replications,
                                                       tolerance=tolerance, moment_tolerance=moment_tolerance,
                                                       mode=mode), seed=seed, rung_slack=rung_slack)
    sample = None
    law = None
    for i, N in enumerate(n_ladder):
        config = simulate.SimConfig.critical(N, T, z0, seed=seed, replications=replications)
        sample = simulate.sample_residuals(config, threads=threads, mode=sample_mode)
        law = specfn.NoncentralChiSq1(3.0 * config.realized_z0 ** 2 / T)
        distance = ks_distance(sample.r_values, law.cdf, lower=0.0)
        report.add_rung(N, distance, tolerance=tolerance if i == len(n_ladder) - 1 else None,
                        stderr=1.0 / math.sqrt(replications))
        report.details['ks_proxy_N%d' % N] = ks_distance(sample.r_hat_values, law.cdf, lower=0.0)
        report.details['mean_residual_N%d' % N] = float(sample.residual_values.mean())
        report.details['scaled_mean_residual_N%d' % N] = N ** -0.25 * sample.moment(1)

    config = sample.config
    r_mean = float(sample.r_values.mean())
    r_sd = math.sqrt(law.variance)
    report.add_check('mean_r', r_mean, law.mean, mean_sigmas * r_sd / math.sqrt(replications))
    for q in moment_orders:
        target = specfn.s_moment(specfn.SMomentSpec(T, config.realized_z0, q))
        value = sample.moment(q)
        report.add_check('relative_moment_error_q%g' % q, abs(value - target) / target, 0.0, moment_tolerance,
                         relation='at_most')
        report.details['moment_q%g' % q] = dict(empirical=value, limit=target, proxy=sample.moment(q, proxy=True))
    add_residual_time_check(report, sample.residual_values, config, mean_sigmas)
    report.add_check('all_r_positive', float(np.min(sample.r_values)), 0.0, 0.0, relation='at_least')
    gap = sample.proxy_gap_second_moment()
    report.details['proxy_gap_second_moment'] = gap
    report.details['proxy_gap_bound'] = simulate.proxy_gap_bound(T, config.N, replications)
    report.details['negative_s_count'] = int(np.sum(sample.s_values < 0))

    if mode == 'both':
        other = simulate.sample_residuals(config.replace(seed=(seed + 1) % 2**64), threads=threads, mode='per_event')
        result = stats.ks_2samp(sample.tau_values, other.tau_values)
        critical = KS_TWO_SAMPLE_COEF * math.sqrt(2.0 / replications)
        report.add_check('shortcut_vs_per_event_ks', float(result.statistic), 0.0, critical, relation='at_most')
        report.details['shortcut_vs_per_event_pvalue'] = float(result.pvalue)

    x = np.linspace(0.0, max(8.0, float(np.quantile(sample.r_values, 0.99))), 41)
    report.add_plot_rows(pd.DataFrame({'scale': config.N, 'x': x, 'empirical': EmpiricalCDF(sample.r_values)(x),
                                       'limit': law.cdf(x)}))
    report.residual_sample = sample
    return report


# ****************************************************************************************
def optional_stopping_values(sample, rho, proxy=False):
    """Per-game values a^rho h_rho(N a / 2) with a = T - tau_N (or T - K/N) clipped at 0."""
    config = sample.config
    if proxy:
        a = config.T - sample.event_counts / config.N
    else:
        a = sample.residual_values
    a = np.clip(a, 0.0, None)
    values = np.zeros(a.size)
    pos = a > 0
    log_h = specfn.log_h_rho(rho, config.N * a[pos] / 2.0)
    values[pos] = np.exp(rho * np.log(a[pos]) + log_h)
    return values


def verify_optional_stopping(T=1.0, z0=0.0, rho_list=(3.0,), n_ladder=(1000, 10000), replications=2000,
                             seed=simulate.DEFAULT_SEED, tolerance=0.1, rung_slack=0, threads=1):
    """Checks E[(T - tau_N)^rho h_rho(N (T - tau_N) / 2)] against T^rho h_rho(z0^2 / 2T).

    The metric at each N is the largest relative error over rho_list.
    """
    rho_list = [float(r) for r in rho_list]
    if not rho_list or any(r <= 0 for r in rho_list):
        raise ExperimentConfigException("rho values must be positive, got %s" % str(rho_list))
    for rho in rho_list:
        if rho <= 2.25:
            log.warning("rho=%g is outside the range rho > 9/4 where the error bounds hold" % rho)
    n_ladder = _check_ladder('n_ladder', n_ladder)
    report = ConvergenceReport('stopping', config=dict(T=T, z0=z0, rho_list=rho_list, n_ladder=n_ladder,
                                                       replications=replications, tolerance=tolerance),
                               seed=seed, rung_slack=rung_slack)
    for i, N in enumerate(n_ladder):
        config = simulate.SimConfig.critical(N, T, z0, seed=seed, replications=replications)
        sample = simulate.sample_residuals(config, threads=threads)
        errors = []
        stderrs = []
        for rho in rho_list:
            rhs = T ** rho * specfn.h_rho(rho, config.realized_z0 ** 2 / (2.0 * T))
            values = optional_stopping_values(sample, rho)
            proxy_values = optional_stopping_values(sample, rho, proxy=True)
            errors.append(abs(values.mean() - rhs) / rhs)
            stderrs.append(_mean_stderr(values) / rhs)
            report.details['rho%g_N%d' % (rho, N)] = dict(lhs=float(values.mean()), rhs=float(rhs),
                                                           lhs_proxy=float(proxy_values.mean()))
        worst = int(np.argmax(errors))
        report.add_rung(N, errors[worst], tolerance=tolerance if i == len(n_ladder) - 1 else None,
                        stderr=stderrs[worst])
        report.add_plot_rows(pd.DataFrame({'scale': N, 'x': rho_list, 'empirical': [
            report.details['rho%g_N%d' % (rho, N)]['lhs'] for rho in rho_list], 'limit': [
            report.details['rho%g_N%d' % (rho, N)]['rhs'] for rho in rho_list]}))

    for rho in rho_list:
        # h_rho(u^2/2) = g_rho(u), the even solution of the g equation.
        u = z0 / math.sqrt(T)
        closed = specfn.h_rho(rho, u * u / 2.0)
        series = specfn.g_rho_series(rho, u)
        report.add_check('right_side_series_rho%g' % rho, abs(closed - series) / abs(closed), 0.0, 1e-9,
                         relation='at_most')
    return report


# ****************************************************************************************
def verify_eulerian(m_max=12):
    """Wraps the exact Eulerian relation check into a report."""
    result = exact.verify_eulerian_relation(m_max)
    report = ConvergenceReport('eulerian', config=dict(m_max=m_max))
    report.add_check('matching_conventions', len(result.matching), 1, 0, relation='at_least')
    mismatches = sum(1 for row in result.rows if row['eulerian'] is None or row['difference'] != row['eulerian'])
    report.add_check('mismatched_pairs', mismatches, 0, 0, relation='at_most')
    report.details.update(result.to_dict())
    return report


def verify_inequality(draws=100000, seed=simulate.DEFAULT_SEED, tolerance=1e-9, fortune_max=10000, a_max=10.0,
                      ratio_max=10.0):
    """Evaluates the attrition inequality at random integer fortunes x >= y >= 1 and exponents with
    b/a > ln 2 / ln 1.5."""
    rng = simulate.replication_rng(seed, 0)
    first = rng.integers(1, fortune_max + 1, size=draws)
    second = rng.integers(1, fortune_max + 1, size=draws)
    x = np.maximum(first, second)
    y = np.minimum(first, second)
    a = rng.uniform(1.0, a_max, size=draws)
    ratio = rng.uniform(np.nextafter(simulate.INEQUALITY_RATIO, np.inf), ratio_max, size=draws)
    b = a * ratio
    gap = simulate.inequality_gap(x, y, a, b)
    report = ConvergenceReport('inequality', config=dict(draws=draws, tolerance=tolerance, fortune_max=fortune_max,
                                                         a_max=a_max, ratio_max=ratio_max), seed=seed)
    worst = int(np.argmin(gap))
    report.add_check('min_relative_gap', float(gap[worst]), 0.0, tolerance, relation='at_least')
    report.details['worst_draw'] = dict(x=int(x[worst]), y=int(y[worst]), a=float(a[worst]), b=float(b[worst]))
    report.details['negative_count'] = int(np.sum(gap < -tolerance))
    return report


def submartingale_limit(T, z0, t, a=1.0, b=4.0):
    """(T-t)^a E|z_t|^4 under the Gaussian limit; only defined for b = 4."""
    mu = simulate.diffusion_mean(T, z0, t)
    var = simulate.diffusion_variance(T, t)
    return (T - np.asarray(t)) ** a * (mu ** 4 + 6 * mu ** 2 * var + 3 * var ** 2)


def verify_submartingale(N=2000, T=1.0, z0=0.0, t_grid=None, replications=2000, seed=simulate.DEFAULT_SEED,
                         a=1.0, b=4.0, sigmas=2.0, threads=1):
    """Checks that the ensemble mean of (x+y)^a |z|^b does not decrease along the grid.

    Each step is compared through the paired differences of the same games, allowing `sigmas` standard errors.
    """
    t_grid = _check_t_grid(np.linspace(0.0, 0.95 * T, 20) if t_grid is None else t_grid, T)
    if b / a <= simulate.INEQUALITY_RATIO:
        log.warning("b/a=%g does not exceed ln2/ln1.5; the trend is not guaranteed" % (b / a))
    config = simulate.SimConfig.critical(N, T, z0, seed=seed, replications=replications)
    ensemble = simulate.simulate_ensemble(config, t_grid, threads=threads)
    H = simulate.submartingale_statistic(ensemble.x, ensemble.y, ensemble.z, a, b)
    report = ConvergenceReport('submartingale', config=dict(N=N, T=T, z0=z0, t_grid=t_grid.tolist(),
                                                            replications=replications, a=a, b=b, sigmas=sigmas),
                               seed=seed)
    steps = np.diff(H, axis=1)
    standardized = []
    for j in range(steps.shape[1]):
        mean = steps[:, j].mean()
        se = _mean_stderr(steps[:, j])
        standardized.append(mean / se if se > 0 else (0.0 if mean >= 0 else -np.inf))
    report.add_check('min_standardized_step', float(np.min(standardized)), 0.0, sigmas, relation='at_least')
    report.details['standardized_steps'] = standardized
    limit = submartingale_limit(T, config.realized_z0, t_grid, a) if b == 4 else np.full(t_grid.size, np.nan)
    report.add_plot_rows(pd.DataFrame({'scale': N, 'x': t_grid, 'empirical': H.mean(axis=0), 'limit': limit}))
    return report


def verify_proxy_bound(T=1.0, z0=0.0, n_ladder=(100, 1000, 10000), replications=2000, seed=simulate.DEFAULT_SEED,
                       rung_slack=0, threads=1):
    """E|S_hat_N - S_N|^2 stays below T/sqrt(N) (widened for sampling error) at every N."""
    n_ladder = _check_ladder('n_ladder', n_ladder)
    report = ConvergenceReport('proxy-bound', config=dict(T=T, z0=z0, n_ladder=n_ladder,
                                                          replications=replications),
                               seed=seed, rung_slack=rung_slack)
    for N in n_ladder:
        config = simulate.SimConfig.critical(N, T, z0, seed=seed, replications=replications)
        sample = simulate.sample_residuals(config, threads=threads)
        squared = (sample.s_hat_values - sample.s_values) ** 2
        bound = simulate.proxy_gap_bound(T, N, replications)
        report.add_rung(N, float(squared.mean()), tolerance=bound, stderr=_mean_stderr(squared))
    report.add_plot_rows(pd.DataFrame({'scale': n_ladder, 'x': n_ladder,
                                       'empirical': [r['metric'] for r in report.rungs],
                                       'limit': [T / math.sqrt(N) for N in n_ladder]}))
    return report


GF_POINTS = ((0.1, 0.2), (0.3, 0.5), (0.45, 0.25), (0.6, 0.1), (0.05, 0.7), (0.2, 0.05), (0.5, 0.4), (0.7, 0.3),
             (0.15, 0.35), (0.8, 0.6))
# (lam, alpha, x) with alpha = -1/2 and x = -3w for w in {0, 0.5}.
LAGUERRE_GF_POINTS = ((0.3, -0.5, 0.0), (0.3, -0.5, -1.5))


def verify_generating_function(points=GF_POINTS, tolerance=1e-8,
                               laguerre_points=LAGUERRE_GF_POINTS, laguerre_order=30):
    """Compares closed generating functions with their truncated series: the win probabilities, and the
    generalized Laguerre polynomials as (lam, alpha, x) points."""
    report = ConvergenceReport('generating-function', config=dict(points=[list(p) for p in points],
                                                                  tolerance=tolerance,
                                                                  laguerre_points=[list(p) for p in laguerre_points],
                                                                  laguerre_order=laguerre_order))
    order = max(exact.series_order(x, y) for x, y in points)
    table = exact.p_recurrence(order)
    for x, y in points:
        closed = exact.generating_function_closed(x, y)
        series = exact.generating_function_series(x, y, table=table)
        report.add_check('p_series_%g_%g' % (x, y), abs(closed - series), 0.0, tolerance, relation='at_most')
    for lam, alpha, x in laguerre_points:
        series = sum(lam ** m * specfn.laguerre(m, alpha, x) for m in range(laguerre_order + 1))
        closed = float(specfn.laguerre_generating_closed(lam, alpha, x))
        report.add_check('laguerre_series_%g_%g_%g' % (lam, alpha, x), abs(closed - series) / abs(closed), 0.0,
                         tolerance, relation='at_most')
    return report


def verify_table(tolerance=exact.TABLE_ONE_TOLERANCE):
    """Recomputes the reference table and compares it with the published values."""
    frame = exact.reference_table()
    report = ConvergenceReport('table', config=dict(tolerance=tolerance))
    for row in frame.itertuples(index=False):
        total, m, n, p, one_minus_p, q, one_minus_q, p_pub, q_pub = row
        report.add_check('p_%d_%d' % (m, n), float(p), float(p_pub), tolerance)
        report.add_check('q_%d_%d' % (m, n), float(q), float(q_pub), tolerance)
        report.add_check('p_complement_%d_%d' % (m, n), float(p + one_minus_p), 1.0, 1e-12)
        report.add_check('q_complement_%d_%d' % (m, n), float(q + one_minus_q), 1.0, 1e-12)
    report.details['table'] = frame.to_dict(orient='records')
    return report


EXPERIMENTS = collections.OrderedDict([
    ('clt-proportional', verify_clt_proportional),
    ('clt-simple', verify_clt_simple),
    ('fluid', verify_fluid),
    ('winner', verify_winner_degenerate),
    ('diffusion', verify_diffusion),
    ('residual', verify_residual_law),
    ('stopping', verify_optional_stopping),
    ('eulerian', verify_eulerian),
    ('inequality', verify_inequality),
    ('submartingale', verify_submartingale),
    ('proxy-bound', verify_proxy_bound),
    ('generating-function', verify_generating_function),
    ('table', verify_table),
])
