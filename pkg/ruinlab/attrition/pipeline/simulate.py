"""
Monte Carlo simulators for the war of ruins: the embedded jump chain, the Poisson-clock war in macroscopic
time, the simple random war and an exact sampler of the limiting Gaussian diffusion.

Replications are grouped in blocks of REPLICATION_BLOCK. Block b draws all of its random numbers from a Philox
stream keyed by (seed, b), and replication i owns one row of every array its block draws, so results do not
depend on how many processes run the blocks.
"""

import collections
import logging
import math

import numpy as np
import pandas as pd

from ruinlab.attrition.pipeline import exact
from ruinlab.attrition.utils import output_utils
from ruinlab.attrition.utils import parallel_utils

log = logging.getLogger('RUINLAB')

DEFAULT_SEED = 20190731
REPLICATION_BLOCK = 250
# Half-width of the critical band, in units of sqrt(N)*(|z0|+1).
CRITICAL_BAND = 2.0
CHAIN_KINDS = exact.TABLE_KINDS
RESIDUAL_MODES = ('shortcut', 'per_event')
INEQUALITY_RATIO = math.log(2.0) / math.log(1.5)


class SimulationConfigException(ValueError):
    pass


GameOutcome = collections.namedtuple('GameOutcome', ['ruined', 'event_count'])
RuinFrequency = collections.namedtuple('RuinFrequency', ['frequency', 'stderr', 'replications'])
ChainResult = collections.namedtuple('ChainResult', ['a_ruined', 'event_counts', 'x', 'y', 'path'])


# ****************************************************************************************
def _check_seed(seed):
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < 2**64:
        raise SimulationConfigException("Seed must be an integer in [0, 2**64), got %s" % str(seed))
    return int(seed)


def _check_positive_int(name, value):
    if isinstance(value, bool) or int(value) != value or int(value) < 1:
        raise SimulationConfigException("%s must be a positive integer, got %s" % (name, str(value)))
    return int(value)


def replication_rng(seed, block):
    """Returns the generator owned by replication block `block` under `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_check_seed(seed), spawn_key=(block,))))


def replication_blocks(replications):
    """Splits range(replications) into (block, start, count) triples."""
    replications = _check_positive_int('replications', replications)
    return [(block, start, min(REPLICATION_BLOCK, replications - start))
            for block, start in enumerate(range(0, replications, REPLICATION_BLOCK))]


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ****************************************************************************************
def run_embedded_chain(m0, n0, uniforms, kind='proportional', record_path=False):
    """Runs one embedded jump chain per row of `uniforms` until one army is ruined.

    At event k a row with fortunes (X, Y) loses a unit of A when U_k*(X+Y) < Y (proportional war) or when
    U_k < 1/2 (simple war), and a unit of B otherwise. Rows that are already finished ignore their remaining
    uniforms.

    Args:
        m0, n0 (int): initial units of A and B

        uniforms (np.array): shape (replications, m0+n0-1); m0+n0-1 events always suffice

        kind (str): 'proportional' or 'simple'

        record_path (bool): also return the units of A after every event

    Returns:
        (ChainResult): a_ruined (bool array), event_counts, final x and y, and when requested path, an int32
        array of shape (replications, m0+n0) whose column j holds the units of A after j events, frozen
        after ruin.
    """
    if kind not in CHAIN_KINDS:
        raise SimulationConfigException("Unknown chain kind %s" % kind)
    m0, n0 = exact._check_pair(m0, n0)
    uniforms = np.atleast_2d(uniforms)
    reps, width = uniforms.shape
    total = m0 + n0
    if width < total - 1:
        raise SimulationConfigException("Need %d uniforms per replication, got %d" % (total - 1, width))

    x = np.full(reps, m0, dtype=np.int64)
    y = np.full(reps, n0, dtype=np.int64)
    events = np.zeros(reps, dtype=np.int64)
    active = (x > 0) & (y > 0)
    path = None
    if record_path:
        path = np.empty((reps, width + 1), dtype=np.int32)
        path[:, 0] = m0
    for k in range(width):
        if not active.any():
            if record_path:
                path[:, k + 1:] = x[:, np.newaxis]
            break
        # Every active row has seen exactly k events, so X+Y = total-k there.
        if kind == 'proportional':
            a_loses = uniforms[:, k] * (total - k) < y
        else:
            a_loses = uniforms[:, k] < 0.5
        a_loses &= active
        b_loses = active & ~a_loses
        x -= a_loses.astype(np.int64)
        y -= b_loses.astype(np.int64)
        events += active.astype(np.int64)
        if record_path:
            path[:, k + 1] = x
        active &= (x > 0) & (y > 0)
    return ChainResult(x == 0, events, x, y, path)


# ****************************************************************************************
def _play(m, n, rng, kind):
    state = exact.RuinState(m, n)
    if state.total == 0:
        raise exact.RuinDomainException("m + n must be at least 1")
    if not state.in_progress:
        return GameOutcome(state.ruined(), 0)
    rng = _as_generator(rng)
    chain = run_embedded_chain(state.m, state.n, rng.random((1, state.total - 1)), kind)
    return GameOutcome('A' if chain.a_ruined[0] else 'B', int(chain.event_counts[0]))


def play_discrete(m, n, rng):
    """Plays one proportional war from (m, n); returns the ruined army and the number of events."""
    return _play(m, n, rng, 'proportional')


def play_simple(m, n, rng):
    """Plays one simple random war from (m, n)."""
    return _play(m, n, rng, 'simple')


def _ruin_block(m, n, kind, seed, block, count):
    rng = replication_rng(seed, block)
    return run_embedded_chain(m, n, rng.random((count, m + n - 1)), kind).a_ruined


def estimate_ruin_probability(m, n, replications, seed=DEFAULT_SEED, kind='proportional', threads=1):
    """Estimates the probability that A is ruined first by the frequency over independent games.

    Returns:
        (RuinFrequency): frequency, its binomial standard error and the number of replications
    """
    state = exact.RuinState(m, n)
    if state.total == 0:
        raise exact.RuinDomainException("m + n must be at least 1")
    replications = _check_positive_int('replications', replications)
    if not state.in_progress:
        freq = 1.0 if state.ruined() == 'A' else 0.0
        return RuinFrequency(freq, 0.0, replications)
    inputs = [(state.m, state.n, kind, seed, block, count) for block, _, count in replication_blocks(replications)]
    ruined = np.concatenate(parallel_utils.run_blocks(_ruin_block, inputs, threads))
    freq = float(ruined.mean())
    stderr = math.sqrt(freq * (1.0 - freq) / replications)
    log.debug("Ruin frequency for (%d, %d), %s: %.6f +/- %.6f" % (state.m, state.n, kind, freq, stderr))
    return RuinFrequency(freq, stderr, replications)


# ****************************************************************************************
def initial_fortunes(N, x0, y0, z0=0.0):
    """Rounds the macroscopic configuration to integer initial units (m0, n0).

    With z0 = 0 both fortunes are rounded half to even. Otherwise the total rint(N*(x0+y0)) is kept and the
    difference N*(x0-y0) + sqrt(N)*z0 is rounded to the nearest integer of the same parity as the total.
    """
    if z0 == 0:
        m0 = int(np.rint(N * x0))
        n0 = int(np.rint(N * y0))
    else:
        total = int(np.rint(N * (x0 + y0)))
        parity = total % 2
        target = N * (x0 - y0) + math.sqrt(N) * z0
        diff = 2 * int(np.rint((target - parity) / 2.0)) + parity
        m0 = (total + diff) // 2
        n0 = (total - diff) // 2
    if m0 < 1 or n0 < 1:
        raise SimulationConfigException("Configuration N=%d, x0=%g, y0=%g, z0=%g rounds to (%d, %d) units; both "
                                        "armies need at least one unit" % (N, x0, y0, z0, m0, n0))
    return m0, n0


class SimConfig(object):
    """Configuration of a scaled war of ruins.

    Attributes:
        N (int): scale; one unit of fortune is 1/N

        x0, y0 (float): macroscopic initial fortunes

        z0 (float): requested scaled initial difference sqrt(N)*(x0-y0) offset

        seed (int): root of the per-block random streams

        replications (int): number of independent games

        m0, n0 (int): initial units after rounding
    """

    def __init__(self, N, x0, y0, z0=0.0, seed=DEFAULT_SEED, replications=1):
        self.N = _check_positive_int('N', N)
        for name, value in (('x0', x0), ('y0', y0), ('z0', z0)):
            if not np.isfinite(value):
                raise SimulationConfigException("%s must be finite, got %s" % (name, str(value)))
        if x0 < 0 or y0 < 0 or x0 + y0 <= 0:
            raise SimulationConfigException("Fortunes must be non-negative with a positive total, got (%g, %g)"
                                            % (x0, y0))
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.z0 = float(z0)
        self.seed = _check_seed(seed)
        self.replications = _check_positive_int('replications', replications)
        self.m0, self.n0 = initial_fortunes(self.N, self.x0, self.y0, self.z0)

    @classmethod
    def critical(cls, N, T=1.0, z0=0.0, seed=DEFAULT_SEED, replications=1):
        """Critical configuration x0 = y0 = T/2 with the scaled offset z0."""
        return cls(N, T / 2.0, T / 2.0, z0=z0, seed=seed, replications=replications)

    @property
    def T(self):
        return self.x0 + self.y0

    @property
    def T_N(self):
        return (self.m0 + self.n0) / self.N

    @property
    def realized_z0(self):
        return (self.m0 - self.n0) / math.sqrt(self.N)

    def is_critical(self):
        return abs(self.N * self.x0 - self.N * self.y0) <= CRITICAL_BAND * math.sqrt(self.N) * (abs(self.z0) + 1.0)

    def ensure_critical(self):
        if not self.is_critical():
            raise SimulationConfigException("Configuration x0=%g, y0=%g at N=%d is not critical"
                                            % (self.x0, self.y0, self.N))

    def replace(self, **changes):
        """Returns a copy with some fields changed."""
        params = dict(N=self.N, x0=self.x0, y0=self.y0, z0=self.z0, seed=self.seed,
                      replications=self.replications)
        params.update(changes)
        return SimConfig(**params)

    def to_dict(self):
        return collections.OrderedDict([
            ('N', self.N), ('x0', self.x0), ('y0', self.y0), ('z0', self.z0), ('T', self.T),
            ('seed', self.seed), ('replications', self.replications), ('m0', self.m0), ('n0', self.n0),
            ('realized_z0', self.realized_z0)])

    def __repr__(self):
        return "SimConfig(N=%d, x0=%g, y0=%g, z0=%g, seed=%d, replications=%d)" % (
            self.N, self.x0, self.y0, self.z0, self.seed, self.replications)


# ****************************************************************************************
def _check_grid(grid, upper=None):
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.ndim != 1 or not np.all(np.isfinite(grid)):
        raise SimulationConfigException("Time grid must be a finite 1-d sequence")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise SimulationConfigException("Time grid must be non-negative and non-decreasing")
    if upper is not None and grid.size and grid[-1] >= upper:
        raise SimulationConfigException("Time grid must stay below %g, got %g" % (upper, grid[-1]))
    return grid


class ScaledTrajectory(object):
    """One game of the Poisson-clock war in macroscopic units.

    Attributes:
        N (int): scale

        times (np.array): increasing sample times, ending with the ruin time tau_N

        x, y, z (np.array): fortunes and scaled difference sqrt(N)*(x-y) at the sample times

        event_count (int): number of events until ruin

        tau_N (float): ruin time

        tau_hat (float): event-count proxy event_count/N

        ruined (str): 'A' or 'B'

        horizon (float): last requested grid time that was reached

        truncated (bool): whether grid times beyond tau_N were dropped
    """

    def __init__(self, N, times, units_a, units_b, event_count, tau_N, horizon=0.0, truncated=False):
        self.N = N
        self.times = np.asarray(times, dtype=float)
        self.units_a = np.asarray(units_a, dtype=np.int64)
        self.units_b = np.asarray(units_b, dtype=np.int64)
        self.event_count = int(event_count)
        self.tau_N = float(tau_N)
        self.horizon = float(horizon)
        self.truncated = bool(truncated)

    @property
    def x(self):
        return self.units_a / self.N

    @property
    def y(self):
        return self.units_b / self.N

    @property
    def z(self):
        return (self.units_a - self.units_b) / math.sqrt(self.N)

    @property
    def tau_hat(self):
        return self.event_count / self.N

    @property
    def ruined(self):
        return 'A' if self.units_a[-1] == 0 else 'B'

    def to_frame(self):
        return pd.DataFrame({'t': self.times, 'x': self.x, 'y': self.y, 'z': self.z}, columns=['t', 'x', 'y', 'z'])


def play_continuous(config, sample_grid=None, rng=None):
    """Simulates one game of the Poisson-clock war.

    Without a grid the ruin time is drawn as Gamma(K, 1)/N, the law of K unit exponential waiting times.
    With a grid the K waiting times are drawn one by one and the fortunes are read off the cumulative clock.
    The uniforms that drive the chain are drawn first in both cases, so the chain is the same.

    Args:
        config (SimConfig): configuration; only the first replication is simulated

        sample_grid (sequence): optional macroscopic sample times; times beyond tau_N are dropped

        rng (np.random.Generator): defaults to the stream of block 0 under config.seed

    Returns:
        (ScaledTrajectory)
    """
    rng = replication_rng(config.seed, 0) if rng is None else _as_generator(rng)
    total = config.m0 + config.n0
    N = config.N
    record = sample_grid is not None
    chain = run_embedded_chain(config.m0, config.n0, rng.random((1, total - 1)), record_path=record)
    K = int(chain.event_counts[0])
    x_end, y_end = int(chain.x[0]), int(chain.y[0])
    if not record:
        tau = rng.standard_gamma(K) / N
        return ScaledTrajectory(N, [0.0, tau], [config.m0, x_end], [config.n0, y_end], K, tau)

    grid = _check_grid(sample_grid)
    clock = np.cumsum(rng.standard_exponential(total - 1)[:K]) / N
    tau = clock[-1]
    kept = grid[grid < tau]
    counts = np.searchsorted(clock, kept, side='right')
    units_a = chain.path[0, counts].astype(np.int64)
    units_b = (total - counts) - units_a
    truncated = kept.size < grid.size
    if truncated:
        log.debug("Grid truncated at tau_N=%.6f; %d of %d times kept" % (tau, kept.size, grid.size))
    horizon = kept[-1] if kept.size else 0.0
    times = np.append(kept, tau)
    return ScaledTrajectory(N, times, np.append(units_a, x_end), np.append(units_b, y_end), K, tau,
                            horizon=horizon, truncated=truncated)


def save_trajectory_csv(trajectory, path, config):
    sidecar = config.to_dict()
    sidecar.update(event_count=trajectory.event_count, tau_N=trajectory.tau_N, tau_hat=trajectory.tau_hat,
                   ruined=trajectory.ruined, horizon=trajectory.horizon, truncated=trajectory.truncated)
    output_utils.write_csv(trajectory.to_frame(), path, sidecar=sidecar)


# ****************************************************************************************
def _ensemble_block(m0, n0, N, seed, block, count, grid):
    rng = replication_rng(seed, block)
    total = m0 + n0
    chain = run_embedded_chain(m0, n0, rng.random((count, total - 1)), record_path=True)
    clock = np.cumsum(rng.standard_exponential((count, total - 1)), axis=1) / N
    rows = np.arange(count)
    tau = clock[rows, chain.event_counts - 1]
    counts = np.empty((count, grid.size), dtype=np.int64)
    for i in rows:
        counts[i] = np.searchsorted(clock[i, :chain.event_counts[i]], grid, side='right')
    units_a = chain.path[rows[:, np.newaxis], counts].astype(np.int64)
    units_b = (total - counts) - units_a
    return units_a, units_b, tau, chain.event_counts, chain.a_ruined


class EnsembleSample(object):
    """Stopped fortunes of every replication on a common time grid.

    Attributes:
        config (SimConfig)

        grid (np.array): sample times

        units_a, units_b (np.array): integer fortunes, shape (replications, len(grid)); values after ruin
        are frozen at the ruin state

        tau (np.array): ruin times

        event_counts (np.array): events until ruin

        a_ruined (np.array): whether A was ruined
    """

    def __init__(self, config, grid, units_a, units_b, tau, event_counts, a_ruined):
        self.config = config
        self.grid = grid
        self.units_a = units_a
        self.units_b = units_b
        self.tau = tau
        self.event_counts = event_counts
        self.a_ruined = a_ruined

    @property
    def x(self):
        return self.units_a / self.config.N

    @property
    def y(self):
        return self.units_b / self.config.N

    @property
    def z(self):
        return (self.units_a - self.units_b) / math.sqrt(self.config.N)

    @property
    def replications(self):
        return self.tau.size


def simulate_ensemble(config, grid, threads=1):
    """Simulates config.replications games and records x, y and z at the grid times.

    Returns:
        (EnsembleSample)
    """
    grid = _check_grid(grid)
    inputs = [(config.m0, config.n0, config.N, config.seed, block, count, grid)
              for block, _, count in replication_blocks(config.replications)]
    log.info("Simulating %d games at N=%d on %d grid times" % (config.replications, config.N, grid.size))
    results = parallel_utils.run_blocks(_ensemble_block, inputs, threads)
    parts = [np.concatenate(part, axis=0) for part in zip(*results)]
    return EnsembleSample(config, grid, *parts)


# ****************************************************************************************
def _residual_block(m0, n0, N, seed, block, count, mode):
    rng = replication_rng(seed, block)
    total = m0 + n0
    chain = run_embedded_chain(m0, n0, rng.random((count, total - 1)))
    K = chain.event_counts
    if mode == 'per_event':
        clock = np.cumsum(rng.standard_exponential((count, total - 1)), axis=1)
        tau = clock[np.arange(count), K - 1] / N
    else:
        tau = rng.standard_gamma(K.astype(float)) / N
    return tau, K


class ResidualSampleSet(object):
    """Rescaled residual times of critical games.

    S_N = N**(1/4)*(T - tau_N) and its proxy S_hat_N = N**(1/4)*(T - K/N); R_N = 3*S_N**4/T**3.

    Attributes:
        config (SimConfig)

        mode (str): 'shortcut' or 'per_event' ruin-time sampling

        tau_values, event_counts (np.array): raw ruin times and event counts
    """

    def __init__(self, config, tau_values, event_counts, mode='shortcut'):
        self.config = config
        self.mode = mode
        self.tau_values = np.asarray(tau_values, dtype=float)
        self.event_counts = np.asarray(event_counts, dtype=np.int64)

    @property
    def scale(self):
        return self.config.N ** 0.25

    @property
    def s_values(self):
        return self.scale * (self.config.T - self.tau_values)

    @property
    def s_hat_values(self):
        return self.scale * (self.config.T - self.event_counts / self.config.N)

    @property
    def r_values(self):
        return 3.0 * self.s_values ** 4 / self.config.T ** 3

    @property
    def r_hat_values(self):
        return 3.0 * self.s_hat_values ** 4 / self.config.T ** 3

    @property
    def residual_values(self):
        """Unscaled residual times T - tau_N."""
        return self.config.T - self.tau_values

    def moment(self, q, proxy=False):
        """Empirical E|S_N|**q, or E|S_hat_N|**q with proxy=True."""
        values = self.s_hat_values if proxy else self.s_values
        return float(np.mean(np.abs(values) ** q))

    def proxy_gap_second_moment(self):
        return float(np.mean((self.s_hat_values - self.s_values) ** 2))

    def to_frame(self):
        return pd.DataFrame({'rep': np.arange(self.tau_values.size), 's': self.s_values,
                             's_hat': self.s_hat_values, 'r': self.r_values}, columns=['rep', 's', 's_hat', 'r'])


def sample_residuals(config, threads=1, mode='shortcut'):
    """Samples the rescaled residual time of config.replications critical games.

    Args:
        config (SimConfig): must be critical

        threads (int): worker processes

        mode (str): 'shortcut' draws tau_N as Gamma(K, 1)/N, 'per_event' sums K exponentials

    Returns:
        (ResidualSampleSet)
    """
    if mode not in RESIDUAL_MODES:
        raise SimulationConfigException("Unknown residual mode %s; expected one of %s" % (mode, str(RESIDUAL_MODES)))
    config.ensure_critical()
    inputs = [(config.m0, config.n0, config.N, config.seed, block, count, mode)
              for block, _, count in replication_blocks(config.replications)]
    log.info("Sampling %d residual times at N=%d (%s)" % (config.replications, config.N, mode))
    results = parallel_utils.run_blocks(_residual_block, inputs, threads)
    tau = np.concatenate([part[0] for part in results])
    counts = np.concatenate([part[1] for part in results])
    return ResidualSampleSet(config, tau, counts, mode=mode)


def save_residuals_csv(sample, path):
    sidecar = sample.config.to_dict()
    sidecar['mode'] = sample.mode
    output_utils.write_csv(sample.to_frame(), path, sidecar=sidecar)


def proxy_gap_bound(T, N, reps):
    """Upper bound T/sqrt(N) on E|S_hat_N - S_N|**2, widened by 3/sqrt(reps) for sampling error."""
    return T / math.sqrt(N) * (1.0 + 3.0 / math.sqrt(reps))


# ****************************************************************************************
class DiffusionPath(object):
    """Sample paths of the limiting Gaussian process.

    Attributes:
        times (np.array): grid times, all below T

        z (np.array): values, shape (replications, len(times))
    """

    def __init__(self, T, z0, times, z):
        self.T = T
        self.z0 = z0
        self.times = times
        self.z = z

    def mean(self):
        return self.z.mean(axis=0)

    def variance(self):
        return self.z.var(axis=0, ddof=1) if self.z.shape[0] > 1 else np.zeros(self.times.size)


def diffusion_variance(T, t):
    """Variance of the limit at time t: (1-t/T)**-2 * T/3 * (1-(1-t/T)**3)."""
    left = 1.0 - np.asarray(t, dtype=float) / T
    return T / 3.0 * (1.0 - left ** 3) / left ** 2


def diffusion_mean(T, z0, t):
    return z0 / (1.0 - np.asarray(t, dtype=float) / T)


def sample_diffusion(T, z0, grid, rng, replications=1):
    """Samples the limit z_t = (1-t/T)**-1 * (z0 + int_0^t (1-s/T) dW_s) exactly on a grid.

    Args:
        T (float): total fortune; the process blows up at T

        z0 (float): initial value

        grid (sequence): non-decreasing times in [0, T)

        rng (np.random.Generator): random stream

        replications (int): number of independent paths

    Returns:
        (DiffusionPath)
    """
    if not T > 0:
        raise SimulationConfigException("T must be positive, got %s" % str(T))
    grid = _check_grid(grid, upper=T)
    replications = _check_positive_int('replications', replications)
    rng = _as_generator(rng)
    left = 1.0 - grid / T
    cumulative = T / 3.0 * (1.0 - left ** 3)
    increments = np.diff(cumulative, prepend=0.0)
    steps = rng.standard_normal((replications, grid.size)) * np.sqrt(increments)
    z = (z0 + np.cumsum(steps, axis=1)) / left
    return DiffusionPath(T, z0, grid, z)


# ****************************************************************************************
def fluid_solution(u0, T, t):
    """Deterministic limit of a fortune started at u0: u0*T/(T-t) + ((T-t)**2 - T**2)/(2*(T-t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t >= T):
        raise SimulationConfigException("Fluid solution is defined for t < T=%g" % T)
    left = T - t
    return u0 * T / left + 0.5 * (left ** 2 - T ** 2) / left


def fluid_extinction_time(x0, y0):
    """Time at which the weaker fluid fortune reaches zero; T itself when x0 = y0."""
    T = x0 + y0
    return T - math.sqrt(abs(x0 ** 2 - y0 ** 2))


def inequality_gap(x, y, a, b):
    """Relative gap 1 - (x+y)**a (x-y)**b / ((x+y-1)**a (x-y+1)**b), computed in log space.

    Args:
        x, y (int or np.array): fortunes with x >= y >= 1

        a, b (float or np.array): positive exponents

    Returns:
        (float or np.array): the gap; 1 when x = y
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(y < 1) or np.any(x < y):
        raise SimulationConfigException("Inequality needs x >= y >= 1")
    total = x + y
    diff = x - y
    with np.errstate(divide='ignore'):
        log_ratio = a * np.log1p(1.0 / (total - 1.0)) - b * np.log1p(1.0 / diff)
    gap = -np.expm1(log_ratio)
    return float(gap) if gap.ndim == 0 else gap


def submartingale_statistic(x, y, z, a=1.0, b=4.0):
    """H = (x+y)**a * |z|**b."""
    return (np.asarray(x) + np.asarray(y)) ** a * np.abs(z) ** b
