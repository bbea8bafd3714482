"""
Exact win probabilities for the war of ruins (proportional rounds) and the simple random war (fair rounds),
plus the identities used to certify them: the alternating-sum formula, the generating function and the
relation to the Eulerian numbers.

p(m, n) is the probability that army A, holding m units, is ruined before army B, holding n units, when each
round is lost by A with probability n/(m+n). q(m, n) is the same probability when every round is a fair coin.
"""

import logging
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pandas as pd
from scipy.special import gammaln, logsumexp

log = logging.getLogger('RUINLAB')

# Dense tables keep every anti-diagonal; 6000 totals take about 145 MB of float64.
MAX_TABLE_TOTAL = 6000
# Rolling evaluation only keeps two diagonals.
MAX_ROLLING_TOTAL = 50000
# Beyond this total the alternating sum is better left to the recurrence.
MAX_EXPLICIT_TOTAL = 60
GF_SINGULAR_BAND = 1e-6
TABLE_KINDS = ('proportional', 'simple')
VALUE_NAMES = dict(proportional='p', simple='q')

# (m+n, m, n) rows of the published reference table with the published (p, q) values, rounded to 3 decimals.
TABLE_ONE = [
    (20, 8, 12, 0.939, 0.820), (20, 9, 11, 0.779, 0.676), (20, 10, 10, 0.5, 0.5),
    (100, 45, 55, 0.958, 0.843), (100, 48, 52, 0.755, 0.656), (100, 50, 50, 0.5, 0.5),
    (200, 90, 110, 0.993, 0.922), (200, 95, 105, 0.890, 0.761), (200, 100, 100, 0.5, 0.5),
    (1000, 480, 520, 0.986, 0.897), (1000, 490, 510, 0.863, 0.737), (1000, 500, 500, 0.5, 0.5),
    (2000, 960, 1040, 0.999, 0.963), (2000, 980, 1020, 0.939, 0.815), (2000, 1000, 1000, 0.5, 0.5),
]
# p(48, 52) = 0.75551 is published as 0.755, so the bound is a little over half a unit in the last digit.
TABLE_ONE_TOLERANCE = 6e-4


class RuinDomainException(ValueError):
    pass

class ExactRegimeException(ValueError):
    pass

class TableSizeException(ValueError):
    pass

class SingularityProximityException(ValueError):
    pass


def _check_kind(kind):
    if kind not in TABLE_KINDS:
        raise RuinDomainException("Unknown table kind %s; expected one of %s" % (kind, str(TABLE_KINDS)))


def _check_pair(m, n, allow_empty=False):
    """Validates a pair of unit counts and returns it as python ints."""
    if isinstance(m, bool) or isinstance(n, bool) or int(m) != m or int(n) != n:
        raise RuinDomainException("Unit counts must be integers, got (%s, %s)" % (str(m), str(n)))
    m, n = int(m), int(n)
    if m < 0 or n < 0:
        raise RuinDomainException("Unit counts must be non-negative, got (%d, %d)" % (m, n))
    if m + n == 0 and not allow_empty:
        raise RuinDomainException("m + n must be at least 1")
    return m, n


# ****************************************************************************************
class RuinState(object):
    """Unit counts held by the two armies.

    Attributes:
        m (int): units of army A

        n (int): units of army B
    """

    def __init__(self, m, n):
        self.m, self.n = _check_pair(m, n, allow_empty=True)

    @property
    def total(self):
        return self.m + self.n

    @property
    def in_progress(self):
        return self.m > 0 and self.n > 0

    def ruined(self):
        """Returns 'A' or 'B' for a finished game, None while the game is in progress or for the empty state."""
        if self.m == 0 and self.n > 0:
            return 'A'
        if self.n == 0 and self.m > 0:
            return 'B'
        return None

    def __eq__(self, other):
        return isinstance(other, RuinState) and (self.m, self.n) == (other.m, other.n)

    def __hash__(self):
        return hash((self.m, self.n))

    def __repr__(self):
        return "RuinState(m=%d, n=%d)" % (self.m, self.n)


# ****************************************************************************************
def next_diagonal(prev, total, kind='proportional'):
    """Computes the anti-diagonal m+n = total from the diagonal m+n = total-1.

    Diagonals are indexed by m. Interior entries are convex combinations of two entries of the previous
    diagonal, so rounding errors cannot grow.

    Args:
        prev (np.array): values on the previous diagonal, length total

        total (int): m+n of the diagonal to compute, >= 1

        kind (str): 'proportional' or 'simple'

    Returns:
        (np.array): values on the new diagonal, length total+1
    """
    cur = np.empty(total + 1)
    cur[0] = 1.0
    cur[total] = 0.0
    if total > 1:
        m = np.arange(1, total)
        if kind == 'proportional':
            cur[1:total] = ((total - m) * prev[:total - 1] + m * prev[1:total]) / total
        else:
            cur[1:total] = 0.5 * (prev[:total - 1] + prev[1:total])
    return cur


class ProbabilityTable(object):
    """Dense triangular table of exact win probabilities for all m+n <= max_total.

    p(0, 0) is stored as 1, the value used by the generating function.

    Attributes:
        max_total (int): largest m+n stored

        kind (str): 'proportional' for p(m, n), 'simple' for q(m, n)
    """

    def __init__(self, max_total, kind='proportional'):
        _check_kind(kind)
        if isinstance(max_total, bool) or int(max_total) != max_total or max_total < 1:
            raise TableSizeException("max_total must be a positive integer, got %s" % str(max_total))
        if max_total > MAX_TABLE_TOTAL:
            raise TableSizeException("max_total %d exceeds the dense table capacity %d; use evaluate_pairs "
                                     "for isolated values" % (max_total, MAX_TABLE_TOTAL))
        self.max_total = int(max_total)
        self.kind = kind
        diagonals = [np.ones(1)]
        for total in range(1, self.max_total + 1):
            diagonals.append(next_diagonal(diagonals[-1], total, kind))
        for diag in diagonals:
            diag.setflags(write=False)
        self._diagonals = diagonals
        log.debug("Filled %s table up to m+n=%d" % (kind, self.max_total))

    @property
    def value_name(self):
        return VALUE_NAMES[self.kind]

    def diagonal(self, total):
        """Read-only view of the values with m+n = total, indexed by m."""
        if total < 0 or total > self.max_total:
            raise TableSizeException("m+n=%d outside the table (max_total=%d)" % (total, self.max_total))
        return self._diagonals[total]

    def value(self, m, n):
        m, n = _check_pair(m, n, allow_empty=True)
        return float(self.diagonal(m + n)[m])

    def __call__(self, m, n):
        return self.value(m, n)

    def __getitem__(self, pair):
        return self.value(*pair)

    def __contains__(self, pair):
        m, n = pair
        return m >= 0 and n >= 0 and m + n <= self.max_total

    def symmetry_defect(self):
        """Largest |v(m,n) + v(n,m) - 1| over m, n >= 1."""
        worst = 0.0
        for total in range(2, self.max_total + 1):
            diag = self._diagonals[total][1:total]
            worst = max(worst, float(np.max(np.abs(diag + diag[::-1] - 1.0))))
        return worst

    def series(self, x, y, order=None):
        """Truncated generating function sum over m+n <= order of v(m,n) x^m y^n."""
        order = self.max_total if order is None else order
        if order > self.max_total:
            raise TableSizeException("Series order %d exceeds the table (max_total=%d)" % (order, self.max_total))
        total_sum = 0.0
        for total in range(order + 1):
            m = np.arange(total + 1)
            total_sum += float(np.sum(self._diagonals[total] * x ** m * y ** (total - m)))
        return total_sum

    def to_frame(self):
        """Data frame with columns m, n and p (or q) for all 1 <= m+n <= max_total."""
        frames = []
        for total in range(1, self.max_total + 1):
            m = np.arange(total + 1)
            frames.append(pd.DataFrame({'m': m, 'n': total - m, self.value_name: self._diagonals[total]}))
        return pd.concat(frames, ignore_index=True)

    def save_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.15g', lineterminator='\n')
        log.info("Wrote %s table with max_total=%d to %s" % (self.kind, self.max_total, path))


def p_recurrence(max_total):
    """Fills the table of p(m, n) for m+n <= max_total by dynamic programming along anti-diagonals.

    Args:
        max_total (int): largest m+n to compute, 1 <= max_total <= MAX_TABLE_TOTAL

    Returns:
        (ProbabilityTable): table of kind 'proportional'

    Raises:
        TableSizeException: max_total is 0 or exceeds the dense table capacity
    """
    return ProbabilityTable(max_total, 'proportional')


def q_recurrence(max_total):
    """Same as p_recurrence for the simple random war, q(m,n) = q(m-1,n)/2 + q(m,n-1)/2."""
    return ProbabilityTable(max_total, 'simple')


def evaluate_pairs(pairs, kind='proportional'):
    """Evaluates p (or q) at arbitrary pairs keeping only two anti-diagonals in memory.

    Args:
        pairs (list): (m, n) pairs with m+n >= 1

        kind (str): 'proportional' or 'simple'

    Returns:
        (np.array): values in the order of pairs
    """
    _check_kind(kind)
    pairs = [_check_pair(m, n) for m, n in pairs]
    if len(pairs) == 0:
        return np.empty(0)
    top = max(m + n for m, n in pairs)
    if top > MAX_ROLLING_TOTAL:
        raise TableSizeException("m+n=%d exceeds the rolling evaluation limit %d" % (top, MAX_ROLLING_TOTAL))
    wanted = defaultdict(list)
    for idx, (m, n) in enumerate(pairs):
        wanted[m + n].append((idx, m))
    results = np.empty(len(pairs))
    diag = np.ones(1)
    for total in range(1, top + 1):
        diag = next_diagonal(diag, total, kind)
        for idx, m in wanted.get(total, ()):
            results[idx] = diag[m]
    return results


# ****************************************************************************************
def p_explicit(m, n):
    """Exact rational value of p(m, n) from the alternating sum

        p(m,n) = sum_{j=0}^{n} (-1)^j / j! * (n-j)^{m+n} / (m+n-j)!

    Multiplying by (m+n)! turns every term into an integer, so the sum is carried out in integers and
    divided once.

    Args:
        m (int): units of army A

        n (int): units of army B

    Returns:
        (Fraction): p(m, n) in lowest terms

    Raises:
        RuinDomainException: m+n = 0 or negative counts

        ExactRegimeException: m+n > MAX_EXPLICIT_TOTAL
    """
    m, n = _check_pair(m, n)
    total = m + n
    if total > MAX_EXPLICIT_TOTAL:
        raise ExactRegimeException("m+n=%d is beyond the exact regime (<= %d); use p_recurrence instead"
                                   % (total, MAX_EXPLICIT_TOTAL))
    numerator = 0
    for j in range(n + 1):
        term = math.comb(total, j) * (n - j) ** total
        numerator += -term if j % 2 else term
    return Fraction(numerator, math.factorial(total))


def q_explicit(m, n):
    """q(m, n) = sum_{k=0}^{n-1} 2^{-(m+k)} C(m+k-1, k), summed in log space.

    Args:
        m (int): units of army A

        n (int): units of army B

    Returns:
        (float): probability that A is ruined first in the simple random war
    """
    m, n = _check_pair(m, n)
    if m == 0:
        return 1.0
    if n == 0:
        return 0.0
    k = np.arange(n)
    log_terms = -(m + k) * np.log(2.0) + gammaln(m + k) - gammaln(k + 1) - gammaln(m)
    return float(min(1.0, np.exp(logsumexp(log_terms))))


# ****************************************************************************************
def generating_function_closed(x, y):
    """Closed form of sum_{m,n>=0} p(m,n) x^m y^n with p(0,0)=1:

        x e^{-x} / (x e^{-x} - y e^{-y}) + y / ((1-y)(y-x))

    Raises:
        RuinDomainException: x or y outside [0, 1)

        SingularityProximityException: |x - y| <= GF_SINGULAR_BAND
    """
    for v in (x, y):
        if not np.isfinite(v) or v < 0.0 or v >= 1.0:
            raise RuinDomainException("Generating function arguments must lie in [0, 1), got (%s, %s)"
                                      % (str(x), str(y)))
    if abs(x - y) <= GF_SINGULAR_BAND:
        raise SingularityProximityException("|x - y| = %g is within %g of the removable singularity x = y"
                                            % (abs(x - y), GF_SINGULAR_BAND))
    ex = x * math.exp(-x)
    ey = y * math.exp(-y)
    return ex / (ex - ey) + y / ((1.0 - y) * (y - x))


def series_order(x, y, tol=1e-12):
    """Smallest truncation order K with sum_{s>K} (s+1) r^s < tol, r = max(x, y)."""
    r = max(x, y)
    if r <= 0.0:
        return 0
    for order in range(MAX_TABLE_TOTAL + 1):
        tail = r ** (order + 1) * ((order + 2) - (order + 1) * r) / (1.0 - r) ** 2
        if tail < tol:
            return order
    raise TableSizeException("No truncation order within the table capacity reaches tolerance %g at r=%g"
                             % (tol, r))


def generating_function_series(x, y, order=None, table=None):
    """Truncated double sum of p(m,n) x^m y^n over m+n <= order.

    Args:
        x, y (float): arguments in [0, 1)

        order (int): truncation order; chosen by series_order when None

        table (ProbabilityTable): reused when given and large enough

    Returns:
        (float): partial sum
    """
    if order is None:
        order = series_order(x, y)
    if order == 0:
        return 1.0
    if table is None or table.max_total < order or table.kind != 'proportional':
        table = p_recurrence(order)
    return table.series(x, y, order)


# ****************************************************************************************
def eulerian_triangle(n_max):
    """Eulerian numbers A(n, k), 0 <= k < n, for n <= n_max, in exact integers.

    Uses A(n,k) = (k+1) A(n-1,k) + (n-k) A(n-1,k-1) with A(0,0) = 1, so row 3 is [1, 4, 1].

    Returns:
        (list): rows[n] is the list of A(n, k)
    """
    rows = [[1]]
    for n in range(1, n_max + 1):
        prev = rows[-1]
        row = []
        for k in range(n):
            same = prev[k] if k < len(prev) else 0
            lower = prev[k - 1] if 0 <= k - 1 < len(prev) else 0
            row.append((k + 1) * same + (n - k) * lower)
        rows.append(row)
    return rows


# Candidate ways of indexing the Eulerian triangle by (m, n), tried in this order.
EULERIAN_CONVENTIONS = [
    ('k=n-1', lambda m, n: n - 1),
    ('k=n', lambda m, n: n),
    ('k=m-1', lambda m, n: m - 1),
    ('k=m', lambda m, n: m),
]


class EulerianReport(object):
    """Outcome of checking (m+n)! (p(m,n) - p(m+1,n-1)) = A(m+n, k(m,n)).

    Attributes:
        m_max (int): largest m+n checked

        matching (list): names of all conventions that hold on the whole range

        convention (str): the first matching convention, None if none matches

        rows (list): dicts with m, n, total, difference and eulerian (under the chosen convention)
    """

    def __init__(self, m_max, matching, rows):
        self.m_max = m_max
        self.matching = matching
        self.convention = matching[0] if matching else None
        self.rows = rows

    @property
    def passed(self):
        return self.convention is not None

    def to_dict(self):
        return dict(m_max=self.m_max, matching=self.matching, convention=self.convention,
                    passed=self.passed, rows=self.rows)


def verify_eulerian_relation(m_max):
    """Checks that (m+n)! (p(m,n) - p(m+1,n-1)) is an Eulerian number under one fixed index convention,
    for all m > 0, n >= 1, m+n <= m_max, using exact rationals.

    Args:
        m_max (int): 2 <= m_max <= 20

    Returns:
        (EulerianReport): matching conventions and the per-pair values
    """
    if isinstance(m_max, bool) or int(m_max) != m_max or not 2 <= m_max <= 20:
        raise RuinDomainException("m_max must be an integer in [2, 20], got %s" % str(m_max))
    m_max = int(m_max)
    triangle = eulerian_triangle(m_max)

    def eulerian(total, k):
        row = triangle[total]
        return row[k] if 0 <= k < len(row) else 0

    differences = {}
    for total in range(2, m_max + 1):
        for m in range(1, total):
            n = total - m
            diff = math.factorial(total) * (p_explicit(m, n) - p_explicit(m + 1, n - 1))
            if diff.denominator != 1:
                log.warning("Difference at (%d, %d) is not an integer: %s" % (m, n, str(diff)))
            differences[(m, n)] = diff

    matching = []
    for name, index in EULERIAN_CONVENTIONS:
        if all(diff == eulerian(m + n, index(m, n)) for (m, n), diff in differences.items()):
            matching.append(name)

    rows = []
    chosen = dict(EULERIAN_CONVENTIONS).get(matching[0]) if matching else None
    for (m, n), diff in sorted(differences.items(), key=lambda item: (sum(item[0]), item[0][0])):
        row = dict(m=m, n=n, total=m + n, difference=int(diff) if diff.denominator == 1 else float(diff))
        row['eulerian'] = eulerian(m + n, chosen(m, n)) if chosen is not None else None
        rows.append(row)
    if matching:
        log.info("Eulerian relation holds up to m+n=%d with convention %s" % (m_max, matching[0]))
    else:
        log.warning("No Eulerian index convention matches up to m+n=%d" % m_max)
    return EulerianReport(m_max, matching, rows)


# ****************************************************************************************
def reference_table(p_table=None, q_table=None):
    """Recomputes the published reference table.

    Args:
        p_table, q_table (ProbabilityTable): reused when given and large enough

    Returns:
        (pd.DataFrame): columns total, m, n, p, 1-p, q, 1-q, p_published, q_published
    """
    top = max(row[0] for row in TABLE_ONE)
    if p_table is None or p_table.max_total < top:
        p_table = p_recurrence(top)
    if q_table is None or q_table.max_total < top:
        q_table = q_recurrence(top)
    records = []
    for total, m, n, p_pub, q_pub in TABLE_ONE:
        p = p_table(m, n)
        q = q_table(m, n)
        records.append({'total': total, 'm': m, 'n': n, 'p': p, '1-p': p_table(n, m), 'q': q,
                        '1-q': q_table(n, m), 'p_published': p_pub, 'q_published': q_pub})
    return pd.DataFrame.from_records(records, columns=['total', 'm', 'n', 'p', '1-p', 'q', '1-q',
                                                       'p_published', 'q_published'])


def table_one_rows():
    """Returns the (m+n, m, n) rows of the reference table."""
    return [(total, m, n) for total, m, n, _, _ in TABLE_ONE]
