"""
Special functions behind the residual-time law: the Kummer function M(a, b, z), the h_rho family
h_rho(x) = M(-rho/3, 1/2, -3x) and its power-series counterpart g_rho, generalized Laguerre polynomials,
the non-central chi-squared law with one degree of freedom, and the exact moments of the limiting
residual S.

Series are summed in log-scaled form so that arguments up to Z_MAX do not overflow before the final
exponentiation. Functions accept python scalars or numpy arrays for their real argument and return the
same shape.
"""

import logging
import math

import numpy as np
from scipy.special import gammainc, gammaln, pdtrc

log = logging.getLogger('RUINLAB')

Z_MAX = 5000.0
MAX_TERMS = 10000
SERIES_RTOL = 1e-16
CONSECUTIVE_SMALL = 3
G_SERIES_TOL = 1e-12
G_CANCELLATION_TOL = 1e-9
NCX2_TAIL = 1e-12


class SpecialFunctionDomainException(ValueError):
    pass

class SeriesPrecisionException(ArithmeticError):
    pass


def _is_nonpositive_integer(v):
    return v <= 0 and float(v).is_integer()


def _check_finite(**kwargs):
    for name, value in kwargs.items():
        if not np.all(np.isfinite(value)):
            raise SpecialFunctionDomainException("%s must be finite, got %s" % (name, str(value)))


def _shape_like(template, values):
    """Returns a python float for scalar input, a float64 array otherwise."""
    values = np.asarray(values, dtype=float)
    if np.ndim(template) == 0:
        return float(values.reshape(-1)[0])
    return values


# ****************************************************************************************
def _log_series(a, b, z):
    """Sums sum_n a^(n) / (b^(n) n!) z^n for an array z, returning (sign, log|sum|) in extended precision.

    The running sum is kept as acc * exp(scale) so that terms as large as exp(Z_MAX) are representable.
    """
    z = np.asarray(z, dtype=np.longdouble)
    log_term = np.zeros(z.shape, dtype=np.longdouble)
    sign_term = np.ones(z.shape, dtype=np.longdouble)
    scale = np.zeros(z.shape, dtype=np.longdouble)
    acc = np.ones(z.shape, dtype=np.longdouble)
    small = np.zeros(z.shape, dtype=int)
    active = np.ones(z.shape, dtype=bool)
    terminating = _is_nonpositive_integer(a)
    n_terms = int(-a) if terminating else MAX_TERMS
    a = np.longdouble(a)
    b = np.longdouble(b)

    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        for n in range(n_terms):
            if not np.any(active):
                break
            ratio = (a + n) / ((b + n) * (n + 1)) * z
            log_term = np.where(active, log_term + np.log(np.abs(ratio)), log_term)
            sign_term = np.where(active, sign_term * np.sign(ratio), sign_term)
            new_scale = np.where(active, np.maximum(scale, log_term), scale)
            contribution = np.where(active & (sign_term != 0), sign_term * np.exp(log_term - new_scale), 0)
            acc = np.where(active, acc * np.exp(scale - new_scale) + contribution, acc)
            scale = new_scale
            if terminating:
                continue
            relative = np.abs(contribution) / np.abs(acc)
            is_small = ((relative < SERIES_RTOL) & (np.abs(ratio) < 1)) | (ratio == 0)
            small = np.where(is_small, small + 1, 0)
            active &= small < CONSECUTIVE_SMALL
        else:
            if not terminating and np.any(active):
                raise SeriesPrecisionException("Kummer series for a=%g, b=%g did not converge within %d terms"
                                               % (float(a), float(b), MAX_TERMS))
        log_abs = scale + np.log(np.abs(acc))
    return np.sign(acc), log_abs


def _log_kummer_ext(a, b, z):
    """Extended-precision core of log_kummer_m; z is a 1-d array."""
    if _is_nonpositive_integer(a):
        return _log_series(a, b, z)
    z = np.asarray(z, dtype=np.longdouble)
    sign = np.empty(z.shape, dtype=np.longdouble)
    log_abs = np.empty(z.shape, dtype=np.longdouble)
    neg = z < 0
    if np.any(~neg):
        sign[~neg], log_abs[~neg] = _log_series(a, b, z[~neg])
    if np.any(neg):
        s, l = _log_series(b - a, b, -z[neg])
        sign[neg] = s
        log_abs[neg] = l + z[neg]
    return sign, log_abs


def _check_kummer(a, b, z):
    _check_finite(a=a, b=b, z=z)
    if _is_nonpositive_integer(b):
        raise SpecialFunctionDomainException("b=%g is a non-positive integer (pole of the series)" % b)
    if np.any(np.abs(np.asarray(z, dtype=float)) > Z_MAX):
        raise SpecialFunctionDomainException("|z| exceeds Z_MAX=%g" % Z_MAX)


def log_kummer_m(a, b, z):
    """Sign and log-magnitude of the Kummer function M(a, b, z).

    Negative arguments go through the Kummer transformation M(a, b, z) = e^z M(b-a, b, -z) first, so the
    series terms share one sign whenever b-a > 0. When a (or b-a after the transformation) is a
    non-positive integer the series is a polynomial and is summed exactly.

    Args:
        a (float): numerator parameter

        b (float): denominator parameter, not a non-positive integer

        z (float or np.array): argument, |z| <= Z_MAX

    Returns:
        (tuple): sign and log|M(a, b, z)|, each shaped like z

    Raises:
        SpecialFunctionDomainException: non-finite input, b a pole, or |z| > Z_MAX

        SeriesPrecisionException: the series did not converge within MAX_TERMS terms
    """
    _check_kummer(a, b, z)
    sign, log_abs = _log_kummer_ext(a, b, np.atleast_1d(np.asarray(z, dtype=float)))
    return _shape_like(z, sign), _shape_like(z, log_abs)


def kummer_m(a, b, z):
    """Kummer confluent hypergeometric function M(a, b, z) = 1F1(a; b; z).

    See log_kummer_m for the evaluation strategy. Values beyond the double range overflow to inf.
    """
    _check_kummer(a, b, z)
    sign, log_abs = _log_kummer_ext(a, b, np.atleast_1d(np.asarray(z, dtype=float)))
    with np.errstate(over='ignore'):
        return _shape_like(z, sign * np.exp(log_abs))


# ****************************************************************************************
def _check_rho_x(rho, x):
    _check_finite(rho=rho, x=x)
    if rho < 0:
        raise SpecialFunctionDomainException("rho must be non-negative, got %g" % rho)
    if np.any(np.asarray(x) < 0):
        raise SpecialFunctionDomainException("x must be non-negative")


def _rho_is_terminating(rho):
    third = rho / 3.0
    return abs(third - round(third)) < 1e-12


def _log_h_ext(rho, x):
    """log h_rho on a 1-d extended-precision array x >= 0."""
    x = np.asarray(x, dtype=np.longdouble)
    if _rho_is_terminating(rho):
        _, log_abs = _log_series(-float(round(rho / 3.0)), 0.5, -3 * x)
        return log_abs
    _, log_abs = _log_series(0.5 + rho / 3.0, 0.5, 3 * x)
    return log_abs - 3 * x


def log_h_rho(rho, x):
    """log h_rho(x), h_rho(x) = M(-rho/3, 1/2, -3x).

    When rho/3 is an integer h_rho is a polynomial with positive coefficients. Otherwise the
    alternating series is replaced by e^{-3x} M(1/2 + rho/3, 1/2, 3x), whose terms are all positive.
    """
    _check_rho_x(rho, x)
    if np.any(3.0 * np.asarray(x, dtype=float) > Z_MAX):
        raise SpecialFunctionDomainException("3x exceeds Z_MAX=%g" % Z_MAX)
    return _shape_like(x, _log_h_ext(rho, np.atleast_1d(np.asarray(x, dtype=float))))


def h_rho(rho, x):
    """h_rho(x) = M(-rho/3, 1/2, -3x) for rho >= 0 and x >= 0.

    Solves x h'' + (1/2 + 3x) h' - rho h = 0 with h(0) = 1 and grows like x^{rho/3}.

    Args:
        rho (float): parameter, >= 0

        x (float or np.array): argument(s), >= 0

    Returns:
        (float or np.array): h_rho(x)
    """
    with np.errstate(over='ignore'):
        return _shape_like(x, np.exp(log_h_rho(rho, x)))


def h_rho_derivative(rho, x, k=1):
    """k-th derivative of h_rho for k in {0, 1, 2}, from M'(a, b, z) = (a/b) M(a+1, b+1, z).

    Args:
        rho (float): parameter, >= 0

        x (float or np.array): argument(s), >= 0

        k (int): derivative order

    Returns:
        (float or np.array): value of the derivative
    """
    if k == 0:
        return h_rho(rho, x)
    if k not in (1, 2):
        raise SpecialFunctionDomainException("Only derivatives of order 0, 1 and 2 are supported, got %s" % str(k))
    _check_rho_x(rho, x)
    a = -rho / 3.0
    b = 0.5
    coef = 1.0
    for j in range(k):
        coef *= -3.0 * (a + j) / (b + j)
    if coef == 0.0:
        return _shape_like(x, np.zeros(np.shape(x)))
    return _shape_like(x, coef * np.asarray(kummer_m(a + k, b + k, -3.0 * np.asarray(x, dtype=float))))


class HRhoFunction(object):
    """Evaluator for h_rho at a fixed rho.

    Attributes:
        rho (float): parameter, >= 0
    """

    def __init__(self, rho):
        _check_rho_x(rho, 0.0)
        self.rho = float(rho)

    def __call__(self, x):
        return h_rho(self.rho, x)

    def log(self, x):
        return log_h_rho(self.rho, x)

    def derivative(self, x, k=1):
        return h_rho_derivative(self.rho, x, k)

    def ode_residual(self, x, step=1e-4):
        """x h'' + (1/2 + 3x) h' - rho h with central finite differences, evaluated in extended precision.

        x must be at least step.
        """
        _check_rho_x(self.rho, np.asarray(x, dtype=float) - step)
        x_ext = np.atleast_1d(np.asarray(x, dtype=np.longdouble))
        step = np.longdouble(step)
        up = np.exp(_log_h_ext(self.rho, x_ext + step))
        mid = np.exp(_log_h_ext(self.rho, x_ext))
        down = np.exp(_log_h_ext(self.rho, x_ext - step))
        d1 = (up - down) / (2 * step)
        d2 = (up - 2 * mid + down) / step ** 2
        return _shape_like(x, x_ext * d2 + (np.longdouble(0.5) + 3 * x_ext) * d1 - self.rho * mid)

    def __repr__(self):
        return "HRhoFunction(rho=%g)" % self.rho


# ****************************************************************************************
def g_rho_series(rho, u, a0=1.0, a1=0.0):
    """Power-series solution of g'' + 3u g' - 2 rho g = 0 with g(0) = a0, g'(0) = a1.

    Coefficients follow a_{k+2} = (2 rho - 3k) / ((k+2)(k+1)) a_k. Once k >= 2 rho / 3 and
    3u^2 / (k+3) <= 1/2, later terms shrink at least geometrically by 1/2, so the tail is bounded by twice
    the next pair of terms; summation stops when that bound drops below 1e-12 max(1, |sum|).

    The terms alternate and peak near exp(3u^2/2), so accuracy is lost for |u| beyond about 3.5; that
    loss is reported instead of returned.

    Args:
        rho (float): parameter

        u (float): argument

        a0 (float): g(0)

        a1 (float): g'(0)

    Returns:
        (float): g(u)

    Raises:
        SeriesPrecisionException: truncation cap reached, or cancellation above 1e-9 relative
    """
    _check_finite(rho=rho, u=u, a0=a0, a1=a1)
    ak, ak1 = float(a0), float(a1)
    u2 = u * u
    uk = 1.0
    total = 0.0
    largest = 0.0
    for k in range(0, MAX_TERMS, 2):
        t_even = ak * uk
        t_odd = ak1 * uk * u
        total += t_even + t_odd
        largest = max(largest, abs(t_even), abs(t_odd))
        ak = (2.0 * rho - 3.0 * k) / ((k + 2.0) * (k + 1.0)) * ak
        ak1 = (2.0 * rho - 3.0 * (k + 1)) / ((k + 3.0) * (k + 2.0)) * ak1
        uk *= u2
        tail = 2.0 * (abs(ak * uk) + abs(ak1 * uk * u))
        geometric = k + 2 >= 2.0 * rho / 3.0 and 3.0 * u2 / (k + 3.0) <= 0.5
        if geometric and tail < G_SERIES_TOL * max(1.0, abs(total)):
            break
    else:
        raise SeriesPrecisionException("g_rho series for rho=%g, u=%g did not converge within %d terms"
                                       % (rho, u, MAX_TERMS))
    if largest * 1e-16 > G_CANCELLATION_TOL * max(abs(total), 1e-300):
        raise SeriesPrecisionException("g_rho series for rho=%g, u=%g loses more than %g relative accuracy to "
                                       "cancellation" % (rho, u, G_CANCELLATION_TOL))
    return total


# ****************************************************************************************
def laguerre(m, alpha, x):
    """Generalized Laguerre polynomial L_m^(alpha)(x) by the three-term recurrence

        (k+1) L_{k+1} = (2k + 1 + alpha - x) L_k - (k + alpha) L_{k-1}

    Args:
        m (int): degree, >= 0

        alpha (float): parameter

        x (float or np.array): argument(s)

    Returns:
        (float or np.array): L_m^(alpha)(x)
    """
    _check_finite(alpha=alpha, x=x)
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise SpecialFunctionDomainException("Laguerre degree must be a non-negative integer, got %s" % str(m))
    x_arr = np.asarray(x, dtype=float)
    prev = np.ones(x_arr.shape)
    if m == 0:
        return _shape_like(x, prev)
    cur = 1.0 + alpha - x_arr
    for k in range(1, int(m)):
        prev, cur = cur, ((2 * k + 1 + alpha - x_arr) * cur - (k + alpha) * prev) / (k + 1)
    return _shape_like(x, cur)


def laguerre_binomial(m, alpha):
    """C(m + alpha, m) = Gamma(m + alpha + 1) / (m! Gamma(alpha + 1)) for alpha > -1."""
    if alpha <= -1:
        raise SpecialFunctionDomainException("alpha must exceed -1, got %g" % alpha)
    return math.exp(gammaln(m + alpha + 1.0) - gammaln(m + 1.0) - gammaln(alpha + 1.0))


def laguerre_generating_closed(lam, alpha, x):
    """sum_m lam^m L_m^(alpha)(x) = exp(-x lam / (1 - lam)) / (1 - lam)^(alpha + 1) for |lam| < 1."""
    if not -1.0 < lam < 1.0:
        raise SpecialFunctionDomainException("lam must lie in (-1, 1), got %g" % lam)
    return np.exp(-np.asarray(x, dtype=float) * lam / (1.0 - lam)) / (1.0 - lam) ** (alpha + 1.0)


# ****************************************************************************************
class SMomentSpec(object):
    """Moment request for the limiting residual S.

    Attributes:
        T (float): total initial fortune, > 0

        z0 (float): scaled initial difference

        q (float): moment order, > 0
    """

    def __init__(self, T, z0, q):
        _check_finite(T=T, z0=z0, q=q)
        if T <= 0:
            raise SpecialFunctionDomainException("T must be positive, got %g" % T)
        if q <= 0:
            raise SpecialFunctionDomainException("Moment order q must be positive, got %g" % q)
        self.T = float(T)
        self.z0 = float(z0)
        self.q = float(q)

    @property
    def w(self):
        return self.z0 ** 2 / (2.0 * self.T)

    @property
    def lam(self):
        return 6.0 * self.w

    @property
    def rho(self):
        return 0.75 * self.q

    def __repr__(self):
        return "SMomentSpec(T=%g, z0=%g, q=%g)" % (self.T, self.z0, self.q)


def s_moment(spec):
    """E[S^q] = (2/3)^{q/4} Gamma(1/2 + q/4) / Gamma(1/2) T^{3q/4} h_{3q/4}(z0^2 / 2T).

    Args:
        spec (SMomentSpec): T, z0 and q

    Returns:
        (float): the q-th moment of the limiting residual
    """
    q = spec.q
    log_value = (0.25 * q * math.log(2.0 / 3.0) + gammaln(0.5 + 0.25 * q) - gammaln(0.5)
                 + spec.rho * math.log(spec.T) + log_h_rho(spec.rho, spec.w))
    return math.exp(log_value)


# ****************************************************************************************
class NoncentralChiSq1(object):
    """Non-central chi-squared law with one degree of freedom.

    Attributes:
        lam (float): non-centrality, >= 0
    """

    dof = 1

    def __init__(self, lam):
        _check_finite(lam=lam)
        if lam < 0:
            raise SpecialFunctionDomainException("Non-centrality must be non-negative, got %g" % lam)
        self.lam = float(lam)

    @property
    def mean(self):
        return 1.0 + self.lam

    @property
    def variance(self):
        return 2.0 * (1.0 + 2.0 * self.lam)

    def _mixture_terms(self):
        half = 0.5 * self.lam
        count = int(half + 20.0 * math.sqrt(half + 1.0) + 20)
        while pdtrc(count - 1, half) >= NCX2_TAIL:
            count *= 2
        j = np.arange(count)
        if half == 0.0:
            weights = (j == 0).astype(float)
        else:
            weights = np.exp(-half + j * math.log(half) - gammaln(j + 1.0))
        return j, weights

    def cdf(self, x):
        """Poisson mixture sum_j e^{-lam/2} (lam/2)^j / j! P(chi2_{1+2j} <= x) for x >= 0."""
        _check_finite(x=x)
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0):
            raise SpecialFunctionDomainException("Chi-square cdf needs x >= 0, got %g" % float(np.min(x_arr)))
        j, weights = self._mixture_terms()
        central = gammainc(j[:, None] + 0.5, 0.5 * x_arr.reshape(1, -1))
        values = np.clip(np.dot(weights, central), 0.0, 1.0)
        return _shape_like(x, values.reshape(x_arr.shape))

    def moment(self, m):
        """Raw moment E[X^m] from the cumulants kappa_n = 2^{n-1} (n-1)! (1 + n lam)."""
        if isinstance(m, bool) or int(m) != m or m < 1:
            raise SpecialFunctionDomainException("Moment order must be a positive integer, got %s" % str(m))
        m = int(m)
        kappa = [0.0] + [2.0 ** (n - 1) * math.factorial(n - 1) * (self.dof + n * self.lam) for n in range(1, m + 1)]
        raw = [1.0]
        for n in range(1, m + 1):
            raw.append(sum(math.comb(n - 1, j) * kappa[n - j] * raw[j] for j in range(n)))
        return raw[m]

    def __repr__(self):
        return "NoncentralChiSq1(lam=%g)" % self.lam


def ncx2_cdf(d, x):
    return d.cdf(x)


def ncx2_moment(d, m):
    return d.moment(m)
