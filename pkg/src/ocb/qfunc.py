"""Gaussian tail probability and the helpers built on it.

All bound formulas in this package difference Q values that are close to one
another or evaluate Q deep in its tail, so the erfc kernel lives here rather
than being borrowed: erfcx(x) = exp(x**2) erfc(x) is a Chebyshev series in
t = K / (K + x), regenerated by ``scripts/gen_erfcx_coeffs.py``.
"""
import math

import numpy as np

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)

_K = 4.0
# Chebyshev coefficients of y(s), s = 2t - 1, erfcx(x) = t * y(s)
_ERFCX_CHEB = (
    4.0802446954913149054e-1,
    3.7635823567636743359e-1,
    1.4758035457222361932e-1,
    4.9571317930027586287e-2,
    1.422710755711717399e-2,
    3.4434932627175241283e-3,
    6.8225418328380806198e-4,
    1.0340451975756188148e-4,
    9.7285459519901499994e-6,
    -1.1988713758412044212e-7,
    -2.1747767703449564315e-7,
    -3.0291767735991390946e-8,
    9.4799175652045492467e-10,
    8.6334116949909558715e-10,
    6.8721564259534024379e-11,
    -1.7034898438296275927e-11,
    -3.3921306868290886496e-12,
    2.6158087668540244876e-13,
    1.2127675803108640048e-13,
    -2.1146895432448091582e-15,
    -4.1173409334041783673e-15,
    -6.3287127217007086794e-17,
    1.4393110983449847319e-16,
    4.5614947982841306916e-18,
    -5.3390942579781350903e-18,
    -1.7350920089597044501e-19,
)
# log_q switches to the asymptotic expansion above this point
_LOG_Q_SWITCH = 8.0


def _cheb_scalar(s):
    b1 = b2 = 0.0
    s2 = 2.0 * s
    for c in reversed(_ERFCX_CHEB[1:]):
        b1, b2 = s2 * b1 - b2 + c, b1
    return s * b1 - b2 + _ERFCX_CHEB[0]


def _cheb_array(s):
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    s2 = 2.0 * s
    for c in reversed(_ERFCX_CHEB[1:]):
        b1, b2 = s2 * b1 - b2 + c, b1
    return s * b1 - b2 + _ERFCX_CHEB[0]


def erfcx(x):
    """Scaled complementary error function exp(x^2) erfc(x) for x >= 0."""
    if isinstance(x, np.ndarray):
        if np.any(x < 0):
            raise DomainError("erfcx kernel is defined for x >= 0 only")
        t = _K / (_K + x)
        return t * _cheb_array(2.0 * t - 1.0)
    if x < 0:
        raise DomainError("erfcx kernel is defined for x >= 0 only")
    t = _K / (_K + x)
    return t * _cheb_scalar(2.0 * t - 1.0)


def _check_finite(xi):
    if isinstance(xi, np.ndarray):
        if not np.all(np.isfinite(xi)):
            raise DomainError("Q-function argument must be finite")
    elif not math.isfinite(xi):
        raise DomainError(f"Q-function argument must be finite, got {xi!r}")


def _q_upper(xi):
    # xi >= 0, scalar
    return 0.5 * math.exp(-0.5 * xi * xi) * erfcx(xi / SQRT2)


def q(xi):
    """Gaussian tail probability Q(xi) = P[Z > xi] for standard normal Z.

    Accepts a float or a numpy array. Relative error is a few ulp for
    |xi| <= 8; beyond that the result underflows gracefully to 0.
    """
    if isinstance(xi, np.ndarray) or isinstance(xi, (list, tuple)):
        xi = np.asarray(xi, dtype=float)
        _check_finite(xi)
        a = np.abs(xi)
        upper = 0.5 * np.exp(-0.5 * a * a) * erfcx(a / SQRT2)
        return np.where(xi >= 0, upper, 1.0 - upper)
    xi = float(xi)
    _check_finite(xi)
    if xi >= 0:
        return _q_upper(xi)
    return 1.0 - _q_upper(-xi)


def _log_q_asymptotic(xi):
    # log Q(xi) = -xi^2/2 - log(xi sqrt(2 pi)) + log(1 - 1/xi^2 + 3/xi^4 - ...)
    inv2 = 1.0 / (xi * xi)
    term = 1.0
    total = 1.0
    k = 1
    while True:
        nxt = -term * (2 * k - 1) * inv2
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17:
            break
        total += nxt
        term = nxt
        k += 1
    return -0.5 * xi * xi - math.log(xi) - LOG_SQRT2PI + math.log(total)


def log_q(xi):
    """Natural log of Q(xi), finite for every finite xi."""
    if isinstance(xi, np.ndarray) or isinstance(xi, (list, tuple)):
        arr = np.asarray(xi, dtype=float)
        _check_finite(arr)
        return np.array([log_q(float(v)) for v in arr.ravel()]).reshape(arr.shape)
    xi = float(xi)
    _check_finite(xi)
    if xi > _LOG_Q_SWITCH:
        return _log_q_asymptotic(xi)
    if xi >= 0:
        return math.log(_q_upper(xi))
    return math.log1p(-_q_upper(-xi))


def _erf_series(x):
    # erf(x) = 2x/sqrt(pi) e^{-x^2} sum_n (2x^2)^n / (2n+1)!!, all terms positive
    x2 = 2.0 * x * x
    term = 1.0
    total = 1.0
    n = 0
    while term > 1e-17 * total:
        n += 1
        term *= x2 / (2 * n + 1)
        total += term
    return 2.0 * x / math.sqrt(math.pi) * math.exp(-x * x) * total


def centered_mass(xi):
    """P[|Z| <= xi] = 1 - 2 Q(xi) for xi >= 0, accurate as xi -> 0."""
    if isinstance(xi, np.ndarray):
        return np.array([centered_mass(float(v)) for v in xi.ravel()]).reshape(xi.shape)
    if xi < 0:
        raise DomainError("centered_mass needs xi >= 0")
    if xi <= 1.0:
        return _erf_series(xi / SQRT2)
    return 1.0 - 2.0 * _q_upper(xi)


def window_mass(xi, xi0, gamma):
    """1 - Q(xi0 + xi) - Q(xi0 + gamma - xi) on 0 <= xi <= gamma.

    Concave and symmetric about gamma / 2, where it peaks.
    """
    if xi0 < 0 or gamma < 0:
        raise DomainError("xi0 and gamma must be nonnegative")
    lo_bad = np.any(np.asarray(xi) < 0) or np.any(np.asarray(xi) > gamma)
    if lo_bad:
        raise DomainError("xi must lie in [0, gamma]")
    return 1.0 - q(xi0 + xi) - q(xi0 + gamma - xi)


def gauss_pdf(xi):
    """Standard normal density."""
    if isinstance(xi, np.ndarray):
        return np.exp(-0.5 * xi * xi) / SQRT2PI
    return math.exp(-0.5 * xi * xi) / SQRT2PI
