"""Closed-form capacity bounds for the optical intensity channel Y = X + Z.

X >= 0 is the input intensity, Z ~ N(0, sigma^2).  Three constraint regimes:

* Case I   -- peak A and mean E = alpha*A with 0 < alpha < 1/2
* Case II  -- peak A and 1/2 <= alpha <= 1 (the mean constraint is inactive)
* Case III -- mean E only

Every function returns nats.  Formula ids name the equation each bound
comes from so sweep output can say which bound was tightest.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError
from .params import solve_mu_star
from .qfunc import LOG_SQRT2PI, SQRT2PI, centered_mass, log_q, q

LOG_2PIE = math.log(2.0 * math.pi * math.e)
EXP_MINUS_HALF = math.exp(-0.5)


@dataclass(frozen=True)
class ConstraintSpec:
    sigma: float
    average: float
    peak: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.average >= 0:
            raise DomainError("average power must be nonnegative")
        if self.peak is not None:
            if not self.peak >= 0:
                raise DomainError("peak power must be nonnegative")
            if self.average > self.peak:
                raise DomainError("average power cannot exceed the peak (alpha <= 1)")

    @property
    def alpha(self):
        if self.peak is None:
            return None
        if self.peak == 0:
            return 1.0
        return self.average / self.peak

    @property
    def case(self):
        return case_of(self)


@dataclass(frozen=True)
class BoundEstimate:
    nats: float
    side: str
    formula: int
    params: dict = field(default_factory=dict)


def case_of(spec):
    """'I', 'II' or 'III'.  alpha == 1/2 goes to Case II (mu* does not exist there)."""
    if spec.peak is None:
        return "III"
    return "I" if spec.alpha < 0.5 else "II"


def _half_log1p_exp(z):
    # 0.5 * log(1 + e^z) without overflow
    if z > 30:
        return 0.5 * (z + math.log1p(math.exp(-z)))
    return 0.5 * math.log1p(math.exp(z))


def _logaddexp(a, b):
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log1p(math.exp(b - a))


def _lower(nats, formula, **params):
    return BoundEstimate(max(nats, 0.0), "lower", formula, params)


def _check_case1(peak, sigma, alpha):
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if not peak >= 0:
        raise DomainError("peak must be nonnegative")
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"Case I needs 0 < alpha < 1/2, got {alpha!r}")


# ---------------------------------------------------------------- Case I

def lower_case1(peak, sigma, alpha):
    """EPI bound with the truncated-exponential input (formula 26)."""
    _check_case1(peak, sigma, alpha)
    mu = solve_mu_star(alpha).mu
    if peak == 0:
        return _lower(0.0, 26, mu_star=mu)
    log_shape = alpha * mu + math.log(-math.expm1(-mu) / mu)
    z = 2.0 * (math.log(peak / sigma) + log_shape) - LOG_2PIE
    return _lower(_half_log1p_exp(z), 26, mu_star=mu)


def upper_case1_gauss(peak, sigma, alpha):
    """Gaussian output law with matched mean and variance (formula 27)."""
    _check_case1(peak, sigma, alpha)
    snr = peak / sigma
    return BoundEstimate(0.5 * math.log1p(alpha * (1.0 - alpha) * snr * snr), "upper", 27)


def dual_log_factor_case1(peak, sigma, delta, mu):
    """log( A (e^{mu delta/A} - e^{-mu(1+delta/A)}) / (sqrt(2pi) sigma mu (1 - 2Q(delta/sigma))) ).

    Nonnegative for all positive arguments.
    """
    return (
        math.log(peak / sigma)
        + mu * delta / peak
        + math.log(-math.expm1(-mu * (1.0 + 2.0 * delta / peak)))
        - LOG_SQRT2PI
        - math.log(mu)
        - math.log(centered_mass(delta / sigma))
    )


def _upper28(peak, sigma, alpha, delta, mu):
    ds = delta / sigma
    g = math.exp(-0.5 * ds * ds)
    inside = 0.5 * (
        centered_mass((delta + alpha * peak) / sigma)
        + centered_mass((delta + (1.0 - alpha) * peak) / sigma)
    )
    spread = (peak * peak + 2.0 * peak * delta) / (2.0 * sigma * sigma)
    return (
        inside * dual_log_factor_case1(peak, sigma, delta, mu)
        - 0.5
        + q(ds)
        + ds / SQRT2PI * g
        + sigma / peak * mu / SQRT2PI * g * -math.expm1(-spread)
        + mu * alpha * centered_mass((delta + 0.5 * peak) / sigma)
    )


def upper_case1_dual(peak, sigma, alpha, delta, mu):
    """Duality bound with a piecewise Gaussian/exponential output law (formula 28)."""
    _check_case1(peak, sigma, alpha)
    if not (delta > 0 and mu > 0):
        raise DomainError("formula 28 needs delta > 0 and mu > 0")
    if peak == 0:
        return BoundEstimate(0.0, "upper", 28, {"delta": delta, "mu": mu})
    return BoundEstimate(_upper28(peak, sigma, alpha, delta, mu), "upper", 28, {"delta": delta, "mu": mu})


# ---------------------------------------------------------------- Case II

def lower_case2(peak, sigma):
    """EPI bound with the uniform input on [0, A] (formula 38)."""
    if not (peak >= 0 and sigma > 0):
        raise DomainError("need peak >= 0 and sigma > 0")
    if peak == 0:
        return _lower(0.0, 38)
    z = 2.0 * math.log(peak / sigma) - LOG_2PIE
    return _lower(_half_log1p_exp(z), 38)


def upper_case2_gauss(peak, sigma):
    """Gaussian output law centred at A/2 (formula 39)."""
    if not (peak >= 0 and sigma > 0):
        raise DomainError("need peak >= 0 and sigma > 0")
    snr = peak / sigma
    return BoundEstimate(0.5 * math.log1p(0.25 * snr * snr), "upper", 39)


def dual_ratio_case2(peak, sigma, delta):
    """(A + 2 delta) / (sqrt(2pi) sigma (1 - 2Q(delta/sigma))), always >= 1."""
    return (peak + 2.0 * delta) / (SQRT2PI * sigma * centered_mass(delta / sigma))


def _upper40(peak, sigma, delta):
    ds = delta / sigma
    log_ratio = math.log((peak + 2.0 * delta) / sigma) - LOG_SQRT2PI - math.log(centered_mass(ds))
    return (
        centered_mass((delta + 0.5 * peak) / sigma) * log_ratio
        - 0.5
        + q(ds)
        + ds / SQRT2PI * math.exp(-0.5 * ds * ds)
    )


def upper_case2_dual(peak, sigma, delta):
    """Duality bound with a flat-topped output law (formula 40)."""
    if not (peak >= 0 and sigma > 0):
        raise DomainError("need peak >= 0 and sigma > 0")
    if not delta > 0:
        raise DomainError("formula 40 needs delta > 0")
    if peak == 0:
        return BoundEstimate(0.0, "upper", 40, {"delta": delta})
    return BoundEstimate(_upper40(peak, sigma, delta), "upper", 40, {"delta": delta})


# ---------------------------------------------------------------- Case III

def lower_case3(average, sigma):
    """EPI bound with the exponential input of mean E (formula 46)."""
    if not (average >= 0 and sigma > 0):
        raise DomainError("need average >= 0 and sigma > 0")
    if average == 0:
        return _lower(0.0, 46)
    z = 2.0 * math.log(average / sigma) + 1.0 - math.log(2.0 * math.pi)
    return _lower(_half_log1p_exp(z), 46)


def _case3_log_norm(sigma, delta, beta):
    # log(beta e^{-delta^2/2sigma^2} + sqrt(2pi) sigma Q(delta/sigma))
    ds = delta / sigma
    return _logaddexp(math.log(beta) - 0.5 * ds * ds, math.log(SQRT2PI * sigma) + log_q(ds))


def _upper47(average, sigma, delta, beta):
    ds = delta / sigma
    d = 0.5 * ds * ds
    q_ds = q(ds)
    return (
        _case3_log_norm(sigma, delta, beta)
        - math.log(SQRT2PI * sigma)
        - delta * average / (2.0 * sigma * sigma)
        + d * (q(-ds) - average / delta * q_ds)
        + (average + sigma / SQRT2PI) / beta
    )


def _upper48(average, sigma, delta, beta):
    ds = delta / sigma
    d = 0.5 * ds * ds
    g = math.exp(-d)
    return (
        _case3_log_norm(sigma, delta, beta)
        + 0.5 * q(ds)
        + ds / (2.0 * SQRT2PI) * g
        + d * q(-(delta + average) / sigma)
        + (delta + average + sigma / SQRT2PI * g) / beta
        - 0.5 * LOG_2PIE
        - math.log(sigma)
    )


def upper_case3_low(average, sigma, delta, beta):
    """Duality bound for delta <= -sigma/sqrt(e) (formula 47)."""
    if not (average >= 0 and sigma > 0):
        raise DomainError("need average >= 0 and sigma > 0")
    if not delta <= -sigma * EXP_MINUS_HALF:
        raise DomainError(f"formula 47 needs delta <= -sigma/sqrt(e), got delta = {delta!r}")
    if not beta > 0:
        raise DomainError("beta must be positive")
    return BoundEstimate(_upper47(average, sigma, delta, beta), "upper", 47, {"delta": delta, "beta": beta})


def upper_case3_high(average, sigma, delta, beta):
    """Duality bound for delta >= 0 (formula 48)."""
    if not (average >= 0 and sigma > 0):
        raise DomainError("need average >= 0 and sigma > 0")
    if not delta >= 0:
        raise DomainError(f"formula 48 needs delta >= 0, got delta = {delta!r}")
    if not beta > 0:
        raise DomainError("beta must be positive")
    return BoundEstimate(_upper48(average, sigma, delta, beta), "upper", 48, {"delta": delta, "beta": beta})
