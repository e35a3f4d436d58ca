"""Free-parameter choices for the closed-form bounds.

The truncated-exponential input on [0, A] with mean alpha*A has rate mu*,
the root of phi(mu) = alpha.  Everything else here is an explicit formula
for a (delta, mu) or (delta, beta) pair that makes a duality bound tight
enough to be useful without numerical minimisation.
"""
import math
from dataclasses import dataclass

from .errors import DomainError
from .qfunc import SQRT2PI, log_q

# below this rate phi is evaluated from its Taylor series about 0
_PHI_SERIES_BELOW = 1e-2
# exp(-1/(4e)): upper end of the low-power parameter branch for Case III
CASE3_LOW_LIMIT = math.exp(-1.0 / (4.0 * math.e))


@dataclass(frozen=True)
class MuStar:
    mu: float
    alpha: float
    residual: float


def phi(mu):
    """Mean of the truncated-exponential law on [0, 1] with rate ``mu``.

    phi(mu) = 1/mu - 1/(e^mu - 1); strictly decreasing from 1/2 (mu -> 0)
    to 0 (mu -> inf).
    """
    if not mu > 0:
        raise DomainError(f"phi needs mu > 0, got {mu!r}")
    if mu < _PHI_SERIES_BELOW:
        m2 = mu * mu
        return 0.5 - mu / 12.0 + mu * m2 / 720.0 - mu * m2 * m2 / 30240.0
    if mu > 700:
        return 1.0 / mu
    return 1.0 / mu - 1.0 / math.expm1(mu)


def phi_prime(mu):
    if mu < _PHI_SERIES_BELOW:
        m2 = mu * mu
        return -1.0 / 12.0 + m2 / 240.0 - m2 * m2 / 6048.0
    if mu > 700:
        return -1.0 / (mu * mu)
    sh = math.sinh(0.5 * mu)
    return -1.0 / (mu * mu) + 0.25 / (sh * sh)


def solve_mu_star(alpha, tol=1e-12):
    """Solve phi(mu) = alpha for 0 < alpha < 1/2.

    Bisection on log(mu) over [1e-12, 1e12], then safeguarded Newton steps
    once the bracket is narrower than 1e-3 in relative terms.
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError(
            f"mu* exists only for 0 < alpha < 1/2 (got {alpha!r}); use the alpha >= 1/2 bounds"
        )
    lo, hi = 1e-12, 1e12
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if phi(mid) > alpha:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-3:
            break
    mu = math.sqrt(lo * hi)
    for _ in range(50):
        res = phi(mu) - alpha
        if abs(res) <= tol:
            break
        if res > 0:
            lo = mu
        else:
            hi = mu
        step = mu - res / phi_prime(mu)
        mu = step if lo < step < hi else 0.5 * (lo + hi)
    res = phi(mu) - alpha
    return MuStar(mu=mu, alpha=alpha, residual=res)


def default_delta(peak, sigma):
    """sigma * log(1 + A/sigma), the rule used for both peak-limited cases."""
    if not (peak > 0 and sigma > 0):
        raise DomainError("peak and sigma must be positive")
    return sigma * math.log1p(peak / sigma)


def default_params_case1(peak, sigma, alpha):
    """(delta, mu) for the truncated-exponential duality bound, 0 < alpha < 1/2."""
    mu_star = solve_mu_star(alpha).mu
    delta = default_delta(peak, sigma)
    mu = mu_star * -math.expm1(-alpha * delta * delta / (2.0 * sigma * sigma))
    return delta, mu


def default_delta_case2(peak, sigma):
    return default_delta(peak, sigma)


def optimal_beta(delta, sigma, linear_coeff):
    """Minimiser over beta of log(beta e^{-d} + sqrt(2pi) sigma Q(delta/sigma)) + K/beta.

    ``linear_coeff`` is K.  The stationarity condition is the quadratic
    beta^2 = K (beta + sqrt(2 pi) sigma e^{d} Q(delta/sigma)).
    """
    d = delta * delta / (2.0 * sigma * sigma)
    tail = SQRT2PI * sigma * math.exp(d + log_q(delta / sigma))
    k = linear_coeff
    return 0.5 * k + 0.5 * math.sqrt(k * k + 4.0 * k * tail)


def default_params_case3_low(average, sigma):
    """(delta, beta) for the delta <= -sigma/sqrt(e) bound; E/sigma <= exp(-1/(4e))."""
    if not (average > 0 and sigma > 0):
        raise DomainError("average and sigma must be positive")
    if average / sigma > CASE3_LOW_LIMIT:
        raise DomainError(
            f"E/sigma = {average / sigma:.6g} exceeds exp(-1/(4e)); use default_params_case3_high"
        )
    delta = -2.0 * sigma * math.sqrt(math.log(sigma / average))
    # at E/sigma = exp(-1/(4e)) rounding can land one ulp on the wrong side of the edge
    delta = min(delta, -sigma * math.exp(-0.5))
    beta = optimal_beta(delta, sigma, average + sigma / SQRT2PI)
    return delta, beta


def default_params_case3_high(average, sigma):
    """(delta, beta) for the delta >= 0 bound."""
    if not (average > 0 and sigma > 0):
        raise DomainError("average and sigma must be positive")
    delta = sigma * math.log1p(average / sigma)
    d = delta * delta / (2.0 * sigma * sigma)
    k = delta + average + sigma / SQRT2PI * math.exp(-d)
    return delta, optimal_beta(delta, sigma, k)
