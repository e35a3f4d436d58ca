"""Limiting behaviour of the capacity at high and low SNR.

At high SNR the capacity grows like log(ratio) + const, where the constant
is chi(alpha) under a peak constraint and 1/2 log(e/2pi) under a mean
constraint alone.  At low SNR it is quadratic in A/sigma with a peak
constraint, and behaves like (E/sigma) sqrt(log(sigma/E)) with only a mean
constraint, where just a bracket [1/sqrt(2), 2] on the constant is known.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .bounds import ConstraintSpec
from .errors import DomainError
from .params import solve_mu_star

HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)
CASE3_HIGH_CONST = 0.5 * math.log(math.e / (2 * math.pi))
CASE3_BRACKET = (1.0 / math.sqrt(2.0), 2.0)

HIGH_THRESHOLD = 0.01  # nats, final deviation allowed at the top of the grid
LOW_SLACK = (0.9, 1.1)  # multiplicative slack on the Case III bracket at finite E


def chi(alpha):
    """Second term of the high-SNR expansion under a peak constraint."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"chi is defined for 0 < alpha <= 1, got {alpha!r}")
    if alpha >= 0.5:
        return -HALF_LOG_2PIE
    mu = solve_mu_star(alpha).mu
    am = alpha * mu
    if am < 0.5:
        log_rest = math.log1p(-am)
    else:
        # 1 - alpha mu* = mu* / (e^mu* - 1) at the root; avoids cancellation as alpha -> 0
        log_rest = math.log(mu) - (mu + math.log1p(-math.exp(-mu)))
    return -HALF_LOG_2PIE - (1.0 - alpha) * mu - log_rest


def chi_alt(alpha):
    """Equivalent form of chi for alpha < 1/2 that makes chi -> -inf as alpha -> 0 visible.

    Substituting the defining equation of mu* into chi gives
    -1/2 log(2 pi e) + alpha mu* - log(mu* / (1 - e^{-mu*})).
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError("the alternative form only covers 0 < alpha < 1/2")
    mu = solve_mu_star(alpha).mu
    return -HALF_LOG_2PIE + alpha * mu - math.log(mu / -math.expm1(-mu))


def _case(case):
    if case not in ("I", "II", "III"):
        raise DomainError(f"case must be 'I', 'II' or 'III', got {case!r}")
    return case


def high_snr_asymptote(case, ratio, alpha=None):
    """log(ratio) + chi(alpha) with a peak constraint, log(ratio) + 1/2 log(e/2pi) without.

    ``ratio`` is A/sigma (Cases I, II) or E/sigma (Case III); arrays are fine.
    """
    case = _case(case)
    r = np.asarray(ratio, dtype=float)
    if np.any(r <= 0):
        raise DomainError("ratio must be positive")
    if case == "III":
        const = CASE3_HIGH_CONST
    elif case == "II":
        const = -HALF_LOG_2PIE
    else:
        if alpha is None or not 0 < alpha < 0.5:
            raise DomainError("Case I needs 0 < alpha < 1/2")
        const = chi(alpha)
    out = np.log(r) + const
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LowSnrLaw:
    """C ~ constant * scale(ratio) as ratio -> 0.

    ``coefficient`` is the exact limit for the peak-limited cases and None
    for Case III, where only ``bracket`` (limsup <= 2, liminf >= 1/sqrt 2) is known.
    """

    case: str
    scaling: str  # "quadratic" or "sqrt_log"
    coefficient: Optional[float]
    bracket: Tuple[float, float]

    def scale(self, ratio):
        r = np.asarray(ratio, dtype=float)
        if self.scaling == "quadratic":
            out = r * r
        else:
            if np.any((r <= 0) | (r >= 1)):
                raise DomainError("the sqrt-log law needs 0 < E/sigma < 1")
            out = r * np.sqrt(np.log(1.0 / r))
        return float(out) if out.ndim == 0 else out

    def value(self, ratio):
        if self.coefficient is None:
            raise DomainError("Case III has only a bracket, not a limit constant")
        return self.coefficient * self.scale(ratio)


def low_snr_asymptote(case, alpha=None):
    case = _case(case)
    if case == "III":
        return LowSnrLaw("III", "sqrt_log", None, CASE3_BRACKET)
    if case == "II":
        return LowSnrLaw("II", "quadratic", 0.125, (0.125, 0.125))
    if alpha is None or not 0 < alpha <= 0.5:
        raise DomainError("Case I needs 0 < alpha <= 1/2")
    c = 0.5 * alpha * (1.0 - alpha)
    return LowSnrLaw("I", "quadratic", c, (c, c))


@dataclass(frozen=True)
class AsymptoteReport:
    regime: str  # "high" or "low"
    case: str
    ratio_db: np.ndarray
    asymptote: np.ndarray  # high: log-law values; low: the law's scale at each point
    upper_deviation: np.ndarray  # high: |upper - asymptote|; low: upper / scale
    lower_deviation: np.ndarray  # high: |lower - asymptote|; low: lower / scale
    converging: bool
    detail: str


def _spec(case, ratio, alpha, sigma=1.0):
    if case == "III":
        return ConstraintSpec(sigma, ratio * sigma)
    if case == "II":
        a = 1.0 if alpha is None else alpha
        return ConstraintSpec(sigma, a * ratio * sigma, ratio * sigma)
    return ConstraintSpec(sigma, alpha * ratio * sigma, ratio * sigma)


def _strictly_decreasing_tail(ratio_db, dev, decades=5):
    # the tail is the last ``decades`` decades of the grid (10 dB per decade)
    tail = dev[ratio_db >= ratio_db.max() - 10.0 * decades]
    return bool(tail.size >= 2 and np.all(np.diff(tail) < 0))


def convergence_report(case, alpha=None, grid_db=None, regime="high"):
    """Compare the best-bound envelope with the asymptotic law on a dB grid.

    High regime: converging when both deviations decrease strictly over the
    last five decades of the grid and end below 0.01 nats (default grid
    10, 20, ..., 60 dB).  Low regime: converging when the envelope divided by
    the law sits inside the expected range at the smallest ratio (default
    grid -20 ... -60 dB): upper/scale in [c(1 - 1e-3), c] for the peak-limited
    cases, and upper/scale in [0.9/sqrt 2, 2.2] for Case III.
    """
    from .optimize import envelope  # deferred: optimize imports nothing from here

    case = _case(case)
    if grid_db is None:
        grid_db = np.arange(10.0, 61.0, 10.0) if regime == "high" else np.arange(-20.0, -61.0, -10.0)
    grid_db = np.asarray(grid_db, dtype=float)
    ratios = 10.0 ** (grid_db / 10.0)
    envs = [envelope(_spec(case, r, alpha)) for r in ratios]
    up = np.array([e.upper for e in envs])
    lo = np.array([e.lower for e in envs])
    if regime == "high":
        asy = np.asarray(high_snr_asymptote(case, ratios, alpha if case == "I" else None), dtype=float)
        du, dl = np.abs(up - asy), np.abs(lo - asy)
        ok = (
            _strictly_decreasing_tail(grid_db, du)
            and _strictly_decreasing_tail(grid_db, dl)
            and du[-1] < HIGH_THRESHOLD
            and dl[-1] < HIGH_THRESHOLD
        )
        detail = f"final upper dev {du[-1]:.3g}, lower dev {dl[-1]:.3g} nats"
        return AsymptoteReport("high", case, grid_db, asy, du, dl, bool(ok), detail)
    if regime != "low":
        raise DomainError("regime must be 'high' or 'low'")
    law = low_snr_asymptote(case, alpha)
    scale = np.asarray(law.scale(ratios), dtype=float)
    ru, rl = up / scale, lo / scale
    k = int(np.argmin(ratios))
    if law.coefficient is not None:
        c = law.coefficient
        ok = c * (1 - 1e-3) <= ru[k] <= c
        detail = f"upper/law {ru[k]:.6g} vs limit {c:.6g}"
    else:
        lo_b, hi_b = law.bracket[0] * LOW_SLACK[0], law.bracket[1] * LOW_SLACK[1]
        ok = lo_b <= ru[k] <= hi_b
        detail = f"upper/law {ru[k]:.6g} vs bracket [{lo_b:.4g}, {hi_b:.4g}]"
    return AsymptoteReport("low", case, grid_db, scale, ru, rl, bool(ok), detail)
