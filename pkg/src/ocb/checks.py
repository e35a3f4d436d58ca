"""Invariant suites run by ``ocb verify``.

Each check returns a CheckResult; a suite is a list of such checks.  The
grids are deterministic, so a failing check reproduces exactly.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import bounds as B
from .asymptotics import chi, chi_alt, convergence_report, low_snr_asymptote
from .bounds import ConstraintSpec
from .optimize import envelope
from .params import (
    CASE3_LOW_LIMIT,
    default_delta,
    default_params_case1,
    default_params_case3_high,
    default_params_case3_low,
    phi,
    solve_mu_star,
)
from .qfunc import LOG_SQRT2PI, log_q, q

GRID = 2001


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "ok", bool(self.ok))


def _margin(lhs):
    return 1e-15 * np.maximum(1.0, np.abs(lhs))


def _worst(viol, xs):
    # largest violation and where it happened
    k = int(np.argmax(viol))
    return f"worst excess {viol[k]:.3g} at {xs[k]:.6g}"


# ---------------------------------------------------------------- lemmas

def check_q_bracket():
    """(1 - 1/xi^2) g(xi) < Q(xi) < g(xi), with g the Gaussian density over xi."""
    xi = np.geomspace(1e-3, 40.0, GRID)
    lq = np.array([log_q(v) for v in xi])
    lg = -0.5 * xi * xi - np.log(xi) - LOG_SQRT2PI
    upper_ok = lq < lg - _margin(lg)
    big = xi > 1.0
    lower = lg[big] + np.log1p(-1.0 / xi[big] ** 2)
    lower_ok = lq[big] > lower + _margin(lower)
    ok = bool(upper_ok.all() and lower_ok.all())
    return CheckResult("q_tail_bracket", ok, f"{int((~upper_ok).sum() + (~lower_ok).sum())} violations on {GRID} points")


def check_q_half_gauss():
    xi = np.linspace(0.0, 40.0, GRID)
    lq = np.array([log_q(v) for v in xi])
    rhs = math.log(0.5) - 0.5 * xi * xi
    ok = bool(np.all(lq <= rhs + _margin(rhs)))
    return CheckResult("q_half_gauss", ok, _worst(lq - rhs, xi))


def check_q_shape():
    # near xi = -8 Q is within 1e-15 of 1, so steps there vanish in double precision
    xi = np.linspace(-7.0, 38.0, GRID)
    dec = bool(np.all(np.diff(q(xi)) < 0))
    xs = np.linspace(-5.0, 5.0, GRID)
    d2 = np.diff(q(xs), 2)
    mid = xs[1:-1]
    convex = bool(np.all(d2[mid > 1e-12] > 0))
    concave = bool(np.all(d2[mid < -1e-12] < 0))
    sym = float(np.max(np.abs(q(xs) + q(-xs) - 1.0)))
    ok = dec and convex and concave and sym <= 1e-15
    return CheckResult("q_shape", ok, f"decreasing={dec} convex>0={convex} concave<0={concave} sym_err={sym:.2g}")


def window_mass_curvature(xi0, gamma, n=GRID):
    """Grid, values and second differences of the nonconstant part of window_mass."""
    xi = np.linspace(0.0, gamma, n)
    part = -(q(xi0 + xi) + q(xi0 + gamma - xi))
    d2 = -(np.diff(q(xi0 + xi), 2) + np.diff(q(xi0 + gamma - xi), 2))
    return xi, part, d2


def check_window_mass():
    bad = []
    for xi0, gamma in itertools.product((0.0, 0.5, 3.0), (0.1, 1.0, 10.0)):
        xi, part, d2 = window_mass_curvature(xi0, gamma)
        # mirrored grid points differ by an ulp of gamma, which Q scales up by about xi
        sym_ok = np.all(np.abs(part - part[::-1]) <= 1e-13 * np.abs(part))
        peak = int(np.argmax(part))
        if not (np.all(d2 < 0) and sym_ok and peak == (GRID - 1) // 2):
            bad.append((xi0, gamma))
    return CheckResult("window_mass_concave_symmetric", not bad, f"failing (xi0, gamma): {bad}" if bad else "9 pairs")


def check_shifted_tail():
    xi = np.linspace(0.0, 50.0, GRID)
    worst = -math.inf
    for mu in (math.exp(-0.5), 1.0, 2.0, 5.0):
        lhs = xi * q(xi - mu)
        worst = max(worst, float(np.max(lhs - mu - _margin(lhs))))
    return CheckResult("shifted_tail_bound", worst <= 0, f"max(xi Q(xi - mu) - mu) = {worst:.3g}")


def check_linear_tail():
    # 1 - Q(xi - mu) <= 1 - Q(-mu) + (xi/mu) Q(-mu), written without the leading 1
    xi = np.linspace(0.0, 50.0, GRID)
    worst = -math.inf
    for mu in (0.1, 0.5, 1.0, 2.0, 5.0):
        lhs = q(mu - xi)
        rhs = q(mu) + xi / mu * q(-mu)
        worst = max(worst, float(np.max(lhs - rhs - _margin(lhs))))
    return CheckResult("linear_tail_bound", worst <= 0, f"max excess {worst:.3g}")


def check_phi():
    mu = np.geomspace(1e-8, 100.0, GRID)
    vals = np.array([phi(m) for m in mu])
    dec = bool(np.all(np.diff(vals) < 0))
    lim0 = abs(phi(1e-10) - 0.5) < 1e-10
    lim_inf = abs(phi(1e6) * 1e6 - 1.0) < 1e-9
    alphas = np.geomspace(1e-6, 0.4999, 50)
    rt = max(abs(phi(solve_mu_star(a).mu) - a) for a in alphas)
    ok = dec and lim0 and lim_inf and rt <= 1e-12
    return CheckResult("phi_and_mu_star", ok, f"decreasing={dec} limits={lim0 and lim_inf} roundtrip={rt:.2g}")


def check_dual_log_factor():
    vals = np.geomspace(1e-2, 1e2, 10)
    worst = math.inf
    for a, s, d, m in itertools.product(vals, vals, vals, vals):
        worst = min(worst, B.dual_log_factor_case1(a, s, d, m))
    return CheckResult("dual_log_factor_nonnegative", worst >= 0, f"min over 10^4 points {worst:.3g}")


def check_dual_ratio():
    vals = np.geomspace(1e-2, 1e2, 25)
    worst = min(B.dual_ratio_case2(a, s, d) for a, s, d in itertools.product(vals, vals, vals))
    return CheckResult("dual_ratio_at_least_one", worst >= 1.0, f"min {worst:.6g}")


# ---------------------------------------------------------------- sandwich

CASE1_ALPHAS = (0.05, 0.1, 0.3, 0.45)
SANDWICH_DB = np.arange(-10.0, 45.0, 5.0)


def _spec(case, ratio, alpha=None):
    if case == "III":
        return ConstraintSpec(1.0, ratio)
    if case == "II":
        return ConstraintSpec(1.0, ratio, ratio)
    return ConstraintSpec(1.0, alpha * ratio, ratio)


def default_bounds(spec):
    """Every bound of the instance's case at its closed-form parameters: (lowers, uppers)."""
    s = spec.sigma
    case = B.case_of(spec)
    if case == "I":
        a, al = spec.peak, spec.alpha
        d, m = default_params_case1(a, s, al)
        return [B.lower_case1(a, s, al).nats], [B.upper_case1_gauss(a, s, al).nats,
                                                  B.upper_case1_dual(a, s, al, d, m).nats]
    if case == "II":
        a = spec.peak
        return [B.lower_case2(a, s).nats], [B.upper_case2_gauss(a, s).nats,
                                             B.upper_case2_dual(a, s, default_delta(a, s)).nats]
    e = spec.average
    ups = [B.upper_case3_high(e, s, *default_params_case3_high(e, s)).nats]
    if e / s <= CASE3_LOW_LIMIT:
        ups.append(B.upper_case3_low(e, s, *default_params_case3_low(e, s)).nats)
    return [B.lower_case3(e, s).nats], ups


def check_sandwich_defaults():
    bad = []
    cases = [("I", a) for a in CASE1_ALPHAS] + [("II", None), ("III", None)]
    for (case, alpha), db in itertools.product(cases, SANDWICH_DB):
        lows, ups = default_bounds(_spec(case, 10 ** (db / 10), alpha))
        if max(lows) > min(ups):
            bad.append((case, alpha, float(db)))
    return CheckResult("upper_above_lower_defaults", not bad, f"violations {bad}" if bad else f"{len(cases) * len(SANDWICH_DB)} points")


def check_sandwich_optimized():
    bad = []
    cases = [("I", a) for a in CASE1_ALPHAS] + [("II", None), ("III", None)]
    for (case, alpha), db in itertools.product(cases, SANDWICH_DB[::2]):
        env = envelope(_spec(case, 10 ** (db / 10), alpha))
        if env.lower > env.upper:
            bad.append((case, alpha, float(db)))
    return CheckResult("upper_above_lower_optimized", not bad, f"violations {bad}" if bad else "envelope ordered")


def check_monotone_lower():
    ratios = np.geomspace(1e-2, 1e3, 200)
    ok = True
    for alpha in CASE1_ALPHAS:
        v = [B.lower_case1(r, 1.0, alpha).nats for r in ratios]
        ok &= bool(np.all(np.diff(v) >= 0))
    ok &= bool(np.all(np.diff([B.lower_case2(r, 1.0).nats for r in ratios]) >= 0))
    ok &= bool(np.all(np.diff([B.lower_case3(r, 1.0).nats for r in ratios]) >= 0))
    return CheckResult("lower_bounds_monotone", ok, "nondecreasing in A and E")


def check_half_continuity():
    worst = max(abs(B.lower_case1(a, 1.0, 0.5 - 1e-7).nats - B.lower_case2(a, 1.0).nats)
                for a in (0.1, 1.0, 10.0, 100.0))
    return CheckResult("continuity_at_half", worst <= 1e-6, f"|Case I - Case II| = {worst:.2g} at alpha = 1/2 - 1e-7")


def check_case2_alpha_free():
    vals = [envelope(ConstraintSpec(1.0, a * 5.0, 5.0)).upper for a in (0.5, 0.7, 1.0)]
    spread = max(vals) - min(vals)
    return CheckResult("case2_independent_of_alpha", spread == 0.0, f"spread {spread:.2g}")


def check_sandwich_ba():
    from .oracle import blahut_arimoto, build_grid

    bad = []
    for spec in (ConstraintSpec(1.0, 0.9, 3.0), ConstraintSpec(1.0, 2.0, 3.0), ConstraintSpec(1.0, 1.0)):
        env = envelope(spec)
        cap, law = blahut_arimoto(build_grid(spec, 128, 1024), spec)
        if not env.lower - 0.01 <= cap <= env.upper + 0.01:
            bad.append((spec, cap, env.lower, env.upper))
    return CheckResult("discretized_capacity_inside_envelope", not bad, f"{bad}" if bad else "3 instances, 128 x 1024 grids")


# ---------------------------------------------------------------- asymptotics

def check_high_snr():
    out = []
    for case, alpha in (("I", 0.1), ("I", 0.4), ("II", None), ("III", None)):
        rep = convergence_report(case, alpha)
        out.append(CheckResult(f"high_snr_{case}{'' if alpha is None else f'_{alpha}'}", rep.converging, rep.detail))
    return out


def check_chi():
    alphas = np.linspace(1e-3, 0.499, GRID)
    diff = max(abs(chi(a) - chi_alt(a)) for a in alphas)
    half = abs(chi(0.75) + 0.5 * math.log(2 * math.pi * math.e))
    jump = abs(chi(0.5 - 1e-7) - chi(0.5))
    vals = [chi(a) for a in alphas]
    inc = bool(np.all(np.diff(vals) > 0))
    ok = diff <= 1e-10 and half <= 1e-12 and jump <= 1e-6 and inc
    return CheckResult("chi", ok, f"forms agree to {diff:.2g}, jump at 1/2 {jump:.2g}, increasing={inc}")


def check_low_snr():
    out = []
    for case, alpha in (("I", 0.1), ("I", 0.3), ("II", None)):
        rep = convergence_report(case, alpha, regime="low")
        name = f"low_snr_{case}{'' if alpha is None else f'_{alpha}'}"
        out.append(CheckResult(name, rep.converging, rep.detail))
    rep = convergence_report("III", regime="low")
    out.append(CheckResult("low_snr_III", rep.converging, rep.detail))
    return out


# ---------------------------------------------------------------- oracle

GAP_RATIOS = (1.0, 5.0, 20.0)
GAP_ALPHA = 0.3


def gap_inputs(peak, alpha=GAP_ALPHA):
    """Four inputs on [0, A] with mean alpha A."""
    from .oracle import DiscreteInput, maxent_density

    a = peak
    return {
        "uniform": maxent_density("uniform", peak=2 * alpha * a).discretize(),
        "truncexp": maxent_density("truncexp", peak=a, alpha=alpha).discretize(),
        "binary": DiscreteInput([0.0, a], [1 - alpha, alpha]),
        "three_point": DiscreteInput([0.0, a / 2, a], [1 - 1.5 * alpha, alpha, 0.5 * alpha]),
    }


def gap_densities(peak, alpha=GAP_ALPHA, sigma=1.0):
    """The five output densities at closed-form parameters, with the bound each one yields.

    Returns {name: (density, closed_form_nats)}; the closed forms assume an
    input with peak A and mean at most alpha A.
    """
    from .oracle import DensityId, output_density

    a, e = peak, alpha * peak
    d1, m1 = default_params_case1(a, sigma, alpha)
    d2 = default_delta(a, sigma)
    if e / sigma <= CASE3_LOW_LIMIT:
        d5, b5 = default_params_case3_low(e, sigma)
        bound5 = B.upper_case3_low(e, sigma, d5, b5).nats
    else:
        d5, b5 = default_params_case3_high(e, sigma)
        bound5 = B.upper_case3_high(e, sigma, d5, b5).nats
    return {
        "R1": (output_density(DensityId.R1, sigma, peak=a, average=e), B.upper_case1_gauss(a, sigma, alpha).nats),
        "R2": (output_density(DensityId.R2, sigma, peak=a, delta=d1, mu=m1),
               B.upper_case1_dual(a, sigma, alpha, d1, m1).nats),
        "R3": (output_density(DensityId.R3, sigma, peak=a), B.upper_case2_gauss(a, sigma).nats),
        "R4": (output_density(DensityId.R4, sigma, peak=a, delta=d2), B.upper_case2_dual(a, sigma, d2).nats),
        "R5": (output_density(DensityId.R5, sigma, delta=d5, beta=b5), bound5),
    }


def check_duality_gap():
    from .oracle import duality_gap, output_grid

    worst, where = math.inf, None
    for a in GAP_RATIOS:
        grid = output_grid(1.0, a, 2048)
        dens = gap_densities(a)
        for (iname, inp), (dname, (r, _)) in itertools.product(gap_inputs(a).items(), dens.items()):
            g = duality_gap(inp, r, grid)
            if g < worst:
                worst, where = g, (a, iname, dname)
    return CheckResult("duality_gap_nonnegative", worst >= -1e-6, f"min gap {worst:.3g} at {where}")


def check_closed_forms():
    from .oracle import dual_expectation, output_grid

    worst, where = -math.inf, None
    for a in GAP_RATIOS:
        grid = output_grid(1.0, a, 2048)
        dens = gap_densities(a)
        for (iname, inp), (dname, (r, bound)) in itertools.product(gap_inputs(a).items(), dens.items()):
            excess = dual_expectation(inp, r, grid) - bound
            if excess > worst:
                worst, where = excess, (a, iname, dname)
    return CheckResult("closed_forms_dominate", worst <= 1e-6, f"max E_Q[D] - bound {worst:.3g} at {where}")


def check_epi_witness():
    from .oracle import maxent_density, mutual_information, output_grid

    worst = math.inf
    for kind, kw in (("truncexp", {"peak": 5.0, "alpha": 0.2}), ("uniform", {"peak": 5.0}),
                     ("exponential", {"average": 1.0})):
        dens = maxent_density(kind, **kw)
        grid = output_grid(1.0, dens.x_max, 4096)
        worst = min(worst, mutual_information(dens, grid) - dens.epi_bound(1.0))
    return CheckResult("epi_witness", worst >= -1e-4, f"min I - EPI bound {worst:.3g}")


def check_symmetrize():
    from .oracle import mutual_information, output_grid, symmetrize

    worst = math.inf
    for a in GAP_RATIOS:
        grid = output_grid(1.0, a, 2048)
        for inp in gap_inputs(a).values():
            sym = symmetrize(inp, a)
            worst = min(worst, mutual_information(sym, grid) - mutual_information(inp, grid))
    return CheckResult("symmetrize_never_hurts", worst >= -1e-9, f"min I(sym) - I(orig) {worst:.3g}")


def check_low_snr_inputs():
    from .oracle import binary_input, flash_input, mutual_information, output_grid

    a, alpha = 1e-2, 0.3
    inp = binary_input(a, alpha)
    ratio_b = mutual_information(inp, output_grid(1.0, a, 2048)) / (a * a)
    law_b = low_snr_asymptote("I", alpha).coefficient
    e = 1e-4
    flash = flash_input(e, 1.0)
    ratio_f = mutual_information(flash, output_grid(1.0, float(flash.points.max()), 4096)) / \
        low_snr_asymptote("III").scale(e)
    ok = abs(ratio_b / law_b - 1) < 0.05 and ratio_f >= 0.5
    return CheckResult("low_snr_inputs", ok, f"binary I/A^2 {ratio_b:.5g} vs {law_b:.5g}; flash I/law {ratio_f:.4g}")


SUITES = {
    "lemmas": (check_q_bracket, check_q_half_gauss, check_q_shape, check_window_mass, check_shifted_tail, check_linear_tail,
               check_phi, check_dual_log_factor, check_dual_ratio),
    "sandwich": (check_sandwich_defaults, check_sandwich_optimized, check_monotone_lower, check_half_continuity,
                 check_case2_alpha_free, check_sandwich_ba),
    "asymptotics": (check_high_snr, check_chi, check_low_snr),
    "oracle": (check_duality_gap, check_closed_forms, check_epi_witness, check_symmetrize, check_low_snr_inputs),
}


def run_suite(name):
    """Yield the CheckResults of one suite in order."""
    for fn in SUITES[name]:
        res = fn()
        if isinstance(res, CheckResult):
            yield res
        else:
            yield from res
