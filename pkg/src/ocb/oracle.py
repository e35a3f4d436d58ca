"""Independent numerical witnesses for the closed-form bounds.

* a discretised channel (uniform input grid, Gauss-Legendre output nodes)
  and a constrained Blahut-Arimoto solver on it,
* mutual information of explicit input laws by output-side quadrature,
* the relative-entropy gap between the true output law and each of the
  output densities used by the duality bounds.

Everything is in nats.  Input laws are always finite mixtures of point
masses; continuous laws are turned into one by Gauss-Legendre quadrature
on the input side (see ``MaxentDensity.discretize``).
"""
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .bounds import ConstraintSpec
from .errors import ConvergenceError, DomainError
from .params import solve_mu_star
from .qfunc import SQRT2PI, centered_mass, q

GL_ORDER = 32
TAIL_SIGMAS = 8.0
CASE3_SPAN = 40.0  # Case III inputs are truncated at max(40 E, E + 10 sigma)
MASS_TOL = 1e-12
MEAN_TOL = 1e-9
LOG_FLOOR = -745.0  # exp() of anything below is exactly 0
RESEED = 1e-6  # uniform mass mixed into every warm start
PROLONG_MIX = 1e-3  # uniform mass mixed in when moving to a finer input grid
CERT_GAP = 1e-3  # nats; required certified accuracy of each full-grid solve
COARSEST = 20  # input points on the coarsest warm-start level
SEARCH_SIZE = 65  # the multiplier is first located on the level with this many points
COARSE_CAP = 3000  # updates per solve on the warm-start levels
SEED_MULT = 0.5  # first multiplier guess, in units of 1/E


def _gl_nodes(edges, order=GL_ORDER):
    """Composite Gauss-Legendre nodes and weights on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    g, gw = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def _with_breaks(edges, breaks):
    extra = [b for b in breaks if edges[0] < b < edges[-1]]
    return np.unique(np.concatenate([edges, extra]))


def _log_gauss(y, x, sigma):
    z = (y[None, :] - x[:, None]) / sigma
    return -0.5 * z * z - math.log(SQRT2PI * sigma)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# ------------------------------------------------------------------ inputs

@dataclass(frozen=True)
class DiscreteInput:
    """Finite input law: support points and probability masses."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.points, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if p.shape != m.shape or p.ndim != 1 or p.size == 0:
            raise DomainError("points and masses must be 1-d arrays of the same length")
        if not (np.all(np.isfinite(p)) and np.all(m >= 0)):
            raise DomainError("masses must be nonnegative and points finite")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise DomainError(f"masses sum to {m.sum()!r}, not 1")
        object.__setattr__(self, "points", _readonly(p))
        object.__setattr__(self, "masses", _readonly(m))

    @classmethod
    def normalized(cls, points, weights):
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum())

    @property
    def mean(self):
        return float(self.masses @ self.points)

    def admissible(self, spec: ConstraintSpec):
        """True when the law meets the peak and average constraints of ``spec``."""
        if np.any(self.points < 0):
            return False
        if spec.peak is not None and np.any(self.points > spec.peak * (1 + 1e-12)):
            return False
        return self.mean <= spec.average + MEAN_TOL

    def compact(self, rel=0.0):
        """Drop zero-mass points (and those below ``rel`` times the largest mass)."""
        keep = self.masses > rel * self.masses.max()
        return DiscreteInput.normalized(self.points[keep], self.masses[keep])


def point_mass(x=0.0):
    return DiscreteInput([x], [1.0])


def binary_input(peak, alpha, sigma=1.0):
    """On-off input for weak peak-limited signals: A(1 - A/sigma) w.p. alpha, else 0."""
    if not (0 < alpha <= 1 and 0 < peak < sigma):
        raise DomainError("binary input needs 0 < alpha <= 1 and 0 < A < sigma")
    return DiscreteInput([0.0, peak * (1.0 - peak / sigma)], [1.0 - alpha, alpha])


def flash_location(average, sigma, c=3.0):
    """x1 = sigma sqrt(c log(sigma/E)), where the flash input puts its mass."""
    if not (0 < average <= 0.5 * sigma and c > 2):
        raise DomainError("flash input needs 0 < E <= sigma/2 and c > 2")
    return sigma * math.sqrt(c * math.log(sigma / average))


def flash_input(average, sigma, c=3.0):
    """Rare large pulse at x1 with probability E/x1, otherwise 0."""
    x1 = flash_location(average, sigma, c)
    p = average / x1
    return DiscreteInput([0.0, x1], [1.0 - p, p])


def symmetrize(inp: DiscreteInput, peak):
    """Equal mixture of X and A - X; the mean becomes A/2 exactly."""
    if np.any(inp.points < 0) or np.any(inp.points > peak):
        raise DomainError("input must be supported on [0, A]")
    pts = np.concatenate([inp.points, peak - inp.points])
    ms = 0.5 * np.concatenate([inp.masses, inp.masses])
    order = np.argsort(pts, kind="stable")
    pts, ms = pts[order], ms[order]
    # merge coincident points so a symmetric law maps to itself
    merged_p, merged_m = [pts[0]], [ms[0]]
    for x, m in zip(pts[1:], ms[1:]):
        if abs(x - merged_p[-1]) <= 1e-12 * max(peak, 1.0):
            merged_m[-1] += m
        else:
            merged_p.append(x)
            merged_m.append(m)
    return DiscreteInput.normalized(merged_p, merged_m)


# ------------------------------------------------------- max-entropy laws

@dataclass(frozen=True)
class MaxentDensity:
    """Max-entropy input density on [0, x_max] with its analytic entropy."""

    kind: str  # "truncexp", "uniform" or "exponential"
    x_max: float
    mean: float
    entropy: float
    rate: float  # decay per unit amplitude; 0 for the uniform law
    norm: float  # pdf(x) = norm * exp(-rate x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= self.x_max)
        return np.where(inside, self.norm * np.exp(-self.rate * np.clip(x, 0, None)), 0.0)

    def discretize(self, panels=16, order=GL_ORDER):
        """Gauss-Legendre point masses reproducing the density's integrals."""
        x, w = _gl_nodes(np.linspace(0.0, self.x_max, panels + 1), order)
        return DiscreteInput.normalized(x, self.pdf(x) * w)

    def epi_bound(self, sigma):
        """1/2 log(1 + e^{2h(X)} / (2 pi e sigma^2)), the entropy-power lower bound."""
        z = 2.0 * self.entropy - math.log(2 * math.pi * math.e * sigma * sigma)
        return 0.5 * np.logaddexp(0.0, z)


def maxent_density(kind, peak=None, average=None, alpha=None):
    """Named max-entropy input density.

    ``truncexp``: rate mu*/A on [0, A] with mean alpha A, 0 < alpha < 1/2;
    ``uniform``: flat on [0, A]; ``exponential``: mean E on [0, inf),
    truncated at 40 E where the discarded mass is e^{-40}.
    """
    if kind == "uniform":
        if not (peak and peak > 0):
            raise DomainError("uniform density needs A > 0")
        return MaxentDensity("uniform", peak, 0.5 * peak, math.log(peak), 0.0, 1.0 / peak)
    if kind == "truncexp":
        if not (peak and peak > 0):
            raise DomainError("truncated exponential needs A > 0")
        mu = solve_mu_star(alpha).mu
        log_norm = math.log(mu / peak) - math.log(-math.expm1(-mu))
        return MaxentDensity("truncexp", peak, alpha * peak, mu * alpha - log_norm, mu / peak, math.exp(log_norm))
    if kind == "exponential":
        if not (average and average > 0):
            raise DomainError("exponential density needs E > 0")
        return MaxentDensity("exponential", CASE3_SPAN * average, average, 1.0 + math.log(average), 1.0 / average, 1.0 / average)
    raise DomainError(f"unknown max-entropy density {kind!r}")


# ------------------------------------------------------------------ grid

@dataclass(frozen=True)
class ChannelGrid:
    """Discretised channel: input points, output quadrature, Gaussian log-kernel."""

    sigma: float
    x_max: float
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    edges: np.ndarray  # output panel edges
    log_kernel: np.ndarray  # (n_in, n_out) log of the N(x_i, sigma^2) density at y_j

    @property
    def n_in(self):
        return self.x.size

    @property
    def n_out(self):
        return self.y.size

    def row_mass(self):
        """Quadrature of each kernel row; 1 up to the truncated Gaussian tails."""
        return np.exp(self.log_kernel) @ self.weights

    @cached_property
    def transition(self):
        # row-normalised channel matrix of the discrete memoryless surrogate
        t = np.exp(self.log_kernel) * self.weights[None, :]
        t /= t.sum(axis=1, keepdims=True)
        t.flags.writeable = False
        return t

    @cached_property
    def _neg_row_entropy(self):
        t = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(t > 0, t * np.log(t), 0.0).sum(axis=1)
        v.flags.writeable = False
        return v


def input_span(spec: ConstraintSpec):
    """Right end of the input grid: A when peak-limited, else the truncation point."""
    if spec.peak is not None:
        if not spec.peak > 0:
            raise DomainError("the grid needs A > 0")
        return float(spec.peak)
    if not spec.average > 0:
        raise DomainError("the grid needs E > 0")
    return max(CASE3_SPAN * spec.average, spec.average + 10.0 * spec.sigma)


def output_nodes(sigma, x_max, n_out):
    order = min(GL_ORDER, n_out)
    panels = max(1, n_out // order)
    edges = np.linspace(-TAIL_SIGMAS * sigma, x_max + TAIL_SIGMAS * sigma, panels + 1)
    y, w = _gl_nodes(edges, order)
    return y, w, edges


def build_grid(spec: ConstraintSpec, n_in=512, n_out=4096):
    """Uniform input grid on [0, x_max] and ``n_out`` output nodes on [-8s, x_max + 8s]."""
    if not isinstance(spec, ConstraintSpec):
        raise DomainError("build_grid needs a ConstraintSpec")
    if n_in < 2 or n_out < 16:
        raise DomainError("need n_in >= 2 and n_out >= 16")
    x_max = input_span(spec)
    x = np.linspace(0.0, x_max, int(n_in))
    y, w, edges = output_nodes(spec.sigma, x_max, int(n_out))
    return ChannelGrid(
        sigma=spec.sigma,
        x_max=x_max,
        x=_readonly(x),
        y=_readonly(y),
        weights=_readonly(w),
        edges=_readonly(edges),
        log_kernel=_readonly(_log_gauss(y, x, spec.sigma)),
    )


def output_grid(sigma, x_max, n_out=2048):
    """Output quadrature for inputs supported on [0, x_max], without a kernel matrix.

    Enough for mutual_information and duality_gap, not for blahut_arimoto.
    """
    if not (sigma > 0 and x_max >= 0):
        raise DomainError("need sigma > 0 and x_max >= 0")
    y, w, edges = output_nodes(sigma, x_max, int(n_out))
    return ChannelGrid(sigma, float(x_max), _readonly([0.0, x_max]), _readonly(y), _readonly(w), _readonly(edges),
                       _readonly(np.empty((0, 0))))


# ------------------------------------------------- mutual information

def _check_support(inp, grid):
    lo, hi = grid.edges[0] + TAIL_SIGMAS * grid.sigma, grid.edges[-1] - TAIL_SIGMAS * grid.sigma
    slack = 1e-9 * max(1.0, hi - lo)
    if inp.points.min() < lo - slack or inp.points.max() > hi + slack:
        raise DomainError("input support is not covered by the output grid")


def _log_output(inp, y, sigma):
    m = inp.masses > 0
    with np.errstate(divide="ignore"):
        lq = np.log(inp.masses[m])
    return logsumexp(_log_gauss(y, inp.points[m], sigma) + lq[:, None], axis=0)


def output_entropy(inp: DiscreteInput, grid: ChannelGrid):
    """h(Y) by quadrature of the mixture output density."""
    _check_support(inp, grid)
    lf = _log_output(inp, grid.y, grid.sigma)
    return float(-(grid.weights * np.exp(lf)) @ lf)


def mutual_information(inp, grid: ChannelGrid):
    """I(X; X + Z) = h(Y) - 1/2 log(2 pi e sigma^2), clipped at 0.

    ``inp`` is a DiscreteInput or a MaxentDensity (discretised here).
    """
    if isinstance(inp, MaxentDensity):
        inp = inp.discretize()
    h = output_entropy(inp, grid)
    return max(h - 0.5 * math.log(2 * math.pi * math.e * grid.sigma ** 2), 0.0)


def divergence_from_zero(inp: DiscreteInput, grid: ChannelGrid):
    """E_Q[D(W(.|X) || W(.|0))] by quadrature (closed form: E[X^2] / 2 sigma^2)."""
    _check_support(inp, grid)
    y, w, s = grid.y, grid.weights, grid.sigma
    lk = _log_gauss(y, inp.points, s)
    l0 = _log_gauss(y, np.zeros(1), s)[0]
    per_point = (np.exp(lk) * (lk - l0[None, :])) @ w
    return float(inp.masses @ per_point)


# ------------------------------------------------- output densities

class DensityId(enum.Enum):
    R1 = "gauss_matched"  # Gaussian with the input's mean and variance bound, Case I
    R2 = "gauss_exp_gauss"  # Gaussian tails around a truncated exponential, Case I
    R3 = "gauss_centred"  # Gaussian centred at A/2, Case II
    R4 = "gauss_flat_gauss"  # Gaussian tails around a flat top, Case II
    R5 = "gauss_exp"  # Gaussian left tail, exponential right tail, Case III


@dataclass(frozen=True)
class OutputDensity:
    """One of the five output laws of the duality bounds, with its parameters."""

    id: DensityId
    sigma: float
    params: dict = field(default_factory=dict)

    @property
    def breaks(self):
        p = self.params
        if self.id in (DensityId.R2, DensityId.R4):
            return (-p["delta"], p["peak"] + p["delta"])
        if self.id is DensityId.R5:
            return (-p["delta"],)
        return ()

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)
        s, p = self.sigma, self.params
        gauss = -math.log(SQRT2PI * s)
        if self.id is DensityId.R1:
            a, e = p["peak"], p["average"]
            var = s * s + e * (a - e)
            return -0.5 * (y - e) ** 2 / var - 0.5 * math.log(2 * math.pi * var)
        if self.id is DensityId.R3:
            a = p["peak"]
            var = s * s + 0.25 * a * a
            return -0.5 * (y - 0.5 * a) ** 2 / var - 0.5 * math.log(2 * math.pi * var)
        if self.id in (DensityId.R2, DensityId.R4):
            a, d = p["peak"], p["delta"]
            left = gauss - 0.5 * (y / s) ** 2
            right = gauss - 0.5 * ((y - a) / s) ** 2
            core_mass = math.log(centered_mass(d / s))
            if self.id is DensityId.R4:
                mid = np.full_like(y, core_mass - math.log(a + 2 * d))
            else:
                mu = p["mu"]
                # log( mu / (A (e^{mu d/A} - e^{-mu (1 + d/A)})) ) + log mass - mu y / A
                log_den = mu * d / a + math.log(-math.expm1(-mu * (1.0 + 2.0 * d / a)))
                mid = core_mass + math.log(mu / a) - log_den - mu * y / a
            return np.where(y < -d, left, np.where(y > a + d, right, mid))
        d, b = p["delta"], p["beta"]
        g = 0.5 * (d / s) ** 2
        log_norm = np.logaddexp(math.log(b) - g, math.log(SQRT2PI * s * q(d / s)))
        left = -0.5 * (y / s) ** 2 - log_norm
        right = -g - (y + d) / b - log_norm
        return np.where(y < -d, left, right)


def output_density(density_id: DensityId, sigma, **params):
    """Validated OutputDensity.  Parameters per density:

    R1: peak, average (average <= peak / 2); R2: peak, delta > 0, mu > 0;
    R3: peak; R4: peak, delta > 0; R5: delta (<= -sigma/sqrt(e) or >= 0), beta > 0.
    """
    density_id = DensityId(density_id)
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    need = {
        DensityId.R1: {"peak", "average"},
        DensityId.R2: {"peak", "delta", "mu"},
        DensityId.R3: {"peak"},
        DensityId.R4: {"peak", "delta"},
        DensityId.R5: {"delta", "beta"},
    }[density_id]
    if set(params) != need:
        raise DomainError(f"{density_id.name} takes parameters {sorted(need)}, got {sorted(params)}")
    p = params
    if "peak" in p and not p["peak"] > 0:
        raise DomainError("peak must be positive")
    if density_id is DensityId.R1 and not 0 <= p["average"] <= 0.5 * p["peak"]:
        raise DomainError("R1 needs 0 <= E <= A/2")
    if density_id in (DensityId.R2, DensityId.R4) and not p["delta"] > 0:
        raise DomainError(f"{density_id.name} needs delta > 0")
    if density_id is DensityId.R2 and not p["mu"] > 0:
        raise DomainError("R2 needs mu > 0")
    if density_id is DensityId.R5:
        if not p["beta"] > 0:
            raise DomainError("R5 needs beta > 0")
        if not (p["delta"] >= 0 or p["delta"] <= -sigma * math.exp(-0.5)):
            raise DomainError("R5 needs delta >= 0 or delta <= -sigma/sqrt(e)")
    return OutputDensity(density_id, float(sigma), {k: float(v) for k, v in p.items()})


def _gap_nodes(density, grid):
    lo = min(grid.edges[0], -TAIL_SIGMAS * grid.sigma + min(density.breaks, default=0.0))
    hi = max(grid.edges[-1], max(density.breaks, default=0.0) + TAIL_SIGMAS * grid.sigma)
    step = float(np.diff(grid.edges).max())
    n = max(1, int(math.ceil((hi - lo) / step)))
    edges = _with_breaks(np.linspace(lo, hi, n + 1), density.breaks)
    return _gl_nodes(edges)


def density_mass(density: OutputDensity, lo, hi, panels=256):
    """Quadrature of the density over [lo, hi], split at its breakpoints."""
    edges = _with_breaks(np.linspace(lo, hi, panels + 1), density.breaks)
    y, w = _gl_nodes(edges)
    return float(w @ np.exp(density.logpdf(y)))


def duality_gap(inp: DiscreteInput, density: OutputDensity, grid: ChannelGrid):
    """E_Q[D(W(.|X) || R)] - I(Q, W), which equals D(P_Y || R) >= 0.

    Quadrature panels are split at the density's breakpoints.
    """
    if density.sigma != grid.sigma:
        raise DomainError("density and grid use different sigma")
    _check_support(inp, grid)
    y, w = _gap_nodes(density, grid)
    lf = _log_output(inp, y, grid.sigma)
    return float((w * np.exp(lf)) @ (lf - density.logpdf(y)))


def dual_expectation(inp: DiscreteInput, density: OutputDensity, grid: ChannelGrid):
    """E_Q[D(W(.|X) || R)] = -E[log R(Y)] - 1/2 log(2 pi e sigma^2)."""
    _check_support(inp, grid)
    y, w = _gap_nodes(density, grid)
    lf = _log_output(inp, y, grid.sigma)
    cross = -float((w * np.exp(lf)) @ density.logpdf(y))
    return cross - 0.5 * math.log(2 * math.pi * math.e * grid.sigma ** 2)


# ------------------------------------------------------- Blahut-Arimoto

@dataclass
class BAInfo:
    multiplier: float  # Lagrange multiplier s of the mean constraint
    upper: float  # certified upper bound on the discretised capacity
    iterations: int  # BA updates over all levels and multipliers
    history: list  # one array per solve: the Lagrangian I - s E[X] at each iterate


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def tick(self, theta):
        self.used += 1
        if self.used > self.limit:
            raise ConvergenceError(f"Blahut-Arimoto needed more than {self.limit} updates", last=np.exp(theta))


def _normalize_log(theta):
    t = theta - theta.max()
    t -= math.log(np.exp(t).sum())
    t[t < LOG_FLOOR] = -np.inf
    return t


def _mix_uniform(theta, eps):
    qv = np.exp(theta)
    return np.log((1.0 - eps) * qv + eps / qv.size)


class _Level:
    """BA on the channel restricted to a subset of the input grid."""

    def __init__(self, grid, idx):
        self.idx = idx
        self.t = np.ascontiguousarray(grid.transition[idx])
        self.h = grid._neg_row_entropy[idx]
        self.x = grid.x[idx]

    def scores(self, theta, s):
        # v_i = D(W(.|x_i) || P_Y) - s x_i for the law exp(theta)
        qv = np.exp(theta)
        with np.errstate(divide="ignore"):
            lp = np.log(qv @ self.t)
        lp[~np.isfinite(lp)] = LOG_FLOOR
        return qv, self.h - self.t @ lp - s * self.x

    def solve(self, theta, s, budget, history, tol, cap=None):
        """Iterate theta <- theta + v (normalised) until the Lagrangian gains less
        than ``tol`` per update and max_i v_i - Lagrangian <= CERT_GAP.

        The Lagrangian is nondecreasing along the iterates and max_i v_i
        bounds its supremum, so the second condition is a guaranteed accuracy.
        """
        theta = _mix_uniform(theta, RESEED)  # zero masses could never come back
        prev = -math.inf
        trace = []
        while True:
            budget.tick(theta)
            qv, v = self.scores(theta, s)
            lag, up = float(qv @ v), float(v.max())
            trace.append(lag)
            if (lag - prev < tol and up - lag <= CERT_GAP) or (cap is not None and len(trace) >= cap):
                history.append(np.array(trace))
                return theta, lag, up
            prev = lag
            theta = _normalize_log(theta + v)

    def mean(self, theta):
        return float(np.exp(theta) @ self.x)


def _subsets(n):
    """Input-index subsets from about COARSEST points up to all n, doubling each time."""
    sizes = [n]
    while sizes[-1] > COARSEST:
        sizes.append(sizes[-1] // 2 + 1)
    return [np.unique(np.round(np.linspace(0, n - 1, m)).astype(int)) for m in reversed(sizes)]


def _prolong(theta, x_src, x_dst):
    # each coarse mass moves to the nearest fine point; the rest get a little mass
    pos = np.abs(x_dst[:, None] - x_src[None, :]).argmin(axis=0)
    qf = np.zeros(x_dst.size)
    np.add.at(qf, pos, np.exp(theta))
    with np.errstate(divide="ignore"):
        return _mix_uniform(np.log(qf / qf.sum()), PROLONG_MIX)


def _find_multiplier(run, s0, theta, target, rel, grow):
    """Solve E_s[X] = target for the multiplier s; E_s is nonincreasing in s.

    ``run(s, theta)`` returns (s, theta, mean, upper).  Brackets geometrically
    from ``s0`` (factor ``grow``, squared at each step), then regula falsi
    with the Illinois modification.  Returns (lo, hi): lo has mean above the
    target, hi at or below it; lo is None when hi alone is within ``rel``.
    """
    cur = run(s0, theta)
    if abs(cur[2] - target) <= rel * target and cur[2] <= target + MEAN_TOL:
        return None, cur
    if cur[2] > target:
        lo, hi = cur, None
        while hi is None:
            cand = run(lo[0] * grow, lo[1])
            grow *= grow
            if cand[2] > target:
                lo = cand
            else:
                hi = cand
    else:
        lo, hi = None, cur
        while lo is None:
            cand = run(hi[0] / grow, hi[1])
            grow *= grow
            if cand[2] > target:
                lo = cand
            elif cand[0] < 1e-12 / target:
                return None, cand
            else:
                hi = cand
    side = 0
    while abs(hi[2] - target) > rel * target and hi[0] - lo[0] > 1e-13 * hi[0]:
        f_lo, f_hi = lo[2] - target, hi[2] - target
        w_lo = 0.5 if side == 1 else 1.0
        w_hi = 0.5 if side == -1 else 1.0
        s = (lo[0] * f_hi * w_hi - hi[0] * f_lo * w_lo) / (f_hi * w_hi - f_lo * w_lo)
        if not lo[0] < s < hi[0]:
            s = 0.5 * (lo[0] + hi[0])
        cand = run(s, lo[1] if abs(f_lo) < abs(f_hi) else hi[1])
        if cand[2] > target:
            lo, side = cand, -1
        else:
            hi, side = cand, 1
    return lo, hi


def blahut_arimoto(grid: ChannelGrid, spec: ConstraintSpec, tol=1e-9, max_iter=100_000, info=False):
    """Capacity of the discretised channel under the constraints of ``spec``.

    Alternating maximisation of I(q) - s E_q[X].  Coarse subsets of the
    input grid supply warm starts and a first multiplier guess; on the full
    grid s is refined by regula falsi until |E[X] - E| <= 1e-6 E, unless
    s = 0 already meets the constraint.  Each full-grid solve stops once the
    per-update gain is below ``tol`` and the certified gap below CERT_GAP.
    The solutions on either side of the target are mixed so the returned
    mean is exactly E.

    Returns (capacity_nats, DiscreteInput), plus a BAInfo when ``info``.
    Raises ConvergenceError after ``max_iter`` updates in total; ``.last``
    holds the masses at that point.
    """
    if abs(input_span(spec) - grid.x_max) > 1e-12 * grid.x_max or spec.sigma != grid.sigma:
        raise DomainError("grid was not built for this constraint")
    budget = _Budget(max_iter)
    hist = []
    target = spec.average
    subsets = _subsets(grid.n_in)
    levels = [_Level(grid, idx) for idx in subsets]
    last = len(levels) - 1
    search = next((k for k, idx in enumerate(subsets) if idx.size >= SEARCH_SIZE), last)
    fine = levels[-1]

    def climb(theta, s, start, stop):
        # fixed-s solves on levels start..stop, prolonging in between
        for k in range(start, stop + 1):
            if k > start:
                theta = _prolong(theta, levels[k - 1].x, levels[k].x)
            theta, lag, up = levels[k].solve(theta, s, budget, hist, tol, cap=None if k == last else COARSE_CAP)
        return theta, up

    def runner(k, cap):
        def run(s, theta):
            th, _, up = levels[k].solve(theta, s, budget, hist, tol, cap=cap)
            return (s, th, levels[k].mean(th), up)
        return run

    theta = np.full(subsets[0].size, -math.log(subsets[0].size))
    theta, _ = climb(theta, 0.0, 0, search)
    if levels[search].mean(theta) <= target * (1 + 1e-3):
        # the mean constraint is (nearly) inactive
        theta, up = climb(theta, 0.0, search, last) if search < last else (theta, None)
        if up is None:
            qv, v = fine.scores(theta, 0.0)
            up = float(v.max())
        lo, hi = None, (0.0, theta, fine.mean(theta), up)
        if hi[2] > target + MEAN_TOL:
            lo, hi = _find_multiplier(runner(last, None), 1e-3 / target, theta, target, 1e-6, 4.0)
    else:
        _, guess = _find_multiplier(runner(search, COARSE_CAP), SEED_MULT / target, theta, target, 1e-4, 4.0)
        theta, _ = climb(guess[1], guess[0], search, last) if search < last else (guess[1], None)
        lo, hi = _find_multiplier(runner(last, None), guess[0], theta, target, 1e-6, 1.05)
    s_fin = hi[0]
    upper = hi[3] + s_fin * target
    if lo is None:
        theta = hi[1]
    else:
        lam = (target - hi[2]) / (lo[2] - hi[2])
        lam = min(max(lam, 0.0), 1.0)
        with np.errstate(divide="ignore"):
            theta = np.log(lam * np.exp(lo[1]) + (1.0 - lam) * np.exp(hi[1]))
        if fine.mean(theta) > target + MEAN_TOL:
            theta = hi[1]
        upper = min(upper, lo[3] + lo[0] * target)
    qv, v = fine.scores(theta, 0.0)
    cap = float(qv @ v)
    law = DiscreteInput.normalized(grid.x, qv)
    if info:
        return cap, law, BAInfo(s_fin, upper, budget.used, hist)
    return cap, law
