"""
Tail <-> moment-growth conversions for the power-log family.

Tails T(x) = exp(-c1 x^q (ln x)^(-q r)) correspond to moment growth
psi(p) = C p^(1/q) (ln p)^r; a degree-d polynomial in such differences has
growth C p^(d + 1/q) (ln p)^(r - d) and therefore tails
exp(-C2 x^alpha (ln x)^beta) with alpha = q/(dq+1), beta = -q(r-d)/(dq+1).
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.integrate import IntegrationWarning

import bounds
import config
from errors import DomainError, NumericalError

TAIL_FLOOR = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class TailParams:
    """T(x) = exp(-c1 x^q (ln x)^(-q r)) for x > e. c1 = inf means |xi| <= e."""
    c1: float
    q: float
    r: float = 0.0

    def __post_init__(self):
        if not self.c1 > 0 or not self.q > 0:
            raise DomainError(f"need c1 > 0 and q > 0, got c1={self.c1}, q={self.q}")

    def log_tail(self, x):
        x = np.asarray(x, dtype=float)
        lx = np.log(x)
        return -self.c1 * x ** self.q * lx ** (-self.q * self.r)


@dataclass(frozen=True)
class MomentGrowth:
    """psi(p) = c p^a (ln p)^s on p >= 4."""
    c: float
    a: float
    s: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"growth constant must be positive, got {self.c}")

    def log_psi(self, p):
        p = np.asarray(p, dtype=float)
        return math.log(self.c) + self.a * np.log(p) + self.s * np.log(np.log(p))

    def __call__(self, p):
        return np.exp(self.log_psi(p))


@dataclass(frozen=True)
class TailBoundShape:
    """exp(-c2 x^alpha (ln x)^beta), with the fit residual."""
    alpha: float
    beta: float
    c2: float
    residual: float = 0.0


def tail_exponents(d, q, r):
    """(alpha, beta) = (q/(dq+1), -q(r-d)/(dq+1))."""
    if int(d) != d or d < 1:
        raise DomainError(f"degree must be an integer >= 1, got {d}")
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    denom = d * q + 1.0
    return q / denom, -q * (r - d) / denom


def polynomial_growth(d, q, r, c=1.0):
    """Growth of a degree-d polynomial whose differences grow like p^(1/q) (ln p)^r."""
    return MomentGrowth(c=c, a=d + 1.0 / q, s=r - d)


# --------------------------------------------------------------------
# tail -> moments
# --------------------------------------------------------------------
def _quad(f, lo, hi):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, err = integrate.quad(f, lo, hi, limit=200, epsrel=1e-9)
    if not math.isfinite(value) or err > 1e-6 * abs(value) + 1e-300:
        raise NumericalError(f"quadrature did not converge on [{lo}, {hi}] (estimate {value}, error {err})")
    return value


def tail_to_moment(t, p):
    """
    (e^p + int_e^inf p x^(p-1) T(x) dx)^(1/p).

    Integrated in u = ln x, split at the mode of the log-integrand
    g(u) = ln p + p u - c1 e^(q u) u^(-q r). The e^p term stands in for the
    region x <= e where T carries no information.
    """
    if not math.isfinite(p) or p < config.P_FLOOR:
        raise DomainError(f"p must be >= {config.P_FLOOR}, got {p}")
    if math.isinf(t.c1):
        return math.e

    def g(u):
        try:
            decay = t.c1 * math.exp(t.q * u) * u ** (-t.q * t.r)
        except OverflowError:
            return -math.inf
        return math.log(p) + p * u - decay

    # the decay term must overtake p u well past the mode
    u_hi = 2.0
    while g(u_hi) > -p * u_hi - 100.0:
        u_hi *= 2.0
        if u_hi > 1e4:
            raise NumericalError(f"tail {t} does not decay fast enough for p={p}")

    res = optimize.minimize_scalar(lambda u: -g(u), bounds=(1.0, u_hi), method="bounded",
                                   options={"xatol": 1e-10})
    u_mode = float(res.x)
    g_mode = g(u_mode)
    if g(1.0) > g_mode:
        u_mode, g_mode = 1.0, g(1.0)

    u_end = u_mode + 1.0
    while g(u_end) > g_mode - config.QUAD_TAIL_DROP:
        u_end = u_mode + 2.0 * (u_end - u_mode)

    def f(u):
        return math.exp(g(u) - g_mode)

    area = _quad(f, u_mode, u_end)
    if u_mode > 1.0:
        area += _quad(f, 1.0, u_mode)
    if area <= 0:
        return math.e
    log_total = np.logaddexp(p, g_mode + math.log(area))
    return math.exp(log_total / p)


def fit_moment_growth(t, p_grid=None):
    """C3 = sup over the grid of tail_to_moment / (p^(1/q) (ln p)^r)."""
    if p_grid is None:
        lo, hi, num = config.C3_P_GRID
        p_grid = np.geomspace(lo, hi, num)
    ratios = [tail_to_moment(t, p) / (p ** (1.0 / t.q) * math.log(p) ** t.r) for p in p_grid]
    return MomentGrowth(c=max(ratios), a=1.0 / t.q, s=t.r)


# --------------------------------------------------------------------
# moments -> tail
# --------------------------------------------------------------------
def markov_tail(g, x, p_min=None, p_max=None, points=None):
    """
    ln of inf_{p in [p_min, p_max]} (psi(p) / x)^p, capped at 0, and the
    optimizing p. Grid search on a log-spaced grid, then bounded
    golden-section (Brent) refinement between the grid argmin neighbours.
    """
    if not x > math.e:
        raise DomainError(f"tail bounds need x > e, got {x}")
    p_min = config.MARKOV_P_MIN if p_min is None else p_min
    p_max = config.MARKOV_P_MAX if p_max is None else p_max
    points = config.MARKOV_GRID_POINTS if points is None else points
    log_x = math.log(x)

    def objective(p):
        return float(p * (g.log_psi(p) - log_x))

    grid = np.geomspace(p_min, p_max, points)
    values = grid * (g.log_psi(grid) - log_x)
    j = int(np.argmin(values))
    best_p, best = float(grid[j]), float(values[j])
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, points - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                       options={"xatol": config.MARKOV_XTOL * lo})
        if res.fun < best:
            best_p, best = float(res.x), float(res.fun)
    return min(best, 0.0), best_p


def moment_to_tail(g, x, **kwargs):
    """
    Markov-optimized tail bound inf_p (psi(p)/x)^p, in (0, 1].

    Floored at the smallest normal float; use markov_tail for the log value
    far in the tail.
    """
    return max(math.exp(markov_tail(g, x, **kwargs)[0]), TAIL_FLOOR)


def fit_tail_shape(x_grid, tail=None, log_tail=None, beta=None):
    """
    Least squares of ln(-ln T) on ln x and ln ln x.

    Pass tail values or their logs. With `beta` given, only alpha and c2 are
    fitted. Points with T outside (0, 1) or x <= e are dropped.
    """
    x = np.asarray(x_grid, dtype=float)
    if log_tail is None:
        if tail is None:
            raise DomainError("need tail or log_tail")
        with np.errstate(divide="ignore"):
            log_tail = np.log(np.asarray(tail, dtype=float))
    log_tail = np.asarray(log_tail, dtype=float)
    if log_tail.shape != x.shape:
        raise DomainError("x grid and tail values differ in length")

    keep = np.isfinite(log_tail) & (log_tail < 0) & (x > math.e)
    if keep.sum() < config.MIN_FIT_POINTS:
        raise DomainError(f"degenerate grid: {int(keep.sum())} usable points, "
                          f"need {config.MIN_FIT_POINTS}")
    lx = np.log(x[keep])
    llx = np.log(lx)
    y = np.log(-log_tail[keep])

    if beta is None:
        design = np.column_stack([np.ones_like(lx), lx, llx])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        log_c2, alpha, beta_fit = coef
    else:
        design = np.column_stack([np.ones_like(lx), lx])
        coef, *_ = np.linalg.lstsq(design, y - beta * llx, rcond=None)
        log_c2, alpha = coef
        beta_fit = beta
    fitted = log_c2 + alpha * lx + beta_fit * llx
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return TailBoundShape(alpha=float(alpha), beta=float(beta_fit),
                          c2=float(math.exp(log_c2)), residual=residual)


@dataclass
class PipelineResult:
    d: int
    q: float
    r: float
    theoretical_alpha: float
    theoretical_beta: float
    fitted: TailBoundShape
    x: np.ndarray
    log_bound: np.ndarray
    interior: np.ndarray

    @property
    def alpha_rel_error(self):
        return abs(self.fitted.alpha - self.theoretical_alpha) / self.theoretical_alpha


def exponent_pipeline(d, q, r, x_grid, c=1.0):
    """
    Growth c p^(d+1/q) (ln p)^(r-d) -> Markov tail -> fitted shape.

    Only x where the optimizing p is interior (above the p floor) enter the
    fit; at the floor the bound is a fixed power of x and says nothing about
    the exponential shape. beta is held at its theoretical value.
    """
    alpha, beta = tail_exponents(d, q, r)
    growth = polynomial_growth(d, q, r, c)
    x = np.asarray(x_grid, dtype=float)
    results = [markov_tail(growth, xi) for xi in x]
    log_bound = np.array([lt for lt, _ in results])
    p_star = np.array([ps for _, ps in results])
    interior = p_star > config.MARKOV_P_MIN * (1.0 + 1e-3)
    fitted = fit_tail_shape(x[interior], log_tail=log_bound[interior], beta=beta)
    return PipelineResult(d, q, r, alpha, beta, fitted, x, log_bound, interior)


def martingale_growth(d, v=1.0):
    """
    Moment growth gamma(d) (p / ln p)^d V for a family whose V_d(p) is
    bounded by the constant v (e.g. bounded differences).
    """
    return MomentGrowth(c=bounds.gamma(d) * v, a=float(d), s=-float(d))
