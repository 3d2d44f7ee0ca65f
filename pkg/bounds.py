"""
Closed-form constants and moment bounds for polynomial martingales.

All functions are pure. Moment orders are restricted to p >= 4
(config.P_FLOOR); os_function alone accepts 2 < p < 4 behind
`extended=True`.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

import config
from errors import DomainError, NumericalError


def _check_p(p, extended=False):
    if not math.isfinite(p):
        raise DomainError(f"moment order must be finite, got {p}")
    if p <= 2.0:
        raise DomainError(f"p={p}: ln(p/2) must be positive, need p > 2")
    if not extended and p < config.P_FLOOR:
        raise DomainError(f"p={p} below the floor {config.P_FLOOR} "
                          "(pass extended=True to explore 2 < p < 4)")


def _check_d(d):
    if int(d) != d or d < 1:
        raise DomainError(f"degree must be an integer >= 1, got {d}")


@dataclass(frozen=True)
class BoundParams:
    """Inputs shared by the moment bounds."""
    d: int
    p: float
    k_os: float = None
    k_r: float = config.K_R

    def validate(self):
        _check_d(self.d)
        _check_p(self.p)
        k_os = self.k_os if self.k_os is not None else k_os_value()
        if not (k_os > 0 and self.k_r > 0):
            raise DomainError("constants must be positive")
        return self


@dataclass(frozen=True)
class LowerShape:
    """Reference curve p -> p^d / (ln p)^d; the constant C(d) stays symbolic."""
    d: int

    def __call__(self, p):
        return lower_shape(p, self.d)


# --------------------------------------------------------------------
# Osekowski function and constant
# --------------------------------------------------------------------
def os_function(p, extended=False):
    """Os(p) = 4*sqrt(2) * (p/4 + 1)^(1/p) * (1 + p/ln(p/2))."""
    _check_p(p, extended=extended)
    return 4.0 * math.sqrt(2.0) * (p / 4.0 + 1.0) ** (1.0 / p) * (1.0 + p / math.log(p / 2.0))


def _os_ratio(grid):
    grid = np.asarray(grid, dtype=float)
    os_vals = (4.0 * math.sqrt(2.0) * (grid / 4.0 + 1.0) ** (1.0 / grid)
               * (1.0 + grid / np.log(grid / 2.0)))
    return os_vals * np.log(grid) / grid


def default_os_grid():
    n_steps = int(round((config.OS_GRID_MAX - config.OS_GRID_MIN) / config.OS_GRID_STEP))
    return config.OS_GRID_MIN + config.OS_GRID_STEP * np.arange(n_steps + 1)


def os_constant(p_grid=None):
    """
    Max of Os(p) / (p / ln p) over a grid of moment orders.

    Returns (value, argmax). The default grid is [4, 200] with step 0.01.
    """
    grid = default_os_grid() if p_grid is None else np.atleast_1d(np.asarray(p_grid, dtype=float))
    if grid.size == 0:
        raise DomainError("empty p grid")
    if not np.all(np.isfinite(grid)) or grid.min() < config.P_FLOOR:
        raise DomainError(f"grid points must be finite and >= {config.P_FLOOR}")
    ratios = _os_ratio(grid)
    idx = int(np.argmax(ratios))
    return float(ratios[idx]), float(grid[idx])


@lru_cache(maxsize=None)
def k_os_value():
    """K_Os from the default grid (~15.7858)."""
    return os_constant()[0]


# --------------------------------------------------------------------
# gamma / kappa recursions
# --------------------------------------------------------------------
def _recursion(d, start):
    _check_d(d)
    k = k_os_value()
    value = start
    for j in range(1, int(d)):
        value *= k * (1.0 + 1.0 / j) ** j
    return value


def gamma(d):
    """gamma(1) = K_Os; gamma(d+1) = gamma(d) * K_Os * (1 + 1/d)^d."""
    return _recursion(d, k_os_value())


def gamma_upper(d):
    _check_d(d)
    return k_os_value() ** d * math.e ** (d - 1)


def kappa(d):
    """kappa(1) = K_R; same multiplier as gamma."""
    return _recursion(d, config.K_R)


def kappa_upper(d):
    _check_d(d)
    return config.K_R * (k_os_value() * math.e) ** (d - 1)


# --------------------------------------------------------------------
# Moment bounds
# --------------------------------------------------------------------
def lower_shape(p, d):
    """p^d / (ln p)^d. d = 0 gives the constant 1."""
    _check_p(p)
    if int(d) != d or d < 0:
        raise DomainError(f"degree must be a non-negative integer, got {d}")
    return (p / math.log(p)) ** d


def _moment_factor(value, name):
    if math.isnan(value) or value < 0:
        raise DomainError(f"{name} must be >= 0, got {value}")
    if math.isinf(value):
        raise NumericalError(f"{name} is infinite: a moment mu_m(p) diverges")
    return value


def martingale_bound(p, d, v):
    """gamma(d) * p^d / (ln p)^d * V_d(p); holds for every n and every b in B."""
    _check_d(d)
    _check_p(p)
    v = _moment_factor(v, "V_d(p)")
    return gamma(d) * lower_shape(p, d) * v


def independent_bound(p, d, w):
    """kappa(d) * p^d / (ln p)^d * W_d(p) for independent differences."""
    _check_d(d)
    _check_p(p)
    w = _moment_factor(w, "W_d(p)")
    return kappa(d) * lower_shape(p, d) * w


def _weights_and_moments(weights, mus):
    b = np.asarray(weights, dtype=float).ravel()
    m = np.asarray(mus, dtype=float).ravel()
    if b.size == 0 or b.size != m.size:
        raise DomainError(f"weights ({b.size}) and moments ({m.size}) must have equal nonzero length")
    if np.any(m < 0) or np.any(np.isnan(m)):
        raise DomainError("moments must be non-negative")
    if np.any(np.isinf(m)):
        raise NumericalError("infinite moment")
    return b, m


def weighted_sum_bound(p, weights, mus):
    """K_Os * (p / ln p) * sqrt(sum b(k)^2 mu_k(p)^2) for a weighted martingale sum."""
    _check_p(p)
    b, m = _weights_and_moments(weights, mus)
    return k_os_value() * (p / math.log(p)) * math.sqrt(math.fsum((b * m) ** 2))


def normalized_sum_bound(p, mus):
    """
    Bounds for n^(-1/2) |sum xi_k|_p.

    Returns (weighted, sup_form): the b(k) = 1/sqrt(n) case of
    weighted_sum_bound and its simplification K_Os * (p/ln p) * max mu_k.
    """
    m = np.asarray(mus, dtype=float).ravel()
    weights = np.full(m.size, 1.0 / math.sqrt(max(m.size, 1)))
    weighted = weighted_sum_bound(p, weights, m)
    return weighted, k_os_value() * (p / math.log(p)) * float(m.max())


def independent_sum_bound(p, mus):
    """K_R * (p / ln p) * sqrt(mean mu_k(p)^2) for independent summands."""
    _check_p(p)
    m = np.asarray(mus, dtype=float).ravel()
    b, m = _weights_and_moments(np.full(m.size, 1.0 / math.sqrt(max(m.size, 1))), m)
    return config.K_R * (p / math.log(p)) * math.sqrt(math.fsum((b * m) ** 2))


def remark_bound(p, d, n, mu_sup, c=None):
    """
    Ones-weight example: n^(-d/2) |R(d)|_p <= C(d) (p/ln p)^d (sup mu)^d.

    Returns (rhs, weight) where weight = 1/sqrt(n(n-1)...(n-d+1)).
    C(d) defaults to gamma(d).
    """
    _check_d(d)
    if n < d + 1:
        raise DomainError(f"need n >= d + 1, got n={n}, d={d}")
    falling = math.prod(range(n - d + 1, n + 1))
    c = gamma(d) if c is None else c
    return c * lower_shape(p, d) * _moment_factor(mu_sup, "sup mu") ** d, 1.0 / math.sqrt(falling)


def previous_bounds(p, d, v, w, c1=1.0, c2=1.0):
    """Earlier shapes C1(d) p^d V(p) and C2(d) (p^d / ln p) W(p)."""
    _check_d(d)
    _check_p(p)
    v = _moment_factor(v, "V_d(p)")
    w = _moment_factor(w, "W_d(p)")
    return c1 * p ** d * v, c2 * p ** d / math.log(p) * w


def constants_table(max_d=config.CONSTANTS_MAX_D):
    """Rows (d, gamma, gamma_upper, kappa, kappa_upper) for d = 1..max_d."""
    return [(d, gamma(d), gamma_upper(d), kappa(d), kappa_upper(d))
            for d in range(1, max_d + 1)]
