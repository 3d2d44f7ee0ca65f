"""
Monte Carlo estimates of |Q(d, n, b)|_p and its tails, checked against the
closed-form bounds.

The sup over the unit ball B is approximated from below by the normalized
ones direction plus random separable directions, which is enough to test an
upper bound.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

import bounds
import config
import gls
from errors import DomainError, NumericalError
from model import (conditional_variance, entry_moment, generate_batch, mu_exact,
                   relative_moment)
from polyeval import (WeightSpec, normalize_to_B, q_prefix_batch, q_values,
                      random_direction, variance_independent)

DIRECTION_STREAM = 2 ** 32   # spawn key for direction draws, disjoint from path blocks


# --------------------------------------------------------------------
# Moment profiles
# --------------------------------------------------------------------
@dataclass
class MomentProfile:
    """
    Per-layer moment functions mu_m(p) and their naturally normed versions.
    Layers are 0-based.
    """
    d: int
    mu: Callable[[int, float], float]
    mu_tilde: Callable[[int, float], float]

    def V(self, p):
        return math.prod(self.mu(m, self.d * p) for m in range(self.d))

    def W(self, p):
        return math.prod(self.mu(m, p) for m in range(self.d))

    def V_tilde(self, p):
        return math.prod(self.mu_tilde(m, self.d * p) for m in range(self.d))

    def W_tilde(self, p):
        return math.prod(self.mu_tilde(m, p) for m in range(self.d))

    @classmethod
    def from_samples(cls, paths):
        """Empirical profile: sup over i of the sample L^p norm of column (i, m)."""
        x = np.asarray(paths, dtype=float)
        sd = x.std(axis=0)

        def mu(m, p):
            return max(lp_norm(x[:, i, m], p) for i in range(x.shape[1]))

        def mu_tilde(m, p):
            return max(lp_norm(x[:, i, m] / sd[i, m], p) for i in range(x.shape[1]))

        return cls(d=x.shape[2], mu=mu, mu_tilde=mu_tilde)


def moment_profile(spec):
    """Analytic profile of a built-in family."""
    return MomentProfile(d=spec.d,
                         mu=lambda m, p: entry_moment(spec, m, p),
                         mu_tilde=lambda m, p: relative_moment(spec, m, p))


# --------------------------------------------------------------------
# L^p norms
# --------------------------------------------------------------------
def _log_abs(samples, p):
    x = np.abs(np.asarray(samples, dtype=float)).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    if not p >= 2:
        raise DomainError(f"p must be >= 2, got {p}")
    return np.log(x[x > 0]), x.size


def lp_norm(samples, p):
    """((1/N) sum |x_k|^p)^(1/p) through log-sum-exp over ln|x_k|."""
    logs, size = _log_abs(samples, p)
    if logs.size == 0:
        return 0.0
    return math.exp((logsumexp(p * logs) - math.log(size)) / p)


def lp_norm_with_error(samples, p):
    """
    (norm, relative MC error). The standard error of the mean of |x|^p is
    carried through the 1/p root by the delta method.
    """
    logs, size = _log_abs(samples, p)
    if logs.size == 0:
        return 0.0, 0.0
    log_m1 = logsumexp(p * logs) - math.log(size)
    log_m2 = logsumexp(2.0 * p * logs) - math.log(size)
    rel_var = max(math.expm1(log_m2 - 2.0 * log_m1), 0.0)
    return math.exp(log_m1 / p), math.sqrt(rel_var / size) / p


# --------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------
@dataclass
class BoundReport:
    family: str
    d: int
    n: int
    p: float
    direction_id: int
    empirical: float
    bound_martingale: float
    bound_independent: Optional[float]
    ratio: float
    mc_err: float
    normed: bool = False
    s1: Optional[float] = None
    s2: Optional[float] = None
    theta: Optional[float] = None

    @property
    def governing_bound(self):
        return self.bound_independent if self.bound_independent is not None else self.bound_martingale

    @property
    def within_bound(self):
        return self.empirical <= self.governing_bound * (1.0 + config.MC_SLACK * self.mc_err)

    @property
    def passed(self):
        return self.within_bound and self.ratio < config.SANITY_RATIO_CEILING


def _directions(spec, w_directions, seed, weights=()):
    if w_directions < 1:
        raise DomainError("need at least one random direction")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(DIRECTION_STREAM,)))
    found = [normalize_to_B(WeightSpec.ones(spec.n, spec.d))]
    found += [random_direction(spec.n, spec.d, rng) for _ in range(w_directions)]
    for w in weights:
        if (w.n, w.d) != (spec.n, spec.d):
            raise DomainError(f"weight shape (n={w.n}, d={w.d}) does not match the family")
        found.append(normalize_to_B(w))
    return found


def _square_function(spec, w, paths, scales, p, unit):
    """
    (S1, S2, theta) for the degree-one transform Q = sum b_k xi_k: S1 is
    |theta(n)|_p with theta^2 = sum b_k^2 E[xi_k^2 | F(k-1)], S2 is
    |(sum |b_k xi_k|^p)^(1/p)|_p and theta is |theta(n)|_2.
    """
    b = np.array([w.coefficient((i,)) for i in range(1, spec.n + 1)]) / unit
    theta2 = (conditional_variance(spec, scales)[:, :, 0] * b ** 2).sum(axis=1)
    with np.errstate(divide="ignore"):
        per_path = np.exp(logsumexp(p * np.log(np.abs(b * paths[:, :, 0])), axis=1) / p)
    return lp_norm(np.sqrt(theta2), p), lp_norm(per_path, p), math.sqrt(float(theta2.mean()))


def _reports(spec, directions, paths, scales, p_list, normed, profile):
    reports = []
    sig2 = spec.variance_matrix()
    for direction_id, w in enumerate(directions):
        q = q_values(paths, w)
        unit = 1.0
        if normed:
            if spec.is_independent:
                psi = variance_independent(w, sig2)
            else:
                psi = float(np.var(q, ddof=1))
            if not psi > 0:
                raise NumericalError(f"degenerate variance {psi} for direction {direction_id}")
            unit = math.sqrt(psi)
            q = q / unit
        for p in p_list:
            empirical, err = lp_norm_with_error(q, p)
            v = profile.V_tilde(p) if normed else profile.V(p)
            b_mart = bounds.martingale_bound(p, spec.d, v)
            b_ind = None
            if spec.is_independent:
                w_mom = profile.W_tilde(p) if normed else profile.W(p)
                b_ind = bounds.independent_bound(p, spec.d, w_mom)
            s1 = s2 = theta = None
            if spec.d == 1:
                s1, s2, theta = _square_function(spec, w, paths, scales, p, unit)
            reports.append(BoundReport(family=spec.family_id, d=spec.d, n=spec.n, p=float(p),
                                       direction_id=direction_id, empirical=empirical,
                                       bound_martingale=b_mart, bound_independent=b_ind,
                                       ratio=empirical / b_mart, mc_err=err, normed=normed,
                                       s1=s1, s2=s2, theta=theta))
    return reports


def estimate_directions(spec, w_directions, p_list, paths, seed, normed=False, profile=None,
                        weights=()):
    """
    One BoundReport per (direction, p). Direction 0 is the normalized ones
    weight, 1..w_directions are random separable directions in B, and any
    fixed `weights` follow, each normalized into B.
    """
    if paths < 1000:
        raise DomainError(f"need at least 1000 paths, got {paths}")
    p_list = [float(p) for p in np.atleast_1d(p_list)]
    profile = moment_profile(spec) if profile is None else profile
    for p in p_list:
        # reject families whose V_d(p) diverges before simulating
        bounds.martingale_bound(p, spec.d, profile.V(p))
    sample, scales = generate_batch(spec, paths, seed)
    return _reports(spec, _directions(spec, w_directions, seed, weights), sample, scales, p_list,
                    normed, profile)


def best_report(reports):
    """Largest empirical norm; ties go to the lowest direction id."""
    if not reports:
        raise DomainError("no reports")
    return max(reports, key=lambda r: (r.empirical, -r.direction_id))


def estimate_U(spec, w_directions, p, paths, seed):
    """Lower estimate of sup_{b in B} |Q(d, n, b)|_p with both moment bounds."""
    return best_report(estimate_directions(spec, w_directions, [p], paths, seed))


def normed_report(spec, w_directions, p, paths, seed):
    """As estimate_U for Q / sqrt(Var Q) against the relative-moment bounds."""
    return best_report(estimate_directions(spec, w_directions, [p], paths, seed, normed=True))


# --------------------------------------------------------------------
# One-dimensional decomposition
# --------------------------------------------------------------------
@dataclass
class Decomposition:
    family: str
    n: int
    p: float
    lhs: float
    s1: float
    s2: float
    rhs: float
    sum_bound: float
    mc_err: float

    @property
    def passed(self):
        slack = 1.0 + config.MC_SLACK * self.mc_err
        return self.lhs <= self.rhs * slack and self.lhs <= self.sum_bound * slack


def osekowski_decomposition(spec, p, paths, seed):
    """
    lhs = |sum xi_k|_p, S1 = |theta(n)|_p with theta^2 = sum E[xi_k^2 | F(k-1)],
    S2 = |(sum |xi_k|^p)^(1/p)|_p and rhs = Os(p) (S1 + S2); also the
    simplified bound K_Os (p / ln p) sqrt(sum mu_k(p)^2).
    """
    if spec.d != 1:
        raise DomainError("the decomposition is defined for d = 1 families")
    sample, scales = generate_batch(spec, paths, seed)
    xi = sample[:, :, 0]
    lhs, err = lp_norm_with_error(xi.sum(axis=1), p)
    theta = np.sqrt(conditional_variance(spec, scales)[:, :, 0].sum(axis=1))
    s1 = lp_norm(theta, p)
    with np.errstate(divide="ignore"):
        per_path = np.exp(logsumexp(p * np.log(np.abs(xi)), axis=1) / p)
    s2 = lp_norm(per_path, p)
    mus = np.sqrt(spec.variance_matrix()[:, 0]) * mu_exact(spec.base_kind, p)
    sum_bound = bounds.weighted_sum_bound(p, np.ones(spec.n), mus)
    return Decomposition(family=spec.family_id, n=spec.n, p=float(p), lhs=lhs, s1=s1, s2=s2,
                         rhs=bounds.os_function(p) * (s1 + s2), sum_bound=sum_bound, mc_err=err)


# --------------------------------------------------------------------
# Tails
# --------------------------------------------------------------------
@dataclass
class TailCurve:
    x: np.ndarray
    tail: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_samples: int = field(default=0)


def empirical_tail(samples, x_grid, confidence=0.99):
    """P(|X| >= x) per grid point with Wilson score intervals."""
    x = np.asarray(x_grid, dtype=float)
    if x.size == 0:
        raise DomainError("empty x grid")
    if np.any(np.diff(x) < 0):
        raise DomainError("x grid must be ascending")
    values = np.sort(np.abs(np.asarray(samples, dtype=float)).ravel())
    size = values.size
    if size == 0:
        raise DomainError("empty sample")
    hits = size - np.searchsorted(values, x, side="left")
    phat = hits / size
    z = norm.ppf(0.5 + confidence / 2.0)
    denom = 1.0 + z * z / size
    centre = (phat + z * z / (2 * size)) / denom
    half = z * np.sqrt(phat * (1 - phat) / size + z * z / (4 * size * size)) / denom
    return TailCurve(x=x, tail=phat, lower=np.clip(np.minimum(centre - half, phat), 0, 1),
                     upper=np.clip(np.maximum(centre + half, phat), 0, 1), n_samples=size)


@dataclass
class TailComparison:
    family: str
    d: int
    n: int
    curve: TailCurve
    bound: np.ndarray

    @property
    def dominated(self):
        return bool(np.all(self.curve.lower <= self.bound))


def tail_domination(spec, x_grid, paths, seed):
    """
    Empirical tail of Q(d, n, ones / ||ones||) against the Markov tail built
    from the martingale bound. Needs bounded differences (V_d constant).
    """
    if spec.base_kind != "rademacher":
        raise DomainError("tail domination uses bounded (rademacher-based) families")
    v = moment_profile(spec).V(config.MARKOV_P_MIN)
    growth = gls.martingale_growth(spec.d, v)
    sample, _ = generate_batch(spec, paths, seed)
    q = q_values(sample, normalize_to_B(WeightSpec.ones(spec.n, spec.d)))
    x = np.asarray(x_grid, dtype=float)
    x = x[x > math.e]
    curve = empirical_tail(q, x)
    bound = np.array([gls.moment_to_tail(growth, xi) for xi in x])
    return TailComparison(spec.family_id, spec.d, spec.n, curve, bound)


# --------------------------------------------------------------------
# Martingale property of n -> Q(d, n, b)
# --------------------------------------------------------------------
def martingale_increments(spec, paths, seed, betas=None):
    """
    Largest |mean increment| / standard error of Q(d, k, b) - Q(d, k-1, b)
    over k = 1..n, for fixed separable betas (default ones).
    """
    sample, _ = generate_batch(spec, paths, seed)
    betas = np.ones((spec.d, spec.n)) if betas is None else np.asarray(betas, dtype=float)
    incr = np.diff(q_prefix_batch(sample, betas), axis=1)
    sd = incr.std(axis=0, ddof=1)
    mean = incr.mean(axis=0)
    live = sd > 0
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(mean[live]) / (sd[live] / math.sqrt(paths))))
