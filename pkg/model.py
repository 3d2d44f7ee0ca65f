"""
Martingale-difference families, sample-path generation and exact moments.

A family is an n x d array xi(i, m): row i is time, column m is the layer.
Rows are generated in increasing time order, so the filtration F(i) is the
information in rows 1..i.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from multiprocessing.pool import ThreadPool

import numpy as np
from scipy.special import gammaln

import config
from errors import ConfigError, DomainError, NumericalError

BASE_KINDS = ("rademacher", "gaussian", "centered_poisson", "uniform_centered")
KINDS = BASE_KINDS + ("martingale_scaled",)

SQRT3 = math.sqrt(3.0)


@dataclass
class FamilySpec:
    """
    Generative description of a martingale-difference array.

    `variance` is sigma^2(i, m): a scalar, a length-d list (per layer) or an
    n x d nested list. For martingale_scaled it scales the base noise, and
    the realized conditional variance is sigma^2(i, m) * h_i^2 where
    h_i = 1 if the running total of earlier rows is >= 0, else 1/2.
    """
    kind: str
    n: int
    d: int
    variance: object = 1.0
    base: str = "rademacher"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown family kind: {self.kind}")
        if self.kind == "martingale_scaled" and self.base not in BASE_KINDS:
            raise DomainError(f"martingale_scaled needs a base kind from {BASE_KINDS}")
        if int(self.n) != self.n or self.n < 1 or int(self.d) != self.d or self.d < 1:
            raise DomainError(f"need integers n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        sig2 = self.variance_matrix()
        if not np.all(np.isfinite(sig2)) or np.any(sig2 <= 0):
            raise DomainError("every variance sigma^2(i, m) must be finite and > 0")

    @property
    def base_kind(self):
        return self.base if self.kind == "martingale_scaled" else self.kind

    @property
    def is_independent(self):
        return self.kind != "martingale_scaled"

    @property
    def family_id(self):
        if self.kind == "martingale_scaled":
            return f"martingale_scaled[{self.base}]"
        return self.kind

    def variance_matrix(self):
        sig2 = np.asarray(self.variance, dtype=float)
        if sig2.ndim == 0:
            return np.full((self.n, self.d), float(sig2))
        if sig2.shape == (self.d,):
            return np.tile(sig2, (self.n, 1))
        if sig2.shape == (self.n, self.d):
            return sig2.copy()
        raise DomainError(f"variance shape {sig2.shape} does not fit n={self.n}, d={self.d}")

    def with_shape(self, n=None, d=None):
        """Same family at another (n, d); only scalar variances carry over."""
        if np.ndim(self.variance) != 0:
            raise DomainError("cannot reshape a family with a variance map")
        return FamilySpec(self.kind, self.n if n is None else n, self.d if d is None else d,
                          self.variance, self.base)

    def to_dict(self):
        out = {"kind": self.kind, "n": self.n, "d": self.d}
        out["variance"] = np.asarray(self.variance).tolist()
        if self.kind == "martingale_scaled":
            out["base"] = self.base
        return out

    @classmethod
    def from_dict(cls, raw):
        try:
            return cls(kind=raw["kind"], n=int(raw["n"]), d=int(raw["d"]),
                       variance=raw.get("variance", 1.0),
                       base=raw.get("base", "rademacher"))
        except KeyError as exc:
            raise ConfigError(f"family spec is missing field {exc}") from exc
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"invalid family spec {raw}: {exc}") from exc


@dataclass
class SamplePath:
    """One realized n x d matrix of differences with its provenance."""
    entries: np.ndarray
    seed: int
    path_id: int
    cond_scale: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.entries.ndim != 2 or not np.all(np.isfinite(self.entries)):
            raise DomainError("a sample path must be a finite n x d matrix")

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def d(self):
        return self.entries.shape[1]


# --------------------------------------------------------------------
# Generation
# --------------------------------------------------------------------
def _block_rng(seed, block_id):
    # Philox stream keyed by (seed, block); path content never depends on scheduling.
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(block_id),))
    return np.random.Generator(np.random.Philox(seq))


def _draw_base(kind, rng, shape):
    if kind == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if kind == "gaussian":
        return rng.standard_normal(shape)
    if kind == "centered_poisson":
        return rng.poisson(1.0, size=shape).astype(float) - 1.0
    if kind == "uniform_centered":
        return rng.uniform(-SQRT3, SQRT3, size=shape)
    raise DomainError(f"unsupported base kind: {kind}")


def generate_block(spec, block_id, seed):
    """
    All config.PATH_BLOCK paths of one RNG block.

    Returns (entries, scales): entries has shape (B, n, d); scales (B, n)
    holds the past-measurable multiplier h_i (all ones for independent kinds).
    """
    rng = _block_rng(seed, block_id)
    shape = (config.PATH_BLOCK, spec.n, spec.d)
    eps = _draw_base(spec.base_kind, rng, shape) * np.sqrt(spec.variance_matrix())[None, :, :]
    scales = np.ones((config.PATH_BLOCK, spec.n))
    if spec.is_independent:
        return eps, scales

    entries = np.empty_like(eps)
    running = np.zeros(config.PATH_BLOCK)
    for i in range(spec.n):
        h = np.where(running >= 0.0, 1.0, 0.5)
        scales[:, i] = h
        entries[:, i, :] = eps[:, i, :] * h[:, None]
        running += entries[:, i, :].sum(axis=1)
    return entries, scales


def generate_batch(spec, n_paths, seed, start=0, workers=None):
    """
    Paths start .. start + n_paths - 1 as arrays (N, n, d) and (N, n).

    Blocks are generated on a thread pool of `workers` (default
    config.worker_count()) and reassembled in block order.
    """
    if n_paths < 0 or start < 0:
        raise DomainError("path ids must be non-negative")
    if n_paths == 0:
        return np.empty((0, spec.n, spec.d)), np.empty((0, spec.n))
    first = start // config.PATH_BLOCK
    last = (start + n_paths - 1) // config.PATH_BLOCK
    block_ids = list(range(first, last + 1))
    workers = config.worker_count() if workers is None else max(1, workers)

    if workers > 1 and len(block_ids) > 1:
        with ThreadPool(min(workers, len(block_ids))) as pool:
            blocks = pool.map(lambda b: generate_block(spec, b, seed), block_ids)
    else:
        blocks = [generate_block(spec, b, seed) for b in block_ids]

    entries = np.concatenate([b[0] for b in blocks])
    scales = np.concatenate([b[1] for b in blocks])
    offset = start - first * config.PATH_BLOCK
    return entries[offset:offset + n_paths], scales[offset:offset + n_paths]


def generate(spec, path_id, seed):
    """A single path; identical to row path_id of generate_batch."""
    entries, scales = generate_batch(spec, 1, seed, start=path_id, workers=1)
    return SamplePath(entries=entries[0].copy(), seed=seed, path_id=path_id,
                      cond_scale=scales[0].copy())


def conditional_variance(spec, scales):
    """E[xi(i, m)^2 | F(i-1)] = sigma^2(i, m) * h_i^2, shape (N, n, d)."""
    return spec.variance_matrix()[None, :, :] * (np.asarray(scales)[:, :, None] ** 2)


# --------------------------------------------------------------------
# Exact moments
# --------------------------------------------------------------------
def _poisson_log_moment(p):
    """Certified (lower, upper) bracket of ln E|eta - 1|^p, eta ~ Poisson(1)."""
    k_max = max(64, int(4 * p))
    log_tol = math.log(config.POISSON_REL_TOL)
    while k_max <= config.POISSON_MAX_TERMS:
        ks = np.arange(k_max + 1, dtype=float)
        with np.errstate(divide="ignore"):
            log_terms = -1.0 + p * np.log(np.abs(ks - 1.0)) - gammaln(ks + 1.0)
        partial = np.logaddexp.accumulate(log_terms)

        # term(K+1)/term(K) is decreasing for K >= 2; once it is <= 1/2 the
        # remainder from K on is at most 2 * term(K).
        kk = ks[2:-1]
        log_ratio = p * np.log(kk / (kk - 1.0)) - np.log(kk + 1.0)
        remainder = math.log(2.0) + log_terms[2:-1]
        ok = (log_ratio <= -math.log(2.0)) & (remainder <= log_tol + partial[1:-2])
        hits = np.flatnonzero(ok)
        if hits.size:
            K = int(hits[0]) + 2
            lower = float(partial[K - 1])
            return lower, float(np.logaddexp(lower, remainder[K - 2]))
        k_max *= 2
    raise NumericalError(f"p={p} needs more than {config.POISSON_MAX_TERMS} Poisson series terms")


def poisson_norm_bracket(p):
    """(lower, upper) for |eta - 1|_p with eta ~ Poisson(1)."""
    lo, hi = _poisson_log_moment(p)
    return math.exp(lo / p), math.exp(hi / p)


@lru_cache(maxsize=4096)
def _mu_cached(kind, p):
    if kind == "rademacher":
        return 1.0
    if kind == "gaussian":
        log_abs = 0.5 * p * math.log(2.0) + gammaln((p + 1.0) / 2.0) - 0.5 * math.log(math.pi)
        return math.exp(log_abs / p)
    if kind == "centered_poisson":
        lo, hi = _poisson_log_moment(p)
        return math.exp(0.5 * (lo + hi) / p)
    if kind == "uniform_centered":
        return SQRT3 * (p + 1.0) ** (-1.0 / p)
    raise DomainError(f"no exact moments for kind {kind}")


def mu_exact(kind, p):
    """mu(p) = |xi|_p for a unit-variance built-in kind."""
    p = float(p)
    if not math.isfinite(p) or p < 2.0:
        raise DomainError(f"mu_exact needs finite p >= 2, got {p}")
    if kind not in BASE_KINDS:
        raise DomainError(f"unsupported kind for exact moments: {kind}")
    return _mu_cached(kind, p)


def poisson_asymptotic_ratio(p):
    """|xi|_p * e * ln p / p for the centered Poisson(1) variable; tends to 1."""
    if p < 8:
        raise DomainError(f"poisson_asymptotic_ratio needs p >= 8, got {p}")
    lo, hi = _poisson_log_moment(float(p))
    log_norm = 0.5 * (lo + hi) / p
    return math.exp(log_norm + 1.0 + math.log(math.log(p)) - math.log(p))


def product_moment(d, p):
    """|prod_{j<=d} xi_j|_p for independent centered Poisson(1) copies."""
    if int(d) != d or d < 1:
        raise DomainError(f"degree must be an integer >= 1, got {d}")
    if p < 8:
        raise DomainError(f"product_moment needs p >= 8, got {p}")
    return mu_exact("centered_poisson", p) ** d


def regular_variation_check(kind, d, p_grid):
    """max over the grid of mu(d p) / mu(p)."""
    grid = np.atleast_1d(np.asarray(p_grid, dtype=float))
    if grid.size == 0 or grid.min() < 2.0:
        raise DomainError("grid must be nonempty with all points >= 2")
    if int(d) != d or d < 1:
        raise DomainError(f"degree must be an integer >= 1, got {d}")
    ratios = [mu_exact(kind, d * p) / mu_exact(kind, p) for p in grid]
    if not all(math.isfinite(r) for r in ratios):
        raise NumericalError(f"moment overflow for {kind}")
    return max(ratios)


def entry_moment(spec, m, p):
    """
    mu_m(p) = sup_i |xi(i, m)|_p for layer m (0-based).

    For martingale_scaled the multiplier is 1 on the first row and at most 1
    afterwards, so this is exact when sigma is constant over time and an
    upper bound otherwise.
    """
    sigma = math.sqrt(float(spec.variance_matrix()[:, m].max()))
    return sigma * mu_exact(spec.base_kind, p)


def scale_moment_ratio(p, grid=2001):
    """
    sup over a in [0, 1] of |h|_p / |h|_2 for h = 1 w.p. a and 1/2 otherwise.

    The row scale h_i is independent of the fresh base noise at row i, so
    this bounds |xi / sd(xi)|_p / |base / sd(base)|_p for every row without
    knowing the law of the running-sum sign.
    """
    a = np.linspace(0.0, 1.0, grid)
    lp = (a + (1.0 - a) * 0.5 ** p) ** (1.0 / p)
    l2 = np.sqrt(a + (1.0 - a) * 0.25)
    return float(np.max(lp / l2))


def relative_moment(spec, m, p):
    """sup_i |xi(i, m) / sd(xi(i, m))|_p for layer m."""
    mu = mu_exact(spec.base_kind, p)
    if spec.is_independent:
        return mu
    return scale_moment_ratio(p) * mu
