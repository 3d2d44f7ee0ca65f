"""
Exact evaluation of Q(d, n, b) = sum over 1 <= i_1 < ... < i_d <= n of
b(i) * prod_s xi(i_s, s).

q_naive enumerates the index set (oracle); q_separable_dp runs the nested
prefix-sum recursion in O(n d) for weights b(i) = prod_s beta_s(i_s).
"""
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

import config
from errors import CapExceeded, ConfigError, DomainError, NumericalError
from model import generate_batch

FORMS = ("ones", "separable", "dense")


def index_count(d, n):
    return math.comb(n, d) if n >= d else 0


def enumerate_indices(d, n):
    """Strictly increasing d-tuples over 1..n in lexicographic order."""
    if d < 1 or n < 0:
        raise DomainError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    return itertools.combinations(range(1, n + 1), d)


def _check_cap(d, n, cap=None):
    cap = config.ENUMERATION_CAP if cap is None else cap
    count = index_count(d, n)
    if count > cap:
        raise CapExceeded(f"C({n},{d}) = {count} exceeds the enumeration cap {cap}; "
                          "use the separable DP evaluator")
    return count


@dataclass
class WeightSpec:
    """
    Coefficient tensor b(i) over I(d, n), stored as scale * base form.

    ones:      b(i) = 1
    separable: b(i) = prod_s betas[s][i_s - 1], betas has shape (d, n)
    dense:     b(i) = entries.get(i, 0) with 1-based strictly increasing keys
    """
    form: str
    n: int
    d: int
    betas: np.ndarray = field(default=None, repr=False)
    entries: dict = field(default=None, repr=False)
    scale: float = 1.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise DomainError(f"unknown weight form: {self.form}")
        if self.d < 1 or self.n < 0:
            raise DomainError(f"need d >= 1 and n >= 0, got d={self.d}, n={self.n}")
        if self.form == "separable":
            self.betas = np.asarray(self.betas, dtype=float)
            if self.betas.shape != (self.d, self.n):
                raise DomainError(f"betas must have shape ({self.d}, {self.n}), got {self.betas.shape}")
        if self.form == "dense":
            clean = {}
            for key, value in dict(self.entries or {}).items():
                key = tuple(int(k) for k in key)
                if (len(key) != self.d or key[0] < 1 or key[-1] > self.n
                        or any(a >= b for a, b in zip(key, key[1:]))):
                    raise DomainError(f"dense key {key} is not strictly increasing within 1..{self.n}")
                clean[key] = float(value)
            self.entries = clean

    # --- constructors ---
    @classmethod
    def ones(cls, n, d):
        return cls("ones", n, d)

    @classmethod
    def separable(cls, betas):
        betas = np.atleast_2d(np.asarray(betas, dtype=float))
        return cls("separable", betas.shape[1], betas.shape[0], betas=betas)

    @classmethod
    def dense(cls, entries, n, d):
        return cls("dense", n, d, entries=entries)

    @classmethod
    def from_dict(cls, raw, n=None, d=None):
        form = raw.get("form")
        try:
            if form == "ones":
                return cls.ones(int(raw.get("n", n)), int(raw.get("d", d)))
            if form == "separable":
                return cls.separable(raw["betas"])
            if form == "dense":
                entries = {tuple(idx): val for idx, val in raw["entries"]}
                return cls.dense(entries, int(raw.get("n", n)), int(raw.get("d", d)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid weight spec {raw}: {exc}") from exc
        raise ConfigError(f"unknown weight form: {form}")

    def to_dict(self):
        out = {"form": self.form, "n": self.n, "d": self.d}
        if self.form == "separable":
            folded = self.betas.copy()
            folded[0] *= self.scale
            out["betas"] = folded.tolist()
        elif self.form == "dense":
            out["entries"] = [[list(k), v * self.scale] for k, v in self.entries.items()]
        return out

    # --- values ---
    def coefficient(self, idx):
        idx = tuple(idx)
        if self.form == "ones":
            return self.scale
        if self.form == "separable":
            return self.scale * math.prod(self.betas[s, i - 1] for s, i in enumerate(idx))
        return self.scale * self.entries.get(idx, 0.0)

    def as_betas(self):
        """Per-layer vectors for the DP (scale not included)."""
        if self.form == "ones":
            return np.ones((self.d, self.n))
        if self.form == "separable":
            return self.betas
        raise DomainError("dense weights have no separable form")

    @cached_property
    def raw_norm(self):
        if self.form == "ones":
            return math.sqrt(index_count(self.d, self.n))
        if self.form == "separable":
            unit = np.ones((1, self.n, self.d))
            return math.sqrt(float(q_separable_dp_batch(unit, self.betas ** 2)[0]))
        return math.sqrt(math.fsum(v * v for v in self.entries.values()))

    @property
    def norm(self):
        """||b|| = sqrt(sum b(i)^2 over I(d, n))."""
        return abs(self.scale) * self.raw_norm

    @property
    def in_unit_ball(self):
        return abs(self.norm - 1.0) <= config.UNIT_NORM_TOL

    def scaled(self, alpha):
        return WeightSpec(self.form, self.n, self.d, betas=self.betas,
                          entries=self.entries, scale=self.scale * alpha)

    def to_dense(self, cap=None):
        _check_cap(self.d, self.n, cap)
        if self.form == "dense":
            return WeightSpec("dense", self.n, self.d, entries=dict(self.entries), scale=self.scale)
        betas = self.as_betas()
        entries = {idx: math.prod(betas[s, i - 1] for s, i in enumerate(idx))
                   for idx in enumerate_indices(self.d, self.n)}
        return WeightSpec("dense", self.n, self.d, entries=entries, scale=self.scale)


def weight_norm(w):
    return w.norm


def normalize_to_B(w):
    """w / ||w||, a weight in the unit ball B."""
    norm = w.norm
    if not norm > 0:
        raise DomainError("cannot normalize a zero weight tensor")
    return w.scaled(1.0 / norm)


def random_direction(n, d, rng):
    """Gaussian separable weight normalized into B."""
    return normalize_to_B(WeightSpec.separable(rng.standard_normal((d, n))))


# --------------------------------------------------------------------
# Evaluators
# --------------------------------------------------------------------
def _as_matrix(path):
    entries = getattr(path, "entries", path)
    entries = np.asarray(entries, dtype=float)
    if entries.ndim != 2:
        raise DomainError("a path must be an n x d matrix")
    return entries


def q_naive(path, w, cap=None):
    """Brute-force sum over I(d, n) with exactly rounded accumulation."""
    x = _as_matrix(path)
    if x.shape != (w.n, w.d):
        raise DomainError(f"path shape {x.shape} does not match weights ({w.n}, {w.d})")
    _check_cap(w.d, w.n, cap)
    layers = range(w.d)
    if w.form == "dense":
        terms = (v * math.prod(x[i - 1, s] for s, i in zip(layers, idx))
                 for idx, v in w.entries.items())
        return w.scale * math.fsum(terms)
    betas = w.as_betas()
    terms = (math.prod(betas[s, i - 1] * x[i - 1, s] for s, i in zip(layers, idx))
             for idx in enumerate_indices(w.d, w.n))
    return w.scale * math.fsum(terms)


def _compensated_cumsum(terms):
    """Row-wise prefix sums with Neumaier compensation, shape (N, n) -> (N, n)."""
    out = np.empty_like(terms)
    total = np.zeros(terms.shape[0])
    comp = np.zeros(terms.shape[0])
    for k in range(terms.shape[1]):
        t = terms[:, k]
        s = total + t
        comp += np.where(np.abs(total) >= np.abs(t), (total - s) + t, (t - s) + total)
        total = s
        out[:, k] = total + comp
    return out


def q_prefix_batch(paths, betas):
    """
    DP over a batch of paths, shape (N, n, d) -> (N, n + 1).

    S_0 = 1, S_m(k) = sum_{i <= k} beta_m(i) xi(i, m) S_{m-1}(i - 1);
    column k holds S_d(k) = Q(d, k, b), the polynomial martingale at time k.
    """
    x = np.asarray(paths, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if x.ndim != 3:
        raise DomainError("paths must have shape (N, n, d)")
    n_paths, n, d = x.shape
    if betas.shape != (d, n):
        raise DomainError(f"betas shape {betas.shape} does not match paths (d={d}, n={n})")
    prev = np.ones((n_paths, n + 1))
    for m in range(d):
        terms = betas[m][None, :] * x[:, :, m] * prev[:, :n]
        cur = np.zeros((n_paths, n + 1))
        cur[:, 1:] = _compensated_cumsum(terms)
        prev = cur
    return prev


def q_separable_dp_batch(paths, betas):
    """Q(d, n, b) for each path in (N, n, d); O(n d) per path."""
    return q_prefix_batch(paths, betas)[:, -1]


def q_separable_dp(path, betas):
    x = _as_matrix(path)
    return float(q_separable_dp_batch(x[None, :, :], betas)[0])


def q_values(paths, w):
    """Q(d, n, w) for every path in a batch (N, n, d)."""
    x = np.asarray(paths, dtype=float)
    if x.shape[1:] != (w.n, w.d):
        raise DomainError(f"paths {x.shape[1:]} do not match weights ({w.n}, {w.d})")
    if w.form != "dense":
        return w.scale * q_separable_dp_batch(x, w.as_betas())
    out = np.zeros(x.shape[0])
    for idx, v in w.entries.items():
        term = np.full(x.shape[0], v)
        for s, i in enumerate(idx):
            term *= x[:, i - 1, s]
        out += term
    return w.scale * out


# --------------------------------------------------------------------
# Variance functional
# --------------------------------------------------------------------
def variance_independent(w, sigma2, independent=True, cap=None):
    """
    Psi(d, n, w) = Var Q = sum b(i)^2 prod_s sigma^2(i_s, s).

    Valid only for families independent across all (i, m); pass
    independent=False and this raises instead of silently misapplying it.
    """
    if not independent:
        raise DomainError("the analytic variance needs independent differences; estimate it by MC")
    sig2 = np.asarray(sigma2, dtype=float)
    if sig2.shape != (w.n, w.d):
        raise DomainError(f"variance map {sig2.shape} does not match weights ({w.n}, {w.d})")
    if w.form != "dense":
        return w.scale ** 2 * float(q_separable_dp_batch(sig2[None, :, :], w.as_betas() ** 2)[0])
    _check_cap(w.d, w.n, cap)
    terms = (v * v * math.prod(sig2[i - 1, s] for s, i in enumerate(idx))
             for idx, v in w.entries.items())
    return w.scale ** 2 * math.fsum(terms)


@dataclass
class PsiScan:
    min_ratio: float
    max_ratio: float
    holds: bool


def _random_weight(n, d, rng, dense):
    if dense:
        return WeightSpec.dense({idx: rng.standard_normal() for idx in enumerate_indices(d, n)}, n, d)
    return WeightSpec.separable(rng.standard_normal((d, n)))


def psi_ratio_scan(spec, n_list, trials, seed=config.RANDOM_SEED, paths=None):
    """
    Extremes of Psi(d, n, w) / ||w||^2 over random nonzero weights.

    Analytic under independence, Monte Carlo otherwise. `holds` reports
    whether the scanned ratios sit inside (0, inf).
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    paths = config.PSI_MC_PATHS if paths is None else paths
    ratios = []
    for n in n_list:
        family = spec if n == spec.n else spec.with_shape(n=n)
        sample = None
        for t in range(trials):
            dense = t % 2 == 1 and index_count(family.d, n) <= 2000
            w = _random_weight(n, family.d, rng, dense)
            if w.norm == 0:
                continue
            if family.is_independent:
                psi = variance_independent(w, family.variance_matrix())
            else:
                if sample is None:
                    sample = generate_batch(family, paths, seed)[0]
                psi = float(np.var(q_values(sample, w), ddof=1))
            ratios.append(psi / w.norm ** 2)
    if not ratios:
        raise NumericalError("no usable weights in the scan")
    lo, hi = min(ratios), max(ratios)
    return PsiScan(lo, hi, bool(lo > 0 and math.isfinite(hi)))
