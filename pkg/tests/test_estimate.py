import math

import numpy as np
import pytest

import bounds
import config
import estimate
from errors import DomainError
from model import FamilySpec
from polyeval import WeightSpec


def test_lp_norm_small_cases():
    assert estimate.lp_norm([1, -1, 1, -1], 4) == pytest.approx(1.0, rel=1e-15)
    assert estimate.lp_norm([0, 0], 4) == 0.0
    assert estimate.lp_norm_with_error([0.0], 4) == (0.0, 0.0)
    with pytest.raises(DomainError):
        estimate.lp_norm([], 4)
    with pytest.raises(DomainError):
        estimate.lp_norm([1.0], 1.5)


def test_lp_norm_survives_huge_values():
    assert estimate.lp_norm([1e200, 1e200], 8) == pytest.approx(1e200, rel=1e-12)


def test_lp_norm_of_gaussian_fourth_moment():
    z = np.random.default_rng(0).standard_normal(1_000_000)
    value, err = estimate.lp_norm_with_error(z, 4)
    assert abs(value - 3 ** 0.25) <= 4 * err * 3 ** 0.25


def test_moment_profile_relations():
    profile = estimate.moment_profile(FamilySpec("gaussian", 10, 2))
    for p in (4.0, 8.0):
        assert profile.V(p) >= profile.W(p)
        assert profile.V_tilde(p) == profile.V(p)
        assert profile.W_tilde(p) == profile.W(p)
    scaled = estimate.moment_profile(FamilySpec("gaussian", 10, 2, variance=0.25))
    assert scaled.W(4.0) == pytest.approx(0.25 * profile.W(4.0))
    assert scaled.W_tilde(4.0) == pytest.approx(profile.W(4.0))


def test_profile_from_samples():
    signs = np.random.default_rng(3).choice([-1.0, 1.0], size=(500, 4, 2))
    profile = estimate.MomentProfile.from_samples(signs)
    assert profile.V(4.0) == pytest.approx(1.0)
    assert profile.d == 2


def test_estimate_U_rademacher_example(rademacher_1x16):
    rep = estimate.estimate_U(rademacher_1x16, 2, 4.0, paths=20_000, seed=1)
    assert 1.1 < rep.empirical < 1.45
    assert rep.bound_martingale == pytest.approx(45.55, abs=0.01)
    assert rep.bound_independent == pytest.approx(config.K_R * 4 / math.log(4))
    assert rep.ratio == pytest.approx(rep.empirical / rep.bound_martingale)
    assert rep.ratio < 0.05
    assert rep.passed


def test_ones_direction_comes_first(rademacher_1x16):
    reps = estimate.estimate_directions(rademacher_1x16, 3, [4.0], paths=20_000, seed=1)
    assert [r.direction_id for r in reps] == [0, 1, 2, 3]
    # E S^4 = 3n^2 - 2n for a Rademacher sum
    exact = ((3 * 16 ** 2 - 2 * 16) / 16 ** 2) ** 0.25
    assert abs(reps[0].empirical - exact) <= 4 * reps[0].mc_err * exact


def test_degree_one_reports_carry_square_function(rademacher_1x16):
    reps = estimate.estimate_directions(rademacher_1x16, 2, [4.0], paths=2000, seed=1)
    ones = reps[0]
    # b = ones / 4 with unit conditional variances: theta = 1 on every path
    assert ones.s1 == pytest.approx(1.0, rel=1e-12)
    assert ones.theta == pytest.approx(1.0, rel=1e-12)
    assert ones.s2 == pytest.approx(0.5, rel=1e-12)
    assert all(r.s2 <= r.s1 * (1 + 1e-12) for r in reps)


def test_higher_degree_reports_have_no_square_function(gaussian_2x30):
    rep = estimate.estimate_U(gaussian_2x30, 1, 4.0, paths=2000, seed=1)
    assert rep.s1 is None and rep.s2 is None and rep.theta is None


def test_ratio_ceiling_fails_a_report():
    rep = estimate.BoundReport(family="gaussian", d=1, n=10, p=4.0, direction_id=0,
                               empirical=1.0, bound_martingale=4.0, bound_independent=2.0,
                               ratio=0.25, mc_err=0.01)
    assert rep.within_bound
    assert not rep.passed


def test_estimate_U_gaussian_degree_two(gaussian_2x30):
    rep = estimate.estimate_U(gaussian_2x30, 5, 8.0, paths=10_000, seed=4)
    assert rep.ratio <= 1.0
    assert rep.within_bound and rep.passed


def test_estimates_are_deterministic_and_order_free(gaussian_2x30):
    a = estimate.estimate_directions(gaussian_2x30, 4, [4.0], paths=5000, seed=9)
    b = estimate.estimate_directions(gaussian_2x30, 4, [4.0], paths=5000, seed=9)
    assert [r.empirical for r in a] == [r.empirical for r in b]
    assert estimate.best_report(a).empirical == estimate.best_report(list(reversed(a))).empirical


def test_estimate_preconditions(rademacher_1x16):
    with pytest.raises(DomainError):
        estimate.estimate_U(rademacher_1x16, 2, 4.0, paths=999, seed=1)
    with pytest.raises(DomainError):
        estimate.estimate_U(rademacher_1x16, 0, 4.0, paths=2000, seed=1)
    with pytest.raises(DomainError):
        estimate.best_report([])


def test_fixed_weights_join_the_directions(rademacher_1x16):
    w = WeightSpec.separable(np.arange(1.0, 17.0)[None, :])
    reps = estimate.estimate_directions(rademacher_1x16, 1, [4.0], paths=2000, seed=1, weights=[w])
    assert len(reps) == 3
    with pytest.raises(DomainError):
        estimate.estimate_directions(rademacher_1x16, 1, [4.0], paths=2000, seed=1,
                                     weights=[WeightSpec.ones(8, 1)])


def test_normed_report_unit_variance_matches_plain(gaussian_2x30):
    plain = estimate.estimate_U(gaussian_2x30, 3, 4.0, paths=5000, seed=2)
    normed = estimate.normed_report(gaussian_2x30, 3, 4.0, paths=5000, seed=2)
    assert normed.empirical == pytest.approx(plain.empirical, rel=1e-9)
    assert normed.ratio == pytest.approx(plain.ratio, rel=1e-9)
    assert normed.normed and not plain.normed


def test_normed_ratio_is_scale_free():
    spec = FamilySpec("gaussian", 10, 2, variance=0.25)
    plain = estimate.estimate_U(spec, 3, 4.0, paths=5000, seed=6)
    normed = estimate.normed_report(spec, 3, 4.0, paths=5000, seed=6)
    assert normed.empirical == pytest.approx(4.0 * plain.empirical, rel=1e-9)
    assert normed.ratio == pytest.approx(plain.ratio, rel=1e-9)


def test_normed_report_scaled_family():
    rep = estimate.normed_report(FamilySpec("martingale_scaled", 10, 2), 3, 8.0, paths=10_000, seed=3)
    assert rep.bound_independent is None
    assert rep.passed


def test_decomposition_rademacher_exact_parts(rademacher_1x16):
    dec = estimate.osekowski_decomposition(rademacher_1x16, 4.0, paths=5000, seed=1)
    assert dec.s1 == pytest.approx(4.0, rel=1e-12)
    assert dec.s2 == pytest.approx(2.0, rel=1e-12)
    assert dec.s2 <= dec.s1
    assert dec.rhs == pytest.approx(bounds.os_function(4.0) * 6.0)
    assert dec.sum_bound == pytest.approx(bounds.k_os_value() * 4 / math.log(4) * 4.0)
    assert dec.passed


def test_decomposition_scaled_family(scaled_1x16):
    dec = estimate.osekowski_decomposition(scaled_1x16, 8.0, paths=20_000, seed=5)
    assert dec.lhs <= dec.rhs
    assert dec.lhs <= dec.sum_bound
    assert dec.s1 <= 4.0 * (1 + 1e-12)
    assert dec.passed


@pytest.mark.parametrize("p", [4.0, 8.0])
def test_decomposition_at_sixty_four_steps(p):
    dec = estimate.osekowski_decomposition(FamilySpec("rademacher", 64, 1), p, paths=5000, seed=3)
    assert dec.s1 == pytest.approx(8.0, rel=1e-12)
    assert dec.s2 == pytest.approx(64 ** (1 / p), rel=1e-12)
    assert dec.passed
    scaled = estimate.osekowski_decomposition(FamilySpec("martingale_scaled", 64, 1), p,
                                              paths=5000, seed=3)
    assert scaled.passed


def test_decomposition_needs_degree_one(gaussian_2x30):
    with pytest.raises(DomainError):
        estimate.osekowski_decomposition(gaussian_2x30, 4.0, paths=2000, seed=1)


def test_empirical_tail_counts():
    curve = estimate.empirical_tail([1.0, 2.0, 3.0], [0.5, 2.0, 5.0])
    assert curve.tail[0] == 1.0 and curve.tail[2] == 0.0
    assert curve.tail[1] == pytest.approx(2 / 3)
    assert np.all(curve.lower <= curve.tail) and np.all(curve.tail <= curve.upper)
    assert curve.n_samples == 3
    with pytest.raises(DomainError):
        estimate.empirical_tail([1.0], [])
    with pytest.raises(DomainError):
        estimate.empirical_tail([1.0], [2.0, 1.0])


@pytest.mark.parametrize("d", [1, 2])
def test_tail_domination_rademacher(d):
    res = estimate.tail_domination(FamilySpec("rademacher", 30, d), np.geomspace(3, 30, 12),
                                   paths=10_000, seed=8)
    assert res.dominated
    assert np.all((res.bound > 0) & (res.bound <= 1))


def test_tail_domination_needs_bounded_inputs():
    with pytest.raises(DomainError):
        estimate.tail_domination(FamilySpec("gaussian", 30, 1), [5.0], paths=2000, seed=1)


def test_polynomial_is_a_martingale_in_n():
    z = estimate.martingale_increments(FamilySpec("martingale_scaled", 10, 2), paths=20_000, seed=4)
    assert z < 5.0
