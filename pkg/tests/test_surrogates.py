import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc

from lcmoments.errors import (
    InvalidArgumentError,
    SolverError,
    UnboundedProgramError,
)
from lcmoments.families import GaussianStd, UniformBall, UniformCube, product_exponential
from lcmoments.surrogates import (
    ball_moment_estimate,
    bobkov_nazarov_upper,
    gaussian_band,
    gaussian_pnorm,
    gluskin_kwapien,
    gluskin_kwapien_estimate,
    hitczenko_lower,
    level_set_moment_estimate,
    surrogate_bundle,
    tail_bounds,
)
from lcmoments.tails import exponential, linear, power, tabulated

TABLE = tabulated((0.0, 1.0, 2.0, 10.0), (0.0, 1.0, 3.0, 80.0))


# -- gaussian moment constants --------------------------------------------------

def test_gaussian_pnorm_integer_moments():
    assert gaussian_pnorm(2.0) == pytest.approx(1.0, rel=1e-15)
    assert gaussian_pnorm(4.0) == pytest.approx(3.0 ** 0.25, rel=1e-14)
    assert gaussian_pnorm(6.0) == pytest.approx(15.0 ** (1 / 6), rel=1e-14)
    assert gaussian_pnorm(1.0) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)


@pytest.mark.parametrize("p", [1.0, 2.5, 7.3, 19.0, 50.0])
def test_gaussian_pnorm_matches_quadrature(p):
    integral, _ = quad(lambda x: x ** p * math.exp(-0.5 * x * x), 0.0, np.inf,
                       epsabs=0.0, epsrel=1e-13)
    expected = (2.0 * integral / math.sqrt(2.0 * math.pi)) ** (1.0 / p)
    assert gaussian_pnorm(p) == pytest.approx(expected, rel=1e-11)


def test_gaussian_pnorm_rejects_small_p():
    with pytest.raises(InvalidArgumentError):
        gaussian_pnorm(0.5)
    with pytest.raises(InvalidArgumentError):
        gaussian_pnorm(math.inf)


# -- rearrangement surrogates ---------------------------------------------------

def test_hitczenko_lower_values():
    a = (3.0, -1.0, 2.0, 0.5)
    assert hitczenko_lower(a, 2.0) == pytest.approx(5.0 + math.sqrt(2.0 * 1.25))
    assert hitczenko_lower(a, 4.0) == pytest.approx(6.5)
    # single coordinate: the head is everything
    assert hitczenko_lower((2.0,), 8.0) == pytest.approx(2.0)


def test_hitczenko_lower_is_continuous_in_p():
    a = (1.0, 0.8, 0.6, 0.4, 0.2)
    ps = np.linspace(2.0, 6.0, 401)
    vals = np.array([hitczenko_lower(a, float(p)) for p in ps])
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_bobkov_nazarov_upper_values():
    a = (3.0, -4.0)
    assert bobkov_nazarov_upper(a, 2.0) == pytest.approx(2.0 * 4.0 + math.sqrt(2.0) * 5.0)
    assert bobkov_nazarov_upper((1.0,), 9.0) == pytest.approx(12.0)


def test_moment_order_validation():
    for fn in (hitczenko_lower, bobkov_nazarov_upper):
        with pytest.raises(InvalidArgumentError):
            fn((1.0,), 1.5)


# -- the level-set support program ---------------------------------------------

def test_gk_exponential_closed_form():
    tails = [exponential()] * 3
    b = (0.5, 2.0, 1.0)
    for p in (2.0, 5.5, 32.0):
        assert gluskin_kwapien(b, tails, p) == pytest.approx(
            p * 2.0 / math.sqrt(2.0), rel=1e-12)


def test_gk_linear_rates_pick_best_ratio():
    tails = [linear(1.0), linear(4.0)]
    # coordinate 2 pays 4 per unit: ratios are 1.0 and 0.75, coordinate 1 wins
    assert gluskin_kwapien((1.0, 3.0), tails, 6.0) == pytest.approx(6.0, rel=1e-12)


def test_gk_mixed_linear_quadratic_oracle():
    # maximize t1 + t2 subject to sqrt(2) t1 + t2^2 <= 2:
    # stationary at t2 = sqrt(2)/2, value 5 sqrt(2)/4
    value = gluskin_kwapien((1.0, 1.0), [exponential(), power(2.0, scale=1.0)], 2.0)
    assert value == pytest.approx(5.0 * math.sqrt(2.0) / 4.0, rel=1e-9)


def test_gk_power_closed_form():
    # all-quadratic tails: value = sqrt(p) * ||(b_i s_i)||_2
    scales = (1.0, 0.5, 2.0)
    b = (1.0, 2.0, 0.7)
    tails = [power(2.0, scale=s) for s in scales]
    expected = math.sqrt(3.0) * math.sqrt(sum((bi * si) ** 2
                                              for bi, si in zip(b, scales)))
    assert gluskin_kwapien(b, tails, 3.0) == pytest.approx(expected, rel=1e-9)


def test_gk_single_coordinate_uses_the_whole_budget():
    assert gluskin_kwapien((3.0,), [TABLE], 2.5) == pytest.approx(
        3.0 * TABLE.inverse(2.5), rel=1e-12)
    assert gluskin_kwapien((2.0, 0.0), [exponential(), exponential()], 4.0) \
        == pytest.approx(4.0 * 2.0 / math.sqrt(2.0), rel=1e-12)


def test_gk_zero_vector_is_zero():
    assert gluskin_kwapien((0.0, 0.0), [exponential()] * 2, 4.0) == 0.0


def test_gk_monotone_in_p():
    tails = [exponential(), power(2.0), TABLE]
    b = (1.0, 0.7, 0.4)
    values = [gluskin_kwapien(b, tails, p) for p in (2.0, 3.0, 4.0, 8.0, 16.0)]
    assert all(v1 >= v0 - 1e-12 for v0, v1 in zip(values, values[1:]))


def test_gk_validation():
    with pytest.raises(InvalidArgumentError):
        gluskin_kwapien((1.0, 2.0), [exponential()], 4.0)
    with pytest.raises(InvalidArgumentError):
        gluskin_kwapien((-1.0,), [exponential()], 4.0)
    with pytest.raises(InvalidArgumentError):
        gluskin_kwapien((math.nan,), [exponential()], 4.0)


def test_gk_unbounded_when_the_table_runs_out():
    with pytest.raises(UnboundedProgramError):
        gluskin_kwapien((1.0,), [TABLE], 80.0)


def test_gk_estimate_splits_head_and_tail():
    a = (2.0, 1.0, 0.5, 0.25)
    tails = [exponential()] * 4
    p = 2.0
    head = p * 2.0 / math.sqrt(2.0)
    tail = math.sqrt(p) * math.sqrt(0.5 ** 2 + 0.25 ** 2)
    assert gluskin_kwapien_estimate(a, tails, p) == pytest.approx(head + tail, rel=1e-12)


def test_gk_estimate_uses_block_tails():
    # the largest coefficient sits on the cheap tail only when selected
    tails = [linear(10.0), exponential()]
    a = (0.1, 3.0)
    value = gluskin_kwapien_estimate(a, tails, 2.0)
    direct = gluskin_kwapien((0.1, 3.0), tails, 2.0)
    assert value == pytest.approx(direct, rel=1e-12)


# -- ball and level-set estimates ------------------------------------------------

def test_ball_moment_estimate_closed_forms():
    # q = 2: euclidean head, q' = 2
    assert ball_moment_estimate((1.0, 0.0, 0.0), 2.0, 2.0) == pytest.approx(math.sqrt(2.0))
    # q = 1: q' = inf, head is the max entry
    a = (1.0, 1.0)
    assert ball_moment_estimate(a, 1.0, 2.0) == pytest.approx(2.0 * 1.0)
    with pytest.raises(InvalidArgumentError):
        ball_moment_estimate(a, 0.5, 2.0)


def test_ball_moment_estimate_flat_vector():
    n, p, q = 8, 4.0, 2.0
    a = np.full(n, n ** -0.5)
    head = math.sqrt(min(p, n)) * math.sqrt(4.0 / n)
    tail = math.sqrt(p) * math.sqrt(4.0 / n)
    assert ball_moment_estimate(a, q, p) == pytest.approx(head + tail, rel=1e-12)


def test_level_set_estimate_matches_family_geometry():
    a = (1.0, -0.5, 0.25)
    p = 2.0
    cube_head = math.sqrt(3.0) * 1.5
    gauss_head = math.sqrt(2.0 * p) * math.sqrt(1.25)
    tail = math.sqrt(p) * 0.25
    assert level_set_moment_estimate(a, UniformCube(3), p) == pytest.approx(
        cube_head + tail, rel=1e-12)
    assert level_set_moment_estimate(a, GaussianStd(3), p) == pytest.approx(
        gauss_head + tail, rel=1e-12)
    fam = product_exponential(3)
    assert level_set_moment_estimate(a, fam, p) == pytest.approx(
        gluskin_kwapien_estimate(a, fam.tails, p), rel=1e-12)


def test_level_set_estimate_checks_dimensions():
    with pytest.raises(InvalidArgumentError):
        level_set_moment_estimate((1.0, 2.0), UniformCube(3), 2.0)


# -- gaussian band ---------------------------------------------------------------

def test_gaussian_band_components():
    band = gaussian_band((0.6, 0.8), 4.0)
    quartic = math.sqrt(0.6 ** 4 + 0.8 ** 4)
    assert band.lower == 0.0  # clamped: the quartic term swamps gamma_4
    assert band.upper_indep == pytest.approx(3.0 ** 0.25 + 4.0 * 0.8, rel=1e-12)
    assert band.upper_klartag == pytest.approx(3.0 ** 0.25 + 32.0 * quartic, rel=1e-12)
    assert band.indep_valid


def test_gaussian_band_positive_lower_for_spread_vectors():
    n = 100
    a = np.full(n, n ** -0.5)
    band = gaussian_band(a, 2.0)
    assert band.lower == pytest.approx(1.0 - 2.0 * math.sqrt(3.0) * 0.1, rel=1e-12)
    assert not band.indep_valid  # p < 3
    assert band.lower < band.upper_indep <= band.upper_klartag + 1e-12


def test_gaussian_band_rejects_zero_vector():
    with pytest.raises(InvalidArgumentError):
        gaussian_band((0.0, 0.0), 4.0)


# -- moment curve to tail witnesses ----------------------------------------------

def test_tail_bounds_structure():
    curve = {2.0: 1.0, 4.0: 1.5, 8.0: 2.5}
    summary = tail_bounds(curve)
    assert summary.doubling_constant == pytest.approx(5.0 / 3.0)
    assert summary.upper_points[0] == (math.e * 1.0, pytest.approx(math.exp(-2.0)))
    level, bound = summary.lower_points[-1]
    assert level == pytest.approx(2.5 * 0.6)
    assert bound == pytest.approx(math.exp(-8.0))
    assert summary.upper_at(0.1) == 1.0
    assert summary.upper_at(math.e * 1.6) == pytest.approx(math.exp(-4.0))


def test_tail_bounds_validation():
    with pytest.raises(InvalidArgumentError):
        tail_bounds({})
    with pytest.raises(InvalidArgumentError):
        tail_bounds({1.0: 1.0, 2.0: 1.2})
    with pytest.raises(InvalidArgumentError):
        tail_bounds({2.0: 1.0, 3.0: 1.2})  # no (p, 2p) pair
    with pytest.raises(InvalidArgumentError):
        tail_bounds({2.0: 1.5, 4.0: 1.0})  # decreasing
    with pytest.raises(InvalidArgumentError):
        tail_bounds({2.0: -1.0, 4.0: 1.0})


def test_tail_bounds_witnesses_hold_for_the_gaussian():
    curve = {p: gaussian_pnorm(p) for p in (2.0, 4.0, 8.0, 16.0)}
    summary = tail_bounds(curve)
    for level, bound in summary.upper_points:
        assert erfc(level / math.sqrt(2.0)) <= bound * (1.0 + 1e-12)
    for level, bound in summary.lower_points:
        assert erfc(level / math.sqrt(2.0)) >= bound * (1.0 - 1e-12)


# -- bundle dispatch --------------------------------------------------------------

def test_surrogate_bundle_dispatch():
    a = (1.0, 0.5, 0.25)
    exp_bundle = surrogate_bundle(a, 4.0, family=product_exponential(3))
    assert exp_bundle.gk is not None and exp_bundle.momunc is not None
    assert exp_bundle.bqn is None
    ball_bundle = surrogate_bundle(a, 4.0, family=UniformBall.isotropic(3, 2.0))
    assert ball_bundle.bqn is not None and ball_bundle.momunc is not None
    assert ball_bundle.gk is None
    bare = surrogate_bundle(a, 4.0)
    assert bare.gk is None and bare.bqn is None and bare.momunc is None
    assert bare.hitczenko <= 2.0 * bare.bn_upper


def test_surrogate_bundle_invariant_guard():
    with pytest.raises(SolverError):
        from lcmoments.surrogates import SurrogateBundle, GaussianBand
        SurrogateBundle(p=2.0, hitczenko=10.0, bn_upper=1.0, gk=None, bqn=None,
                        momunc=None,
                        band=GaussianBand(0.0, 1.0, 1.0, False))
