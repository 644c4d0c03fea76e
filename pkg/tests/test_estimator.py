import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtrace.errors import DegenerateMomentError, InsufficientDataError, RMTraceError
from rmtrace.estimator import (correction_factors, estimate, forward_moments, invert_bar, invert_gaussian,
                               invert_moments, invert_tilde, predicted_error_p2, pure_state_error_bound,
                               single_outcome_variance_p2)
from rmtrace.haar import seeded_rng
from rmtrace.moments import MomentAccumulator
from rmtrace.states import make_footnote_state, trace_powers

PURE_N4 = np.array([0.25, 2 / 20, 6 / 120, 24 / 840])
MIXED_N4 = np.array([0.25, 1 / 16, 1 / 64, 1 / 256])


def test_correction_factors_n4():
    cf = correction_factors(4)
    assert cf.C == pytest.approx((1, 1.25, 1.875, 3.28125), abs=1e-15)
    assert cf.D == (4, 20, 120, 840)


def test_correction_factors_limit():
    cf = correction_factors(10**9)
    assert max(abs(c - 1) for c in cf.C) < 1e-8


@pytest.mark.parametrize("N", [1, 2, 3, 4, 7, 32, 1000])
def test_d_equals_n_power_times_c(N):
    cf = correction_factors(N)
    for n in range(1, 5):
        exact_c = math.prod(Fraction(N + j, N) for j in range(n))
        assert Fraction(N) ** n * exact_c == Fraction(cf.d(n))
        assert cf.d(n) == pytest.approx(N ** n * cf.c(n), rel=1e-15)


def test_correction_factor_errors():
    with pytest.raises(RMTraceError):
        correction_factors(0)


def test_forward_pure_state_values():
    np.testing.assert_allclose(forward_moments(1, 1, 1, 4), PURE_N4, rtol=1e-15)
    np.testing.assert_allclose(forward_moments(1, 1, 1, 8)[3], 24 / 7920, rtol=1e-15)


def test_invert_bar_pure_and_mixed():
    np.testing.assert_allclose(invert_bar(PURE_N4, 4).p_hat, 1.0, atol=1e-12)
    np.testing.assert_allclose(invert_bar(MIXED_N4, 4).p_hat, [0.25, 0.0625, 0.015625], atol=1e-12)


def test_invert_bar_unphysical_flag():
    rep = invert_bar(np.array([0.25, 1 / 20, 0.01, 0.001]), 4, M=4)
    assert rep.p2 == pytest.approx(0.0, abs=1e-15)
    assert rep.in_physical_range[0] is False


def test_invert_tilde_pure():
    rep = invert_tilde(PURE_N4)
    assert rep.N_used == pytest.approx(4, abs=1e-12)
    np.testing.assert_allclose(rep.p_hat, 1.0, atol=1e-10)


def test_tilde_gaussian_reduces_to_ratio():
    P = np.array([0.2, 0.04, 0.01, 0.003])
    rep = invert_gaussian(P)
    assert rep.p2 == pytest.approx(P[1] / P[0] ** 2 - 1, abs=1e-15)
    assert rep.p2 == pytest.approx(0.0, abs=1e-14)


def test_tilde_degenerate():
    with pytest.raises(DegenerateMomentError):
        invert_tilde(np.array([0.0, 0.1, 0.1, 0.1]))


def test_gaussian_vs_exact_large_n():
    N = 10**6
    P = forward_moments(0.4, 0.2, 0.1, N)
    assert abs(invert_gaussian(P, N).p2 - invert_bar(P, N).p2) < 1e-5


def test_gaussian_underestimates_at_small_n():
    assert invert_gaussian(PURE_N4, 4).p2 == pytest.approx(0.6, abs=1e-12)
    assert invert_gaussian(MIXED_N4, 4).p2 == pytest.approx(0.0, abs=1e-12)


def test_unknown_variant():
    with pytest.raises(RMTraceError):
        estimate(PURE_N4, "bar-fancy", N=4)
    with pytest.raises(RMTraceError):
        estimate(PURE_N4, "bar-exact")


@pytest.mark.parametrize("N", [2, 4, 8, 32])
def test_round_trip_footnote_states(N):
    rng = seeded_rng(6, N)
    for _ in range(20):
        p = np.array(trace_powers(make_footnote_state(min(N, 4), 2.0, rng)))
        np.testing.assert_allclose(invert_moments(forward_moments(*p, N), N), p, atol=1e-10)
        np.testing.assert_allclose(invert_moments(forward_moments(*p, N)), p, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 1), st.floats(0, 1), st.floats(0, 1), st.sampled_from([2, 4, 8, 32]))
def test_round_trip_property(p2, a, b, N):
    p3 = a * p2
    p4 = b * p3
    back = invert_moments(forward_moments(p2, p3, p4, N), N)
    np.testing.assert_allclose(back, [p2, p3, p4], atol=1e-10)


def test_pure_state_bound_values():
    assert pure_state_error_bound(4) == pytest.approx(math.sqrt(52 / 7), abs=1e-12)
    assert pure_state_error_bound() == pytest.approx(math.sqrt(20))
    assert abs(pure_state_error_bound(10**6) - math.sqrt(20)) < 1e-3
    vals = [pure_state_error_bound(n) for n in (4, 8, 16, 10**6)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_predicted_error_values():
    assert predicted_error_p2(1, 1, 1, 2) == pytest.approx(math.sqrt(20))
    assert predicted_error_p2(1, 1, 1, 100, N=4) == pytest.approx(math.sqrt(52 / 7 / 99), abs=1e-12)
    assert predicted_error_p2(1, 1, 1, 100, N=4) == pytest.approx(0.274, abs=5e-4)
    with pytest.raises(InsufficientDataError):
        predicted_error_p2(1, 1, 1, 1)


def test_general_variance_matches_pure_bound():
    for N in (2, 4, 9, 100):
        assert single_outcome_variance_p2(1, 1, 1, N) == pytest.approx(pure_state_error_bound(N) ** 2)


def test_general_variance_matches_monte_carlo():
    # Brute-force the single-outcome variance of D_2 Prob^2 for a mixed state.
    from rmtrace.haar import sample_haar_batch
    from rmtrace.measurement import probabilities_batch
    rng = seeded_rng(12, 0)
    rho = make_footnote_state(4, 2.0, rng)
    p = probabilities_batch(rho.data, sample_haar_batch(4, 200_000, rng))[:, 0]
    x = 20 * p ** 2 - 1
    pred = single_outcome_variance_p2(*trace_powers(rho), 4)
    se_var = x.var() * math.sqrt(2 / len(x)) * 3  # generous: heavy tails
    assert abs(x.var(ddof=1) - pred) < 4 * se_var


def test_delta_method_matches_bar_scaling():
    rng = seeded_rng(3, 3)
    acc = MomentAccumulator(1).absorb_exact(rng.beta(1, 3, size=(500, 1)))
    t = acc.table()
    rep = estimate(t, "bar-exact", N=4)
    assert rep.empirical_err[0] == pytest.approx(20 * t.pooled_se[1], rel=1e-6)
    assert rep.n_rand == 500
