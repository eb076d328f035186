"""Tests for the Mittag-Leffler functions.

The reference oracle is direct series summation in extended precision
(mpmath), independent of the float64/asymptotic machinery under test.  For
small alpha, where the series needs astronomically many terms, a
Mellin-Barnes contour integral provides a second, structurally different
oracle.
"""

import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracdyn import ml_one, ml_two


def series_cost(alpha, beta, z):
    """A-priori (digits of cancellation, term count) for the series oracle."""
    az = abs(z)
    if az <= 1.0:
        return 0.0, 300
    m = az ** (1.0 / alpha)
    k_peak = max(0.0, (m - beta) / alpha)
    log_peak = max(0.0, k_peak * math.log(az)
                   - math.lgamma(alpha * k_peak + beta))
    return log_peak / math.log(10.0), int(math.e * m / alpha) + 300


def ml_series_oracle(alpha, beta, z, dps=None, max_terms=20000):
    """E_{alpha,beta}(z) by brute-force series summation at `dps` digits."""
    if dps is None:
        digits_lost, _ = series_cost(alpha, beta, z)
        dps = 40 + int(digits_lost)
    with mpmath.workdps(dps):
        zz = mpmath.mpmathify(z)
        # keep the gamma argument in working precision (a float alpha*k is
        # only ~1e-16 accurate, which the peak terms amplify enormously)
        aa = mpmath.mpf(alpha)
        bb = mpmath.mpf(beta)
        s = mpmath.mpf(0)
        zk = mpmath.mpf(1)
        tol = mpmath.mpf(10) ** (-dps + 6)
        for k in range(max_terms):
            term = zk / mpmath.gamma(aa * k + bb)
            s += term
            zk *= zz
            if k > 200 and abs(term) < tol * abs(s):
                return complex(s)
        raise RuntimeError("oracle did not converge; shrink |z| or raise alpha")


def ml_contour_oracle(alpha, beta, x, dps=35):
    """E_{alpha,beta}(-x) for x > 0 via a Mellin-Barnes contour integral."""
    with mpmath.workdps(dps):
        xx = mpmath.mpf(x)

        def integrand(t):
            s = mpmath.mpc(0.5, t)
            return (mpmath.gamma(s) * mpmath.gamma(1 - s)
                    / mpmath.gamma(beta - alpha * s) * xx ** (-s))

        v = mpmath.quad(integrand, [-mpmath.inf, mpmath.inf]) / (2 * mpmath.pi)
        return complex(v).real


def test_exponential_identity():
    for z in [-10.0, -4.5, -1.0, -0.1, 0.0, 0.1, 2.0, 7.5, 10.0]:
        assert ml_one(1.0, z) == pytest.approx(math.exp(z), rel=1e-12)


def test_cosh_identity():
    for t in [0.0, 0.5, 1.0, 2.0, 3.5, 5.0]:
        assert ml_two(2.0, 1.0, t * t) == pytest.approx(math.cosh(t), rel=1e-12)


def test_cos_identity():
    for t in [0.5, 1.0, 2.0, 4.0, 7.0]:
        assert ml_two(2.0, 1.0, -t * t) == pytest.approx(math.cos(t), rel=1e-10, abs=1e-12)


def test_expm1_identity():
    # E_{1,2}(z) = (e^z - 1) / z
    for z in [-8.0, -1.0, -1e-3, 1e-3, 1.0, 8.0]:
        assert ml_two(1.0, 2.0, z) == pytest.approx(math.expm1(z) / z, rel=1e-12)


def test_erfc_identity():
    # E_{1/2}(z) = exp(z^2) * erfc(-z)
    for z in [-3.0, -1.0, -0.2, 0.0, 0.4, 1.5, 3.0]:
        expected = math.exp(z * z) * math.erfc(-z)
        assert ml_one(0.5, z) == pytest.approx(expected, rel=1e-11)


def test_value_at_zero():
    assert ml_one(0.7, 0.0) == pytest.approx(1.0, rel=1e-15)
    assert ml_two(0.7, 2.5, 0.0) == pytest.approx(1.0 / math.gamma(2.5), rel=1e-14)


def test_spot_value():
    # fixed reference computed once with the series oracle at 80 digits
    assert ml_two(0.8, 0.8, -0.5) == pytest.approx(0.4579314981011144, rel=1e-12)


def test_against_series_oracle():
    alphas = [0.4, 0.5, 0.7, 0.8, 0.9, 0.995, 1.0, 1.3, 1.7, 2.0]
    betas = [0.5, 1.0, 2.0]
    zs = [-50.0, -20.0, -5.0, -1.0, -0.1, 0.5, 3.0, 10.0]
    checked = 0
    for alpha in alphas:
        for beta in betas:
            for z in zs:
                # keep the oracle itself cheap and well-conditioned
                digits_lost, n_terms = series_cost(alpha, beta, z)
                if n_terms > 4000 or digits_lost > 80:
                    continue
                ref = ml_series_oracle(alpha, beta, z).real
                got = ml_two(alpha, beta, z)
                assert got == pytest.approx(ref, rel=1e-10, abs=1e-280), (
                    alpha, beta, z)
                checked += 1
    assert checked > 150


def test_against_contour_oracle_deep_negative():
    # strong-cancellation band where the series oracle would be costly
    for alpha in [0.3, 0.5, 0.7, 0.9]:
        for beta in [0.8, 1.0, 2.0]:
            for x in [5.0, 20.0, 50.0]:
                ref = ml_contour_oracle(alpha, beta, x)
                got = ml_two(alpha, beta, -x)
                assert got == pytest.approx(ref, rel=1e-9, abs=1e-30), (
                    alpha, beta, -x)


def test_against_contour_oracle_small_alpha():
    # the regime where only the asymptotic expansion is viable
    for alpha in [0.05, 0.1, 0.2]:
        for beta in [0.8, 1.0]:
            for x in [2.0, 5.0, 30.0]:
                ref = ml_contour_oracle(alpha, beta, x)
                got = ml_two(alpha, beta, -x)
                assert got == pytest.approx(ref, rel=1e-9), (alpha, beta, -x)


def test_complex_argument():
    for alpha in [0.6, 0.9, 1.0, 1.5]:
        for z in [1 + 2j, -3 + 4j, -10 + 1j, 0.1 - 0.2j]:
            got = ml_two(alpha, 1.0, z)
            assert isinstance(got, complex)
            ref = ml_series_oracle(alpha, 1.0, z)
            assert abs(got - ref) <= 1e-10 * abs(ref)
            # Schwarz reflection
            mirrored = ml_two(alpha, 1.0, z.conjugate())
            assert abs(mirrored - got.conjugate()) <= 1e-12 * abs(got)


def test_recurrence_identity():
    # E_{a,b}(z) = 1/Gamma(b) + z * E_{a,a+b}(z)
    for alpha in [0.3, 0.5, 0.8, 1.0, 1.5]:
        for beta in [0.5, 1.0, 1.8]:
            for z in [-20.0, -3.0, -0.5, 0.7, 4.0]:
                lhs = ml_two(alpha, beta, z)
                rhs = 1.0 / math.gamma(beta) + z * ml_two(alpha, alpha + beta, z)
                assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_relaxation_is_monotone_and_positive():
    # t -> E_a(-t^a) is completely monotone for 0 < a <= 1
    for alpha in [0.3, 0.5, 0.9, 1.0]:
        prev = 1.0
        for i in range(1, 101):
            t = 0.1 * i
            v = ml_one(alpha, -(t ** alpha))
            assert 0.0 < v <= prev
            prev = v


def test_one_parameter_matches_two_parameter():
    for alpha in [0.3, 0.9, 1.4]:
        for z in [-12.0, -0.3, 2.2]:
            assert ml_one(alpha, z) == ml_two(alpha, 1.0, z)


def test_domain_errors():
    for bad_alpha in [0.0, -0.5, 2.5]:
        with pytest.raises(ValueError):
            ml_one(bad_alpha, 1.0)
    for bad_beta in [0.0, -1.0]:
        with pytest.raises(ValueError):
            ml_two(0.8, bad_beta, 1.0)
    with pytest.raises(ValueError):
        ml_one(0.8, math.inf)
    with pytest.raises(ValueError):
        ml_one(0.8, math.nan)


def test_overflow_is_reported():
    with pytest.raises(OverflowError):
        ml_one(0.1, 10.0)  # ~exp(10^10)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.3, 2.0),
    beta=st.floats(0.5, 3.0),
    z=st.floats(-30.0, 3.0),
)
def test_recurrence_property(alpha, beta, z):
    lhs = ml_two(alpha, beta, z)
    rhs = 1.0 / math.gamma(beta) + z * ml_two(alpha, alpha + beta, z)
    assert math.isfinite(lhs)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)
