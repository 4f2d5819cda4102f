"""Jet arithmetic cross-checked against mpmath numerical differentiation."""

from fractions import Fraction

import mpmath
import pytest
from mpmath import mp, mpf

from orbergman.jets import Jet, jet_exp, jet_log


def _check_against_diff(fn_jet, fn_plain, t0, rel=mpf("1e-20")):
    with mp.workprec(160):
        jet = fn_jet(Jet.variable(t0))
        for k in range(5):
            expected = mpmath.diff(fn_plain, mpf(t0), k)
            got = jet.derivative(k)
            scale = max(abs(expected), mpf(1))
            assert abs(got - expected) / scale < rel, (k, got, expected)


def test_polynomial_jet():
    _check_against_diff(lambda x: x * x * x + 2 * x + 5,
                        lambda t: t ** 3 + 2 * t + 5, 1.25)


def test_log_jet():
    _check_against_diff(lambda x: jet_log(x + 1), lambda t: mpmath.log(1 + t), 0.7)


def test_exp_jet():
    _check_against_diff(lambda x: jet_exp(x * -2), lambda t: mpmath.exp(-2 * t), 0.31)


def test_fractional_power_jet():
    _check_against_diff(lambda x: (x + 1) ** Fraction(-1, 3),
                        lambda t: (1 + t) ** (mpf(-1) / 3), 0.5)


def test_reciprocal_and_division():
    _check_against_diff(lambda x: (x * x + 1) / (x + 2),
                        lambda t: (t * t + 1) / (t + 2), 0.9)


def test_composite_teardrop_like_potential():
    m = 3
    kappa = mpf(1) / 2

    def fj(x):
        g = x ** m + 1
        return jet_log(g) / m + x * g ** Fraction(-1, m) * kappa

    def fp(t):
        g = 1 + t ** m
        return mpmath.log(g) / m + kappa * t * g ** (mpf(-1) / m)

    _check_against_diff(fj, fp, 0.45)
    _check_against_diff(fj, fp, 0.0, rel=mpf("1e-18"))


def test_integer_negative_power():
    _check_against_diff(lambda x: x ** -2, lambda t: t ** mpf(-2), 1.5)


def test_log_requires_positive_value():
    with pytest.raises(ValueError):
        jet_log(Jet.variable(-1.0) * 1)


def test_division_by_zero_jet():
    with pytest.raises(ZeroDivisionError):
        Jet.constant(1) / Jet.variable(0)
