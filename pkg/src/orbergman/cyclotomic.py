"""Exact arithmetic in the ring of integers of the m-th cyclotomic field.

Elements are represented by rational coefficient vectors indexed by powers
of a primitive m-th root of unity; equality with zero is decided by
reduction modulo the m-th cyclotomic polynomial.
"""

from fractions import Fraction
from functools import lru_cache


@lru_cache(maxsize=None)
def cyclotomic_polynomial(m):
    """Integer coefficients (ascending) of the m-th cyclotomic polynomial."""
    if m < 1:
        raise ValueError("m must be positive")
    # x^m - 1 divided by the product of the proper cyclotomic factors.
    num = [-1] + [0] * (m - 1) + [1]
    for d in range(1, m):
        if m % d == 0:
            num = _polydiv_exact(num, cyclotomic_polynomial(d))
    return tuple(num)


def _polydiv_exact(num, den):
    """Exact division of integer polynomials (ascending coefficients)."""
    num = list(num)
    den = list(den)
    out = [0] * (len(num) - len(den) + 1)
    for k in range(len(out) - 1, -1, -1):
        coeff = num[k + len(den) - 1]
        if coeff % den[-1] != 0:
            raise ArithmeticError("non-exact polynomial division")
        q = coeff // den[-1]
        out[k] = q
        for j, dj in enumerate(den):
            num[k + j] -= q * dj
    if any(num[: len(den) - 1]):
        raise ArithmeticError("non-exact polynomial division")
    return out


def reduce_root_combination(coeffs_by_power, m):
    """Reduce sum_v a_v zeta^v modulo the m-th cyclotomic polynomial.

    coeffs_by_power maps integer exponents (any size) to Fractions; exponents
    are first folded with zeta^m = 1. Returns the canonical remainder as a
    tuple of Fractions of length deg(Phi_m).
    """
    folded = [Fraction(0)] * m
    for v, a in coeffs_by_power.items():
        folded[v % m] += Fraction(a)
    phi = cyclotomic_polynomial(m)
    deg = len(phi) - 1
    # Long division by the monic polynomial phi.
    for k in range(m - 1, deg - 1, -1):
        q = folded[k]
        if q == 0:
            continue
        folded[k] = Fraction(0)
        for j in range(deg):
            folded[k - deg + j] -= q * phi[j]
    return tuple(folded[:deg])


def is_zero_root_combination(coeffs_by_power, m):
    """True iff sum_v a_v zeta^v vanishes for a primitive m-th root zeta."""
    return all(v == 0 for v in reduce_root_combination(coeffs_by_power, m))
