"""Truncated Taylor arithmetic over mpmath for radial profile functions.

A Jet holds the Taylor coefficients of a smooth function of one variable at
a point, up to a fixed order (4 is enough for curvature and one Laplacian).
All coefficients live at the current mpmath working precision.
"""

from fractions import Fraction

from mpmath import mp, mpf

ORDER = 4


def _to_mpf(x):
    if isinstance(x, Fraction):
        return mpf(x.numerator) / mpf(x.denominator)
    return mpf(x)


class Jet:
    """Taylor coefficients (f, f'/1!, f''/2!, ...) at a base point."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = tuple(coeffs)

    @classmethod
    def variable(cls, t0):
        c = [_to_mpf(t0), mpf(1)] + [mpf(0)] * (ORDER - 1)
        return cls(c)

    @classmethod
    def constant(cls, v):
        return cls([_to_mpf(v)] + [mpf(0)] * ORDER)

    @property
    def value(self):
        return self.coeffs[0]

    def derivative(self, k):
        """k-th derivative at the base point."""
        d = self.coeffs[k]
        for j in range(2, k + 1):
            d *= j
        return d

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(other)
        return Jet([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return Jet([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else Jet.constant(-_to_mpf(other)))

    def __rsub__(self, other):
        return Jet.constant(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            s = _to_mpf(other)
            return Jet([a * s for a in self.coeffs])
        a, b = self.coeffs, other.coeffs
        out = [mpf(0)] * (ORDER + 1)
        for i in range(ORDER + 1):
            ai = a[i]
            if ai == 0:
                continue
            for j in range(ORDER + 1 - i):
                out[i + j] += ai * b[j]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (mpf(1) / _to_mpf(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, int):
            if exponent == 0:
                return Jet.constant(1)
            if exponent < 0:
                return (self ** (-exponent)).reciprocal()
            result = self
            for _ in range(exponent - 1):
                result = result * self
            return result
        return jet_exp(jet_log(self) * _to_mpf(exponent))

    def reciprocal(self):
        a0 = self.coeffs[0]
        if a0 == 0:
            raise ZeroDivisionError("jet reciprocal at a zero value")
        h = Jet([mpf(0)] + [c / a0 for c in self.coeffs[1:]])
        # 1/(a0 (1+h)) with the geometric series truncated at ORDER.
        acc = Jet.constant(1)
        term = Jet.constant(1)
        for _ in range(ORDER):
            term = term * h * (-1)
            acc = acc + term
        return acc * (mpf(1) / a0)

    def shifted_high_part(self):
        return Jet([mpf(0)] + list(self.coeffs[1:]))


def jet_log(x):
    a0 = x.coeffs[0]
    if a0 <= 0:
        raise ValueError("jet_log requires a positive value part")
    h = x.shifted_high_part() * (mpf(1) / a0)
    acc = Jet.constant(mp.log(a0))
    term = Jet.constant(1)
    for k in range(1, ORDER + 1):
        term = term * h
        acc = acc + term * (mpf(-1) ** (k + 1) / k)
    return acc


def jet_exp(x):
    a0 = x.coeffs[0]
    h = x.shifted_high_part()
    acc = Jet.constant(1)
    term = Jet.constant(1)
    fact = 1
    for k in range(1, ORDER + 1):
        term = term * h
        fact *= k
        acc = acc + term * (mpf(1) / fact)
    return acc * mp.exp(a0)


def jet_sqrt(x):
    return x ** Fraction(1, 2)
