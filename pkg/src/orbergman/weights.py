"""Weight systems whose index moments are balanced across residue classes.

A weight system is a finite set of positive rational coefficients c_i
attached to non-negative integer indices, together with a modulus m. It is
admissible to order K when, for every k <= K, the k-th moment mass is
distributed equally over the residue classes of the indices mod m. All
operations here are exact; nothing in this module touches floating point.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from . import exactlp
from .cyclotomic import is_zero_root_combination
from .errors import Infeasible, MismatchedOrder

UNBOUNDED = None  # order sentinel for m = 1, where the condition is vacuous


def _as_coeff_map(support):
    return {i: c for i, c in support}


def admissible_order(coeffs, m):
    """Largest K such that the residue-moment identities hold for k <= K.

    Returns UNBOUNDED for m = 1, and -1 when even the k = 0 mass identity
    fails. coeffs maps index -> positive Fraction.
    """
    if m == 1:
        return UNBOUNDED
    max_index = max(coeffs)
    order = -1
    for k in range(0, max_index + 2):
        total = sum(c * Fraction(i) ** k for i, c in coeffs.items())
        per_class = [Fraction(0)] * m
        for i, c in coeffs.items():
            per_class[i % m] += c * Fraction(i) ** k
        if any(m * s != total for s in per_class):
            return order
        order = k
    return order


@dataclass(frozen=True)
class WeightSystem:
    """Positive rational weights on integer indices with a fixed modulus.

    order_K caches the admissibility order: the largest K for which
    check_admissible holds (UNBOUNDED for m=1, -1 if the mass identity
    already fails at k=0).
    """

    m: int
    support: tuple  # ((index, Fraction), ...) sorted by index
    order_K: object  # int >= -1, or UNBOUNDED

    @classmethod
    def from_coeffs(cls, m, coeffs):
        if m < 1:
            raise ValueError("modulus m must be a positive integer")
        if not coeffs:
            raise ValueError("support must be non-empty")
        items = []
        for i, c in dict(coeffs).items():
            i = int(i)
            c = Fraction(c)
            if i < 0:
                raise ValueError("indices must be non-negative")
            if c <= 0:
                raise ValueError("coefficients must be positive")
            items.append((i, c))
        items.sort()
        order = admissible_order(_as_coeff_map(items), m)
        return cls(m=m, support=tuple(items), order_K=order)

    def __post_init__(self):
        if not self.support:
            raise ValueError("support must be non-empty")
        indices = [i for i, _ in self.support]
        if len(set(indices)) != len(indices):
            raise ValueError("indices must be pairwise distinct")
        if any(c <= 0 for _, c in self.support):
            raise ValueError("coefficients must be positive")
        expected = admissible_order(self.coeffs(), self.m)
        if expected != self.order_K:
            raise ValueError("inconsistent admissibility order")

    def coeffs(self):
        return _as_coeff_map(self.support)

    def indices(self):
        return tuple(i for i, _ in self.support)

    def max_index(self):
        return self.support[-1][0]

    def scaled(self, q):
        """New system with every coefficient multiplied by q > 0."""
        q = Fraction(q)
        if q <= 0:
            raise ValueError("scale must be positive")
        return WeightSystem.from_coeffs(self.m, {i: c * q for i, c in self.support})

    # -- serialization -----------------------------------------------------

    def to_record(self):
        k = "unbounded" if self.order_K is UNBOUNDED else self.order_K
        return {
            "m": self.m,
            "K": k,
            "pairs": [[i, c.numerator, c.denominator] for i, c in self.support],
        }

    @classmethod
    def from_record(cls, record):
        coeffs = {int(i): Fraction(int(num), int(den)) for i, num, den in record["pairs"]}
        w = cls.from_coeffs(int(record["m"]), coeffs)
        k = record.get("K")
        if k is not None and k != "unbounded" and w.order_K != int(k):
            raise ValueError("stored order K does not match the coefficients")
        return w

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_record(json.loads(text))


def residue_moment(w, k, u):
    """Exact sum of i^k c_i over support indices i congruent to u mod m."""
    if k < 0:
        raise ValueError("moment order k must be non-negative")
    if not 0 <= u < w.m:
        raise ValueError("residue class u must satisfy 0 <= u < m")
    return sum(c * Fraction(i) ** k for i, c in w.support if i % w.m == u)


def total_moment(w, k):
    return sum(c * Fraction(i) ** k for i, c in w.support)


def check_admissible(w, K):
    """Exact test of the residue-balance identities for all k <= K.

    For every residue class u mod m and every k in {0, ..., K}, the class
    moment must equal 1/m of the total moment. K < 0 is vacuously true.
    """
    if w.m == 1 or K < 0:
        return True
    for k in range(K + 1):
        total = total_moment(w, k)
        for u in range(w.m):
            if w.m * residue_moment(w, k, u) != total:
                return False
    return True


def convolve(w1, w2):
    """Coefficient-wise convolution (w1*w2)_j = sum_i c1_i c2_{j-i}."""
    if w1.m != w2.m:
        raise MismatchedOrder(f"moduli differ: {w1.m} != {w2.m}")
    out = {}
    for i, a in w1.support:
        for j, b in w2.support:
            out[i + j] = out.get(i + j, Fraction(0)) + a * b
    return WeightSystem.from_coeffs(w1.m, out)


def root_order_at_one(w, l, u, lambda_exp=1):
    """Order of vanishing at eta = 1 of eta -> sum_i c_i i^l lam^{u i} eta^i.

    lam is the primitive m-th root of unity with exponent lambda_exp.
    Exact: the r-th derivative at 1 is a combination of roots of unity with
    rational coefficients, tested for zero in the cyclotomic ring. Returns
    math.inf for the degenerate identically-zero polynomial (support {0}
    with l >= 1).
    """
    m = w.m
    if m == 1:
        raise ValueError("m = 1 has no nontrivial character")
    if not 1 <= u <= m - 1:
        raise ValueError("u must lie in 1..m-1")
    if math.gcd(lambda_exp % m, m) != 1:
        raise ValueError("lambda_exp must be coprime to m")
    if l < 0:
        raise ValueError("derivative weight l must be non-negative")
    if l >= 1 and w.indices() == (0,):
        return math.inf
    degree = w.max_index()
    for r in range(degree + 1):
        terms = {}
        for i, c in w.support:
            falling = 1
            for s in range(r):
                falling *= i - s
            if falling == 0:
                continue
            coeff = c * Fraction(i) ** l * falling
            if coeff == 0:
                continue
            e = (u * lambda_exp * i) % m
            terms[e] = terms.get(e, Fraction(0)) + coeff
        if terms and not is_zero_root_combination(terms, m):
            return r
    return degree + 1


def character_moment_is_zero(w, s, u, lambda_exp=1):
    """Exact test of sum_i c_i i^s lam^{u i} = 0 in the cyclotomic ring."""
    m = w.m
    terms = {}
    for i, c in w.support:
        coeff = c * Fraction(i) ** s
        if coeff == 0:
            continue
        e = (u * lambda_exp * i) % m
        terms[e] = terms.get(e, Fraction(0)) + coeff
    if not terms:
        return True
    return is_zero_root_combination(terms, m)


# -- solver ----------------------------------------------------------------


def _balance_rows(m, K, indices):
    """Rows of the homogeneous balance system over the given indices.

    Row (k, u): m * [i = u mod m] * i^k - i^k, one per residue class and
    moment order (one row per k is redundant; the LP handles that).
    """
    rows = []
    for k in range(K + 1):
        powers = [Fraction(i) ** k for i in indices]
        for u in range(m):
            rows.append([
                (m * p if i % m == u else Fraction(0)) - p
                for i, p in zip(indices, powers)
            ])
    return rows


def _completable(m, K, committed, tail):
    """Can `committed` (strictly positive) extend to a solution using `tail`?"""
    indices = list(committed) + list(tail)
    if not indices:
        return False
    rows = _balance_rows(m, K, indices)
    lower = [Fraction(1)] * len(committed) + [Fraction(0)] * len(tail)
    try:
        exactlp.feasible_point(rows, [Fraction(0)] * len(rows), lower)
        return True
    except Infeasible:
        return False


def solve_weights(m, K, window):
    """Positive rational weight system admissible to order K in the window.

    window is an inclusive index interval (lo, hi). Among feasible supports
    the lexicographically smallest is chosen, then the total mass is
    minimized; the result is scaled so the smallest coefficient equals 1.
    Raises Infeasible when the window admits no positive solution.
    """
    if m < 1:
        raise ValueError("modulus m must be positive")
    if K < 0:
        raise ValueError("order K must be non-negative")
    lo, hi = int(window[0]), int(window[1])
    if lo < 0 or hi < lo:
        raise ValueError("window must be a non-empty interval of non-negative integers")
    candidates = list(range(lo, hi + 1))
    if not _completable(m, K, [], candidates):
        raise Infeasible(
            f"no positive weight system of order {K} supported in [{lo}, {hi}]"
        )

    committed = []
    remaining = candidates
    while True:
        if committed and _completable(m, K, committed, []):
            break
        for pos, idx in enumerate(remaining):
            if _completable(m, K, committed + [idx], remaining[pos + 1:]):
                committed.append(idx)
                remaining = remaining[pos + 1:]
                break
        else:
            raise Infeasible("window exhausted before reaching a feasible support")

    rows = _balance_rows(m, K, committed)
    solution = exactlp.minimize_total(
        rows, [Fraction(0)] * len(rows), [Fraction(1)] * len(committed)
    )
    smallest = min(solution)
    coeffs = {i: c / smallest for i, c in zip(committed, solution)}
    w = WeightSystem.from_coeffs(m, coeffs)
    if not check_admissible(w, K):
        raise AssertionError("solver produced a non-admissible system")
    return w
