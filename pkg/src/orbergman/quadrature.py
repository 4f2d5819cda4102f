"""Arbitrary-precision Gauss-Legendre rules on [0, 1].

Nodes are seeded from the double-precision rule and polished with Newton
iterations at the working precision; rules are cached per (node count,
precision). Node counts are quantized to a doubling ladder so that nested
rules certify each other.
"""

from functools import lru_cache

from mpmath import mp, mpf
from scipy.special import roots_legendre

from .errors import QuadratureNotConverged

_BUCKETS = (32, 64, 128, 256, 512, 1024, 2048)


def bucket_for(n_min):
    """Smallest ladder node count >= n_min."""
    for b in _BUCKETS:
        if b >= n_min:
            return b
    raise ValueError(f"requested quadrature size {n_min} exceeds the ladder")


def _legendre_pair(n, x):
    """(P_n(x), P_n'(x)) by the three-term recurrence."""
    p0, p1 = mpf(1), x
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=None)
def gauss_legendre_01(n, prec):
    """Nodes and weights on [0, 1] at `prec` bits, as tuples of mpf."""
    seeds, _ = roots_legendre(n)
    xs, ws = [], []
    with mp.workprec(prec + 24):
        for seed in seeds:
            x = mpf(float(seed))
            for _ in range(4):
                p, dp = _legendre_pair(n, x)
                x = x - p / dp
            _, dp = _legendre_pair(n, x)
            w = 2 / ((1 - x * x) * dp * dp)
            xs.append((x + 1) / 2)
            ws.append(w / 2)
    return tuple(xs), tuple(ws)


def integrate_01(f, n, prec):
    """Fixed-rule integral of f over [0, 1], summed in node order."""
    xs, ws = gauss_legendre_01(n, prec)
    with mp.workprec(prec):
        total = mpf(0)
        for x, w in zip(xs, ws):
            total += w * f(x)
    return total


def integrate_01_certified(f, n_min, prec, rel_tol=None):
    """Integrate with node-doubling certification.

    Evaluates at the ladder bucket for n_min and at the doubled bucket;
    raises QuadratureNotConverged when the two disagree beyond rel_tol
    (default 2^(12 - prec/2)).
    """
    if rel_tol is None:
        rel_tol = mpf(2) ** (12 - prec // 2)
    n = bucket_for(n_min)
    coarse = integrate_01(f, n, prec)
    fine = integrate_01(f, 2 * n, prec)
    scale = abs(fine) if fine != 0 else mpf(1)
    if abs(fine - coarse) > rel_tol * scale:
        raise QuadratureNotConverged(
            f"nodes {n} vs {2 * n}: relative gap {abs(fine - coarse) / scale}"
        )
    return fine
