"""Expansion coefficients, remainder decay, and cone-point profiles.

Everything here consumes densities from the bergman module and geometry
evaluators; fits run in double precision after normalizing by the leading
power, which the p-range (<= a few hundred) keeps well conditioned.
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from mpmath import mp, mpf
from scipy.optimize import minimize_scalar

from .bergman import weighted_density
from .errors import DegenerateData, IllConditioned
from .geometry import (
    radius_at_distance,
    scalar_curvature,
    volume_ratio_and_laplacian,
)
from .weights import WeightSystem

UNIT_WEIGHTS = WeightSystem.from_coeffs(1, {0: 1})


def _fr(x):
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


# -- predicted coefficients ----------------------------------------------------


def predicted_b(model, w, x, level, regime="auto"):
    """Predicted expansion coefficient b_level at x, as an mpf.

    kahler regime:         b0 = sum c_i,
                           b1 = sum c_i (n i + r^X(x)/(8 pi)).
    general-metric regime: both coefficients pick up the volume-form ratio,
    and b1 trades r^X for the reference scalar curvature corrected by the
    Laplacian of the log ratio.
    """
    if level not in (0, 1):
        raise ValueError("only levels 0 and 1 are predicted")
    if regime == "auto":
        regime = "general-metric" if model.metric_only else "kahler"
    if regime not in ("kahler", "general-metric"):
        raise ValueError(f"unknown regime {regime!r}")
    n = model.n
    csum = _fr(sum(c for _, c in w.support))
    if regime == "kahler":
        if level == 0:
            return csum
        r = scalar_curvature(model, x)
        acc = mpf(0)
        for i, c in w.support:
            acc += _fr(c) * (n * i + r / (8 * mp.pi))
        return acc
    ratio, lap_log_ratio = volume_ratio_and_laplacian(model, x)
    if level == 0:
        return ratio * csum
    r_omega = scalar_curvature(model, x, of_reference=True)
    acc = mpf(0)
    for i, c in w.support:
        acc += _fr(c) * (n * i + r_omega / (8 * mp.pi) - lap_log_ratio / (4 * mp.pi))
    return ratio * acc


# -- least-squares expansion fits -----------------------------------------------


@dataclass(frozen=True)
class ExpansionFit:
    """Coefficients of a fit value ~ sum_j b_j p^-j over a p window."""

    p_values: tuple
    order: int
    coefficients: tuple
    std_errors: tuple
    residuals: tuple          # |value - model(p)| per sample
    condition_number: float

    @property
    def b0(self):
        return self.coefficients[0]

    @property
    def b1(self):
        return self.coefficients[1] if self.order >= 1 else None


def geometric_p_values(lo, hi, count=12):
    """Roughly geometric integer ladder in [lo, hi], deduplicated."""
    if not (1 <= lo <= hi):
        raise ValueError("need 1 <= lo <= hi")
    if count < 2:
        raise ValueError("need at least two values")
    ratio = (hi / lo) ** (1.0 / (count - 1))
    vals = sorted({int(round(lo * ratio ** k)) for k in range(count)})
    return [v for v in vals if lo <= v <= hi]


def fit_expansion(samples, J, cond_threshold=1e8):
    """Least squares for value(p) ~ sum_{j<=J} b_j p^-j.

    samples are (p, value) pairs with value already normalized by p^n. The
    design columns are scaled to unit norm before solving; the reported
    condition number refers to the scaled design and triggers
    IllConditioned above the threshold.
    """
    samples = sorted((int(p), float(v)) for p, v in samples)
    if len(samples) < J + 3:
        raise ValueError(f"need at least {J + 3} distinct p values for order {J}")
    ps = np.array([p for p, _ in samples], dtype=float)
    ys = np.array([v for _, v in samples], dtype=float)
    design = np.column_stack([ps ** (-j) for j in range(J + 1)])
    scales = np.linalg.norm(design, axis=0)
    cond = float(np.linalg.cond(design / scales))
    if cond > cond_threshold:
        raise IllConditioned(f"scaled design condition {cond:.3e} > {cond_threshold:.1e}")
    coeffs_scaled, _, _, _ = np.linalg.lstsq(design / scales, ys, rcond=None)
    coeffs = coeffs_scaled / scales
    fitted = design @ coeffs
    resid = ys - fitted
    dof = max(len(ps) - (J + 1), 1)
    sigma2 = float(resid @ resid) / dof
    cov = np.linalg.inv((design / scales).T @ (design / scales))
    errs = np.sqrt(np.diag(cov) * sigma2) / scales
    return ExpansionFit(
        p_values=tuple(int(p) for p in ps),
        order=J,
        coefficients=tuple(float(c) for c in coeffs),
        std_errors=tuple(float(e) for e in errs),
        residuals=tuple(float(abs(r)) for r in resid),
        condition_number=cond,
    )


# -- remainders ------------------------------------------------------------------


def _norm_value(model, w, p, x, prec):
    return weighted_density(model, w, p, x, prec=prec) / mpf(p) ** model.n


def remainder_value(model, w, p, x, N, prec=128, regime="auto"):
    """B_p(x)/p^n minus the order-N predicted expansion, signed."""
    if N not in (0, 1):
        raise ValueError("remainders are defined for N in {0, 1}")
    with mp.workprec(prec):
        val = _norm_value(model, w, p, x, prec)
        for j in range(N + 1):
            val -= predicted_b(model, w, x, j, regime) * mpf(p) ** (-j)
        return val


def sup_remainder(model, w, p, grid, N, prec=128, regime="auto"):
    """Sup over the grid of the absolute order-N expansion remainder."""
    worst = mpf(0)
    for x in grid:
        worst = max(worst, abs(remainder_value(model, w, p, x, N, prec, regime)))
    return float(worst)


def derivative_remainder(model, w, p, grid, l, beta=0.5, prec=128, regime="auto", N=1):
    """Sup of the finite-difference l-th radial derivative of the remainder.

    The step is h = beta/sqrt(p) in the chart coordinate of each grid point
    (the uniformizing coordinate near cone points). l = 0 reduces to
    sup_remainder; points closer than h to a chart center are skipped for
    l = 1 since the radial remainder is even there.
    """
    if l == 0:
        return sup_remainder(model, w, p, grid, N, prec, regime)
    if l != 1:
        raise ValueError("only derivative orders 0 and 1 are supported")
    h = beta / math.sqrt(p)
    worst = mpf(0)
    for x in grid:
        r = abs(complex(x.z))
        if r < h:
            continue
        direction = complex(x.z) / r
        x_hi = model.point(x.chart_id, direction * (r + h))
        x_lo = model.point(x.chart_id, direction * (r - h))
        hi = remainder_value(model, w, p, x_hi, N, prec, regime)
        lo = remainder_value(model, w, p, x_lo, N, prec, regime)
        worst = max(worst, abs(hi - lo) / (2 * mpf(h)))
    return float(worst)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    half_width: float
    points: int


def decay_slope(pairs):
    """Log-log least-squares slope of (p, value) data with positive values."""
    pairs = sorted((float(p), float(v)) for p, v in pairs)
    if len(pairs) < 5:
        raise ValueError("need at least 5 data points for a slope")
    values = np.array([v for _, v in pairs])
    if np.any(values <= 0) or np.max(values) < 1e-13:
        raise DegenerateData("remainders sit at the arithmetic noise floor")
    logs = np.log(np.array([p for p, _ in pairs]))
    logv = np.log(values)
    design = np.column_stack([np.ones_like(logs), logs])
    coef, _, _, _ = np.linalg.lstsq(design, logv, rcond=None)
    resid = logv - design @ coef
    dof = max(len(pairs) - 2, 1)
    sigma2 = float(resid @ resid) / dof
    cov = np.linalg.inv(design.T @ design) * sigma2
    return SlopeFit(slope=float(coef[1]), half_width=2.0 * math.sqrt(cov[1, 1]),
                    points=len(pairs))


# -- cone-point profiles -----------------------------------------------------------


def singular_model(m, lambda_exp, p, t, pairing_scale):
    """Leading oscillatory Gaussian correction at rescaled radius t.

    Re sum_{u=1..m-1} lam^{u p} exp(-2 pi s (1 - zeta^-u) t^2) with lam the
    primitive root with exponent lambda_exp and zeta the geometric rotation;
    imaginary parts cancel in conjugate pairs.
    """
    if m < 2:
        return 0.0
    acc = 0j
    for u in range(1, m):
        lam_up = cmath.exp(2j * cmath.pi * lambda_exp * u * p / m)
        zeta_mu = cmath.exp(-2j * cmath.pi * u / m)
        acc += lam_up * cmath.exp(-2 * cmath.pi * pairing_scale * (1 - zeta_mu) * t * t)
    return acc.real


def singular_envelope(m, t, pairing_scale):
    """Sum of the Gaussian magnitudes (monotone decreasing in t)."""
    total = 0.0
    for u in range(1, m):
        re = 1 - math.cos(2 * math.pi * u / m)
        total += math.exp(-2 * math.pi * pairing_scale * re * t * t)
    return total


@dataclass(frozen=True)
class SingularProfile:
    """Measured near-cone deviations against the leading Gaussian model."""

    m: int
    lambda_exp: int
    p: int
    pairing_scale: float
    ts: tuple
    measured: tuple
    model_values: tuple
    rel_sup_error: float

    def residuals(self):
        return tuple(a - b for a, b in zip(self.measured, self.model_values))


def cone_profile_points(model, p, t_values, prec=96):
    """Points at rescaled distances t = sqrt(p) * d(x, cone) in the cone chart."""
    cones = model.cone_charts()
    if not cones:
        raise ValueError("model has no cone point")
    chart = cones[0]
    pts = []
    for t in t_values:
        r = radius_at_distance(model, chart.chart_id, float(t) / math.sqrt(p), prec=prec)
        pts.append(model.point(chart.chart_id, complex(float(r), 0.0)))
    return pts


def measure_deviation(model, p, x, w=None, prec=128, J=1):
    """B_p(x)/p^n minus the smooth expansion through order J (J <= 1)."""
    w = w or UNIT_WEIGHTS
    return remainder_value(model, w, p, x, J, prec)


def deviation_profile(model, p, t_values, w=None, prec=128, pairing_scale=0.5,
                      lambda_exp=None):
    """Sampled deviation profile at rescaled radii plus the Gaussian model."""
    cones = model.cone_charts()
    if not cones:
        raise ValueError("model has no cone point")
    chart = cones[0]
    m = chart.stabilizer
    lam = chart.fiber_exp if lambda_exp is None else lambda_exp
    pts = cone_profile_points(model, p, t_values, prec=min(prec, 96))
    measured = [float(measure_deviation(model, p, x, w=w, prec=prec)) for x in pts]
    model_vals = [singular_model(m, lam, p, t, pairing_scale) for t in t_values]
    peak = max(abs(v) for v in model_vals) or 1.0
    sup_err = max(abs(a - b) for a, b in zip(measured, model_vals)) / peak
    return SingularProfile(
        m=m, lambda_exp=lam, p=p, pairing_scale=float(pairing_scale),
        ts=tuple(float(t) for t in t_values), measured=tuple(measured),
        model_values=tuple(model_vals), rel_sup_error=float(sup_err),
    )


def calibrate_pairing_scale(model, p, t_values, w=None, prec=128, lambda_exp=None):
    """One-time fit of the Gaussian pairing scale against measured deviations.

    Returns (scale, profile at the fitted scale). The scale is meant to be
    frozen after calibrating on a single (m, p) pair and reused everywhere.
    """
    cones = model.cone_charts()
    chart = cones[0]
    m = chart.stabilizer
    lam = chart.fiber_exp if lambda_exp is None else lambda_exp
    pts = cone_profile_points(model, p, t_values, prec=min(prec, 96))
    measured = [float(measure_deviation(model, p, x, w=w, prec=prec)) for x in pts]

    def loss(scale):
        return sum(
            (mv - singular_model(m, lam, p, t, scale)) ** 2
            for t, mv in zip(t_values, measured)
        )

    res = minimize_scalar(loss, bounds=(0.05, 5.0), method="bounded",
                          options={"xatol": 1e-10})
    scale = float(res.x)
    return scale, deviation_profile(model, p, t_values, w=w, prec=prec,
                                    pairing_scale=scale, lambda_exp=lam)


def profile_collapse_gap(profile_a, profile_b):
    """Sup gap between two profiles sampled on the same t grid."""
    if profile_a.ts != profile_b.ts:
        raise ValueError("profiles must share the t grid")
    return max(abs(a - b) for a, b in zip(profile_a.measured, profile_b.measured))


# -- residue-class oscillation -------------------------------------------------------


@dataclass(frozen=True)
class OscillationSpectrum:
    modulus: int
    p_values: tuple
    deviations: tuple
    class_means: dict

    def separation(self):
        means = list(self.class_means.values())
        return max(means) - min(means)


def oscillation_spectrum(model, w, x, p_values, prec=128, J=1):
    """Expansion deviations at x grouped by p mod m (m = local cone order)."""
    chart = model.chart(x.chart_id)
    m = max(chart.stabilizer, 1)
    devs = [float(remainder_value(model, w, p, x, J, prec)) for p in p_values]
    class_means = {}
    for res in range(m):
        vals = [d for p, d in zip(p_values, devs) if p % m == res]
        if vals:
            class_means[res] = sum(vals) / len(vals)
    return OscillationSpectrum(
        modulus=m, p_values=tuple(p_values), deviations=tuple(devs),
        class_means=class_means,
    )


def w_diagnostic(w, l, u, p, eta, lambda_exp=1):
    """|sum_i c_i i^l lam^{u i} eta^{p+i}| at a fixed radial value eta."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if not 1 <= u <= w.m - 1:
        raise ValueError("u must lie in 1..m-1")
    with mp.workprec(96):
        eta = mpf(eta)
        acc = mp.mpc(0)
        for i, c in w.support:
            lam = mp.expjpi(2 * mpf(lambda_exp * u * i) / w.m)
            acc += _fr(c) * mpf(i) ** l * lam * eta ** (p + i)
        return float(abs(acc))


# -- grids ------------------------------------------------------------------------


def remainder_grid(model, p_ref, n_near=10, n_far=10, t_max=3.0, seed=None, prec=96):
    """Grid for remainder sups: cone-anchored near points plus a far spread.

    Near points sit at rescaled distances t in [0, t_max] from each cone
    (scaled by the reference p); far points are log-spread in the covering
    chart. The seed only jitters angles, which the rotation-invariant
    densities never see.
    """
    import random

    from .geometry import reachable_cone_distance

    rng = random.Random(seed)
    pts = []
    for chart in model.cone_charts():
        cap = 0.8 * float(reachable_cone_distance(model, chart.chart_id, prec=prec))
        for k in range(n_near):
            t = t_max * (k + 1) / n_near
            d = min(t / math.sqrt(p_ref), cap)
            r = radius_at_distance(model, chart.chart_id, d, prec=prec)
            ang = rng.uniform(0, 2 * math.pi) if seed is not None else 0.0
            pts.append(model.point(chart.chart_id, float(r) * cmath.exp(1j * ang)))
        pts.append(model.point(chart.chart_id, 0.0))
    cover = model.covering_chart
    for k in range(n_far):
        t = 10.0 ** (-1.0 + 2.4 * k / max(n_far - 1, 1))
        ang = rng.uniform(0, 2 * math.pi) if seed is not None else 0.0
        pts.append(model.point(cover.chart_id, math.sqrt(t) * cmath.exp(1j * ang)))
    return pts
