"""Built-in model orbifolds with prequantum data.

Every shipped model is a one-dimensional Kahler orbifold described by two
radial charts (coordinate z, radial variable s = |z|^2) carrying a local
potential phi with omega = (i/2pi) d d-bar phi. Section weights use
e^{-p phi}; the induced metric is the conformal factor (s phi')'(s)/pi.
Models are immutable; every evaluator is a pure function of (model, point).
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp, mpf

from .errors import FiberActionNotFaithful, MetricNotPositive
from .jets import Jet, jet_exp, jet_log
from .quadrature import gauss_legendre_01

CONE_SMOOTHING = Fraction(1, 2)  # kappa in the cone-capped potential family


# -- radial bumps ------------------------------------------------------------


@dataclass(frozen=True)
class BumpSpec:
    """S1-invariant radial bump, defined on the main chart variable t.

    kind "invpow": amplitude * (1+t)^(-power); transforms exactly to other
    charts. kind "gauss": amplitude * exp(-((t-center)/width)^2); flat at
    the opposite chart center.
    """

    kind: str
    amplitude: float
    power: int = 2
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("invpow", "gauss"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.kind == "invpow" and self.power < 1:
            raise ValueError("invpow bump needs power >= 1")
        if self.kind == "gauss" and self.width <= 0:
            raise ValueError("gauss bump needs positive width")

    def main_jet(self, x):
        if self.kind == "invpow":
            return (x + 1) ** (-self.power) * self.amplitude
        arg = (x - self.center) * (mpf(1) / self.width)
        return jet_exp(-(arg * arg)) * self.amplitude

    def other_jet(self, x, mu):
        """Jet in an opposite chart where t_main = s^(-mu)."""
        if self.kind == "invpow":
            # A (1 + s^-mu)^-q = A s^(mu q) (1 + s^mu)^-q, smooth through s=0.
            return x ** (mu * self.power) * (x ** mu + 1) ** (-self.power) * self.amplitude
        if x.value == 0:
            return Jet.constant(0)  # gauss bumps vanish to all orders at t = infinity
        return self.main_jet(x ** (-mu))

    def to_descriptor(self):
        d = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind == "invpow":
            d["power"] = self.power
        else:
            d["center"] = self.center
            d["width"] = self.width
        return d

    @classmethod
    def from_descriptor(cls, d):
        return cls(**d)


# -- charts and models -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Chart:
    """One radial chart: potential and (optional) measure density closures.

    mu is the transition exponent to the covering chart (t_main = s^-mu);
    the covering chart itself has mu = 0. stabilizer/fiber_exp describe the
    cyclic group at the chart center and its action on the L-fiber.
    """

    chart_id: str
    stabilizer: int
    fiber_exp: int
    radius: float
    mu: int
    potential: object
    log_measure: object = None  # psi with dv = e^{2 psi} * (omega measure)


@dataclass(frozen=True, eq=False)
class PointRef:
    """A point given by chart coordinates, plus the normal-direction flag."""

    chart_id: str
    z: complex
    at_cone_normal: bool = False


@dataclass(frozen=True, eq=False)
class OrbifoldModel:
    kind: str
    n: int
    charts: tuple
    volume: float
    quotient_order: int
    descriptor_key: str
    metric_only: bool = False

    def __hash__(self):
        return hash(self.descriptor_key)

    def __eq__(self, other):
        return isinstance(other, OrbifoldModel) and self.descriptor_key == other.descriptor_key

    @property
    def descriptor(self):
        return json.loads(self.descriptor_key)

    def chart(self, chart_id):
        for c in self.charts:
            if c.chart_id == chart_id:
                return c
        raise KeyError(f"no chart {chart_id!r} in model {self.kind}")

    @property
    def covering_chart(self):
        return self.charts[0]

    def cone_charts(self):
        return [c for c in self.charts if c.stabilizer > 1]

    def max_stabilizer(self):
        return max(c.stabilizer for c in self.charts)

    def point(self, chart_id, z):
        chart = self.chart(chart_id)
        z = complex(z)
        if abs(z) > chart.radius:
            raise ValueError(f"|z| = {abs(z)} outside chart {chart_id!r} radius {chart.radius}")
        return PointRef(chart_id, z, at_cone_normal=chart.stabilizer > 1)


def _potential_with_bumps(base, bumps, mu):
    """Compose a chart potential with main-chart bumps (mu = chart exponent)."""
    if not bumps:
        return base

    def pot(x):
        acc = base(x)
        for b in bumps:
            acc = acc + (b.main_jet(x) if mu == 0 else b.other_jet(x, mu))
        return acc
    return pot


def _measure_from_bumps(bumps, mu):
    if not bumps:
        return None

    def psi(x):
        acc = Jet.constant(0)
        for b in bumps:
            acc = acc + (b.main_jet(x) if mu == 0 else b.other_jet(x, mu))
        return acc
    return psi


def _fs_potential(volume):
    v = mpf(volume)

    def pot(x):
        return jet_log(x + 1) * v
    return pot


def _teardrop_main_potential(m):
    kappa = CONE_SMOOTHING

    def pot(x):
        g = x + 1
        return jet_log(g) / m + g ** Fraction(-1, m) * kappa
    return pot


def _teardrop_cone_potential(m):
    kappa = CONE_SMOOTHING

    def pot(x):
        g = x ** m + 1
        return jet_log(g) / m + x * g ** Fraction(-1, m) * kappa
    return pot


def _build(kind, base_params, charts, volume, quotient_order,
           pair_bumps=(), measure_bumps=()):
    desc = dict(base_params)
    desc["kind"] = kind
    if pair_bumps:
        desc["perturbation"] = [b.to_descriptor() for b in pair_bumps]
    if measure_bumps:
        desc["measure"] = [b.to_descriptor() for b in measure_bumps]
    key = json.dumps(desc, sort_keys=True)
    model = OrbifoldModel(
        kind=kind,
        n=1,
        charts=tuple(charts),
        volume=volume,
        quotient_order=quotient_order,
        descriptor_key=key,
        metric_only=bool(measure_bumps),
    )
    _validate_positivity(model)
    return model


def _assemble_charts(kind, params, pair_bumps, measure_bumps):
    """Chart list for a model kind; bumps are composed into each chart."""
    if kind == "projective-line":
        volume = params["volume"]
        base = _fs_potential(volume)
        spec = [("main", 1, 0, math.inf, 0, base), ("far", 1, 0, 64.0, 1, base)]
        total, quot = float(volume), 1
    elif kind == "teardrop":
        m = params["m"]
        spec = [
            ("main", 1, 0, math.inf, 0, _teardrop_main_potential(m)),
            ("cone", m, 1, 8.0, m, _teardrop_cone_potential(m)),
        ]
        total, quot = 1.0 / m, 1
    elif kind == "football":
        m, c = params["m"], params["character"]
        base = _fs_potential(1)
        spec = [
            ("north", m, c % m, math.inf, 0, base),
            ("south", m, (1 - c) % m, 64.0, 1, base),
        ]
        total, quot = 1.0 / m, m
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    charts = [
        Chart(cid, stab, fexp, radius, mu,
              potential=_potential_with_bumps(pot, pair_bumps, mu),
              log_measure=_measure_from_bumps(measure_bumps, mu))
        for cid, stab, fexp, radius, mu, pot in spec
    ]
    return charts, total, quot


def _make(kind, params, pair_bumps=(), measure_bumps=()):
    charts, volume, quot = _assemble_charts(kind, params, pair_bumps, measure_bumps)
    return _build(kind, params, charts, volume, quot, pair_bumps, measure_bumps)


def make_projective_line(total_volume=1.0):
    """Round sphere model: FS-type potential scaled to the requested volume."""
    v = float(total_volume)
    if v <= 0:
        raise ValueError("total_volume must be positive")
    return _make("projective-line", {"volume": v})


def make_teardrop(m):
    """Weighted projective line with a single cone point of order m."""
    m = int(m)
    if m < 2:
        raise ValueError("teardrop needs m >= 2")
    return _make("teardrop", {"m": m})


def make_football(m, character):
    """Global quotient of the sphere by a cyclic rotation of order m.

    The linearization character fixes the fiber action at the two poles
    (exponents c and 1-c); both must be coprime to m, otherwise the bundle
    is not proper. m = 1 is allowed as the degenerate smooth case used by
    the equivariant oracle tests.
    """
    m, c = int(m), int(character)
    if m < 1:
        raise ValueError("football needs m >= 1")
    if math.gcd(c % m if m > 1 else 1, m) != 1 or math.gcd((c - 1) % m if m > 1 else 1, m) != 1:
        raise FiberActionNotFaithful(
            f"character {c} gives a non-primitive fiber action for m = {m}"
        )
    return _make("football", {"m": m, "character": c})


def perturb_metric(model, mode, bump):
    """New model with a perturbed potential pair or an independent metric.

    mode "prequantum-pair" adds the bump to the potential (omega and h^L
    move together, so the curvature identity is preserved by construction);
    mode "metric-only" keeps omega and h^L and installs g^TX = e^{2 psi}
    g_omega with psi the bump, which only changes the volume measure.
    """
    if isinstance(bump, dict):
        bump = BumpSpec.from_descriptor(bump)
    if mode not in ("prequantum-pair", "metric-only"):
        raise ValueError(f"unknown perturbation mode {mode!r}")
    if bump.amplitude == 0:
        return model
    desc = model.descriptor
    pair = [BumpSpec.from_descriptor(d) for d in desc.get("perturbation", [])]
    meas = [BumpSpec.from_descriptor(d) for d in desc.get("measure", [])]
    if mode == "prequantum-pair":
        pair = pair + [bump]
    else:
        meas = meas + [bump]
    params = {k: v for k, v in desc.items() if k not in ("kind", "perturbation", "measure")}
    return _make(desc["kind"], params, tuple(pair), tuple(meas))


def model_from_descriptor(desc):
    """Deterministic reconstruction from a serialized model descriptor."""
    if isinstance(desc, str):
        desc = json.loads(desc)
    params = {k: v for k, v in desc.items() if k not in ("kind", "perturbation", "measure")}
    pair = tuple(BumpSpec.from_descriptor(d) for d in desc.get("perturbation", []))
    meas = tuple(BumpSpec.from_descriptor(d) for d in desc.get("measure", []))
    return _make(desc["kind"], params, pair, meas)


# -- pointwise evaluators ----------------------------------------------------


def _phi_jet(chart, s):
    return chart.potential(Jet.variable(s))


def kahler_density_taylor(chart, s):
    """Taylor coefficients (order 2) of D(s) = (s phi')'(s) = phi_{z zbar}."""
    a = _phi_jet(chart, s).coeffs
    b = [(k + 1) * a[k + 1] for k in range(4)]      # phi'
    c = [(k + 1) * b[k + 1] for k in range(3)]      # phi''
    s0 = mpf(s)
    return [b[k] + s0 * c[k] + (c[k - 1] if k >= 1 else mpf(0)) for k in range(3)]


def kahler_density(chart, s):
    return kahler_density_taylor(chart, s)[0]


def _point_radial(model, x):
    chart = model.chart(x.chart_id)
    z = complex(x.z)
    return chart, mpf(abs(z)) ** 2


def _scalar_curvature_omega(chart, s):
    d0, d1, d2 = kahler_density_taylor(chart, s)
    l1 = d1 / d0
    l2 = d2 / d0 - l1 * l1 / 2
    return -4 * mp.pi / d0 * (l1 + 2 * mpf(s) * l2)


def _radial_fn_flux(chart, fn, s):
    """(s f')'(s) for a radial closure fn, via jets."""
    a = fn(Jet.variable(s)).coeffs
    b = [(k + 1) * a[k + 1] for k in range(2)]
    c0 = 2 * a[2]
    return b[0] + mpf(s) * c0


def bochner_laplacian(model, x, fn):
    """Non-negative Laplacian of the omega-metric applied to a radial closure."""
    chart, s = _point_radial(model, x)
    d0 = kahler_density(chart, s)
    return -4 * mp.pi / d0 * _radial_fn_flux(chart, fn, s)


def scalar_curvature(model, x, of_reference=False, prec=96):
    """Scalar curvature at x (units 1/area).

    For metric-only models the default is the curvature of the independent
    metric g^TX; of_reference=True returns the curvature of the omega
    metric instead.
    """
    with mp.workprec(prec):
        chart, s = _point_radial(model, x)
        r_omega = _scalar_curvature_omega(chart, s)
        if of_reference or not model.metric_only:
            return r_omega
        psi = chart.log_measure
        psi0 = psi(Jet.variable(s)).value
        d0 = kahler_density(chart, s)
        lap_psi = -4 * mp.pi / d0 * _radial_fn_flux(chart, psi, s)
        return mp.exp(-2 * psi0) * (r_omega + 2 * lap_psi)


def volume_ratio_and_laplacian(model, x, prec=96):
    """(omega^n/Theta^n, Delta_omega log(omega^n/Theta^n)) at x."""
    with mp.workprec(prec):
        chart, s = _point_radial(model, x)
        if not model.metric_only:
            return mpf(1), mpf(0)
        psi = chart.log_measure
        psi0 = psi(Jet.variable(s)).value
        d0 = kahler_density(chart, s)
        lap_psi = -4 * mp.pi / d0 * _radial_fn_flux(chart, psi, s)
        return mp.exp(-2 * psi0), -2 * lap_psi


def log_measure_density(chart, s):
    """psi(s) with dv = e^{2 psi} d(omega measure); zero when not perturbed."""
    if chart.log_measure is None:
        return mpf(0)
    return chart.log_measure(Jet.variable(s)).value


def _radial_speed(chart, r):
    # ds = sqrt(sigma) |dz|, sigma = D/pi
    return mp.sqrt(kahler_density(chart, mpf(r) ** 2) / mp.pi)


def _radial_segment(chart, r_lo, r_hi, prec, n=64):
    """Geodesic length of the radial segment [r_lo, r_hi] in one chart."""
    r_lo, r_hi = mpf(r_lo), mpf(r_hi)
    if r_hi <= r_lo:
        return mpf(0)
    xs, ws = gauss_legendre_01(n, prec)
    span = r_hi - r_lo
    total = mpf(0)
    for x, w in zip(xs, ws):
        total += w * _radial_speed(chart, r_lo + span * x)
    return span * total


def _other_chart(model, chart):
    for c in model.charts:
        if c.chart_id != chart.chart_id:
            return c
    raise KeyError("model has a single chart")


def _radius_in_chart(model, x, target):
    """Radius of x expressed in the target chart (mpf, possibly inf).

    The two charts of every model are radius-inverses through the covering
    chart: a non-covering chart with exponent mu has |z_cov| = rho^(-mu).
    """
    src = model.chart(x.chart_id)
    r = mpf(abs(complex(x.z)))
    if src.chart_id == target.chart_id:
        return r
    if src.mu == 0:
        r_cov = r
    else:
        r_cov = mp.inf if r == 0 else r ** mpf(-src.mu)
    if target.mu == 0:
        return r_cov
    if r_cov == 0:
        return mp.inf
    if r_cov == mp.inf:
        return mpf(0)
    return r_cov ** (mpf(-1) / target.mu)


def distance_to_singular(model, x, prec=96, n=64):
    """Geodesic distance from x to the singular set; inf for smooth models.

    Radial curves are geodesics for these rotation-invariant metrics, so the
    distance to a cone center is a radial length, split across the two
    charts when the point lives past the chart overlap circle |z| = 1.
    """
    cones = model.cone_charts()
    if not cones:
        return mp.inf
    with mp.workprec(prec):
        dists = []
        for cone in cones:
            rho = _radius_in_chart(model, x, cone)
            if rho <= 1:
                dists.append(_radial_segment(cone, 0, rho, prec, n))
            else:
                other = _other_chart(model, cone)
                r_other = _radius_in_chart(model, x, other)
                dists.append(
                    _radial_segment(cone, 0, 1, prec, n)
                    + _radial_segment(other, r_other, 1, prec, n)
                )
        return min(dists)


def reachable_cone_distance(model, chart_id, prec=96):
    """Radial length from the chart center to the usable chart radius."""
    chart = model.chart(chart_id)
    with mp.workprec(prec):
        hi = mpf(chart.radius) / 2 if math.isfinite(chart.radius) else mpf(8)
        return _radial_segment(chart, 0, hi, prec)


def radius_at_distance(model, chart_id, dist, prec=96):
    """Invert the radial distance function of a chart around its center.

    Newton iteration on the monotone map r -> radial length of [0, r]
    (derivative = the radial speed), with a bisection fallback bracket.
    """
    chart = model.chart(chart_id)
    with mp.workprec(prec):
        dist = mpf(dist)
        if dist == 0:
            return mpf(0)
        hi = mpf(chart.radius) / 2 if math.isfinite(chart.radius) else mpf(8)
        if _radial_segment(chart, 0, hi, prec) < dist:
            raise ValueError("requested distance outside the chart")
        lo = mpf(0)
        r = min(dist / _radial_speed(chart, 0), hi)
        for _ in range(60):
            err = _radial_segment(chart, 0, r, prec, n=32) - dist
            if err > 0:
                hi = r
            else:
                lo = r
            if abs(err) < mpf(10) ** -24 * max(dist, mpf(1)):
                break
            step = err / _radial_speed(chart, r)
            r = r - step
            if not lo < r < hi:
                r = (lo + hi) / 2
        return r


# -- integration nodes -------------------------------------------------------


def radial_measure_nodes(model, n, prec, with_measure_density=True):
    """Nodes (t_i, w_i) so that int_X f dv ~ sum w_i f(t_i) for radial f.

    t is the covering-chart squared radius; the weights include the Kahler
    density, the quotient factor, and (optionally) the independent-metric
    density e^{2 psi}.
    """
    chart = model.covering_chart
    m_sub = model.descriptor.get("m", 1) if model.kind == "teardrop" else 1
    xs, ws = gauss_legendre_01(n, prec)
    ts, weights = [], []
    with mp.workprec(prec):
        for y, w in zip(xs, ws):
            if model.kind == "teardrop":
                t = y ** (-m_sub) - 1
                jac = m_sub * y ** (-m_sub - 1)
            else:
                t = (1 - y) / y
                jac = y ** -2
            d = kahler_density(chart, t)
            wt = w * jac * d / model.quotient_order
            if with_measure_density and chart.log_measure is not None:
                wt *= mp.exp(2 * chart.log_measure(Jet.variable(t)).value)
            ts.append(t)
            weights.append(wt)
    return ts, weights


# -- validation ---------------------------------------------------------------


@dataclass
class ValidationReport:
    max_prequantum_residual: float
    min_density: float
    grid_points: int


def _validation_radii(chart, count):
    radii = []
    for k in range(count):
        y = (k + 1) / (count + 1)
        if chart.mu == 0:
            radii.append(math.sqrt((1 - y) / y))
        else:
            radii.append(math.sqrt(2.5 * y))
    if chart.stabilizer > 1 or chart.mu > 0:
        radii.append(0.0)
    return radii


def _validate_positivity(model, count=24):
    with mp.workprec(96):
        for chart in model.charts:
            for r in _validation_radii(chart, count):
                d = kahler_density(chart, mpf(r) ** 2)
                if d <= 0:
                    raise MetricNotPositive(
                        f"Kahler density {float(d):.3e} at |z|={r:.4f} in chart "
                        f"{chart.chart_id!r}"
                    )


def validate_model(model, grid_points=1000, prec=192, fd_step_bits=48):
    """Finite-difference check that the curvature of h^L reproduces omega.

    Compares the flat Laplacian of the chart potential (5-point stencil at
    step 2^-fd_step_bits) against the analytic Kahler density at grid
    points spread over every chart. Also reports the minimal density seen.
    """
    angles = (0.0, 2.1)
    per_chart = max(grid_points // (len(angles) * len(model.charts)), 8)
    max_resid = mpf(0)
    min_density = mp.inf
    count = 0
    with mp.workprec(prec):
        h = mpf(2) ** (-fd_step_bits)
        for chart in model.charts:
            def phi(xx, yy):
                return chart.potential(Jet.variable(xx * xx + yy * yy)).value

            for r in _validation_radii(chart, per_chart):
                for ang in angles:
                    x0 = mpf(r) * mp.cos(ang)
                    y0 = mpf(r) * mp.sin(ang)
                    lap = (phi(x0 + h, y0) + phi(x0 - h, y0) + phi(x0, y0 + h)
                           + phi(x0, y0 - h) - 4 * phi(x0, y0)) / (h * h)
                    analytic = kahler_density(chart, mpf(r) ** 2)
                    resid = abs(lap / 4 - analytic) / max(abs(analytic), mpf(1))
                    max_resid = max(max_resid, resid)
                    min_density = min(min_density, analytic)
                    count += 1
    return ValidationReport(
        max_prequantum_residual=float(max_resid),
        min_density=float(min_density),
        grid_points=count,
    )
