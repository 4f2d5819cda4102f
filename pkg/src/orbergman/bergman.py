"""Holomorphic section bases and Bergman densities at extended precision.

Sections of the p-th bundle power are monomials in the covering-chart
coordinate; rotation invariance of every shipped potential makes the Gram
matrix exactly diagonal, so a basis is just a list of exponents with
log-scale squared norms. Norms come from closed-form Beta integrals where
the potential allows it and from certified Gauss-Legendre quadrature
otherwise. Densities are assembled by max-shifted exponential summation in
a fixed entry order, so results are reproducible bit for bit.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpf

from .errors import QuadratureNotConverged
from .geometry import radial_measure_nodes
from .jets import Jet
from .quadrature import bucket_for


def _fr(x):
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


# -- section enumeration -----------------------------------------------------


def _entry_indices(model, p):
    """Canonical section indices for H^0(L^p), ascending."""
    desc = model.descriptor
    kind = desc["kind"]
    if kind == "projective-line":
        top = int(math.floor(p * desc["volume"] + 1e-9))
        return list(range(top + 1))
    if kind == "teardrop":
        return list(range(p // desc["m"] + 1))
    if kind == "football":
        m, c = desc["m"], desc["character"]
        start = (c * p) % m if m > 1 else 0
        return list(range(start, p + 1, m))
    raise ValueError(f"unknown model kind {kind!r}")


def dimension(model, p):
    """Exact dimension of the space of holomorphic sections of L^p."""
    if p < 0:
        raise ValueError("tensor power p must be non-negative")
    return len(_entry_indices(model, p))


def chart_exponent(model, chart_id, p, index):
    """Monomial exponent of a basis entry in the given chart."""
    desc = model.descriptor
    kind = desc["kind"]
    if kind == "projective-line":
        if chart_id == "main":
            return index
        top = p * desc["volume"]
        if abs(top - round(top)) > 1e-9:
            raise ValueError("far-chart representation needs an integer p*volume")
        return int(round(top)) - index
    if kind == "teardrop":
        if chart_id == "main":
            return index
        return p - desc["m"] * index
    if kind == "football":
        return index if chart_id == "north" else p - index
    raise ValueError(f"unknown model kind {kind!r}")


def equivariance_defect(model, p, index):
    """Exponent defect of a football monomial under the twisted group action.

    The generator sends z^j to zeta^(c*p - j) z^j on sections of L^p, so an
    invariant monomial has (c*p - j) = 0 mod m. Returns the defect as an
    exact integer residue; 0 means the entry is invariant.
    """
    desc = model.descriptor
    if desc["kind"] != "football":
        raise ValueError("equivariance defect is defined for football models")
    m, c = desc["m"], desc["character"]
    return (c * p - index) % m


# -- norms ---------------------------------------------------------------------


@dataclass(frozen=True)
class SectionBasis:
    """Orthogonal monomial basis of H^0(L^p) with log-scale squared norms."""

    model_key: str
    p: int
    prec: int
    entries: tuple  # ((index, log_norm_sq), ...) ascending by index
    method: str
    cert_rel_diff: float
    orthogonal: bool = True  # distinct angular degrees force a diagonal Gram

    def log_norm_sq(self, k):
        return self.entries[k][1]

    def indices(self):
        return tuple(i for i, _ in self.entries)


def _closed_form_log_norms(model, p, prec):
    """Beta-integral norms for unperturbed FS-type potentials.

    projective-line volume V: |z^j|^2 = V * B(j+1, pV+1-j);
    football (upstairs volume 1, quotient mass 1/m):
    |z^j|^2 = B(j+1, p-j+1) / m.
    """
    desc = model.descriptor
    kind = desc["kind"]
    idx = _entry_indices(model, p)
    out = []
    with mp.workprec(prec):
        if kind == "projective-line":
            nu = mpf(desc["volume"]) * p
            logv = mp.log(mpf(desc["volume"]))
            for j in idx:
                out.append(logv + mp.loggamma(j + 1) + mp.loggamma(nu + 1 - j)
                           - mp.loggamma(nu + 2))
        elif kind == "football":
            logm = mp.log(mpf(desc["m"]))
            for j in idx:
                out.append(mp.loggamma(j + 1) + mp.loggamma(p - j + 1)
                           - mp.loggamma(p + 2) - logm)
        else:
            raise ValueError(f"no closed-form norms for kind {kind!r}")
    return list(zip(idx, out))


@lru_cache(maxsize=64)
def _node_data(model, n, prec):
    """Per-node (t, weight, phi(t), log t) for the covering chart."""
    ts, ws = radial_measure_nodes(model, n, prec)
    chart = model.covering_chart
    with mp.workprec(prec):
        phis = [chart.potential(Jet.variable(t)).value for t in ts]
        logts = [mp.log(t) for t in ts]
    return tuple(ts), tuple(ws), tuple(phis), tuple(logts)


def _quadrature_norms(model, p, n, prec):
    """Squared norms of all entries from one fixed Gauss-Legendre rule.

    The monomial exponents progress arithmetically, so each node contributes
    a geometric sequence across entries; norms are accumulated with plain
    multiplications (positive terms, no cancellation).
    """
    idx = _entry_indices(model, p)
    if not idx:
        return []
    desc = model.descriptor
    step = desc["m"] if desc["kind"] == "football" else 1
    ts, ws, phis, _ = _node_data(model, n, prec)
    with mp.workprec(prec):
        j0 = idx[0]
        powers = []
        ratios = []
        for t, w, phi in zip(ts, ws, phis):
            powers.append(w * mp.exp(-p * phi + j0 * mp.log(t)))
            ratios.append(t ** step)
        norms = []
        for k in range(len(idx)):
            if k > 0:
                powers = [pw * r for pw, r in zip(powers, ratios)]
            total = mpf(0)
            for pw in powers:
                total += pw
            norms.append(total)
    return list(zip(idx, norms))


def _default_node_count(model, p):
    desc = model.descriptor
    if desc["kind"] == "projective-line":
        base = int(p * desc["volume"] / 2) + 24
    else:
        base = int(0.55 * p) + 32
    return base


@lru_cache(maxsize=None)
def _basis_cached(model, p, prec):
    desc = model.descriptor
    plain = "perturbation" not in desc and "measure" not in desc
    # Footballs always take the quadrature route: their closed-form norms are
    # reserved for the independent quotient oracle.
    if plain and desc["kind"] == "projective-line":
        entries = tuple((i, ln) for i, ln in _closed_form_log_norms(model, p, prec))
        return SectionBasis(model.descriptor_key, p, prec, entries, "beta-closed-form", 0.0)
    if not _entry_indices(model, p):
        return SectionBasis(model.descriptor_key, p, prec, (), "empty", 0.0)
    n = bucket_for(_default_node_count(model, p))
    coarse = _quadrature_norms(model, p, n, prec)
    fine = _quadrature_norms(model, p, 2 * n, prec)
    with mp.workprec(prec):
        rel_tol = mpf(2) ** (16 - prec // 2)
        worst = mpf(0)
        entries = []
        for (i, a), (_, b) in zip(coarse, fine):
            gap = abs(a - b) / abs(b)
            worst = max(worst, gap)
            entries.append((i, mp.log(b)))
        if worst > rel_tol:
            raise QuadratureNotConverged(
                f"norms at {n} vs {2 * n} nodes differ by {float(worst):.3e}"
            )
    return SectionBasis(model.descriptor_key, p, prec, tuple(entries),
                        "gauss-legendre", float(worst))


def section_basis(model, p, prec=128):
    """Orthogonal basis of H^0(L^p) with certified log-scale norms."""
    if p < 0:
        raise ValueError("tensor power p must be non-negative")
    return _basis_cached(model, p, prec)


def quadrature_log_norms(model, p, prec=128, n_min=None):
    """Quadrature-path log norms, for cross-checking closed forms."""
    n = bucket_for(n_min if n_min is not None else _default_node_count(model, p))
    with mp.workprec(prec):
        return [(i, mp.log(v)) for i, v in _quadrature_norms(model, p, n, prec)]


# -- densities -----------------------------------------------------------------


def _max_shift_sum(terms):
    """exp-sum of log-scale terms with the peak factored out; fixed order."""
    finite = [t for t in terms if t is not None]
    if not finite:
        return mpf(0)
    peak = finite[0]
    for t in finite[1:]:
        if t > peak:
            peak = t
    acc = mpf(0)
    for t in finite:
        acc += mp.exp(t - peak)
    return mp.exp(peak) * acc


def density(model, p, x, prec=128, basis=None):
    """Diagonal Bergman density P_p(x, x) with respect to the volume measure.

    Assembled in the chart of x as sum_e |z|^(2 j_e) e^{-p phi} / |s_e|^2
    over the orthogonal basis, in log scale with max-shift summation.
    """
    if basis is None:
        basis = section_basis(model, p, prec)
    chart = model.chart(x.chart_id)
    with mp.workprec(prec):
        t = mpf(abs(complex(x.z))) ** 2
        phi = chart.potential(Jet.variable(t)).value
        logt = mp.log(t) if t > 0 else None
        terms = []
        for i, lognorm in basis.entries:
            j = chart_exponent(model, x.chart_id, p, i)
            if t == 0:
                terms.append(-p * phi - lognorm if j == 0 else None)
            else:
                terms.append(j * logt - p * phi - lognorm)
        return _max_shift_sum(terms)


def weighted_density(model, w, p, x, prec=128):
    """Weighted combination sum_i c_i P_{p+i}(x, x) of Bergman densities."""
    with mp.workprec(prec):
        total = mpf(0)
        for i, c in w.support:
            total += _fr(c) * density(model, p + i, x, prec=prec)
        return total


def quotient_oracle_density(model, p, x, prec=128):
    """Independent density route for footballs via the covering sphere.

    Uses invariant monomials with exact upstairs Beta norms and the quotient
    volume convention (covering-space mass divided by the group order); no
    quadrature is involved, so it cross-checks the direct pipeline.
    """
    if model.descriptor["kind"] != "football":
        raise ValueError("the quotient oracle applies to football models")
    entries = _closed_form_log_norms(model, p, prec)
    chart = model.chart(x.chart_id)
    with mp.workprec(prec):
        t = mpf(abs(complex(x.z))) ** 2
        phi = chart.potential(Jet.variable(t)).value
        logt = mp.log(t) if t > 0 else None
        terms = []
        for i, lognorm in entries:
            j = chart_exponent(model, x.chart_id, p, i)
            if t == 0:
                terms.append(-p * phi - lognorm if j == 0 else None)
            else:
                terms.append(j * logt - p * phi - lognorm)
        return _max_shift_sum(terms)


def trace_of_density(model, p, prec=128, n_min=None, basis=None):
    """Quadrature of the density over the orbifold (trace identity check).

    Deliberately uses a node count off the norm-rule ladder (1.5x the norm
    bucket) so the comparison against the section count is a genuine
    cross-check rather than a quadrature self-identity.
    """
    if basis is None:
        basis = section_basis(model, p, prec)
    n = (3 * bucket_for(n_min if n_min is not None else _default_node_count(model, p))) // 2
    ts, ws = radial_measure_nodes(model, n, prec)
    chart_id = model.covering_chart.chart_id
    with mp.workprec(prec):
        total = mpf(0)
        for t, w in zip(ts, ws):
            pt = model.point(chart_id, mp.sqrt(t))
            total += w * density(model, p, pt, prec=prec, basis=basis)
        return total


# -- kernel tables --------------------------------------------------------------


@dataclass(frozen=True)
class KernelRow:
    p: int
    chart_id: str
    z: complex
    dist_sing: float
    density: object
    weighted: object = None


@dataclass(frozen=True)
class KernelTable:
    """Sampled (weighted) Bergman densities over a (p, point) grid."""

    model_descriptor_key: str
    weight_id: str
    weight_record: object
    p_values: tuple
    rows: tuple


def build_kernel_table(model, p_values, points, w=None, prec=128):
    from .geometry import distance_to_singular

    rows = []
    wid = "" if w is None else f"m{w.m}-" + "-".join(str(i) for i in w.indices())
    for p in p_values:
        for x in points:
            d = distance_to_singular(model, x, prec=min(prec, 96))
            dens = density(model, p, x, prec=prec)
            wdens = None if w is None else weighted_density(model, w, p, x, prec=prec)
            rows.append(KernelRow(p, x.chart_id, complex(x.z), float(d), dens, wdens))
    return KernelTable(
        model_descriptor_key=model.descriptor_key,
        weight_id=wid,
        weight_record=None if w is None else w.to_record(),
        p_values=tuple(p_values),
        rows=tuple(rows),
    )


def _sci(x):
    return "%.16e" % float(x)


KERNEL_CSV_COLUMNS = "model,p,chart,re(z),im(z),dist_sing,density,weighted_density,weight_id"


def write_kernel_csv(path, table, header_lines=()):
    """CSV export with 17 significant digits and a comment header block."""
    model_name = json.loads(table.model_descriptor_key)["kind"]
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(KERNEL_CSV_COLUMNS + "\n")
        for r in table.rows:
            dist = "inf" if math.isinf(r.dist_sing) else _sci(r.dist_sing)
            weighted = "" if r.weighted is None else _sci(r.weighted)
            wid = table.weight_id if r.weighted is not None else ""
            fh.write(
                f"{model_name},{r.p},{r.chart_id},{_sci(r.z.real)},{_sci(r.z.imag)},"
                f"{dist},{_sci(r.density)},{weighted},{wid}\n"
            )
