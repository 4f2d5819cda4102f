import math
import os

import pytest
from mpmath import mp, mpf

from orbergman import bergman as B
from orbergman import geometry as G
from orbergman.weights import WeightSystem


def _brute_teardrop_dimension(m, p):
    return sum(1 for a in range(p + 1) for b in range(p + 1) if a + m * b == p)


def _brute_football_dimension(m, c, p):
    return sum(1 for j in range(p + 1) if (c * p - j) % m == 0)


def test_dimension_projective_line(pline):
    assert B.dimension(pline, 10) == 11
    assert B.dimension(pline, 0) == 1
    doubled = G.make_projective_line(2.0)
    assert B.dimension(doubled, 7) == 15


def test_dimension_teardrop_brute_force(teardrop2):
    td3 = G.make_teardrop(3)
    for p in range(0, 25):
        assert B.dimension(teardrop2, p) == _brute_teardrop_dimension(2, p)
        assert B.dimension(td3, p) == _brute_teardrop_dimension(3, p)
    assert B.dimension(td3, 9) == 4  # floor(9/3)+1


def test_dimension_football_brute_force(football32):
    for p in range(0, 25):
        assert B.dimension(football32, p) == _brute_football_dimension(3, 2, p)


def test_football_equivariance_identity(football32):
    for p in (5, 10, 23):
        for idx in B._entry_indices(football32, p):
            assert B.equivariance_defect(football32, p, idx) == 0
        # neighbours of an invariant exponent are not invariant
        idx0 = B._entry_indices(football32, p)[0]
        if idx0 + 1 <= p:
            assert B.equivariance_defect(football32, p, idx0 + 1) != 0


def test_section_basis_p1_equal_norms(pline):
    basis = B.section_basis(pline, 1)
    assert len(basis.entries) == 2
    n0, n1 = basis.entries[0][1], basis.entries[1][1]
    assert abs(n0 - n1) < mpf(2) ** -100
    assert abs(mp.exp(n0) - mpf(1) / 2) < mpf(2) ** -100
    assert basis.orthogonal


def test_closed_form_vs_quadrature_norms(pline):
    for p in (5, 60, 200):
        closed = B.section_basis(pline, p, prec=128)
        quad = B.quadrature_log_norms(pline, p, prec=128)
        worst = max(abs(a[1] - b[1]) for a, b in zip(closed.entries, quad))
        assert worst < mpf("1e-20"), (p, float(worst))


def test_density_projective_line_exact(pline):
    xs = [pline.point("main", 0.1 + 0.2j), pline.point("main", 2.5),
          pline.point("far", 0.3)]
    for p in (0, 1, 17, 200):
        for x in xs:
            d = B.density(pline, p, x)
            assert abs(d - (p + 1)) / (p + 1) < 1e-30


def test_density_rotation_invariance(teardrop2):
    p = 30
    vals = []
    for ang in (0.0, 1.1, 2.7, 4.9):
        x = teardrop2.point("main", 0.8 * complex(math.cos(ang), math.sin(ang)))
        vals.append(B.density(teardrop2, p, x))
    spread = float(max(vals) - min(vals)) / float(min(vals))
    assert spread < 1e-12


def test_density_deterministic_bits(teardrop2):
    x = teardrop2.point("cone", 0.2)
    a = B.density(teardrop2, 41, x)
    b = B.density(teardrop2, 41, x)
    assert a == b


def test_density_cone_point_alternation(teardrop2):
    xc = teardrop2.point("cone", 0)
    d_even = B.density(teardrop2, 200, xc)
    d_odd = B.density(teardrop2, 201, xc)
    assert d_odd == 0
    assert abs(d_even / 200 - 2) < 0.1


def test_density_chart_consistency(teardrop2):
    p = 24
    x_main = teardrop2.point("main", 1.3)
    x_cone = teardrop2.point("cone", 1.3 ** (-1 / 2))
    a = B.density(teardrop2, p, x_main)
    b = B.density(teardrop2, p, x_cone)
    # limited by the double-precision entry of the transition coordinate
    assert abs(a - b) / a < 1e-13


def test_weighted_density_linear(teardrop2):
    w1 = WeightSystem.from_coeffs(2, {2: 1, 3: 2, 4: 1})
    w_unit = WeightSystem.from_coeffs(2, {0: 1})
    x = teardrop2.point("main", 0.5)
    p = 20
    assert B.weighted_density(teardrop2, w_unit, p, x) == B.density(teardrop2, p, x)
    total = B.weighted_density(teardrop2, w1, p, x)
    parts = sum(c * B.density(teardrop2, p + i, x)
                for i, c in ((2, 1), (3, 2), (4, 1)))
    assert abs(total - parts) < abs(total) * mpf(2) ** -100


def test_weighted_density_closed_form_smooth(pline):
    w = WeightSystem.from_coeffs(1, {0: 1, 1: 1})
    x = pline.point("main", 1.7)
    for p in (10, 100):
        got = B.weighted_density(pline, w, p, x)
        assert abs(got - (2 * p + 3)) / (2 * p + 3) < 1e-28


def test_trace_identity(pline, teardrop2, football32):
    for model in (pline, teardrop2, football32):
        for p in (10, 50):
            tr = B.trace_of_density(model, p)
            dim = B.dimension(model, p)
            assert abs(tr - dim) / dim < 1e-8, (model.kind, p)


def test_quadrature_stability_under_node_doubling(teardrop2):
    for p in (120, 400):
        base = dict(B.quadrature_log_norms(teardrop2, p, prec=128))
        fine = dict(B.quadrature_log_norms(teardrop2, p, prec=128,
                                           n_min=2 * B._default_node_count(teardrop2, p)))
        worst = max(abs(base[i] - fine[i]) for i in base)
        assert worst < 1e-10  # log-scale gap bounds the relative density change


def test_sectionless_power_is_handled():
    # twisted footballs can have no invariant monomials at small p
    fb = G.make_football(5, 2)
    assert B.dimension(fb, 1) == 0
    basis = B.section_basis(fb, 1)
    assert basis.entries == ()
    x = fb.point("north", 0.7)
    assert B.density(fb, 1, x) == 0
    assert B.quotient_oracle_density(fb, 1, x) == 0


def test_trace_identity_higher_cone_order():
    td5 = G.make_teardrop(5)
    tr = B.trace_of_density(td5, 30)
    assert abs(tr - B.dimension(td5, 30)) < 1e-8


def test_basis_raises_when_nodes_cannot_converge(monkeypatch, teardrop2):
    from orbergman.errors import QuadratureNotConverged
    monkeypatch.setattr(B, "_default_node_count", lambda model, p: 8)
    with pytest.raises(QuadratureNotConverged):
        B.section_basis(G.make_teardrop(5), 333)


def test_oracle_matches_direct(football32):
    import random
    rng = random.Random(11)
    for p in (20, 60):
        for _ in range(6):
            r = rng.uniform(0.05, 3.0)
            ang = rng.uniform(0, 2 * math.pi)
            x = football32.point("north", r * complex(math.cos(ang), math.sin(ang)))
            direct = B.density(football32, p, x)
            oracle = B.quotient_oracle_density(football32, p, x)
            assert abs(direct - oracle) / oracle < 1e-8


def test_oracle_degenerate_football_is_smooth_sphere():
    fb1 = G.make_football(1, 1)
    x = fb1.point("north", 0.4)
    for p in (3, 25):
        assert abs(B.quotient_oracle_density(fb1, p, x) - (p + 1)) / (p + 1) < 1e-25
        assert abs(B.density(fb1, p, x) - (p + 1)) / (p + 1) < 1e-20


def test_oracle_requires_football(pline):
    with pytest.raises(ValueError):
        B.quotient_oracle_density(pline, 3, pline.point("main", 0.1))


def test_basis_counts_and_positivity(teardrop2):
    for p in (0, 1, 7, 41):
        basis = B.section_basis(teardrop2, p)
        assert len(basis.entries) == B.dimension(teardrop2, p)
        assert all(mp.isfinite(ln) for _, ln in basis.entries)


def test_kernel_table_and_csv(tmp_path, teardrop2):
    w = WeightSystem.from_coeffs(2, {2: 1, 3: 2, 4: 1})
    pts = [teardrop2.point("main", 0.5), teardrop2.point("cone", 0.3)]
    table = B.build_kernel_table(teardrop2, [4, 8], pts, w=w, prec=96)
    assert len(table.rows) == 4
    assert all(float(r.density) > 0 for r in table.rows)
    path = os.path.join(tmp_path, "kernel.csv")
    B.write_kernel_csv(path, table, ["tool_version=test"])
    lines = open(path).read().splitlines()
    assert lines[0] == "# tool_version=test"
    assert lines[1] == B.KERNEL_CSV_COLUMNS
    assert len(lines) == 2 + 4
    first = lines[2].split(",")
    assert first[0] == "teardrop" and first[1] == "4"
    assert "e" in first[6]  # scientific notation


def test_kernel_csv_infinite_distance(tmp_path, pline):
    table = B.build_kernel_table(pline, [3], [pline.point("main", 0.2)], prec=96)
    path = os.path.join(tmp_path, "k.csv")
    B.write_kernel_csv(path, table)
    row = open(path).read().splitlines()[1].split(",")
    assert row[5] == "inf"
    assert row[7] == "" and row[8] == ""
