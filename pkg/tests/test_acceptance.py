"""Acceptance suite: one test per criterion, each printing a verdict line.

Tolerances are fixed here, not tuned at runtime. The heavy sweeps (decay
slopes, cone profiles) share session fixtures so the whole suite stays
within a desk-scale budget.
"""

import math
import os
import random
from fractions import Fraction

import pytest

from orbergman import asymptotics as A
from orbergman import bergman as B
from orbergman import geometry as G
from orbergman.cli import run as cli_run
from orbergman.weights import (
    WeightSystem,
    check_admissible,
    convolve,
    root_order_at_one,
    solve_weights,
)

SEED = 20260810
W234 = WeightSystem.from_coeffs(2, {2: 1, 3: 2, 4: 1})
UNIT = WeightSystem.from_coeffs(1, {0: 1})


def _verdict(num, ok, detail):
    line = f"criterion {num:02d} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


# -- shared heavy computations ---------------------------------------------------


@pytest.fixture(scope="session")
def decay_setup(teardrop2):
    ps = A.geometric_p_values(50, 400, 10)
    grid = A.remainder_grid(teardrop2, p_ref=200, n_near=8, n_far=8, seed=SEED)
    sups = [(p, A.sup_remainder(teardrop2, W234, p, grid, N=1)) for p in ps]
    dsups = [(p, A.derivative_remainder(teardrop2, W234, p, grid, l=1)) for p in ps]
    return {"ps": ps, "grid": grid, "sups": sups, "dsups": dsups}


@pytest.fixture(scope="session")
def profile_setup(teardrop2):
    ts = [0.15 * k for k in range(21)]  # t in [0, 3]
    scale, prof100 = A.calibrate_pairing_scale(teardrop2, 100, ts)
    prof400 = A.deviation_profile(teardrop2, 400, ts, pairing_scale=scale)
    return {"ts": ts, "scale": scale, "p100": prof100, "p400": prof400}


# -- criteria ----------------------------------------------------------------------


def test_criterion_01_exact_smooth_baseline(pline):
    worst = 0.0
    points = [pline.point("main", 0.15 * (k + 1)) for k in range(20)]
    for p in range(0, 201):
        basis = B.section_basis(pline, p)
        for x in points:
            d = B.density(pline, p, x, basis=basis)
            worst = max(worst, abs(float(d) - (p + 1)) / (p + 1))
    x0 = points[3]
    ps = A.geometric_p_values(30, 200, 12)
    fit = A.fit_expansion([(p, float(B.density(pline, p, x0) / p)) for p in ps], 1)
    ok = worst < 1e-10 and abs(fit.b0 - 1) < 1e-6 and abs(fit.b1 - 1) < 1e-3
    _verdict(1, ok,
             f"density rel err {worst:.2e} < 1e-10; fit b0={fit.b0:.8f} (tol 1e-6), "
             f"b1={fit.b1:.6f} (tol 1e-3)")


def test_criterion_02_weight_admissibility_exact():
    w12 = WeightSystem.from_coeffs(2, {1: 1, 2: 1})
    ok = (
        check_admissible(W234, 1)
        and check_admissible(w12, 0)
        and not check_admissible(w12, 1)       # fails exactly at k = 1
        and root_order_at_one(W234, 0, 1) == 2
        and root_order_at_one(W234, 1, 1) == 1
    )
    _verdict(2, ok, "K=1 exact pass for {c2,c3=2,c4}; {c1,c2} fails at k=1; "
                    "root orders (l=0,1) = (2,1)")


def _random_system(rng):
    m = rng.randint(2, 5)
    size = rng.randint(1, 10)
    indices = rng.sample(range(0, 13), size)
    return WeightSystem.from_coeffs(
        m, {i: Fraction(rng.randint(1, 9), rng.randint(1, 9)) for i in indices})


def test_criterion_03_equivalence_property():
    rng = random.Random(SEED)
    failures = 0
    for _ in range(200):
        w = _random_system(rng)
        top = w.max_index() + 1
        orders = {(l, u): root_order_at_one(w, l, u)
                  for l in range(top + 1) for u in range(1, w.m)}
        for K in range(0, top + 1):
            adm = check_admissible(w, K)
            via = all(orders[(l, u)] >= K - l + 1
                      for l in range(K + 1) for u in range(1, w.m))
            if adm != via:
                failures += 1
    _verdict(3, failures == 0, f"200 random systems, {failures} mismatches")


def test_criterion_04_convolution_law():
    rng = random.Random(SEED + 1)
    failures = 0
    for _ in range(100):
        m = rng.randint(2, 4)
        k1, k2 = rng.randint(0, 2), rng.randint(0, 2)
        lo1, lo2 = rng.randint(0, 3), rng.randint(0, 3)
        w1 = solve_weights(m, k1, (lo1, lo1 + (m - 1) * (k1 + 1) + rng.randint(0, 2)))
        w2 = solve_weights(m, k2, (lo2, lo2 + (m - 1) * (k2 + 1) + rng.randint(0, 2)))
        if convolve(w1, w2).order_K < w1.order_K + w2.order_K + 1:
            failures += 1
    _verdict(4, failures == 0, f"100 admissible pairs, {failures} violations")


def test_criterion_05_trace_identity(pline, teardrop2, football32):
    models = [pline, G.make_projective_line(2.0), teardrop2,
              G.make_teardrop(3), football32]
    worst = 0.0
    for model in models:
        for p in (10, 50, 100, 200):
            tr = B.trace_of_density(model, p)
            dim = B.dimension(model, p)
            worst = max(worst, float(abs(tr - dim)) / dim)
    _verdict(5, worst < 1e-8, f"5 models x 4 powers, worst relative gap {worst:.2e}")


def test_criterion_06_oracle_equivalence(football32):
    rng = random.Random(SEED + 2)
    worst = 0.0
    for p in (20, 100):
        for _ in range(50):
            r = rng.uniform(0.05, 4.0)
            ang = rng.uniform(0, 2 * math.pi)
            x = football32.point("north", r * complex(math.cos(ang), math.sin(ang)))
            direct = B.density(football32, p, x)
            oracle = B.quotient_oracle_density(football32, p, x)
            worst = max(worst, float(abs(direct - oracle) / oracle))
    _verdict(6, worst < 1e-8, f"50 points x p in (20,100), worst rel gap {worst:.2e}")


def test_criterion_07_weighted_remainder_decay(decay_setup):
    sf = A.decay_slope(decay_setup["sups"])
    ok = -2.3 <= sf.slope <= -1.7
    _verdict(7, ok, f"admissible order-1 sup-remainder slope {sf.slope:.4f} in [-2.3, -1.7]")


def test_criterion_08_necessity_of_balance(teardrop2):
    xc = teardrop2.point("cone", 0)
    tail = A.oscillation_spectrum(teardrop2, UNIT, xc, list(range(389, 401)))
    sep = tail.separation()
    ps = A.geometric_p_values(50, 400, 10)
    sups = [(p, abs(float(A.remainder_value(teardrop2, UNIT, p, xc, 1)))) for p in ps]
    sf = A.decay_slope(sups)
    ok = sep >= 0.5 and -0.2 <= sf.slope <= 0.2
    _verdict(8, ok, f"class separation {sep:.3f} >= 0.5 near p=400; "
                    f"slope {sf.slope:.4f} in [-0.2, 0.2]")


def test_criterion_09_singular_gaussian_profile(profile_setup):
    scale = profile_setup["scale"]
    err400 = profile_setup["p400"].rel_sup_error
    gap = A.profile_collapse_gap(profile_setup["p100"], profile_setup["p400"])
    envelope = 1.0 / math.sqrt(100)
    ok = err400 <= 0.10 and gap <= envelope
    _verdict(9, ok, f"pairing scale {scale:.4f} (calibrated at p=100); p=400 profile "
                    f"error {err400:.4f} <= 0.10; collapse gap {gap:.4f} <= {envelope:.2f}")


def test_criterion_10_general_metric_coefficients(pline):
    model = G.perturb_metric(pline, "metric-only", G.BumpSpec("invpow", 0.12, power=2))
    w = WeightSystem.from_coeffs(1, {0: 1, 1: 1})
    x = model.point("main", 0.0)
    pred0 = float(A.predicted_b(model, w, x, 0))
    pred1 = float(A.predicted_b(model, w, x, 1))
    ps = A.geometric_p_values(30, 400, 12)
    samples = [(p, float(B.weighted_density(model, w, p, x) / p)) for p in ps]
    fit = A.fit_expansion(samples, 2)
    gap0 = abs(fit.b0 - pred0) / abs(pred0)
    gap1 = abs(fit.b1 - pred1) / abs(pred1)
    ok = gap0 <= 0.005 and gap1 <= 0.02
    _verdict(10, ok, f"volume-ratio b0 gap {gap0:.2e} <= 0.5%; "
                     f"corrected b1 gap {gap1:.2e} <= 2%")


def test_criterion_11_derivative_remainder(decay_setup):
    sf = A.decay_slope(decay_setup["dsups"])
    ok = sf.slope <= -1.5
    _verdict(11, ok, f"l=1 finite-difference remainder slope {sf.slope:.4f} <= -1.5")


def test_criterion_12_reproducibility(tmp_path):
    base = {
        "kind": "kernel",
        "model": {"kind": "teardrop", "m": 2},
        "p_values": [10, 20],
        "weights": W234.to_record(),
        "precision_bits": 96,
        "seed": SEED,
        "grid": {"n_near": 5, "n_far": 5, "p_ref": 50},
        "figures": False,
    }
    blobs = []
    for threads in (1, 8):
        out = str(tmp_path / f"repro-{threads}")
        status, _ = cli_run(dict(base, out=out, threads=threads))
        assert status == 0
        with open(os.path.join(out, "kernel.csv"), "rb") as fh:
            blobs.append(fh.read())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    _verdict(12, ok, f"kernel.csv identical under 1 and 8 threads ({len(blobs[0])} bytes)")
