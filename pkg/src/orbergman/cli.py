"""Batch experiment runner.

Subcommands wire JSON configs to the library modules, write CSV/JSON
artifacts (optionally with rendered figures), print one verdict line per
check, and exit 0 (all checks passed), 1 (a check failed) or 2 (bad
configuration or runtime error). Identical configs produce bit-identical
delimited output; figures are a rendering convenience on top.
"""

import argparse
import cmath
import hashlib
import json
import math
import os
import random
import sys

from mpmath import mp

from . import __version__
from .bergman import (
    build_kernel_table,
    density,
    dimension,
    quotient_oracle_density,
    trace_of_density,
    weighted_density,
    write_kernel_csv,
)
from .errors import ConfigInvalid, DegenerateData, OrbergmanError
from .geometry import model_from_descriptor
from .weights import WeightSystem, check_admissible, root_order_at_one, solve_weights
from . import asymptotics as asy

EXPERIMENT_KINDS = (
    "solve-weights", "check-weights", "kernel", "expand", "remainder",
    "singular-profile", "oracle-compare", "list-models",
)


_RUNTIME_KEYS = ("threads", "out", "figures")  # excluded: they cannot change results


def config_hash(config):
    semantic = {k: v for k, v in config.items() if k not in _RUNTIME_KEYS}
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(config):
    return {
        "tool": "orbergman",
        "version": __version__,
        "config_hash": config_hash(config),
        "precision_bits": config.get("precision_bits", 128),
        "seed": config.get("seed"),
        "threads": config.get("threads", 1),
    }


def _header_lines(config):
    m = _meta(config)
    return [
        f"tool_version={m['version']}",
        f"config_hash={m['config_hash']}",
        f"precision_bits={m['precision_bits']}",
    ]


class Checks:
    def __init__(self):
        self.items = []

    def record(self, name, passed, detail=""):
        self.items.append({"name": name, "passed": bool(passed), "detail": detail})
        tag = "PASS" if passed else "FAIL"
        print(f"[{tag}] {name}" + (f": {detail}" if detail else ""))

    @property
    def all_passed(self):
        return all(c["passed"] for c in self.items)


def _require(config, *keys):
    for key in keys:
        if key not in config:
            raise ConfigInvalid(f"missing required config field {key!r}")


def _model_from(config):
    _require(config, "model")
    try:
        return model_from_descriptor(config["model"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(f"bad model descriptor: {exc}") from exc


def _weights_from(config, default_unit=False):
    record = config.get("weights")
    if record is None:
        if default_unit:
            return asy.UNIT_WEIGHTS
        raise ConfigInvalid("missing required config field 'weights'")
    if isinstance(record, str):
        with open(record) as fh:
            record = json.load(fh)
        if "weights" in record:
            record = record["weights"]
    try:
        return WeightSystem.from_record(record)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigInvalid(f"bad weight record: {exc}") from exc


def _p_values_from(config, key="p_values", default_model=None):
    if key in config:
        ps = [int(p) for p in config[key]]
    elif "p_window" in config:
        lo, hi = config["p_window"]
        ps = asy.geometric_p_values(int(lo), int(hi), int(config.get("p_count", 12)))
    elif default_model is not None:
        # default fit window: below ~10m the residue-class structure dominates
        lo = max(30, 10 * default_model.max_stabilizer())
        ps = asy.geometric_p_values(lo, 400, int(config.get("p_count", 12)))
    else:
        raise ConfigInvalid("config needs 'p_values' or 'p_window'")
    if not ps:
        raise ConfigInvalid("empty p range")
    if any(p < 0 for p in ps):
        raise ConfigInvalid("tensor powers must be non-negative")
    return ps


def _point_from(config, model, key="point"):
    spec = config.get(key)
    if spec is None:
        return model.point(model.covering_chart.chart_id, 0.6)
    try:
        return model.point(spec["chart"], complex(spec["re"], spec.get("im", 0.0)))
    except (KeyError, ValueError) as exc:
        raise ConfigInvalid(f"bad point spec: {exc}") from exc


def _grid_from(config, model, prec):
    g = config.get("grid", {})
    return asy.remainder_grid(
        model,
        p_ref=int(g.get("p_ref", 200)),
        n_near=int(g.get("n_near", 8)),
        n_far=int(g.get("n_far", 8)),
        t_max=float(g.get("t_max", 3.0)),
        seed=config.get("seed"),
        prec=min(prec, 96),
    )


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, config, columns, rows):
    with open(path, "w") as fh:
        for line in _header_lines(config):
            fh.write(f"# {line}\n")
        fh.write(columns + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _sci(x):
    return "%.16e" % float(x)


def _figures_enabled(config):
    return bool(config.get("figures", True))


# -- experiments ---------------------------------------------------------------


def _run_solve_weights(config, out, checks):
    _require(config, "m", "order", "window")
    w = solve_weights(int(config["m"]), int(config["order"]), tuple(config["window"]))
    path = os.path.join(out, "weights.json")
    _write_json(path, {"meta": _meta(config), "weights": w.to_record()})
    checks.record(
        "admissible-at-order",
        check_admissible(w, int(config["order"])),
        f"order {config['order']}, support {list(w.indices())}",
    )
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "solve-weights",
        "weights": w.to_record(),
        "checks": checks.items,
    })
    return [path, summary]


def _run_check_weights(config, out, checks):
    w = _weights_from(config)
    order = config.get("order")
    claimed = w.order_K if order is None else int(order)
    ok = check_admissible(w, claimed) if claimed is not None else True
    checks.record(
        "admissibility",
        ok,
        f"m={w.m}, computed order {'unbounded' if w.order_K is None else w.order_K}",
    )
    rows = []
    if w.m > 1:
        top = (claimed if claimed not in (None, -1) else 1)
        for l in range(0, top + 1):
            for u in range(1, w.m):
                r = root_order_at_one(w, l, u)
                rows.append([str(l), str(u), str(r)])
    csv_path = os.path.join(out, "root_orders.csv")
    _write_csv(csv_path, config, "l,u,root_order", rows)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "check-weights",
        "weights": w.to_record(),
        "checks": checks.items,
    })
    return [csv_path, summary]


def _run_kernel(config, out, checks):
    model = _model_from(config)
    prec = int(config.get("precision_bits", 128))
    ps = _p_values_from(config)
    w = _weights_from(config, default_unit=False) if "weights" in config else None
    grid = _grid_from(config, model, prec)
    table = build_kernel_table(model, ps, grid, w=w, prec=prec)
    csv_path = os.path.join(out, "kernel.csv")
    write_kernel_csv(csv_path, table, _header_lines(config))
    negative = sum(1 for r in table.rows if float(r.density) < 0)
    checks.record("densities-nonnegative", negative == 0, f"{len(table.rows)} samples")
    trace_tol = float(config.get("trace_tol", 1e-8))
    worst = 0.0
    for p in ps:
        tr = trace_of_density(model, p, prec=prec)
        dim = dimension(model, p)
        gap = abs(float(tr) - dim) / dim if dim else abs(float(tr))
        worst = max(worst, gap)
    checks.record("trace-identity", worst < trace_tol, f"worst relative gap {worst:.3e}")
    artifacts = [csv_path]
    if _figures_enabled(config):
        from .plots import save_kernel_figure
        fig_path = os.path.join(out, "kernel.png")
        save_kernel_figure(fig_path, table.rows)
        artifacts.append(fig_path)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "kernel",
        "model": model.descriptor,
        "p_values": ps,
        "checks": checks.items,
    })
    artifacts.append(summary)
    return artifacts


def _run_expand(config, out, checks):
    model = _model_from(config)
    prec = int(config.get("precision_bits", 128))
    w = _weights_from(config, default_unit=True)
    ps = _p_values_from(config, default_model=model)
    x = _point_from(config, model)
    order_j = int(config.get("order_j", 2))
    samples = [(p, float(weighted_density(model, w, p, x, prec=prec) / p ** model.n))
               for p in ps]
    fit = asy.fit_expansion(samples, order_j, float(config.get("cond_threshold", 1e8)))
    pred0 = float(asy.predicted_b(model, w, x, 0))
    pred1 = float(asy.predicted_b(model, w, x, 1))
    b0_tol = float(config.get("b0_tol", 1e-3))
    b1_rel_tol = float(config.get("b1_rel_tol", 1e-2))
    checks.record("b0-vs-predicted", abs(fit.b0 - pred0) <= b0_tol,
                  f"fit {fit.b0:.8f}, predicted {pred0:.8f}")
    checks.record("b1-vs-predicted", abs(fit.b1 - pred1) <= b1_rel_tol * abs(pred1),
                  f"fit {fit.b1:.8f}, predicted {pred1:.8f}")
    rows = []
    for (p, v), r in zip(samples, fit.residuals):
        fitted = sum(c * p ** (-j) for j, c in enumerate(fit.coefficients))
        rows.append([str(p), _sci(v), _sci(fitted), _sci(r)])
    csv_path = os.path.join(out, "expansion.csv")
    _write_csv(csv_path, config, "p,measured,model,residual", rows)
    artifacts = [csv_path]
    if _figures_enabled(config):
        from .plots import save_fit_figure
        fig_path = os.path.join(out, "expansion.png")
        save_fit_figure(fig_path, samples, fit)
        artifacts.append(fig_path)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "expand",
        "model": model.descriptor,
        "weights": w.to_record(),
        "coefficients": list(fit.coefficients),
        "std_errors": list(fit.std_errors),
        "condition_number": fit.condition_number,
        "predicted": {"b0": pred0, "b1": pred1},
        "checks": checks.items,
    })
    artifacts.append(summary)
    return artifacts


def _run_remainder(config, out, checks):
    model = _model_from(config)
    prec = int(config.get("precision_bits", 128))
    w = _weights_from(config, default_unit=True)
    ps = _p_values_from(config, default_model=model)
    n_order = int(config.get("N", 1))
    l_order = int(config.get("derivative_order", 0))
    grid = _grid_from(config, model, prec)
    pairs = []
    for p in ps:
        if l_order == 0:
            val = asy.sup_remainder(model, w, p, grid, n_order, prec=prec)
        else:
            val = asy.derivative_remainder(model, w, p, grid, l_order,
                                           beta=float(config.get("beta", 0.5)),
                                           prec=prec, N=n_order)
        pairs.append((p, val))
    rows = [[str(p), _sci(v)] for p, v in pairs]
    csv_path = os.path.join(out, "remainder.csv")
    _write_csv(csv_path, config, "p,sup_remainder", rows)
    slope = None
    try:
        slope_fit = asy.decay_slope(pairs)
        slope = slope_fit.slope
        if "slope_range" in config:
            lo, hi = config["slope_range"]
            checks.record("decay-slope", lo <= slope <= hi,
                          f"slope {slope:.4f} in [{lo}, {hi}]?")
        else:
            checks.record("decay-slope", True, f"slope {slope:.4f} (no target range)")
    except DegenerateData as exc:
        checks.record("decay-slope", True, f"noise floor, not fitted ({exc})")
    artifacts = [csv_path]
    if _figures_enabled(config):
        from .plots import save_decay_figure
        fig_path = os.path.join(out, "remainder.png")
        save_decay_figure(fig_path, pairs, slope)
        artifacts.append(fig_path)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "remainder",
        "model": model.descriptor,
        "weights": w.to_record(),
        "N": n_order,
        "derivative_order": l_order,
        "slope": slope,
        "grid_points": len(grid),
        "checks": checks.items,
    })
    artifacts.append(summary)
    return artifacts


def _run_singular_profile(config, out, checks):
    model = _model_from(config)
    if not model.cone_charts():
        raise ConfigInvalid("singular-profile needs a model with a cone point")
    prec = int(config.get("precision_bits", 128))
    _require(config, "p")
    p = int(config["p"])
    p_cal = int(config.get("p_calibrate", 100))
    n_points = int(config.get("n_points", 21))
    t_max = float(config.get("t_max", 3.0))
    ts = [t_max * k / (n_points - 1) for k in range(n_points)]
    scale = config.get("pairing_scale")
    if scale is None:
        scale, _cal = asy.calibrate_pairing_scale(model, p_cal, ts, prec=prec)
    profile = asy.deviation_profile(model, p, ts, prec=prec, pairing_scale=scale)
    tol = float(config.get("profile_tol", 0.10))
    checks.record("profile-match", profile.rel_sup_error <= tol,
                  f"rel sup error {profile.rel_sup_error:.4f} <= {tol}")
    collapse_gap = None
    if p != p_cal:
        ref = asy.deviation_profile(model, p_cal, ts, prec=prec, pairing_scale=scale)
        collapse_gap = asy.profile_collapse_gap(ref, profile)
        envelope = float(config.get("collapse_envelope", 1.0)) / math.sqrt(min(p, p_cal))
        checks.record("profile-collapse", collapse_gap <= envelope,
                      f"gap {collapse_gap:.4f} <= envelope {envelope:.4f}")
    rows = [[str(p), _sci(t), _sci(mv), _sci(md), _sci(mv - md)]
            for t, mv, md in zip(profile.ts, profile.measured, profile.model_values)]
    csv_path = os.path.join(out, "profile.csv")
    _write_csv(csv_path, config, "p,t,measured,model,residual", rows)
    artifacts = [csv_path]
    if _figures_enabled(config):
        from .plots import save_profile_figure
        fig_path = os.path.join(out, "profile.png")
        save_profile_figure(fig_path, profile)
        artifacts.append(fig_path)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "singular-profile",
        "model": model.descriptor,
        "p": p,
        "pairing_scale": scale,
        "rel_sup_error": profile.rel_sup_error,
        "collapse_gap": collapse_gap,
        "checks": checks.items,
    })
    artifacts.append(summary)
    return artifacts


def _run_oracle_compare(config, out, checks):
    model = _model_from(config)
    if model.descriptor.get("kind") != "football":
        raise ConfigInvalid("oracle-compare needs a football model")
    prec = int(config.get("precision_bits", 128))
    ps = _p_values_from(config)
    n_points = int(config.get("n_points", 50))
    tol = float(config.get("tolerance", 1e-8))
    rng = random.Random(config.get("seed", 0))
    chart_id = model.covering_chart.chart_id
    points = []
    for _ in range(n_points):
        r = rng.uniform(0.05, 4.0)
        ang = rng.uniform(0.0, 2 * math.pi)
        points.append(model.point(chart_id, r * cmath.exp(1j * ang)))
    rows = []
    gaps = []
    worst = 0.0
    for p in ps:
        for k, x in enumerate(points):
            direct = density(model, p, x, prec=prec)
            oracle = quotient_oracle_density(model, p, x, prec=prec)
            gap = float(abs(direct - oracle) / oracle)
            worst = max(worst, gap)
            gaps.append(gap)
            rows.append([str(p), str(k), _sci(x.z.real), _sci(x.z.imag),
                         _sci(direct), _sci(oracle), _sci(gap)])
    checks.record("oracle-agreement", worst <= tol,
                  f"worst relative gap {worst:.3e} <= {tol:.1e}")
    csv_path = os.path.join(out, "oracle.csv")
    _write_csv(csv_path, config, "p,index,re(z),im(z),direct,oracle,rel_gap", rows)
    artifacts = [csv_path]
    if _figures_enabled(config):
        from .plots import save_oracle_figure
        fig_path = os.path.join(out, "oracle.png")
        save_oracle_figure(fig_path, gaps)
        artifacts.append(fig_path)
    summary = os.path.join(out, "summary.json")
    _write_json(summary, {
        "meta": _meta(config),
        "experiment": "oracle-compare",
        "model": model.descriptor,
        "worst_gap": worst,
        "checks": checks.items,
    })
    artifacts.append(summary)
    return artifacts


def list_models():
    """Deterministic text listing of the built-in model families."""
    return "\n".join([
        "projective-line  volume > 0 (default 1.0); smooth sphere, no cone points;",
        "                 scalar curvature 8*pi/volume; sections = degree <= p*volume.",
        "teardrop         m >= 2; one cone point of order m (fiber exponent 1);",
        "                 total volume 1/m; sections = floor(p/m)+1 monomials.",
        "football         m >= 2 with character c: requires gcd(c, m) = gcd(c-1, m) = 1;",
        "                 two cone points of order m (fiber exponents c and 1-c mod m);",
        "                 m = 1 is the degenerate smooth sphere used by oracle tests.",
        "perturbations    prequantum-pair (moves omega and h^L together) and",
        "                 metric-only (independent g^TX via a conformal density);",
        "                 bumps: invpow A(1+t)^-q or gauss A exp(-((t-c)/w)^2).",
    ])


_RUNNERS = {
    "solve-weights": _run_solve_weights,
    "check-weights": _run_check_weights,
    "kernel": _run_kernel,
    "expand": _run_expand,
    "remainder": _run_remainder,
    "singular-profile": _run_singular_profile,
    "oracle-compare": _run_oracle_compare,
}


def validate_config(config):
    kind = config.get("kind")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigInvalid(f"unknown experiment kind {kind!r}")
    prec = config.get("precision_bits", 128)
    if not isinstance(prec, int) or prec < 64:
        raise ConfigInvalid("precision_bits must be an integer >= 64")
    return config


def run(config):
    """Execute one experiment config; returns (exit status, artifact paths)."""
    try:
        validate_config(config)
        kind = config["kind"]
        if kind == "list-models":
            print(list_models())
            return 0, []
        out = config.get("out", "orbergman-out")
        os.makedirs(out, exist_ok=True)
        checks = Checks()
        with mp.workprec(config.get("precision_bits", 128)):
            artifacts = _RUNNERS[kind](config, out, checks)
        return (0 if checks.all_passed else 1), artifacts
    except ConfigInvalid as exc:
        print(f"[ERROR] invalid configuration: {exc}", file=sys.stderr)
        return 2, []
    except OrbergmanError as exc:
        print(f"[ERROR] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2, []


# -- argument parsing ------------------------------------------------------------


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--out", help="output directory (default orbergman-out)")
    common.add_argument("--precision", type=int, help="working precision in bits (>= 64)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (recorded; execution is order-deterministic)")
    common.add_argument("--seed", type=int, help="seed for grid angle jitter only")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    parser = argparse.ArgumentParser(
        prog="orbergman",
        description="Weighted Bergman density experiments on model orbifolds.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="kind")

    def add_parser(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common])

    sw = add_parser("solve-weights", "solve the residue-balance system")
    sw.add_argument("--m", type=int)
    sw.add_argument("--order", type=int, help="target admissibility order K")
    sw.add_argument("--window", help="inclusive index window lo..hi")

    cw = add_parser("check-weights", "verify admissibility and root orders")
    cw.add_argument("--weights", help="weights JSON (inline or file path)")
    cw.add_argument("--order", type=int)

    for name, help_text in [
        ("kernel", "tabulate (weighted) Bergman densities"),
        ("expand", "fit expansion coefficients at a point"),
        ("remainder", "sup-norm remainder decay over a grid"),
        ("singular-profile", "near-cone deviation vs the Gaussian model"),
        ("oracle-compare", "football direct density vs quotient oracle"),
    ]:
        p = add_parser(name, help_text)
        p.add_argument("--model", help="model descriptor JSON")
        p.add_argument("--p", help="comma list of tensor powers")
        p.add_argument("--p-window", help="lo..hi geometric window")
        p.add_argument("--weights", help="weights JSON (inline or file path)")
        if name == "expand":
            p.add_argument("--order-j", type=int)
            p.add_argument("--point", help="chart:re,im")
        if name == "remainder":
            p.add_argument("--N", type=int)
            p.add_argument("--derivative-order", type=int)
            p.add_argument("--slope-range", help="lo,hi acceptance interval")
        if name == "singular-profile":
            p.add_argument("--p-calibrate", type=int)
            p.add_argument("--t-max", type=float)
            p.add_argument("--n-points", type=int)
        if name == "oracle-compare":
            p.add_argument("--n-points", type=int)
            p.add_argument("--tolerance", type=float)

    add_parser("list-models", "print the built-in model families")
    return parser


def _parse_window(text):
    lo, hi = text.split("..")
    return [int(lo), int(hi)]


def _args_to_config(args):
    config = {}
    if args.config:
        with open(args.config) as fh:
            config.update(json.load(fh))
    if args.kind:
        config["kind"] = args.kind
    if args.out:
        config["out"] = args.out
    if args.precision is not None:
        config["precision_bits"] = args.precision
    if args.threads is not None:
        config["threads"] = args.threads
    if args.seed is not None:
        config["seed"] = args.seed
    if args.no_figures:
        config["figures"] = False

    def maybe(attr, key, conv=lambda v: v):
        v = getattr(args, attr, None)
        if v is not None:
            config[key] = conv(v)

    maybe("m", "m")
    maybe("order", "order")
    maybe("window", "window", _parse_window)
    maybe("order_j", "order_j")
    maybe("N", "N")
    maybe("derivative_order", "derivative_order")
    maybe("p_calibrate", "p_calibrate")
    maybe("t_max", "t_max")
    maybe("n_points", "n_points")
    maybe("tolerance", "tolerance")
    if getattr(args, "model", None):
        config["model"] = json.loads(args.model)
    if getattr(args, "p", None):
        config["p_values"] = [int(v) for v in args.p.split(",")]
    if getattr(args, "p_window", None):
        config["p_window"] = _parse_window(args.p_window)
    if getattr(args, "weights", None):
        text = args.weights
        config["weights"] = json.loads(text) if text.strip().startswith("{") else text
    if getattr(args, "slope_range", None):
        lo, hi = args.slope_range.split(",")
        config["slope_range"] = [float(lo), float(hi)]
    if getattr(args, "point", None):
        chart, coords = args.point.split(":")
        re_s, _, im_s = coords.partition(",")
        config["point"] = {"chart": chart, "re": float(re_s), "im": float(im_s or 0.0)}
    if "singular-profile" == config.get("kind") and "p" not in config \
            and "p_values" in config:
        config["p"] = config.pop("p_values")[-1]
    return config


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.kind and not args.config:
        parser.print_help()
        return 2
    try:
        config = _args_to_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"[ERROR] invalid configuration: {exc}", file=sys.stderr)
        return 2
    status, _ = run(config)
    return status


if __name__ == "__main__":
    sys.exit(main())
