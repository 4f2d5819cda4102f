"""Figure rendering for experiment reports.

Each writer takes already-computed experiment data and saves a PNG next to
the delimited output. Figures are a reporting convenience; the CSV files
remain the canonical artifacts.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path, meta=None):
    fig.tight_layout()
    fig.savefig(path, dpi=140, metadata=meta or {})
    plt.close(fig)


def save_kernel_figure(path, rows, title="Bergman density"):
    """Density against the chart radius, one curve per tensor power."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_p = {}
    for r in rows:
        by_p.setdefault(r.p, []).append(r)
    for p, group in sorted(by_p.items()):
        group = sorted(group, key=lambda r: abs(r.z))
        xs = [abs(r.z) for r in group]
        ys = [float(r.density) / p if p else float(r.density) for r in group]
        ax.plot(xs, ys, marker="o", ms=3, lw=1, label=f"p={p}")
    ax.set_xlabel("chart radius |z|")
    ax.set_ylabel("density / p")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_fit_figure(path, samples, fit, title="expansion fit"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs = [1.0 / p for p, _ in samples]
    ys = [float(v) for _, v in samples]
    ax.plot(xs, ys, "o", ms=4, label="measured")
    grid = [min(xs) * (max(xs) / min(xs)) ** (k / 200) for k in range(201)]
    model = [sum(c * x ** j for j, c in enumerate(fit.coefficients)) for x in grid]
    ax.plot(grid, model, "-", lw=1,
            label="fit: " + ", ".join(f"b{j}={c:.5g}" for j, c in enumerate(fit.coefficients)))
    ax.set_xlabel("1/p")
    ax.set_ylabel("density / p^n")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_decay_figure(path, pairs, slope=None, title="remainder decay"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ps = [p for p, _ in pairs]
    vs = [v for _, v in pairs]
    ax.loglog(ps, vs, "o-", ms=4, lw=1, label="sup remainder")
    if slope is not None and vs[0] > 0:
        ref = [vs[0] * (p / ps[0]) ** slope for p in ps]
        ax.loglog(ps, ref, "--", lw=1, label=f"slope {slope:.3f}")
    ax.set_xlabel("p")
    ax.set_ylabel("sup |remainder|")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_profile_figure(path, profile, title=None):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(profile.ts, profile.measured, "o", ms=4, label=f"measured (p={profile.p})")
    ax.plot(profile.ts, profile.model_values, "-", lw=1.2,
            label=f"Gaussian model (scale {profile.pairing_scale:.4f})")
    ax.set_xlabel("t = sqrt(p) * distance")
    ax.set_ylabel("density deviation")
    ax.set_title(title or f"cone profile, m={profile.m}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_oracle_figure(path, gaps, title="quotient oracle agreement"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs = list(range(len(gaps)))
    floor = 1e-40
    ax.semilogy(xs, [max(g, floor) for g in gaps], "o", ms=4)
    ax.set_xlabel("sample point index")
    ax.set_ylabel("relative gap")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    _finish(fig, path)
