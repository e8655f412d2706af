"""Figure rendering for the report path.

Each helper takes a report dictionary and writes one PNG next to the
delimited output; all rendering is headless (Agg).
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_convergence(report, out_dir, name="convergence.png"):
    """Successive-difference norms of the fixed-point iteration."""
    diffs = report.get("difference_norms") or []
    if not diffs:
        return None
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(range(1, len(diffs) + 1), diffs, "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("work-space norm of difference")
    ax.set_title("Picard contraction history")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, out_dir, name)


def plot_decay_fits(level_fits, out_dir, name="decay_fits.png"):
    """Fitted per-level decay rates of the smoothing flow."""
    if not level_fits:
        return None
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    js = [f["j"] for f in level_fits]
    cs = [f["c_tilde"] for f in level_fits]
    ax.plot(js, cs, "s-")
    ax.set_xlabel("level j")
    ax.set_ylabel("fitted decay rate")
    ax.set_title("coefficient decay rates")
    ax.grid(True, alpha=0.3)
    return _save(fig, out_dir, name)


def plot_distance_sweep(rows, decay_n, out_dir, name="kernel_distance_sweep.png"):
    """Log-log kernel-coefficient decay against lattice distance."""
    if not rows:
        return None
    d = [r["distance"] for r in rows]
    v = [r["value"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.loglog([1 + x for x in d], v, "o-", label="measured")
    ref = [v[0] * ((1 + d[0]) / (1 + x)) ** decay_n for x in d]
    ax.loglog([1 + x for x in d], ref, "--", label=f"slope -{decay_n}")
    ax.set_xlabel("1 + lattice distance")
    ax.set_ylabel("|kernel coefficient|")
    ax.set_title("kernel localization sweep")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, out_dir, name)


def plot_probe_ratios(probes, out_dir, name="kernel_probe_ratios.png"):
    """Measured/bound ratios per probe, colored by case tag."""
    if not probes:
        return None
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    cases = sorted({int(row[1]) for row in probes})
    for case in cases:
        ys = [float(row[-1]) for row in probes if int(row[1]) == case]
        xs = range(len(ys))
        ax.semilogy(list(xs), ys, "o", label=f"case {case}", alpha=0.7)
    ax.set_xlabel("probe index (per case)")
    ax.set_ylabel("measured / bound")
    ax.set_title("kernel probe ratios")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, out_dir, name)


def plot_level_energies(coeffs, out_dir, name="level_energies.png"):
    """Coefficient energy per dyadic level of one (vector) field."""
    if not isinstance(coeffs, (tuple, list)):
        coeffs = (coeffs,)
    grid = coeffs[0].grid
    levels = list(grid.levels)
    energy = []
    for j in levels:
        total = 0.0
        for comp in coeffs:
            for (eps, jj), arr in comp.levels.items():
                if jj == j:
                    total += float((arr**2).sum())
        energy.append(total)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.bar(levels, energy, width=0.6)
    ax.set_yscale("log") if max(energy) > 0 else None
    ax.set_xlabel("level j")
    ax.set_ylabel("coefficient energy")
    ax.set_title("per-level energy")
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, out_dir, name)


def plot_suite_summary(result, out_dir, name=None):
    """Bar chart of measured/threshold margins for one verification suite."""
    checks = result.get("checks") or []
    if not checks:
        return None
    name = name or f"verify_{result['suite']}.png"
    labels = [c["name"] for c in checks]
    margins = []
    for c in checks:
        thr = c["threshold"]
        meas = c["measured"]
        if not (math.isfinite(thr) and thr > 0 and math.isfinite(meas)):
            margins.append(1.0)
        elif c["mode"] == "<=":
            margins.append(max(meas / thr, 1e-18))
        else:
            margins.append(max(thr / meas if meas else 1.0, 1e-18))
    colors = ["tab:green" if c["passed"] else "tab:red" for c in checks]
    fig, ax = plt.subplots(figsize=(6.4, 0.5 * len(checks) + 1.5))
    ax.barh(range(len(checks)), margins, color=colors)
    ax.set_yticks(range(len(checks)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xscale("log")
    ax.axvline(1.0, color="k", lw=1)
    ax.set_xlabel("measured / threshold (pass left of 1)")
    ax.set_title(f"suite: {result['suite']}")
    return _save(fig, out_dir, name)
