"""Figure rendering for experiment and scaling reports.

Figures are written straight to files (Agg backend); the CSV/JSON reports
remain the canonical outputs and carry everything the figures show.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def risk_plot(report, path: str) -> str:
    """Risk-versus-n curves: one light line per member, the max-over-members
    risk in bold, and any matched lower bounds dashed."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.asarray(report.n_grid)
    for mi in range(report.mean_loss.shape[0]):
        ax.plot(n, report.mean_loss[mi], color="steelblue", alpha=0.25, lw=0.8)
    ax.errorbar(
        n,
        report.max_risk,
        yerr=[report.stderr[report.argmax_member[ni], ni] for ni in range(len(n))],
        color="navy",
        lw=2,
        marker="o",
        ms=4,
        label="max over members",
    )
    styles = {"lecam": ("tab:red", "--"), "fano": ("tab:orange", "-."), "assouad": ("tab:green", ":")}
    for name, (color, ls) in styles.items():
        vals = [b.get(name) for b in report.bound_values]
        if any(v is not None for v in vals):
            ax.plot(
                n,
                [np.nan if v is None else v for v in vals],
                color=color,
                ls=ls,
                lw=1.5,
                label=f"{name} bound",
            )
    if n.max() >= 10 * max(n.min(), 1):
        ax.set_xscale("log")
    ax.set_xlabel("samples n")
    ax.set_ylabel(f"mean {report.loss} loss")
    ax.set_title(f"risk profile ({report.trials} trials, seed {report.seed})")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def scaling_plot(result: dict, path: str) -> str:
    """Required-n versus the scaled parameter on log-log axes, with the
    reference expression rescaled through the first point."""
    pts = result["points"]
    axis = result["axis"]
    xs = np.array([p["size"] if axis == "size" else p[axis] for p in pts], dtype=float)
    ns = np.array([p["required_n"] for p in pts], dtype=float)
    ref = np.array([p["reference"] for p in pts], dtype=float)
    ref = ref * ns[0] / ref[0]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(xs, ns, "o-", color="navy", label="measured required n")
    ax.loglog(xs, ref, "--", color="tab:red", label="reference shape")
    ax.set_xlabel(axis)
    ax.set_ylabel("required n for risk <= alpha")
    ax.set_title(f"{result['problem']} scaling along {axis}")
    ax.legend()
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
