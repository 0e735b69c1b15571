"""Figure rendering for the report path.

Every subcommand can drop one PNG next to its JSON report; CSV stays the data
handoff, the figures are a quick visual check of the run.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FLOOR = 1e-18  # display floor for log-scale defect bars


def render_solution(result, params, path) -> None:
    """Decay profile of the minimizer plus the descent history."""
    u = result.u0
    dist = np.abs(u.box.sites).sum(axis=1)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.5))

    positive = u.values > 0
    ax0.semilogy(dist[positive], u.values[positive], ".", ms=3, alpha=0.6)
    ax0.set_xlabel("l1 distance from origin")
    ax0.set_ylabel("u(x)")
    ax0.set_title(
        f"minimizer on B_{u.box.radius}, N={params.dim}, p={params.p:g}, q={params.q:g}"
    )

    ax1.semilogy(np.asarray(result.j1_history) - result.lambda0 + FLOOR, lw=1)
    ax1.set_xlabel("accepted step")
    ax1.set_ylabel("J1 - lambda0")
    ax1.set_title(f"descent history ({result.iterations} iterations)")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(rows, path) -> None:
    """b = lambda q beta against beta, with the exact per-beta brackets."""
    betas = [r.beta for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(betas, [r.bracket[0] for r in rows], "k--", lw=1, label="bracket")
    ax.loglog(betas, [r.bracket[1] for r in rows], "k--", lw=1)
    ok = [r for r in rows if r.converged]
    bad = [r for r in rows if not r.converged]
    if ok:
        ax.loglog([r.beta for r in ok], [r.b_tilde for r in ok], "o-", label="b")
    if bad:
        ax.loglog([r.beta for r in bad], [r.b_tilde for r in bad], "rx", label="unconverged")
    ax.set_xlabel("beta")
    ax.set_ylabel("b")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_decomposition(dec, level, path) -> None:
    """Energy ledger: localized limit, bubbles, their sum, and the target level."""
    labels = ["limit"] + [f"bubble {i+1}" for i in range(dec.k)]
    energies = [dec.u0_energy] + list(dec.bubble_energies)
    fig, ax = plt.subplots(figsize=(max(4, 1 + 1.2 * len(labels)), 3.5))
    ax.bar(labels, energies)
    total = sum(energies)
    ax.axhline(total, color="k", lw=1, ls=":", label=f"sum = {total:.6g}")
    if level is not None:
        ax.axhline(level, color="r", lw=1, ls="--", label=f"level = {level:.6g}")
    ax.set_ylabel("energy")
    ax.set_title(f"k = {dec.k} bubbles, remainder sup = {dec.remainder_sup:.2e}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_checks(reports, path) -> None:
    """Measured defects versus tolerances, one bar per check."""
    names = [r.name for r in reports]
    defects = [max(r.defect, FLOOR) for r in reports]
    tols = [max(r.tolerance, FLOOR) for r in reports]
    colors = ["tab:green" if r.passed else "tab:red" for r in reports]
    y = np.arange(len(reports))
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(reports) + 1.5))
    ax.barh(y, defects, color=colors)
    ax.plot(tols, y, "k|", ms=14, label="tolerance")
    ax.set_yticks(y, names)
    ax.set_xscale("log")
    ax.set_xlabel("defect")
    ax.invert_yaxis()
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
