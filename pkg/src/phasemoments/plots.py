"""Report figures rendered to files alongside the delimited outputs.

Everything here regenerates its own (small) data so figures stay usable on
their own; seeds are fixed and PNG metadata pinned for reproducible bytes.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .deconv import fourier_deconvolve, gaussian_differential_deconvolve
from .hilbert import (
    GaussianProbe,
    Grid,
    StateVector,
    chirped_gaussian_state,
    default_grid,
    exact_moment,
    position_density,
)
from .husimi import DensityMatrix, husimi_q, polar_nodes
from .inference import recover_moments
from .models import (
    ArthursKelly,
    EightPort,
    GeneratingOperator,
    SequentialVN,
    coefficient_table,
    detector_kernels,
    measured_marginal_density,
    measured_moment,
)
from .sampling import empirical_moments, sample_outcomes

_SAVEFIG = {"dpi": 150, "metadata": {"Software": "phasemoments"}}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
    return str(path)


def fig_kernels_and_marginals(path) -> str:
    probe = GaussianProbe(1.0)
    models = {
        "sequential": SequentialVN(1.0, probe),
        "Arthurs-Kelly": ArthursKelly(1.0, 1.0, probe, probe),
        "eight-port": EightPort(GeneratingOperator.vacuum()),
    }
    state = StateVector.normalized([1.0, 0.0, 1.0])
    grid = default_grid(4)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2), sharey=True)
    truth = position_density(state, grid)
    for ax, (label, model) in zip(axes, models.items()):
        f, _ = detector_kernels(model, grid)
        measured = measured_marginal_density(model, state, "Q", grid)
        ax.plot(grid.points, truth.values, label="sharp", lw=1.2)
        ax.plot(grid.points, measured.values, label="measured", lw=1.2)
        ax.plot(grid.points, f.values, label="kernel", ls="--", lw=1.0)
        ax.set_xlim(-6, 6)
        ax.set_title(label)
        ax.set_xlabel("q")
    axes[0].set_ylabel("density")
    axes[0].legend(frameon=False, fontsize=8)
    return _save(fig, path)


def fig_coupling_convergence(path) -> str:
    probe = GaussianProbe(1.0)
    state = StateVector.normalized([1.0, 1.0])
    lams = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    errs = [
        abs(measured_moment(SequentialVN(l, probe), state, "Q", 2) - exact_moment(state, "Q", 2))
        for l in lams
    ]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(lams, errs, "o-", label="|measured m2 - exact m2|")
    ax.loglog(lams, 0.5 / lams**2, "k--", lw=0.8, label=r"$\lambda^{-2}/2$")
    ax.set_xlabel(r"coupling $\lambda$")
    ax.set_ylabel("second-moment error")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def fig_deconvolution(path) -> str:
    model = EightPort(GeneratingOperator.vacuum())
    state = StateVector.normalized([1.0, 0.0, 1.0])
    grid = default_grid(4)
    kernel, _ = detector_kernels(model, grid)
    measured = measured_marginal_density(model, state, "Q", grid)
    truth = position_density(state, grid)
    via_fourier = fourier_deconvolve(measured, kernel)
    via_series = gaussian_differential_deconvolve(measured, order=20)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(grid.points, truth.values, "k", lw=1.4, label="sharp density")
    ax.plot(grid.points, measured.values, lw=1.0, label="measured (smeared)")
    ax.plot(grid.points, via_fourier.values, "--", lw=1.0, label="Fourier route")
    ax.plot(grid.points, via_series.values, ":", lw=1.4, label="derivative series")
    ax.set_xlim(-6, 6)
    ax.set_xlabel("q")
    ax.set_ylabel("density")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def fig_husimi_counterexample(path) -> str:
    dim = 120
    grid = Grid.centered(math.sqrt(2.0 * dim) + 8.0, 8192)
    s1 = chirped_gaussian_state(1.0, 1.0, dim, grid)
    s2 = chirped_gaussian_state(1.0, -1.0, dim, grid)
    r, th = polar_nodes(5.0, 96, 96)
    q1 = husimi_q(DensityMatrix.from_state(s1), r, th)
    q2 = husimi_q(DensityMatrix.from_state(s2), r, th)
    theta_closed = np.concatenate([th, [2.0 * math.pi]])
    x = r[:, None] * np.cos(theta_closed[None, :])
    y = r[:, None] * np.sin(theta_closed[None, :])
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    panels = [
        (q1.values, "Q for (a,b)=(1,1)"),
        (q2.values, "Q for (a,b)=(1,-1)"),
        (q1.values - q2.values, "difference"),
    ]
    for ax, (vals, title) in zip(axes, panels):
        closed = np.concatenate([vals, vals[:, :1]], axis=1)
        cmap = "RdBu_r" if "difference" in title else "viridis"
        pc = ax.pcolormesh(x, y, closed, shading="gouraud", cmap=cmap)
        fig.colorbar(pc, ax=ax, shrink=0.85)
        ax.set_aspect("equal")
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def fig_statistical_recovery(path, samples: int = 10**6, seed: int = 20260810) -> str:
    model = EightPort(GeneratingOperator.vacuum())
    state = StateVector.normalized([1.0, 1.0])
    grid = default_grid(8)
    table = coefficient_table(model, 6)
    density = measured_marginal_density(model, state, "Q", grid)
    drawn = sample_outcomes(density, samples, seed=seed, source="report")
    rec = recover_moments(empirical_moments(drawn, 6), table, "Q")
    exact = np.array([exact_moment(state, "Q", k) for k in range(7)])
    ks = np.arange(1, 7)
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.errorbar(ks, rec.m[1:], yerr=5 * rec.se[1:], fmt="o", capsize=3,
                label="recovered (5 se bars)")
    ax.plot(ks, exact[1:], "k_", ms=14, label="exact")
    ax.set_xlabel("moment order k")
    ax.set_ylabel(r"$\langle Q^k \rangle$")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def render_report_figures(outdir) -> list[str]:
    from pathlib import Path

    out = Path(outdir)
    return [
        fig_kernels_and_marginals(out / "fig_kernels_marginals.png"),
        fig_coupling_convergence(out / "fig_coupling_convergence.png"),
        fig_deconvolution(out / "fig_deconvolution.png"),
        fig_husimi_counterexample(out / "fig_husimi_counterexample.png"),
        fig_statistical_recovery(out / "fig_statistical_recovery.png"),
    ]
