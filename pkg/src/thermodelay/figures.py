"""Matplotlib renderers for the CLI report path.

Every report figure is written next to its CSV with a fixed size, dpi, and
style so that repeated runs of the same spec produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectral import ResolventScan, SweepRow
from .timestepper import DecayFit, Trajectory

__all__ = [
    "energy_figure",
    "spectrum_figure",
    "resolvent_figure",
    "sweep_figure",
    "coercivity_figure",
    "dissipation_figure",
]

_FIGSIZE = (6.4, 4.2)
_DPI = 130


def _finish(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(Path(path), dpi=_DPI)
    plt.close(fig)


def energy_figure(traj: Trajectory, fit: DecayFit | None, path: str | Path) -> None:
    """Energy trace on a log scale, with the fitted envelope if available."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    positive = traj.energies > 0
    ax.semilogy(traj.times[positive], traj.energies[positive], lw=1.2, label="E(t)")
    if fit is not None:
        envelope = fit.c_fit**2 * np.exp(-2.0 * fit.w_fit * traj.times)
        ax.semilogy(
            traj.times, envelope, "--", lw=1.0,
            label=f"fit: w = {fit.w_fit:.4g}, r² = {fit.r_squared:.4f}",
        )
        ax.axvspan(*fit.window, alpha=0.12, color="gray", label="fit window")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend(loc="best")
    _finish(fig, path)


def spectrum_figure(eigs: np.ndarray, abscissa: float | None, path: str | Path) -> None:
    """Eigenvalues in the complex plane with the imaginary axis marked."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.scatter(eigs.real, eigs.imag, s=8, lw=0, color="tab:blue")
    ax.axvline(0.0, color="k", lw=0.8)
    if abscissa is not None:
        ax.axvline(abscissa, color="tab:red", lw=0.8, ls="--", label=f"abscissa = {abscissa:.4g}")
        ax.legend(loc="best")
    ax.set_xlabel("Re λ")
    ax.set_ylabel("Im λ")
    _finish(fig, path)


def resolvent_figure(scan: ResolventScan, path: str | Path) -> None:
    """Resolvent norms along the scan line, both metrics, log-log in |b|."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    b = scan.b_values
    ok = ~scan.singular
    for sign, marker in ((1, "o"), (-1, "s")):
        side = ok & (np.sign(b) == sign)
        if np.any(side):
            label_suffix = "b > 0" if sign > 0 else "b < 0"
            ax.loglog(np.abs(b[side]), scan.norm_h[side], marker=marker, ms=3, lw=0.8,
                      label=f"energy norm, {label_suffix}")
            ax.loglog(np.abs(b[side]), scan.norm_euclid[side], marker=marker, ms=3, lw=0.8,
                      alpha=0.5, label=f"euclidean, {label_suffix}")
    ax.set_xlabel("|b|  (λ = s + ib)")
    ax.set_ylabel("‖(λI − A)⁻¹‖")
    ax.set_title(f"s = {scan.s:g}")
    ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def sweep_figure(rows: list[SweepRow], path: str | Path) -> None:
    """Deflated spectral abscissa along the sweep axis."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    good = [(r.value, r.abscissa) for r in rows if r.status == "ok"]
    if good:
        values, absc = zip(*good)
        ax.plot(values, absc, "o-", ms=4, lw=1.0)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel(rows[0].param if rows else "parameter")
    ax.set_ylabel("spectral abscissa")
    _finish(fig, path)


def coercivity_figure(
    a: np.ndarray, b: np.ndarray, values: np.ndarray, path: str | Path
) -> None:
    """Heat map of the coercivity function over the scanned frequency grid."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    if values.size > 1 and a.size > 1 and b.size > 1:
        mesh = ax.pcolormesh(a, b, np.log10(np.maximum(values, 1e-300)).T, shading="auto")
        fig.colorbar(mesh, ax=ax, label="log10 Φ")
    else:
        ax.plot(a, values.ravel(), "o")
    ax.set_xlabel("Re λ")
    ax.set_ylabel("Im λ")
    _finish(fig, path)


def dissipation_figure(relative_residuals: np.ndarray, path: str | Path) -> None:
    """Histogram of dissipation-inequality residuals relative to the state norm."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.hist(relative_residuals, bins=50, color="tab:blue")
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("residual / ‖U‖²")
    ax.set_ylabel("count")
    _finish(fig, path)
