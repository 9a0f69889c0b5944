"""Spectrum location and resolvent-norm boundedness checks.

Exponential decay of the semigroup is equivalent to (i) spectrum in the
closed left half-plane and (ii) a uniformly bounded resolvent on the right
half-plane; this module computes both quantities for the assembled
generator.  Resolvent norms are reported in two metrics: the Euclidean norm
of the layout vector and the energy-weighted norm obtained by similarity
transformation with the Gram factor of the inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .coercivity import PhysicalParams
from .errors import DeflationError, EigensolverError, ValidationError
from .generator import GeneratorMatrix, assemble
from .grid import GridSpec, ThetaBC

__all__ = [
    "SpectrumReport",
    "ResolventNormResult",
    "ResolventScan",
    "SweepRow",
    "EnergyWeights",
    "eigenvalues",
    "default_zero_tol",
    "spectral_abscissa",
    "spectrum_report",
    "euclidean_resolvent_norm",
    "resolvent_norm",
    "resolvent_scan",
    "log_spaced_scan_grid",
    "stability_sweep",
]

# sigma_min below this multiple of sigma_max flags the shifted matrix as
# numerically singular.
_SINGULARITY_RTOL = 1e-13


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalue list with its zero-mode-deflated spectral abscissa."""

    eigenvalues: np.ndarray
    abscissa: float
    zero_modes_removed: int
    grid: tuple[int, int] | None = None
    params: PhysicalParams | None = None


@dataclass(frozen=True)
class ResolventNormResult:
    """Resolvent norm at one frequency, in both metrics."""

    norm_euclid: float
    norm_h: float
    singular: bool


@dataclass(frozen=True)
class ResolventScan:
    """Resolvent norms along the vertical line Re(lam) = s."""

    s: float
    b_values: np.ndarray
    norm_euclid: np.ndarray
    norm_h: np.ndarray
    singular: np.ndarray
    sup_norm: float | None
    argmax_b: float | None


@dataclass(frozen=True)
class SweepRow:
    """One point of a parameter sweep."""

    param: str
    value: float
    abscissa: float | None
    zero_modes_removed: int | None
    status: str


def eigenvalues(A: GeneratorMatrix) -> np.ndarray:
    """Full spectrum of the dense generator, sorted by (Re desc, Im asc).

    Refuses above the dense dimension guard; eigensolver non-convergence is
    reported as EigensolverError, never silently truncated.
    """
    try:
        w = sla.eigvals(A.dense)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"dense eigensolver failed: {exc}") from exc
    order = np.lexsort((w.imag, -w.real))
    return w[order]


def default_zero_tol(eigs: np.ndarray) -> float:
    """Deflation tolerance: 1e-8 times the spectral radius (floor 1e-8)."""
    eigs = np.asarray(eigs)
    radius = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    return 1e-8 * max(radius, 1.0)


def spectral_abscissa(
    eigs: Sequence[complex] | np.ndarray,
    deflate_zero: bool,
    zero_tol: float,
    grid: tuple[int, int] | None = None,
    params: PhysicalParams | None = None,
) -> SpectrumReport:
    """Maximal real part after removing at most one near-zero eigenvalue.

    With deflate_zero, exactly one eigenvalue with |lam| < zero_tol may be
    removed (the conserved-mean mode under Neumann temperature walls); more
    than one candidate signals a broken discretization and raises
    DeflationError.
    """
    if not zero_tol > 0:
        raise ValidationError(f"zero_tol must be > 0, got {zero_tol}")
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.size == 0:
        raise ValidationError("empty eigenvalue list")
    removed = 0
    retained = eigs
    if deflate_zero:
        near_zero = np.abs(eigs) < zero_tol
        count = int(np.count_nonzero(near_zero))
        if count > 1:
            raise DeflationError(
                f"{count} eigenvalues within {zero_tol:.3e} of zero; expected at most one"
            )
        if count == 1:
            retained = eigs[~near_zero]
            removed = 1
        if retained.size == 0:
            raise DeflationError("deflation removed every eigenvalue")
    return SpectrumReport(
        eigenvalues=eigs,
        abscissa=float(np.max(retained.real)),
        zero_modes_removed=removed,
        grid=grid,
        params=params,
    )


def spectrum_report(
    A: GeneratorMatrix, deflate_zero: bool = True, zero_tol: float | None = None
) -> SpectrumReport:
    """Eigensolve the generator and deflate with the default tolerance."""
    eigs = eigenvalues(A)
    tol = default_zero_tol(eigs) if zero_tol is None else zero_tol
    return spectral_abscissa(
        eigs,
        deflate_zero=deflate_zero,
        zero_tol=tol,
        grid=(A.grid.n_cells, A.grid.n_rho),
        params=A.params,
    )


class EnergyWeights:
    """Factors W^(1/2), W^(-1/2) of the energy Gram matrix.

    Only the displacement block is non-diagonal (a stiffness-like form); it
    is factored once by a symmetric eigendecomposition.  transform() maps a
    shifted dense matrix lam*I - A into the similarity frame in which the
    Euclidean norm is the energy norm.
    """

    def __init__(self, A: GeneratorMatrix):
        gram = A.gram.toarray()
        ni = A.grid.n_cells - 1
        u_block = gram[:ni, :ni]
        evals, evecs = sla.eigh(u_block)
        if np.min(evals) <= 0:
            raise ValidationError("energy Gram matrix is not positive definite")
        self._u_half = (evecs * np.sqrt(evals)) @ evecs.T
        self._u_half_inv = (evecs / np.sqrt(evals)) @ evecs.T
        diag_rest = np.diag(gram)[ni:]
        self._sqrt_rest = np.sqrt(diag_rest)
        self._ni = ni

    def transform(self, mat: np.ndarray) -> np.ndarray:
        """Return W^(1/2) @ mat @ W^(-1/2)."""
        ni = self._ni
        out = np.array(mat, dtype=complex, copy=True)
        out[:ni, :] = self._u_half @ out[:ni, :]
        out[ni:, :] *= self._sqrt_rest[:, None]
        out[:, :ni] = out[:, :ni] @ self._u_half_inv
        out[:, ni:] /= self._sqrt_rest[None, :]
        return out


def euclidean_resolvent_norm(mat: np.ndarray, lam: complex) -> float:
    """1/sigma_min(lam*I - mat) for an arbitrary square matrix."""
    mat = np.asarray(mat)
    shifted = lam * np.eye(mat.shape[0], dtype=complex) - mat
    sigma = sla.svdvals(shifted)
    return float(1.0 / sigma[-1])


def resolvent_norm(
    A: GeneratorMatrix, lam: complex, weights: EnergyWeights | None = None
) -> ResolventNormResult:
    """Resolvent norm 1/sigma_min(lam*I - A) in both metrics.

    The energy-weighted value comes from the similarity-transformed matrix
    W^(1/2) (lam*I - A) W^(-1/2).  A sample is flagged singular when either
    sigma_min falls below 1e-13 times the corresponding sigma_max; singular
    samples report inf.
    """
    if weights is None:
        weights = EnergyWeights(A)
    shifted = complex(lam) * np.eye(A.dimension, dtype=complex) - A.dense
    sig = sla.svdvals(shifted)
    sig_w = sla.svdvals(weights.transform(shifted))
    singular = bool(sig[-1] < _SINGULARITY_RTOL * sig[0] or sig_w[-1] < _SINGULARITY_RTOL * sig_w[0])
    if singular:
        return ResolventNormResult(norm_euclid=np.inf, norm_h=np.inf, singular=True)
    return ResolventNormResult(
        norm_euclid=float(1.0 / sig[-1]), norm_h=float(1.0 / sig_w[-1]), singular=False
    )


def resolvent_scan(A: GeneratorMatrix, s: float, b_values: Sequence[float]) -> ResolventScan:
    """Evaluate resolvent norms at lam = s + i*b for every b in b_values.

    Singular samples are flagged in place and skipped by the sup; the scan
    never aborts on them.  The sup and its argmax refer to the
    energy-weighted norm.
    """
    if not s > 0:
        raise ValidationError(f"scan line must have s > 0, got {s}")
    b_values = np.asarray(list(b_values), dtype=float)
    n = b_values.size
    norm_e = np.empty(n)
    norm_h = np.empty(n)
    singular = np.zeros(n, dtype=bool)
    weights = EnergyWeights(A) if n else None
    for i, b in enumerate(b_values):
        result = resolvent_norm(A, complex(s, b), weights)
        norm_e[i] = result.norm_euclid
        norm_h[i] = result.norm_h
        singular[i] = result.singular
    finite = ~singular
    if n and np.any(finite):
        idx = int(np.flatnonzero(finite)[np.argmax(norm_h[finite])])
        sup_norm = float(norm_h[idx])
        argmax_b = float(b_values[idx])
    else:
        sup_norm = None
        argmax_b = None
    return ResolventScan(
        s=float(s),
        b_values=b_values,
        norm_euclid=norm_e,
        norm_h=norm_h,
        singular=singular,
        sup_norm=sup_norm,
        argmax_b=argmax_b,
    )


def log_spaced_scan_grid(b_min: float, b_max: float, count: int) -> np.ndarray:
    """Symmetric log-spaced scan frequencies: count/2 per sign in [b_min, b_max]."""
    if not (0 < b_min < b_max):
        raise ValidationError(f"need 0 < b_min < b_max, got {(b_min, b_max)}")
    if count < 2 or count % 2:
        raise ValidationError(f"count must be even and >= 2, got {count}")
    positive = np.logspace(np.log10(b_min), np.log10(b_max), count // 2)
    positive[0] = b_min  # pin the endpoints exactly
    if positive.size > 1:
        positive[-1] = b_max
    return np.concatenate([-positive[::-1], positive])


_SWEEPABLE = ("alpha", "beta", "gamma", "kappa", "tau", "ell")


def stability_sweep(
    base: PhysicalParams,
    axis_param: str,
    axis_values: Sequence[float],
    g: GridSpec,
    deflate: bool = True,
    theta_bc: ThetaBC = ThetaBC.NEUMANN,
) -> list[SweepRow]:
    """Deflated spectral abscissa along one parameter axis.

    axis_param is one of alpha/beta/gamma/kappa/tau/ell, or "ratio" which
    sets beta = value * alpha * tau (the distance to the stability boundary).
    Rows keep the axis order; per-point failures are recorded in the status
    column and the sweep continues.
    """
    if axis_param != "ratio" and axis_param not in _SWEEPABLE:
        raise ValidationError(
            f"unknown sweep axis {axis_param!r}; expected one of {_SWEEPABLE + ('ratio',)}"
        )
    values = [float(v) for v in axis_values]
    if not values:
        raise ValidationError("sweep axis needs at least one point")
    rows: list[SweepRow] = []
    for value in values:
        try:
            if axis_param == "ratio":
                params = dc_replace(base, beta=value * base.alpha * base.tau)
            else:
                params = dc_replace(base, **{axis_param: value})
            report = spectrum_report(assemble(params, g, theta_bc), deflate_zero=deflate)
            rows.append(
                SweepRow(
                    param=axis_param,
                    value=value,
                    abscissa=report.abscissa,
                    zero_modes_removed=report.zero_modes_removed,
                    status="ok",
                )
            )
        except Exception as exc:  # per-point failures stay in-row
            rows.append(
                SweepRow(
                    param=axis_param,
                    value=value,
                    abscissa=None,
                    zero_modes_removed=None,
                    status=f"error: {exc}",
                )
            )
    return rows
