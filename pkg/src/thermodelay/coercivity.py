"""Scalar-level stability machinery: physical constants and the coercivity
function that controls solvability of the resolvent equation.

Everything here is exact arithmetic on scalars (or numpy broadcasts of
scalars); no discretization is involved.  The central object is

    phi(lambda) = alpha * Re(conj(lambda) * exp(-lambda*tau)) + |lambda|^2 * beta

evaluated in its expanded real form, together with the two closed-form lower
bounds that prove phi > 0 on the right half-plane whenever
alpha * tau <= beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError

__all__ = [
    "PhysicalParams",
    "Branch",
    "ScanReport",
    "derived_constants",
    "stability_condition",
    "coercivity_value",
    "coercivity_lower_bound",
    "coercivity_grid",
    "coercivity_scan",
]


@dataclass(frozen=True)
class PhysicalParams:
    """The six positive constants of the model.

    alpha : elastic coefficient
    beta  : Kelvin-Voigt damping coefficient
    gamma : thermal coupling
    kappa : heat conductivity
    tau   : delay time
    ell   : domain length
    """

    alpha: float
    beta: float
    gamma: float
    kappa: float
    tau: float
    ell: float

    def __post_init__(self):
        # gamma = 0 is admitted as the decoupled diagnostic limit; the other
        # coefficients must be strictly positive (beta = 0 reproduces the
        # ill-posed undamped delay problem and is rejected).
        for name in ("alpha", "beta", "gamma", "kappa", "tau", "ell"):
            raw = getattr(self, name)
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ValidationError(f"params.{name} must be a number, got {raw!r}") from None
            floor_ok = value >= 0 if name == "gamma" else value > 0
            if not (math.isfinite(value) and floor_ok):
                bound = ">= 0" if name == "gamma" else "> 0"
                raise ValidationError(f"params.{name} must be finite and {bound}, got {raw!r}")
            object.__setattr__(self, name, value)
        if not (math.isfinite(self.xi) and self.xi > 0 and math.isfinite(self.m) and self.m > 0):
            raise ValidationError("derived constants xi, m must be finite and > 0")

    @property
    def xi(self) -> float:
        """Weight of the delay-channel term in the energy norm: 2*tau*alpha^2/beta."""
        return 2.0 * self.tau * self.alpha**2 / self.beta

    @property
    def m(self) -> float:
        """Growth constant in the dissipation inequality: 2*alpha^2/beta."""
        return 2.0 * self.alpha**2 / self.beta


def derived_constants(p: PhysicalParams) -> tuple[float, float]:
    """Return (xi, m) = (2*tau*alpha^2/beta, 2*alpha^2/beta)."""
    return p.xi, p.m


def stability_condition(p: PhysicalParams) -> bool:
    """True iff alpha*tau <= beta (non-strict), the damping-dominance condition."""
    return p.alpha * p.tau <= p.beta


class Branch(str, Enum):
    """Which closed-form lower bound applies at a given frequency."""

    LARGE_LAMBDA = "large_lambda"
    SMALL_LAMBDA = "small_lambda"


def _phi_ab(a, b, alpha, beta, tau):
    """Expanded real form of the coercivity function; broadcasts over arrays."""
    return alpha * np.exp(-a * tau) * (a * np.cos(b * tau) - b * np.sin(b * tau)) + (
        a * a + b * b
    ) * beta


def coercivity_value(lam: complex, p: PhysicalParams) -> float:
    """Evaluate alpha*Re(conj(lam)*e^(-lam*tau)) + |lam|^2*beta.

    Uses the expanded real form
    alpha*e^(-a*tau)*(a*cos(b*tau) - b*sin(b*tau)) + (a^2+b^2)*beta
    with a = Re(lam), b = Im(lam); defined on the whole plane (value 0 at
    lam = 0).  Accepts numpy arrays of complex values and broadcasts.
    """
    lam = np.asarray(lam, dtype=complex)
    value = _phi_ab(lam.real, lam.imag, p.alpha, p.beta, p.tau)
    return float(value) if value.ndim == 0 else value


def _lower_bound_ab(a, b, alpha, beta, tau):
    """Branch-selected lower bound; broadcasts.  Returns (bound, is_large)."""
    mod = np.hypot(a, b)
    damp = alpha * np.exp(-a * tau)
    large = mod * (mod * beta - damp)
    small = damp * a * np.cos(b * tau) + (beta - alpha * tau * np.exp(-a * tau)) * b * b + a * a * beta
    is_large = mod >= alpha / beta
    return np.where(is_large, large, small), is_large


def coercivity_lower_bound(lam: complex, p: PhysicalParams) -> tuple[float, Branch]:
    """Closed-form lower bound for the coercivity value on Re(lam) > 0.

    For |lam| >= alpha/beta returns |lam|*(|lam|*beta - alpha*e^(-a*tau))
    (LARGE_LAMBDA branch); otherwise
    alpha*e^(-a*tau)*a*cos(b*tau) + (beta - alpha*tau*e^(-a*tau))*b^2 + a^2*beta
    (SMALL_LAMBDA branch).  At the boundary |lam| = alpha/beta the large
    branch is used.  Both bounds sit below coercivity_value(lam, p); the
    returned one is positive whenever alpha*tau <= beta.
    """
    lam = complex(lam)
    a, b = lam.real, lam.imag
    if not a > 0:
        raise ValidationError(f"coercivity_lower_bound requires Re(lam) > 0, got {a}")
    bound, is_large = _lower_bound_ab(a, b, p.alpha, p.beta, p.tau)
    return float(bound), Branch.LARGE_LAMBDA if bool(is_large) else Branch.SMALL_LAMBDA


# A sample counts as a positivity violation only below this relative scale;
# near lam = 0 the function itself tends to 0 and absolute thresholds misfire.
VIOLATION_RTOL = 1e-12


def _violation_floor(a, b, alpha, beta):
    return -VIOLATION_RTOL * (alpha + (a * a + b * b) * beta)


@dataclass(frozen=True)
class ScanReport:
    """Result of a tensor-grid evaluation of the coercivity function."""

    min_value: float
    argmin: complex
    n_samples: int
    nonpositive: tuple[tuple[complex, float], ...]
    nonpositive_count: int

    MAX_STORED = 100


def coercivity_grid(
    p: PhysicalParams,
    a_range: tuple[float, float],
    b_range: tuple[float, float],
    n_a: int,
    n_b: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor-grid evaluation: returns (a, b, values) with values (n_a, n_b)."""
    a_lo, a_hi = map(float, a_range)
    b_lo, b_hi = map(float, b_range)
    if not (0.0 < a_lo <= a_hi) or not math.isfinite(a_hi):
        raise ValidationError(f"a_range must satisfy 0 < a_lo <= a_hi, got {a_range}")
    if not (b_lo <= b_hi):
        raise ValidationError(f"b_range must satisfy b_lo <= b_hi, got {b_range}")
    if n_a < 1 or n_b < 1:
        raise ValidationError(f"grid counts must be >= 1, got {(n_a, n_b)}")
    a = np.linspace(a_lo, a_hi, n_a) if n_a > 1 else np.array([a_lo])
    b = np.linspace(b_lo, b_hi, n_b) if n_b > 1 else np.array([b_lo])
    aa, bb = np.meshgrid(a, b, indexing="ij")
    return a, b, _phi_ab(aa, bb, p.alpha, p.beta, p.tau)


def coercivity_scan(
    p: PhysicalParams,
    a_range: tuple[float, float],
    b_range: tuple[float, float],
    n_a: int,
    n_b: int,
) -> ScanReport:
    """Evaluate the coercivity function on an (n_a x n_b) grid of lam = a+ib.

    a_range must lie in (0, inf).  Reports the grid minimum, its argmin
    (lowest linear index a-major/b-minor wins ties), and every sample lying
    below the relative violation floor -1e-12*(alpha + |lam|^2*beta); at most
    ScanReport.MAX_STORED offending samples are stored, the count is exact.
    The reduction is deterministic and identical to the sequential order.
    """
    a, b, values = coercivity_grid(p, a_range, b_range, n_a, n_b)
    aa, bb = np.meshgrid(a, b, indexing="ij")

    flat = values.ravel()
    imin = int(np.argmin(flat))
    argmin = complex(aa.ravel()[imin], bb.ravel()[imin])

    bad = flat < _violation_floor(aa.ravel(), bb.ravel(), p.alpha, p.beta)
    bad_idx = np.flatnonzero(bad)
    stored = tuple(
        (complex(aa.ravel()[i], bb.ravel()[i]), float(flat[i]))
        for i in bad_idx[: ScanReport.MAX_STORED]
    )
    return ScanReport(
        min_value=float(flat[imin]),
        argmin=argmin,
        n_samples=int(flat.size),
        nonpositive=stored,
        nonpositive_count=int(bad_idx.size),
    )
