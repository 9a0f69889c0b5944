"""Staggered 1D grid, discrete differential operators, and the weighted
energy inner product.

Displacement u and velocity v live at interior nodes (homogeneous Dirichlet),
temperature theta and the delayed strain levels z live at cell midpoints.
This staggering makes the node<->midpoint difference operators exact discrete
adjoints of each other (summation by parts holds to rounding), which in turn
makes the coupling terms cancel exactly from the real part of the energy
balance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .coercivity import PhysicalParams
from .errors import ValidationError

__all__ = [
    "ThetaBC",
    "GridSpec",
    "StateVector",
    "build_grid",
    "diff_node_to_mid",
    "div_mid_to_node",
    "theta_flux",
    "flux_divergence",
    "flux_norm_sq",
    "h_inner",
    "h_norm_sq",
    "gram_matrix",
    "save_snapshot",
    "load_snapshot",
]


class ThetaBC(str, Enum):
    """Boundary condition for the temperature field."""

    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class GridSpec:
    """Uniform staggered grid on (0, ell): N space cells, M delay cells."""

    n_cells: int
    n_rho: int
    ell: float
    h: float
    d_rho: float

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1

    @property
    def state_dim(self) -> int:
        """Total unknown count: 2(N-1) interior u,v + N*M delay levels + N theta."""
        n, m = self.n_cells, self.n_rho
        return 2 * (n - 1) + n * m + n

    def node_coords(self) -> np.ndarray:
        """All node coordinates x_j = j*h, j = 0..N."""
        return self.h * np.arange(self.n_cells + 1)

    def interior_coords(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_cells)

    def mid_coords(self) -> np.ndarray:
        """Midpoint coordinates x_{j+1/2}, j = 0..N-1."""
        return self.h * (np.arange(self.n_cells) + 0.5)

    def rho_levels(self) -> np.ndarray:
        """Stored delay coordinates rho_k = k/M, k = 1..M (level 0 is the inflow)."""
        return self.d_rho * np.arange(1, self.n_rho + 1)


def build_grid(n_cells: int, n_rho: int, ell: float) -> GridSpec:
    """Construct a GridSpec with h = ell/N and d_rho = 1/M."""
    if n_cells < 2:
        raise ValidationError(f"n_cells must be >= 2, got {n_cells}")
    if n_rho < 1:
        raise ValidationError(f"n_rho must be >= 1, got {n_rho}")
    ell = float(ell)
    if not ell > 0:
        raise ValidationError(f"ell must be > 0, got {ell}")
    return GridSpec(int(n_cells), int(n_rho), ell, ell / n_cells, 1.0 / n_rho)


@dataclass
class StateVector:
    """Discrete state (u, v, z, theta) in the fixed layout order.

    u, v   : complex, interior node values (length N-1), zero on the boundary
    z      : complex, (N, M) delayed strain levels; z[j, k-1] sits at rho_k = k/M
    theta  : complex, midpoint values (length N)

    The flat layout is [u | v | z (j-major, k-minor) | theta].
    """

    u: np.ndarray
    v: np.ndarray
    z: np.ndarray
    theta: np.ndarray

    LAYOUT_VERSION = 1

    @classmethod
    def zeros(cls, g: GridSpec) -> "StateVector":
        n, m = g.n_cells, g.n_rho
        return cls(
            u=np.zeros(n - 1, dtype=complex),
            v=np.zeros(n - 1, dtype=complex),
            z=np.zeros((n, m), dtype=complex),
            theta=np.zeros(n, dtype=complex),
        )

    @classmethod
    def from_flat(cls, vec: np.ndarray, g: GridSpec) -> "StateVector":
        vec = np.asarray(vec)
        if vec.shape != (g.state_dim,):
            raise ValidationError(f"flat state must have shape ({g.state_dim},), got {vec.shape}")
        n, m = g.n_cells, g.n_rho
        ni = n - 1
        u = vec[:ni].astype(complex)
        v = vec[ni : 2 * ni].astype(complex)
        z = vec[2 * ni : 2 * ni + n * m].astype(complex).reshape(n, m)
        theta = vec[2 * ni + n * m :].astype(complex)
        return cls(u=u, v=v, z=z, theta=theta)

    def to_flat(self) -> np.ndarray:
        return np.concatenate(
            [self.u, self.v, self.z.reshape(-1), self.theta]
        ).astype(complex)

    def copy(self) -> "StateVector":
        return StateVector(self.u.copy(), self.v.copy(), self.z.copy(), self.theta.copy())

    def validate(self, g: GridSpec) -> None:
        n, m = g.n_cells, g.n_rho
        if self.u.shape != (n - 1,) or self.v.shape != (n - 1,):
            raise ValidationError(f"u, v must have shape ({n - 1},)")
        if self.z.shape != (n, m):
            raise ValidationError(f"z must have shape ({n}, {m}), got {self.z.shape}")
        if self.theta.shape != (n,):
            raise ValidationError(f"theta must have shape ({n},), got {self.theta.shape}")

    def theta_sum(self) -> complex:
        """Sum of theta over midpoints; conserved by the Neumann dynamics."""
        return complex(np.sum(self.theta))


def diff_node_to_mid(w: np.ndarray, g: GridSpec) -> np.ndarray:
    """Difference an interior-node field (Dirichlet padded) to midpoints.

    out[j] = (w_{j+1} - w_j)/h with w_0 = w_N = 0; exact on affine data that
    vanishes at the boundary.
    """
    w = np.asarray(w)
    if w.shape[-1] != g.n_interior:
        raise ValidationError(f"node field must have {g.n_interior} interior values")
    padded = np.zeros(w.shape[:-1] + (g.n_cells + 1,), dtype=w.dtype)
    padded[..., 1:-1] = w
    return np.diff(padded, axis=-1) / g.h


def div_mid_to_node(sigma: np.ndarray, g: GridSpec) -> np.ndarray:
    """Difference a midpoint field back to interior nodes.

    out[j] = (sigma_{j+1/2} - sigma_{j-1/2})/h for j = 1..N-1; the exact
    negative adjoint of diff_node_to_mid under the h-weighted sums.
    """
    sigma = np.asarray(sigma)
    if sigma.shape[-1] != g.n_cells:
        raise ValidationError(f"midpoint field must have {g.n_cells} values")
    return np.diff(sigma, axis=-1) / g.h


def theta_flux(theta: np.ndarray, bc: ThetaBC, g: GridSpec) -> np.ndarray:
    """Node flux of a midpoint temperature field (N+1 values).

    Interior: flux[j] = (theta_{j+1/2} - theta_{j-1/2})/h.  Neumann walls set
    flux[0] = flux[N] = 0; Dirichlet walls use a ghost value 0 half a cell
    away: flux[0] = theta_{1/2}/(h/2), flux[N] = -theta_{N-1/2}/(h/2).
    """
    theta = np.asarray(theta)
    if theta.shape[-1] != g.n_cells:
        raise ValidationError(f"theta must have {g.n_cells} midpoint values")
    flux = np.zeros(theta.shape[:-1] + (g.n_cells + 1,), dtype=theta.dtype)
    flux[..., 1:-1] = np.diff(theta, axis=-1) / g.h
    if ThetaBC(bc) is ThetaBC.DIRICHLET:
        flux[..., 0] = theta[..., 0] / (g.h / 2.0)
        flux[..., -1] = -theta[..., -1] / (g.h / 2.0)
    return flux


def flux_divergence(flux: np.ndarray, g: GridSpec) -> np.ndarray:
    """Midpoint divergence of a node flux: out[j] = (flux[j+1] - flux[j])/h."""
    flux = np.asarray(flux)
    if flux.shape[-1] != g.n_cells + 1:
        raise ValidationError(f"flux must have {g.n_cells + 1} node values")
    return np.diff(flux, axis=-1) / g.h


def flux_norm_sq(flux: np.ndarray, g: GridSpec) -> float:
    """Discrete squared L2 norm of a node flux, half-weighted at the walls.

    This is the norm for which the midpoint heat operator satisfies the exact
    energy identity Re<kappa*divflux(theta), theta> = -kappa*flux_norm_sq for
    both boundary modes.
    """
    flux = np.asarray(flux)
    a2 = np.abs(flux) ** 2
    return float(g.h * (np.sum(a2[..., 1:-1]) + 0.5 * (a2[..., 0] + a2[..., -1])))


def h_inner(U1: StateVector, U2: StateVector, p: PhysicalParams, g: GridSpec) -> complex:
    """Weighted energy inner product of two states.

    h*sum_mids alpha*(Du1)(Du2)* + h*sum_int v1 v2* + h*sum_mids th1 th2*
      + xi*h*d_rho*sum_{j,k} z1 z2*
    with D the node-to-midpoint difference; the delay integral uses the
    rectangle rule on the stored levels k = 1..M.
    """
    U1.validate(g)
    U2.validate(g)
    du1 = diff_node_to_mid(U1.u, g)
    du2 = diff_node_to_mid(U2.u, g)
    value = (
        g.h * p.alpha * np.vdot(du2, du1)
        + g.h * np.vdot(U2.v, U1.v)
        + g.h * np.vdot(U2.theta, U1.theta)
        + p.xi * g.h * g.d_rho * np.vdot(U2.z, U1.z)
    )
    return complex(value)


def h_norm_sq(U: StateVector, p: PhysicalParams, g: GridSpec) -> float:
    """Squared energy norm; real and nonnegative by construction."""
    return float(h_inner(U, U, p, g).real)


def _diff_matrix(g: GridSpec) -> sp.csr_matrix:
    """Matrix of diff_node_to_mid: (N, N-1), Dirichlet padding built in."""
    n = g.n_cells
    return (
        sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, -1], shape=(n, n - 1)) / g.h
    ).tocsr()


def gram_matrix(p: PhysicalParams, g: GridSpec) -> sp.csr_matrix:
    """Gram matrix W of h_inner in layout coordinates: <U1,U2> = U2^H W U1.

    Block diagonal: alpha*h*D^T D on u, h*I on v, xi*h*d_rho*I on z, h*I on
    theta.  Symmetric positive definite.
    """
    n, m = g.n_cells, g.n_rho
    d = _diff_matrix(g)
    w_u = (p.alpha * g.h) * (d.T @ d)
    w_v = sp.identity(n - 1) * g.h
    w_z = sp.identity(n * m) * (p.xi * g.h * g.d_rho)
    w_th = sp.identity(n) * g.h
    return sp.block_diag([w_u, w_v, w_z, w_th], format="csr")


_SNAPSHOT_MAGIC = b"TDSV"


def save_snapshot(path: str | Path, U: StateVector, g: GridSpec, fmt: str = "json") -> None:
    """Write a state snapshot: flat layout order plus an (N, M, ell) header.

    fmt="json" stores interleaved re/im decimals; fmt="binary" stores the
    header followed by little-endian complex128 (interleaved 64-bit floats).
    """
    U.validate(g)
    flat = U.to_flat()
    path = Path(path)
    if fmt == "json":
        interleaved = np.column_stack([flat.real, flat.imag]).reshape(-1)
        doc = {
            "layout_version": StateVector.LAYOUT_VERSION,
            "n_cells": g.n_cells,
            "n_rho": g.n_rho,
            "ell": g.ell,
            "data": [float(x) for x in interleaved],
        }
        path.write_text(json.dumps(doc) + "\n")
    elif fmt == "binary":
        header = struct.pack(
            "<4sIIId", _SNAPSHOT_MAGIC, StateVector.LAYOUT_VERSION, g.n_cells, g.n_rho, g.ell
        )
        path.write_bytes(header + flat.astype("<c16").tobytes())
    else:
        raise ValidationError(f"unknown snapshot format {fmt!r}")


def load_snapshot(path: str | Path) -> tuple[StateVector, GridSpec]:
    """Read a snapshot written by save_snapshot (either format)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] == _SNAPSHOT_MAGIC:
        header_size = struct.calcsize("<4sIIId")
        _, version, n, m, ell = struct.unpack("<4sIIId", raw[:header_size])
        if version != StateVector.LAYOUT_VERSION:
            raise ValidationError(f"unsupported snapshot layout version {version}")
        flat = np.frombuffer(raw[header_size:], dtype="<c16")
    else:
        doc = json.loads(raw.decode())
        version = doc.get("layout_version")
        if version != StateVector.LAYOUT_VERSION:
            raise ValidationError(f"unsupported snapshot layout version {version}")
        n, m, ell = int(doc["n_cells"]), int(doc["n_rho"]), float(doc["ell"])
        interleaved = np.asarray(doc["data"], dtype=float)
        flat = interleaved[0::2] + 1j * interleaved[1::2]
    g = build_grid(n, m, ell)
    return StateVector.from_flat(flat, g), g
