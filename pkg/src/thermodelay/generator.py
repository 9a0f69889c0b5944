"""Finite-dimensional generator of the coupled wave/heat/delay-transport
system, plus direct and reduced resolvent solves.

State layout (see grid.StateVector): [u | v | z (j-major, k-minor) | theta].
Row structure:

    u'     = v
    v'     = div( alpha*z(.,1) + beta*Dv ) - gamma*flux_int(theta)
    z'_jk  = -(z_jk - z_{j,k-1}) / (tau*d_rho),   z_j0 := (Du)_j   (upwind)
    theta' = kappa*flux_divergence(theta) - gamma*Dv

The delayed stress reads the stored top level z(.,1) directly; the inflow
constraint z(.,0) = u_x is baked into the k = 1 stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lapack

from .coercivity import PhysicalParams
from .errors import DimensionGuardError, SingularSystemError, ValidationError
from .grid import (
    GridSpec,
    StateVector,
    ThetaBC,
    diff_node_to_mid,
    div_mid_to_node,
    flux_divergence,
    gram_matrix,
    theta_flux,
)

__all__ = [
    "GeneratorMatrix",
    "assemble",
    "apply",
    "apply_blocks",
    "resolvent_solve",
    "transport_resolvent",
    "transport_closed_form",
    "resolvent_solve_reduced",
    "dump_coordinate",
    "DENSE_DIMENSION_LIMIT",
    "RESOLVENT_RTOL",
]

# Dense factorizations and eigensolves refuse above this dimension;
# matrix-vector products and sparse factorizations remain available.
DENSE_DIMENSION_LIMIT = 6000

# Advertised relative residual of resolvent solves, in the energy norm.
RESOLVENT_RTOL = 1e-10

# Reciprocal-condition floor below which a factorization counts as singular.
_RCOND_FLOOR = 1e-14


@dataclass(frozen=True)
class Layout:
    """Index map of the four state blocks inside the flat layout."""

    n_cells: int
    n_rho: int

    @property
    def dim(self) -> int:
        n, m = self.n_cells, self.n_rho
        return 2 * (n - 1) + n * m + n

    @property
    def u(self) -> slice:
        return slice(0, self.n_cells - 1)

    @property
    def v(self) -> slice:
        ni = self.n_cells - 1
        return slice(ni, 2 * ni)

    @property
    def z(self) -> slice:
        ni = self.n_cells - 1
        return slice(2 * ni, 2 * ni + self.n_cells * self.n_rho)

    @property
    def theta(self) -> slice:
        ni = self.n_cells - 1
        start = 2 * ni + self.n_cells * self.n_rho
        return slice(start, start + self.n_cells)


def _diff_matrix(g: GridSpec) -> sp.csr_matrix:
    """Node-to-midpoint difference with Dirichlet padding: (N, N-1)."""
    n = g.n_cells
    return (sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, -1], shape=(n, n - 1)) / g.h).tocsr()


def _div_matrix(g: GridSpec) -> sp.csr_matrix:
    """Midpoint-to-interior-node difference: (N-1, N).

    Also the interior part of the temperature flux (same stencil).
    """
    n = g.n_cells
    ni = n - 1
    return (sp.diags([-np.ones(ni), np.ones(ni)], [0, 1], shape=(ni, n)) / g.h).tocsr()


def _theta_operator(g: GridSpec, bc: ThetaBC, kappa: float) -> sp.csr_matrix:
    """kappa * flux-divergence operator on midpoint temperatures: (N, N)."""
    n = g.n_cells
    flux = sp.lil_matrix((n + 1, n))
    for j in range(1, n):
        flux[j, j - 1] = -1.0 / g.h
        flux[j, j] = 1.0 / g.h
    if ThetaBC(bc) is ThetaBC.DIRICHLET:
        flux[0, 0] = 2.0 / g.h
        flux[n, n - 1] = -2.0 / g.h
    fdiv = sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1)) / g.h
    return (kappa * (fdiv @ flux.tocsr())).tocsr()


@dataclass(eq=False)
class GeneratorMatrix:
    """Assembled generator with its grid/parameter provenance.

    Immutable after assembly; safe to share across concurrent readers.  The
    sparse matrix is the primary representation; `dense` materializes it for
    factorizations and eigensolves below DENSE_DIMENSION_LIMIT.
    """

    params: PhysicalParams
    grid: GridSpec
    theta_bc: ThetaBC
    layout: Layout
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.layout.dim

    @cached_property
    def dense(self) -> np.ndarray:
        if self.dimension > DENSE_DIMENSION_LIMIT:
            raise DimensionGuardError(
                f"dense representation refused at dimension {self.dimension} "
                f"(limit {DENSE_DIMENSION_LIMIT})"
            )
        return self.matrix.toarray()

    @cached_property
    def gram(self) -> sp.csr_matrix:
        """Gram matrix of the energy inner product in layout coordinates."""
        return gram_matrix(self.params, self.grid)

    def h_norm_flat(self, x: np.ndarray) -> float:
        """Energy norm of a flat layout vector."""
        return float(np.sqrt(np.vdot(x, self.gram @ x).real))


def assemble(p: PhysicalParams, g: GridSpec, theta_bc: ThetaBC = ThetaBC.NEUMANN) -> GeneratorMatrix:
    """Assemble the sparse generator for the given parameters and grid."""
    theta_bc = ThetaBC(theta_bc)
    n, m = g.n_cells, g.n_rho
    ni = n - 1
    c = 1.0 / (p.tau * g.d_rho)

    d_mat = _diff_matrix(g)
    div_mat = _div_matrix(g)
    lap_dir = (div_mat @ d_mat).tocsr()
    theta_op = _theta_operator(g, theta_bc, p.kappa)

    # v-row contribution of the top delay level: alpha * div(z(.,1)).
    top = sp.csr_matrix(
        (np.ones(n), (np.arange(n), np.arange(n) * m + (m - 1))), shape=(n, n * m)
    )
    v_z = (p.alpha * (div_mat @ top)).tocsr()

    # Upwind transport in rho: bidiagonal per midpoint, inflow from Du.
    k_block = c * sp.diags([-np.ones(m), np.ones(m - 1)], [0, -1], shape=(m, m))
    z_z = sp.kron(sp.identity(n), k_block, format="csr")
    e1 = sp.csr_matrix((np.ones(1), (np.zeros(1, dtype=int), np.zeros(1, dtype=int))), shape=(m, 1))
    z_u = (c * sp.kron(d_mat, e1)).tocsr()

    ident_v = sp.identity(ni, format="csr")
    blocks = [
        [None, ident_v, None, None],
        [None, p.beta * lap_dir, v_z, -p.gamma * div_mat],
        [z_u, None, z_z, None],
        [None, -p.gamma * d_mat, None, theta_op],
    ]
    matrix = sp.bmat(blocks, format="csr", dtype=float)
    return GeneratorMatrix(params=p, grid=g, theta_bc=theta_bc, layout=Layout(n, m), matrix=matrix)


def apply(A: GeneratorMatrix, U: StateVector) -> StateVector:
    """Matrix-vector action of the generator."""
    U.validate(A.grid)
    return StateVector.from_flat(A.matrix @ U.to_flat(), A.grid)


def apply_blocks(p: PhysicalParams, g: GridSpec, theta_bc: ThetaBC, U: StateVector) -> StateVector:
    """Matrix-free action built directly from the grid operators.

    Agrees with apply() on the assembled matrix to rounding; kept as the
    second route of the dual-path consistency check and as the large-system
    fallback.
    """
    U.validate(g)
    theta_bc = ThetaBC(theta_bc)
    du = diff_node_to_mid(U.u, g)
    dv = diff_node_to_mid(U.v, g)
    flux = theta_flux(U.theta, theta_bc, g)
    sigma = p.alpha * U.z[:, -1] + p.beta * dv

    dot_u = U.v.copy()
    dot_v = div_mid_to_node(sigma, g) - p.gamma * flux[1:-1]
    c = 1.0 / (p.tau * g.d_rho)
    prev = np.concatenate([du[:, None], U.z[:, :-1]], axis=1)
    dot_z = -c * (U.z - prev)
    dot_theta = p.kappa * flux_divergence(flux, g) - p.gamma * dv
    return StateVector(u=dot_u, v=dot_v, z=dot_z, theta=dot_theta)


def _check_finite_lambda(lam: complex) -> complex:
    lam = complex(lam)
    if not (np.isfinite(lam.real) and np.isfinite(lam.imag)):
        raise ValidationError(f"lambda must be finite, got {lam}")
    return lam


def resolvent_solve(A: GeneratorMatrix, lam: complex, F: StateVector) -> StateVector:
    """Solve (lam*I - A) U = F by a direct complex LU with partial pivoting.

    Guarantees an energy-norm residual <= RESOLVENT_RTOL * ||F|| (one step of
    iterative refinement is applied if needed); raises SingularSystemError,
    carrying the reciprocal-condition estimate, when lam is numerically in
    the spectrum.
    """
    lam = _check_finite_lambda(lam)
    F.validate(A.grid)
    f = F.to_flat()
    norm_f = A.h_norm_flat(f)
    if norm_f == 0.0:
        return StateVector.zeros(A.grid)

    n = A.dimension
    if n <= DENSE_DIMENSION_LIMIT:
        mat = lam * np.eye(n, dtype=complex) - A.dense
        anorm = np.linalg.norm(mat, 1)
        lu, piv = sla.lu_factor(mat)
        rcond, info = lapack.zgecon(lu, anorm, norm="1")
        if info != 0 or not np.isfinite(rcond) or rcond < _RCOND_FLOOR:
            raise SingularSystemError(
                f"(lam*I - A) numerically singular at lam = {lam} (rcond = {rcond:.3e})",
                rcond=float(rcond),
            )
        solve = lambda rhs: sla.lu_solve((lu, piv), rhs)  # noqa: E731
        rcond_val = float(rcond)
    else:
        op = (lam * sp.identity(n, dtype=complex, format="csc") - A.matrix.astype(complex)).tocsc()
        try:
            factor = spla.splu(op)
        except RuntimeError as exc:
            raise SingularSystemError(
                f"(lam*I - A) numerically singular at lam = {lam}: {exc}", rcond=None
            ) from exc
        solve = factor.solve
        rcond_val = None

    x = solve(f)
    residual = f - (lam * x - A.matrix @ x)
    res_norm = A.h_norm_flat(residual)
    if res_norm > 0.5 * RESOLVENT_RTOL * norm_f:
        x = x + solve(residual)
        residual = f - (lam * x - A.matrix @ x)
        res_norm = A.h_norm_flat(residual)
    if not np.all(np.isfinite(x)) or res_norm > RESOLVENT_RTOL * norm_f:
        raise SingularSystemError(
            f"resolvent solve at lam = {lam} failed the residual contract: "
            f"{res_norm:.3e} > {RESOLVENT_RTOL:.0e} * {norm_f:.3e}",
            rcond=rcond_val,
        )
    return StateVector.from_flat(x, A.grid)


def transport_resolvent(
    lam: complex,
    inflow: np.ndarray,
    rhs_p: np.ndarray,
    g: GridSpec,
    tau: float,
) -> np.ndarray:
    """Solve the upwind delay-channel resolvent rows by forward substitution.

    (lam + c) z_k - c z_{k-1} = p_k with c = 1/(tau*d_rho) and z_0 = inflow;
    returns the (N, M) field of stored levels.  Solvable whenever
    lam != -c (in particular for Re(lam) > -c).
    """
    lam = _check_finite_lambda(lam)
    n, m = g.n_cells, g.n_rho
    inflow = np.asarray(inflow, dtype=complex)
    rhs_p = np.asarray(rhs_p, dtype=complex)
    if inflow.shape != (n,):
        raise ValidationError(f"inflow must have shape ({n},), got {inflow.shape}")
    if rhs_p.shape != (n, m):
        raise ValidationError(f"rhs_p must have shape ({n}, {m}), got {rhs_p.shape}")
    c = 1.0 / (tau * g.d_rho)
    denom = lam + c
    if denom == 0:
        raise ValidationError(f"transport rows singular at lam = {lam} (lam + {c} = 0)")
    ratio = c / denom
    z = np.empty((n, m), dtype=complex)
    prev = inflow
    for k in range(m):
        prev = ratio * prev + rhs_p[:, k] / denom
        z[:, k] = prev
    return z


def transport_closed_form(lam: complex, tau: float, rho, inflow: np.ndarray) -> np.ndarray:
    """Continuous homogeneous transport solution e^(-lam*tau*rho) * inflow.

    rho may be a scalar or an array of levels; with an array the result has
    shape (len(rho), N).  Used as the convergence oracle for the discrete
    recurrence (rhs-free case).
    """
    lam = _check_finite_lambda(lam)
    inflow = np.asarray(inflow, dtype=complex)
    decay = np.exp(-lam * tau * np.asarray(rho, dtype=float))
    if np.ndim(decay) == 0:
        return complex(decay) * inflow
    return np.multiply.outer(decay, inflow)


def resolvent_solve_reduced(
    p: PhysicalParams,
    g: GridSpec,
    lam: complex,
    F: StateVector,
    theta_bc: ThetaBC = ThetaBC.NEUMANN,
) -> StateVector:
    """Solve (lam*I - A) U = F by Schur elimination of the v and z blocks.

    v = lam*u - F.u is eliminated algebraically, the delay channel is
    eliminated through its forward recurrence, and the remaining (u, theta)
    system is solved directly; the full state is then reconstructed.  Valid
    for Re(lam) > 0 (use resolvent_solve elsewhere); agrees with the direct
    solve to solver accuracy.
    """
    lam = _check_finite_lambda(lam)
    if not lam.real > 0:
        raise ValidationError(
            f"reduced resolvent requires Re(lam) > 0, got {lam} (use resolvent_solve)"
        )
    F.validate(g)
    theta_bc = ThetaBC(theta_bc)
    n, m = g.n_cells, g.n_rho
    ni = n - 1
    f_u, f_v, f_z, f_th = F.u, F.v, F.z, F.theta

    c = 1.0 / (p.tau * g.d_rho)
    ratio = c / (lam + c)
    r_top = ratio**m
    # Accumulated rhs contribution at the top level: sum_k ratio^(M-k) p_k/(lam+c).
    weights = ratio ** np.arange(m - 1, -1, -1) / (lam + c)
    s_top = f_z @ weights

    d_mat = _diff_matrix(g)
    div_mat = _div_matrix(g)
    lap_dir = (div_mat @ d_mat).toarray()
    theta_op = _theta_operator(g, theta_bc, p.kappa).toarray()

    a_uu = lam**2 * np.eye(ni) - (p.alpha * r_top + lam * p.beta) * lap_dir
    a_uth = p.gamma * div_mat.toarray().astype(complex)
    a_thu = lam * p.gamma * d_mat.toarray().astype(complex)
    a_thth = lam * np.eye(n) - theta_op

    reduced = np.block([[a_uu, a_uth], [a_thu, a_thth]]).astype(complex)
    rhs_u = f_v + lam * f_u - p.beta * (lap_dir @ f_u) + p.alpha * (div_mat @ s_top)
    rhs_th = f_th + p.gamma * (d_mat @ f_u)
    rhs = np.concatenate([rhs_u, rhs_th])

    lu, piv = sla.lu_factor(reduced)
    anorm = np.linalg.norm(reduced, 1)
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < _RCOND_FLOOR:
        raise SingularSystemError(
            f"reduced resolvent singular at lam = {lam} (rcond = {rcond:.3e})",
            rcond=float(rcond),
        )
    sol = sla.lu_solve((lu, piv), rhs)
    residual = rhs - reduced @ sol
    if np.linalg.norm(residual) > RESOLVENT_RTOL * max(np.linalg.norm(rhs), 1e-300):
        sol = sol + sla.lu_solve((lu, piv), residual)

    u = sol[:ni]
    theta = sol[ni:]
    v = lam * u - f_u
    z = transport_resolvent(lam, diff_node_to_mid(u, g), f_z, g, p.tau)
    return StateVector(u=u, v=v, z=z, theta=theta)


def dump_coordinate(A: GeneratorMatrix, path: str | Path) -> None:
    """Write the sparse matrix as 'row col value' lines, 17 significant digits."""
    coo = A.matrix.tocoo()
    lines = [f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row, coo.col, coo.data)]
    Path(path).write_text("\n".join(lines) + "\n")
