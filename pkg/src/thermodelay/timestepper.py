"""Time integration of the first-order system, a history-buffer integrator
for the original delayed form, energy tracking, and decay-rate fitting.

Two independent routes integrate the same physics: `simulate` steps the
autonomous delay-transport formulation U' = A U, while `simulate_history`
integrates the delayed wave/heat system directly against a ring buffer of
past strains.  Their agreement (up to the O(d_rho) + O(dt) discretization
gap) is one of the package's main cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coercivity import PhysicalParams
from .errors import NoDecayDataError, SingularSystemError, ValidationError
from .generator import GeneratorMatrix, _diff_matrix, _div_matrix, _theta_operator, apply, assemble
from .grid import (
    GridSpec,
    StateVector,
    ThetaBC,
    diff_node_to_mid,
    flux_norm_sq,
    h_inner,
    theta_flux,
)

__all__ = [
    "Scheme",
    "InitialData",
    "Trajectory",
    "DecayFit",
    "LinearPropagator",
    "Stepper",
    "step",
    "simulate",
    "simulate_history",
    "energy",
    "dissipation_residual",
    "fit_decay",
]


class Scheme(str, Enum):
    """Time-stepping scheme for the stiff linear system."""

    IMPLICIT_EULER = "implicit_euler"
    TRAPEZOIDAL = "trapezoidal"


class LinearPropagator:
    """One-step propagator for x' = M x with a reusable factorization.

    implicit_euler solves (I - dt*M) x+ = x; trapezoidal solves
    (I - dt/2*M) x+ = (I + dt/2*M) x.  Works for dense arrays and sparse
    matrices alike; the factorization is computed once at construction.
    """

    def __init__(self, mat, dt: float, scheme: Scheme = Scheme.IMPLICIT_EULER):
        if not dt > 0:
            raise ValidationError(f"dt must be > 0, got {dt}")
        scheme = Scheme(scheme)
        self.dt = float(dt)
        self.scheme = scheme
        sparse = sp.issparse(mat)
        n = mat.shape[0]
        half = 0.5 * self.dt
        self._real_factor = not np.iscomplexobj(mat)
        try:
            if sparse:
                eye = sp.identity(n, dtype=mat.dtype, format="csc")
                if scheme is Scheme.IMPLICIT_EULER:
                    self._rhs = None
                    self._solve = spla.splu((eye - self.dt * mat).tocsc()).solve
                else:
                    self._rhs = (eye + half * mat).tocsr()
                    self._solve = spla.splu((eye - half * mat).tocsc()).solve
            else:
                mat = np.asarray(mat)
                eye = np.eye(n, dtype=mat.dtype)
                if scheme is Scheme.IMPLICIT_EULER:
                    self._rhs = None
                    factor = sla.lu_factor(eye - self.dt * mat)
                else:
                    self._rhs = eye + half * mat
                    factor = sla.lu_factor(eye - half * mat)
                self._solve = lambda x: sla.lu_solve(factor, x)
        except (RuntimeError, sla.LinAlgError) as exc:
            raise SingularSystemError(f"singular step matrix for dt = {dt}: {exc}") from exc

    def step(self, x: np.ndarray) -> np.ndarray:
        rhs = x if self._rhs is None else self._rhs @ x
        if self._real_factor and np.iscomplexobj(rhs):
            # A real factorization solves real and imaginary parts separately.
            out = self._solve(np.ascontiguousarray(rhs.real)).astype(complex)
            if np.any(rhs.imag):
                out += 1j * self._solve(np.ascontiguousarray(rhs.imag))
        else:
            out = self._solve(rhs)
        if not np.all(np.isfinite(out)):
            raise SingularSystemError(
                f"step produced nonfinite values (singular step matrix, dt = {self.dt})"
            )
        return out


class Stepper:
    """LinearPropagator bound to an assembled generator's state layout."""

    def __init__(self, A: GeneratorMatrix, dt: float, scheme: Scheme = Scheme.IMPLICIT_EULER):
        self.A = A
        self._prop = LinearPropagator(A.matrix, dt, scheme)

    def step(self, U: StateVector) -> StateVector:
        U.validate(self.A.grid)
        return StateVector.from_flat(self._prop.step(U.to_flat()), self.A.grid)


def step(
    A: GeneratorMatrix, U: StateVector, dt: float, scheme: Scheme = Scheme.IMPLICIT_EULER
) -> StateVector:
    """Single time step; builds a fresh factorization (loops should reuse a Stepper)."""
    return Stepper(A, dt, scheme).step(U)


@dataclass(frozen=True)
class InitialData:
    """Initial state plus strain history for the delayed problem.

    Presets:
      sine_mode(k)       u0 = sin(k*pi*x/ell), u1 = 0, theta0 = cos(k*pi*x/ell)
                         mean-subtracted on the grid, constant strain history.
      random_smooth(s)   seeded low-mode combination with 1/k^2 spectral decay,
                         constant strain history.
      custom(...)        explicit arrays; the delay levels double as the
                         sampled strain history.
    Preset histories are constant in the time argument (the discrete initial
    strain); time-dependent histories enter through custom delay levels.
    """

    kind: str
    mode: int = 1
    seed: int | None = None
    u0: np.ndarray | None = None
    u1: np.ndarray | None = None
    theta0: np.ndarray | None = None
    z0: np.ndarray | None = None

    @classmethod
    def sine_mode(cls, k: int = 1) -> "InitialData":
        if k < 1:
            raise ValidationError(f"sine mode index must be >= 1, got {k}")
        return cls(kind="sine", mode=int(k))

    @classmethod
    def random_smooth(cls, seed: int) -> "InitialData":
        if seed is None:
            raise ValidationError("random_smooth initial data requires a seed")
        return cls(kind="random", seed=int(seed))

    @classmethod
    def custom(
        cls,
        u0: np.ndarray,
        u1: np.ndarray,
        theta0: np.ndarray,
        z0: np.ndarray,
    ) -> "InitialData":
        return cls(
            kind="custom",
            u0=np.asarray(u0, dtype=complex),
            u1=np.asarray(u1, dtype=complex),
            theta0=np.asarray(theta0, dtype=complex),
            z0=np.asarray(z0, dtype=complex),
        )

    def _fields(self, g: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x_int = g.interior_coords()
        x_mid = g.mid_coords()
        if self.kind == "sine":
            k = self.mode
            u0 = np.sin(k * np.pi * x_int / g.ell).astype(complex)
            u1 = np.zeros_like(u0)
            theta0 = np.cos(k * np.pi * x_mid / g.ell).astype(complex)
        elif self.kind == "random":
            if self.seed is None:
                raise ValidationError("random_smooth initial data requires a seed")
            rng = np.random.default_rng(self.seed)
            u0 = np.zeros(g.n_interior, dtype=complex)
            u1 = np.zeros(g.n_interior, dtype=complex)
            theta0 = np.zeros(g.n_cells, dtype=complex)
            for k in range(1, 5):
                a, b, c = rng.standard_normal(3) / k**2
                u0 += a * np.sin(k * np.pi * x_int / g.ell)
                u1 += b * np.sin(k * np.pi * x_int / g.ell)
                theta0 += c * np.cos(k * np.pi * x_mid / g.ell)
        elif self.kind == "custom":
            u0, u1, theta0 = self.u0, self.u1, self.theta0
            if u0.shape != (g.n_interior,) or u1.shape != (g.n_interior,):
                raise ValidationError(f"custom u0, u1 must have shape ({g.n_interior},)")
            if theta0.shape != (g.n_cells,):
                raise ValidationError(f"custom theta0 must have shape ({g.n_cells},)")
        else:
            raise ValidationError(f"unknown initial-data kind {self.kind!r}")
        theta0 = theta0 - np.mean(theta0)
        return u0, u1, theta0

    def state(self, g: GridSpec) -> StateVector:
        """Materialize the discrete initial state on a grid."""
        u0, u1, theta0 = self._fields(g)
        du0 = diff_node_to_mid(u0, g)
        if self.kind == "custom":
            z0 = self.z0
            if z0.shape != (g.n_cells, g.n_rho):
                raise ValidationError(f"custom z0 must have shape ({g.n_cells}, {g.n_rho})")
        else:
            z0 = np.tile(du0[:, None], (1, g.n_rho))
        return StateVector(u=u0, v=u1, z=z0.copy(), theta=theta0)

    def strain_history(self, g: GridSpec, tau: float) -> Callable[[float], np.ndarray]:
        """Strain history t -> midpoint field for t <= 0.

        Presets return the constant initial strain; custom data interpolates
        the delay levels linearly in time (level k sits at t = -tau*k/M) and
        clamps beyond -tau.
        """
        state0 = self.state(g)
        du0 = diff_node_to_mid(state0.u, g)
        if self.kind != "custom":
            return lambda t: du0.copy()
        knots = -tau * g.rho_levels()  # strictly decreasing: -tau/M .. -tau
        times = np.concatenate([[0.0], knots])
        values = np.concatenate([du0[None, :], state0.z.T], axis=0)

        def history(t: float) -> np.ndarray:
            if t >= 0.0:
                return values[0].copy()
            if t <= times[-1]:
                return values[-1].copy()
            idx = int(np.searchsorted(-times, -t, side="right")) - 1
            t0, t1 = times[idx], times[idx + 1]
            w = (t - t0) / (t1 - t0)
            return (1.0 - w) * values[idx] + w * values[idx + 1]

        return history


@dataclass
class Trajectory:
    """Sampled energy history of one run, with optional state snapshots."""

    times: np.ndarray
    energies: np.ndarray
    snapshots: list[tuple[float, StateVector]] = field(default_factory=list)


@dataclass(frozen=True)
class DecayFit:
    """Exponential envelope ||U(t)|| ~ c_fit * exp(-w_fit * t) from an energy trace."""

    c_fit: float
    w_fit: float
    r_squared: float
    window: tuple[float, float]


def energy(U: StateVector, p: PhysicalParams, g: GridSpec) -> float:
    """Half the squared energy norm; nonnegative."""
    return 0.5 * h_inner(U, U, p, g).real


def dissipation_residual(
    A: GeneratorMatrix, U: StateVector, p: PhysicalParams, g: GridSpec
) -> float:
    """Slack in the energy dissipation inequality at a state.

    Returns Re<AU, U> - [ -beta/2*||Dv||^2 + m*||Du||^2 - kappa*||flux||^2 ]
    (h-weighted discrete norms).  Nonpositive, up to rounding, for every
    state and parameter set: the upwind delay channel only adds dissipation.
    """
    lhs = h_inner(apply(A, U), U, p, g).real
    du = diff_node_to_mid(U.u, g)
    dv = diff_node_to_mid(U.v, g)
    flux = theta_flux(U.theta, A.theta_bc, g)
    bound = (
        -0.5 * p.beta * g.h * float(np.sum(np.abs(dv) ** 2))
        + p.m * g.h * float(np.sum(np.abs(du) ** 2))
        - p.kappa * flux_norm_sq(flux, g)
    )
    return lhs - bound


def _sample_steps(n_steps: int, stride: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, stride)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def simulate(
    p: PhysicalParams,
    g: GridSpec,
    init: InitialData,
    T: float,
    dt: float,
    scheme: Scheme = Scheme.IMPLICIT_EULER,
    sample_stride: int = 1,
    theta_bc: ThetaBC = ThetaBC.NEUMANN,
    snapshot_stride: int | None = None,
    snapshot_times: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate U' = A U to time T, recording the energy along the way.

    The generator is assembled and factorized once.  Samples land every
    sample_stride steps (plus the initial and final instants); snapshots are
    taken every snapshot_stride steps and/or at the steps nearest the
    requested snapshot_times.  Deterministic for fixed inputs.
    """
    if not T > 0:
        raise ValidationError(f"T must be > 0, got {T}")
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if sample_stride < 1:
        raise ValidationError(f"sample_stride must be >= 1, got {sample_stride}")
    n_steps = max(1, int(round(T / dt)))
    A = assemble(p, g, theta_bc)
    stepper = Stepper(A, dt, scheme)
    U = init.state(g)

    sample_at = set(_sample_steps(n_steps, sample_stride).tolist())
    snap_at: set[int] = set()
    if snapshot_stride is not None:
        if snapshot_stride < 1:
            raise ValidationError(f"snapshot_stride must be >= 1, got {snapshot_stride}")
        snap_at.update(_sample_steps(n_steps, snapshot_stride).tolist())
    if snapshot_times is not None:
        for t_req in snapshot_times:
            snap_at.add(int(np.clip(round(t_req / dt), 0, n_steps)))

    times, energies = [], []
    snapshots: list[tuple[float, StateVector]] = []

    def record(k: int, state: StateVector) -> None:
        t = k * dt
        if k in sample_at:
            times.append(t)
            energies.append(energy(state, p, g))
        if k in snap_at:
            snapshots.append((t, state.copy()))

    record(0, U)
    for k in range(1, n_steps + 1):
        U = stepper.step(U)
        record(k, U)
    return Trajectory(times=np.array(times), energies=np.array(energies), snapshots=snapshots)


class _StrainRing:
    """Ring buffer of past midpoint strains, one slot per time step.

    Holds lags 0..L steps (capacity L+1); fractional lags interpolate
    linearly between neighboring slots.
    """

    def __init__(self, lag_steps: int, n_mid: int):
        self.L = lag_steps
        self._buf = np.zeros((lag_steps + 1, n_mid), dtype=complex)
        self._step = 0

    def prefill(self, history: Callable[[float], np.ndarray], dt: float, du0: np.ndarray) -> None:
        # Slot for step s (s <= 0) holds the history strain at time s*dt.
        for s in range(-self.L, 0):
            self._buf[s % (self.L + 1)] = history(s * dt)
        self._buf[0] = du0
        self._step = 0

    def push(self, du: np.ndarray) -> None:
        self._step += 1
        self._buf[self._step % (self.L + 1)] = du

    def read_future_lag(self) -> np.ndarray:
        """Strain at exact lag L steps behind the *next* step."""
        target = self._step + 1 - self.L
        return self._buf[target % (self.L + 1)]

    def read_lag(self, lag_steps: float) -> np.ndarray:
        """Strain lag_steps behind the current step (0 <= lag_steps <= L)."""
        if lag_steps < 0 or lag_steps > self.L:
            raise ValidationError(f"lag {lag_steps} outside buffer range [0, {self.L}]")
        lo = math.floor(lag_steps)
        frac = lag_steps - lo
        a = self._buf[(self._step - lo) % (self.L + 1)]
        if frac == 0.0:
            return a.copy()
        b = self._buf[(self._step - lo - 1) % (self.L + 1)]
        return (1.0 - frac) * a + frac * b


def _instantaneous_operator(p: PhysicalParams, g: GridSpec, theta_bc: ThetaBC) -> sp.csr_matrix:
    """Generator of the undelayed (u, v, theta) dynamics, delayed stress removed."""
    ni = g.n_interior
    d_mat = _diff_matrix(g)
    div_mat = _div_matrix(g)
    lap_dir = (div_mat @ d_mat).tocsr()
    theta_op = _theta_operator(g, theta_bc, p.kappa)
    # u feeds nothing instantaneously (its stress arrives delayed), so its
    # column needs an explicit zero block for the shape to be inferable.
    blocks = [
        [sp.csr_matrix((ni, ni)), sp.identity(ni, format="csr"), None],
        [None, p.beta * lap_dir, -p.gamma * div_mat],
        [None, -p.gamma * d_mat, theta_op],
    ]
    return sp.bmat(blocks, format="csr", dtype=float)


def simulate_history(
    p: PhysicalParams,
    g: GridSpec,
    init: InitialData,
    T: float,
    dt: float,
    theta_bc: ThetaBC = ThetaBC.NEUMANN,
    sample_stride: int = 1,
    snapshot_stride: int | None = None,
) -> Trajectory:
    """Integrate the original delayed form against a strain ring buffer.

    The delayed stress alpha*u_x(., t - tau) is read from stored history
    (known data, treated explicitly); the stiff instantaneous terms are
    implicit (backward Euler).  dt must divide tau so the buffer head lands
    exactly on the delay; reported energies and snapshots reconstruct the
    delay levels from the buffer so both formulations live on the same state
    space.
    """
    if not T > 0 or not dt > 0:
        raise ValidationError(f"need T > 0 and dt > 0, got T = {T}, dt = {dt}")
    ratio = p.tau / dt
    L = int(round(ratio))
    if L < 1 or abs(ratio - L) > 1e-12 * max(1.0, ratio):
        raise ValidationError(
            f"dt must divide tau (tau/dt = {ratio!r}); align the buffer before integrating"
        )
    if sample_stride < 1:
        raise ValidationError(f"sample_stride must be >= 1, got {sample_stride}")
    n_steps = max(1, int(round(T / dt)))
    ni = g.n_interior
    n = g.n_cells

    a_inst = _instantaneous_operator(p, g, theta_bc)
    prop = LinearPropagator(a_inst, dt, Scheme.IMPLICIT_EULER)
    div_mat = _div_matrix(g)

    state0 = init.state(g)
    x = np.concatenate([state0.u, state0.v, state0.theta])
    ring = _StrainRing(L, n)
    ring.prefill(init.strain_history(g, p.tau), dt, diff_node_to_mid(state0.u, g))

    rho_lags = L * g.rho_levels()  # lag in steps of each stored delay level

    def reconstruct(t_state: np.ndarray) -> StateVector:
        z = np.empty((n, g.n_rho), dtype=complex)
        for k in range(g.n_rho):
            z[:, k] = ring.read_lag(float(rho_lags[k]))
        return StateVector(
            u=t_state[:ni].copy(),
            v=t_state[ni : 2 * ni].copy(),
            z=z,
            theta=t_state[2 * ni :].copy(),
        )

    sample_at = set(_sample_steps(n_steps, sample_stride).tolist())
    snap_at: set[int] = set()
    if snapshot_stride is not None:
        if snapshot_stride < 1:
            raise ValidationError(f"snapshot_stride must be >= 1, got {snapshot_stride}")
        snap_at.update(_sample_steps(n_steps, snapshot_stride).tolist())

    times, energies = [], []
    snapshots: list[tuple[float, StateVector]] = []

    def record(k: int, t_state: np.ndarray) -> None:
        if k in sample_at or k in snap_at:
            U = reconstruct(t_state)
            if k in sample_at:
                times.append(k * dt)
                energies.append(energy(U, p, g))
            if k in snap_at:
                snapshots.append((k * dt, U))

    record(0, x)
    forcing = np.zeros(2 * ni + n, dtype=complex)
    for k in range(1, n_steps + 1):
        delayed = ring.read_future_lag()
        forcing[ni : 2 * ni] = p.alpha * (div_mat @ delayed)
        x = prop.step(x + dt * forcing)
        ring.push(diff_node_to_mid(x[:ni], g))
        record(k, x)
    return Trajectory(times=np.array(times), energies=np.array(energies), snapshots=snapshots)


def fit_decay(traj: Trajectory) -> DecayFit:
    """Least-squares exponential envelope of an energy trace.

    Fits ln E(t) linearly on the window [T/2, last positive sample]; the
    norm-decay rate is half the energy log-slope and c_fit is the fitted
    envelope amplitude at t = 0.  Requires at least 10 positive samples in
    the window; nonpositive energies are excluded from the log.
    """
    times = np.asarray(traj.times, dtype=float)
    energies = np.asarray(traj.energies, dtype=float)
    if times.size == 0 or not np.any(energies > 0):
        raise NoDecayDataError("energy trace carries no positive samples to fit")
    t_end = times[-1]
    t_last_pos = times[energies > 0][-1]
    window = (0.5 * t_end, float(t_last_pos))
    sel = (times >= window[0]) & (times <= window[1]) & (energies > 0)
    if int(np.count_nonzero(sel)) < 10:
        raise NoDecayDataError(
            f"only {int(np.count_nonzero(sel))} positive samples in fit window {window}; need >= 10"
        )
    t_fit = times[sel]
    log_e = np.log(energies[sel])
    slope, intercept = np.polyfit(t_fit, log_e, 1)
    fitted = slope * t_fit + intercept
    ss_res = float(np.sum((log_e - fitted) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(
        c_fit=float(np.exp(0.5 * intercept)),
        w_fit=float(-0.5 * slope),
        r_squared=r_squared,
        window=window,
    )
