"""Semi-implicit time integration for the reaction-diffusion system.

One step advances every species by

    (I - dt d_i L) u_i^{new} = u_i^old + dt f_i(u^old),

i.e. diffusion implicit (unconditionally stable for the Neumann stencil),
reaction explicit at the old state.  Evaluating f at the old state is a
structural choice, not a convenience: combined with the exact discrete
conservation of L it makes linear mass identities hold step by step (for
the equal-decay skew Lotka-Volterra family, total mass is multiplied by
exactly 1 - tau dt per accepted step, up to solve rounding).

The implicit matrix is tridiagonal, symmetric up to the Neumann boundary
rows, and strictly diagonally dominant, so the Thomas elimination below
never needs pivoting and its residual stays at rounding level.

Positivity is enforced by reject-and-halve: if a trial step takes any value
below the floor, the step is retried with dt/2 (the halved dt applies to
that step only); values in [floor, 0) after an accepted trial are clamped
to exact zero.  Hooks observe accepted steps only, in registration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalFailure
from .grid import Field, Grid1D, integrate
from .models import NEGATIVE_CLAMP_FLOOR, ReactionSystem

__all__ = [
    "SolverConfig",
    "SystemState",
    "StepEvent",
    "TrajectoryEntry",
    "Trajectory",
    "solve_tridiagonal",
    "implicit_heat_step",
    "imex_step",
    "run_simulation",
]


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters.

    Attributes:
        dt: step size each step starts from (> 0, <= t_end).
        t_end: final time (> 0); the last step is clipped to land exactly.
        positivity_floor: reject threshold, <= 0.
        max_step_halvings: retry budget per step.
        record_every: snapshot cadence in accepted steps (>= 1); the final
            state is always recorded.
    """

    dt: float
    t_end: float
    positivity_floor: float = NEGATIVE_CLAMP_FLOOR
    max_step_halvings: int = 20
    record_every: int = 1

    def __post_init__(self):
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if not np.isfinite(self.t_end) or self.t_end <= 0.0:
            raise ValueError(f"t_end must be finite and > 0, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValueError(f"dt = {self.dt} exceeds t_end = {self.t_end}")
        if self.positivity_floor > 0.0:
            raise ValueError(
                f"positivity_floor must be <= 0, got {self.positivity_floor}"
            )
        if self.max_step_halvings < 0:
            raise ValueError(
                f"max_step_halvings must be >= 0, got {self.max_step_halvings}"
            )
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")


class SystemState:
    """All species at one instant, on a shared grid."""

    __slots__ = ("t", "fields", "grid")

    def __init__(self, t: float, fields: Sequence[Field]):
        fields = tuple(fields)
        if not fields:
            raise ValueError("a state needs at least one species field")
        grid = fields[0].grid
        for f in fields[1:]:
            if f.grid != grid:
                raise ValueError("all species fields must share one grid")
        self.t = float(t)
        self.fields = fields
        self.grid = grid

    @property
    def n_species(self) -> int:
        return len(self.fields)

    def stacked(self) -> np.ndarray:
        """Species-by-cell value matrix, shape (N, n_cells)."""
        return np.stack([f.values for f in self.fields])


@dataclass(frozen=True)
class StepEvent:
    """What a hook sees after each accepted step."""

    index: int
    t_old: float
    t_new: float
    dt: float
    state_old: SystemState
    state_new: SystemState


@dataclass(frozen=True)
class TrajectoryEntry:
    t: float
    state: SystemState
    sup_norms: np.ndarray
    masses: np.ndarray


@dataclass
class Trajectory:
    """Recorded snapshots, strictly increasing in time, first at t = 0."""

    entries: list = dc_field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.t for e in self.entries])

    def final(self) -> TrajectoryEntry:
        return self.entries[-1]


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas elimination for a tridiagonal system.

    Args:
        lower: subdiagonal, length n - 1.
        diag: main diagonal, length n.
        upper: superdiagonal, length n - 1.
        rhs: right-hand side, length n.

    Returns:
        Solution array of length n; forward elimination followed by back
        substitution, no pivoting.

    Raises:
        NumericalFailure: on a vanishing pivot.
        ValueError: on mismatched band lengths.
    """
    b = np.asarray(diag, dtype=np.float64).tolist()
    n = len(b)
    a = np.asarray(lower, dtype=np.float64).tolist()
    c = np.asarray(upper, dtype=np.float64).tolist()
    d = np.asarray(rhs, dtype=np.float64).tolist()
    if n < 1 or len(a) != n - 1 or len(c) != n - 1 or len(d) != n:
        raise ValueError(
            f"band shapes must be (n-1, n, n-1, n), got "
            f"({len(a)}, {n}, {len(c)}, {len(d)})"
        )
    cp = [0.0] * n
    dp = [0.0] * n
    denom = b[0]
    if denom == 0.0:
        raise NumericalFailure("zero pivot in tridiagonal solve at row 0", value=0.0)
    if n > 1:
        cp[0] = c[0] / denom
    dp[0] = d[0] / denom
    for j in range(1, n):
        denom = b[j] - a[j - 1] * cp[j - 1]
        if denom == 0.0:
            raise NumericalFailure(
                f"zero pivot in tridiagonal solve at row {j}", value=0.0
            )
        if j < n - 1:
            cp[j] = c[j] / denom
        dp[j] = (d[j] - a[j - 1] * dp[j - 1]) / denom
    x = [0.0] * n
    x[n - 1] = dp[n - 1]
    for j in range(n - 2, -1, -1):
        x[j] = dp[j] - cp[j] * x[j + 1]
    return np.asarray(x, dtype=np.float64)


def _heat_band(grid: Grid1D, r: float):
    """Bands of I - r L for the zero-flux stencil (diagonally dominant)."""
    n = grid.n_cells
    s = r / (grid.h * grid.h)
    diag = np.full(n, 1.0 + 2.0 * s)
    diag[0] = 1.0 + s
    diag[-1] = 1.0 + s
    off = np.full(n - 1, -s)
    return off, diag, off


def implicit_heat_step(
    values: np.ndarray, grid: Grid1D, diffusion: float, dt: float,
    source: np.ndarray | None = None,
) -> np.ndarray:
    """One backward-Euler step of u_t - diffusion * L u = source.

    The source is taken at the old time (explicit), matching the reaction
    treatment in imex_step.  Operates on raw arrays; callers wrap Fields.
    """
    rhs = values if source is None else values + dt * source
    lower, diag, upper = _heat_band(grid, dt * diffusion)
    return solve_tridiagonal(lower, diag, upper, rhs)


def imex_step(state: SystemState, sys: ReactionSystem, dt: float) -> SystemState:
    """One raw IMEX step; no positivity handling (see run_simulation).

    Raises:
        ValueError: if the state's species count does not match the system.
    """
    if state.n_species != sys.n_species:
        raise ValueError(
            f"state has {state.n_species} species, system expects {sys.n_species}"
        )
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    u = state.stacked()
    f = np.asarray(sys.evaluator(u, state.t), dtype=np.float64)
    grid = state.grid
    new_fields = []
    for i in range(sys.n_species):
        vals = implicit_heat_step(u[i], grid, float(sys.diffusion[i]), dt, f[i])
        new_fields.append(Field(grid, vals))
    return SystemState(state.t + dt, new_fields)


def _snapshot(state: SystemState) -> TrajectoryEntry:
    sup = np.array([float(np.max(np.abs(f.values))) for f in state.fields])
    mass = np.array([integrate(f) for f in state.fields])
    return TrajectoryEntry(t=state.t, state=state, sup_norms=sup, masses=mass)


def run_simulation(
    sys: ReactionSystem,
    initial: SystemState,
    cfg: SolverConfig,
    hooks: Sequence[Callable[[StepEvent], None]] = (),
) -> Trajectory:
    """Integrate from t = 0 to t_end with positivity enforcement.

    Each step starts from cfg.dt (clipped to land exactly on t_end).  A
    trial step whose minimum falls below the positivity floor is rejected
    and retried with half the step, up to max_step_halvings times; values
    in [floor, 0) on an accepted trial are clamped to exact zero.  Hooks
    run after every accepted step, in registration order, and see both the
    old and the clamped new state.

    Returns:
        Trajectory with the t = 0 snapshot, every record_every-th accepted
        step, and the final state.

    Raises:
        ValueError: on a negative initial state or mismatched species count.
        NumericalFailure: when the halving budget is exhausted; the payload
            carries (time, species, minimum value).
    """
    if initial.n_species != sys.n_species:
        raise ValueError(
            f"initial state has {initial.n_species} species, "
            f"system expects {sys.n_species}"
        )
    if initial.t != 0.0:
        raise ValueError(f"initial state must be at t = 0, got t = {initial.t}")
    for i, f in enumerate(initial.fields):
        if np.min(f.values) < 0.0:
            raise ValueError(
                f"initial data for species {i + 1} is negative: "
                f"{float(np.min(f.values))}"
            )
    traj = Trajectory()
    traj.entries.append(_snapshot(initial))
    state = initial
    tiny = 1e-12 * max(1.0, cfg.t_end)
    step_index = 0
    while state.t < cfg.t_end - tiny:
        dt_step = min(cfg.dt, cfg.t_end - state.t)
        halvings = 0
        while True:
            trial = imex_step(state, sys, dt_step)
            worst = min(float(np.min(f.values)) for f in trial.fields)
            if worst >= cfg.positivity_floor:
                break
            halvings += 1
            if halvings > cfg.max_step_halvings:
                mins = [float(np.min(f.values)) for f in trial.fields]
                species = int(np.argmin(mins))
                raise NumericalFailure(
                    f"positivity could not be restored at t = {state.t} "
                    f"(species {species + 1} reached {mins[species]} after "
                    f"{cfg.max_step_halvings} halvings)",
                    time=state.t,
                    species=species + 1,
                    value=mins[species],
                )
            dt_step *= 0.5
        clamped = [
            Field(f.grid, np.maximum(f.values, 0.0))
            if np.min(f.values) < 0.0
            else f
            for f in trial.fields
        ]
        new_state = SystemState(trial.t, clamped)
        step_index += 1
        event = StepEvent(
            index=step_index,
            t_old=state.t,
            t_new=new_state.t,
            dt=dt_step,
            state_old=state,
            state_new=new_state,
        )
        for hook in hooks:
            hook(event)
        state = new_state
        if step_index % cfg.record_every == 0 or state.t >= cfg.t_end - tiny:
            traj.entries.append(_snapshot(state))
    if len(traj.entries) == 1:  # t_end below one step: unreachable given dt <= t_end
        traj.entries.append(_snapshot(state))
    return traj
