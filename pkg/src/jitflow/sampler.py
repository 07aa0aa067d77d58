"""The staged sparse sampling loop.

Each solver step evaluates the velocity field only on the active anchor
tokens, lifts the result to a full-dimensional velocity (exact on anchors,
interpolated elsewhere), and takes an explicit Euler step.  At stage
boundaries the active set grows: importance scores of the previous lifted
velocity pick the new tokens, and the micro-flow target seats their state.
A single-stage dense schedule reduces bit-for-bit to plain Euler flow
matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .cost import CostModel, step_cost
from .errors import EngineError, FieldContractError, ParameterError
from .fields import VelocityField, initial_noise
from .grid import ActiveBlock, IndexSet, TokenGrid, gather, validate_chain
from .interp import lift
from .rng import UniformStream, derive_seed
from .schedule import StageSchedule, initial_selector
from .transition import TransitionRecord, apply_transition


def sag_velocity(
    field: VelocityField, y: TokenGrid, active: IndexSet, t: float
) -> TokenGrid:
    """Full-dimensional velocity from a sparse field evaluation.

    Anchor rows carry the field output bitwise; inactive rows carry the
    interpolated extension.
    """
    block = gather(y, active)
    out = field.evaluate(block, active, t)
    if not isinstance(out, ActiveBlock) or out.m != block.m or out.d != block.d:
        raise FieldContractError(
            f"field returned {type(out).__name__} of wrong shape for "
            f"{block.m}x{block.d} input"
        )
    if not np.all(np.isfinite(out.values)):
        raise FieldContractError("field returned non-finite velocities")
    return lift(out, active, y.shape)


def euler_step(y: TokenGrid, v: TokenGrid, dt: float) -> TokenGrid:
    """Explicit Euler update y + v * dt."""
    if dt <= 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if v.shape != y.shape:
        raise ParameterError(f"velocity shape {v.shape} != state shape {y.shape}")
    return y.with_data(y.data + v.data * np.float32(dt))


@dataclass(frozen=True)
class RunOptions:
    shared_noise: bool = False  # one transition-noise draw reused at every stage
    snapshot_stride: int = 0  # keep state copies every k steps (0 = off)


@dataclass(frozen=True)
class StepRecord:
    i: int
    t: float
    stage: int
    m: int
    cost: float


@dataclass(frozen=True)
class RunReport:
    schedule_name: str
    seed: int
    nfe: int
    steps: tuple[StepRecord, ...]
    transitions: tuple[TransitionRecord, ...]
    endpoint: TokenGrid
    total_cost: float
    baseline_cost: float
    speedup_vs_baseline: float
    snapshots: tuple[tuple[int, TokenGrid], ...] = dc_field(default=())


def _transition_noise(shape: tuple[int, int, int], seed: int, index: int) -> TokenGrid:
    h, w, d = shape
    stream = UniformStream(derive_seed(seed, "transition", index))
    return TokenGrid(h, w, d, stream.normal(h * w * d).astype(np.float32))


def run(
    schedule: StageSchedule,
    field: VelocityField,
    shape: tuple[int, int, int],
    seed: int,
    options: RunOptions | None = None,
    cost_model: CostModel | None = None,
    baseline_steps: int = 50,
) -> RunReport:
    """Integrate the staged sparse ODE from seeded noise to the endpoint.

    Costs default to token evaluations per step (linear model); pass a
    CostModel for FLOPs-style accounting.  The baseline for the reported
    speedup is a dense run of baseline_steps.
    """
    opts = options or RunOptions()
    model = cost_model or CostModel()
    h, w, d = shape
    n = h * w
    counts = schedule.active_counts(n)
    y = initial_noise(shape, seed)
    active = initial_selector(h, w, counts[0], seed)
    chain = [active]
    boundaries = set(schedule.transition_steps)
    stage = 0
    prev_state: TokenGrid | None = None
    prev_velocity: TokenGrid | None = None
    prev_t = 0.0
    shared = _transition_noise(shape, seed, 0) if opts.shared_noise else None
    steps: list[StepRecord] = []
    transitions: list[TransitionRecord] = []
    snapshots: list[tuple[int, TokenGrid]] = []
    total = 0.0
    for i in range(schedule.n_steps):
        t_i = float(schedule.timesteps[i])
        if i in boundaries:
            noise = shared if shared is not None else _transition_noise(
                shape, seed, len(transitions)
            )
            new_count = counts[stage + 1] - counts[stage]
            y, active, rec = apply_transition(
                y, active, prev_state, prev_velocity, prev_t,
                t_i, new_count, noise, i, stage,
            )
            transitions.append(rec)
            chain.append(active)
            stage += 1
        try:
            v = sag_velocity(field, y, active, t_i)
        except EngineError as exc:
            raise type(exc)(f"step {i}: {exc}") from exc
        cost = step_cost(len(active), model)
        steps.append(StepRecord(i, t_i, stage, len(active), cost))
        total += cost
        prev_state, prev_velocity, prev_t = y, v, t_i
        y = euler_step(y, v, float(schedule.timesteps[i + 1] - schedule.timesteps[i]))
        if opts.snapshot_stride and (i + 1) % opts.snapshot_stride == 0:
            snapshots.append((i + 1, y))
    validate_chain(chain)  # realized sets, coarsest first, dense last
    baseline = baseline_steps * step_cost(n, model)
    return RunReport(
        schedule_name=schedule.name,
        seed=seed,
        nfe=schedule.n_steps,
        steps=tuple(steps),
        transitions=tuple(transitions),
        endpoint=y,
        total_cost=total,
        baseline_cost=baseline,
        speedup_vs_baseline=baseline / total,
        snapshots=tuple(snapshots),
    )
