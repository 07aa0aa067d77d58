"""Stage schedules, warped timesteps, and the initial anchor selector.

A schedule is a list of stages, coarse to fine, each holding a solver step
count and an active-token fraction; the final stage is always dense.  Solver
timesteps are the Beta(alpha, beta) quantiles of a uniform grid, so the
step spacing can be skewed toward either end of the trajectory.

The incomplete-beta routines are self-contained (continued fraction plus a
safeguarded Newton inverse); tests check them against an independent
adaptive-quadrature oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, NumericalError, ParameterError, ScheduleError
from .grid import IndexSet
from .rng import UniformStream, derive_seed

# ---------------------------------------------------------------------------
# regularized incomplete beta and its inverse


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        # even step
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + num / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise NumericalError(f"incomplete beta continued fraction stalled at x={x}")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b), the Beta CDF at x."""
    if a <= 0 or b <= 0:
        raise ParameterError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only below the distribution bulk
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(x, a, b) / a
    return 1.0 - front * _beta_cf(1.0 - x, b, a) / b


def _beta_pdf(x: float, a: float, b: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    ln = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)
    )
    return math.exp(min(ln, 700.0))


def inv_reg_inc_beta(s: float, a: float, b: float) -> float:
    """Quantile x with I_x(a, b) = s, via bracketed Newton iteration."""
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return 0.0
    if s == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    x = min(max(s, 1e-12), 1.0 - 1e-12)
    for _ in range(200):
        f = reg_inc_beta(x, a, b) - s
        if abs(f) < 1e-13:
            return x
        if f > 0.0:
            hi = x
        else:
            lo = x
        slope = _beta_pdf(x, a, b)
        x_new = x - f / slope if slope > 0.0 else -1.0
        x = x_new if lo < x_new < hi else 0.5 * (lo + hi)
        # a one-ulp bracket cannot shrink further; absolute width tests fail near 1
        if hi - lo <= math.ulp(hi):
            return x
    raise NumericalError(f"beta quantile iteration failed for s={s}, a={a}, b={b}")


def beta_timesteps(n_steps: int, a: float, b: float) -> np.ndarray:
    """Timesteps t_i = BetaInv(i / n_steps; a, b), i = 0..n_steps."""
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if a <= 0 or b <= 0:
        raise ParameterError(f"shape parameters must be positive, got a={a}, b={b}")
    if a == 1.0 and b == 1.0:
        return np.linspace(0.0, 1.0, n_steps + 1)  # uniform case is exact
    t = np.empty(n_steps + 1, dtype=np.float64)
    t[0] = 0.0
    t[n_steps] = 1.0
    for i in range(1, n_steps):
        t[i] = inv_reg_inc_beta(i / n_steps, a, b)
    return t


# ---------------------------------------------------------------------------
# stage schedules


@dataclass(frozen=True)
class StageSpec:
    """One sampling stage: solver step count and active-token fraction."""

    steps: int
    sparsity: float

    def __post_init__(self):
        if self.steps < 1:
            raise ScheduleError(f"stage steps must be >= 1, got {self.steps}")
        if not 0.0 < self.sparsity <= 1.0:
            raise ScheduleError(f"sparsity must lie in (0, 1], got {self.sparsity}")


@dataclass(frozen=True)
class StageSchedule:
    """Stages (coarse to fine), warped timesteps, and transition boundaries.

    transition_steps[p] is the solver-step index at which stage p hands over
    to stage p+1; the transition happens before the velocity evaluation of
    that step.
    """

    stages: tuple[StageSpec, ...]
    timesteps: np.ndarray  # (n_steps + 1,) float64, strictly increasing
    transition_steps: tuple[int, ...]
    alpha: float
    beta: float
    invert_time: bool = False
    name: str = "custom"

    def __post_init__(self):
        if not self.stages:
            raise ScheduleError("schedule needs at least one stage")
        t = np.asarray(self.timesteps, dtype=np.float64)
        object.__setattr__(self, "timesteps", t)
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "transition_steps", tuple(self.transition_steps))
        spars = [s.sparsity for s in self.stages]
        if spars[-1] != 1.0:
            raise ScheduleError(f"final stage sparsity must be 1.0, got {spars[-1]}")
        if any(x >= y for x, y in zip(spars, spars[1:])):
            raise ScheduleError(f"sparsities must increase coarse to fine: {spars}")
        total = sum(s.steps for s in self.stages)
        if len(t) != total + 1:
            raise ScheduleError(
                f"{len(t)} timesteps for {total} solver steps (need {total + 1})"
            )
        if t[0] < 0.0 or t[-1] > 1.0 or np.any(np.diff(t) <= 0.0):
            raise ScheduleError("timesteps must be strictly increasing within [0, 1]")
        bounds = tuple(np.cumsum([s.steps for s in self.stages])[:-1].tolist())
        if self.transition_steps != bounds:
            raise ScheduleError(
                f"transition steps {self.transition_steps} != stage boundaries {bounds}"
            )
        if any(i < 1 for i in self.transition_steps):
            raise ScheduleError("no transition may occur at the first step")

    @property
    def n_steps(self) -> int:
        return len(self.timesteps) - 1

    @property
    def nfe(self) -> int:
        return sum(s.steps for s in self.stages)

    def stage_of_step(self, i: int) -> int:
        """Stage position (0 = coarsest) owning solver step i."""
        if not 0 <= i < self.n_steps:
            raise ScheduleError(f"step {i} outside [0, {self.n_steps})")
        return int(np.searchsorted(np.asarray(self.transition_steps), i, side="right"))

    def active_counts(self, n_tokens: int) -> tuple[int, ...]:
        """Realized anchor counts per stage; the final stage is forced dense."""
        counts = [round(s.sparsity * n_tokens) for s in self.stages]
        counts[-1] = n_tokens
        if counts[0] < 1:
            raise ScheduleError(
                f"first stage rounds to {counts[0]} tokens of {n_tokens}"
            )
        if any(x >= y for x, y in zip(counts, counts[1:])):
            raise ScheduleError(
                f"stage token counts must strictly increase, got {counts}"
            )
        return tuple(counts)


def build_schedule(
    specs: list[StageSpec],
    n_steps: int,
    alpha: float,
    beta: float,
    invert_time: bool = False,
    name: str = "custom",
) -> StageSchedule:
    """Assemble a schedule: warped timesteps plus stage boundary indices."""
    total = sum(s.steps for s in specs)
    if total != n_steps:
        raise ScheduleError(f"stage steps sum to {total}, expected n_steps={n_steps}")
    t = beta_timesteps(n_steps, alpha, beta)
    if invert_time:
        t = 1.0 - t[::-1]
    bounds = tuple(np.cumsum([s.steps for s in specs])[:-1].tolist())
    return StageSchedule(tuple(specs), t, bounds, alpha, beta, invert_time, name)


PRESETS: dict[str, dict] = {
    "jit4x": {
        "stages": [(7, 0.35), (4, 0.62), (7, 1.0)],
        "alpha": 1.4,
        "beta": 0.42,
    },
    "jit7x": {
        "stages": [(4, 0.32), (3, 0.60), (4, 1.0)],
        "alpha": 1.4,
        "beta": 0.42,
    },
    "vanilla50": {"stages": [(50, 1.0)], "alpha": 1.0, "beta": 1.0},
    "vanilla12": {"stages": [(12, 1.0)], "alpha": 1.0, "beta": 1.0},
    "vanilla7": {"stages": [(7, 1.0)], "alpha": 1.0, "beta": 1.0},
}


def preset_schedule(name: str, invert_time: bool = False) -> StageSchedule:
    if name not in PRESETS:
        raise ScheduleError(
            f"unknown preset '{name}' (have {', '.join(sorted(PRESETS))})"
        )
    p = PRESETS[name]
    specs = [StageSpec(steps, sparsity) for steps, sparsity in p["stages"]]
    n_steps = sum(s.steps for s in specs)
    return build_schedule(specs, n_steps, p["alpha"], p["beta"], invert_time, name)


# ---------------------------------------------------------------------------
# initial anchor selector


def base_selector_indices(h_tok: int, w_tok: int) -> np.ndarray:
    """Stride-2 interior lattice union all boundary tokens, sorted."""
    rows = np.arange(h_tok * w_tok, dtype=np.int64) // w_tok
    cols = np.arange(h_tok * w_tok, dtype=np.int64) % w_tok
    strided = (rows % 2 == 0) & (cols % 2 == 0)
    boundary = (rows == 0) | (rows == h_tok - 1) | (cols == 0) | (cols == w_tok - 1)
    return np.flatnonzero(strided | boundary)


def initial_selector(h_tok: int, w_tok: int, budget: int, seed: int) -> IndexSet:
    """Coarsest-stage anchor set: strided lattice + boundary, resized to budget.

    When the base set misses the budget, supplementary indices are drawn
    uniformly from the complement; excess tokens are dropped uniformly over
    the whole base set.  Both draws come from a dedicated sub-stream of the
    seed, so the selector never perturbs noise generation.
    """
    n = h_tok * w_tok
    if not 1 <= budget <= n:
        raise BudgetError(f"budget {budget} outside [1, {n}]")
    base = base_selector_indices(h_tok, w_tok)
    stream = UniformStream(derive_seed(seed, "selector"))
    if len(base) > budget:
        dropped = stream.choose(base, len(base) - budget)
        chosen = np.setdiff1d(base, dropped, assume_unique=True)
    elif len(base) < budget:
        pool = np.setdiff1d(np.arange(n, dtype=np.int64), base, assume_unique=True)
        extra = stream.choose(pool, budget - len(base))
        chosen = np.union1d(base, extra)
    else:
        chosen = base
    return IndexSet(n, chosen)
