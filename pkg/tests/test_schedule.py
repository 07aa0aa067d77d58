"""Beta quantiles vs quadrature oracle, schedule assembly, initial selector."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jitflow.errors import BudgetError, ParameterError, ScheduleError
from jitflow.schedule import (
    PRESETS,
    StageSchedule,
    StageSpec,
    base_selector_indices,
    beta_timesteps,
    build_schedule,
    initial_selector,
    inv_reg_inc_beta,
    preset_schedule,
    reg_inc_beta,
)

from oracles import beta_inverse_quadrature


# ---------------------------------------------------------------------------
# incomplete beta


def test_reg_inc_beta_examples():
    assert reg_inc_beta(0.0, 1.4, 0.42) == 0.0
    assert reg_inc_beta(1.0, 1.4, 0.42) == 1.0
    assert reg_inc_beta(0.37, 1.0, 1.0) == pytest.approx(0.37, abs=1e-12)
    assert reg_inc_beta(0.5, 2.0, 1.0) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ParameterError):
        reg_inc_beta(1.5, 1.0, 1.0)
    with pytest.raises(ParameterError):
        reg_inc_beta(0.5, -1.0, 1.0)


def test_inv_reg_inc_beta_examples():
    assert inv_reg_inc_beta(0.0, 1.4, 0.42) == 0.0
    assert inv_reg_inc_beta(1.0, 1.4, 0.42) == 1.0
    assert inv_reg_inc_beta(0.42, 1.0, 1.0) == pytest.approx(0.42, abs=1e-9)
    got = inv_reg_inc_beta(0.5, 1.4, 0.42)
    assert got == pytest.approx(beta_inverse_quadrature(0.5, 1.4, 0.42), abs=1e-6)


def test_inverse_is_stable_deep_in_the_tails():
    # with b < 1 the CDF jumps ~2e-7 between the last two doubles below 1,
    # so "correct" in the far tail means the true quantile is within one ulp
    for s in (1e-12, 1e-9, 1.0 - 1e-9, 1.0 - 1e-12):
        x = inv_reg_inc_beta(s, 1.4, 0.42)
        assert 0.0 <= x <= 1.0
        err = abs(reg_inc_beta(x, 1.4, 0.42) - s)
        cdf_below = reg_inc_beta(max(0.0, math.nextafter(x, -1.0)), 1.4, 0.42)
        cdf_above = reg_inc_beta(min(1.0, math.nextafter(x, 2.0)), 1.4, 0.42)
        assert err < 1e-10 or cdf_below <= s <= cdf_above


@pytest.mark.parametrize("ab", [(1.0, 1.0), (1.4, 0.42), (2.0, 5.0)])
def test_roundtrip_grid(ab):
    a, b = ab
    for s in np.arange(0.001, 1.0, 0.001):
        x = inv_reg_inc_beta(float(s), a, b)
        assert abs(reg_inc_beta(x, a, b) - s) <= 1e-8


def test_beta_timesteps_examples():
    t = beta_timesteps(4, 1.0, 1.0)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.allclose(t, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-9)
    # the uniform grid is exact, matching a dense solver's i * (1/n) steps
    assert np.array_equal(beta_timesteps(50, 1.0, 1.0),
                          np.arange(51) * (1.0 / 50))

    t = beta_timesteps(18, 1.4, 0.42)
    for i in range(19):
        want = beta_inverse_quadrature(i / 18, 1.4, 0.42)
        assert abs(float(t[i]) - want) < 1e-6


@settings(max_examples=30, deadline=None)
@given(
    st.integers(1, 40),
    st.floats(0.2, 5.0, allow_nan=False),
    st.floats(0.2, 5.0, allow_nan=False),
)
def test_beta_timesteps_strictly_increasing(n, a, b):
    t = beta_timesteps(n, a, b)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.all(np.diff(t) > 0)


# ---------------------------------------------------------------------------
# schedules


def test_preset_jit4x():
    s = preset_schedule("jit4x")
    assert s.nfe == 18
    assert [sp.steps for sp in s.stages] == [7, 4, 7]
    assert [sp.sparsity for sp in s.stages] == [0.35, 0.62, 1.0]
    assert s.transition_steps == (7, 11)
    assert (s.alpha, s.beta) == (1.4, 0.42)


def test_preset_jit7x():
    s = preset_schedule("jit7x")
    assert s.nfe == 11
    assert [sp.steps for sp in s.stages] == [4, 3, 4]
    assert [sp.sparsity for sp in s.stages] == [0.32, 0.60, 1.0]
    assert s.transition_steps == (4, 7)


def test_vanilla_presets_single_stage_uniform():
    for name, steps in (("vanilla50", 50), ("vanilla12", 12), ("vanilla7", 7)):
        s = preset_schedule(name)
        assert s.nfe == steps
        assert s.transition_steps == ()
        assert len(s.stages) == 1 and s.stages[0].sparsity == 1.0
        assert np.allclose(s.timesteps, np.linspace(0, 1, steps + 1), atol=1e-9)
    with pytest.raises(ScheduleError):
        preset_schedule("nope")


def test_build_schedule_validation():
    with pytest.raises(ScheduleError):
        build_schedule([StageSpec(3, 1.0)], 4, 1.0, 1.0)  # steps sum mismatch
    with pytest.raises(ScheduleError):
        build_schedule([StageSpec(2, 0.5), StageSpec(2, 0.5), StageSpec(2, 1.0)], 6, 1, 1)
    with pytest.raises(ScheduleError):
        build_schedule([StageSpec(2, 0.7), StageSpec(2, 0.5)], 4, 1, 1)
    with pytest.raises(ScheduleError):
        build_schedule([StageSpec(2, 0.5)], 2, 1.0, 1.0)  # final stage not dense
    with pytest.raises(ScheduleError):
        StageSpec(0, 1.0)
    with pytest.raises(ScheduleError):
        StageSpec(3, 0.0)


def test_invert_time_mirrors_timesteps():
    fwd = preset_schedule("jit4x")
    inv = preset_schedule("jit4x", invert_time=True)
    assert np.allclose(inv.timesteps, 1.0 - fwd.timesteps[::-1], atol=0)
    assert inv.timesteps[0] == 0.0 and inv.timesteps[-1] == 1.0
    assert np.all(np.diff(inv.timesteps) > 0)
    # forward warp clusters points near t=1, the inverted one near t=0
    assert np.median(fwd.timesteps) > 0.5 > np.median(inv.timesteps)


def test_stage_of_step_and_counts():
    s = preset_schedule("jit4x")
    stages = [s.stage_of_step(i) for i in range(18)]
    assert stages == [0] * 7 + [1] * 4 + [2] * 7
    with pytest.raises(ScheduleError):
        s.stage_of_step(18)
    assert s.active_counts(1024) == (358, 635, 1024)
    assert s.active_counts(256) == (90, 159, 256)
    # final stage forced dense regardless of rounding
    tiny = build_schedule([StageSpec(2, 0.4), StageSpec(2, 1.0)], 4, 1, 1)
    assert tiny.active_counts(10) == (4, 10)
    with pytest.raises(ScheduleError):
        build_schedule(
            [StageSpec(1, 0.50), StageSpec(1, 0.52), StageSpec(1, 1.0)], 3, 1, 1
        ).active_counts(10)  # 5 == 5: counts must strictly increase


def test_schedule_invariants_direct_construction():
    t = np.array([0.0, 0.5, 0.4, 1.0])
    with pytest.raises(ScheduleError):
        StageSchedule((StageSpec(3, 1.0),), t, (), 1.0, 1.0)
    with pytest.raises(ScheduleError):
        StageSchedule((StageSpec(3, 1.0),), np.array([0.0, 0.5, 1.0]), (), 1.0, 1.0)


# ---------------------------------------------------------------------------
# initial selector


def brute_force_base(h, w):
    out = []
    for r in range(h):
        for c in range(w):
            boundary = r in (0, h - 1) or c in (0, w - 1)
            strided = r % 2 == 0 and c % 2 == 0
            if boundary or strided:
                out.append(r * w + c)
    return np.array(out, dtype=np.int64)


def test_base_selector_against_enumeration():
    for h, w in [(8, 8), (4, 4), (5, 7), (1, 9), (3, 1), (16, 16)]:
        assert np.array_equal(base_selector_indices(h, w), brute_force_base(h, w))
    assert base_selector_indices(8, 8).size == 37  # 28 boundary + 9 interior
    assert base_selector_indices(4, 4).size == 13  # 12 boundary + 1 interior


def test_initial_selector_budgets():
    base = base_selector_indices(8, 8)
    for budget in (22, 37, 40, 1, 64):
        sel = initial_selector(8, 8, budget, seed=3)
        assert len(sel) == budget
    exact = initial_selector(8, 8, 37, seed=3)
    assert np.array_equal(exact.indices, base)
    # fill keeps the whole base; drop keeps a subset of it
    grown = initial_selector(8, 8, 45, seed=3)
    assert np.all(np.isin(base, grown.indices))
    shrunk = initial_selector(8, 8, 20, seed=3)
    assert np.all(np.isin(shrunk.indices, base))
    with pytest.raises(BudgetError):
        initial_selector(8, 8, 0, seed=3)
    with pytest.raises(BudgetError):
        initial_selector(8, 8, 65, seed=3)


def test_initial_selector_corners_at_exact_budget():
    h, w = 8, 8
    corners = [0, w - 1, (h - 1) * w, h * w - 1]
    sel = initial_selector(h, w, 37, seed=11)
    assert np.all(np.isin(corners, sel.indices))


def test_initial_selector_deterministic_and_seed_sensitive():
    a = initial_selector(8, 8, 22, seed=5)
    b = initial_selector(8, 8, 22, seed=5)
    c = initial_selector(8, 8, 22, seed=6)
    assert np.array_equal(a.indices, b.indices)
    assert not np.array_equal(a.indices, c.indices)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31), st.data())
def test_initial_selector_budget_property(h, w, seed, data):
    budget = data.draw(st.integers(1, h * w))
    sel = initial_selector(h, w, budget, seed)
    assert len(sel) == budget
    assert sel.indices[0] >= 0 and sel.indices[-1] < h * w
