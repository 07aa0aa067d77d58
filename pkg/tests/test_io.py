"""File formats: JITG bytes, PGM conventions, config documents, replay tapes."""

import json
import struct

import numpy as np
import pytest

from jitflow.config import RunConfig, config_from_dict, config_to_dict
from jitflow.errors import ConfigError, FormatError
from jitflow.fields import GaussianFlowField, ReplayField, initial_noise, make_target_image
from jitflow.fileio import (
    canonical_json,
    load_replay,
    read_config,
    read_grid,
    save_replay,
    write_config,
    write_grid,
    write_metrics_csv,
    write_pgm,
    write_report,
)
from jitflow.grid import TokenGrid, gather, index_set
from jitflow.importance import importance_map
from jitflow.sampler import run
from jitflow.schedule import preset_schedule


# ---------------------------------------------------------------------------
# JITG grids


def test_jitg_exact_bytes_for_unit_grid(tmp_path):
    p = tmp_path / "zero.jitg"
    write_grid(p, TokenGrid(1, 1, 1, np.zeros((1, 1), np.float32)))
    raw = p.read_bytes()
    assert raw == b"JITG" + struct.pack("<IIII", 1, 1, 1, 1) + b"\x00" * 4
    assert len(raw) == 24


def test_jitg_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(5)
    for h, w, d in [(1, 1, 1), (3, 5, 2), (16, 16, 4)]:
        g = TokenGrid(h, w, d, rng.standard_normal((h * w, d)).astype(np.float32))
        p = tmp_path / f"g{h}x{w}x{d}.jitg"
        write_grid(p, g)
        back = read_grid(p)
        assert back.shape == g.shape
        assert np.array_equal(back.data, g.data)


def grid_bytes():
    g = TokenGrid(2, 2, 1, np.arange(4, dtype=np.float32).reshape(4, 1))
    return b"JITG" + struct.pack("<IIII", 1, 2, 2, 1) + g.data.tobytes()


@pytest.mark.parametrize(
    "mutate, offset",
    [
        (lambda b: b"WRNG" + b[4:], 0),  # bad magic
        (lambda b: b[:10], 10),  # truncated header
        (lambda b: b[:4] + struct.pack("<I", 9) + b[8:], 4),  # bad version
        (lambda b: b[:-6], 30),  # truncated payload
        (lambda b: b + b"zz", 36),  # trailing bytes
    ],
)
def test_jitg_errors_carry_byte_offsets(tmp_path, mutate, offset):
    p = tmp_path / "bad.jitg"
    p.write_bytes(mutate(grid_bytes()))
    with pytest.raises(FormatError) as err:
        read_grid(p)
    assert err.value.offset == offset
    assert f"byte offset {offset}" in str(err.value)


# ---------------------------------------------------------------------------
# PGM images


def test_pgm_constant_maps_to_mid_gray(tmp_path):
    p = tmp_path / "c.pgm"
    write_pgm(TokenGrid(3, 3, 1, np.full((9, 1), 4.2, np.float32)), p)
    raw = p.read_bytes()
    assert raw == b"P5\n3 3\n255\n" + b"\x80" * 9


def test_pgm_min_max_normalization(tmp_path):
    p = tmp_path / "r.pgm"
    write_pgm(np.array([[0.0, 1.0], [2.0, 3.0]]), p)
    raw = p.read_bytes()
    assert raw == b"P5\n2 2\n255\n" + bytes([0, 85, 170, 255])


def test_pgm_importance_impulse_is_uniform(tmp_path):
    # a 3x3 impulse of height 9 scores exactly 8 everywhere, so the
    # normalized image is the constant convention value
    data = np.zeros((9, 1), np.float32)
    data[4] = 9.0
    imap = importance_map(TokenGrid(3, 3, 1, data))
    assert np.allclose(imap.scores, 8.0, atol=1e-6)
    p = tmp_path / "imp.pgm"
    write_pgm(imap, p)
    assert p.read_bytes() == b"P5\n3 3\n255\n" + b"\x80" * 9


def test_pgm_input_validation(tmp_path):
    with pytest.raises(FormatError):
        write_pgm(TokenGrid(2, 2, 2, np.zeros((4, 2), np.float32)), tmp_path / "x.pgm")
    with pytest.raises(FormatError):
        write_pgm(np.zeros((2, 2, 2)), tmp_path / "y.pgm")


# ---------------------------------------------------------------------------
# configs


MINIMAL = {
    "preset": "jit4x",
    "shape": [32, 32, 4],
    "field": {"kind": "gaussian-bump"},
    "seed": 7,
}


def test_minimal_config_resolves():
    cfg, warnings = config_from_dict(dict(MINIMAL))
    assert warnings == []
    assert cfg.seed == 7 and cfg.shape == (32, 32, 4)
    assert cfg.sigma1 == 0.0 and cfg.baseline_steps == 50
    schedule = cfg.resolve_schedule()
    assert schedule.nfe == 18
    assert isinstance(cfg.resolve_field(), GaussianFlowField)
    assert cfg.resolve_cost_model() is None


def test_missing_required_keys_are_named():
    doc = dict(MINIMAL)
    del doc["seed"]
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict(doc)
    doc = dict(MINIMAL)
    del doc["field"]
    with pytest.raises(ConfigError, match="field"):
        config_from_dict(doc)
    with pytest.raises(ConfigError, match="shape"):
        config_from_dict({"preset": "jit4x", "field": {"kind": "x"}, "seed": 1})


def test_exactly_one_schedule_source():
    doc = dict(MINIMAL)
    doc["schedule"] = {"stages": [[18, 1.0]]}
    with pytest.raises(ConfigError, match="exactly one"):
        config_from_dict(doc)
    doc = dict(MINIMAL)
    del doc["preset"]
    with pytest.raises(ConfigError, match="exactly one"):
        config_from_dict(doc)


def test_unknown_keys_become_warnings():
    doc = dict(MINIMAL)
    doc["frobnicate"] = 1
    doc["field"] = {"kind": "gaussian-bump", "sgima1": 0.5}
    doc["options"] = {"shareed_noise": True}
    doc["cost"] = {"c_lin": 1.0, "c_quad": 2.0}
    cfg, warnings = config_from_dict(doc)
    assert sorted(warnings) == [
        "unknown config key: frobnicate",
        "unknown cost key: c_quad",
        "unknown field key: sgima1",
        "unknown options key: shareed_noise",
    ]
    assert cfg.cost == {"c_lin": 1.0}  # the misspelled key is dropped, not kept


def test_inline_schedule_matches_preset():
    doc = {
        "schedule": {"stages": [[7, 0.35], [4, 0.62], [7, 1.0]],
                     "alpha": 1.4, "beta": 0.42},
        "shape": [16, 16, 3],
        "field": {"kind": "checkerboard", "sigma1": 1.0},
        "seed": 3,
    }
    cfg, warnings = config_from_dict(doc)
    assert warnings == []
    inline = cfg.resolve_schedule()
    preset = preset_schedule("jit4x")
    assert np.array_equal(inline.timesteps, preset.timesteps)
    assert inline.transition_steps == preset.transition_steps


def test_config_roundtrip_file(tmp_path):
    cfg, _ = config_from_dict(dict(MINIMAL))
    p = tmp_path / "cfg.json"
    write_config(p, cfg)
    back, warnings = read_config(p)
    assert warnings == []
    assert back == cfg
    # canonical emit is stable under a second parse -> emit cycle
    assert config_to_dict(back) == config_to_dict(cfg)
    before = p.read_bytes()
    write_config(p, back)
    assert p.read_bytes() == before


def test_config_rejects_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json", "utf-8")
    with pytest.raises(ConfigError, match="JSON"):
        read_config(p)
    with pytest.raises(ConfigError, match="object"):
        config_from_dict(["nope"])


# ---------------------------------------------------------------------------
# reports, metrics, replay tapes


def small_report():
    shape = (8, 8, 2)
    field = GaussianFlowField(make_target_image("gaussian-bump", shape), 0.5)
    return run(preset_schedule("jit4x"), field, shape, seed=3)


def test_report_and_metrics_deterministic(tmp_path):
    report = small_report()
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    write_report(r1, report)
    write_report(r2, report)
    assert r1.read_bytes() == r2.read_bytes()
    doc = json.loads(r1.read_text())
    assert doc["nfe"] == 18
    assert len(doc["steps"]) == 18
    assert len(doc["transitions"]) == 2
    assert doc["speedup_vs_baseline"] == report.speedup_vs_baseline  # repr-exact
    m = tmp_path / "m.csv"
    write_metrics_csv(m, report)
    lines = m.read_text().splitlines()
    assert lines[0] == "step,t,stage,m,cost"
    assert len(lines) == 19
    # float cells parse back to the exact binary values
    for line, step in zip(lines[1:], report.steps):
        cells = line.split(",")
        assert float(cells[1]) == step.t and float(cells[4]) == step.cost


def test_canonical_json_is_sorted_and_newline_terminated():
    s = canonical_json({"b": 1, "a": [1.5, 2]})
    assert s.index('"a"') < s.index('"b"')
    assert s.endswith("\n")
    assert json.loads(s) == {"b": 1, "a": [1.5, 2]}


def test_replay_tape_roundtrip(tmp_path):
    shape = (6, 5, 3)
    inner = GaussianFlowField(make_target_image("gaussian-bump", shape), 0.7)
    rec = ReplayField(inner)
    grid = initial_noise(shape, seed=4)
    sets = [index_set(30, [0, 3, 9]), index_set(30, [1, 2, 4, 5])]
    outs = [rec.evaluate(gather(grid, a), a, t) for a, t in zip(sets, (0.25, 0.5))]
    save_replay(rec, tmp_path / "tape")
    loaded = load_replay(tmp_path / "tape")
    for a, t, want in zip(sets, (0.25, 0.5), outs):
        got = loaded.evaluate(gather(grid, a), a, t)
        assert np.array_equal(got.values, want.values)
    # byte-deterministic save
    save_replay(rec, tmp_path / "tape2")
    m1 = (tmp_path / "tape" / "manifest.json").read_bytes()
    m2 = (tmp_path / "tape2" / "manifest.json").read_bytes()
    assert m1 == m2
    with pytest.raises(FormatError):
        (tmp_path / "tape" / "manifest.json").write_text("{oops", "utf-8")
        load_replay(tmp_path / "tape")
