"""Bit-exact file formats: grid binaries, PGM heatmaps, JSON, CSV.

Every writer is byte-deterministic for a fixed input (sorted JSON keys,
round-trip float repr, atomic temp-file writes), so identical runs produce
identical files.

Grid binary layout ("JITG"): 4 ASCII magic bytes, then four little-endian
uint32 words (version=1, h_tok, w_tok, d), then h*w*d little-endian float32
values, token-row-major then channel.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .config import RunConfig, config_from_dict, config_to_dict
from .errors import ConfigError, FormatError
from .fields import ReplayField
from .grid import IndexSet, TokenGrid
from .importance import ImportanceMap
from .sampler import RunReport

_MAGIC = b"JITG"
_HEADER = struct.Struct("<4sIIII")


def _atomic_write(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_grid(path, grid: TokenGrid) -> None:
    header = _HEADER.pack(_MAGIC, 1, grid.h_tok, grid.w_tok, grid.d)
    _atomic_write(path, header + grid.data.astype("<f4").tobytes())


def read_grid(path) -> TokenGrid:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != _MAGIC:
        raise FormatError("bad magic, expected 'JITG'", offset=0)
    if len(raw) < _HEADER.size:
        raise FormatError("truncated header", offset=len(raw))
    _, version, h, w, d = _HEADER.unpack_from(raw)
    if version != 1:
        raise FormatError(f"unsupported version {version}", offset=4)
    expected = _HEADER.size + h * w * d * 4
    if len(raw) < expected:
        raise FormatError(
            f"truncated payload, expected {expected} bytes", offset=len(raw)
        )
    if len(raw) > expected:
        raise FormatError("trailing bytes after payload", offset=expected)
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).copy()
    return TokenGrid(h, w, d, data)


def write_pgm(obj, path) -> None:
    """Binary PGM (P5) with min-max normalization; constant input -> 128.

    Accepts an ImportanceMap, a single-channel TokenGrid, or a 2-D array.
    """
    if isinstance(obj, ImportanceMap):
        arr = obj.scores.reshape(obj.h_tok, obj.w_tok)
    elif isinstance(obj, TokenGrid):
        if obj.d != 1:
            raise FormatError(f"PGM needs a single channel, grid has d={obj.d}")
        arr = obj.data.reshape(obj.h_tok, obj.w_tok)
    else:
        arr = np.asarray(obj, dtype=np.float64)
        if arr.ndim != 2:
            raise FormatError(f"PGM needs a 2-D array, got ndim={arr.ndim}")
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        img = np.full(arr.shape, 128, dtype=np.uint8)
    else:
        img = np.rint((arr - lo) / (hi - lo) * 255.0).astype(np.uint8)
    h, w = arr.shape
    _atomic_write(path, f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes())


# ---------------------------------------------------------------------------
# JSON documents


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_config(path, cfg: RunConfig) -> None:
    _atomic_write(path, canonical_json(config_to_dict(cfg)).encode("utf-8"))


def read_config(path) -> tuple[RunConfig, list[str]]:
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def _stats(values: np.ndarray) -> dict:
    v = np.asarray(values, dtype=np.float64)
    return {
        "min": float(v.min()),
        "max": float(v.max()),
        "mean": float(v.mean()),
        "rms": float(np.sqrt(np.mean(v * v))),
    }


def report_to_dict(report: RunReport) -> dict:
    """JSON-ready run summary; full grids are written separately as JITG."""
    return {
        "schedule": report.schedule_name,
        "seed": report.seed,
        "nfe": report.nfe,
        "total_cost": report.total_cost,
        "baseline_cost": report.baseline_cost,
        "speedup_vs_baseline": report.speedup_vs_baseline,
        "steps": [
            {"i": s.i, "t": s.t, "stage": s.stage, "m": s.m, "cost": s.cost}
            for s in report.steps
        ],
        "transitions": [
            {
                "step_index": tr.step_index,
                "stage_from": tr.stage_from,
                "stage_to": tr.stage_to,
                "activated": tr.activated.indices.tolist(),
                "importance": _stats(tr.importance_snapshot.scores),
                "target": _stats(tr.target_values.values),
            }
            for tr in report.transitions
        ],
        "endpoint": {
            "h_tok": report.endpoint.h_tok,
            "w_tok": report.endpoint.w_tok,
            "d": report.endpoint.d,
            **_stats(report.endpoint.data),
        },
    }


def write_report(path, report: RunReport) -> None:
    _atomic_write(path, canonical_json(report_to_dict(report)).encode("utf-8"))


def write_metrics_csv(path, report: RunReport) -> None:
    lines = ["step,t,stage,m,cost"]
    lines += [
        f"{s.i},{s.t!r},{s.stage},{s.m},{s.cost!r}" for s in report.steps
    ]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


# ---------------------------------------------------------------------------
# replay fixtures: JITG blocks keyed by a JSON manifest


def save_replay(field: ReplayField, dirpath) -> None:
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    entries = []
    items = sorted(field.tape.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    for pos, ((_, t), (indices, values)) in enumerate(items):
        name = f"block_{pos:04d}.jitg"
        m, d = values.shape
        write_grid(dirpath / name, TokenGrid(1, m, d, values))
        entries.append({"t": t, "indices": indices.tolist(), "file": name})
    _atomic_write(
        dirpath / "manifest.json",
        canonical_json({"entries": entries}).encode("utf-8"),
    )


def load_replay(dirpath, strict: bool = True) -> ReplayField:
    dirpath = Path(dirpath)
    try:
        doc = json.loads((dirpath / "manifest.json").read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"replay manifest is not valid JSON: {exc}") from exc
    field = ReplayField(strict=strict)
    for entry in doc["entries"]:
        block = read_grid(dirpath / entry["file"])
        indices = np.asarray(entry["indices"], dtype=np.int64)
        key = (indices.tobytes(), float(entry["t"]))
        field.tape[key] = (indices, block.data.reshape(len(indices), block.d))
    return field
