"""Versioned binary checkpoints with a JSON sidecar.

The binary file carries everything numeric (parameter vector, EMA shadow,
per-series standardization stats) as little-endian 64-bit reals so a reload
reproduces forecasts bit-for-bit.  The sidecar `<path>.json` repeats the
configuration in readable form and holds the training-trace digest.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import netcore as nc
from .forecaster import ModelConfig, layout
from .training import TrainConfig, TrainResult

MAGIC = b"SQFCKPT\x00"
VERSION = 1


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def trace_digest(trace) -> str:
    """Order-sensitive digest of the loss trace rows."""
    arr = np.asarray(trace, dtype="<f8")
    return hashlib.sha256(arr.tobytes()).hexdigest()


def _model_dict(cfg: ModelConfig) -> dict:
    return {
        "lookback": cfg.lookback,
        "horizon": cfg.horizon,
        "n_blocks": cfg.n_blocks,
        "hidden_width": cfg.hidden_width,
        "knots": [float(k) for k in cfg.knots],
        "relu_backcast": cfg.relu_backcast,
    }


def _train_dict(cfg: TrainConfig) -> dict:
    return {
        "batch_size": cfg.batch_size,
        "iterations": cfg.iterations,
        "lr": cfg.lr,
        "ema_decay": cfg.ema_decay,
        "lam": cfg.lam,
        "p": cfg.p,
        "weight": cfg.weight,
        "origin_range": cfg.origin_range,
        "grid_m": cfg.grid_m,
        "augment": cfg.augment,
        "seed": cfg.seed,
    }


def save_checkpoint(path, result: TrainResult) -> Path:
    """Write the binary container at `path` and its JSON sidecar."""
    path = Path(path)
    theta = np.ascontiguousarray(result.store.theta, dtype="<f8")
    ema = np.ascontiguousarray(result.ema, dtype="<f8")
    if theta.size != ema.size:
        raise ValueError("parameter and EMA vectors disagree in length")
    sids = sorted(result.stats)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, theta.size))
        fh.write(theta.tobytes())
        fh.write(ema.tobytes())
        fh.write(struct.pack("<Q", len(sids)))
        for sid in sids:
            raw = sid.encode("utf-8")
            loc, scale = result.stats[sid]
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<dd", loc, scale))
    meta = {
        "format_version": VERSION,
        "model": _model_dict(result.model_cfg),
        "train": _train_dict(result.train_cfg),
        "seed": result.train_cfg.seed,
        "n_params": int(theta.size),
        "n_series": len(sids),
        "trace_len": len(result.trace),
        "trace_digest": trace_digest(result.trace),
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


@dataclass
class Checkpoint:
    version: int
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    theta: np.ndarray
    ema: np.ndarray
    stats: dict
    trace_digest: str
    trace_len: int

    def raw_store(self) -> nc.ParamStore:
        st = nc.ParamStore(layout(self.model_cfg))
        st.theta[:] = self.theta
        return st

    def serving_store(self) -> nc.ParamStore:
        st = nc.ParamStore(layout(self.model_cfg))
        st.theta[:] = self.ema
        return st


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    side = sidecar_path(path)
    if not side.exists():
        raise ValueError(f"missing checkpoint sidecar {side}")
    meta = json.loads(side.read_text(encoding="utf-8"))
    if meta.get("format_version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('format_version')!r}")
    m = dict(meta["model"])
    m["knots"] = np.array(m["knots"])
    model_cfg = ModelConfig(**m)
    train_cfg = TrainConfig(**meta["train"])
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        version, n = struct.unpack("<IQ", fh.read(12))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported binary version {version}")
        expect = sum(int(np.prod(shape)) for _, shape in layout(model_cfg))
        if n != expect:
            raise ValueError(f"{path}: parameter vector length {n} does not match config ({expect})")
        theta = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(float)
        ema = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(float)
        (n_series,) = struct.unpack("<Q", fh.read(8))
        stats = {}
        for _ in range(n_series):
            (slen,) = struct.unpack("<I", fh.read(4))
            sid = fh.read(slen).decode("utf-8")
            loc, scale = struct.unpack("<dd", fh.read(16))
            stats[sid] = (loc, scale)
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after checkpoint payload")
    if len(stats) != meta.get("n_series", len(stats)):
        raise ValueError(f"{path}: sidecar and binary disagree on series count")
    return Checkpoint(
        version=version,
        model_cfg=model_cfg,
        train_cfg=train_cfg,
        theta=theta,
        ema=ema,
        stats=stats,
        trace_digest=meta["trace_digest"],
        trace_len=meta["trace_len"],
    )
