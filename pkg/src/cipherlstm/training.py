"""Training runs, periodic evaluation, metrics logging and resumption."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lstm
from .checkpoint import Checkpoint, save_checkpoint
from .datagen import GenConfig, eval_set, next_batch
from .encoding import KEY_SLOTS, assemble_batch

log = logging.getLogger(__name__)

METRIC_FIELDS = (
    "step",
    "train_loss",
    "train_acc_all",
    "eval_acc_message",
    "eval_acc_all",
    "eval_acc_unseen_key",
    "grad_norm",
    "wallclock_seconds",
)

# fields that must agree between a checkpoint and the config resuming it
_STREAM_FIELDS = (
    "cipher", "task", "message_len", "key_len_min", "key_len_max", "holdout_keys",
    "hidden_size", "batch_size", "seed", "dtype", "fixed_batch",
)


class ConfigError(ValueError):
    pass


class NonFiniteLossError(RuntimeError):
    def __init__(self, record: "MetricsRecord"):
        super().__init__(f"non-finite training loss at step {record.step}")
        self.record = record


@dataclass(frozen=True)
class TrainConfig:
    """Flat experiment configuration; serialized as a flat JSON object.

    Defaults are the desk-scale Vigenere run; full-scale runs (for instance
    the Enigma at hidden_size=3000, max_steps=500000) are ordinary overrides.
    """

    cipher: str = "vigenere"
    task: str = "decrypt"
    message_len: int = 14
    key_len_min: int = 1
    key_len_max: int = 6
    holdout_keys: tuple[str, ...] = ("KEY",)
    hidden_size: int = 128
    batch_size: int = 50
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_steps: int = 50_000
    eval_every: int = 500
    eval_count: int = 200
    unseen_key: str = "KEY"
    unseen_count: int = 20
    target_accuracy: float = 0.99
    seed: int = 0
    dtype: str = "float32"
    clip: float | None = None
    checkpoint_every: int = 0
    record_wallclock: bool = True
    # repeat the first batch every step (overfitting sanity runs)
    fixed_batch: bool = False

    def __post_init__(self):
        object.__setattr__(self, "holdout_keys", tuple(self.holdout_keys))
        positive = ("hidden_size", "batch_size", "lr", "max_steps", "eval_every", "eval_count",
                    "unseen_count", "target_accuracy")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.eval_every > self.max_steps:
            raise ConfigError(f"eval_every ({self.eval_every}) exceeds max_steps ({self.max_steps})")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("betas must lie in [0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.clip is not None and not self.clip > 0:
            raise ConfigError("clip must be positive when set")
        try:
            self.gen
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def gen(self) -> GenConfig:
        return GenConfig(
            cipher=self.cipher,
            message_len=self.message_len,
            key_len_min=self.key_len_min,
            key_len_max=self.key_len_max,
            holdout_keys=self.holdout_keys,
            seed=self.seed,
            task=self.task,
        )

    @property
    def input_width(self) -> int:
        return 54 if self.task == "attack" else 27

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["holdout_keys"] = list(self.holdout_keys)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class MetricsRecord:
    step: int
    train_loss: float
    train_acc_all: float
    eval_acc_message: float
    eval_acc_all: float
    eval_acc_unseen_key: float
    grad_norm: float
    wallclock_seconds: float

    def row(self) -> list[str]:
        return [str(self.step)] + [repr(float(getattr(self, f))) for f in METRIC_FIELDS[1:]]


def metrics_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_FIELDS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_metrics(path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [MetricsRecord(int(r["step"]), *(float(r[f]) for f in METRIC_FIELDS[1:])) for r in rows]


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: list[MetricsRecord]
    loss_history: list[float] = field(default_factory=list)
    stopped_early: bool = False


def headline_region(task: str) -> str:
    """Message steps for decryption; the 6 key slots for key reconstruction."""
    return "key" if task == "attack" else "message"


def _eval_batches(config: TrainConfig):
    gen = config.gen
    seen = assemble_batch(eval_set(gen, config.eval_count))
    unseen = assemble_batch(eval_set(gen, config.unseen_count, key=config.unseen_key))
    return seen, unseen


def _accuracies(params, seen, unseen, task) -> dict[str, float]:
    region = headline_region(task)
    P, _ = lstm.forward(params, seen.xs)
    Pu, _ = lstm.forward(params, unseen.xs)
    return {
        "message": lstm.accuracy(P, seen.ys, region, KEY_SLOTS),
        "all": lstm.accuracy(P, seen.ys, "all"),
        "unseen_key": lstm.accuracy(Pu, unseen.ys, region, KEY_SLOTS),
    }


def new_checkpoint(config: TrainConfig) -> Checkpoint:
    params = lstm.xavier_init(config.hidden_size, config.input_width, seed=config.seed, dtype=np.dtype(config.dtype))
    return Checkpoint(config.to_dict(), params, lstm.AdamState.zeros(params))


def check_resumable(config: TrainConfig, ckpt: Checkpoint) -> None:
    saved = TrainConfig.from_dict(ckpt.config)
    for name in _STREAM_FIELDS:
        if getattr(saved, name) != getattr(config, name):
            raise ConfigError(f"cannot resume: {name} differs ({getattr(saved, name)!r} vs {getattr(config, name)!r})")


def train(config: TrainConfig, out_dir=None, resume: Checkpoint | None = None, on_record=None) -> TrainResult:
    """Run (or continue) a training run until target accuracy or ``max_steps``.

    With ``out_dir`` the metrics CSV is written as records arrive, and
    ``checkpoint.ckpt`` at the end (and every ``checkpoint_every`` steps).
    """
    dtype = np.dtype(config.dtype)
    if resume is None:
        ckpt = new_checkpoint(config)
    else:
        check_resumable(config, resume)
        ckpt = resume
    params = ckpt.params.astype(dtype)
    adam = lstm.AdamState(ckpt.adam.m.astype(dtype), ckpt.adam.v.astype(dtype), ckpt.adam.t)
    step, cursor = ckpt.step, ckpt.rng_cursor
    acc = dict(ckpt.state.get("interval", {"loss": 0.0, "acc": 0.0, "count": 0}))
    clock_offset = float(ckpt.state.get("wallclock", 0.0))
    metrics: list[MetricsRecord] = []
    losses: list[float] = []

    out = Path(out_dir) if out_dir is not None else None
    metrics_path = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.csv"
        if resume is None or not metrics_path.exists():
            metrics_path.write_text(metrics_csv([]))
        else:
            # drop records logged after the checkpoint (a crash between saves)
            kept = [r for r in read_metrics(metrics_path) if r.step <= step]
            metrics_path.write_text(metrics_csv(kept))

    def emit(record):
        metrics.append(record)
        if metrics_path is not None:
            with open(metrics_path, "a", newline="") as fh:
                csv.writer(fh, lineterminator="\n").writerow(record.row())
        if on_record is not None:
            on_record(record)

    start = time.perf_counter()

    def clock():
        return clock_offset + (time.perf_counter() - start) if config.record_wallclock else 0.0

    def snapshot():
        state = {"interval": dict(acc), "wallclock": clock()}
        return Checkpoint(config.to_dict(), params, adam, step, cursor, state)

    seen, unseen = _eval_batches(config)
    gen = config.gen
    betas = (config.beta1, config.beta2)
    stopped = False
    gnorm = 0.0
    fixed = next_batch(gen, config.batch_size, 0) if config.fixed_batch else None
    while step < config.max_steps:
        if fixed is not None:
            batch = fixed
        else:
            batch = next_batch(gen, config.batch_size, cursor)
            cursor += config.batch_size
        step += 1
        P, cache = lstm.forward(params, batch.xs)
        loss = lstm.l2_loss(P, batch.ys)
        if not math.isfinite(loss):
            record = MetricsRecord(step, loss, math.nan, math.nan, math.nan, math.nan, math.nan, clock())
            emit(record)
            raise NonFiniteLossError(record)
        grads = lstm.backward(params, cache, batch.ys)
        gnorm = lstm.grad_norm(grads)
        if config.clip is not None:
            grads, clipped = lstm.clip_gradients(grads, config.clip)
            if clipped:
                log.info("step %d: gradient norm %.4g clipped to %.4g", step, gnorm, config.clip)
        params, adam = lstm.adam_step(params, grads, adam, config.lr, betas, config.eps)
        losses.append(loss)
        acc["loss"] += loss
        acc["acc"] += lstm.accuracy(P, batch.ys, "all")
        acc["count"] += 1

        if step % config.eval_every == 0 or step == config.max_steps:
            ev = _accuracies(params, seen, unseen, config.task)
            k = acc["count"]
            record = MetricsRecord(step, acc["loss"] / k, acc["acc"] / k, ev["message"], ev["all"],
                                   ev["unseen_key"], gnorm, clock())
            acc = {"loss": 0.0, "acc": 0.0, "count": 0}
            emit(record)
            log.info("step %d loss %.5f eval %.4f unseen %.4f", step, record.train_loss,
                     record.eval_acc_message, record.eval_acc_unseen_key)
            if record.eval_acc_message >= config.target_accuracy:
                stopped = True
        if out is not None and config.checkpoint_every and step % config.checkpoint_every == 0:
            save_checkpoint(out / "checkpoint.ckpt", snapshot())
        if stopped:
            break

    final = snapshot()
    if out is not None:
        save_checkpoint(out / "checkpoint.ckpt", final)
    return TrainResult(final, metrics, losses, stopped)


def evaluate(ckpt: Checkpoint, count: int = 200, unseen_key: str | None = None, unseen_count: int = 20,
             message_len: int | None = None) -> dict[str, float]:
    """Accuracies of a checkpoint on fixed-seed evaluation sets of its task.

    Returns ``message`` (headline region), ``all`` and ``unseen_key``.
    """
    config = TrainConfig.from_dict(ckpt.config)
    if ckpt.params.d != config.input_width:
        raise ConfigError(f"checkpoint input width {ckpt.params.d} does not match task {config.task!r}")
    gen = config.gen
    key = unseen_key or config.unseen_key
    seen = assemble_batch(eval_set(gen, count, message_len=message_len))
    unseen = assemble_batch(eval_set(gen, unseen_count, key=key, message_len=message_len))
    params = ckpt.params.astype(np.dtype(config.dtype))
    return _accuracies(params, seen, unseen, config.task)


def moving_average(values, window: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if len(v) < window:
        raise ValueError(f"need at least {window} values, got {len(v)}")
    c = np.concatenate([[0.0], np.cumsum(v)])
    return (c[window:] - c[:-window]) / window
