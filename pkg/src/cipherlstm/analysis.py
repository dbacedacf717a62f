"""Analysis of trained models: length generalization, memory-cell traces,
memory-norm growth, hidden-size sweeps and key-reconstruction accuracy.

Every function here is a pure function of (checkpoint, config, seed); CSV
is the output boundary.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import lstm
from .ciphers import Alphabet
from .datagen import eval_set
from .encoding import KEY_SLOTS, D, Sample, assemble_batch
from .training import TrainConfig, evaluate, train

log = logging.getLogger(__name__)

NOT_REACHED = "not_reached"


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _params(ckpt):
    config = TrainConfig.from_dict(ckpt.config)
    return config, ckpt.params.astype(np.dtype(config.dtype))


@dataclass
class GeneralizationCurve:
    rows: list[tuple[int, float]]

    def to_csv(self, path) -> Path:
        return write_csv(path, ("length", "accuracy"), [(n, repr(a)) for n, a in self.rows])


def generalization_curve(ckpt, lengths: Sequence[int], count: int = 200) -> GeneralizationCurve:
    """Message-region accuracy on fixed-seed sets of each message length."""
    lengths = list(lengths)
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be strictly increasing")
    rows = [(n, evaluate(ckpt, count=count, message_len=n)["message"]) for n in lengths]
    return GeneralizationCurve(rows)


def _cell_states(params, sample: Sample):
    _, cache = lstm.forward(params, sample.x[None])
    return cache.C[1:, 0, :], cache


@dataclass
class MemoryNorm:
    rows: list[tuple[int, float]]
    slope: float
    intercept: float
    r2: float

    def to_csv(self, path) -> Path:
        return write_csv(path, ("t", "norm"), [(t, repr(v)) for t, v in self.rows])


def memory_norm_curve(ckpt, sample: Sample) -> MemoryNorm:
    """Euclidean norm of the memory cell per step, with a least-squares line fit."""
    _, params = _params(ckpt)
    C, _ = _cell_states(params, sample)
    norms = np.linalg.norm(C.astype(np.float64), axis=1)
    t = np.arange(len(norms), dtype=np.float64)
    if len(norms) >= 2:
        slope, intercept = np.polyfit(t, norms, 1)
        resid = norms - (slope * t + intercept)
        ss_tot = float(np.sum((norms - norms.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    else:
        slope, intercept, r2 = 0.0, float(norms[0]) if len(norms) else 0.0, 1.0
    return MemoryNorm([(int(i), float(v)) for i, v in enumerate(norms)], float(slope), float(intercept), r2)


def net_shift(input_sym: str, target_sym: str) -> int | None:
    """Caesar distance from plaintext to ciphertext; None where either is null."""
    a, b = Alphabet.index_of(input_sym), Alphabet.index_of(target_sym)
    if a >= 26 or b >= 26:
        return None
    return (a - b) % 26


@dataclass
class ActivationTrace:
    unit_ids: list[int]
    input_chars: list[str]
    output_chars: list[str]
    net_shifts: list[int | None]
    values: np.ndarray  # (T, len(unit_ids))

    def __len__(self) -> int:
        return len(self.input_chars)

    def to_csv(self, path) -> Path:
        header = ["t", "input_char", "output_char", "net_shift"] + [f"unit_{u}" for u in self.unit_ids]
        rows = []
        for t in range(len(self)):
            shift = "" if self.net_shifts[t] is None else self.net_shifts[t]
            rows.append([t, self.input_chars[t], self.output_chars[t], shift] + [repr(float(v)) for v in self.values[t]])
        return write_csv(path, header, rows)


def trace_activations(ckpt, sample: Sample, unit_ids: Sequence[int] = ()) -> ActivationTrace:
    """Memory-cell values of selected units along one sample (all units if empty).

    For decryption samples the net shift compares the ciphertext input with
    the plaintext target; for attack samples it compares the two input blocks.
    """
    _, params = _params(ckpt)
    units = list(unit_ids) or list(range(params.n))
    if any(not 0 <= u < params.n for u in units):
        raise ValueError(f"unit ids must lie in 0..{params.n - 1}")
    C, cache = _cell_states(params, sample)
    outputs = [Alphabet.symbols[i] for i in np.argmax(cache.P[0], axis=-1)]
    if sample.task == "attack":
        plain = [Alphabet.symbols[i] for i in np.argmax(sample.x[:, :D], axis=-1)]
        cipher = [Alphabet.symbols[i] for i in np.argmax(sample.x[:, D:], axis=-1)]
        inputs = [p + c for p, c in zip(plain, cipher)]
        shifts = [net_shift(c, p) for p, c in zip(plain, cipher)]
    else:
        inputs = [Alphabet.symbols[i] for i in np.argmax(sample.x, axis=-1)]
        targets = [Alphabet.symbols[i] for i in np.argmax(sample.y, axis=-1)]
        shifts = [None if t < KEY_SLOTS else net_shift(a, b) for t, (a, b) in enumerate(zip(inputs, targets))]
    return ActivationTrace(units, inputs, outputs, shifts, C[:, units].astype(np.float64))


def steps_to_threshold(metrics, threshold: float) -> int | None:
    for r in metrics:
        if r.eval_acc_message >= threshold:
            return r.step
    return None


def _sweep_one(args):
    config, out_dir = args
    result = train(config, out_dir=out_dir)
    return config.hidden_size, result.metrics


def memory_sweep(base: TrainConfig, sizes: Sequence[int], out_dir, workers: int = 1) -> dict[int, list]:
    """Train one model per hidden size on the same data stream.

    Writes ``n<size>/metrics.csv`` (plus checkpoints) and ``sweep_summary.csv``.
    """
    out = Path(out_dir)
    jobs = [(base.replace(hidden_size=n), out / f"n{n}") for n in sizes]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_sweep_one, jobs))
    else:
        results = dict(map(_sweep_one, jobs))
    rows = []
    for n in sizes:
        metrics = results[n]
        reached = steps_to_threshold(metrics, base.target_accuracy)
        final = metrics[-1].eval_acc_message if metrics else float("nan")
        rows.append((n, NOT_REACHED if reached is None else reached, repr(final)))
    write_csv(out / "sweep_summary.csv", ("hidden_size", "steps_to_threshold", "final_accuracy"), rows)
    return results


def attack_eval(ckpt, count: int = 1000) -> dict[str, float]:
    """Key-recovery accuracy over the 6 key slots and the exact-key rate.

    Null padding slots count as characters, so the model must get the key
    length right as well.
    """
    config, params = _params(ckpt)
    if config.task != "attack" or params.d != 2 * D:
        raise ValueError("attack_eval needs a checkpoint trained on the attack task (input width 54)")
    batch = assemble_batch(eval_set(config.gen, count))
    P, _ = lstm.forward(params, batch.xs)
    hit = np.argmax(P[:, :KEY_SLOTS], -1) == np.argmax(batch.ys[:, :KEY_SLOTS], -1)
    return {"char_accuracy": float(hit.mean()), "exact_key_rate": float(hit.all(axis=1).mean()), "count": count}
