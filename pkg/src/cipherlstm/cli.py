"""Command-line entry point: ``cipherlstm <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, analysis, lstm
from .checkpoint import CheckpointError, load_checkpoint
from .datagen import CIPHERS, GenConfig, eval_set
from .training import ConfigError, NonFiniteLossError, TrainConfig, evaluate, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CHECK_FAILED = 1

EPILOG = """exit codes:
  0  success
  1  gradient check failed (gradcheck only)
  2  bad arguments, config, key or text
  3  runtime failure (non-finite loss, unreadable checkpoint, I/O error)
"""

log = logging.getLogger("cipherlstm")


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_json_atomic(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


class RunManifest:
    """``manifest.json`` in the run directory: written at start, finalized at end."""

    def __init__(self, out: Path, command: str, config: dict):
        self.path = out / "manifest.json"
        self.data = {
            "command": command,
            "config": config,
            # the fixed metrics CSV header has no room for these
            "objective": {
                "loss": "squared error over 27 classes, mean over batch x time rows",
                "gradient_clip": config.get("clip"),
            },
            "artifacts": {},
            "started": _now(),
            "finished": None,
            "status": "running",
            "version": __version__,
        }
        write_json_atomic(self.path, self.data)

    def finalize(self, artifacts: dict, status: str = "ok") -> None:
        self.data.update(artifacts={k: str(v) for k, v in artifacts.items()}, finished=_now(), status=status)
        write_json_atomic(self.path, self.data)


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path: str | None, overrides: list[str]) -> TrainConfig:
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        data[k.strip()] = parse_value(v)
    return TrainConfig.from_dict(data)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    return out


def _load_ckpt(path: str):
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from None


def _summary(**fields) -> None:
    print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in fields.items()))


def cmd_cipher(args) -> int:
    encrypt, decrypt = CIPHERS[args.cipher]
    try:
        fn = decrypt if args.decrypt else encrypt
        if args.cipher == "enigma" and len(args.key) != 3:
            raise ValueError("enigma keys are exactly 3 letters")
        print(fn(args.key, args.text))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK


def _train_run(args, command: str, config: TrainConfig):
    out = _out_dir(args.out)
    write_json_atomic(out / "config.json", config.to_dict())
    manifest = RunManifest(out, command, config.to_dict())
    resume = _load_ckpt(args.resume) if getattr(args, "resume", None) else None
    try:
        result = train(config, out_dir=out, resume=resume)
    except NonFiniteLossError:
        manifest.finalize({"metrics": out / "metrics.csv"}, status="non-finite loss")
        raise
    return out, manifest, result


def cmd_train(args) -> int:
    config = load_config(args.config, args.set)
    out, manifest, result = _train_run(args, "train", config)
    last = result.metrics[-1]
    manifest.finalize({"metrics": out / "metrics.csv", "checkpoint": out / "checkpoint.ckpt",
                       "config": out / "config.json"})
    _summary(steps=last.step, train_loss=last.train_loss, eval_acc_message=last.eval_acc_message,
             eval_acc_all=last.eval_acc_all, eval_acc_unseen_key=last.eval_acc_unseen_key,
             stopped_early=result.stopped_early)
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = _load_ckpt(args.checkpoint)
    out = _out_dir(args.out) if args.out else None
    manifest = RunManifest(out, "eval", ckpt.config) if out else None
    acc = evaluate(ckpt, count=args.count, unseen_key=args.key, unseen_count=args.unseen_count)
    artifacts = {}
    if out and args.lengths:
        curve = analysis.generalization_curve(ckpt, [int(x) for x in args.lengths.split(",")], count=args.count)
        artifacts["curve"] = curve.to_csv(out / "generalization.csv")
    if manifest:
        manifest.finalize(artifacts)
    _summary(step=ckpt.step, acc_message=acc["message"], acc_all=acc["all"], acc_unseen_key=acc["unseen_key"],
             unseen_key=args.key or ckpt.config.get("unseen_key", "KEY"))
    return EXIT_OK


def cmd_attack(args) -> int:
    if args.checkpoint:
        ckpt = _load_ckpt(args.checkpoint)
        out = _out_dir(args.out) if args.out else None
        manifest = RunManifest(out, "attack", ckpt.config) if out else None
        artifacts = {}
    else:
        if not args.out:
            raise ConfigError("attack needs --out when training (or --checkpoint to evaluate)")
        config = load_config(args.config, ["task=attack"] + args.set)
        out, manifest, result = _train_run(args, "attack", config)
        ckpt = result.checkpoint
        artifacts = {"metrics": out / "metrics.csv", "checkpoint": out / "checkpoint.ckpt"}
    try:
        res = analysis.attack_eval(ckpt, count=args.count)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if out:
        artifacts["attack"] = analysis.write_csv(
            out / "attack_eval.csv", ("char_accuracy", "exact_key_rate", "count"),
            [(repr(res["char_accuracy"]), repr(res["exact_key_rate"]), res["count"])])
    if manifest:
        manifest.finalize(artifacts)
    _summary(step=ckpt.step, key_char_accuracy=res["char_accuracy"], exact_key_rate=res["exact_key_rate"])
    return EXIT_OK


def cmd_trace(args) -> int:
    ckpt = _load_ckpt(args.checkpoint)
    config = TrainConfig.from_dict(ckpt.config)
    gen = GenConfig(**{**config.gen.__dict__, "holdout_keys": ()})
    sample = eval_set(gen, args.index + 1, key=args.key, message_len=args.length)[args.index]
    units = [int(u) for u in args.units.split(",")] if args.units else []
    out = _out_dir(args.out)
    manifest = RunManifest(out, "trace", ckpt.config)
    try:
        trace = analysis.trace_activations(ckpt, sample, units)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    norm = analysis.memory_norm_curve(ckpt, sample)
    artifacts = {"trace": trace.to_csv(out / "trace.csv"), "norm": norm.to_csv(out / "memory_norm.csv")}
    manifest.finalize(artifacts)
    _summary(steps=len(trace), key=sample.key, norm_slope=norm.slope, norm_r2=norm.r2)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config, args.set)
    sizes = [int(s) for s in args.sizes.split(",")]
    out = _out_dir(args.out)
    manifest = RunManifest(out, "sweep", {**config.to_dict(), "sizes": sizes})
    results = analysis.memory_sweep(config, sizes, out, workers=args.workers)
    artifacts = {f"metrics_n{n}": out / f"n{n}" / "metrics.csv" for n in sizes}
    artifacts["summary"] = out / "sweep_summary.csv"
    manifest.finalize(artifacts)
    reached = {n: analysis.steps_to_threshold(m, config.target_accuracy) for n, m in results.items()}
    print(" ".join(f"n{n}={analysis.NOT_REACHED if s is None else s}" for n, s in reached.items()))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = lstm.gradcheck(n=args.n, T=args.T, d=args.d, trials=args.trials, seed=args.seed,
                             perturb=args.perturb)
    worst = {name: max(r[name] for r in results) for name in results[0]}
    for name, err in worst.items():
        print(f"{name}\tmax_rel_err={err:.3e}\t{'ok' if err < args.tol else 'FAIL'}")
    ok = all(err < args.tol for err in worst.values())
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _add_run_args(p, resume=True):
    p.add_argument("--config", help="flat JSON config file (TrainConfig field names)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field; values parse as JSON, else as strings")
    p.add_argument("--seed", type=int, help="shorthand for --set seed=N")
    if resume:
        p.add_argument("--resume", help="continue from this checkpoint")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cipherlstm", description=__doc__, epilog=EPILOG,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cipher", help="encrypt or decrypt text with a cipher")
    p.add_argument("--cipher", choices=sorted(CIPHERS), required=True)
    p.add_argument("--key", required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--encrypt", action="store_true")
    mode.add_argument("--decrypt", action="store_true")
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_cipher)

    p = sub.add_parser("train", help="train a decryption model")
    _add_run_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint (seen and unseen keys, optional length curve)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--key", help="held-out key for the unseen-key accuracy (default from the config)")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--unseen-count", type=int, default=20)
    p.add_argument("--lengths", help="comma-separated message lengths for generalization.csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("attack", help="train and/or evaluate a key-reconstruction model")
    _add_run_args(p)
    p.add_argument("--checkpoint", help="evaluate this attack checkpoint instead of training")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("trace", help="memory-cell trace and memory norm along one evaluation message")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--key", help="fixed key for the traced message")
    p.add_argument("--length", type=int, help="message length (default: training length)")
    p.add_argument("--index", type=int, default=0, help="which evaluation message to trace")
    p.add_argument("--units", help="comma-separated unit ids (default: all)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("sweep", help="train one model per hidden size on a shared data stream")
    _add_run_args(p, resume=False)
    p.add_argument("--sizes", default="32,64,128,256,512")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="compare BPTT gradients with central finite differences")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--T", type=int, default=5)
    p.add_argument("--d", type=int, default=27, choices=(27, 54))
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    if getattr(args, "seed", None) is not None and hasattr(args, "set") and args.command != "gradcheck":
        args.set = args.set + [f"seed={args.seed}"]
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteLossError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
