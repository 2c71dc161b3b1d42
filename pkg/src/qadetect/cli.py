"""``qadetect`` command line: generate, train, encode, eval, report.

Exit status is 0 on success, 2 for configuration or usage problems, 3 for
missing or malformed data and 4 when the numerics break down.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import DataError, QadError, UsageError
from .report import render_mode

log = logging.getLogger("qadetect")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qadetect", description="Quantum-autoencoder anomaly detection experiments.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "build the train/test datasets",
        "train": "train the autoencoder on the normal training split",
        "encode": "fit approximate state-preparation circuits for test samples",
        "eval": "score the test split in every configured mode",
        "report": "render SVG figures from the eval outputs",
    }
    for name, text in helps.items():
        c = sub.add_parser(name, help=text)
        c.add_argument("config", type=Path, help="experiment config (YAML or JSON)")
        c.add_argument("--output", type=Path, help="override output_dir")
        c.add_argument("--seed", type=int, help="override every seed in the config")
        c.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    return p


def _workspace(args) -> pipeline.Workspace:
    cfg, base = load_config(args.config)
    updates = {}
    if args.output is not None:
        updates["output_dir"] = str(args.output.resolve())
    if args.seed is not None:
        updates["seeds"] = cfg.seeds.model_copy(update={k: args.seed for k in ("data", "train", "encode", "eval")})
    if updates:
        cfg = cfg.model_copy(update=updates)
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    return pipeline.Workspace(cfg, base)


def _cmd_generate(ws, args) -> None:
    counts = pipeline.generate(ws)
    for split, by_class in counts.items():
        print(f"{split}: " + ", ".join(f"{k}={v}" for k, v in by_class.items()))
    print(f"wrote {ws.dataset_dir}")


def _cmd_train(ws, args) -> None:
    model = pipeline.train(ws)
    print(f"final mean training loss {model.loss_history[-1]:.6f} after {len(model.loss_history)} epochs")
    print(f"wrote {ws.model_path}")


def _cmd_encode(ws, args) -> None:
    encodings = pipeline.encode(ws, args.threads)
    accepted = sum(e.accepted for e in encodings)
    print(f"{accepted} of {len(encodings)} encodings below residual {ws.config.encoding.threshold}")
    print(f"wrote {ws.encodings_path}")


def _cmd_eval(ws, args) -> None:
    metrics = pipeline.evaluate(ws, args.threads)
    for name, m in metrics.items():
        summary = "  ".join(f"{k} mean={v['mean']:.4f} rms={v['rms']:.4f}" for k, v in m["summary"].items())
        print(f"{name:<12} AUC={m['auc']:.4f}  {summary}")
    print(f"wrote {ws.out / 'metrics.json'}")


def _cmd_report(ws, args) -> None:
    pipeline.require_outputs(ws, "metrics.json")
    metrics = json.loads((ws.out / "metrics.json").read_text())
    for name, m in metrics.items():
        print(f"wrote {render_mode(ws.out, name, m['auc'])}")


_COMMANDS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "encode": _cmd_encode,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        ws = _workspace(args)
        _COMMANDS[args.command](ws, args)
    except QadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        # unreadable or truncated files written by an earlier step
        print(f"error: {DataError(exc)}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
