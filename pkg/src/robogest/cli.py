"""Command-line driver.

Run directory layout produced under ``--out``::

    dataset/        generate
    features/       preprocess
    reports/        train (<channel>.json, <channel>_table.txt/.csv), evaluate, report
    checkpoints/    train (<channel>.json)

Exit codes: 0 success, 2 validation failure, 3 planning failure, 4 training failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .datasets import generate_human_set, generate_robot_set
from .errors import (IncompatibleReport, NoConvergence, PlanningFailed, ProvenanceViolation,
                     RobogestError, ValidationError)
from .evaluation import (ConfusionMatrix, RunReport, accuracy_curves_csv, normalize_columns,
                         render_comparison, render_report, table_csv)
from .mlp import cross_entropy, forward
from .protocol import run_protocol
from .store import (build_feature_store, dump_json, load_checkpoint, load_feature_store,
                    save_checkpoint, write_dataset)

log = logging.getLogger("robogest")

EXIT_OK, EXIT_VALIDATION, EXIT_PLANNING, EXIT_TRAINING = 0, 2, 3, 4

CHANNEL_FLAGS = {"accel": "acceleration", "vel": "velocity", "traj": "trajectory"}


def cmd_generate(cfg: ExperimentConfig, out: Path, n_jobs: int = 1) -> dict:
    gen = replace(cfg.generation, n_jobs=n_jobs)
    robot = generate_robot_set(gen)
    human = generate_human_set(gen.human_per_digit, gen.seed, gen)
    manifest = write_dataset(out / "dataset", robot + human, cfg.generation.to_dict())
    log.info("generated %d robot and %d human-like samples", manifest["counts"]["robot"],
             manifest["counts"]["human-like"])
    return manifest


def cmd_preprocess(cfg: ExperimentConfig, out: Path) -> dict:
    index = build_feature_store(out / "dataset", out / "features", cfg.filter)
    log.info("feature store: %d rows, %d excluded", len(index["rows"]), len(index["excluded"]))
    if index["excluded"]:
        raise ValidationError(f"{len(index['excluded'])} sample(s) excluded during preprocessing")
    return index


def cmd_train(cfg: ExperimentConfig, out: Path) -> RunReport:
    robot, human = load_feature_store(out / "features", cfg.channel)
    log.info("provenance check: training/validation splits draw only from %d robot rows; "
             "%d human-like rows are test-only", len(robot), len(human))
    report, model, scaler = run_protocol(robot, human, cfg.train)
    report.config_echo = {**report.config_echo, "experiment": cfg.to_dict()}
    reports = out / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    (reports / f"{cfg.channel}.json").write_text(report.to_json())
    (reports / f"{cfg.channel}_table.txt").write_text(render_report(report))
    (reports / f"{cfg.channel}_table.csv").write_text(table_csv(report.aggregate_confusion_pct))
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "checkpoints" / f"{cfg.channel}.json", model, scaler, cfg.channel)
    log.info("%s: mean accuracy %.2f%% over %d iterations", cfg.channel,
             100 * report.mean_accuracy, len(report.records))
    return report


def cmd_evaluate(cfg: ExperimentConfig, out: Path, checkpoint: Path | None = None) -> dict:
    """Re-score a saved checkpoint on the human-like rows of the feature store."""
    checkpoint = checkpoint or out / "checkpoints" / f"{cfg.channel}.json"
    model, scaler, channel = load_checkpoint(checkpoint)
    _, human = load_feature_store(out / "features", channel)
    probs = forward(model, scaler.transform(human.X)).reshape(len(human), -1)
    cm = ConfusionMatrix.from_predictions(human.y, np.argmax(probs, axis=1))
    result = {"channel": channel, "checkpoint": Path(checkpoint).name, "n_test": len(human),
              "accuracy_pct": 100 * cm.accuracy(), "loss": cross_entropy(probs, human.y),
              "confusion_pct": normalize_columns(cm).tolist(), "experiment": cfg.to_dict()}
    (out / "reports").mkdir(parents=True, exist_ok=True)
    dump_json(result, out / "reports" / f"{channel}_evaluate.json")
    log.info("%s checkpoint: %.2f%% on %d human-like samples", channel, result["accuracy_pct"], len(human))
    return result


def cmd_report(paths: list[Path], out: Path) -> str:
    if not paths:
        raise ValidationError("report needs at least one report file")
    reports = [RunReport.from_json(Path(p).read_text()) for p in paths]
    text = render_comparison(reports)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.txt").write_text(text)
    (out / "accuracy_curves.csv").write_text(accuracy_curves_csv(reports))
    return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robogest", description="Robot-trained digit gesture workbench.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="experiment JSON config")
        sp.add_argument("--seed", type=int, help="global seed override")
        sp.add_argument("--out", type=Path, default=Path("run"), help="run directory (default: run)")

    g = sub.add_parser("generate", help="synthesize the robot and human-like datasets")
    common(g)
    g.add_argument("--jobs", type=int, default=1, help="parallel workers for generation")
    pp = sub.add_parser("preprocess", help="filter and resample every sample into the feature store")
    common(pp)
    for name, helptext in (("train", "run the repeated training protocol for one channel"),
                           ("evaluate", "re-score a saved checkpoint on the human-like set")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--channel", choices=sorted(CHANNEL_FLAGS), help="input channel")
        sp.add_argument("--iterations", type=int, help="override the iteration count")
        if name == "evaluate":
            sp.add_argument("--checkpoint", type=Path)
    r = sub.add_parser("report", help="render tables and the channel comparison")
    r.add_argument("reports", nargs="+", type=Path)
    r.add_argument("--out", type=Path, default=Path("run/reports"))
    return p


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    channel = getattr(args, "channel", None)
    return cfg.with_overrides(seed=getattr(args, "seed", None),
                              channel=CHANNEL_FLAGS[channel] if channel else None,
                              iterations=getattr(args, "iterations", None))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            sys.stdout.write(cmd_report(args.reports, args.out))
            return EXIT_OK
        cfg = _config(args)
        if args.command == "generate":
            cmd_generate(cfg, args.out, args.jobs)
        elif args.command == "preprocess":
            cmd_preprocess(cfg, args.out)
        elif args.command == "train":
            sys.stdout.write(render_report(cmd_train(cfg, args.out)))
        elif args.command == "evaluate":
            res = cmd_evaluate(cfg, args.out, args.checkpoint)
            print(json.dumps({k: res[k] for k in ("channel", "n_test", "accuracy_pct")}))
    except PlanningFailed as exc:
        log.error("planning failure: %s", exc)
        return EXIT_PLANNING
    except (ProvenanceViolation, NoConvergence) as exc:
        log.error("training failure: %s", exc)
        return EXIT_TRAINING
    except (ValidationError, IncompatibleReport) as exc:
        log.error("validation failure: %s", exc)
        return EXIT_VALIDATION
    except RobogestError as exc:
        log.error("failure: %s", exc)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
