"""Trainer command line: two-stage training from an exported pairs file, and
evaluation of a saved bundle.  Metrics go to standard output as one JSON
object; bundles are saved in a versioned torch format.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import torch

from .data import load_pairs
from .encoder import EncoderSpec, ModelBundle, SequenceClassifier
from .train import TrainerConfig, distill_student, evaluate, train_teacher

BUNDLE_FORMAT = "sata-trainer-bundle-1"


def save_bundle(bundle: ModelBundle, path: Path) -> None:
    torch.save(
        {
            "format": BUNDLE_FORMAT,
            "state_dict": bundle.model.state_dict(),
            "num_classes": bundle.num_classes,
            "max_seq_len": bundle.max_seq_len,
            "encoder_spec": dataclasses.asdict(bundle.model.spec),
            "frozen": bundle.frozen,
        },
        path,
    )


def load_bundle(path: Path) -> ModelBundle:
    obj = torch.load(path, weights_only=True)
    if obj.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"unsupported bundle format {obj.get('format')!r}")
    model = SequenceClassifier(obj["num_classes"], EncoderSpec(**obj["encoder_spec"]))
    model.load_state_dict(obj["state_dict"])
    bundle = ModelBundle(
        model=model,
        num_classes=obj["num_classes"],
        max_seq_len=obj["max_seq_len"],
    )
    return bundle.freeze() if obj["frozen"] else bundle


def _config_from_args(args: argparse.Namespace) -> TrainerConfig:
    return TrainerConfig(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        temperature=args.temperature,
        learning_rate=args.learning_rate,
        max_seq_len=args.max_seq_len,
        max_epochs=args.max_epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        seed=args.seed,
        encoder_spec=EncoderSpec(
            embed_width=args.embed_width,
            depth=args.depth,
            projection_width=args.projection_width,
        ),
        use_augmented_in_distill=args.use_augmented_in_distill,
    )


def cmd_train(args: argparse.Namespace) -> int:
    pairs = load_pairs(args.pairs)
    cfg = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"train: {len(pairs)} pairs", file=sys.stderr)
    teacher = train_teacher(pairs, cfg)
    save_bundle(teacher, out_dir / "teacher.pt")
    real = [p for p in pairs if p.origin == "real"]
    teacher_metrics = evaluate(teacher, real, input_field="clean")

    student = distill_student(teacher, pairs, cfg)
    save_bundle(student, out_dir / "student.pt")
    student_metrics = evaluate(student, real, input_field="noisy")

    report = {
        "teacher_on_clean": dataclasses.asdict(teacher_metrics),
        "student_on_noisy": dataclasses.asdict(student_metrics),
        "config": dataclasses.asdict(cfg),
        "pairs": len(pairs),
    }
    (out_dir / "metrics.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    bundle = load_bundle(Path(args.model))
    pairs = load_pairs(args.pairs)
    metrics = evaluate(
        bundle,
        pairs,
        input_field=args.input,
        openworld_threshold=args.openworld_threshold,
    )
    print(json.dumps(dataclasses.asdict(metrics)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sata-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="teacher pretraining plus distillation")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--temperature", type=float, default=4.0)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--max-seq-len", type=int, default=500)
    p.add_argument("--max-epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-width", type=int, default=32)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--projection-width", type=int, default=64)
    p.add_argument("--use-augmented-in-distill", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved bundle on a pairs file")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--input", choices=["clean", "noisy"], default="noisy")
    p.add_argument("--openworld-threshold", type=float, default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def execute(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
