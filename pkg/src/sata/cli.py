"""Command-line entry point.

Subcommands: ingest, fit, augment, gpls, coverage, overlap, stability,
export-pairs.  Exit codes: 0 success, 1 runtime or data error, 2 usage
error.  Every file-producing command writes a sidecar run manifest
(<output>.manifest.json); all randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import __version__
from .gpls import DEFAULT_MSS, GplsConfig, config_for_tls, generate_gpls
from .ingest import load_dataset, save_dataset
from .metrics import (
    Feature,
    PatternLevel,
    StabilityScope,
    gpls_overlap_detail,
    pattern_coverage_detail,
    stable_flow_ratio_detail,
)
from .model import TlsVersion, flatten_flow_frames
from .modelfile import fit_models, load_models, save_models
from .pipeline import AugmentOptions, attach_gpls, augment_dataset
from .frame_augment import DEFAULT_ANCHOR_CV
from .recompose import DEFAULT_MAX_CONCURRENT_FLOWS, DEFAULT_P_COALESCE


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: Optional[int]
    inputs: list[str]
    outputs: list[str]
    tool_version: str
    started: str


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_manifest(args: argparse.Namespace, inputs: list[str], outputs: list[str]) -> None:
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in {"func", "command"} and not callable(v)
    }
    manifest = RunManifest(
        command=args.command,
        parameters=params,
        seed=getattr(args, "seed", None),
        inputs=inputs,
        outputs=outputs,
        tool_version=__version__,
        started=datetime.now(timezone.utc).isoformat(),
    )
    for output in outputs:
        Path(output + ".manifest.json").write_text(
            json.dumps(asdict(manifest), indent=2, default=str) + "\n",
            encoding="utf-8",
        )


def _add_gpls_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mss", type=int, default=DEFAULT_MSS, help="segmentation threshold in bytes")
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--tls-overhead", type=int, default=None, help="explicit per-frame overhead in bytes"
    )
    group.add_argument(
        "--tls", choices=["1.2", "1.3"], default=None, help="derive the overhead from a TLS version"
    )


def _resolve_cfg(args: argparse.Namespace) -> Optional[GplsConfig]:
    """Explicit overhead wins, then a TLS version; None means per-flow."""
    if args.tls_overhead is not None:
        return GplsConfig(delta_tls=args.tls_overhead, tau_mss=args.mss)
    if args.tls is not None:
        return config_for_tls(TlsVersion(args.tls), args.mss)
    return None


def _emit_metric(metric: str, level: str, result) -> None:
    print(
        json.dumps(
            {
                "metric": metric,
                "level": level,
                "value": result.value,
                "numerator": result.numerator,
                "denominator": result.denominator,
            },
            separators=(",", ":"),
        )
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    _log(f"ingest: {len(dataset.traces)} traces, {dataset.num_classes} classes")
    save_dataset(dataset, args.output)
    _write_manifest(args, [args.input], [args.output])
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    _log(f"fit: loaded {len(dataset.traces)} traces")
    models = fit_models(
        dataset,
        anchor_cv_threshold=args.anchor_cv,
        max_concurrent_flows=args.max_concurrent_flows,
    )
    _log(
        f"fit: {len(models.san_table.members)} SAN groups, "
        f"{len(models.pattern_pool.patterns)} pattern keys, "
        f"{len(models.profiles)} resource profiles"
    )
    save_models(models, args.output)
    _write_manifest(args, [args.input], [args.output])
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    _log(f"augment: loaded {len(dataset.traces)} traces")
    models = load_models(args.models)
    opts = AugmentOptions(
        samples=args.samples,
        seed=args.seed,
        p_move=args.p_move,
        p_coalesce=args.p_coalesce,
        tau_mss=args.mss,
        tls_overhead=args.tls_overhead,
        recompose=not args.no_recompose,
        frame_augment=not args.no_frame_aug,
        shift=not args.no_shift,
        gpls=not args.no_gpls,
        workers=args.workers,
    )
    out = augment_dataset(dataset, models, opts)
    _log(f"augment: produced {len(out.traces)} synthetic traces")
    save_dataset(out, args.output)
    _write_manifest(args, [args.input, args.models], [args.output])
    return 0


def cmd_gpls(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    out = attach_gpls(dataset, _resolve_cfg(args), tau_mss=args.mss)
    _log(f"gpls: annotated {sum(len(t.flows) for t in out.traces)} flows")
    save_dataset(out, args.output)
    _write_manifest(args, [args.input], [args.output])
    return 0


def cmd_coverage(args: argparse.Namespace) -> int:
    train = [load_dataset(args.train)]
    for path in args.aug or []:
        train.append(load_dataset(path))
    test = load_dataset(args.test)
    level = PatternLevel(args.level)
    result = pattern_coverage_detail(train, test, level)
    _emit_metric("coverage", level.value, result)
    return 0


def cmd_overlap(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    result = gpls_overlap_detail(dataset, _resolve_cfg(args), tau_mss=args.mss)
    _emit_metric("overlap", "flow", result)
    return 0


def cmd_stability(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    result = stable_flow_ratio_detail(
        dataset,
        Feature(args.feature),
        StabilityScope(args.scope),
        _resolve_cfg(args),
        tau_mss=args.mss,
    )
    _emit_metric("stability", args.feature, result)
    return 0


def cmd_export_pairs(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.input)
    cfg = _resolve_cfg(args)
    lines: list[str] = []
    skipped = 0

    def clean_of(flow) -> list[int]:
        if flow.gpls is not None:
            return list(flow.gpls)
        used = cfg if cfg is not None else config_for_tls(flow.tls_version, args.mss)
        return generate_gpls(flatten_flow_frames(flow), used)

    for trace in dataset.traces:
        for flow in trace.flows:
            if flow.pls is None:
                skipped += 1
                continue
            lines.append(
                json.dumps(
                    {
                        "clean": clean_of(flow),
                        "noisy": list(flow.pls),
                        "label": trace.label,
                        "origin": "real",
                    },
                    separators=(",", ":"),
                )
            )
    if skipped:
        _log(f"export-pairs: skipped {skipped} flows without a recorded pls")
    if args.aug:
        aug = load_dataset(args.aug)
        for trace in aug.traces:
            for flow in trace.flows:
                lines.append(
                    json.dumps(
                        {
                            "clean": clean_of(flow),
                            "noisy": None,
                            "label": trace.label,
                            "origin": "aug",
                        },
                        separators=(",", ":"),
                    )
                )
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log(f"export-pairs: wrote {len(lines)} pairs")
    inputs = [args.input] + ([args.aug] if args.aug else [])
    _write_manifest(args, inputs, [args.output])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sata",
        description="Protocol-plausible HTTP/2 traffic augmentation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit augmentation models on a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--anchor-cv", type=float, default=DEFAULT_ANCHOR_CV)
    p.add_argument("--max-concurrent-flows", type=int, default=DEFAULT_MAX_CONCURRENT_FLOWS)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("augment", help="synthesize augmented traces")
    p.add_argument("--input", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--samples", type=int, default=1, help="variants per input trace")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--p-move", type=float, default=0.2)
    p.add_argument("--p-coalesce", type=float, default=DEFAULT_P_COALESCE)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-recompose", action="store_true")
    p.add_argument("--no-frame-aug", action="store_true")
    p.add_argument("--no-shift", action="store_true")
    p.add_argument("--no-gpls", action="store_true")
    _add_gpls_flags(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("gpls", help="attach idealized packet-length sequences")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_gpls_flags(p)
    p.set_defaults(func=cmd_gpls)

    p = sub.add_parser("coverage", help="pattern coverage of test by train (+aug)")
    p.add_argument("--train", required=True)
    p.add_argument("--aug", action="append", default=[])
    p.add_argument("--test", required=True)
    p.add_argument(
        "--level",
        choices=[l.value for l in PatternLevel],
        default=PatternLevel.FLOW_COMPOSITION.value,
    )
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("overlap", help="exact-match rate of generated vs real pls")
    p.add_argument("--input", required=True)
    _add_gpls_flags(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("stability", help="stable-flow ratio of a feature")
    p.add_argument("--input", required=True)
    p.add_argument("--feature", choices=[f.value for f in Feature], required=True)
    p.add_argument(
        "--scope",
        choices=[s.value for s in StabilityScope],
        default=StabilityScope.ALL_RESOURCES.value,
    )
    _add_gpls_flags(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("export-pairs", help="emit training pairs for the trainer")
    p.add_argument("--input", required=True)
    p.add_argument("--aug", default=None)
    p.add_argument("--output", required=True)
    _add_gpls_flags(p)
    p.set_defaults(func=cmd_export_pairs)

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
    except Exception as exc:  # data and runtime errors map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
