"""End-to-end check of the pairs-file contract: the augmentation toolkit's
export feeds this trainer unchanged."""

import dataclasses
import subprocess
import sys

import pytest

from sata_trainer.data import load_pairs
from sata_trainer.encoder import EncoderSpec
from sata_trainer.train import TrainerConfig, evaluate, train_teacher

pytest.importorskip("sata", reason="augmentation toolkit not installed")


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "sata.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


def test_exported_pairs_train_end_to_end(tmp_path):
    from sata.ingest import save_dataset
    from sata.synth import make_overlap_corpus

    data = tmp_path / "flows.jsonl"
    save_dataset(make_overlap_corpus(num_flows=400, seed=3), data)
    pairs_path = tmp_path / "pairs.jsonl"
    run_cli(
        [
            "export-pairs",
            "--input",
            str(data),
            "--output",
            str(pairs_path),
            "--tls-overhead",
            "31",
        ]
    )

    pairs = load_pairs(pairs_path)
    assert all(p.origin == "real" and p.noisy is not None for p in pairs)
    # the corpus is single-class; relabel alternate pairs so a classifier can
    # be fitted on the exported file structure
    relabeled = [dataclasses.replace(p, label=i % 2) for i, p in enumerate(pairs)]
    cfg = TrainerConfig(
        learning_rate=3e-3,
        max_epochs=6,
        patience=5,
        batch_size=32,
        max_seq_len=64,
        seed=0,
        encoder_spec=EncoderSpec(16, 1, 16),
    )
    teacher = train_teacher(relabeled, cfg)
    metrics = evaluate(teacher, relabeled, input_field="clean")
    assert 0.0 <= metrics.accuracy <= 1.0
    assert teacher.frozen
