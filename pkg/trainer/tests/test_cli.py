import json

from sata_trainer.cli import execute, load_bundle
from sata_trainer.synth import make_distillation_corpus


def write_pairs(path, pairs):
    with path.open("w") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {
                        "clean": list(p.clean),
                        "noisy": list(p.noisy) if p.noisy is not None else None,
                        "label": p.label,
                        "origin": p.origin,
                    }
                )
                + "\n"
            )


def test_train_and_evaluate_commands(tmp_path, capsys):
    train, _, _ = make_distillation_corpus(
        num_classes=3, train_per_class=8, val_per_class=2, test_per_class=2, seed=4
    )
    pairs_path = tmp_path / "pairs.jsonl"
    write_pairs(pairs_path, train)
    out_dir = tmp_path / "run"

    code = execute(
        [
            "train",
            "--pairs",
            str(pairs_path),
            "--out-dir",
            str(out_dir),
            "--learning-rate",
            "3e-3",
            "--max-epochs",
            "6",
            "--patience",
            "5",
            "--batch-size",
            "16",
            "--max-seq-len",
            "64",
            "--embed-width",
            "16",
            "--depth",
            "1",
            "--projection-width",
            "16",
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert set(report) >= {"teacher_on_clean", "student_on_noisy", "config"}
    assert (out_dir / "teacher.pt").exists()
    assert (out_dir / "student.pt").exists()
    assert (out_dir / "metrics.json").exists()

    teacher = load_bundle(out_dir / "teacher.pt")
    assert teacher.frozen
    student = load_bundle(out_dir / "student.pt")
    assert not student.frozen

    code = execute(
        [
            "evaluate",
            "--model",
            str(out_dir / "student.pt"),
            "--pairs",
            str(pairs_path),
            "--input",
            "noisy",
        ]
    )
    assert code == 0
    metrics = json.loads(capsys.readouterr().out.strip())
    assert set(metrics) == {"accuracy", "macro_f1", "auroc"}


def test_usage_error_exit_code():
    assert execute(["train", "--bogus"]) == 2
    assert execute(["nope"]) == 2


def test_missing_file_is_runtime_error(tmp_path):
    assert (
        execute(
            [
                "evaluate",
                "--model",
                str(tmp_path / "absent.pt"),
                "--pairs",
                str(tmp_path / "absent.jsonl"),
            ]
        )
        == 1
    )
