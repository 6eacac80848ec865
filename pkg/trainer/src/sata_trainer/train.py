"""Two-stage cross-layer alignment: teacher pretraining on clean idealized
sequences, then distillation into a student reading observed ones.

Both stages early-stop when validation macro-F1 fails to improve for
`patience` consecutive epochs; the checkpoint restored is the latest among
the equal-best validation scores.  With `deterministic` set (the default)
training is single-threaded and repeatable for a fixed seed.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import torch
import torch.nn.functional as F
from sklearn.metrics import f1_score, roc_auc_score

from .data import TrainingPair, encode_sequences
from .encoder import EncoderSpec, ModelBundle, SequenceClassifier
from .losses import cosine_alignment_loss, kd_loss, student_loss


@dataclass(frozen=True)
class TrainerConfig:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    temperature: float = 4.0
    learning_rate: float = 1e-4
    max_seq_len: int = 500
    max_epochs: int = 300
    patience: int = 15
    batch_size: int = 64
    seed: int = 0
    encoder_spec: EncoderSpec = field(default_factory=EncoderSpec)
    val_fraction: float = 0.15
    use_augmented_in_distill: bool = False
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be non-negative")
        if self.alpha + self.beta + self.gamma <= 0:
            raise ValueError("at least one loss weight must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 < self.patience < self.max_epochs):
            raise ValueError("need 0 < patience < max_epochs")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    auroc: Optional[float] = None


def _setup(cfg: TrainerConfig) -> None:
    torch.manual_seed(cfg.seed)
    if cfg.deterministic:
        torch.set_num_threads(1)


def _num_classes(pairs: Sequence[TrainingPair]) -> int:
    labels = {p.label for p in pairs if p.label >= 0}
    if len(labels) < 2:
        raise ValueError("training needs at least two classes")
    return 1 + max(labels)


def _split_train_val(
    pairs: list[TrainingPair], cfg: TrainerConfig
) -> tuple[list[TrainingPair], list[TrainingPair]]:
    pool = list(pairs)
    random.Random(cfg.seed).shuffle(pool)
    n_val = max(1, int(len(pool) * cfg.val_fraction))
    return pool[n_val:], pool[:n_val]


def _macro_f1(bundle: ModelBundle, inputs, labels: torch.Tensor) -> float:
    was_training = bundle.model.training
    bundle.model.eval()
    with torch.no_grad():
        _, z = bundle.model(*inputs)
        preds = z.argmax(dim=-1)
    if was_training:
        bundle.model.train()
    return float(
        f1_score(labels.numpy(), preds.numpy(), average="macro", zero_division=0)
    )


def _fit(
    bundle: ModelBundle,
    train_step: Callable[[list[int]], torch.Tensor],
    n_train: int,
    val_inputs,
    val_labels: torch.Tensor,
    cfg: TrainerConfig,
) -> ModelBundle:
    """Generic epoch loop; train_step(batch indices) returns one batch loss."""
    rng = random.Random(cfg.seed + 1)
    optimizer = torch.optim.Adam(
        (p for p in bundle.model.parameters() if p.requires_grad),
        lr=cfg.learning_rate,
    )
    best_f1 = -1.0
    best_state = copy.deepcopy(bundle.model.state_dict())
    stale = 0
    epochs = 0
    order = list(range(n_train))
    for _ in range(cfg.max_epochs):
        epochs += 1
        bundle.model.train()
        rng.shuffle(order)
        for i in range(0, n_train, cfg.batch_size):
            optimizer.zero_grad()
            loss = train_step(order[i : i + cfg.batch_size])
            loss.backward()
            optimizer.step()
        f1 = _macro_f1(bundle, val_inputs, val_labels)
        if f1 >= best_f1:
            # keep the latest among equal-best checkpoints; only strict
            # improvement resets the patience counter
            stale = 0 if f1 > best_f1 else stale + 1
            best_state = copy.deepcopy(bundle.model.state_dict())
            best_f1 = f1
        else:
            stale += 1
        if stale >= cfg.patience:
            break
    bundle.model.load_state_dict(best_state)
    bundle.model.eval()
    bundle.epochs_trained = epochs
    return bundle


def train_teacher(
    pairs: Sequence[TrainingPair],
    cfg: TrainerConfig,
    val_pairs: Optional[Sequence[TrainingPair]] = None,
) -> ModelBundle:
    """Supervised pretraining on clean sequences (real and augmented alike);
    the returned bundle is frozen."""
    if not pairs:
        raise ValueError("no training pairs")
    _setup(cfg)
    num_classes = _num_classes(pairs)
    if val_pairs is None:
        train_pairs, val_list = _split_train_val(list(pairs), cfg)
    else:
        train_pairs, val_list = list(pairs), list(val_pairs)

    inputs = encode_sequences([p.clean for p in train_pairs], cfg.max_seq_len)
    labels = torch.tensor([p.label for p in train_pairs], dtype=torch.long)
    val_inputs = encode_sequences([p.clean for p in val_list], cfg.max_seq_len)
    val_labels = torch.tensor([p.label for p in val_list], dtype=torch.long)

    bundle = ModelBundle(
        model=SequenceClassifier(num_classes, cfg.encoder_spec),
        num_classes=num_classes,
        max_seq_len=cfg.max_seq_len,
    )

    def step(batch: list[int]) -> torch.Tensor:
        _, z = bundle.model(inputs[0][batch], inputs[1][batch])
        return F.cross_entropy(z, labels[batch])

    _fit(bundle, step, len(train_pairs), val_inputs, val_labels, cfg)
    return bundle.freeze()


def distill_student(
    teacher: ModelBundle,
    pairs: Sequence[TrainingPair],
    cfg: TrainerConfig,
    val_pairs: Optional[Sequence[TrainingPair]] = None,
) -> ModelBundle:
    """Distill the frozen teacher into a student reading noisy sequences.

    Real pairs feed (clean -> teacher, noisy -> student); augmented pairs
    join only when cfg.use_augmented_in_distill is set, with their clean
    sequence standing in for the missing noisy one.
    """
    if not teacher.frozen:
        raise ValueError("teacher must be frozen before distillation")
    real = [p for p in pairs if p.origin == "real"]
    if not real:
        raise ValueError("distillation needs real pairs with observed sequences")
    _setup(cfg)

    used = list(real)
    if cfg.use_augmented_in_distill:
        used += [p for p in pairs if p.origin == "aug"]
    if val_pairs is None:
        train_pairs, val_list = _split_train_val(used, cfg)
    else:
        train_pairs, val_list = used, list(val_pairs)

    def noisy_of(p: TrainingPair) -> Sequence[int]:
        return p.noisy if p.noisy is not None else p.clean

    clean_in = encode_sequences([p.clean for p in train_pairs], cfg.max_seq_len)
    noisy_in = encode_sequences([noisy_of(p) for p in train_pairs], cfg.max_seq_len)
    labels = torch.tensor([p.label for p in train_pairs], dtype=torch.long)
    val_inputs = encode_sequences([noisy_of(p) for p in val_list], cfg.max_seq_len)
    val_labels = torch.tensor([p.label for p in val_list], dtype=torch.long)

    student = ModelBundle(
        model=copy.deepcopy(teacher.model),
        num_classes=teacher.num_classes,
        max_seq_len=cfg.max_seq_len,
    )
    for p in student.model.parameters():
        p.requires_grad_(True)

    def step(batch: list[int]) -> torch.Tensor:
        with torch.no_grad():
            v_t, z_t = teacher.model(clean_in[0][batch], clean_in[1][batch])
        v_s, z_s = student.model(noisy_in[0][batch], noisy_in[1][batch])
        cls = F.cross_entropy(z_s, labels[batch])
        kd = (
            kd_loss(z_t, z_s, cfg.temperature)
            if cfg.beta > 0
            else cls.new_zeros(())
        )
        cos = cosine_alignment_loss(v_t, v_s) if cfg.gamma > 0 else cls.new_zeros(())
        return student_loss(cls, kd, cos, cfg.alpha, cfg.beta, cfg.gamma)

    _fit(student, step, len(train_pairs), val_inputs, val_labels, cfg)
    return student


def evaluate(
    bundle: ModelBundle,
    test: Sequence[TrainingPair],
    input_field: str = "noisy",
    openworld_threshold: Optional[float] = None,
) -> Metrics:
    """Accuracy and macro-F1 of argmax predictions; with a threshold, samples
    whose max softmax falls below it predict "unknown" and AUROC scores the
    known-vs-unknown separation (labels outside [0, num_classes) are unknown).
    """
    if not test:
        raise ValueError("empty test set")
    if input_field not in ("clean", "noisy"):
        raise ValueError(f"unknown input field {input_field!r}")

    def seq_of(p: TrainingPair) -> Sequence[int]:
        if input_field == "clean":
            return p.clean
        if p.noisy is None:
            raise ValueError("pair lacks a noisy sequence")
        return p.noisy

    inputs = encode_sequences([seq_of(p) for p in test], bundle.max_seq_len)
    bundle.model.eval()
    with torch.no_grad():
        _, z = bundle.model(*inputs)
        conf, preds = F.softmax(z, dim=-1).max(dim=-1)

    nc = bundle.num_classes
    labels = torch.tensor(
        [p.label if 0 <= p.label < nc else nc for p in test], dtype=torch.long
    )
    out_preds = preds.clone()
    auroc = None
    if openworld_threshold is not None:
        out_preds[conf < openworld_threshold] = nc
        known = (labels < nc).long()
        if known.min() == 1:
            raise ValueError("AUROC needs at least one unknown-labeled sample")
        auroc = float(roc_auc_score(known.numpy(), conf.numpy()))
    accuracy = float((out_preds == labels).float().mean())
    macro = float(
        f1_score(labels.numpy(), out_preds.numpy(), average="macro", zero_division=0)
    )
    return Metrics(accuracy=accuracy, macro_f1=macro, auroc=auroc)
