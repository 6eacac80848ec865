"""Synthetic distillation benchmark: classes with distinctive idealized
sequences, observed sequences derived from them by fragmentation and jitter.

Clean prototypes look like idealized flows (request packet, then full-size
response segments and a residual); class identity lives in the burst
structure, with residual-sum signatures kept well separated so the clean
task is reliably learnable.  Noise leaves a fraction of flows untouched and
applies a bounded number of packet splits plus size jitter to the rest.
The test split defaults to a harsher noise level than training, probing
generalization across transmission conditions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .data import TrainingPair

MSS = 1460


@dataclass(frozen=True)
class NoiseSpec:
    """Per-flow corruption: p_clean flows pass through untouched; the rest
    get 1..max_splits packet splits and per-packet size jitter."""

    p_clean: float = 0.25
    max_splits: int = 6
    jitter_prob: float = 0.3
    jitter_amp: int = 60


TRAIN_NOISE = NoiseSpec()
TEST_NOISE = NoiseSpec(p_clean=0.15, max_splits=8, jitter_prob=0.35, jitter_amp=80)


def _class_structures(
    num_classes: int, rng: random.Random, min_residual_gap: int = 320
) -> list[tuple[tuple[int, int, int], ...]]:
    """Per-class bursts of (request size, full segments, residual), with
    residual sums at least min_residual_gap apart across classes."""
    out: list[tuple[tuple[int, int, int], ...]] = []
    sums: list[int] = []
    while len(out) < num_classes:
        structure = tuple(
            (rng.choice([160, 635]), rng.randint(0, 3), rng.randint(120, 1400))
            for _ in range(4)
        )
        total = sum(burst[2] for burst in structure)
        if any(abs(total - seen) < min_residual_gap for seen in sums):
            continue
        out.append(structure)
        sums.append(total)
    return out


def _clean_sequence(
    structure: tuple[tuple[int, int, int], ...], rng: random.Random
) -> list[int]:
    """One clean variant: discrete offsets mimic header-compression state
    switches without destroying class structure."""
    seq: list[int] = []
    for request, full, residual in structure:
        seq.append(request + rng.choice([0, 0, 17]))
        seq.extend([-MSS] * full)
        seq.append(-min(MSS - 1, residual + rng.choice([0, 0, 34])))
    return seq


def _noisy_sequence(clean: list[int], rng: random.Random, noise: NoiseSpec) -> list[int]:
    if rng.random() < noise.p_clean:
        return list(clean)
    out: list[int] = []
    for value in clean:
        sign = 1 if value > 0 else -1
        size = abs(value)
        if rng.random() < noise.jitter_prob:
            size = max(1, size + rng.randint(-noise.jitter_amp, noise.jitter_amp))
        out.append(sign * size)
    for _ in range(rng.randint(1, noise.max_splits)):
        splittable = [i for i, v in enumerate(out) if abs(v) >= 2]
        if not splittable:
            break
        i = splittable[rng.randrange(len(splittable))]
        sign = 1 if out[i] > 0 else -1
        size = abs(out[i])
        cut = rng.randint(1, size - 1)
        out[i : i + 1] = [sign * cut, sign * (size - cut)]
    return out


def make_distillation_corpus(
    num_classes: int = 10,
    train_per_class: int = 8,
    val_per_class: int = 10,
    test_per_class: int = 200,
    train_noise: NoiseSpec = TRAIN_NOISE,
    test_noise: NoiseSpec = TEST_NOISE,
    seed: int = 0,
) -> tuple[list[TrainingPair], list[TrainingPair], list[TrainingPair]]:
    rng = random.Random(seed)
    structures = _class_structures(num_classes, rng)

    def make(label: int, count: int, noise: NoiseSpec) -> list[TrainingPair]:
        pairs = []
        for _ in range(count):
            clean = _clean_sequence(structures[label], rng)
            noisy = _noisy_sequence(clean, rng, noise)
            pairs.append(
                TrainingPair(
                    clean=tuple(clean), noisy=tuple(noisy), label=label, origin="real"
                )
            )
        return pairs

    train, val, test = [], [], []
    for label in range(num_classes):
        train += make(label, train_per_class, train_noise)
        val += make(label, val_per_class, train_noise)
        test += make(label, test_per_class, test_noise)
    return train, val, test
