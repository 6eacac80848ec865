"""Training pairs and their tensor encoding.

Pairs arrive as JSON Lines, one object per flow:
    {"clean": [int, ...], "noisy": [int, ...] | null,
     "label": int, "origin": "real" | "aug"}

Each signed packet length becomes two aligned inputs: a log2 direction
bucket for the embedding, and the MSS-normalized signed magnitude as a
scalar channel (so pooled representations can express byte totals, which
fragmentation preserves).  Position 0 of the vocabulary is padding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import torch

MAX_EXPONENT = 14  # buckets cover magnitudes up to 2^14 and beyond
VOCAB_SIZE = 2 * (MAX_EXPONENT + 1) + 1  # per-direction buckets plus padding
SCALAR_SCALE = 1460.0  # typical MSS; keeps the scalar channel near unit range


@dataclass(frozen=True)
class TrainingPair:
    clean: tuple[int, ...]
    noisy: Optional[tuple[int, ...]]
    label: int
    origin: str

    def __post_init__(self) -> None:
        if not self.clean:
            raise ValueError("clean sequence must be non-empty")
        if self.origin not in ("real", "aug"):
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.origin == "real" and self.noisy is None:
            raise ValueError("real pairs must carry a noisy sequence")


def load_pairs(path: Union[str, Path]) -> list[TrainingPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pairs.append(
                    TrainingPair(
                        clean=tuple(obj["clean"]),
                        noisy=tuple(obj["noisy"]) if obj["noisy"] is not None else None,
                        label=int(obj["label"]),
                        origin=obj["origin"],
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"line {line_no}: bad training pair: {exc}") from exc
    if not pairs:
        raise ValueError(f"no training pairs in {path}")
    return pairs


def bucketize(value: int) -> int:
    """Signed length -> embedding token (1..VOCAB_SIZE-1; 0 is padding)."""
    if value == 0:
        raise ValueError("packet lengths are non-zero by construction")
    exponent = min(int(math.log2(abs(value))), MAX_EXPONENT)
    if value > 0:
        return 1 + exponent
    return 1 + (MAX_EXPONENT + 1) + exponent


def encode_sequences(
    sequences: Sequence[Sequence[int]], max_seq_len: int
) -> tuple[torch.Tensor, torch.Tensor]:
    """(tokens, scalars), both (N, max_seq_len): bucket ids for the embedding
    and normalized signed magnitudes for the scalar channel."""
    tokens = torch.zeros(len(sequences), max_seq_len, dtype=torch.long)
    scalars = torch.zeros(len(sequences), max_seq_len)
    for i, seq in enumerate(sequences):
        clipped = list(seq)[:max_seq_len]
        tokens[i, : len(clipped)] = torch.tensor(
            [bucketize(v) for v in clipped], dtype=torch.long
        )
        scalars[i, : len(clipped)] = torch.tensor(
            [v / SCALAR_SCALE for v in clipped]
        )
    return tokens, scalars
