"""Generic sequence encoder shared by teacher and student.

Bucketized signed lengths are embedded and enriched with a learned map of
the normalized signed magnitude, passed through residual 1-D convolution
blocks, pooled under the padding mask (masked mean concatenated with a
scaled sum, so byte-total statistics survive pooling), projected to the
feature vector the alignment loss compares, and classified linearly.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import VOCAB_SIZE


@dataclass(frozen=True)
class EncoderSpec:
    embed_width: int = 32
    depth: int = 2
    projection_width: int = 64


class SequenceClassifier(nn.Module):
    def __init__(self, num_classes: int, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        self.num_classes = num_classes
        self.embedding = nn.Embedding(VOCAB_SIZE, spec.embed_width, padding_idx=0)
        self.scalar_proj = nn.Linear(1, spec.embed_width)
        self.blocks = nn.ModuleList(
            nn.Conv1d(spec.embed_width, spec.embed_width, kernel_size=3, padding=1)
            for _ in range(spec.depth)
        )
        self.projection = nn.Linear(2 * spec.embed_width, spec.projection_width)
        self.classifier = nn.Linear(spec.projection_width, num_classes)

    def forward(
        self, tokens: torch.Tensor, scalars: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(tokens, scalars) (N, L) -> (features v (N, P), logits z (N, C))."""
        mask = (tokens != 0).float()
        x = self.embedding(tokens) + self.scalar_proj(scalars.unsqueeze(-1))
        # zero padded positions before the convolutions so nothing bleeds
        # through the kernel window into real positions
        x = (x * mask.unsqueeze(-1)).transpose(1, 2)
        for block in self.blocks:
            x = x + F.relu(block(x))
        x = x.transpose(1, 2) * mask.unsqueeze(-1)
        mean = x.sum(dim=1) / mask.sum(dim=1, keepdim=True).clamp(min=1.0)
        total = x.sum(dim=1) / 50.0
        v = self.projection(torch.cat([mean, total], dim=-1))
        z = self.classifier(F.relu(v))
        return v, z


@dataclass
class ModelBundle:
    """encoder + projection + classifier, plus the freeze state that gates
    its use as a distillation teacher."""

    model: SequenceClassifier
    num_classes: int
    max_seq_len: int
    frozen: bool = False
    epochs_trained: int = 0

    def freeze(self) -> "ModelBundle":
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.model.eval()
        self.frozen = True
        return self

    def parameter_snapshot(self) -> dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.model.state_dict().items()}
