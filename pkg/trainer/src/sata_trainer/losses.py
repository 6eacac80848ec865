"""Distillation losses: softened-logit KL, feature cosine alignment, and the
weighted student objective."""

from __future__ import annotations

import torch
import torch.nn.functional as F


def kd_loss(z_t: torch.Tensor, z_s: torch.Tensor, temperature: float) -> torch.Tensor:
    """T^2-scaled KL divergence between softened teacher and student logits,
    averaged over the batch; the teacher distribution is the reference."""
    if z_t.shape != z_s.shape:
        raise ValueError(f"logit shapes differ: {tuple(z_t.shape)} vs {tuple(z_s.shape)}")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    log_q = F.log_softmax(z_s / temperature, dim=-1)
    p = F.softmax(z_t / temperature, dim=-1)
    value = temperature * temperature * F.kl_div(log_q, p, reduction="batchmean")
    # the divergence is non-negative; float rounding may dip a hair below zero
    return value.clamp_min(0.0)


def cosine_alignment_loss(v_t: torch.Tensor, v_s: torch.Tensor) -> torch.Tensor:
    """One minus the mean cosine similarity between student and teacher
    feature vectors.  Zero-norm vectors are an error: silently smoothing them
    would hide a collapsed encoder."""
    if v_t.shape != v_s.shape:
        raise ValueError(f"feature shapes differ: {tuple(v_t.shape)} vs {tuple(v_s.shape)}")
    if (v_t.norm(dim=-1) == 0).any() or (v_s.norm(dim=-1) == 0).any():
        raise ValueError("zero-norm feature vector in cosine alignment")
    return 1.0 - F.cosine_similarity(v_s, v_t, dim=-1).mean()


def student_loss(
    cls_loss: torch.Tensor,
    kd: torch.Tensor,
    cos: torch.Tensor,
    alpha: float,
    beta: float,
    gamma: float,
) -> torch.Tensor:
    return alpha * cls_loss + beta * kd + gamma * cos
