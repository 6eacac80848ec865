"""Idealized packet-length generation from frame sequences.

Each application-layer frame gains a fixed per-frame record/encryption
overhead, then is split into MSS-sized segments plus a residual.  The result
(GPLS) is the perturbation-free packet-length sequence a flow would show
without buffering, fragmentation noise, or scheduling effects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol

from .model import DirectedFrame, Direction, TlsVersion

DEFAULT_MSS = 1460

# HTTP/2 frame header (9) + TLS record header (5) + content type (1) +
# AEAD auth tag (16); TLS 1.2 adds an 8-byte explicit IV.
TLS13_OVERHEAD = 31
TLS12_OVERHEAD = 39


class _Directed(Protocol):
    direction: Direction
    size: int


@dataclass(frozen=True)
class GplsConfig:
    delta_tls: int
    tau_mss: int = DEFAULT_MSS

    def __post_init__(self) -> None:
        if self.delta_tls < 0:
            raise ValueError(f"delta_tls must be non-negative, got {self.delta_tls}")
        if self.tau_mss < 1:
            raise ValueError(f"tau_mss must be positive, got {self.tau_mss}")
        if self.tau_mss <= self.delta_tls:
            raise ValueError(
                f"tau_mss ({self.tau_mss}) must exceed delta_tls ({self.delta_tls})"
            )


def delta_for_tls(version: TlsVersion) -> int:
    """Per-frame encapsulation overhead in bytes for a TLS version."""
    return TLS13_OVERHEAD if version is TlsVersion.TLS13 else TLS12_OVERHEAD


def config_for_tls(version: TlsVersion, tau_mss: int = DEFAULT_MSS) -> GplsConfig:
    return GplsConfig(delta_tls=delta_for_tls(version), tau_mss=tau_mss)


def encapsulate_frame(frame: _Directed, cfg: GplsConfig) -> DirectedFrame:
    """Add the fixed record overhead; direction is preserved."""
    return DirectedFrame(frame.direction, frame.size + cfg.delta_tls)


def segment_frame(frame: _Directed, cfg: GplsConfig) -> list[int]:
    """Split one encapsulated frame into signed MSS-bounded segments.

    floor(size / tau) full segments followed by the non-zero remainder, all
    carrying the frame's direction as sign.  An exact multiple yields no
    residual segment (a zero-length packet cannot occur on the wire).
    """
    sign = 1 if frame.direction is Direction.UP else -1
    full, residual = divmod(frame.size, cfg.tau_mss)
    out = [sign * cfg.tau_mss] * full
    if residual:
        out.append(sign * residual)
    return out


def generate_gpls(frames: Iterable[_Directed], cfg: GplsConfig) -> list[int]:
    """Concatenated segments of every encapsulated frame, in frame order."""
    out: list[int] = []
    for frame in frames:
        out.extend(segment_frame(encapsulate_frame(frame, cfg), cfg))
    return out
