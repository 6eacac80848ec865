"""Canonical domain types for cross-layer aligned HTTP/2 traffic records.

A website visit is a Trace, made of Flows (one TCP connection each), made of
Resources (one HTTP/2 request/response exchange each).  Every resource carries
an ordered frame sequence of directed sizes; flows optionally carry the
observed packet-length sequence (PLS) and/or an idealized one (GPLS).

All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional


class Direction(Enum):
    UP = "up"
    DOWN = "down"


class TlsVersion(Enum):
    TLS12 = "1.2"
    TLS13 = "1.3"


@dataclass(frozen=True)
class DirectedFrame:
    """One HTTP/2 HEADERS or DATA frame: direction plus payload size in bytes.

    Size zero is legal (servers may close a stream with an empty DATA frame)
    but is only representable on the wire for the DOWN direction.
    """

    direction: Direction
    size: int

    @property
    def signed(self) -> int:
        """Signed-byte encoding: positive = UP, non-positive = DOWN."""
        if self.direction is Direction.UP:
            if self.size == 0:
                raise ValueError("zero-size UP frame has no signed encoding")
            return self.size
        return -self.size


def frame_from_signed(value: int) -> DirectedFrame:
    """Inverse of DirectedFrame.signed; 0 decodes to a zero-size DOWN frame."""
    if value > 0:
        return DirectedFrame(Direction.UP, value)
    return DirectedFrame(Direction.DOWN, -value)


# A resource's frame sequence is an ordered tuple of DirectedFrame.
FrameSeq = tuple[DirectedFrame, ...]


def frames_from_signed(values: Iterable[int]) -> FrameSeq:
    return tuple(frame_from_signed(v) for v in values)


def frames_to_signed(frames: Iterable[DirectedFrame]) -> tuple[int, ...]:
    return tuple(f.signed for f in frames)


@dataclass(frozen=True)
class Resource:
    uri: str
    domain: str
    frames: FrameSeq


@dataclass(frozen=True)
class Flow:
    flow_id: str
    server_ip: str
    san_set: frozenset[str]
    tls_version: TlsVersion
    resources: tuple[Resource, ...]
    pls: Optional[tuple[int, ...]] = None
    gpls: Optional[tuple[int, ...]] = None


@dataclass(frozen=True)
class Trace:
    trace_id: str
    label: int
    region: str
    flows: tuple[Flow, ...]


@dataclass(frozen=True)
class Dataset:
    traces: tuple[Trace, ...]
    num_classes: int
    schema_version: str = "sata-1"


@dataclass(frozen=True)
class Violation:
    """One structural-invariant violation, with a path locating it."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class FlowFrame:
    """A frame inside a flow-level sequence, annotated with the index (1-based)
    of the resource it currently belongs to."""

    direction: Direction
    size: int
    source: int

    @property
    def signed(self) -> int:
        return DirectedFrame(self.direction, self.size).signed


# Flow-level frame sequence: concatenation of per-resource sequences.
FlowFrameSequence = tuple[FlowFrame, ...]


def _check_frames(frames: FrameSeq, path: str, out: list[Violation]) -> None:
    if not frames:
        out.append(Violation(path, "frame sequence is empty"))
        return
    if frames[0].direction is not Direction.UP:
        out.append(Violation(f"{path}[0]", "resource must begin with an UP frame"))
    for i, frame in enumerate(frames):
        if frame.size < 0:
            out.append(Violation(f"{path}[{i}]", f"negative frame size {frame.size}"))
        if frame.size == 0 and frame.direction is Direction.UP:
            out.append(Violation(f"{path}[{i}]", "zero-size frame must be DOWN"))


def validate_trace(trace: Trace) -> list[Violation]:
    """Collect every structural-invariant violation in a trace.

    Pure and deterministic; an empty list means the trace is valid.
    Violations are data, not failures: callers decide whether to raise.
    """
    out: list[Violation] = []
    if trace.label < 0:
        out.append(Violation("label", f"label {trace.label} is negative"))
    if not trace.flows:
        out.append(Violation("flows", "trace has no flows"))
    for fi, flow in enumerate(trace.flows):
        fpath = f"flows[{fi}]"
        if not flow.resources:
            out.append(Violation(fpath, "flow has no resources"))
        for ri, res in enumerate(flow.resources):
            rpath = f"{fpath}.resources[{ri}]"
            if not res.uri:
                out.append(Violation(rpath, "resource uri is empty"))
            if not res.domain:
                out.append(Violation(rpath, "resource domain is empty"))
            else:
                if res.domain != res.domain.lower():
                    out.append(Violation(rpath, f"domain {res.domain!r} is not lowercase"))
                if any(c in res.domain for c in ":/ "):
                    out.append(
                        Violation(rpath, f"domain {res.domain!r} carries scheme/path/space")
                    )
                if flow.san_set and res.domain not in flow.san_set:
                    out.append(
                        Violation(rpath, f"domain {res.domain!r} not in flow san_set")
                    )
            _check_frames(res.frames, f"{rpath}.frames", out)
        if flow.pls is not None:
            for pi, p in enumerate(flow.pls):
                if p == 0:
                    out.append(Violation(f"{fpath}.pls[{pi}]", "pls entry is zero"))
    return out


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Dataset-level validation: per-trace checks plus label-range checks."""
    out: list[Violation] = []
    if dataset.num_classes < 1:
        out.append(Violation("num_classes", "must be positive"))
    for ti, trace in enumerate(dataset.traces):
        for v in validate_trace(trace):
            out.append(Violation(f"traces[{ti}].{v.path}", v.message))
        if not (0 <= trace.label < dataset.num_classes):
            out.append(
                Violation(
                    f"traces[{ti}].label",
                    f"label {trace.label} outside [0, {dataset.num_classes})",
                )
            )
    return out


def flatten_flow_frames(flow: Flow) -> FlowFrameSequence:
    """Concatenate the flow's per-resource frame sequences in resource order.

    Each output frame is annotated with the 1-based index of its source
    resource.  Raises ValueError on a flow with no resources.
    """
    if not flow.resources:
        raise ValueError(f"flow {flow.flow_id!r} has no resources")
    out: list[FlowFrame] = []
    for t, res in enumerate(flow.resources, start=1):
        for frame in res.frames:
            out.append(FlowFrame(frame.direction, frame.size, t))
    return tuple(out)
