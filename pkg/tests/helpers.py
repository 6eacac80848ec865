"""Small builders shared by the test modules."""

from __future__ import annotations

from typing import Iterable, Optional

from sata.model import (
    Dataset,
    Flow,
    Resource,
    TlsVersion,
    Trace,
    frames_from_signed,
)


def res(uri: str, domain: str, signed: Iterable[int]) -> Resource:
    return Resource(uri=uri, domain=domain, frames=frames_from_signed(signed))


def flow(
    resources: list[Resource],
    flow_id: str = "f0",
    server_ip: str = "10.0.0.1",
    san: Optional[set[str]] = None,
    tls: TlsVersion = TlsVersion.TLS13,
    pls: Optional[list[int]] = None,
    gpls: Optional[list[int]] = None,
) -> Flow:
    if san is None:
        san = {r.domain for r in resources}
    return Flow(
        flow_id=flow_id,
        server_ip=server_ip,
        san_set=frozenset(san),
        tls_version=tls,
        resources=tuple(resources),
        pls=tuple(pls) if pls is not None else None,
        gpls=tuple(gpls) if gpls is not None else None,
    )


def trace(
    flows: list[Flow], trace_id: str = "t0", label: int = 0, region: str = "lab"
) -> Trace:
    return Trace(trace_id=trace_id, label=label, region=region, flows=tuple(flows))


def dataset(traces: list[Trace], num_classes: Optional[int] = None) -> Dataset:
    if num_classes is None:
        num_classes = 1 + max(t.label for t in traces)
    return Dataset(traces=tuple(traces), num_classes=num_classes)


def simple_trace(trace_id: str = "t0", label: int = 0) -> Trace:
    r1 = res("u/1", "a.example", [100, -2000, -300])
    r2 = res("u/2", "a.example", [120, -500])
    return trace([flow([r1, r2])], trace_id=trace_id, label=label)
