"""Dataset ingestion: the canonical JSON Lines format, splitting, SAN table.

File format (UTF-8, LF, one JSON object per line):
    line 1 header: {"schema_version": "sata-1", "num_classes": <optional int>}
    each further line, one trace:
    {"trace_id": str, "label": int, "region": str, "flows": [
        {"flow_id": str, "server_ip": str, "san": [str, ...],
         "tls": "1.2" | "1.3",
         "resources": [{"uri": str, "domain": str, "frames": [int, ...]}],
         "pls": [int, ...] | null, "gpls": [int, ...] | null}]}

Frames are signed bytes (positive = upstream); 0 encodes a zero-size
downstream frame, the only zero-size case that occurs on the wire.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .model import (
    Dataset,
    Flow,
    Resource,
    TlsVersion,
    Trace,
    frames_from_signed,
    frames_to_signed,
    validate_dataset,
)

SCHEMA_VERSION = "sata-1"


class DatasetError(ValueError):
    """Malformed dataset file; carries the offending line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    val_fraction: float
    test_fraction: float
    seed: int
    stratified: bool = True

    def __post_init__(self) -> None:
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(not (0.0 < f < 1.0) for f in fracs):
            raise ValueError(f"split fractions must lie in (0, 1), got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)!r}")


@dataclass(frozen=True)
class SanTable:
    """Partition of observed domains into SAN groups.

    group_of maps each domain to its group id; members maps a group id to the
    full set of member domains.  Groups observed to overlap are merged, so the
    member sets are disjoint and the id is the lexicographically smallest
    member domain.
    """

    group_of: dict[str, str]
    members: dict[str, frozenset[str]]

    def group_id(self, domain: str) -> Optional[str]:
        return self.group_of.get(domain)


def _trace_to_obj(trace: Trace) -> dict:
    flows = []
    for flow in trace.flows:
        obj = {
            "flow_id": flow.flow_id,
            "server_ip": flow.server_ip,
            "san": sorted(flow.san_set),
            "tls": flow.tls_version.value,
            "resources": [
                {
                    "uri": r.uri,
                    "domain": r.domain,
                    "frames": list(frames_to_signed(r.frames)),
                }
                for r in flow.resources
            ],
            "pls": list(flow.pls) if flow.pls is not None else None,
        }
        if flow.gpls is not None:
            obj["gpls"] = list(flow.gpls)
        flows.append(obj)
    return {
        "trace_id": trace.trace_id,
        "label": trace.label,
        "region": trace.region,
        "flows": flows,
    }


def _trace_from_obj(obj: dict) -> Trace:
    flows = []
    for fobj in obj["flows"]:
        resources = tuple(
            Resource(
                uri=r["uri"],
                domain=r["domain"],
                frames=frames_from_signed(r["frames"]),
            )
            for r in fobj["resources"]
        )
        pls = fobj.get("pls")
        gpls = fobj.get("gpls")
        flows.append(
            Flow(
                flow_id=fobj["flow_id"],
                server_ip=fobj["server_ip"],
                san_set=frozenset(fobj["san"]),
                tls_version=TlsVersion(fobj["tls"]),
                resources=resources,
                pls=tuple(pls) if pls is not None else None,
                gpls=tuple(gpls) if gpls is not None else None,
            )
        )
    return Trace(
        trace_id=obj["trace_id"],
        label=obj["label"],
        region=obj["region"],
        flows=tuple(flows),
    )


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Load and validate a dataset file.

    num_classes comes from the header when present, else 1 + max label.
    Raises DatasetError on malformed lines (with the line number), on a
    schema_version mismatch, and on validation violations (first 10 listed).
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetError("empty file: missing header line", line=1)

    def parse(line_no: int, text: str) -> dict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict):
            raise DatasetError("expected a JSON object", line=line_no)
        return obj

    header = parse(1, lines[0])
    version = header.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DatasetError(
            f"schema_version {version!r} does not match {SCHEMA_VERSION!r}", line=1
        )

    traces = []
    for line_no, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        obj = parse(line_no, text)
        try:
            traces.append(_trace_from_obj(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"bad trace record: {exc}", line=line_no) from exc

    num_classes = header.get("num_classes")
    if num_classes is None:
        num_classes = 1 + max((t.label for t in traces), default=-1)
        num_classes = max(num_classes, 1)
    dataset = Dataset(traces=tuple(traces), num_classes=num_classes)

    violations = validate_dataset(dataset)
    if violations:
        shown = "; ".join(str(v) for v in violations[:10])
        raise DatasetError(
            f"{len(violations)} validation violation(s): {shown}"
        )
    return dataset


def save_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    """Write a dataset in the canonical format (deterministic byte-for-byte)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        header = {"schema_version": dataset.schema_version, "num_classes": dataset.num_classes}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for trace in dataset.traces:
            fh.write(json.dumps(_trace_to_obj(trace), separators=(",", ":")) + "\n")


def _apportion(n: int, fractions: tuple[float, ...]) -> list[int]:
    """Largest-remainder apportionment of n items over the given fractions."""
    quotas = [n * f for f in fractions]
    counts = [int(q) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    short = n - sum(counts)
    # Ties go to the earlier split (train before val before test).
    order = sorted(range(len(fractions)), key=lambda i: (-remainders[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def split_dataset(
    dataset: Dataset, spec: SplitSpec
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition traces into train/val/test, deterministically for a seed.

    Stratified mode shuffles and apportions within each class, keeping
    per-class proportions within one trace of exact.
    """
    rng = random.Random(spec.seed)
    fractions = (spec.train_fraction, spec.val_fraction, spec.test_fraction)
    buckets: tuple[list[Trace], list[Trace], list[Trace]] = ([], [], [])

    if spec.stratified:
        by_label: dict[int, list[Trace]] = {}
        for trace in dataset.traces:
            by_label.setdefault(trace.label, []).append(trace)
        for label in sorted(by_label):
            group = by_label[label]
            if len(group) < 3:
                raise ValueError(
                    f"class {label} has only {len(group)} trace(s); "
                    "stratified splitting needs at least 3"
                )
            rng.shuffle(group)
            counts = _apportion(len(group), fractions)
            start = 0
            for bucket, count in zip(buckets, counts):
                bucket.extend(group[start : start + count])
                start += count
    else:
        pool = list(dataset.traces)
        rng.shuffle(pool)
        counts = _apportion(len(pool), fractions)
        start = 0
        for bucket, count in zip(buckets, counts):
            bucket.extend(pool[start : start + count])
            start += count

    def mk(traces: list[Trace]) -> Dataset:
        return Dataset(
            traces=tuple(traces),
            num_classes=dataset.num_classes,
            schema_version=dataset.schema_version,
        )

    return mk(buckets[0]), mk(buckets[1]), mk(buckets[2])


def build_san_table(dataset: Dataset) -> SanTable:
    """Union-find closure over observed SAN sets.

    SAN sets sharing any domain merge transitively; the resulting groups
    partition every domain observed in any flow's san_set.
    """
    parent: dict[str, str] = {}

    def find(d: str) -> str:
        root = d
        while parent[root] != root:
            root = parent[root]
        while parent[d] != root:
            parent[d], d = root, parent[d]
        return root

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for trace in dataset.traces:
        for flow in trace.flows:
            domains = sorted(flow.san_set)
            for d in domains:
                parent.setdefault(d, d)
            for d in domains[1:]:
                union(domains[0], d)

    groups: dict[str, set[str]] = {}
    for d in parent:
        groups.setdefault(find(d), set()).add(d)

    group_of: dict[str, str] = {}
    members: dict[str, frozenset[str]] = {}
    for group in groups.values():
        gid = min(group)
        members[gid] = frozenset(group)
        for d in group:
            group_of[d] = gid
    return SanTable(group_of=group_of, members=members)
