"""Pattern coverage, GPLS/PLS overlap, and feature-stability ratios.

All pattern matching is strict exact-match: two patterns are the same only
when their canonical byte keys are equal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

from .gpls import DEFAULT_MSS, GplsConfig, config_for_tls, generate_gpls
from .model import Dataset, Flow, Resource, Trace, flatten_flow_frames, frames_to_signed


class PatternLevel(Enum):
    RESOURCE_FRAMES = "resource-frames"
    FLOW_FRAMES = "flow-frames"
    FLOW_COMPOSITION = "flow"
    TRACE_COMPOSITION = "trace"


class Feature(Enum):
    PLS = "pls"
    FS = "fs"
    GPLS = "gpls"


class StabilityScope(Enum):
    ALL_RESOURCES = "all"
    STABLE_RESOURCES_ONLY = "stable-only"


@dataclass(frozen=True)
class MetricResult:
    value: float
    numerator: int
    denominator: int


def _key(payload) -> bytes:
    return json.dumps(payload, separators=(",", ":")).encode("utf-8")


def pattern_key(obj: Union[Resource, Flow, Trace], level: PatternLevel) -> bytes:
    """Canonical byte key of an object's pattern at the given granularity."""
    if level is PatternLevel.RESOURCE_FRAMES:
        if not isinstance(obj, Resource):
            raise TypeError(f"level {level.value} needs a Resource, got {type(obj).__name__}")
        return _key(list(frames_to_signed(obj.frames)))
    if level is PatternLevel.FLOW_FRAMES:
        if not isinstance(obj, Flow):
            raise TypeError(f"level {level.value} needs a Flow, got {type(obj).__name__}")
        return _key([f.signed for f in flatten_flow_frames(obj)])
    if level is PatternLevel.FLOW_COMPOSITION:
        if not isinstance(obj, Flow):
            raise TypeError(f"level {level.value} needs a Flow, got {type(obj).__name__}")
        return _key(sorted(r.uri for r in obj.resources))
    if level is PatternLevel.TRACE_COMPOSITION:
        if not isinstance(obj, Trace):
            raise TypeError(f"level {level.value} needs a Trace, got {type(obj).__name__}")
        return _key(
            sorted(
                pattern_key(f, PatternLevel.FLOW_COMPOSITION).decode("utf-8")
                for f in obj.flows
            )
        )
    raise ValueError(f"unknown level {level!r}")


def dataset_pattern_keys(dataset: Dataset, level: PatternLevel) -> set[bytes]:
    keys: set[bytes] = set()
    for trace in dataset.traces:
        if level is PatternLevel.TRACE_COMPOSITION:
            keys.add(pattern_key(trace, level))
        elif level is PatternLevel.RESOURCE_FRAMES:
            for flow in trace.flows:
                for res in flow.resources:
                    keys.add(pattern_key(res, level))
        else:
            for flow in trace.flows:
                keys.add(pattern_key(flow, level))
    return keys


def pattern_coverage_detail(
    train: Union[Dataset, Iterable[Dataset]],
    test: Dataset,
    level: PatternLevel,
) -> MetricResult:
    """Fraction of distinct test patterns present in the training side.

    `train` may be one dataset or several (e.g. real plus augmented); their
    pattern sets are unioned.  Raises ValueError when the test side has no
    pattern at the level.
    """
    if isinstance(train, Dataset):
        train = [train]
    train_keys: set[bytes] = set()
    for ds in train:
        train_keys |= dataset_pattern_keys(ds, level)
    test_keys = dataset_pattern_keys(test, level)
    if not test_keys:
        raise ValueError(f"test side has no pattern at level {level.value!r}")
    covered = len(test_keys & train_keys)
    return MetricResult(covered / len(test_keys), covered, len(test_keys))


def pattern_coverage(
    train: Union[Dataset, Iterable[Dataset]],
    test: Dataset,
    level: PatternLevel,
) -> float:
    return pattern_coverage_detail(train, test, level).value


def _flow_gpls(flow: Flow, cfg: Optional[GplsConfig], tau_mss: int) -> list[int]:
    used = cfg if cfg is not None else config_for_tls(flow.tls_version, tau_mss)
    return generate_gpls(flatten_flow_frames(flow), used)


def gpls_overlap_detail(
    dataset: Dataset, cfg: Optional[GplsConfig] = None, tau_mss: int = DEFAULT_MSS
) -> MetricResult:
    """Fraction of pls-carrying flows whose idealized sequence matches the
    recorded one exactly.  cfg=None resolves the overhead per flow from its
    TLS version."""
    matches = 0
    total = 0
    for trace in dataset.traces:
        for flow in trace.flows:
            if flow.pls is None:
                continue
            total += 1
            if list(flow.pls) == _flow_gpls(flow, cfg, tau_mss):
                matches += 1
    if total == 0:
        raise ValueError("no flow carries a recorded packet-length sequence")
    return MetricResult(matches / total, matches, total)


def gpls_overlap(
    dataset: Dataset, cfg: Optional[GplsConfig] = None, tau_mss: int = DEFAULT_MSS
) -> float:
    return gpls_overlap_detail(dataset, cfg, tau_mss).value


def _feature_sequence(
    flow: Flow, feature: Feature, cfg: Optional[GplsConfig], tau_mss: int
) -> Optional[tuple[int, ...]]:
    if feature is Feature.PLS:
        return flow.pls
    if feature is Feature.FS:
        return tuple(f.signed for f in flatten_flow_frames(flow))
    if feature is Feature.GPLS:
        if flow.gpls is not None:
            return flow.gpls
        return tuple(_flow_gpls(flow, cfg, tau_mss))
    raise ValueError(f"unknown feature {feature!r}")


def stable_flow_ratio_detail(
    dataset: Dataset,
    feature: Feature,
    scope: StabilityScope = StabilityScope.ALL_RESOURCES,
    cfg: Optional[GplsConfig] = None,
    tau_mss: int = DEFAULT_MSS,
) -> MetricResult:
    """Fraction of recurring flow groups whose feature sequence never varies.

    Within each label, flows are grouped by exact resource composition; a
    group counts when it occurs at least twice and every occurrence carries
    the feature.  The stable-resources scope first drops resources whose uri
    is not present in every trace of the label.
    """
    stable = 0
    total = 0
    by_label: dict[int, list[Trace]] = {}
    for trace in dataset.traces:
        by_label.setdefault(trace.label, []).append(trace)
    for label in sorted(by_label):
        traces = by_label[label]
        if len(traces) < 2:
            continue
        if scope is StabilityScope.STABLE_RESOURCES_ONLY:
            common: Optional[set[str]] = None
            for trace in traces:
                uris = {r.uri for f in trace.flows for r in f.resources}
                common = uris if common is None else common & uris
            traces = [_filter_trace(t, common or set()) for t in traces]
        groups: dict[bytes, list[Optional[tuple[int, ...]]]] = {}
        for trace in traces:
            for flow in trace.flows:
                key = pattern_key(flow, PatternLevel.FLOW_COMPOSITION)
                groups.setdefault(key, []).append(
                    _feature_sequence(flow, feature, cfg, tau_mss)
                )
        for occurrences in groups.values():
            if len(occurrences) < 2 or any(o is None for o in occurrences):
                continue
            total += 1
            if all(o == occurrences[0] for o in occurrences):
                stable += 1
    if total == 0:
        raise ValueError("no flow group occurs more than once with the feature present")
    return MetricResult(stable / total, stable, total)


def _filter_trace(trace: Trace, keep_uris: set[str]) -> Trace:
    flows = []
    for flow in trace.flows:
        resources = tuple(r for r in flow.resources if r.uri in keep_uris)
        if resources:
            flows.append(
                Flow(
                    flow_id=flow.flow_id,
                    server_ip=flow.server_ip,
                    san_set=flow.san_set,
                    tls_version=flow.tls_version,
                    resources=resources,
                    pls=flow.pls,
                    gpls=flow.gpls,
                )
            )
    return Trace(
        trace_id=trace.trace_id,
        label=trace.label,
        region=trace.region,
        flows=tuple(flows),
    )


def stable_flow_ratio(
    dataset: Dataset,
    feature: Feature,
    scope: StabilityScope = StabilityScope.ALL_RESOURCES,
    cfg: Optional[GplsConfig] = None,
    tau_mss: int = DEFAULT_MSS,
) -> float:
    return stable_flow_ratio_detail(dataset, feature, scope, cfg, tau_mss).value
