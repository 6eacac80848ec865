"""End-to-end augmentation: recompose, per-resource frame synthesis, forward
shifting, and idealized packet-length generation.

Each input trace yields a configurable number of synthetic variants.  Every
trace draws from its own generator seeded with (seed XOR trace index), so
results are identical regardless of worker count and the first k variants of
a trace do not depend on how many are requested.

Shifted frame order feeds the exported GPLS; the persisted per-resource frame
sequences stay unshifted so that every resource still starts with its request
frame, as the dataset format requires.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .frame_augment import ShiftConfig, augment_frame_sequence, forward_shift
from .gpls import DEFAULT_MSS, GplsConfig, config_for_tls, generate_gpls
from .model import Dataset, Flow, Resource, Trace, flatten_flow_frames
from .modelfile import FittedModels
from .recompose import DEFAULT_P_COALESCE, recompose_trace


@dataclass(frozen=True)
class AugmentOptions:
    samples: int = 1
    seed: int = 0
    p_move: float = 0.2
    p_coalesce: float = DEFAULT_P_COALESCE
    tau_mss: int = DEFAULT_MSS
    tls_overhead: Optional[int] = None  # None: resolve per flow from its TLS version
    recompose: bool = True
    frame_augment: bool = True
    shift: bool = True
    gpls: bool = True
    workers: int = 1


def _gpls_config(flow: Flow, opts: AugmentOptions) -> GplsConfig:
    if opts.tls_overhead is not None:
        return GplsConfig(delta_tls=opts.tls_overhead, tau_mss=opts.tau_mss)
    return config_for_tls(flow.tls_version, opts.tau_mss)


def _strip_observations(trace: Trace) -> Trace:
    flows = tuple(
        Flow(
            flow_id=f.flow_id,
            server_ip=f.server_ip,
            san_set=f.san_set,
            tls_version=f.tls_version,
            resources=f.resources,
            pls=None,
            gpls=None,
        )
        for f in trace.flows
    )
    return Trace(trace.trace_id, trace.label, trace.region, flows)


def _augment_resource(
    res: Resource, models: FittedModels, rng: random.Random
) -> Resource:
    profiles = models.profiles.get((res.domain, res.uri))
    if not profiles:
        return res
    # Base-sequence choice is uniform over the resource's whole history:
    # pick the signature group proportionally to its history size.
    total = sum(len(p.history) for p in profiles)
    pick = rng.randrange(total)
    for profile in profiles:
        if pick < len(profile.history):
            break
        pick -= len(profile.history)
    return Resource(res.uri, res.domain, augment_frame_sequence(profile, rng))


def augment_trace(
    trace: Trace,
    models: FittedModels,
    opts: AugmentOptions,
    rng: random.Random,
    variant: int,
) -> Trace:
    """Generate one synthetic variant of a trace."""
    if opts.recompose:
        out = recompose_trace(
            trace,
            models.san_table,
            models.san_distribution,
            models.pattern_pool,
            rng,
            p_coalesce=opts.p_coalesce,
        )
    else:
        out = _strip_observations(trace)

    flows = []
    for flow in out.flows:
        resources = flow.resources
        if opts.frame_augment:
            resources = tuple(
                _augment_resource(r, models, rng) for r in resources
            )
        work = Flow(
            flow_id=flow.flow_id,
            server_ip=flow.server_ip,
            san_set=flow.san_set,
            tls_version=flow.tls_version,
            resources=resources,
            pls=None,
            gpls=None,
        )
        sequence = flatten_flow_frames(work)
        if opts.shift:
            sequence = forward_shift(sequence, ShiftConfig(opts.p_move), rng)
        gpls = None
        if opts.gpls:
            gpls = tuple(generate_gpls(sequence, _gpls_config(work, opts)))
        flows.append(
            Flow(
                flow_id=work.flow_id,
                server_ip=work.server_ip,
                san_set=work.san_set,
                tls_version=work.tls_version,
                resources=work.resources,
                pls=None,
                gpls=gpls,
            )
        )
    return Trace(
        trace_id=f"{trace.trace_id}-aug-{variant}",
        label=trace.label,
        region=trace.region,
        flows=tuple(flows),
    )


def _augment_one_source(
    item: tuple[int, Trace], models: FittedModels, opts: AugmentOptions
) -> list[Trace]:
    index, trace = item
    rng = random.Random(opts.seed ^ index)
    return [augment_trace(trace, models, opts, rng, k) for k in range(opts.samples)]


def augment_dataset(
    dataset: Dataset, models: FittedModels, opts: AugmentOptions
) -> Dataset:
    """Synthesize opts.samples variants of every trace, in input order."""
    jobs = list(enumerate(dataset.traces))
    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            batches = list(
                pool.map(lambda item: _augment_one_source(item, models, opts), jobs)
            )
    else:
        batches = [_augment_one_source(item, models, opts) for item in jobs]
    traces = tuple(t for batch in batches for t in batch)
    return Dataset(
        traces=traces,
        num_classes=dataset.num_classes,
        schema_version=dataset.schema_version,
    )


def attach_gpls(
    dataset: Dataset, cfg: Optional[GplsConfig] = None, tau_mss: int = DEFAULT_MSS
) -> Dataset:
    """Attach the idealized sequence to every flow (cfg=None: per-flow TLS)."""
    traces = []
    for trace in dataset.traces:
        flows = []
        for flow in trace.flows:
            used = cfg if cfg is not None else config_for_tls(flow.tls_version, tau_mss)
            flows.append(
                Flow(
                    flow_id=flow.flow_id,
                    server_ip=flow.server_ip,
                    san_set=flow.san_set,
                    tls_version=flow.tls_version,
                    resources=flow.resources,
                    pls=flow.pls,
                    gpls=tuple(generate_gpls(flatten_flow_frames(flow), used)),
                )
            )
        traces.append(Trace(trace.trace_id, trace.label, trace.region, tuple(flows)))
    return Dataset(
        traces=tuple(traces),
        num_classes=dataset.num_classes,
        schema_version=dataset.schema_version,
    )
