"""Synthetic corpora with known ground truth.

These generators build controlled datasets whose expected metric values are
derivable in closed form, so augmentation and metrics can be checked against
analytic oracles instead of unavailable captures.

The coverage corpus models sites served by one five-domain SAN group.  The
training side never coalesces domains into a shared flow (only shared
endpoints), while the test side additionally contains merged-flow variants
for every domain subset; those merged patterns are absent from training yet
reachable through recomposition.
"""

from __future__ import annotations

import itertools
import random
from typing import Optional

from .gpls import GplsConfig, generate_gpls
from .model import (
    Dataset,
    DirectedFrame,
    Direction,
    Flow,
    FrameSeq,
    Resource,
    TlsVersion,
    Trace,
    flatten_flow_frames,
)

_DOMAIN_NAMES = ("a", "b", "c", "d", "e")


def _site_domains(site: int) -> list[str]:
    return [f"{name}.s{site}.example" for name in _DOMAIN_NAMES]


def _site_resources(site: int) -> dict[str, list[Resource]]:
    """Per-domain resources with constant frame sequences (a, b, c carry two
    resources each; d and e carry one)."""
    domains = _site_domains(site)
    out: dict[str, list[Resource]] = {}
    for di, domain in enumerate(domains):
        count = 1 if di >= 3 else 2
        resources = []
        for j in range(count):
            frames: FrameSeq = (
                DirectedFrame(Direction.UP, 113 + 17 * j + 5 * di + site),
                DirectedFrame(Direction.DOWN, 1200 + 211 * j + 31 * di + site),
                DirectedFrame(Direction.DOWN, 350 + 7 * j + di),
            )
            resources.append(
                Resource(uri=f"s{site}/{_DOMAIN_NAMES[di]}/{j}", domain=domain, frames=frames)
            )
        out[domain] = resources
    return out


def _mk_flow(
    flow_id: str,
    server_ip: str,
    san: frozenset[str],
    resources: list[Resource],
    pls: Optional[tuple[int, ...]] = None,
) -> Flow:
    return Flow(
        flow_id=flow_id,
        server_ip=server_ip,
        san_set=san,
        tls_version=TlsVersion.TLS13,
        resources=tuple(resources),
        pls=pls,
    )


def _coverage_trace(
    site: int,
    trace_id: str,
    splits: tuple[bool, bool, bool],
    ip_count: int,
    merge_subset: Optional[frozenset[str]],
    rng: random.Random,
) -> Trace:
    """One site visit.  splits[i] splits domain i's two resources over two
    flows; merge_subset consolidates those domains' resources into a single
    flow on one endpoint (test-side scenarios only)."""
    domains = _site_domains(site)
    san = frozenset(domains)
    resources = _site_resources(site)

    groups: list[tuple[str, list[Resource]]] = []
    merged: list[Resource] = []
    for di, domain in enumerate(domains):
        res = resources[domain]
        if merge_subset and domain in merge_subset:
            merged.extend(res)
            continue
        if di < 3 and splits[di]:
            groups.append((domain, [res[0]]))
            groups.append((domain, [res[1]]))
        else:
            groups.append((domain, res))

    nodes = {
        domain: node
        for domain, node in zip(
            domains, _surject(len(domains), min(ip_count, len(domains)), rng)
        )
    }
    flows = []
    if merged:
        flows.append(_mk_flow(f"{trace_id}-m", f"ip{site}-m", san, merged))
    for gi, (domain, res) in enumerate(groups):
        flows.append(
            _mk_flow(f"{trace_id}-{gi}", f"ip{site}-{nodes[domain]}", san, res)
        )
    return Trace(trace_id=trace_id, label=site, region="synthetic", flows=tuple(flows))


def _surject(m: int, n: int, rng: random.Random) -> list[int]:
    """Cheap surjective assignment (not uniformity-critical here)."""
    nodes = list(range(n))
    rng.shuffle(nodes)
    out = nodes + [rng.randrange(n) for _ in range(m - n)]
    rng.shuffle(out)
    return out


def make_coverage_corpus(
    num_sites: int = 10, seed: int = 7, train_rounds: int = 2
) -> tuple[Dataset, Dataset]:
    """Train/test pair for the coverage-growth experiment.

    Training enumerates every per-domain split combination over varied
    endpoint counts but never merges cross-domain flows.  Testing repeats the
    unmerged combinations and adds one scenario per merged domain subset of
    size >= 2, so the merged flow patterns are new yet reachable.
    """
    rng = random.Random(seed)
    train: list[Trace] = []
    test: list[Trace] = []
    combos = list(itertools.product((False, True), repeat=3))
    ip_cycle = [1, 2, 3, 4, 5, 2, 3, 4]
    for site in range(num_sites):
        counter = 0
        for round_idx in range(train_rounds):
            for ci, splits in enumerate(combos):
                train.append(
                    _coverage_trace(
                        site,
                        f"s{site}-train-{counter}",
                        splits,
                        ip_cycle[(ci + round_idx) % len(ip_cycle)],
                        None,
                        rng,
                    )
                )
                counter += 1
        counter = 0
        for splits in combos:
            test.append(
                _coverage_trace(
                    site, f"s{site}-test-{counter}", splits, 2, None, rng
                )
            )
            counter += 1
        domains = _site_domains(site)
        for size in range(2, len(domains) + 1):
            for subset in itertools.combinations(domains, size):
                test.append(
                    _coverage_trace(
                        site,
                        f"s{site}-test-{counter}",
                        (False, False, False),
                        2,
                        frozenset(subset),
                        rng,
                    )
                )
                counter += 1
    return (
        Dataset(traces=tuple(train), num_classes=num_sites),
        Dataset(traces=tuple(test), num_classes=num_sites),
    )


def make_overlap_corpus(
    num_flows: int = 10_000,
    fragment_prob: float = 0.30,
    seed: int = 11,
    cfg: GplsConfig = GplsConfig(delta_tls=31, tau_mss=1460),
    flows_per_trace: int = 100,
) -> Dataset:
    """Flows whose recorded pls equals the idealized sequence except that a
    fraction fragment_prob of flows has one packet split in two."""
    rng = random.Random(seed)
    traces = []
    flow_idx = 0
    for t in range(0, num_flows, flows_per_trace):
        flows = []
        for _ in range(min(flows_per_trace, num_flows - t)):
            resources = []
            domain = f"d{flow_idx % 50}.example"
            for r in range(rng.randint(1, 3)):
                frames = [DirectedFrame(Direction.UP, rng.randint(80, 600))]
                for _ in range(rng.randint(0, 3)):
                    frames.append(
                        DirectedFrame(Direction.DOWN, rng.randint(200, 5000))
                    )
                resources.append(
                    Resource(uri=f"u{flow_idx}/{r}", domain=domain, frames=tuple(frames))
                )
            flow = _mk_flow(
                f"f{flow_idx}", f"ip{flow_idx % 97}", frozenset({domain}), resources
            )
            pls = generate_gpls(flatten_flow_frames(flow), cfg)
            if rng.random() < fragment_prob:
                candidates = [i for i, p in enumerate(pls) if abs(p) >= 2]
                i = candidates[rng.randrange(len(candidates))]
                sign = 1 if pls[i] > 0 else -1
                size = abs(pls[i])
                cut = rng.randint(1, size - 1)
                pls = pls[:i] + [sign * cut, sign * (size - cut)] + pls[i + 1 :]
            flows.append(
                Flow(
                    flow_id=flow.flow_id,
                    server_ip=flow.server_ip,
                    san_set=flow.san_set,
                    tls_version=flow.tls_version,
                    resources=flow.resources,
                    pls=tuple(pls),
                )
            )
            flow_idx += 1
        traces.append(
            Trace(trace_id=f"t{t}", label=0, region="synthetic", flows=tuple(flows))
        )
    return Dataset(traces=tuple(traces), num_classes=1)


def make_recompose_fixture(
    seed: int = 3, groups: int = 5, domains_per_group: int = 3
) -> tuple[Dataset, Trace]:
    """A fitting dataset plus one wide multi-SAN-group trace to recompose.

    The returned trace spreads each domain's two resources over one or two
    flows, yielding about groups * domains_per_group * 4/3 flows (20 for the
    default shape).
    """
    rng = random.Random(seed)
    all_domains = [
        [f"g{g}d{d}.example" for d in range(domains_per_group)] for g in range(groups)
    ]

    def build_trace(trace_id: str, variant: int) -> Trace:
        flows = []
        counter = 0
        for g, domains in enumerate(all_domains):
            san = frozenset(domains)
            ips = [f"ip-g{g}-{k}" for k in range(1 + (variant + g) % domains_per_group)]
            for d, domain in enumerate(domains):
                frames = tuple(
                    [DirectedFrame(Direction.UP, 100 + 3 * d + g)]
                    + [DirectedFrame(Direction.DOWN, 900 + 41 * d + 7 * g + 13 * j) for j in range(2)]
                )
                resources = [
                    Resource(uri=f"g{g}/{d}/{j}", domain=domain, frames=frames)
                    for j in range(2)
                ]
                split = (d + variant) % 3 == 0
                ip = ips[(d + variant) % len(ips)]
                if split:
                    for res in resources:
                        flows.append(
                            _mk_flow(f"{trace_id}-{counter}", ip, san, [res])
                        )
                        counter += 1
                else:
                    flows.append(
                        _mk_flow(f"{trace_id}-{counter}", ip, san, resources)
                    )
                    counter += 1
        return Trace(trace_id=trace_id, label=0, region="synthetic", flows=tuple(flows))

    dataset = Dataset(
        traces=tuple(build_trace(f"fit-{v}", v) for v in range(4)),
        num_classes=1,
    )
    wide = build_trace("wide", 0)
    return dataset, wide


def random_flow_frames(
    rng: random.Random, max_resources: int = 5, max_frames: int = 4
):
    """Random annotated flow-frame sequence for shift property tests."""
    from .model import FlowFrame

    out = []
    for t in range(1, rng.randint(1, max_resources) + 1):
        out.append(FlowFrame(Direction.UP, rng.randint(1, 500), t))
        for _ in range(rng.randint(0, max_frames - 1)):
            direction = Direction.UP if rng.random() < 0.3 else Direction.DOWN
            size = rng.randint(0, 3000) if direction is Direction.DOWN else rng.randint(1, 3000)
            out.append(FlowFrame(direction, size, t))
    return tuple(out)
