"""Trace recomposition: SAN-constrained domain-to-IP remapping plus
empirical resampling of per-domain flow-reuse patterns.

Remapping draws a per-SAN-group IP-node count from a Gaussian fitted on
observed traces and reassigns the group's domains to those nodes by a
uniform random surjection.  Reuse-pattern resampling redistributes each
domain's resources over flows according to the empirical pattern pool, with
a maximum-entropy fallback for unseen resource sets.  Groups landing on a
shared node may coalesce into a single flow, reproducing connection
coalescing; flows never mix domains from different SAN groups.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ingest import SanTable
from .model import Dataset, Flow, Resource, Trace

DEFAULT_MAX_CONCURRENT_FLOWS = 6
DEFAULT_P_COALESCE = 0.5

# Canonical form of a reuse pattern: groups of uris, each group sorted,
# groups sorted lexicographically.
Pattern = tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class SanDistribution:
    """Per-SAN-group Gaussian over observed per-trace IP-node counts."""

    params: dict[str, tuple[float, float]]

    def lookup(self, group_id: str) -> tuple[float, float]:
        # Unobserved groups fall back to full coalescing (one node, no spread).
        return self.params.get(group_id, (1.0, 0.0))


@dataclass(frozen=True)
class FlowPartition:
    """Partition of a resource list into flow groups, by position index."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for group in self.groups:
            if not group:
                raise ValueError("empty group in flow partition")
            for idx in group:
                if idx in seen:
                    raise ValueError(f"index {idx} appears in two groups")
                seen.add(idx)

    def covers(self, count: int) -> bool:
        return {i for g in self.groups for i in g} == set(range(count))


@dataclass(frozen=True)
class PatternPool:
    """Empirical flow-reuse patterns per (domain, resource multiset)."""

    patterns: dict[tuple[str, tuple[str, ...]], tuple[tuple[Pattern, float], ...]]
    max_concurrent_flows: int = DEFAULT_MAX_CONCURRENT_FLOWS


@dataclass(frozen=True)
class DomainIpAssignment:
    """Domain -> (SAN group id, node index); node indices are scoped per group
    and each group's assignment is surjective onto [0, N)."""

    mapping: dict[str, tuple[str, int]]

    def node_of(self, domain: str) -> tuple[str, int]:
        return self.mapping[domain]


def _group_of(domain: str, san_table: SanTable) -> str:
    gid = san_table.group_id(domain)
    return gid if gid is not None else f"unk:{domain}"


def fit_san_distribution(dataset: Dataset, san_table: SanTable) -> SanDistribution:
    """Sample mean and standard deviation (n-1 denominator) of the number of
    distinct server IPs serving each SAN group, counted per trace."""
    counts: dict[str, list[int]] = {}
    for trace in dataset.traces:
        per_group: dict[str, set[str]] = {}
        for flow in trace.flows:
            for res in flow.resources:
                gid = _group_of(res.domain, san_table)
                per_group.setdefault(gid, set()).add(flow.server_ip)
        for gid, ips in per_group.items():
            counts.setdefault(gid, []).append(len(ips))
    params: dict[str, tuple[float, float]] = {}
    for gid, values in counts.items():
        mu = float(np.mean(values))
        sigma = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        params[gid] = (mu, sigma)
    return SanDistribution(params=params)


def _count_onto(m: int, u: int, n: int) -> int:
    """Number of functions from m labeled items to n labeled nodes that hit
    every node of a fixed u-subset (inclusion-exclusion; exact integers)."""
    if u > m:
        return 0
    return sum((-1) ** j * math.comb(u, j) * (n - j) ** m for j in range(u + 1))


def uniform_surjection(m: int, n: int, rng: random.Random) -> list[int]:
    """Draw uniformly among all surjections of m items onto n nodes.

    Items are assigned sequentially; each choice is weighted by the exact
    count of surjective completions, so the overall draw is exactly uniform.
    """
    if n < 1 or m < n:
        raise ValueError(f"no surjection of {m} items onto {n} nodes")
    covered: list[int] = []
    uncovered = list(range(n))
    result: list[int] = []
    for remaining in range(m, 0, -1):
        u = len(uncovered)
        w_cov = _count_onto(remaining - 1, u, n)
        w_unc = _count_onto(remaining - 1, u - 1, n) if u else 0
        total = len(covered) * w_cov + u * w_unc
        pick = rng.randrange(total)
        if pick < len(covered) * w_cov:
            node = covered[pick // w_cov]
        else:
            pick -= len(covered) * w_cov
            node = uncovered[pick // w_unc]
            uncovered.remove(node)
            covered.append(node)
        result.append(node)
    return result


def remap_domains(
    trace: Trace,
    san_table: SanTable,
    dist: SanDistribution,
    rng: random.Random,
) -> DomainIpAssignment:
    """Reassign the trace's domains to synthetic IP nodes per SAN group.

    For a group with M domains present, N = clamp(round(gauss(mu, sigma)), 1, M)
    nodes are drawn and domains are spread over them by a uniform surjection.
    Domains outside the table form singleton groups.
    """
    domains_by_group: dict[str, list[str]] = {}
    seen: set[str] = set()
    for flow in trace.flows:
        for res in flow.resources:
            if res.domain in seen:
                continue
            seen.add(res.domain)
            gid = _group_of(res.domain, san_table)
            domains_by_group.setdefault(gid, []).append(res.domain)

    mapping: dict[str, tuple[str, int]] = {}
    for gid in sorted(domains_by_group):
        domains = sorted(domains_by_group[gid])
        m = len(domains)
        mu, sigma = dist.lookup(gid)
        n_nodes = min(max(round(rng.gauss(mu, sigma)), 1), m)
        assignment = uniform_surjection(m, n_nodes, rng)
        for domain, node in zip(domains, assignment):
            mapping[domain] = (gid, node)
    return DomainIpAssignment(mapping=mapping)


def _canonical_pattern(groups: Sequence[Sequence[str]]) -> Pattern:
    return tuple(sorted(tuple(sorted(g)) for g in groups))


def build_pattern_pool(
    dataset: Dataset, max_concurrent_flows: int = DEFAULT_MAX_CONCURRENT_FLOWS
) -> PatternPool:
    """Collect, deduplicate, and normalize observed per-domain flow
    partitions keyed by (domain, resource multiset)."""
    if max_concurrent_flows < 1:
        raise ValueError("max_concurrent_flows must be positive")
    counts: dict[tuple[str, tuple[str, ...]], dict[Pattern, int]] = {}
    for trace in dataset.traces:
        per_domain: dict[str, list[list[str]]] = {}
        for flow in trace.flows:
            in_flow: dict[str, list[str]] = {}
            for res in flow.resources:
                in_flow.setdefault(res.domain, []).append(res.uri)
            for domain, uris in in_flow.items():
                per_domain.setdefault(domain, []).append(uris)
        for domain, groups in per_domain.items():
            key = (domain, tuple(sorted(u for g in groups for u in g)))
            pattern = _canonical_pattern(groups)
            by_pattern = counts.setdefault(key, {})
            by_pattern[pattern] = by_pattern.get(pattern, 0) + 1
    patterns: dict[tuple[str, tuple[str, ...]], tuple[tuple[Pattern, float], ...]] = {}
    for key, by_pattern in counts.items():
        total = sum(by_pattern.values())
        patterns[key] = tuple(
            (pattern, count / total) for pattern, count in sorted(by_pattern.items())
        )
    return PatternPool(patterns=patterns, max_concurrent_flows=max_concurrent_flows)


def resample_reuse_pattern(
    domain: str,
    uris: Sequence[str],
    pool: PatternPool,
    rng: random.Random,
) -> FlowPartition:
    """Draw a flow partition for a domain's resources.

    An exact (domain, multiset) pool hit samples a stored pattern by its
    empirical probability; a miss draws k uniformly in
    [1, min(max_concurrent_flows, m)] and then a uniform surjection of the
    resources onto k groups.
    """
    if not uris:
        raise ValueError("cannot partition an empty resource set")
    m = len(uris)
    key = (domain, tuple(sorted(uris)))
    stored = pool.patterns.get(key)
    if stored:
        r = rng.random()
        cumulative = 0.0
        pattern = stored[-1][0]
        for candidate, prob in stored:
            cumulative += prob
            if r < cumulative:
                pattern = candidate
                break
        by_uri: dict[str, list[int]] = {}
        for idx, uri in enumerate(uris):
            by_uri.setdefault(uri, []).append(idx)
        pending = {uri: list(reversed(ids)) for uri, ids in by_uri.items()}
        groups = []
        for pat_group in pattern:
            groups.append(tuple(sorted(pending[uri].pop() for uri in pat_group)))
    else:
        k = rng.randint(1, min(pool.max_concurrent_flows, m))
        assignment = uniform_surjection(m, k, rng)
        by_node: dict[int, list[int]] = {}
        for idx, node in enumerate(assignment):
            by_node.setdefault(node, []).append(idx)
        groups = [tuple(sorted(ids)) for ids in by_node.values()]
    groups.sort(key=lambda g: g[0])
    return FlowPartition(groups=tuple(groups))


def recompose_trace(
    trace: Trace,
    san_table: SanTable,
    dist: SanDistribution,
    pool: PatternPool,
    rng: random.Random,
    p_coalesce: float = DEFAULT_P_COALESCE,
) -> Trace:
    """Rebuild a trace's flows under remapped domain-to-IP assignments and
    resampled reuse patterns.

    The resource multiset is preserved exactly; output flows carry synthetic
    ids and endpoints, the SAN group's member set, the TLS version of the
    first member resource's original flow, and no packet-length sequence.
    """
    order: dict[int, int] = {}
    domain_resources: dict[str, list[tuple[int, Resource, Flow]]] = {}
    domain_order: list[str] = []
    pos = 0
    for flow in trace.flows:
        for res in flow.resources:
            order[id(res)] = pos
            if res.domain not in domain_resources:
                domain_order.append(res.domain)
                domain_resources[res.domain] = []
            domain_resources[res.domain].append((pos, res, flow))
            pos += 1

    assignment = remap_domains(trace, san_table, dist, rng)

    # node -> list of resource groups (each group becomes one candidate flow)
    node_groups: dict[tuple[str, int], list[list[tuple[int, Resource, Flow]]]] = {}
    for domain in domain_order:
        entries = domain_resources[domain]
        partition = resample_reuse_pattern(
            domain, [r.uri for _, r, _ in entries], pool, rng
        )
        node = assignment.node_of(domain)
        for group in partition.groups:
            node_groups.setdefault(node, []).append([entries[i] for i in group])

    flows: list[tuple[int, Flow]] = []
    counter = 0
    ordered_nodes = sorted(
        node_groups, key=lambda nd: min(e[0] for g in node_groups[nd] for e in g)
    )
    for node in ordered_nodes:
        groups = node_groups[node]
        gid, node_idx = node
        domains_here = {e[1].domain for g in groups for e in g}
        merge = len(domains_here) > 1 and rng.random() < p_coalesce
        flow_groups = [sorted((e for g in groups for e in g), key=lambda e: e[0])] if merge else [
            sorted(g, key=lambda e: e[0]) for g in groups
        ]
        member_set = san_table.members.get(gid)
        san_set = member_set if member_set is not None else frozenset(
            {e[1].domain for g in groups for e in g}
        )
        for group in flow_groups:
            first_pos, _, origin_flow = group[0]
            flows.append(
                (
                    first_pos,
                    Flow(
                        flow_id=f"aug-{counter}",
                        server_ip=f"synth:{gid}:{node_idx}",
                        san_set=san_set,
                        tls_version=origin_flow.tls_version,
                        resources=tuple(e[1] for e in group),
                        pls=None,
                        gpls=None,
                    ),
                )
            )
            counter += 1
    flows.sort(key=lambda item: item[0])
    renumbered = tuple(
        Flow(
            flow_id=f"aug-{i}",
            server_ip=f.server_ip,
            san_set=f.san_set,
            tls_version=f.tls_version,
            resources=f.resources,
            pls=f.pls,
            gpls=f.gpls,
        )
        for i, (_, f) in enumerate(flows)
    )
    return Trace(
        trace_id=trace.trace_id,
        label=trace.label,
        region=trace.region,
        flows=renumbered,
    )
