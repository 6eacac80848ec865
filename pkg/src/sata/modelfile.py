"""Fitting and (de)serialization of the combined augmentation models.

A single JSON document (schema "sata-models-1") bundles the SAN table, the
per-group IP-node-count Gaussians, the flow-reuse pattern pool, and the
per-resource frame profiles, so fitting and augmentation can run as separate
command-line invocations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .frame_augment import (
    DEFAULT_ANCHOR_CV,
    AdjustablePosition,
    AugmentationProfile,
    VolumeKde,
    fit_profile,
)
from .ingest import SanTable
from .ingest import build_san_table
from .model import Dataset, Direction, FrameSeq, frames_from_signed, frames_to_signed
from .recompose import (
    DEFAULT_MAX_CONCURRENT_FLOWS,
    PatternPool,
    SanDistribution,
    build_pattern_pool,
    fit_san_distribution,
)

MODELS_SCHEMA_VERSION = "sata-models-1"

ProfileKey = tuple[str, str]  # (domain, uri)


@dataclass(frozen=True)
class FittedModels:
    san_table: SanTable
    san_distribution: SanDistribution
    pattern_pool: PatternPool
    profiles: dict[ProfileKey, tuple[AugmentationProfile, ...]]
    anchor_cv_threshold: float = DEFAULT_ANCHOR_CV


def fit_models(
    dataset: Dataset,
    anchor_cv_threshold: float = DEFAULT_ANCHOR_CV,
    max_concurrent_flows: int = DEFAULT_MAX_CONCURRENT_FLOWS,
) -> FittedModels:
    """Fit every augmentation model on a training dataset."""
    san_table = build_san_table(dataset)
    dist = fit_san_distribution(dataset, san_table)
    pool = build_pattern_pool(dataset, max_concurrent_flows)
    histories: dict[ProfileKey, list[FrameSeq]] = {}
    for trace in dataset.traces:
        for flow in trace.flows:
            for res in flow.resources:
                histories.setdefault((res.domain, res.uri), []).append(res.frames)
    profiles = {
        key: tuple(fit_profile(history, anchor_cv_threshold))
        for key, history in histories.items()
    }
    return FittedModels(
        san_table=san_table,
        san_distribution=dist,
        pattern_pool=pool,
        profiles=profiles,
        anchor_cv_threshold=anchor_cv_threshold,
    )


_DIR_CODE = {Direction.UP: "u", Direction.DOWN: "d"}
_DIR_DECODE = {"u": Direction.UP, "d": Direction.DOWN}


def _profile_to_obj(profile: AugmentationProfile) -> dict:
    return {
        "signature": "".join(_DIR_CODE[d] for d in profile.signature),
        "anchors": {str(i): size for i, size in sorted(profile.anchors.items())},
        "adjustable": [
            {
                "index": a.index,
                "variance": a.variance,
                "lower": a.lower,
                "upper": a.upper,
            }
            for a in profile.adjustable
        ],
        "up_kde": {"support": list(profile.up_kde.support), "bandwidth": profile.up_kde.bandwidth},
        "down_kde": {
            "support": list(profile.down_kde.support),
            "bandwidth": profile.down_kde.bandwidth,
        },
        "history": [list(frames_to_signed(seq)) for seq in profile.history],
    }


def _profile_from_obj(obj: dict) -> AugmentationProfile:
    return AugmentationProfile(
        signature=tuple(_DIR_DECODE[c] for c in obj["signature"]),
        anchors={int(i): size for i, size in obj["anchors"].items()},
        adjustable=tuple(
            AdjustablePosition(
                index=a["index"],
                variance=a["variance"],
                lower=a["lower"],
                upper=a["upper"],
            )
            for a in obj["adjustable"]
        ),
        up_kde=VolumeKde(
            support=tuple(obj["up_kde"]["support"]),
            bandwidth=obj["up_kde"]["bandwidth"],
        ),
        down_kde=VolumeKde(
            support=tuple(obj["down_kde"]["support"]),
            bandwidth=obj["down_kde"]["bandwidth"],
        ),
        history=tuple(frames_from_signed(seq) for seq in obj["history"]),
    )


def models_to_obj(models: FittedModels) -> dict:
    return {
        "schema_version": MODELS_SCHEMA_VERSION,
        "anchor_cv_threshold": models.anchor_cv_threshold,
        "max_concurrent_flows": models.pattern_pool.max_concurrent_flows,
        "san_table": {gid: sorted(members) for gid, members in sorted(models.san_table.members.items())},
        "san_distribution": {
            gid: [mu, sigma] for gid, (mu, sigma) in sorted(models.san_distribution.params.items())
        },
        "pattern_pool": [
            {
                "domain": domain,
                "resources": list(resources),
                "patterns": [
                    {"groups": [list(g) for g in pattern], "p": prob}
                    for pattern, prob in entries
                ],
            }
            for (domain, resources), entries in sorted(models.pattern_pool.patterns.items())
        ],
        "profiles": [
            {
                "domain": domain,
                "uri": uri,
                "profiles": [_profile_to_obj(p) for p in profiles],
            }
            for (domain, uri), profiles in sorted(models.profiles.items())
        ],
    }


def models_from_obj(obj: dict) -> FittedModels:
    version = obj.get("schema_version")
    if version != MODELS_SCHEMA_VERSION:
        raise ValueError(
            f"schema_version {version!r} does not match {MODELS_SCHEMA_VERSION!r}"
        )
    members = {gid: frozenset(doms) for gid, doms in obj["san_table"].items()}
    group_of = {d: gid for gid, doms in members.items() for d in doms}
    pool_patterns = {}
    for entry in obj["pattern_pool"]:
        key = (entry["domain"], tuple(entry["resources"]))
        pool_patterns[key] = tuple(
            (tuple(tuple(g) for g in pat["groups"]), pat["p"])
            for pat in entry["patterns"]
        )
    profiles = {
        (entry["domain"], entry["uri"]): tuple(
            _profile_from_obj(p) for p in entry["profiles"]
        )
        for entry in obj["profiles"]
    }
    return FittedModels(
        san_table=SanTable(group_of=group_of, members=members),
        san_distribution=SanDistribution(
            params={gid: (mu, sigma) for gid, (mu, sigma) in obj["san_distribution"].items()}
        ),
        pattern_pool=PatternPool(
            patterns=pool_patterns,
            max_concurrent_flows=obj["max_concurrent_flows"],
        ),
        profiles=profiles,
        anchor_cv_threshold=obj["anchor_cv_threshold"],
    )


def save_models(models: FittedModels, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(models_to_obj(models), separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_models(path: Union[str, Path]) -> FittedModels:
    return models_from_obj(json.loads(Path(path).read_text(encoding="utf-8")))
