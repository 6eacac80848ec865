"""Semantics-aware augmentation of HTTP/2 traffic representations."""

__version__ = "0.1.0"

from .model import (
    Dataset,
    DirectedFrame,
    Direction,
    Flow,
    FlowFrame,
    Resource,
    TlsVersion,
    Trace,
    flatten_flow_frames,
    validate_trace,
)
from .ingest import SanTable, SplitSpec, build_san_table, load_dataset, save_dataset, split_dataset
from .gpls import GplsConfig, config_for_tls, delta_for_tls, generate_gpls
from .frame_augment import (
    AugmentationProfile,
    ShiftConfig,
    VolumeKde,
    augment_frame_sequence,
    discretize_allocation,
    fit_profile,
    forward_shift,
    sample_target_volume,
    solve_volume_allocation,
)
from .recompose import (
    DomainIpAssignment,
    FlowPartition,
    PatternPool,
    SanDistribution,
    build_pattern_pool,
    fit_san_distribution,
    recompose_trace,
    remap_domains,
    resample_reuse_pattern,
)
from .metrics import (
    Feature,
    PatternLevel,
    StabilityScope,
    gpls_overlap,
    pattern_coverage,
    pattern_key,
    stable_flow_ratio,
)
from .modelfile import FittedModels, fit_models, load_models, save_models
from .pipeline import AugmentOptions, augment_dataset, augment_trace

__all__ = [name for name in dir() if not name.startswith("_")]
