"""Per-resource frame-sequence synthesis and flow-level forward shifting.

A resource's observed frame sequences are grouped by signature (length and
direction pattern).  Within a group, positions whose sizes stay nearly
constant become anchors; the rest are adjustable, carrying historical
variance and min/max bounds.  Generation samples a target total volume per
direction from a KDE over historical totals, then spreads it across the
adjustable positions by a variance-weighted constrained quadratic program,
discretized greedily to land on the target exactly.

Forward shifting then relocates request (upstream) frames toward earlier
resources in the flow, reproducing the bursty coalesced transmission of
request HEADERS under multiplexing.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    DirectedFrame,
    Direction,
    FlowFrame,
    FlowFrameSequence,
    FrameSeq,
)

DEFAULT_EPSILON = 1e-6
DEFAULT_ANCHOR_CV = 0.02


@dataclass(frozen=True)
class VolumeKde:
    """Gaussian KDE over observed per-sequence byte totals."""

    support: tuple[int, ...]
    bandwidth: float

    def __post_init__(self) -> None:
        if not self.support:
            raise ValueError("KDE support must be non-empty")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be non-negative")


@dataclass(frozen=True)
class AdjustablePosition:
    index: int
    variance: float
    lower: int
    upper: int


@dataclass(frozen=True)
class AugmentationProfile:
    """Fitted generation model for one (length, direction-pattern) group."""

    signature: tuple[Direction, ...]
    anchors: dict[int, int]
    adjustable: tuple[AdjustablePosition, ...]
    up_kde: VolumeKde
    down_kde: VolumeKde
    history: tuple[FrameSeq, ...]


@dataclass(frozen=True)
class ShiftConfig:
    p_move: float = 0.2

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_move <= 1.0):
            raise ValueError(f"p_move must lie in [0, 1], got {self.p_move}")


def fit_volume_kde(values: Sequence[int]) -> VolumeKde:
    """Silverman-rule bandwidth: 0.9 * min(sd, IQR/1.34) * n^(-1/5).

    Degenerate samples (single observation, or all values equal) get
    bandwidth 0, i.e. resampling of the lone observed total.
    """
    if not values:
        raise ValueError("cannot fit a KDE on no observations")
    arr = np.asarray(values, dtype=float)
    n = len(arr)
    if n == 1 or np.all(arr == arr[0]):
        return VolumeKde(support=tuple(int(v) for v in values), bandwidth=0.0)
    sd = float(np.std(arr, ddof=1))
    q75, q25 = np.percentile(arr, [75, 25])
    iqr = float(q75 - q25)
    candidates = [c for c in (sd, iqr / 1.34) if c > 0]
    h = 0.9 * min(candidates) * n ** (-0.2)
    return VolumeKde(support=tuple(int(v) for v in values), bandwidth=h)


def sample_target_volume(kde: VolumeKde, rng: random.Random) -> int:
    """One KDE draw: a uniform support point plus Gaussian(0, h) noise,
    rounded and clamped to at least 1 byte."""
    point = kde.support[rng.randrange(len(kde.support))]
    noise = rng.gauss(0.0, kde.bandwidth) if kde.bandwidth > 0 else 0.0
    return max(1, round(point + noise))


def _modal_size(sizes: Sequence[int]) -> int:
    counts: dict[int, int] = {}
    for s in sizes:
        counts[s] = counts.get(s, 0) + 1
    best = max(counts.values())
    return min(s for s, c in counts.items() if c == best)


def fit_profile(
    history: Sequence[FrameSeq], anchor_cv_threshold: float = DEFAULT_ANCHOR_CV
) -> list[AugmentationProfile]:
    """Fit one profile per (length, direction pattern) group of the history.

    Position i is an anchor when the coefficient of variation of its sizes is
    at most the threshold (an all-equal position always is); anchors keep
    their modal size.  Other positions become adjustable with sample variance
    and observed min/max bounds.  Each group also gets KDEs over its per-
    sequence upstream and downstream totals.
    """
    if not history:
        raise ValueError("history must contain at least one frame sequence")
    groups: dict[tuple[Direction, ...], list[FrameSeq]] = {}
    for seq in history:
        signature = tuple(f.direction for f in seq)
        groups.setdefault(signature, []).append(seq)

    profiles: list[AugmentationProfile] = []
    for signature, seqs in groups.items():
        n = len(seqs)
        anchors: dict[int, int] = {}
        adjustable: list[AdjustablePosition] = []
        for i in range(len(signature)):
            sizes = [seq[i].size for seq in seqs]
            if n == 1:
                anchor = True
            else:
                mean = float(np.mean(sizes))
                sd = float(np.std(sizes, ddof=1))
                anchor = sd / mean <= anchor_cv_threshold if mean > 0 else sd == 0.0
            if anchor:
                anchors[i] = _modal_size(sizes)
            else:
                adjustable.append(
                    AdjustablePosition(
                        index=i,
                        variance=float(np.var(sizes, ddof=1)),
                        lower=min(sizes),
                        upper=max(sizes),
                    )
                )
        up_totals = [
            sum(f.size for f in seq if f.direction is Direction.UP) for seq in seqs
        ]
        down_totals = [
            sum(f.size for f in seq if f.direction is Direction.DOWN) for seq in seqs
        ]
        profiles.append(
            AugmentationProfile(
                signature=signature,
                anchors=anchors,
                adjustable=tuple(adjustable),
                up_kde=fit_volume_kde(up_totals),
                down_kde=fit_volume_kde(down_totals),
                history=tuple(seqs),
            )
        )
    return profiles


def solve_volume_allocation(
    base: Sequence[float],
    variances: Sequence[float],
    bounds: Sequence[tuple[float, float]],
    target: float,
    epsilon: float = DEFAULT_EPSILON,
) -> list[float]:
    """Minimize sum((x_i - base_i)^2 / (var_i + epsilon)) subject to
    sum(x) == target and bounds[i][0] <= x_i <= bounds[i][1].

    The objective is separable convex, so the optimum is the clamped line
    x_i(lam) = clamp(base_i + lam * w_i) with w_i = var_i + epsilon and the
    multiplier lam chosen so the sum hits the target: found by bisection and
    polished by an exact solve on the unclamped coordinate set.
    """
    k = len(base)
    if k == 0:
        raise ValueError("need at least one coordinate")
    if not (len(variances) == len(bounds) == k):
        raise ValueError("base, variances and bounds must have equal length")
    weights = [v + epsilon for v in variances]
    if any(w <= 0 for w in weights):
        raise ValueError("variance + epsilon must be positive for every coordinate")
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    if any(l > h for l, h in zip(lo, hi)):
        raise ValueError("lower bound exceeds upper bound")
    lo_sum, hi_sum = sum(lo), sum(hi)
    if not (lo_sum <= target <= hi_sum):
        raise ValueError(
            f"target {target} outside feasible interval [{lo_sum}, {hi_sum}]"
        )

    def value(lam: float) -> list[float]:
        return [min(max(b + lam * w, l), h) for b, w, l, h in zip(base, weights, lo, hi)]

    def gap(lam: float) -> float:
        return sum(value(lam)) - target

    lam_lo, lam_hi = -1.0, 1.0
    for _ in range(200):
        if gap(lam_lo) <= 0:
            break
        lam_lo *= 2.0
    for _ in range(200):
        if gap(lam_hi) >= 0:
            break
        lam_hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lam_lo + lam_hi)
        if gap(mid) <= 0:
            lam_lo = mid
        else:
            lam_hi = mid
    lam = 0.5 * (lam_lo + lam_hi)
    x = value(lam)

    # Exact polish: solve for lam on the coordinates the bisection left free.
    free = [i for i in range(k) if lo[i] < x[i] < hi[i]]
    if free:
        clamped_sum = sum(x[i] for i in range(k) if i not in set(free))
        w_sum = sum(weights[i] for i in free)
        lam_exact = (target - clamped_sum - sum(base[i] for i in free)) / w_sum
        candidate = value(lam_exact)
        if abs(sum(candidate) - target) <= abs(sum(x) - target):
            x = candidate
    return x


def allocation_objective(
    x: Sequence[float],
    base: Sequence[float],
    variances: Sequence[float],
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    return sum(
        (xi - bi) ** 2 / (vi + epsilon) for xi, bi, vi in zip(x, base, variances)
    )


def discretize_allocation(
    x: Sequence[float],
    bounds: Sequence[tuple[int, int]],
    target: int,
) -> list[int]:
    """Floor the continuous allocation, then hand out the residual one byte
    at a time in descending fractional-part order.

    Coordinates at their upper bound are skipped; among equal fractions the
    lower index receives last.  A negative residual (sum of floors above the
    target) is corrected symmetrically.  Raises ValueError when the bounds
    make the target unreachable.
    """
    k = len(x)
    if len(bounds) != k or k == 0:
        raise ValueError("bounds must match x in length (and be non-empty)")
    lo = [int(b[0]) for b in bounds]
    hi = [int(b[1]) for b in bounds]
    if not (sum(lo) <= target <= sum(hi)):
        raise ValueError(
            f"target {target} outside feasible interval [{sum(lo)}, {sum(hi)}]"
        )
    vals = [min(max(math.floor(v), l), h) for v, l, h in zip(x, lo, hi)]
    fracs = [v - math.floor(v) for v in x]
    residual = target - sum(vals)

    if residual > 0:
        order = sorted(range(k), key=lambda i: (-fracs[i], -i))
        while residual > 0:
            progressed = False
            for i in order:
                if residual == 0:
                    break
                if vals[i] < hi[i]:
                    vals[i] += 1
                    residual -= 1
                    progressed = True
            if not progressed:
                raise ValueError("cannot reach target within upper bounds")
    elif residual < 0:
        order = sorted(range(k), key=lambda i: (fracs[i], i))
        while residual < 0:
            progressed = False
            for i in order:
                if residual == 0:
                    break
                if vals[i] > lo[i]:
                    vals[i] -= 1
                    residual += 1
                    progressed = True
            if not progressed:
                raise ValueError("cannot reach target within lower bounds")
    return vals


def _allocate_direction(
    profile: AugmentationProfile,
    direction: Direction,
    base_seq: FrameSeq,
    rng: random.Random,
    epsilon: float,
    max_resamples: int = 16,
) -> dict[int, int]:
    """Sample a target total for one direction and allocate it over that
    direction's adjustable positions; returns position -> size."""
    kde = profile.up_kde if direction is Direction.UP else profile.down_kde
    positions = [a for a in profile.adjustable if profile.signature[a.index] is direction]
    anchor_total = sum(
        size
        for i, size in profile.anchors.items()
        if profile.signature[i] is direction
    )
    lo_sum = anchor_total + sum(a.lower for a in positions)
    hi_sum = anchor_total + sum(a.upper for a in positions)

    target = sample_target_volume(kde, rng)
    resamples = 0
    while not (lo_sum <= target <= hi_sum) and resamples < max_resamples:
        target = sample_target_volume(kde, rng)
        resamples += 1
    target = min(max(target, lo_sum), hi_sum)

    if not positions:
        return {}
    base = [float(base_seq[a.index].size) for a in positions]
    variances = [a.variance for a in positions]
    bounds = [(a.lower, a.upper) for a in positions]
    x = solve_volume_allocation(base, variances, bounds, target - anchor_total, epsilon)
    ints = discretize_allocation(
        x, [(a.lower, a.upper) for a in positions], target - anchor_total
    )
    return {a.index: v for a, v in zip(positions, ints)}


def augment_frame_sequence(
    profile: AugmentationProfile,
    rng: random.Random,
    epsilon: float = DEFAULT_EPSILON,
) -> FrameSeq:
    """Synthesize one frame sequence from a fitted profile.

    Anchors are copied verbatim; upstream and downstream totals are sampled
    independently and allocated over the adjustable positions.  An infeasible
    sampled total is resampled up to 16 times, then clamped into the feasible
    interval, so realized totals always match the (clamped) targets exactly.
    """
    base_seq = profile.history[rng.randrange(len(profile.history))]
    sizes: dict[int, int] = dict(profile.anchors)
    sizes.update(_allocate_direction(profile, Direction.UP, base_seq, rng, epsilon))
    sizes.update(_allocate_direction(profile, Direction.DOWN, base_seq, rng, epsilon))
    return tuple(
        DirectedFrame(direction, sizes[i])
        for i, direction in enumerate(profile.signature)
    )


def forward_shift(
    flow_frames: FlowFrameSequence,
    cfg: ShiftConfig,
    rng: random.Random,
) -> FlowFrameSequence:
    """Cascading forward relocation of upstream frames.

    Resources are processed backward (t = N..2).  Each upstream frame of
    resource t independently moves with probability p_move to just after the
    last upstream frame of the leading upstream run of resource t-1, joining
    that resource; moved frames stay eligible in later iterations, so a frame
    can cascade several resources forward.  Downstream frames never move and
    the frame multiset is preserved.
    """
    items = [[f.direction, f.size, f.source] for f in flow_frames]
    if not items:
        return ()
    n = max(it[2] for it in items)
    for t in range(n, 1, -1):
        movers = [it for it in items if it[2] == t and it[0] is Direction.UP]
        for mover in movers:
            if rng.random() >= cfg.p_move:
                continue
            run_end: Optional[int] = None
            for idx, it in enumerate(items):
                if it[2] == t - 1:
                    if it[0] is Direction.UP:
                        run_end = idx
                    else:
                        break
            if run_end is None:
                continue
            src = next(i for i, it in enumerate(items) if it is mover)
            items.pop(src)
            items.insert(run_end + 1, mover)
            mover[2] = t - 1
    return tuple(FlowFrame(d, s, tag) for d, s, tag in items)
