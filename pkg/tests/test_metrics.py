import pytest

from sata.gpls import GplsConfig, generate_gpls
from sata.metrics import (
    Feature,
    PatternLevel,
    StabilityScope,
    gpls_overlap,
    gpls_overlap_detail,
    pattern_coverage,
    pattern_coverage_detail,
    pattern_key,
    stable_flow_ratio,
)
from sata.model import flatten_flow_frames

from helpers import dataset, flow, res, trace


CFG = GplsConfig(delta_tls=31, tau_mss=1460)


def test_flow_composition_key_ignores_order():
    f1 = flow([res("u1", "a.x", [10]), res("u2", "a.x", [20])])
    f2 = flow([res("u2", "a.x", [20]), res("u1", "a.x", [10])])
    assert pattern_key(f1, PatternLevel.FLOW_COMPOSITION) == pattern_key(
        f2, PatternLevel.FLOW_COMPOSITION
    )


def test_resource_frames_key_is_order_sensitive():
    r1 = res("u", "a.x", [1, -2])
    r2 = res("u", "a.x", [-2, 1][::-1])  # [1, -2] again: same key
    r3 = res("u", "a.x", [1, -2, -2])
    assert pattern_key(r1, PatternLevel.RESOURCE_FRAMES) == pattern_key(
        r2, PatternLevel.RESOURCE_FRAMES
    )
    assert pattern_key(r1, PatternLevel.RESOURCE_FRAMES) != pattern_key(
        r3, PatternLevel.RESOURCE_FRAMES
    )


def test_identical_traces_share_trace_key():
    t1 = trace([flow([res("u", "a.x", [10])])], trace_id="t1")
    t2 = trace([flow([res("u", "a.x", [10])])], trace_id="t2")
    assert pattern_key(t1, PatternLevel.TRACE_COMPOSITION) == pattern_key(
        t2, PatternLevel.TRACE_COMPOSITION
    )


def test_pattern_key_type_mismatch():
    with pytest.raises(TypeError):
        pattern_key(trace([flow([res("u", "a.x", [1])])]), PatternLevel.FLOW_FRAMES)


def two_pattern_datasets():
    def t_with(uri, trace_id):
        return trace([flow([res(uri, "a.x", [10])])], trace_id=trace_id)

    train = dataset([t_with("A", "t0"), t_with("B", "t1")], num_classes=1)
    test = dataset([t_with("B", "t2"), t_with("C", "t3")], num_classes=1)
    return train, test


def test_coverage_half():
    train, test = two_pattern_datasets()
    r = pattern_coverage_detail(train, test, PatternLevel.FLOW_COMPOSITION)
    assert (r.value, r.numerator, r.denominator) == (0.5, 1, 2)


def test_coverage_superset_is_one():
    train, test = two_pattern_datasets()
    assert pattern_coverage([train, test], test, PatternLevel.FLOW_COMPOSITION) == 1.0


def test_coverage_monotone_under_more_training_data():
    train, test = two_pattern_datasets()
    alone = pattern_coverage(train, test, PatternLevel.FLOW_COMPOSITION)
    both = pattern_coverage([train, test], test, PatternLevel.FLOW_COMPOSITION)
    assert both >= alone


def test_coverage_empty_test_errors():
    train, _ = two_pattern_datasets()
    empty = dataset([], num_classes=1)
    with pytest.raises(ValueError):
        pattern_coverage(train, empty, PatternLevel.FLOW_COMPOSITION)


def gpls_flow(signed, trace_id="t0", perturb=False):
    f = flow([res("u", "a.x", signed)])
    pls = generate_gpls(flatten_flow_frames(f), CFG)
    if perturb:
        p = pls[0]
        sign = 1 if p > 0 else -1
        pls = [sign * 1, sign * (abs(p) - 1)] + pls[1:]
    return flow([res("u", "a.x", signed)], pls=pls)


def test_overlap_self_consistency():
    ds = dataset(
        [trace([gpls_flow([100, -3000])], trace_id="t0")], num_classes=1
    )
    assert gpls_overlap(ds, CFG) == 1.0


def test_overlap_forced_mismatch():
    ds = dataset(
        [trace([gpls_flow([100, -3000], perturb=True)], trace_id="t0")],
        num_classes=1,
    )
    r = gpls_overlap_detail(ds, CFG)
    assert (r.value, r.numerator, r.denominator) == (0.0, 0, 1)


def test_overlap_requires_pls():
    ds = dataset([trace([flow([res("u", "a.x", [10])])])], num_classes=1)
    with pytest.raises(ValueError):
        gpls_overlap(ds, CFG)


def stability_corpus(perturb_pls):
    """Two traces per label with matching flow compositions; optionally the
    second copy's pls differs."""
    traces = []
    for label in range(3):
        for copy in range(2):
            f = flow(
                [res(f"l{label}/u", "a.x", [100 + label, -900])],
                pls=[131 + label, -931] if not (perturb_pls and copy == 1) else [1, 130 + label, -931],
            )
            traces.append(trace([f], trace_id=f"t{label}-{copy}", label=label))
    return dataset(traces)


def test_stability_duplicated_traces_all_features_stable():
    ds = stability_corpus(perturb_pls=False)
    for feature in Feature:
        assert stable_flow_ratio(ds, feature, cfg=CFG) == 1.0


def test_stability_pls_perturbed_fs_untouched():
    ds = stability_corpus(perturb_pls=True)
    assert stable_flow_ratio(ds, Feature.FS, cfg=CFG) == 1.0
    assert stable_flow_ratio(ds, Feature.PLS, cfg=CFG) == 0.0


def test_stability_requires_recurring_groups():
    ds = dataset([trace([flow([res("u", "a.x", [1])])], trace_id="t0")], num_classes=1)
    with pytest.raises(ValueError):
        stable_flow_ratio(ds, Feature.FS)


def test_stability_stable_resources_scope_filters():
    # label 0: trace A has resources {u, extra}; trace B only {u}.
    # With the stable-only scope, the extra resource is ignored so the flows
    # match and FS is stable.
    fA = flow([res("u", "a.x", [10, -20]), res("extra", "a.x", [30, -40])])
    fB = flow([res("u", "a.x", [10, -20])])
    ds = dataset(
        [
            trace([fA], trace_id="tA", label=0),
            trace([fB], trace_id="tB", label=0),
        ],
        num_classes=1,
    )
    with pytest.raises(ValueError):
        stable_flow_ratio(ds, Feature.FS, StabilityScope.ALL_RESOURCES)
    assert (
        stable_flow_ratio(ds, Feature.FS, StabilityScope.STABLE_RESOURCES_ONLY) == 1.0
    )


def test_stability_bernoulli_calibration():
    # 2000 recurring flow groups; each independently perturbed with
    # probability 0.98, so the expected stable ratio is 0.02.
    import random

    from sata.metrics import stable_flow_ratio_detail

    rng = random.Random(99)
    noise_rate = 0.98
    traces = []
    for label in range(4):
        for copy in range(2):
            flows = []
            for g in range(500):
                # one coin per group, drawn while building the second copy
                perturb = copy == 1 and rng.random() < noise_rate
                flows.append(
                    flow(
                        [res(f"l{label}/g{g}", "a.x", [100 + g, -900])],
                        flow_id=f"f{g}",
                        pls=[131 + g, -931] if not perturb else [1, 130 + g, -931],
                    )
                )
            traces.append(trace(flows, trace_id=f"t{label}-{copy}", label=label))
    ds = dataset(traces)
    r = stable_flow_ratio_detail(ds, Feature.PLS, cfg=CFG)
    assert r.denominator == 2000
    assert r.value == pytest.approx(0.02, abs=0.01)
