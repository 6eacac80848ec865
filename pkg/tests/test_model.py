import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sata.ingest import _trace_from_obj, _trace_to_obj
from sata.model import (
    Direction,
    DirectedFrame,
    Flow,
    TlsVersion,
    flatten_flow_frames,
    frame_from_signed,
    validate_trace,
)

from helpers import flow, res, trace


def test_valid_trace_has_empty_report():
    assert validate_trace(trace([flow([res("u", "a.example", [10, -20])])])) == []


def test_flow_without_resources_flagged():
    bad = trace([flow([], flow_id="fx")])
    report = validate_trace(bad)
    assert len(report) == 1
    assert report[0].path == "flows[0]"


def test_domain_outside_san_set_flagged():
    bad = trace([flow([res("u", "b.example", [10])], san={"a.example"})])
    report = validate_trace(bad)
    assert len(report) == 1
    assert "b.example" in report[0].message


def test_first_frame_must_be_up():
    report = validate_trace(trace([flow([res("u", "a.example", [-5, 10])])]))
    assert any("UP" in v.message for v in report)


def test_zero_size_up_frame_rejected_by_codec():
    with pytest.raises(ValueError):
        DirectedFrame(Direction.UP, 0).signed
    assert frame_from_signed(0) == DirectedFrame(Direction.DOWN, 0)


def test_flatten_concatenates_with_annotations():
    f = flow(
        [res("u1", "a.example", [10, -20]), res("u2", "a.example", [30])]
    )
    flat = flatten_flow_frames(f)
    assert [(x.signed, x.source) for x in flat] == [(10, 1), (-20, 1), (30, 2)]


def test_flatten_single_resource_is_identity():
    r = res("u1", "a.example", [10, -20, -30])
    flat = flatten_flow_frames(flow([r]))
    assert tuple(DirectedFrame(x.direction, x.size) for x in flat) == r.frames


def test_flatten_annotation_counts():
    f = flow(
        [
            res("u1", "a.example", [1, -2]),
            res("u2", "a.example", [3, -4, -5]),
            res("u3", "a.example", [6]),
        ]
    )
    flat = flatten_flow_frames(f)
    assert len(flat) == 6
    assert [x.source for x in flat] == [1, 1, 2, 2, 2, 3]


def test_flatten_rejects_empty_flow():
    with pytest.raises(ValueError):
        flatten_flow_frames(flow([]))


_label = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=6)
_domain = st.builds(lambda a, b: f"{a}.{b}", _label, _label)


@st.composite
def traces(draw):
    domains = draw(st.lists(_domain, min_size=1, max_size=3, unique=True))
    flows = []
    for fi in range(draw(st.integers(1, 3))):
        resources = []
        for ri in range(draw(st.integers(1, 3))):
            first = draw(st.integers(1, 2000))
            rest = draw(
                st.lists(
                    st.one_of(st.integers(1, 3000), st.integers(-3000, 0)),
                    max_size=4,
                )
            )
            resources.append(
                res(
                    draw(st.text(min_size=1, max_size=8)),
                    draw(st.sampled_from(domains)),
                    [first] + rest,
                )
            )
        san = {r.domain for r in resources}
        if draw(st.booleans()):
            san |= {draw(_domain)}
        pls = draw(
            st.one_of(
                st.none(),
                st.lists(
                    st.integers(-4000, 4000).filter(lambda v: v != 0),
                    min_size=1,
                    max_size=6,
                ),
            )
        )
        flows.append(
            flow(
                resources,
                flow_id=f"f{fi}",
                san=san,
                tls=draw(st.sampled_from(list(TlsVersion))),
                pls=pls,
            )
        )
    return trace(flows, trace_id=draw(_label), label=draw(st.integers(0, 9)))


@given(traces())
@settings(max_examples=150)
def test_trace_json_round_trip(t):
    assert validate_trace(t) == []
    encoded = json.dumps(_trace_to_obj(t))
    assert _trace_from_obj(json.loads(encoded)) == t


@given(traces())
@settings(max_examples=80)
def test_flatten_is_order_preserving(t):
    for f in t.flows:
        flat = flatten_flow_frames(f)
        for idx, r in enumerate(f.resources, start=1):
            sub = tuple(
                DirectedFrame(x.direction, x.size) for x in flat if x.source == idx
            )
            assert sub == r.frames


def test_zero_size_down_frame_survives_round_trip():
    t = trace([flow([res("u", "a.example", [10, 0, -20])])])
    assert validate_trace(t) == []
    back = _trace_from_obj(json.loads(json.dumps(_trace_to_obj(t))))
    assert back == t
    frames = back.flows[0].resources[0].frames
    assert frames[1] == DirectedFrame(Direction.DOWN, 0)
