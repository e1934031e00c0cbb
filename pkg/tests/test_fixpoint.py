from __future__ import annotations

import pytest

from helpers import DATA_DIR, load_json
from mudep import nativescan, taintcore
from mudep.fixpoint import (
    BACKWARD_SINK, FORWARD_SOURCE, FoldConfig, backward_sink_update, forward_source_update,
    native_called_java_methods, run_folds,
)
from mudep.nativescan import SourceSinkList


def load_scenario(name, reg, sigs):
    base = DATA_DIR / "scenarios" / name
    app = taintcore.parse_app(load_json(base / "app.json"), reg)
    images = [nativescan.parse_image(load_json(base / "image.json"))]
    ss = nativescan.load_ss(str(DATA_DIR / "ss_base.json"))
    return app, images, ss


def test_two_fold_backward_scenario(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    stubs = {}
    final, trace = run_folds(app, images, ss, stubs, FoldConfig(max_folds=4),
                             sigs=corpus_sigs, reg=reg)
    folds = trace.to_json()

    # Fold 1: the plain scan promotes the directly sink-calling bridge.
    assert folds[0]["fold"] == 1
    assert folds[0]["added_sinks"] == ["com.ex.fold.Conn.push"]

    # Fold 2: the helper feeding that bridge becomes a sink, and the rescan
    # then flags the native function whose body calls the helper.
    assert folds[1]["fold"] == 2
    assert folds[1]["added_sinks"] == ["com.ex.fold.Conn.encode", "com.ex.fold.Conn.helperNative"]
    assert folds[1]["flows"] == [{"source": "com.ex.fold.Conn.encode",
                                  "sink": "com.ex.fold.Conn.push"}]

    # Fold 3: fixpoint, no delta.
    assert folds[2]["fold"] == 3
    assert folds[2]["added_sinks"] == [] and folds[2]["added_sources"] == []
    assert len(folds) == 3  # terminated before max_folds

    assert {"com.ex.fold.Conn.push", "com.ex.fold.Conn.encode",
            "com.ex.fold.Conn.helperNative"} <= final.sinks


def test_forward_source_scenario(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_forward", reg, corpus_sigs)
    stubs = {}
    final, trace = run_folds(app, images, ss, stubs, FoldConfig(max_folds=4),
                             sigs=corpus_sigs, reg=reg)
    folds = trace.to_json()
    assert folds[0]["added_sources"] == ["com.ex.fwd.Api.fetch"]
    assert folds[1]["added_sources"] == ["com.ex.fwd.Api.pull", "com.ex.fwd.Api.wrap"]
    assert folds[1]["flows"] == [{"source": "com.ex.fwd.Api.fetch", "sink": "com.ex.fwd.Api.wrap"}]
    assert folds[2]["added_sources"] == []
    assert {"com.ex.fwd.Api.fetch", "com.ex.fwd.Api.wrap", "com.ex.fwd.Api.pull"} <= final.sources


def test_max_folds_one_equals_plain_scan(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    final, trace = run_folds(app, images, ss, {}, FoldConfig(max_folds=1),
                             sigs=corpus_sigs, reg=reg)
    bridges, _ = nativescan.scan(images, ss)
    plain = nativescan.apply_bridges(ss, bridges)
    assert final.sources == plain.sources and final.sinks == plain.sinks
    assert len(trace.folds) == 1


def test_max_folds_caps_growth(reg, corpus_sigs):
    # With max_folds=1 the helper promotion that fold 2 would add never happens.
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    final, _ = run_folds(app, images, ss, {}, FoldConfig(max_folds=1),
                         sigs=corpus_sigs, reg=reg)
    assert "com.ex.fold.Conn.encode" not in final.sinks


def test_monotone_growth_and_idempotence(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    final, _ = run_folds(app, images, ss, {}, FoldConfig(max_folds=4),
                         sigs=corpus_sigs, reg=reg)
    assert ss.sources <= final.sources and ss.sinks <= final.sinks
    # Saturated lists: a second run adds nothing.
    again, trace = run_folds(app, images, final, {}, FoldConfig(max_folds=4),
                             sigs=corpus_sigs, reg=reg)
    assert again.sources == final.sources and again.sinks == final.sinks
    assert trace.folds[-1]["added_sinks"] == []


def test_trace_length_bounded(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    for cap in (1, 2, 3):
        _, trace = run_folds(app, images, ss, {}, FoldConfig(max_folds=cap),
                             sigs=corpus_sigs, reg=reg)
        assert len(trace.folds) <= cap


def test_no_native_sinks_means_no_backward_delta(reg, corpus_sigs):
    app, images, _ = load_scenario("fold_backward", reg, corpus_sigs)
    empty_ss = SourceSinkList()  # nothing to match, nothing to promote
    final, trace = run_folds(app, images, empty_ss, {}, FoldConfig(max_folds=3),
                             sigs=corpus_sigs, reg=reg)
    assert final.sinks == set() and final.sources == set()
    assert len(trace.folds) == 2 and trace.folds[1]["added_sinks"] == []


def test_directional_wrappers(reg, corpus_sigs):
    app, images, ss = load_scenario("fold_backward", reg, corpus_sigs)
    final_b, _ = backward_sink_update(app, images, ss, {}, FoldConfig(max_folds=4),
                                      sigs=corpus_sigs, reg=reg)
    assert "com.ex.fold.Conn.encode" in final_b.sinks

    app_f, images_f, ss_f = load_scenario("fold_forward", reg, corpus_sigs)
    final_f, _ = forward_source_update(app_f, images_f, ss_f, {}, FoldConfig(max_folds=4),
                                       sigs=corpus_sigs, reg=reg)
    assert "com.ex.fwd.Api.wrap" in final_f.sources


def test_native_called_java_methods(reg, corpus_sigs):
    _, images, _ = load_scenario("fold_backward", reg, corpus_sigs)
    assert native_called_java_methods(images) == ["com.ex.fold.Conn.encode"]


def test_fold_config_validation():
    with pytest.raises(ValueError):
        FoldConfig(max_folds=0)
    with pytest.raises(ValueError):
        FoldConfig(direction="sideways")
    assert FoldConfig(direction=BACKWARD_SINK).direction == BACKWARD_SINK
    assert FoldConfig(direction=FORWARD_SOURCE).direction == FORWARD_SOURCE
