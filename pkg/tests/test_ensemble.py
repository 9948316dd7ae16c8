import itertools
import logging

import pytest
from hypothesis import given, strategies as st

from densecap.core import PipelineConfig
from densecap.errors import ConfigError, ValidationError
from densecap.ensemble import (
    EnsembleWeights,
    GroupEntry,
    TimestampGroup,
    ensemble_timelines,
    grid_points,
    grid_search_weights,
    group_by_timestamp,
    select_top1,
)
from tests.conftest import HAND_GROUPS, HAND_WINNERS, TABLE1_TRIPLE, cand, hand_streams, hand_truth

CFG = PipelineConfig()


class TestWeights:
    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            EnsembleWeights({"a": 0.0})
        with pytest.raises(ConfigError):
            EnsembleWeights({})

    def test_anchor_model_defaults_to_one(self):
        w = EnsembleWeights.anchored(["blip-base", "flamingo"], {"flamingo": 0.7})
        assert w.weights == {"blip-base": 1.0, "flamingo": 0.7}


class TestGrouping:
    def test_exact_coincidence(self):
        streams = [[cand(100.0, model=m)] for m in ("a", "b", "c")]
        (g,) = group_by_timestamp(streams, 0)
        assert [e.model_id for e in g.entries] == ["a", "b", "c"]

    def test_tolerance_clusters(self):
        streams = [[cand(100, model="a"), cand(103, model="a")], [cand(100.4, model="b")]]
        groups = group_by_timestamp(streams, 0.5)
        assert [(g.timestamp_s, len(g.entries)) for g in groups] == [(100, 2), (103, 1)]

    def test_single_stream(self):
        s = [cand(t) for t in (1, 2, 3)]
        assert [len(g.entries) for g in group_by_timestamp([s], 0)] == [1, 1, 1]

    def test_same_model_twice_keeps_confident(self, caplog):
        s = [cand(10.0, "low", 0.4), cand(10.2, "high", 0.8)]
        with caplog.at_level(logging.WARNING):
            (g,) = group_by_timestamp([s], 0.5)
        assert g.entries == (GroupEntry("m", "high", 0.8),)
        assert "two candidates" in caplog.text

    def test_anchor_is_earliest(self):
        streams = [[cand(1.0, model="a"), cand(1.6, model="a")], [cand(1.4, model="b")]]
        groups = group_by_timestamp(streams, 0.5)
        assert [g.timestamp_s for g in groups] == [1.0, 1.6]

    @given(st.lists(st.lists(st.integers(0, 20), max_size=6), min_size=1, max_size=4))
    def test_zero_tolerance_groups_equal_times_only(self, times):
        streams = [
            [cand(float(t), model=f"m{i}") for t in sorted(set(ts))] for i, ts in enumerate(times)
        ]
        groups = group_by_timestamp(streams, 0)
        expected = sorted({t for ts in times for t in ts})
        assert [g.timestamp_s for g in groups] == expected
        for g in groups:
            owners = {f"m{i}" for i, ts in enumerate(times) if g.timestamp_s in ts}
            assert {e.model_id for e in g.entries} == owners


class TestSelect:
    def test_table1_triple_example(self):
        g = TimestampGroup("v", 0.0, (
            GroupEntry("blip-base", "a", 0.90), GroupEntry("blip-large", "b", 0.95), GroupEntry("blip2", "c", 0.92),
        ))
        sel = select_top1(g, EnsembleWeights(TABLE1_TRIPLE))
        assert sel.model_id == "blip-base"
        assert sel.weighted_score == 0.90

    def test_single_entry(self):
        g = TimestampGroup("v", 0.0, (GroupEntry("x", "only", 0.1),))
        assert select_top1(g, EnsembleWeights({"x": 0.01})).caption == "only"

    def test_tie_smallest_model(self):
        g = TimestampGroup("v", 0.0, (GroupEntry("zeta", "z", 0.5), GroupEntry("alpha", "a", 0.5)))
        assert select_top1(g, EnsembleWeights({"zeta": 1, "alpha": 1})).model_id == "alpha"

    def test_missing_weight(self):
        g = TimestampGroup("v", 0.0, (GroupEntry("x", "a", 0.5),))
        with pytest.raises(ConfigError):
            select_top1(g, EnsembleWeights({"y": 1}))

    def test_duplicate_model_rejected(self):
        with pytest.raises(ValidationError):
            TimestampGroup("v", 0.0, (GroupEntry("x", "a", 0.5), GroupEntry("x", "b", 0.6)))

    def test_hand_fixture(self):
        groups = group_by_timestamp(hand_streams(), 0)
        w = EnsembleWeights(TABLE1_TRIPLE)
        assert [select_top1(g, w).model_id for g in groups] == HAND_WINNERS


class TestEnsembleTimelines:
    def test_single_model_identity(self):
        s = [cand(t, f"c{t}", 0.3 + t / 100) for t in (1.0, 5.0, 9.0)]
        pred = ensemble_timelines([s], EnsembleWeights({"m": 1.0}), CFG)
        assert [(e.timestamp_s, e.caption, e.confidence) for e in pred.events] == [
            (c.timestamp_s, c.caption, c.confidence) for c in s
        ]

    def test_disjoint_union(self):
        a = [cand(1.0, "a1", model="a"), cand(5.0, "a5", model="a")]
        b = [cand(3.0, "b3", model="b")]
        pred = ensemble_timelines([a, b], EnsembleWeights({"a": 1, "b": 1}), CFG)
        assert [e.caption for e in pred.events] == ["a1", "b3", "a5"]

    def test_clamps_confidence(self):
        pred = ensemble_timelines([[cand(1.0, conf=0.9)]], EnsembleWeights({"m": 2.0}), CFG)
        assert pred.events[0].confidence == 1.0

    def test_hand_fixture_captions(self):
        pred = ensemble_timelines(hand_streams(), EnsembleWeights(TABLE1_TRIPLE), CFG)
        expected = [entries[m][0] for (_, entries), m in zip(HAND_GROUPS, HAND_WINNERS)]
        assert [e.caption for e in pred.events] == expected


class TestGridSearch:
    def test_cardinality(self):
        res = grid_search_weights(
            {"match_1": hand_streams()}, hand_truth(),
            {"blip-base": [1.0], "blip-large": [0.7, 0.82], "blip2": [1.0]}, "meteor", CFG,
        )
        assert len(res.trace) == 2
        assert res.best_score == max(r.score for r in res.trace)

    def test_grid_order(self):
        pts = grid_points({"b": [1, 2], "a": [3, 4]})
        assert [(p.weights["a"], p.weights["b"]) for p in pts] == [(3, 1), (3, 2), (4, 1), (4, 2)]

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            grid_points({"a": []})
        with pytest.raises(ValueError):
            grid_points({})

    def test_perfect_match_wins(self):
        # references equal blip2's captions; only a large blip2 weight selects them everywhere
        streams = hand_streams()
        truth = [
            type(g)(g.video_id, g.timestamp_s, entries["blip2"][0])
            for g, (_, entries) in zip(hand_truth(), HAND_GROUPS)
        ]
        grid = {"blip-base": [1.0], "blip-large": [1.0], "blip2": [0.5, 1.0, 10.0]}
        res = grid_search_weights({"match_1": streams}, truth, grid, "cider", CFG)
        assert res.best_weights.weights["blip2"] == 10.0
        res_m = grid_search_weights({"match_1": streams}, truth, grid, "meteor", CFG)
        assert res_m.best_weights.weights["blip2"] == 10.0
        assert res_m.best_score == max(r.score for r in res_m.trace)

    def test_ties_keep_first(self):
        # a single-model corpus: weights cannot change anything
        res = grid_search_weights({"match_1": [hand_streams()[0]]}, hand_truth(), {"blip-base": [0.5, 1.0, 2.0]})
        assert len({r.score for r in res.trace}) == 1
        assert res.best_weights.weights["blip-base"] == 0.5

    def test_parallel_matches_serial(self):
        grid = {"blip-base": [1.0], "blip-large": [0.7, 0.85, 1.0], "blip2": [0.8, 0.95]}
        args = ({"match_1": hand_streams()}, hand_truth(), grid, "meteor", CFG)
        assert grid_search_weights(*args, max_workers=2) == grid_search_weights(*args)


@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0.01, 5)), min_size=1, max_size=5),
    st.floats(0.001, 1000),
)
def test_argmax_invariance(entries, k):
    group = TimestampGroup("v", 0.0, tuple(GroupEntry(f"m{i}", f"c{i}", c) for i, (c, _) in enumerate(entries)))
    w = EnsembleWeights({f"m{i}": wt for i, (_, wt) in enumerate(entries)})
    a, b = select_top1(group, w), select_top1(group, w.scaled(k))
    scores = sorted(c * wt for c, wt in entries)
    if len(scores) > 1 and scores[-1] - scores[-2] <= 1e-12 * scores[-1]:
        return  # near-ties may flip under float rounding of the rescaled weights
    assert (a.model_id, a.caption) == (b.model_id, b.caption)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=5), st.floats(0.01, 10))
def test_equal_weights_is_plain_max(confs, w):
    group = TimestampGroup("v", 0.0, tuple(GroupEntry(f"m{i}", f"c{i}", c) for i, c in enumerate(confs)))
    sel = select_top1(group, EnsembleWeights({f"m{i}": w for i in range(len(confs))}))
    best = max(confs)
    assert sel.model_id == f"m{confs.index(best)}"
