import logging

import pytest

from densecap.ensemble import EnsembleWeights, GroupEntry, TimestampGroup, select_top1
from densecap.llm import (
    DEFAULT_TEMPLATE,
    StubServer,
    TextGenerationClient,
    TransportError,
    merge_groups,
    merge_outcome,
    merge_with_llm,
    render_prompt,
)

COACH = "[COACH] has decided to introduce fresh legs, with [PLAYER] ([TEAM]) replacing [PLAYER]"
CORNER = (
    "[TEAM] will have a chance to score from a corner kick. a substitution has been made. "
    "[PLAYER] is replaced by [PLAYER] ([TEAM])"
)
W = EnsembleWeights({"blip-base": 1.0, "blip2": 0.95})
GROUP = TimestampGroup("v", 60.0, (GroupEntry("blip-base", COACH, 0.8), GroupEntry("blip2", CORNER, 0.9)))


def test_absent_client_falls_back():
    assert merge_with_llm(GROUP, None, DEFAULT_TEMPLATE, W) == select_top1(GROUP, W).caption


def test_echo_stub_returns_first_caption():
    with StubServer() as srv:
        got = merge_with_llm(GROUP, TextGenerationClient(srv.url, timeout_s=5), "{captions}", W)
    assert got == COACH


def test_prompt_contains_both_captions_verbatim():
    with StubServer(lambda p: "  merged caption \n") as srv:
        out = merge_outcome(GROUP, TextGenerationClient(srv.url, timeout_s=5), DEFAULT_TEMPLATE, W)
        (req,) = srv.requests
    assert out.caption == "merged caption" and out.merged
    assert COACH in req["prompt"] and CORNER in req["prompt"]
    assert set(req) == {"prompt", "max_tokens", "temperature"}


def test_render_prompt_joins_with_newlines():
    assert render_prompt(GROUP, "<{captions}>") == f"<{COACH}\n{CORNER}>"


def test_failing_stub_falls_back_and_logs(caplog):
    with StubServer(fail=True) as srv, caplog.at_level(logging.WARNING):
        client = TextGenerationClient(srv.url, timeout_s=5, retries=2)
        out = merge_outcome(GROUP, client, DEFAULT_TEMPLATE, W)
        assert len(srv.requests) == 3
    assert out == (select_top1(GROUP, W).caption, False)
    assert "fell back" in caplog.text


def test_unreachable_endpoint():
    client = TextGenerationClient("http://127.0.0.1:9/generate", timeout_s=0.5)
    with pytest.raises(TransportError):
        client.generate("x")
    assert merge_with_llm(GROUP, client, DEFAULT_TEMPLATE, W) == select_top1(GROUP, W).caption


def test_empty_completion_falls_back():
    with StubServer(lambda p: "   ") as srv:
        out = merge_outcome(GROUP, TextGenerationClient(srv.url, timeout_s=5), DEFAULT_TEMPLATE, W)
    assert not out.merged


def test_merge_groups_preserves_order_under_concurrency():
    groups = [
        TimestampGroup("v", float(i), (GroupEntry("blip-base", f"caption {i}", 0.5),)) for i in range(12)
    ]
    with StubServer() as srv:
        outs = merge_groups(groups, TextGenerationClient(srv.url, timeout_s=5), "{captions}", W, max_in_flight=4)
    assert [o.caption for o in outs] == [f"caption {i}" for i in range(12)]
