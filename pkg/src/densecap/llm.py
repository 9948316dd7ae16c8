"""HTTP text-generation client for caption merging, plus a local stub server.

Merging is fail-open: with no client, or on any transport or protocol
failure, the top-1 caption of the confidence ensemble is used instead.
"""
from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, NamedTuple, Sequence

from densecap.ensemble import EnsembleWeights, TimestampGroup, select_top1

logger = logging.getLogger(__name__)

CAPTIONS_PLACEHOLDER = "{captions}"

DEFAULT_TEMPLATE = (
    "The following captions describe the same moment of a soccer match.\n"
    "Combine them into a single caption that keeps every distinct detail.\n"
    "{captions}\n"
    "Combined caption:"
)


class TransportError(RuntimeError):
    pass


@dataclass
class TextGenerationClient:
    endpoint: str
    timeout_s: float = 30.0
    retries: int = 0
    max_tokens: int = 64
    temperature: float = 0.0

    def generate(self, prompt: str) -> str:
        body = json.dumps(
            {"prompt": prompt, "max_tokens": self.max_tokens, "temperature": self.temperature}
        ).encode("utf-8")
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(
                self.endpoint, data=body, headers={"Content-Type": "application/json"}, method="POST"
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                text = payload["text"]
                if not isinstance(text, str):
                    raise TypeError("'text' is not a string")
                return text
            except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError) as exc:
                last_exc = exc
                logger.warning("generation request %d/%d failed: %s", attempt + 1, self.retries + 1, exc)
        raise TransportError(str(last_exc))


def render_prompt(group: TimestampGroup, template: str) -> str:
    return template.replace(CAPTIONS_PLACEHOLDER, "\n".join(group.captions))


class MergeOutcome(NamedTuple):
    caption: str
    merged: bool  # False when the top-1 fallback was used


def merge_outcome(
    group: TimestampGroup,
    client: TextGenerationClient | None,
    prompt_template: str,
    weights: EnsembleWeights,
) -> MergeOutcome:
    fallback = select_top1(group, weights).caption
    if client is None:
        return MergeOutcome(fallback, False)
    try:
        text = client.generate(render_prompt(group, prompt_template)).strip()
    except TransportError as exc:
        logger.warning("merge fell back to top-1 at %s@%ss: %s", group.video_id, group.timestamp_s, exc)
        return MergeOutcome(fallback, False)
    if not text:
        logger.warning("merge fell back to top-1 at %s@%ss: empty completion", group.video_id, group.timestamp_s)
        return MergeOutcome(fallback, False)
    return MergeOutcome(text, True)


def merge_with_llm(
    group: TimestampGroup,
    client: TextGenerationClient | None,
    prompt_template: str,
    weights: EnsembleWeights,
) -> str:
    """Merged caption for one group, or the top-1 caption on any failure."""
    return merge_outcome(group, client, prompt_template, weights).caption


def merge_groups(
    groups: Sequence[TimestampGroup],
    client: TextGenerationClient | None,
    prompt_template: str,
    weights: EnsembleWeights,
    max_in_flight: int = 1,
) -> list[MergeOutcome]:
    """Merge many groups with bounded concurrency; results keep input order."""
    fn = lambda g: merge_outcome(g, client, prompt_template, weights)  # noqa: E731
    if client is None or max_in_flight <= 1:
        return [fn(g) for g in groups]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(fn, groups))


# ---------------------------------------------------------------------------
# Stub server
# ---------------------------------------------------------------------------


def echo_first_line(prompt: str) -> str:
    """Stub behaviour: return the first non-blank line of the prompt."""
    lines = [ln for ln in prompt.splitlines() if ln.strip()]
    return lines[0] if lines else ""


class StubServer:
    """Local HTTP endpoint speaking the generation wire contract.

    ``responder`` maps a prompt to completion text; ``fail=True`` answers
    every request with HTTP 500. Received request bodies are kept in
    ``requests``.

    >>> with StubServer(lambda p: "merged") as srv:  # doctest: +SKIP
    ...     TextGenerationClient(srv.url).generate("x")
    'merged'
    """

    def __init__(self, responder: Callable[[str], str] = echo_first_line, fail: bool = False):
        self.responder = responder
        self.fail = fail
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with stub._lock:
                    stub.requests.append(body)
                if stub.fail:
                    self.send_error(500, "stub failure")
                    return
                out = json.dumps({"text": stub.responder(body.get("prompt", ""))}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(out)))
                self.end_headers()
                self.wfile.write(out)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/generate"

    @property
    def prompts(self) -> list[str]:
        return [r.get("prompt", "") for r in self.requests]

    def start(self) -> "StubServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
