"""Client side of the external classifier protocol.

The pipeline can delegate title classification to an external backend
process speaking newline-delimited JSON over stdin/stdout:

    {"op": "hello", "version": 1}        -> {"ok": true, "name": ...}
    {"op": "classify", "id": N,
     "snippet": {...}}                   -> {"id": N, "score": S}   S in [0,1]
    {"op": "bye"}                        -> (process exits)

Any other traffic is a protocol error. A per-snippet timeout falls back
to a caller-supplied classical prediction; a dead backend degrades the
whole remaining batch the same way.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from typing import Callable, Sequence

from tenq.candidates import ContextSnippet
from tenq.classifiers import Prediction

PROTOCOL_VERSION = 1
DEFAULT_SNIPPET_TIMEOUT_S = 2.0


class BackendUnavailable(Exception):
    """Backend process could not be spawned or refused the handshake."""


class ProtocolError(Exception):
    """Backend sent something outside the protocol."""


class BackendHandle:
    """One external backend process plus its reader thread.

    Access is serialized by an internal lock: one in-flight request at a
    time per handle.
    """

    def __init__(self, command: Sequence[str], handshake_timeout_s: float = 10.0) -> None:
        self.command = list(command)
        self._lock = threading.Lock()
        self._responses: queue.Queue[dict | None] = queue.Queue()
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot spawn backend {self.command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        try:
            reply = self._roundtrip({"op": "hello", "version": PROTOCOL_VERSION}, handshake_timeout_s)
        except (ProtocolError, TimeoutError) as exc:
            self.close()
            raise BackendUnavailable(f"handshake failed: {exc}") from exc
        if not isinstance(reply, dict) or reply.get("ok") is not True:
            self.close()
            raise BackendUnavailable(f"handshake rejected: {reply!r}")
        self.name = str(reply.get("name", ""))

    def _read_loop(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                self._responses.put(json.loads(line))
            except json.JSONDecodeError:
                self._responses.put({"_malformed": line})
        self._responses.put(None)  # EOF marker

    def _send(self, payload: dict) -> None:
        if self._proc.poll() is not None or self._proc.stdin is None:
            raise ProtocolError("backend process is gone")
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"write to backend failed: {exc}") from exc

    def _recv(self, timeout_s: float) -> dict:
        try:
            item = self._responses.get(timeout=timeout_s)
        except queue.Empty as exc:
            raise TimeoutError(f"no backend response within {timeout_s}s") from exc
        if item is None:
            raise ProtocolError("backend closed its output")
        if "_malformed" in item:
            raise ProtocolError(f"malformed backend line: {item['_malformed']!r}")
        return item

    def _roundtrip(self, payload: dict, timeout_s: float) -> dict:
        self._send(payload)
        return self._recv(timeout_s)

    def classify(self, snippet: ContextSnippet, timeout_s: float = DEFAULT_SNIPPET_TIMEOUT_S) -> Prediction:
        """Classify one snippet; raises TimeoutError / ProtocolError."""
        with self._lock:
            req_id = self._next_id
            self._next_id += 1
            self._send({"op": "classify", "id": req_id, "snippet": snippet.to_dict()})
            while True:
                reply = self._recv(timeout_s)
                got = reply.get("id")
                if got is None or not isinstance(got, int):
                    raise ProtocolError(f"classify reply without id: {reply!r}")
                if got < req_id:
                    continue  # stale answer from a previously timed-out request
                if got != req_id:
                    raise ProtocolError(f"out-of-order reply: expected {req_id}, got {got}")
                score = reply.get("score")
                if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
                    raise ProtocolError(f"score outside [0, 1]: {reply!r}")
                score = float(score)
                return Prediction(label=score >= 0.5, score=score)

    def close(self) -> None:
        try:
            if self._proc.poll() is None and self._proc.stdin is not None:
                self._proc.stdin.write(json.dumps({"op": "bye"}) + "\n")
                self._proc.stdin.flush()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait(timeout=2.0)

    def __enter__(self) -> "BackendHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_classify(
    backend: BackendHandle,
    snippets: Sequence[ContextSnippet],
    *,
    timeout_s: float = DEFAULT_SNIPPET_TIMEOUT_S,
    fallback: Callable[[ContextSnippet], Prediction] | None = None,
) -> list[Prediction]:
    """Classify snippets through the backend, in order.

    A snippet whose request times out (or hits a dead/broken backend) is
    classified by ``fallback`` instead when one is configured; without a
    fallback the error propagates. The run always completes when a
    fallback is present.
    """
    out: list[Prediction] = []
    dead = False
    for snippet in snippets:
        if not dead:
            try:
                out.append(backend.classify(snippet, timeout_s=timeout_s))
                continue
            except TimeoutError:
                if fallback is None:
                    raise
            except ProtocolError:
                if fallback is None:
                    raise
                dead = True  # do not keep hammering a broken process
        assert fallback is not None
        out.append(fallback(snippet))
    return out


# --- conformance harness -----------------------------------------------------


def _tiny_snippets() -> list[ContextSnippet]:
    from tenq.docmodel import Block, BlockKind

    def block(i: int, text: str, bold: bool) -> Block:
        return Block(index=i, text=text, bold=bold, centered=bold, kind=BlockKind.PARAGRAPH)

    title = ContextSnippet(
        blocks=(block(0, "previous paragraph text", False), block(1, "Item 6. Exhibits.", True), block(2, "following text", False)),
        candidate_offset=1,
    )
    reference = ContextSnippet(
        blocks=(
            block(0, "dense body text that keeps going", False),
            block(1, "as discussed in Item 3 of this report, the registrant recorded additional reserves", False),
            block(2, "more dense body text", False),
        ),
        candidate_offset=1,
    )
    return [title, reference]


def run_conformance(command: Sequence[str], snippets: Sequence[ContextSnippet] | None = None) -> list[str]:
    """Drive a backend command through the protocol's contract.

    Checks the handshake, ordered in-range classify responses, fault
    tolerance on a garbage line, and a clean exit on "bye". Returns a
    list of human-readable failures (empty means conformant).
    """
    failures: list[str] = []
    snippets = list(snippets) if snippets is not None else _tiny_snippets()
    try:
        handle = BackendHandle(command)
    except BackendUnavailable as exc:
        return [f"handshake: {exc}"]
    if not handle.name:
        failures.append("handshake: response carries no name")
    try:
        for i, snippet in enumerate(snippets):
            try:
                pred = handle.classify(snippet)
            except (TimeoutError, ProtocolError) as exc:
                failures.append(f"classify[{i}]: {exc}")
                return failures
            if not 0.0 <= pred.score <= 1.0:
                failures.append(f"classify[{i}]: score {pred.score} outside [0, 1]")

        # fault tolerance: garbage line answered with an error object,
        # and the next request still served
        with handle._lock:
            assert handle._proc.stdin is not None
            handle._proc.stdin.write("this is not json\n")
            handle._proc.stdin.flush()
            try:
                reply = handle._recv(DEFAULT_SNIPPET_TIMEOUT_S)
            except (TimeoutError, ProtocolError) as exc:
                failures.append(f"garbage line: no error response ({exc})")
                return failures
            if "error" not in reply:
                failures.append(f"garbage line: reply has no error field: {reply!r}")
        try:
            handle.classify(snippets[0])
        except (TimeoutError, ProtocolError) as exc:
            failures.append(f"classify after garbage: {exc}")
            return failures
    finally:
        handle.close()
    rc = handle._proc.returncode
    if rc != 0:
        failures.append(f"bye: backend exited with status {rc}")
    return failures
