"""Victim classifiers behind a black-box predict interface.

Attacks only ever see ``predict_batch``: token probabilities for a batch of
plain-text sentences.  Implementations here are a built-in bag-of-words
classifier (scored through the shared kernels) and a remote client speaking
newline-delimited JSON over a subprocess pipe or HTTP.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import select
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    ConnectFailed,
    HandshakeMismatch,
    LabelMismatch,
    ProtocolError,
    Timeout,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_BATCH = 64
RENORM_REJECT = 1e-3
RENORM_WARN = 1e-6


def vocab_digest(vocab) -> str:
    """Order-independent fingerprint of a vocabulary."""
    joined = "\n".join(sorted(vocab))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class VictimManifest:
    labels: tuple[str, ...]
    max_batch: int = DEFAULT_MAX_BATCH
    vocab: frozenset[str] | None = None
    digest: str | None = None

    def __post_init__(self):
        if len(self.labels) < 2:
            raise HandshakeMismatch(f"victim reports {len(self.labels)} labels, need at least 2")
        if len(set(self.labels)) != len(self.labels):
            raise HandshakeMismatch("victim label names are not unique")
        if self.max_batch < 1:
            raise HandshakeMismatch(f"victim max_batch must be positive, got {self.max_batch}")
        if self.vocab is not None and self.digest is not None and vocab_digest(self.vocab) != self.digest:
            raise HandshakeMismatch("vocab list does not match its digest")


@dataclass
class QueryLedger:
    """Thread-safe global count of sentences sent to one victim."""

    total: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def charge(self, n: int) -> None:
        with self._lock:
            self.total += n


class Victim:
    """Base class; subclasses implement ``_predict`` on one chunk."""

    def __init__(self, manifest: VictimManifest):
        self.manifest = manifest
        self.ledger = QueryLedger()

    @property
    def labels(self) -> tuple[str, ...]:
        return self.manifest.labels

    @property
    def num_labels(self) -> int:
        return len(self.manifest.labels)

    @property
    def vocab(self) -> frozenset[str] | None:
        return self.manifest.vocab

    def predict_batch(self, texts, context=None) -> np.ndarray:
        """Probabilities for each text, chunked to the victim's batch limit.

        ``context`` carries one unperturbed companion string per text (or
        None).  Every call charges the ledger one query per sentence.
        """
        n = len(texts)
        if context is not None and len(context) != n:
            raise LabelMismatch(f"{len(context)} context rows for {n} texts")
        self.ledger.charge(n)
        out = np.empty((n, self.num_labels), dtype=np.float64)
        step = self.manifest.max_batch
        for i in range(0, n, step):
            chunk_ctx = None if context is None else context[i : i + step]
            probs = self._predict(list(texts[i : i + step]), chunk_ctx)
            probs = np.asarray(probs, dtype=np.float64)
            if probs.shape != (len(texts[i : i + step]), self.num_labels):
                raise LabelMismatch(
                    f"victim returned shape {probs.shape}, expected ({len(texts[i:i + step])}, {self.num_labels})"
                )
            out[i : i + len(probs)] = probs
        return out

    def predict_tokens(self, token_lists, context=None) -> np.ndarray:
        return self.predict_batch([" ".join(t) for t in token_lists], context)

    def _predict(self, texts: list[str], context) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BagOfWordsVictim(Victim):
    """Linear bag-of-words scorer with a softmax head.

    Scores are additive over whitespace tokens (case-insensitive, unknown
    words score zero); an optional context string contributes its own token
    sums to the same row.
    """

    def __init__(self, labels, weights: dict, bias=None, max_batch: int = DEFAULT_MAX_BATCH):
        labels = tuple(labels)
        vocab = sorted({w.lower() for w in weights})
        if len(vocab) != len(weights):
            raise ConfigError("bag-of-words weights collide after lowercasing")
        self._ids = {w: i + 1 for i, w in enumerate(vocab)}
        # row 0 is the shared out-of-vocabulary (zero) row
        self._weights = np.zeros((len(vocab) + 1, len(labels)), dtype=np.float64)
        for w, row in weights.items():
            if len(row) != len(labels):
                raise ConfigError(f"weight row for {w!r} has {len(row)} entries, need {len(labels)}")
            self._weights[self._ids[w.lower()]] = row
        self._bias = np.zeros(len(labels), dtype=np.float64)
        if bias is not None:
            if len(bias) != len(labels):
                raise ConfigError(f"bias has {len(bias)} entries, need {len(labels)}")
            self._bias = np.asarray(bias, dtype=np.float64)
        manifest = VictimManifest(
            labels=labels,
            max_batch=max_batch,
            vocab=frozenset(vocab),
            digest=vocab_digest(vocab),
        )
        super().__init__(manifest)

    def _text_ids(self, texts: list[str]) -> np.ndarray:
        toks = [t.split() for t in texts]
        width = max((len(t) for t in toks), default=0)
        ids = np.zeros((len(texts), width), dtype=np.int64)
        get = self._ids.get
        for i, words in enumerate(toks):
            for j, w in enumerate(words):
                ids[i, j] = get(w.lower(), 0)
        return ids

    def _predict(self, texts: list[str], context) -> np.ndarray:
        scores = kernels.score_tokens(self._text_ids(texts), self._weights) + self._bias
        if context is not None:
            ctx = ["" if c is None else c for c in context]
            scores = scores + kernels.score_tokens(self._text_ids(ctx), self._weights)
        return softmax(scores)


def builtin_bow(path) -> BagOfWordsVictim:
    """Load a bag-of-words victim from its JSON weights file."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read victim weights {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"victim weights {path} is not valid JSON: {exc.msg}") from None
    for key in ("labels", "weights"):
        if key not in obj:
            raise ConfigError(f"victim weights {path} is missing {key!r}")
    return BagOfWordsVictim(
        labels=obj["labels"],
        weights=obj["weights"],
        bias=obj.get("bias"),
        max_batch=obj.get("max_batch", DEFAULT_MAX_BATCH),
    )


# ------------------------------------------------------------ transports ----


class StdioTransport:
    """One JSON request per line to a subprocess, one JSON reply per line."""

    def __init__(self, command: str, timeout: float = 30.0):
        self.timeout = timeout
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise ConnectFailed(f"cannot start victim process: {exc}") from None
        self._buf = bytearray()
        # one in-flight request at a time; replies carry no ids
        self._lock = threading.Lock()

    def request(self, obj: dict) -> dict:
        with self._lock:
            proc = self._proc
            if proc.poll() is not None:
                raise ConnectFailed(f"victim process exited with status {proc.returncode}")
            try:
                proc.stdin.write((json.dumps(obj) + "\n").encode("utf-8"))
                proc.stdin.flush()
            except (BrokenPipeError, OSError):
                raise ConnectFailed("victim process closed its input pipe") from None
            line = self._read_line()
        try:
            return json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolError(f"victim sent invalid JSON: {line[:200]!r}") from None

    def _read_line(self) -> bytes:
        deadline = time.monotonic() + self.timeout
        fd = self._proc.stdout.fileno()
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line = bytes(self._buf[:nl])
                del self._buf[: nl + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise Timeout(f"victim sent no reply within {self.timeout}s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise Timeout(f"victim sent no reply within {self.timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ConnectFailed("victim process closed its output pipe")
            self._buf.extend(chunk)

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()


class HttpTransport:
    """POSTs each request to ``<base>/v1/<op>``."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        import requests

        self._requests = requests
        self.base = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        # requests.Session is not guaranteed thread-safe
        self._lock = threading.Lock()

    def request(self, obj: dict) -> dict:
        op = obj["op"]
        body = {k: v for k, v in obj.items() if k != "op"}
        try:
            with self._lock:
                resp = self._session.post(f"{self.base}/v1/{op}", json=body, timeout=self.timeout)
        except self._requests.Timeout:
            raise Timeout(f"victim at {self.base} sent no reply within {self.timeout}s") from None
        except self._requests.ConnectionError as exc:
            raise ConnectFailed(f"cannot reach victim at {self.base}: {exc}") from None
        if resp.status_code != 200:
            raise ProtocolError(f"victim returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError:
            raise ProtocolError(f"victim sent invalid JSON: {resp.text[:200]!r}") from None

    def close(self) -> None:
        self._session.close()


class RemoteVictim(Victim):
    """Client for the line-JSON / HTTP wire protocol.

    Handshake: ``{"op": "manifest"}`` must answer with ``labels``,
    ``max_batch`` and ``vocab_digest`` (a ``vocab`` list is optional and
    enables out-of-vocabulary filtering).  Prediction replies carry ``probs``
    rows that may be off normalization by at most ``1e-3``; rows are
    renormalized on receipt.
    """

    def __init__(self, transport):
        self._transport = transport
        reply = self._roundtrip({"op": "manifest"})
        for key in ("labels", "max_batch", "vocab_digest"):
            if key not in reply:
                raise HandshakeMismatch(f"manifest reply is missing {key!r}")
        vocab = reply.get("vocab")
        manifest = VictimManifest(
            labels=tuple(reply["labels"]),
            max_batch=int(reply["max_batch"]),
            vocab=None if vocab is None else frozenset(w.lower() for w in vocab),
            digest=reply["vocab_digest"],
        )
        super().__init__(manifest)

    def _roundtrip(self, obj: dict) -> dict:
        reply = self._transport.request(obj)
        if not isinstance(reply, dict):
            raise ProtocolError(f"victim reply is not an object: {reply!r}")
        if "error" in reply:
            raise ProtocolError(f"victim refused {obj.get('op')}: {reply['error']}")
        return reply

    def _predict(self, texts: list[str], context) -> np.ndarray:
        req = {"op": "predict", "texts": texts}
        if context is not None:
            req["context"] = list(context)
        reply = self._roundtrip(req)
        if "probs" not in reply:
            raise ProtocolError("predict reply is missing 'probs'")
        try:
            probs = np.asarray(reply["probs"], dtype=np.float64)
        except (TypeError, ValueError):
            raise ProtocolError("predict reply 'probs' is not a rectangular numeric matrix") from None
        if probs.ndim != 2 or probs.shape[0] != len(texts):
            raise ProtocolError(f"predict reply has shape {probs.shape}, expected ({len(texts)}, ...)")
        if np.any(probs < 0.0):
            raise ProtocolError("predict reply contains negative probabilities")
        sums = probs.sum(axis=1)
        dev = np.abs(sums - 1.0)
        worst = float(dev.max(initial=0.0))
        if worst > RENORM_REJECT:
            raise ProtocolError(f"probability rows sum off by {worst:.2e}, limit {RENORM_REJECT:.0e}")
        if worst > RENORM_WARN:
            logger.warning("renormalizing victim probabilities off by %.2e", worst)
            return probs / sums[:, np.newaxis]
        # float-transport noise passes through untouched so that a remote
        # victim serving the same model stays bit-identical to the local one
        return probs

    def close(self) -> None:
        self._transport.close()


def load_victim(spec: str, timeout: float = 30.0) -> Victim:
    """Build a victim from a locator string.

    ``builtin:bow:<path>`` (or a bare path) loads bag-of-words weights,
    ``exec:<command>`` starts a subprocess speaking line JSON on stdio, and
    ``http(s)://...`` talks to an HTTP server.
    """
    if spec.startswith("builtin:"):
        rest = spec[len("builtin:") :]
        kind, sep, path = rest.partition(":")
        if kind != "bow" or not sep or not path:
            raise ConfigError(f"unknown builtin victim {spec!r}; expected builtin:bow:<path>")
        spec = path
    elif spec.startswith("exec:"):
        command = spec[len("exec:") :].strip()
        if not command:
            raise ConfigError("empty command in exec: victim locator")
        return RemoteVictim(StdioTransport(command, timeout=timeout))
    elif spec.startswith(("http://", "https://")):
        return RemoteVictim(HttpTransport(spec, timeout=timeout))
    if not Path(spec).exists():
        raise ConfigError(f"victim weights file not found: {spec}")
    return builtin_bow(spec)
