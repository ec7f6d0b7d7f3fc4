"""Models the server can wrap.

Two kinds ship: a bag-of-words scorer that mirrors the attack toolkit's
built-in victim (for conformance diffing: same token ids, same accumulation
order, same softmax, so the served probabilities match bit for bit), and a
plug-point that wraps any Python callable returning label probabilities.
"""

from __future__ import annotations

import hashlib
import importlib
import json
from pathlib import Path

import numpy as np

DEFAULT_MAX_BATCH = 64


class ModelError(Exception):
    """Raised when a model spec cannot be loaded or is inconsistent."""


def vocab_digest(vocab) -> str:
    joined = "\n".join(sorted(vocab))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class BagOfWordsModel:
    """Linear bag-of-words scorer with a softmax head.

    Whitespace tokens, case-insensitive, unknown words score zero; a context
    string contributes its own token sums to the same row.
    """

    def __init__(self, labels, weights: dict, bias=None, max_batch: int = DEFAULT_MAX_BATCH):
        self.labels = tuple(str(x) for x in labels)
        if len(self.labels) < 2:
            raise ModelError("need at least 2 labels")
        vocab = sorted({w.lower() for w in weights})
        if len(vocab) != len(weights):
            raise ModelError("bag-of-words weights collide after lowercasing")
        self.vocab = vocab
        self.max_batch = int(max_batch)
        if self.max_batch < 1:
            raise ModelError("max_batch must be at least 1")
        self._ids = {w: i + 1 for i, w in enumerate(vocab)}
        # row 0 is the shared out-of-vocabulary (zero) row
        self._weights = np.zeros((len(vocab) + 1, len(self.labels)), dtype=np.float64)
        for w, row in weights.items():
            if len(row) != len(self.labels):
                raise ModelError(f"weight row for {w!r} has {len(row)} entries, need {len(self.labels)}")
            self._weights[self._ids[w.lower()]] = row
        self._bias = np.zeros(len(self.labels), dtype=np.float64)
        if bias is not None:
            if len(bias) != len(self.labels):
                raise ModelError(f"bias has {len(bias)} entries, need {len(self.labels)}")
            self._bias = np.asarray(bias, dtype=np.float64)

    def _scores(self, texts: list[str]) -> np.ndarray:
        toks = [t.split() for t in texts]
        width = max((len(t) for t in toks), default=0)
        ids = np.zeros((len(texts), width), dtype=np.int64)
        get = self._ids.get
        for i, words in enumerate(toks):
            for j, w in enumerate(words):
                ids[i, j] = get(w.lower(), 0)
        out = np.zeros((len(texts), len(self.labels)), dtype=np.float64)
        # accumulate position by position, matching the client's built-in scorer
        for j in range(width):
            out += self._weights[ids[:, j]]
        return out

    def predict(self, texts: list[str], context=None) -> np.ndarray:
        scores = self._scores(texts) + self._bias
        if context is not None:
            ctx = ["" if c is None else c for c in context]
            scores = scores + self._scores(ctx)
        return softmax(scores)


class CallableModel:
    """Plug-point around any callable mapping texts to probability rows.

    The callable must expose ordered label names via a ``labels`` attribute
    (or they must be supplied explicitly), and may accept a ``context``
    keyword. It is probed once at load time so a labels/output-width mismatch
    fails at startup rather than mid-attack.
    """

    def __init__(self, fn, labels=None, max_batch: int = DEFAULT_MAX_BATCH):
        self.fn = fn
        labels = labels if labels is not None else getattr(fn, "labels", None)
        if labels is None:
            raise ModelError("callable model declares no labels")
        self.labels = tuple(str(x) for x in labels)
        if len(self.labels) < 2:
            raise ModelError("need at least 2 labels")
        self.max_batch = int(max_batch)
        self.vocab = None
        probe = self.predict(["probe"])
        if probe.shape != (1, len(self.labels)):
            raise ModelError(
                f"callable returns {probe.shape[1]} probabilities per text, "
                f"but {len(self.labels)} labels are declared")

    def predict(self, texts: list[str], context=None) -> np.ndarray:
        try:
            rows = self.fn(list(texts), context=context)
        except TypeError:
            rows = self.fn(list(texts))
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] != len(texts):
            raise ModelError(f"callable returned shape {rows.shape} for {len(texts)} texts")
        return rows


def load_model(spec: str):
    """``bow:<weights.json>`` or ``py:<module>:<attribute>``."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ModelError(f"bad model spec {spec!r}; expected bow:<file> or py:<module>:<attr>")
    if kind == "bow":
        try:
            obj = json.loads(Path(rest).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ModelError(f"cannot read weights {rest}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ModelError(f"weights {rest} is not valid JSON: {exc.msg}") from None
        for key in ("labels", "weights"):
            if key not in obj:
                raise ModelError(f"weights {rest} is missing {key!r}")
        return BagOfWordsModel(
            labels=obj["labels"],
            weights=obj["weights"],
            bias=obj.get("bias"),
            max_batch=obj.get("max_batch", DEFAULT_MAX_BATCH),
        )
    if kind == "py":
        module_name, sep, attr = rest.partition(":")
        if not sep or not attr:
            raise ModelError(f"bad model spec {spec!r}; expected py:<module>:<attr>")
        try:
            module = importlib.import_module(module_name)
        except ImportError as exc:
            raise ModelError(f"cannot import {module_name}: {exc}") from None
        try:
            fn = getattr(module, attr)
        except AttributeError:
            raise ModelError(f"{module_name} has no attribute {attr!r}") from None
        return CallableModel(fn)
    raise ModelError(f"unknown model kind {kind!r}; expected bow or py")
