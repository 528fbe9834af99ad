"""Per-line benign/vulnerable classifiers and their persistence.

A classifier maps a source line to (vote, score): score is the estimated
probability that the line is benign, and vote is 1 when score reaches the
decision threshold. Three kinds exist:

  - LinearLineClassifier: L2-regularized logistic regression over one
    feature view, trained deterministically (fixed seed, L-BFGS from a zero
    start), with inference in plain Python so assessment stays cheap;
  - LookupLineClassifier: votes 0 exactly for an explicit set of normalized
    lines (test stubs and pipeline plumbing checks);
  - AdapterLineClassifier: delegates to an external process speaking a
    line-delimited JSON protocol (one {"id","text"} request per line, one
    {"id","score"} response, 5 s timeout).

Models persist as versioned JSON documents; bytes are identical across runs
with the same inputs and seed.
"""

from __future__ import annotations

import json
import math
import os
import queue
import random
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import (
    AdapterError,
    DegenerateTrainingError,
    SchemaError,
    UndefinedInputError,
)
from ..frontend.lexer import normalize_line
from ..pdg import SCHEMA_VERSION, check_schema_version, dumps_canonical
from .dataset import LineLabel, LineSample
from .features import FeatureView, extract_features, vectorize

ADAPTER_ENV_VAR = "TRUSTVET_ADAPTER"
ADAPTER_TIMEOUT = 5.0


def _require_text(text: str) -> str:
    normalized = normalize_line(text)
    if not normalized:
        raise UndefinedInputError("cannot classify an empty or comment-only line")
    return normalized


@dataclass
class TrainConfig:
    seed: int = 0
    l2: float = 1e-2
    max_iter: int = 200
    threshold: float = 0.5
    heldout_fraction: float = 0.10


@dataclass
class LinearLineClassifier:
    view: FeatureView
    vocabulary: dict[str, int]
    weights: list[float]
    bias: float
    threshold: float = 0.5
    seed: int = 0
    heldout_accuracy: float | None = None

    def score(self, text: str) -> float:
        normalized = _require_text(text)
        vec = vectorize(self.view, normalized, self.vocabulary)
        z = self.bias
        for idx, value in vec.indices.items():
            z += self.weights[idx] * value
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)

    def classify(self, text: str) -> tuple[int, float]:
        s = self.score(text)
        return (1 if s >= self.threshold else 0), s


@dataclass
class LookupLineClassifier:
    """Votes 0 (not benign) exactly for the listed normalized lines."""

    non_benign: frozenset[str]
    threshold: float = 0.5

    def classify(self, text: str) -> tuple[int, float]:
        normalized = _require_text(text)
        score = 0.0 if normalized in self.non_benign else 1.0
        return (1 if score >= self.threshold else 0), score


class AdapterLineClassifier:
    """Bridge to an external classifier process.

    The child is spawned lazily and kept alive; each classify() writes one
    request line and waits up to `timeout` seconds for the matching response.
    Calls are serialized with a lock, so sharing an instance across worker
    threads is safe.
    """

    def __init__(self, command: Sequence[str], threshold: float = 0.5, timeout: float = ADAPTER_TIMEOUT):
        if not command:
            raise AdapterError("adapter command is empty")
        self.command = tuple(command)
        self.threshold = threshold
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_started(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterError(f"cannot start adapter {self.command!r}: {exc}") from None

        def pump(proc: subprocess.Popen, out: queue.Queue) -> None:
            assert proc.stdout is not None
            for line in proc.stdout:
                out.put(line)
            out.put(None)

        threading.Thread(target=pump, args=(self._proc, self._queue), daemon=True).start()

    def classify(self, text: str) -> tuple[int, float]:
        normalized = _require_text(text)
        with self._lock:
            self._ensure_started()
            assert self._proc is not None and self._proc.stdin is not None
            self._next_id += 1
            request_id = self._next_id
            try:
                self._proc.stdin.write(
                    json.dumps({"id": request_id, "text": normalized}) + "\n"
                )
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise AdapterError(f"adapter pipe failed: {exc}") from None
            try:
                raw = self._queue.get(timeout=self.timeout)
            except queue.Empty:
                raise AdapterError(
                    f"adapter did not answer within {self.timeout} s"
                ) from None
            if raw is None:
                raise AdapterError("adapter closed its output stream")
            try:
                doc = json.loads(raw)
                response_id = doc["id"]
                score = float(doc["score"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise AdapterError("adapter response is not {id, score}", raw=raw) from None
            if response_id != request_id:
                raise AdapterError(
                    f"adapter answered request {response_id}, expected {request_id}", raw=raw
                )
            if not (0.0 <= score <= 1.0) or not math.isfinite(score):
                raise AdapterError(f"adapter score {score!r} outside [0, 1]", raw=raw)
        return (1 if score >= self.threshold else 0), score

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=1.0)
            except subprocess.TimeoutExpired:  # pragma: no cover - defensive
                self._proc.kill()


LineClassifier = LinearLineClassifier | LookupLineClassifier | AdapterLineClassifier


# --- training ------------------------------------------------------------------


def train_classifier(
    samples: Sequence[LineSample], view: FeatureView, hyper: TrainConfig | None = None
) -> LinearLineClassifier:
    """Fit one view's logistic classifier.

    Label 1 means non-vulnerable (benign). The split, the vocabulary order,
    and the optimizer are all deterministic functions of the inputs and the
    seed, so retraining reproduces the model byte for byte.
    """
    import numpy as np
    from scipy.optimize import minimize
    from scipy.special import expit

    hyper = hyper or TrainConfig()
    labeled = [(s, 1.0 if s.label is LineLabel.NON_VULNERABLE else 0.0) for s in samples]
    if not labeled or len({y for _, y in labeled}) < 2:
        raise DegenerateTrainingError(
            f"view {view.value}: training needs both classes, got "
            f"{sorted({s.label.value for s in samples})}"
        )

    # deterministic stratified held-out split
    rng = random.Random(hyper.seed)
    by_class: dict[float, list[int]] = {0.0: [], 1.0: []}
    for idx, (_, y) in enumerate(labeled):
        by_class[y].append(idx)
    heldout: set[int] = set()
    for y, idxs in sorted(by_class.items()):
        shuffled = idxs[:]
        rng.shuffle(shuffled)
        k = int(len(shuffled) * hyper.heldout_fraction)
        heldout.update(shuffled[:k])
    train_idx = [i for i in range(len(labeled)) if i not in heldout]
    if not train_idx or len({labeled[i][1] for i in train_idx}) < 2:
        train_idx = list(range(len(labeled)))  # tiny dataset: train on everything
        heldout = set()

    vocab_names = sorted(
        {name for i in train_idx for name in extract_features(view, labeled[i][0].text)}
    )
    vocabulary = {name: idx for idx, name in enumerate(vocab_names)}

    def densify(indices: Sequence[int]) -> tuple:
        X = np.zeros((len(indices), len(vocabulary)), dtype=float)
        y = np.zeros(len(indices), dtype=float)
        for row, i in enumerate(indices):
            sample, label = labeled[i]
            vec = vectorize(view, sample.text, vocabulary)
            for col, value in vec.indices.items():
                X[row, col] = value
            y[row] = label
        return X, y

    X, y = densify(train_idx)

    def loss_grad(w_full):
        w = w_full[:-1]
        b = w_full[-1]
        z = X @ w + b
        # stable log(1 + exp(-|z|)) formulation
        log_p = -np.logaddexp(0.0, -z)
        log_q = -np.logaddexp(0.0, z)
        nll = -(y * log_p + (1.0 - y) * log_q).mean()
        p = expit(z)
        residual = (p - y) / len(y)
        grad_w = X.T @ residual + 2.0 * hyper.l2 * w
        grad_b = residual.sum()
        value = nll + hyper.l2 * float(w @ w)
        return value, np.concatenate([grad_w, [grad_b]])

    x0 = np.zeros(len(vocabulary) + 1)
    result = minimize(
        loss_grad, x0, jac=True, method="L-BFGS-B", options={"maxiter": hyper.max_iter}
    )
    w_full = result.x
    clf = LinearLineClassifier(
        view=view,
        vocabulary=vocabulary,
        weights=[float(v) for v in w_full[:-1]],
        bias=float(w_full[-1]),
        threshold=hyper.threshold,
        seed=hyper.seed,
    )
    if heldout:
        hits = sum(
            1
            for i in sorted(heldout)
            if clf.classify(labeled[i][0].text)[0] == int(labeled[i][1])
        )
        clf.heldout_accuracy = hits / len(heldout)
    return clf


def training_accuracy(clf: LinearLineClassifier, samples: Sequence[LineSample]) -> float:
    hits = sum(
        1
        for s in samples
        if clf.classify(s.text)[0] == (1 if s.label is LineLabel.NON_VULNERABLE else 0)
    )
    return hits / len(samples)


# --- persistence ----------------------------------------------------------------


def save_model(clf: LineClassifier, path: str | Path) -> None:
    if isinstance(clf, LinearLineClassifier):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "view": clf.view.value,
            "vocabulary": clf.vocabulary,
            "weights": clf.weights,
            "bias": clf.bias,
            "threshold": clf.threshold,
            "seed": clf.seed,
            "heldout_accuracy": clf.heldout_accuracy,
        }
    elif isinstance(clf, LookupLineClassifier):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "view": "lookup",
            "non_benign": sorted(clf.non_benign),
            "threshold": clf.threshold,
        }
    elif isinstance(clf, AdapterLineClassifier):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "view": "adapter",
            "command": list(clf.command),
            "threshold": clf.threshold,
            "timeout": clf.timeout,
        }
    else:  # pragma: no cover - defensive
        raise SchemaError(f"cannot persist classifier of type {type(clf).__name__}")
    Path(path).write_text(dumps_canonical(doc), encoding="utf-8")


def load_model(path: str | Path, adapter_command: str | None = None) -> LineClassifier:
    """Load one persisted classifier.

    For adapter models the spawned command can be redirected without touching
    the file: the TRUSTVET_ADAPTER environment variable wins, then the
    adapter_command argument (the config's adapter_endpoint), then the
    command stored in the document.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    check_schema_version(doc, str(path))
    view = doc.get("view")
    try:
        if view == "lookup":
            return LookupLineClassifier(
                non_benign=frozenset(doc["non_benign"]), threshold=doc["threshold"]
            )
        if view == "adapter":
            override = os.environ.get(ADAPTER_ENV_VAR) or adapter_command
            command = override.split() if override else doc["command"]
            return AdapterLineClassifier(
                command, threshold=doc["threshold"], timeout=doc.get("timeout", ADAPTER_TIMEOUT)
            )
        return LinearLineClassifier(
            view=FeatureView(view),
            vocabulary=dict(doc["vocabulary"]),
            weights=[float(v) for v in doc["weights"]],
            bias=float(doc["bias"]),
            threshold=float(doc["threshold"]),
            seed=int(doc["seed"]),
            heldout_accuracy=doc.get("heldout_accuracy"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model document ({exc})") from None
