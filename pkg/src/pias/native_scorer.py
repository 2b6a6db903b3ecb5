"""Trainable text model without model-server dependencies.

TF-IDF features over lowercase alphanumeric tokens feed a logistic regression
trained with a from-scratch Adam optimizer (bias-corrected moment estimates).
The resulting model serves both as an evidence-sentence scorer and as the
approval classifier.
"""

from __future__ import annotations

import json
import math
import random
import re
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import NotTrainedError

_TOKEN_RE = re.compile(r"[a-z0-9]+")

MODEL_FORMAT = "pias-linear-v1"


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics; terms shorter than two
    characters are dropped, numeric tokens are kept."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


@dataclass
class TfidfVocabulary:
    index: dict  # term -> dense column id
    df: list  # document frequency per column id
    n_documents: int

    @classmethod
    def build(cls, texts: Sequence[str], min_df: int = 2) -> "TfidfVocabulary":
        doc_freq: Counter = Counter()
        for text in texts:
            doc_freq.update(set(tokenize(text)))
        kept = sorted(term for term, df in doc_freq.items() if df >= min_df)
        index = {term: i for i, term in enumerate(kept)}
        return cls(index=index, df=[doc_freq[t] for t in kept], n_documents=len(texts))

    def idf(self, column: int) -> float:
        return math.log((1 + self.n_documents) / (1 + self.df[column])) + 1.0

    def __len__(self) -> int:
        return len(self.index)


def featurize(vocab: TfidfVocabulary, text: str) -> dict:
    """Sparse L2-normalized tf-idf vector as {column: weight}. Out-of-vocabulary
    terms are ignored; a text with no known terms maps to the zero vector."""
    counts = Counter(tokenize(text))
    vec = {}
    for term, tf in counts.items():
        col = vocab.index.get(term)
        if col is not None:
            vec[col] = tf * vocab.idf(col)
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm > 0:
        vec = {c: w / norm for c, w in vec.items()}
    return vec


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 2e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 5
    batch_size: int = 32


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int
    config: AdamConfig

    @classmethod
    def init(cls, n_params: int, config: AdamConfig) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params), t=0, config=config)


def adam_step(state: AdamState, params: np.ndarray, gradient: np.ndarray):
    """One Adam update with bias correction:

        m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
        m^ = m/(1-b1^t)             v^ = v/(1-b2^t)
        theta <- theta - lr * m^ / (sqrt(v^) + eps)

    Returns the new (state, params); inputs are not mutated.
    """
    if params.shape != gradient.shape or state.m.shape != params.shape:
        raise ValueError("parameter and gradient shapes disagree")
    if not np.all(np.isfinite(gradient)):
        raise ValueError("non-finite gradient")
    cfg = state.config
    t = state.t + 1
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * gradient
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * gradient * gradient
    m_hat = m / (1 - cfg.beta1**t)
    v_hat = v / (1 - cfg.beta2**t)
    new_params = params - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return AdamState(m=m, v=v, t=t, config=cfg), new_params


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _score(params: np.ndarray, x: dict) -> float:
    # params packs [weights..., bias]
    z = params[-1]
    for col, val in x.items():
        z += params[col] * val
    return float(z)


def logistic_loss(params: np.ndarray, data: Sequence[tuple]) -> float:
    """Mean binary cross-entropy of sparse examples (x, y) under params."""
    total = 0.0
    for x, y in data:
        z = _score(params, x)
        # softplus(z) - y*z, computed stably
        total += max(z, 0.0) + math.log1p(math.exp(-abs(z))) - y * z
    return total / len(data)


def logistic_gradient(params: np.ndarray, data: Sequence[tuple]) -> np.ndarray:
    """Mean analytic gradient of logistic_loss: (sigmoid(z) - y) * x."""
    grad = np.zeros_like(params)
    for x, y in data:
        d = _sigmoid(_score(params, x)) - y
        for col, val in x.items():
            grad[col] += d * val
        grad[-1] += d
    grad /= len(data)
    return grad


def train_logistic(
    data: Sequence[tuple],
    n_features: int,
    config: AdamConfig = AdamConfig(),
    seed: int = 0,
) -> LinearModel:
    """Mini-batch Adam training of a logistic regression on sparse examples.

    data holds (sparse vector, label in {0, 1}) pairs. Example order is
    shuffled once per epoch; the whole run is deterministic under seed.
    """
    labels = {y for _, y in data}
    if labels - {0, 1}:
        raise ValueError(f"labels must be 0/1, got {sorted(labels)}")
    if len(labels) < 2:
        raise ValueError("training data must contain both classes")

    params = np.zeros(n_features + 1)
    state = AdamState.init(n_features + 1, config)
    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.batch_size):
            batch = [data[i] for i in order[start : start + config.batch_size]]
            grad = logistic_gradient(params, batch)
            state, params = adam_step(state, params, grad)
    return LinearModel(weights=params[:-1].copy(), bias=float(params[-1]))


# ---------------------------------------------------------------------------
# User-facing model
# ---------------------------------------------------------------------------


@dataclass
class TfidfLogisticModel:
    """Implements both the evidence-scorer and text-classifier interfaces.

    Concurrency: fit() is single-threaded; a fitted model is immutable in
    practice and safe for concurrent predict_proba/score_batch calls.
    """

    config: AdamConfig = field(default_factory=AdamConfig)
    seed: int = 0
    min_df: int = 2
    vocab: TfidfVocabulary | None = None
    model: LinearModel | None = None

    def fit(self, pairs: Sequence[tuple], config: AdamConfig | None = None) -> "TfidfLogisticModel":
        """Train on (text, label) pairs with labels in {0, 1}."""
        if not pairs:
            raise ValueError("training set is empty")
        if config is not None:
            self.config = config
        texts = [t for t, _ in pairs]
        labels = [int(y) for _, y in pairs]
        if len(set(labels)) < 2:
            raise ValueError("training set must contain both classes")
        self.vocab = TfidfVocabulary.build(texts, min_df=self.min_df)
        data = [(featurize(self.vocab, t), y) for t, y in zip(texts, labels)]
        self.model = train_logistic(data, len(self.vocab), self.config, self.seed)
        return self

    def _check_trained(self):
        if self.vocab is None or self.model is None:
            raise NotTrainedError("model has not been trained or loaded")

    def predict_proba(self, text: str) -> float:
        self._check_trained()
        x = featurize(self.vocab, text)
        z = self.model.bias + sum(self.model.weights[c] * v for c, v in x.items())
        return _sigmoid(z)

    def score_batch(self, texts: Sequence[str]) -> list:
        self._check_trained()
        return [self.predict_proba(t) for t in texts]

    # -- serialization: plain JSON so reloads are exact -------------------

    def save(self, path) -> None:
        self._check_trained()
        payload = {
            "format": MODEL_FORMAT,
            "seed": self.seed,
            "min_df": self.min_df,
            "config": {
                "lr": self.config.lr,
                "beta1": self.config.beta1,
                "beta2": self.config.beta2,
                "eps": self.config.eps,
                "epochs": self.config.epochs,
                "batch_size": self.config.batch_size,
            },
            "n_documents": self.vocab.n_documents,
            "terms": [[term, self.vocab.df[col]] for term, col in sorted(self.vocab.index.items(), key=lambda kv: kv[1])],
            "weights": self.model.weights.tolist(),
            "bias": self.model.bias,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TfidfLogisticModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        config = AdamConfig(**payload["config"])
        terms = payload["terms"]
        vocab = TfidfVocabulary(
            index={term: i for i, (term, _) in enumerate(terms)},
            df=[df for _, df in terms],
            n_documents=payload["n_documents"],
        )
        model = LinearModel(weights=np.array(payload["weights"], dtype=float), bias=float(payload["bias"]))
        return cls(config=config, seed=payload["seed"], min_df=payload["min_df"], vocab=vocab, model=model)

    def with_seed(self, seed: int) -> "TfidfLogisticModel":
        return replace(self, seed=seed, vocab=None, model=None)
