"""Binary approval classification over summaries via a pluggable classifier."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

from .corpus import Label
from .summarize import Summary

DECISION_THRESHOLD = 0.5


class TextClassifier(Protocol):
    def fit(self, pairs: Sequence[tuple], config=None): ...
    def predict_proba(self, text: str) -> float: ...


@dataclass(frozen=True)
class Prediction:
    name: str
    probability: float
    label: Label
    summary: Summary


def train(classifier: TextClassifier, labeled_summaries: Sequence[tuple], config=None) -> TextClassifier:
    """Fit the classifier on (Summary, label) pairs; labels are 1 for approved
    and 0 for terminated. Both classes must be present."""
    if not labeled_summaries:
        raise ValueError("training set is empty")
    labels = {int(y) for _, y in labeled_summaries}
    if len(labels) < 2:
        raise ValueError("training set must contain both classes")
    pairs = [(s.text, int(y)) for s, y in labeled_summaries]
    classifier.fit(pairs, config)
    return classifier


def predict(classifier: TextClassifier, summary: Summary,
            threshold: float = DECISION_THRESHOLD) -> Prediction:
    """Probability of approval with the thresholded label; probability equal
    to the threshold counts as approved."""
    if not summary.text.strip():
        raise ValueError("cannot classify an empty summary")
    probability = float(classifier.predict_proba(summary.text))
    label = Label.APPROVED if probability >= threshold else Label.TERMINATED
    return Prediction(
        name=summary.intervention,
        probability=probability,
        label=label,
        summary=summary,
    )
