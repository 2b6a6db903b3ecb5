"""Reference metrics: ROUGE-1/2/L, rank-based AUC, and binary classification reports.

ROUGE preprocessing is deliberately plain: lowercase, alphanumeric word tokens,
no stemming and no stopword removal.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import UndefinedMetricError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class Prf:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class ClassificationReport:
    """Per-class and macro precision/recall/F1, optionally with AUC.

    macro values are the unweighted mean of the two per-class values.
    Classes absent from the true labels score zero and are listed in
    missing_classes.
    """

    per_class: dict
    macro: Prf
    auc: float | None = None
    missing_classes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "per_class": {name: prf.to_dict() for name, prf in self.per_class.items()},
            "macro": self.macro.to_dict(),
            "auc": self.auc,
            "missing_classes": list(self.missing_classes),
        }


def _f1(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> list[tuple]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(candidate: str, reference: str, n: int = 1) -> RougeScore:
    """Clipped n-gram overlap: recall against the reference, precision against
    the candidate. Empty sides yield zeros."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    cand = _ngrams(tokenize(candidate), n)
    ref = _ngrams(tokenize(reference), n)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    overlap = sum((Counter(cand) & Counter(ref)).values())
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall))


def _lcs_len(a: list[str], b: list[str]) -> int:
    # Two-row DP; O(len(a) * len(b)).
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence overlap over word tokens."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_len(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall))


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based AUC: fraction of (positive, negative) pairs ranked correctly,
    ties counting one half.

    Computed with integer pair counts so the result matches exhaustive pair
    enumeration exactly.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    n_pos = sum(1 for y in labels if y)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC is undefined with a single class")
    ordered = sorted(zip(scores, labels))
    wins = 0  # (pos, neg) pairs with score_pos > score_neg
    ties = 0  # (pos, neg) pairs with equal scores
    neg_below = 0
    i = 0
    while i < len(ordered):
        j = i
        group_pos = 0
        group_neg = 0
        while j < len(ordered) and ordered[j][0] == ordered[i][0]:
            if ordered[j][1]:
                group_pos += 1
            else:
                group_neg += 1
            j += 1
        wins += group_pos * neg_below
        ties += group_pos * group_neg
        neg_below += group_neg
        i = j
    return (2 * wins + ties) / (2 * n_pos * n_neg)


def classification_report(
    predictions: Sequence[int],
    labels: Sequence[int],
    scores: Sequence[float] | None = None,
    names: tuple = ("positive", "negative"),
) -> ClassificationReport:
    """Binary report over 0/1 predictions and labels.

    names maps (class 1, class 0). AUC is included when scores are given and
    both classes are present.
    """
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels must have equal length")
    if not labels:
        raise ValueError("cannot report on empty inputs")

    per_class = {}
    missing = []
    for cls, name in ((1, names[0]), (0, names[1])):
        tp = sum(1 for p, y in zip(predictions, labels) if p == cls and y == cls)
        fp = sum(1 for p, y in zip(predictions, labels) if p == cls and y != cls)
        fn = sum(1 for p, y in zip(predictions, labels) if p != cls and y == cls)
        if not any(y == cls for y in labels):
            missing.append(name)
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        per_class[name] = Prf(precision, recall, _f1(precision, recall))

    pos, neg = per_class[names[0]], per_class[names[1]]
    macro = Prf(
        (pos.precision + neg.precision) / 2,
        (pos.recall + neg.recall) / 2,
        (pos.f1 + neg.f1) / 2,
    )

    auc_value = None
    if scores is not None:
        try:
            auc_value = auc(scores, labels)
        except UndefinedMetricError:
            auc_value = None

    return ClassificationReport(per_class, macro, auc_value, tuple(missing))
