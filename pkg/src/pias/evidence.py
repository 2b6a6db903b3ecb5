"""Sentence splitting, evidence scoring, and scorer training-set assembly.

Splitting is rule based: a boundary is [.?!] followed by whitespace and an
uppercase letter or digit, guarded by a biomedical abbreviation list and by
single-letter initials. Every produced sentence is a verbatim substring of
the abstract at its recorded span.
"""

from __future__ import annotations

import json
import logging
import random
from collections.abc import Sequence
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Protocol

from .errors import NoEvidenceError, ParseError, UndefinedMetricError
from .ingest import Article
from .metrics import auc, classification_report

log = logging.getLogger(__name__)

# Lowercased tokens that end with a period but do not end a sentence.
ABBREVIATIONS = {
    "e.g.", "i.e.", "i.v.", "i.m.", "i.p.", "s.c.", "p.o.", "b.i.d.", "t.i.d.",
    "q.d.", "q.o.d.", "vs.", "viz.", "al.", "ca.", "approx.", "resp.",
    "fig.", "figs.", "ref.", "refs.", "no.", "nos.", "vol.", "conf.",
    "dr.", "prof.", "mr.", "mrs.", "ms.", "st.", "jr.", "sr.",
    "min.", "max.", "mo.", "wk.", "hr.", "u.s.", "u.k.",
}

_CLOSERS = "\"')]"
_TERMINALS = ".?!"


@dataclass(frozen=True)
class Sentence:
    text: str
    span: tuple  # (start, end) character offsets into the abstract
    index: int  # position within the abstract


@dataclass(frozen=True)
class EvidenceSentence:
    sentence: Sentence
    pmid: str
    pub_date: date
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"evidence score {self.score} outside [0, 1]")


class EvidenceScorer(Protocol):
    def score_batch(self, texts: Sequence[str]) -> list: ...


def _trailing_token(text: str, end: int) -> str:
    """The word ending at end (exclusive), keeping internal periods."""
    i = end
    while i > 0 and (text[i - 1].isalnum() or text[i - 1] == "."):
        i -= 1
    return text[i:end]


def _is_boundary(text: str, i: int) -> int:
    """If a sentence boundary starts at text[i], return the index just past the
    terminal run (punctuation plus closing quotes/brackets); else return -1."""
    if text[i] not in _TERMINALS:
        return -1
    j = i
    while j < len(text) and text[j] in _TERMINALS:
        j += 1
    while j < len(text) and text[j] in _CLOSERS:
        j += 1
    # Require whitespace, then an uppercase letter or digit (possibly after an
    # opening quote/bracket).
    k = j
    while k < len(text) and text[k].isspace():
        k += 1
    if k == j:
        return j if k == len(text) else -1
    if k == len(text):
        return j
    nxt = text[k]
    if nxt in "\"'([":
        k += 1
        if k == len(text):
            return j
        nxt = text[k]
    if not (nxt.isupper() or nxt.isdigit()):
        return -1
    if text[i] == ".":
        token = _trailing_token(text, i + 1).lower()
        if token in ABBREVIATIONS:
            return -1
        # Single-letter initials ("J. Smith") and decimal fragments.
        bare = token.rstrip(".")
        if len(bare) == 1 and bare.isalpha():
            return -1
    return j


def split_sentences(abstract: str) -> list:
    """Split an abstract into verbatim sentences with non-overlapping,
    ordered character spans. Empty input yields an empty list."""
    sentences = []
    n = len(abstract)
    pos = 0
    while pos < n and abstract[pos].isspace():
        pos += 1
    start = pos
    i = pos
    while i < n:
        end = _is_boundary(abstract, i)
        if end != -1:
            text = abstract[start:end]
            if text.strip():
                sentences.append(Sentence(text=text, span=(start, end), index=len(sentences)))
            i = end
            while i < n and abstract[i].isspace():
                i += 1
            start = i
        else:
            i += 1
    if start < n:
        end = n
        while end > start and abstract[end - 1].isspace():
            end -= 1
        text = abstract[start:end]
        if text.strip():
            sentences.append(Sentence(text=text, span=(start, end), index=len(sentences)))
    return sentences


def select_evidence(scorer: EvidenceScorer, article: Article) -> EvidenceSentence:
    """Pick the highest-scoring sentence of the article's abstract; ties go to
    the earlier sentence. Abstract-less articles raise NoEvidenceError."""
    if not article.abstract.strip():
        raise NoEvidenceError(f"article {article.pmid} has no abstract")
    sentences = split_sentences(article.abstract)
    if not sentences:
        raise NoEvidenceError(f"article {article.pmid} has no sentences")
    scores = scorer.score_batch([s.text for s in sentences])
    if len(scores) != len(sentences):
        raise ValueError("scorer returned a batch of the wrong length")
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return EvidenceSentence(
        sentence=sentences[best],
        pmid=article.pmid,
        pub_date=article.pub_date,
        score=float(scores[best]),
    )


def build_training_set(
    annotations: Sequence[tuple],
    ratio: int = 4,
    seed: int = 0,
) -> list:
    """Keep all positive (sentence, is_evidence) annotations and sample
    ratio-times-as-many negatives without replacement.

    When fewer negatives are available the sample is capped with a warning.
    Deterministic under seed.
    """
    if ratio < 1:
        raise ValueError(f"negative ratio must be >= 1, got {ratio}")
    positives = [(s, True) for s, y in annotations if y]
    negatives = [s for s, y in annotations if not y]
    if not positives:
        raise ValueError("training set needs at least one positive annotation")
    wanted = ratio * len(positives)
    if wanted > len(negatives):
        log.warning(
            "only %d negatives available for %d positives (wanted %d)",
            len(negatives), len(positives), wanted,
        )
        wanted = len(negatives)
    sampled = random.Random(seed).sample(negatives, wanted)
    return positives + [(s, False) for s in sampled]


def evaluate_scorer(scorer: EvidenceScorer, test: Sequence[tuple]) -> dict:
    """Positive-class precision/recall/F1 at threshold 0.5, plus AUC."""
    if not test:
        raise ValueError("test set is empty")
    texts = [s for s, _ in test]
    labels = [1 if y else 0 for _, y in test]
    if len(set(labels)) < 2:
        raise UndefinedMetricError("AUC is undefined on a single-class test set")
    scores = scorer.score_batch(texts)
    preds = [1 if s >= 0.5 else 0 for s in scores]
    report = classification_report(preds, labels, names=("evidence", "other"))
    prf = report.per_class["evidence"]
    return {
        "precision": prf.precision,
        "recall": prf.recall,
        "f1": prf.f1,
        "auc": auc(scores, labels),
    }


def load_annotations(path) -> list:
    """Read a line-delimited annotation file with fields
    {doc_id, sentence, label} into (sentence, bool) pairs."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad annotation record: {exc.msg}", line=lineno) from exc
            try:
                pairs.append((record["sentence"], bool(record["label"])))
            except KeyError as exc:
                raise ParseError(f"annotation record missing field {exc}", line=lineno) from exc
    return pairs
