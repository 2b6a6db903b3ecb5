"""Per-intervention summaries under a hard word budget.

Evidence sentences are ordered chronologically; the extractive path composes
the top-k by score, the abstractive path chunks the concatenated evidence to
the generator's input budget and iteratively re-summarizes until the word
budget is met. Two baselines use one (most recent) or n randomly chosen
articles.
"""

from __future__ import annotations

import json
import logging
import random
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from .corpus import Intervention
from .errors import GenerationError, NoArticlesError, NoEvidenceError, ParseError
from .evidence import EvidenceScorer, EvidenceSentence, select_evidence, split_sentences

log = logging.getLogger(__name__)

DEFAULT_WORD_BUDGET = 140
DEFAULT_CHUNK_BUDGET = 1024
DEFAULT_TOP_K = 5
DEFAULT_BASELINE_N = 3
MAX_ROUNDS = 8


class SummaryMode(str, Enum):
    EXTRACTIVE = "Extractive"
    ABSTRACTIVE = "Abstractive"
    BASELINE_SINGLE = "BaselineSingle"
    BASELINE_N = "BaselineN"


@dataclass(frozen=True)
class Summary:
    text: str
    mode: SummaryMode
    source_pmids: tuple
    word_count: int
    intervention: str = ""


@dataclass(frozen=True)
class Chunk:
    text: str
    token_count: int
    order_index: int


class SummaryGenerator(Protocol):
    def generate(self, text: str, max_words: int) -> str: ...
    def count_tokens(self, text: str) -> int: ...


class EchoGenerator:
    """Fixture generator: returns the first max_words whitespace words and
    counts whitespace tokens. Lets the whole pipeline run without a model."""

    def generate(self, text: str, max_words: int) -> str:
        return " ".join(text.split()[:max_words])

    def count_tokens(self, text: str) -> int:
        return len(text.split())


def word_count(text: str) -> int:
    return len(text.split())


def truncate_words(text: str, budget: int) -> str:
    words = text.split()
    if len(words) <= budget:
        return text
    return " ".join(words[:budget])


def order_chronologically(evidence: Sequence[EvidenceSentence]) -> list:
    """Ascending by (publication date, PMID, sentence position)."""
    return sorted(evidence, key=lambda e: (e.pub_date, int(e.pmid), e.sentence.index))


def _compose(evidence: Sequence[EvidenceSentence], mode: SummaryMode,
             budget: int, intervention: str = "") -> Summary:
    ordered = order_chronologically(evidence)
    text = truncate_words(" ".join(e.sentence.text for e in ordered), budget)
    pmids = []
    for e in ordered:
        if e.pmid not in pmids:
            pmids.append(e.pmid)
    return Summary(
        text=text,
        mode=mode,
        source_pmids=tuple(pmids),
        word_count=word_count(text),
        intervention=intervention,
    )


def extractive_summary(
    evidence: Sequence[EvidenceSentence],
    k: int = DEFAULT_TOP_K,
    budget: int = DEFAULT_WORD_BUDGET,
    intervention: str = "",
) -> Summary:
    """Top-k sentences by score (ties: more recent date, then lower PMID),
    composed chronologically and hard-truncated to the word budget."""
    if not evidence:
        raise ValueError("cannot summarize empty evidence")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(
        evidence,
        key=lambda e: (-e.score, -e.pub_date.toordinal(), int(e.pmid), e.sentence.index),
    )
    return _compose(ranked[:k], SummaryMode.EXTRACTIVE, budget, intervention)


def chunk_text(
    text: str,
    count_tokens: Callable[[str], int] | None = None,
    chunk_budget: int = DEFAULT_CHUNK_BUDGET,
) -> list:
    """Greedy left-to-right packing of whole sentences into chunks of at most
    chunk_budget tokens. A single sentence over the budget is split at token
    boundaries. Chunk order preserves input order.
    """
    if chunk_budget < 1:
        raise ValueError(f"chunk budget must be >= 1, got {chunk_budget}")
    count = count_tokens or (lambda t: len(t.split()))
    pieces: list = []
    for sentence in split_sentences(text):
        if count(sentence.text) <= chunk_budget:
            pieces.append(sentence.text)
            continue
        words = sentence.text.split()
        start = 0
        while start < len(words):
            stop = start + 1
            # Grow the slice while it still fits under the supplied counter.
            while stop < len(words) and count(" ".join(words[start : stop + 1])) <= chunk_budget:
                stop += 1
            pieces.append(" ".join(words[start:stop]))
            start = stop

    chunks = []
    current = ""
    current_count = 0
    for piece in pieces:
        candidate = f"{current} {piece}" if current else piece
        candidate_count = count(candidate)
        if current and candidate_count > chunk_budget:
            chunks.append(Chunk(text=current, token_count=current_count, order_index=len(chunks)))
            current, current_count = piece, count(piece)
        else:
            current, current_count = candidate, candidate_count
    if current:
        chunks.append(Chunk(text=current, token_count=current_count, order_index=len(chunks)))
    return chunks


def abstractive_summary(
    generator: SummaryGenerator,
    evidence: Sequence[EvidenceSentence],
    budget: int = DEFAULT_WORD_BUDGET,
    chunk_budget: int = DEFAULT_CHUNK_BUDGET,
    max_rounds: int = MAX_ROUNDS,
    intervention: str = "",
) -> Summary:
    """Chronological concatenation, chunking, per-chunk generation, and
    concatenation, repeated until the result fits the word budget (or a
    fixed point / the round cap is reached, then hard-truncated)."""
    if not evidence:
        raise ValueError("cannot summarize empty evidence")
    ordered = order_chronologically(evidence)
    text = " ".join(e.sentence.text for e in ordered)
    pmids = []
    for e in ordered:
        if e.pmid not in pmids:
            pmids.append(e.pmid)

    done = False
    for _ in range(max_rounds):
        chunks = chunk_text(text, generator.count_tokens, chunk_budget)
        outputs = []
        for chunk in chunks:
            try:
                outputs.append(generator.generate(chunk.text, budget))
            except Exception as exc:
                raise GenerationError(f"generation failed: {exc}",
                                      chunk_index=chunk.order_index) from exc
        combined = " ".join(outputs)
        if word_count(combined) <= budget:
            text = combined
            done = True
            break
        if combined == text:
            log.warning("summarization reached a fixed point above the budget; truncating")
            break
        text = combined
    if not done and word_count(text) > budget:
        log.warning("summary still over budget after %d rounds; truncating", max_rounds)
        text = truncate_words(text, budget)

    return Summary(
        text=text,
        mode=SummaryMode.ABSTRACTIVE,
        source_pmids=tuple(pmids),
        word_count=word_count(text),
        intervention=intervention,
    )


def _usable_articles(intervention: Intervention) -> list:
    return [a for a in intervention.articles if a.abstract.strip()]


def baseline_single(
    intervention: Intervention,
    scorer: EvidenceScorer,
    budget: int = DEFAULT_WORD_BUDGET,
) -> Summary:
    """One evidence sentence from the most recent usable article."""
    articles = _usable_articles(intervention)
    if not articles:
        raise NoArticlesError(f"{intervention.name!r} has no usable articles")
    latest = max(articles, key=lambda a: (a.pub_date, int(a.pmid)))
    ev = select_evidence(scorer, latest)
    return _compose([ev], SummaryMode.BASELINE_SINGLE, budget, intervention.name)


def baseline_n(
    intervention: Intervention,
    scorer: EvidenceScorer,
    n: int = DEFAULT_BASELINE_N,
    seed: int = 0,
    budget: int = DEFAULT_WORD_BUDGET,
) -> Summary:
    """Evidence sentences from n distinct articles sampled uniformly without
    replacement (all articles when fewer than n); deterministic under seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    articles = _usable_articles(intervention)
    if not articles:
        raise NoArticlesError(f"{intervention.name!r} has no usable articles")
    chosen = random.Random(seed).sample(articles, min(n, len(articles)))
    evidence = []
    for article in chosen:
        try:
            evidence.append(select_evidence(scorer, article))
        except NoEvidenceError:  # pragma: no cover - filtered above
            continue
    return _compose(evidence, SummaryMode.BASELINE_N, budget, intervention.name)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_summaries(summaries: Sequence[Summary], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in summaries:
            fh.write(json.dumps({
                "intervention": s.intervention,
                "mode": s.mode.value,
                "text": s.text,
                "word_count": s.word_count,
                "source_pmids": list(s.source_pmids),
            }, sort_keys=True))
            fh.write("\n")


def load_summaries(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                out.append(Summary(
                    text=data["text"],
                    mode=SummaryMode(data["mode"]),
                    source_pmids=tuple(data.get("source_pmids", [])),
                    word_count=data.get("word_count", word_count(data["text"])),
                    intervention=data.get("intervention", ""),
                ))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"bad summary record: {exc}", line=lineno) from exc
    return out
