"""Labeled intervention records: construction, labeling, phase-4 exclusion,
stats, and line-delimited persistence.

An intervention is approved when at least one of its studies reaches Phase 4,
terminated when no study reaches Phase 4 but at least one was terminated, and
unlabeled otherwise. Unlabeled records are persisted but excluded from
experiments.
"""

from __future__ import annotations

import difflib
import json
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from pathlib import Path

from .errors import ParseError
from .ingest import Article, CTStudy, Phase, StudyStatus, StudyType

log = logging.getLogger(__name__)

_WHITESPACE = re.compile(r"\s+")
_TRAILING_PARENTHETICAL = re.compile(r"\s*\(([^()]*)\)\s*$")

_PHASE_CANON = [Phase.EARLY_PHASE1, Phase.PHASE1, Phase.PHASE2, Phase.PHASE3,
                Phase.PHASE4, Phase.NOT_APPLICABLE]


class Label(str, Enum):
    APPROVED = "Approved"
    TERMINATED = "Terminated"
    UNLABELED = "Unlabeled"


@dataclass
class Intervention:
    name: str
    raw_names: list
    studies: list
    articles: list  # sorted by (pub_date, pmid)
    label: Label = Label.UNLABELED
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorpusStats:
    interventions: dict
    articles: dict
    avg_articles: dict
    total_interventions: int
    total_articles: int
    avg_articles_overall: float

    def to_dict(self) -> dict:
        return {
            "interventions": {k.value: v for k, v in self.interventions.items()},
            "articles": {k.value: v for k, v in self.articles.items()},
            "avg_articles": {k.value: v for k, v in self.avg_articles.items()},
            "total_interventions": self.total_interventions,
            "total_articles": self.total_articles,
            "avg_articles_overall": self.avg_articles_overall,
        }

    def table(self) -> str:
        lines = [f"{'label':<12} {'interventions':>13} {'articles':>9} {'avg':>7}"]
        for label in (Label.APPROVED, Label.TERMINATED, Label.UNLABELED):
            if self.interventions.get(label, 0) == 0 and label is Label.UNLABELED:
                continue
            lines.append(
                f"{label.value:<12} {self.interventions.get(label, 0):>13}"
                f" {self.articles.get(label, 0):>9} {self.avg_articles.get(label, 0.0):>7.1f}"
            )
        lines.append(
            f"{'total':<12} {self.total_interventions:>13}"
            f" {self.total_articles:>9} {self.avg_articles_overall:>7.1f}"
        )
        return "\n".join(lines)


def normalize_name(raw: str) -> str:
    """Conservative name normalization: casefold, trim, collapse whitespace,
    and strip one trailing parenthetical when it looks like a dosage."""
    name = _WHITESPACE.sub(" ", raw.strip()).casefold()
    match = _TRAILING_PARENTHETICAL.search(name)
    if match and any(ch.isdigit() for ch in match.group(1)):
        name = name[: match.start()].rstrip()
    return name


def _article_sort_key(article: Article):
    return (article.pub_date, int(article.pmid))


def build_intervention_records(
    studies: Sequence[CTStudy],
    articles: Mapping[str, Article],
) -> list:
    """One record per normalized intervention name. Articles are pooled over
    the record's studies, deduplicated, and date-sorted; PMIDs missing from
    the article map are logged and skipped. Labels are assigned."""
    by_name: dict = {}
    for study in studies:
        for raw in study.intervention_names:
            name = normalize_name(raw)
            if not name:
                continue
            rec = by_name.setdefault(name, {"raw": [], "studies": [], "ncts": set()})
            if raw not in rec["raw"]:
                rec["raw"].append(raw)
            if study.nct_id not in rec["ncts"]:
                rec["ncts"].add(study.nct_id)
                rec["studies"].append(study)

    records = []
    for name in sorted(by_name):
        rec = by_name[name]
        seen_pmids = set()
        pooled = []
        for study in rec["studies"]:
            for pmid in study.linked_pmids:
                if pmid in seen_pmids:
                    continue
                seen_pmids.add(pmid)
                article = articles.get(pmid)
                if article is None:
                    log.info("article %s for %r not in article map; skipped", pmid, name)
                    continue
                pooled.append(article)
        pooled.sort(key=_article_sort_key)
        if not pooled:
            log.info("intervention %r has no linked articles", name)
        intervention = Intervention(
            name=name,
            raw_names=sorted(rec["raw"]),
            studies=sorted(rec["studies"], key=lambda s: s.nct_id),
            articles=pooled,
        )
        intervention.label = assign_label(intervention)
        records.append(intervention)

    _log_near_duplicates([r.name for r in records])
    return records


def _log_near_duplicates(names: Sequence[str], threshold: float = 0.92) -> None:
    # Adjacent comparison after sorting keeps this linear; it only feeds a log.
    ordered = sorted(names)
    for a, b in zip(ordered, ordered[1:]):
        if difflib.SequenceMatcher(None, a, b).ratio() >= threshold:
            log.info("possible unmerged duplicates: %r / %r", a, b)


def assign_label(intervention: Intervention) -> Label:
    """Phase-4 presence wins over termination; neither leaves it unlabeled."""
    if not intervention.studies:
        raise ValueError(f"intervention {intervention.name!r} has no studies")
    if any(Phase.PHASE4 in s.phases for s in intervention.studies):
        return Label.APPROVED
    if any(s.status is StudyStatus.TERMINATED for s in intervention.studies):
        return Label.TERMINATED
    return Label.UNLABELED


def _linking_studies(intervention: Intervention, pmid: str) -> list:
    return [s for s in intervention.studies if pmid in s.linked_pmids]


def exclude_phase4_data(intervention: Intervention, aggressive: bool = False) -> Intervention:
    """Copy with post-approval data removed from the article list.

    By default an article is dropped only when every study linking it has
    Phase 4; aggressive mode drops any article linked to a Phase-4 study.
    The label is unchanged.
    """
    kept = []
    for article in intervention.articles:
        linking = _linking_studies(intervention, article.pmid)
        if linking:
            p4 = [Phase.PHASE4 in s.phases for s in linking]
            if (aggressive and any(p4)) or (not aggressive and all(p4)):
                continue
        kept.append(article)
    return replace(intervention, articles=kept, raw_names=list(intervention.raw_names),
                   studies=list(intervention.studies), extra=dict(intervention.extra))


def corpus_stats(corpus: Sequence[Intervention]) -> CorpusStats:
    """Per-label intervention/article counts and averages."""
    n_int = {label: 0 for label in Label}
    n_art = {label: 0 for label in Label}
    for i in corpus:
        n_int[i.label] += 1
        n_art[i.label] += len(i.articles)
    avg = {
        label: (n_art[label] / n_int[label]) if n_int[label] else 0.0
        for label in Label
    }
    total_i = sum(n_int.values())
    total_a = sum(n_art.values())
    return CorpusStats(
        interventions=n_int,
        articles=n_art,
        avg_articles=avg,
        total_interventions=total_i,
        total_articles=total_a,
        avg_articles_overall=(total_a / total_i) if total_i else 0.0,
    )


# ---------------------------------------------------------------------------
# Persistence: one JSON record per line, unknown fields preserved
# ---------------------------------------------------------------------------

_STUDY_FIELDS = {"nct_id", "phases", "status", "study_type", "intervention_names", "linked_pmids"}
_ARTICLE_FIELDS = {"pmid", "pub_date", "title", "abstract"}
_RECORD_FIELDS = {"name", "raw_names", "label", "studies", "articles"}


def _study_to_dict(study: CTStudy) -> dict:
    out = {
        "nct_id": study.nct_id,
        "phases": [p.value for p in _PHASE_CANON if p in study.phases],
        "status": study.status.value,
        "study_type": study.study_type.value,
        "intervention_names": list(study.intervention_names),
        "linked_pmids": list(study.linked_pmids),
    }
    out.update(study.extra)
    return out


def _study_from_dict(data: dict) -> CTStudy:
    return CTStudy(
        nct_id=data["nct_id"],
        phases=frozenset(Phase(p) for p in data.get("phases", [])) or frozenset({Phase.NOT_APPLICABLE}),
        status=StudyStatus(data.get("status", "Other")),
        intervention_names=tuple(data.get("intervention_names", [])),
        linked_pmids=tuple(data.get("linked_pmids", [])),
        study_type=StudyType(data.get("study_type", "Interventional")),
        extra={k: v for k, v in data.items() if k not in _STUDY_FIELDS},
    )


def _article_to_dict(article: Article) -> dict:
    out = {
        "pmid": article.pmid,
        "pub_date": article.pub_date.isoformat(),
        "title": article.title,
        "abstract": article.abstract,
    }
    out.update(article.extra)
    return out


def _article_from_dict(data: dict) -> Article:
    return Article(
        pmid=data["pmid"],
        pub_date=date.fromisoformat(data["pub_date"]),
        title=data.get("title", ""),
        abstract=data.get("abstract", ""),
        extra={k: v for k, v in data.items() if k not in _ARTICLE_FIELDS},
    )


def intervention_to_dict(intervention: Intervention) -> dict:
    out = {
        "name": intervention.name,
        "raw_names": list(intervention.raw_names),
        "label": intervention.label.value,
        "studies": [_study_to_dict(s) for s in intervention.studies],
        "articles": [_article_to_dict(a) for a in intervention.articles],
    }
    out.update(intervention.extra)
    return out


def intervention_from_dict(data: dict) -> Intervention:
    articles = sorted((_article_from_dict(a) for a in data.get("articles", [])),
                      key=_article_sort_key)
    return Intervention(
        name=data["name"],
        raw_names=list(data.get("raw_names", [])),
        studies=[_study_from_dict(s) for s in data.get("studies", [])],
        articles=articles,
        label=Label(data.get("label", "Unlabeled")),
        extra={k: v for k, v in data.items() if k not in _RECORD_FIELDS},
    )


def save_corpus(corpus: Iterable[Intervention], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for intervention in corpus:
            fh.write(json.dumps(intervention_to_dict(intervention), sort_keys=True))
            fh.write("\n")


def load_corpus(path) -> list:
    corpus = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed corpus record: {exc.msg}", line=lineno) from exc
            try:
                corpus.append(intervention_from_dict(data))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"bad corpus record: {exc}", line=lineno) from exc
    return corpus
