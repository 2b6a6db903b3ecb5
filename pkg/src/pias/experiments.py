"""Evaluation protocols: stratified k-fold for the main task, one-sentence and
n-sentence baselines, phase-transition studies over repeated 80/20 splits, and
summarization adequacy.

Folds and runs are fully determined by the experiment seed; summaries computed
for a fold's training set never see interventions from its test set, and phase
experiments only train on articles linked to the training phase.
"""

from __future__ import annotations

import hashlib
import logging
import random
import zlib
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import Enum

from .classify import Prediction, predict, train
from .corpus import Intervention, Label, exclude_phase4_data
from .errors import NoArticlesError, NoEvidenceError
from .evidence import EvidenceScorer, select_evidence
from .ingest import PHASE_ORDER, Phase
from .metrics import ClassificationReport, Prf, RougeScore, classification_report, rouge_l, rouge_n
from .native_scorer import AdamConfig, TfidfLogisticModel
from .summarize import (
    DEFAULT_BASELINE_N,
    DEFAULT_CHUNK_BUDGET,
    DEFAULT_TOP_K,
    DEFAULT_WORD_BUDGET,
    EchoGenerator,
    Summary,
    SummaryGenerator,
    abstractive_summary,
    baseline_n,
    baseline_single,
    extractive_summary,
)

log = logging.getLogger(__name__)

MODES = ("pias-ext", "pias-abs", "bs", "bn")

# Effective optimizer preset for the linear classifier at corpus scale; the
# library-level AdamConfig default mirrors transformer fine-tuning rates and
# is far too small for a model trained from zeros.
CLASSIFIER_PRESET = AdamConfig(lr=0.5, epochs=30, batch_size=32)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "pias-ext"
    folds: int = 10
    k: int = DEFAULT_TOP_K
    n: int = DEFAULT_BASELINE_N
    budget: int = DEFAULT_WORD_BUDGET
    chunk_budget: int = DEFAULT_CHUNK_BUDGET
    neg_ratio: int = 4
    train_fraction: float = 0.8
    runs: int = 10
    seed: int = 0
    threshold: float = 0.5
    min_df: int = 2
    aggressive_phase4_exclusion: bool = False
    classifier: AdamConfig = field(default_factory=lambda: CLASSIFIER_PRESET)

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train fraction must be in (0, 1), got {self.train_fraction}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode, "folds": self.folds, "k": self.k, "n": self.n,
            "budget": self.budget, "chunk_budget": self.chunk_budget,
            "neg_ratio": self.neg_ratio, "train_fraction": self.train_fraction,
            "runs": self.runs, "seed": self.seed, "threshold": self.threshold,
            "min_df": self.min_df,
            "aggressive_phase4_exclusion": self.aggressive_phase4_exclusion,
            "classifier": {
                "lr": self.classifier.lr, "beta1": self.classifier.beta1,
                "beta2": self.classifier.beta2, "eps": self.classifier.eps,
                "epochs": self.classifier.epochs, "batch_size": self.classifier.batch_size,
            },
        }
        return out


@dataclass(frozen=True)
class FoldReport:
    fold: int
    report: ClassificationReport
    predictions: tuple


@dataclass(frozen=True)
class AggregateReport:
    """Arithmetic mean of per-fold (or per-run) reports."""
    per_class: dict
    macro: Prf
    auc: float | None
    n_folds: int

    def to_dict(self) -> dict:
        return {
            "per_class": {k: v.to_dict() for k, v in self.per_class.items()},
            "macro": self.macro.to_dict(),
            "auc": self.auc,
            "n_folds": self.n_folds,
        }


@dataclass(frozen=True)
class ExperimentResult:
    experiment_id: str
    config: ExperimentConfig
    fold_reports: tuple
    aggregate: AggregateReport
    skipped: tuple  # interventions with no usable articles
    class_names: tuple = ("approved", "terminated")


def derive_seed(base: int, *parts) -> int:
    """Stable sub-seed derivation, independent of PYTHONHASHSEED."""
    text = "|".join([str(base), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def stratified_kfold(items: Sequence, folds: int, seed: int) -> list:
    """Disjoint, covering test folds with per-class counts balanced to within
    one item. Items may be labeled objects (with .label) or bare labels.

    Returns (train_indices, test_indices) pairs with sorted index lists.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    labels = [getattr(item, "label", item) for item in items]
    groups: dict = {}
    for idx, label in enumerate(labels):
        groups.setdefault(label, []).append(idx)
    for label, members in groups.items():
        if len(members) < folds:
            raise ValueError(
                f"class {label!r} has {len(members)} items; needs at least {folds}"
            )
    rng = random.Random(derive_seed(seed, "kfold", folds))
    test_folds = [[] for _ in range(folds)]
    for label in sorted(groups, key=str):
        members = list(groups[label])
        rng.shuffle(members)
        for pos, idx in enumerate(members):
            test_folds[pos % folds].append(idx)
    everything = set(range(len(items)))
    return [
        (sorted(everything - set(test)), sorted(test))
        for test in test_folds
    ]


def stratified_split(items: Sequence, train_fraction: float, seed: int) -> tuple:
    """One stratified train/test split keeping at least one test item per
    class. Returns (train_indices, test_indices), sorted."""
    labels = [getattr(item, "label", item) for item in items]
    groups: dict = {}
    for idx, label in enumerate(labels):
        groups.setdefault(label, []).append(idx)
    rng = random.Random(derive_seed(seed, "split"))
    train, test = [], []
    for label in sorted(groups, key=str):
        members = list(groups[label])
        rng.shuffle(members)
        n_test = max(1, round((1 - train_fraction) * len(members)))
        if n_test >= len(members):
            n_test = max(1, len(members) - 1)
        test.extend(members[:n_test])
        train.extend(members[n_test:])
    return sorted(train), sorted(test)


# ---------------------------------------------------------------------------
# Summary construction
# ---------------------------------------------------------------------------


def _collect_evidence(intervention: Intervention, scorer: EvidenceScorer) -> list:
    evidence = []
    for article in intervention.articles:
        try:
            evidence.append(select_evidence(scorer, article))
        except NoEvidenceError:
            continue
    return evidence


def build_summary(
    intervention: Intervention,
    mode: str,
    scorer: EvidenceScorer,
    config: ExperimentConfig,
    generator: SummaryGenerator | None = None,
) -> Summary:
    """One summary for an intervention in the given experiment mode."""
    if mode == "bs":
        return baseline_single(intervention, scorer, budget=config.budget)
    if mode == "bn":
        seed = zlib.crc32(f"{config.seed}:{intervention.name}".encode("utf-8"))
        return baseline_n(intervention, scorer, n=config.n, seed=seed, budget=config.budget)
    evidence = _collect_evidence(intervention, scorer)
    if not evidence:
        raise NoArticlesError(f"{intervention.name!r} has no usable articles")
    if mode == "pias-ext":
        return extractive_summary(evidence, k=config.k, budget=config.budget,
                                  intervention=intervention.name)
    if mode == "pias-abs":
        generator = generator or EchoGenerator()
        return abstractive_summary(generator, evidence, budget=config.budget,
                                   chunk_budget=config.chunk_budget,
                                   intervention=intervention.name)
    raise ValueError(f"unknown mode {mode!r}")


def build_all_summaries(
    corpus: Sequence[Intervention],
    mode: str,
    scorer: EvidenceScorer,
    config: ExperimentConfig,
    generator: SummaryGenerator | None = None,
) -> tuple:
    """Summaries keyed by intervention name plus the names skipped for having
    no usable articles."""
    summaries: dict = {}
    skipped = []
    for intervention in corpus:
        try:
            summaries[intervention.name] = build_summary(
                intervention, mode, scorer, config, generator
            )
        except NoArticlesError:
            log.info("skipping %r: no usable articles", intervention.name)
            skipped.append(intervention.name)
    return summaries, skipped


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


def aggregate_reports(reports: Sequence[ClassificationReport], class_names: tuple) -> AggregateReport:
    """Arithmetic mean of the per-fold reports, metric by metric."""
    if not reports:
        raise ValueError("nothing to aggregate")

    def mean(values):
        return sum(values) / len(values)

    per_class = {}
    for name in class_names:
        per_class[name] = Prf(
            mean([r.per_class[name].precision for r in reports]),
            mean([r.per_class[name].recall for r in reports]),
            mean([r.per_class[name].f1 for r in reports]),
        )
    macro = Prf(
        mean([r.macro.precision for r in reports]),
        mean([r.macro.recall for r in reports]),
        mean([r.macro.f1 for r in reports]),
    )
    aucs = [r.auc for r in reports if r.auc is not None]
    return AggregateReport(
        per_class=per_class,
        macro=macro,
        auc=mean(aucs) if aucs else None,
        n_folds=len(reports),
    )


def _evaluate_partition(
    items: Sequence[Intervention],
    labels: Sequence[int],
    summaries: dict,
    train_idx: Sequence[int],
    test_idx: Sequence[int],
    config: ExperimentConfig,
    clf_seed: int,
    class_names: tuple,
) -> tuple:
    classifier = TfidfLogisticModel(config=config.classifier, seed=clf_seed,
                                    min_df=config.min_df)
    train(classifier,
          [(summaries[items[i].name], labels[i]) for i in train_idx],
          config.classifier)
    predictions = []
    pred_labels = []
    true_labels = []
    scores = []
    for i in test_idx:
        p = predict(classifier, summaries[items[i].name], threshold=config.threshold)
        predictions.append(p)
        pred_labels.append(1 if p.label is Label.APPROVED else 0)
        true_labels.append(labels[i])
        scores.append(p.probability)
    report = classification_report(pred_labels, true_labels, scores=scores, names=class_names)
    return report, tuple(predictions)


def run_main_experiment(
    corpus: Sequence[Intervention],
    config: ExperimentConfig,
    scorer: EvidenceScorer,
    generator: SummaryGenerator | None = None,
) -> ExperimentResult:
    """Stratified k-fold evaluation of one summary mode on a labeled corpus.

    Post-approval (Phase 4) data is excluded from every intervention before
    summarization; interventions left without usable articles are skipped and
    reported.
    """
    labeled = [i for i in corpus if i.label in (Label.APPROVED, Label.TERMINATED)]
    pruned = [exclude_phase4_data(i, aggressive=config.aggressive_phase4_exclusion)
              for i in labeled]
    summaries, skipped = build_all_summaries(pruned, config.mode, scorer, config, generator)
    usable = [i for i in pruned if i.name in summaries]
    labels = [1 if i.label is Label.APPROVED else 0 for i in usable]

    class_names = ("approved", "terminated")
    fold_reports = []
    for fold, (train_idx, test_idx) in enumerate(
        stratified_kfold(usable, config.folds, config.seed)
    ):
        report, predictions = _evaluate_partition(
            usable, labels, summaries, train_idx, test_idx, config,
            clf_seed=derive_seed(config.seed, "clf", config.mode, fold),
            class_names=class_names,
        )
        fold_reports.append(FoldReport(fold=fold, report=report, predictions=predictions))

    aggregate = aggregate_reports([fr.report for fr in fold_reports], class_names)
    return ExperimentResult(
        experiment_id=f"{config.mode}-folds{config.folds}-seed{config.seed}",
        config=config,
        fold_reports=tuple(fold_reports),
        aggregate=aggregate,
        skipped=tuple(skipped),
        class_names=class_names,
    )


# ---------------------------------------------------------------------------
# Phase transitions
# ---------------------------------------------------------------------------


def _article_phases(intervention: Intervention, pmid: str) -> set:
    phases = set()
    for study in intervention.studies:
        if pmid in study.linked_pmids:
            phases.update(study.phases)
    return phases


def phase_transition_subset(corpus: Sequence[Intervention]) -> list:
    """Interventions with at least one article linked to each of Phase 1,
    Phase 2, and Phase 3."""
    required = {Phase.PHASE1, Phase.PHASE2, Phase.PHASE3}
    subset = []
    for intervention in corpus:
        covered = set()
        for article in intervention.articles:
            covered.update(_article_phases(intervention, article.pmid) & required)
        if covered >= required:
            subset.append(intervention)
    return subset


def restrict_articles_to_phase(intervention: Intervention, phase: Phase) -> Intervention:
    """Copy keeping only articles linked (via their studies) to the phase."""
    kept = [a for a in intervention.articles
            if phase in _article_phases(intervention, a.pmid)]
    return replace(intervention, articles=kept, raw_names=list(intervention.raw_names),
                   studies=list(intervention.studies), extra=dict(intervention.extra))


@dataclass(frozen=True)
class PhaseResult:
    experiment_id: str
    transition: str
    config: ExperimentConfig
    run_reports: tuple
    aggregate: AggregateReport
    skipped: tuple
    n_items: int
    class_names: tuple


def _run_phase_protocol(
    items: Sequence[Intervention],
    labels: Sequence[int],
    transition: str,
    config: ExperimentConfig,
    scorer: EvidenceScorer,
    generator: SummaryGenerator | None,
    class_names: tuple,
    skipped: Sequence[str],
) -> PhaseResult:
    summaries, more_skipped = build_all_summaries(items, config.mode, scorer, config, generator)
    keep = [i for i, item in enumerate(items) if item.name in summaries]
    items = [items[i] for i in keep]
    labels = [labels[i] for i in keep]
    if not items:
        raise NoArticlesError(f"no usable interventions for {transition}")
    if len(set(labels)) < 2:
        raise ValueError(f"{transition}: both outcome classes are required")

    run_reports = []
    for run in range(config.runs):
        train_idx, test_idx = stratified_split(
            labels, config.train_fraction, derive_seed(config.seed, transition, run)
        )
        report, predictions = _evaluate_partition(
            items, labels, summaries, train_idx, test_idx, config,
            clf_seed=derive_seed(config.seed, "clf", transition, run),
            class_names=class_names,
        )
        run_reports.append(FoldReport(fold=run, report=report, predictions=predictions))

    aggregate = aggregate_reports([r.report for r in run_reports], class_names)
    return PhaseResult(
        experiment_id=f"{transition}-runs{config.runs}-seed{config.seed}",
        transition=transition,
        config=config,
        run_reports=tuple(run_reports),
        aggregate=aggregate,
        skipped=tuple(list(skipped) + more_skipped),
        n_items=len(items),
        class_names=class_names,
    )


def run_phase_to_approval(
    subset: Sequence[Intervention],
    phase: Phase,
    config: ExperimentConfig,
    scorer: EvidenceScorer,
    generator: SummaryGenerator | None = None,
) -> PhaseResult:
    """Predict approval from articles of a single phase: repeated stratified
    80/20 splits, macro scores averaged over runs. Interventions with no
    article in the phase are skipped and counted."""
    if not subset:
        raise ValueError("subset is empty")
    items, labels, skipped = [], [], []
    for intervention in subset:
        if intervention.label not in (Label.APPROVED, Label.TERMINATED):
            continue
        restricted = restrict_articles_to_phase(intervention, phase)
        if not restricted.articles:
            log.info("%r has no articles in %s; skipped", intervention.name, phase.value)
            skipped.append(intervention.name)
            continue
        items.append(restricted)
        labels.append(1 if intervention.label is Label.APPROVED else 0)
    transition = f"{phase.value.lower()}-approval"
    return _run_phase_protocol(items, labels, transition, config, scorer, generator,
                               ("approved", "terminated"), skipped)


def run_phase_to_phase(
    subset: Sequence[Intervention],
    from_phase: Phase,
    to_phase: Phase,
    config: ExperimentConfig,
    scorer: EvidenceScorer,
    generator: SummaryGenerator | None = None,
) -> PhaseResult:
    """Predict advancement to the immediately following phase from the former
    phase's articles only. Positive class: at least one study in to_phase."""
    if not subset:
        raise ValueError("subset is empty")
    order = PHASE_ORDER
    if from_phase not in order or to_phase not in order or \
            order.index(to_phase) != order.index(from_phase) + 1:
        raise ValueError(f"{to_phase.value} does not follow {from_phase.value}")
    items, labels, skipped = [], [], []
    for intervention in subset:
        restricted = restrict_articles_to_phase(intervention, from_phase)
        if not restricted.articles:
            log.info("%r has no articles in %s; skipped", intervention.name, from_phase.value)
            skipped.append(intervention.name)
            continue
        items.append(restricted)
        labels.append(1 if any(to_phase in s.phases for s in intervention.studies) else 0)
    transition = f"{from_phase.value.lower()}-{to_phase.value.lower()}"
    return _run_phase_protocol(items, labels, transition, config, scorer, generator,
                               ("advanced", "not-advanced"), skipped)


# ---------------------------------------------------------------------------
# Summarization adequacy
# ---------------------------------------------------------------------------


def run_summarization_adequacy(pairs: Sequence[tuple]) -> dict:
    """Mean ROUGE-1/2/L over (generated, reference) pairs."""
    if not pairs:
        raise ValueError("no summary pairs given")

    def mean_scores(scores):
        n = len(scores)
        return RougeScore(
            sum(s.precision for s in scores) / n,
            sum(s.recall for s in scores) / n,
            sum(s.f1 for s in scores) / n,
        )

    return {
        "rouge1": mean_scores([rouge_n(g, r, 1) for g, r in pairs]),
        "rouge2": mean_scores([rouge_n(g, r, 2) for g, r in pairs]),
        "rougeL": mean_scores([rouge_l(g, r) for g, r in pairs]),
        "n_pairs": len(pairs),
    }
