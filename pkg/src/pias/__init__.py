"""Predict clinical-trial intervention approval from multi-document evidence
summaries: ingest registry studies and abstracts, extract evidence sentences,
summarize them under a word budget, and classify the summaries."""

__version__ = "0.1.0"

from .corpus import Intervention, Label, corpus_stats, load_corpus, save_corpus
from .evidence import EvidenceSentence, Sentence, select_evidence, split_sentences
from .experiments import ExperimentConfig, run_main_experiment, stratified_kfold
from .ingest import Article, CTStudy, FetchPolicy, Phase, StudyStatus, StudyType
from .metrics import auc, classification_report, rouge_l, rouge_n
from .native_scorer import AdamConfig, TfidfLogisticModel, adam_step
from .summarize import (
    EchoGenerator,
    Summary,
    SummaryMode,
    abstractive_summary,
    chunk_text,
    extractive_summary,
)

__all__ = [
    "__version__",
    "AdamConfig", "Article", "CTStudy", "EchoGenerator", "EvidenceSentence",
    "ExperimentConfig", "FetchPolicy", "Intervention", "Label", "Phase",
    "Sentence", "StudyStatus", "StudyType", "Summary", "SummaryMode",
    "TfidfLogisticModel", "abstractive_summary", "adam_step", "auc",
    "chunk_text", "classification_report", "corpus_stats",
    "extractive_summary", "load_corpus", "rouge_l", "rouge_n",
    "run_main_experiment", "save_corpus", "select_evidence",
    "split_sentences", "stratified_kfold",
]
