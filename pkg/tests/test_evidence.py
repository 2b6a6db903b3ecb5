"""Sentence splitting, evidence selection, and scorer training-set assembly."""

import json
import random
from datetime import date

import pytest

from helpers import FixedScorer, ShiftedScorer
from pias.errors import NoEvidenceError, ParseError, UndefinedMetricError
from pias.evidence import (
    build_training_set,
    evaluate_scorer,
    load_annotations,
    select_evidence,
    split_sentences,
)
from pias.ingest import Article
from pias.synth import planted_corpus


def _article(abstract, pmid="123", when=date(2020, 1, 1)):
    return Article(pmid=pmid, pub_date=when, title="t", abstract=abstract)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def test_split_two_plain_sentences():
    sentences = split_sentences("Drug X worked. Adverse events were rare.")
    assert [s.text for s in sentences] == ["Drug X worked.", "Adverse events were rare."]
    assert [s.index for s in sentences] == [0, 1]


def test_split_abbreviation_guard():
    assert len(split_sentences("Dose was 5 mg i.v. daily and tolerated.")) == 1
    assert len(split_sentences("Dosing was 5 mg i.v. Daily review followed.")) == 1
    assert len(split_sentences("Results are shown in Fig. 2 and discussed.")) == 1


def test_split_decimal_protection():
    sentences = split_sentences("Response rate was 45.3 percent. Survival improved.")
    assert len(sentences) == 2
    assert sentences[0].text == "Response rate was 45.3 percent."


def test_split_empty_and_whitespace():
    assert split_sentences("") == []
    assert split_sentences("   \n ") == []


def test_split_initials_guard():
    assert len(split_sentences("Lead author J. Smith reported outcomes.")) == 1


def test_split_question_and_digit_start():
    sentences = split_sentences("Was it effective? 12 of 30 patients responded.")
    assert len(sentences) == 2
    assert sentences[1].text == "12 of 30 patients responded."


def test_split_spans_are_verbatim_and_ordered():
    text = "  First finding (n=4). Second finding was clear!  Third one. "
    sentences = split_sentences(text)
    assert len(sentences) == 3
    last_end = 0
    for s in sentences:
        start, end = s.span
        assert text[start:end] == s.text
        assert start >= last_end
        last_end = end


def test_split_covers_all_sentence_text_on_real_abstracts():
    corpus = planted_corpus(seed=3, n_interventions=10)
    for intervention in corpus:
        for article in intervention.articles:
            text = article.abstract
            sentences = split_sentences(text)
            covered = set()
            last_end = 0
            for s in sentences:
                start, end = s.span
                assert text[start:end] == s.text
                assert start >= last_end
                last_end = end
                covered.update(range(start, end))
            for i, ch in enumerate(text):
                if not ch.isspace():
                    assert i in covered


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


def test_select_evidence_argmax():
    article = _article("Aaa one. Bbb two. Ccc three.")
    texts = [s.text for s in split_sentences(article.abstract)]
    scorer = FixedScorer({texts[0]: 0.2, texts[1]: 0.9, texts[2]: 0.4})
    picked = select_evidence(scorer, article)
    assert picked.sentence.index == 1
    assert picked.score == 0.9
    assert picked.pmid == article.pmid


def test_select_evidence_tie_breaks_to_earlier_sentence():
    article = _article("Aaa one. Bbb two.")
    picked = select_evidence(FixedScorer(default=0.9), article)
    assert picked.sentence.index == 0


def test_select_evidence_single_sentence():
    article = _article("Only sentence here.")
    picked = select_evidence(FixedScorer(default=0.01), article)
    assert picked.sentence.text == "Only sentence here."


def test_select_evidence_rejects_abstractless():
    with pytest.raises(NoEvidenceError):
        select_evidence(FixedScorer(), _article(""))
    with pytest.raises(NoEvidenceError):
        select_evidence(FixedScorer(), _article("   "))


def test_select_evidence_argmax_invariant_under_score_shift():
    rng = random.Random(17)
    corpus = planted_corpus(seed=5, n_interventions=8)
    base = FixedScorer(default=0.0)
    for intervention in corpus:
        for article in intervention.articles:
            texts = [s.text for s in split_sentences(article.abstract)]
            base.table = {t: rng.uniform(0.1, 0.6) for t in texts}
            a = select_evidence(base, article)
            b = select_evidence(ShiftedScorer(base, 0.3), article)
            assert a.sentence.index == b.sentence.index


def test_select_evidence_validates_batch_length():
    class BrokenScorer:
        def score_batch(self, texts):
            return [0.5]

    with pytest.raises(ValueError):
        select_evidence(BrokenScorer(), _article("One. Two. Three."))


# ---------------------------------------------------------------------------
# Training sets
# ---------------------------------------------------------------------------


def _annotations(n_pos, n_neg):
    return [(f"evidence {i}", True) for i in range(n_pos)] + [
        (f"other {i}", False) for i in range(n_neg)
    ]


def test_training_set_ratio():
    out = build_training_set(_annotations(100, 1000), ratio=4, seed=0)
    assert sum(1 for _, y in out if y) == 100
    assert sum(1 for _, y in out if not y) == 400


def test_training_set_capped_by_available_negatives(caplog):
    with caplog.at_level("WARNING"):
        out = build_training_set(_annotations(100, 300), ratio=4, seed=0)
    assert sum(1 for _, y in out if not y) == 300
    assert any("negatives" in r.message for r in caplog.records)


def test_training_set_deterministic_and_without_replacement():
    a = build_training_set(_annotations(10, 200), ratio=4, seed=9)
    b = build_training_set(_annotations(10, 200), ratio=4, seed=9)
    assert a == b
    negatives = [t for t, y in a if not y]
    assert len(set(negatives)) == len(negatives)


def test_training_set_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_training_set(_annotations(0, 10), ratio=4)
    with pytest.raises(ValueError):
        build_training_set(_annotations(5, 10), ratio=0)


# ---------------------------------------------------------------------------
# Scorer evaluation
# ---------------------------------------------------------------------------


def test_evaluate_scorer_perfect():
    test = _annotations(5, 5)
    scorer = FixedScorer({t: (0.9 if y else 0.1) for t, y in test})
    result = evaluate_scorer(scorer, test)
    assert result == {"precision": 1.0, "recall": 1.0, "f1": 1.0, "auc": 1.0}


def test_evaluate_scorer_constant_scores_gives_half_auc():
    result = evaluate_scorer(FixedScorer(default=0.7), _annotations(5, 5))
    assert result["auc"] == 0.5


def test_evaluate_scorer_single_class_is_undefined():
    with pytest.raises(UndefinedMetricError):
        evaluate_scorer(FixedScorer(), [("a", True), ("b", True)])
    with pytest.raises(ValueError):
        evaluate_scorer(FixedScorer(), [])


# ---------------------------------------------------------------------------
# Annotation loader
# ---------------------------------------------------------------------------


def test_load_annotations_round_trip(tmp_path):
    path = tmp_path / "anns.jsonl"
    rows = [
        {"doc_id": "d1", "sentence": "Survival improved.", "label": 1},
        {"doc_id": "d2", "sentence": "Patients enrolled.", "label": 0},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    assert load_annotations(path) == [("Survival improved.", True), ("Patients enrolled.", False)]


def test_load_annotations_reports_bad_line(tmp_path):
    path = tmp_path / "anns.jsonl"
    path.write_text('{"doc_id": "d", "sentence": "s", "label": 1}\nnot json\n', encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_annotations(path)
    assert err.value.line == 2
