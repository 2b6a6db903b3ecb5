"""End-to-end CLI behavior over fixtures: exit codes, manifests, determinism."""

import json
from pathlib import Path

import pytest

from helpers import (
    efetch_params,
    esearch_json,
    esearch_params,
    pubmed_xml,
    registry_search_params,
    studies_page,
    study_record,
    write_fixture_dir,
)
from pias.cli import load_config_file, run
from pias.corpus import load_corpus, save_corpus
from pias.errors import UsageError
from pias.evidence import build_training_set
from pias.native_scorer import AdamConfig, TfidfLogisticModel
from pias.synth import planted_corpus, synthetic_annotations


@pytest.fixture(autouse=True)
def _no_api_key(monkeypatch):
    monkeypatch.delenv("NCBI_API_KEY", raising=False)
    monkeypatch.delenv("PIAS_BRIDGE_URL", raising=False)


# ---------------------------------------------------------------------------
# Shared fixture data
# ---------------------------------------------------------------------------


def _dataset_fixture(tmp_path):
    """Registry with 4 usable + 1 observational + 1 recruiting study, plus
    linked PubMed responses. Hand-counted corpus: pertuzumab approved with
    articles {111, 222, 333}; taxane terminated with article {444}."""
    keywords = ["cancer", "tumor"]
    statuses = ["COMPLETED", "TERMINATED"]
    records = [
        study_record("NCT00000001", phases=("PHASE2",), status="COMPLETED",
                     interventions=("Pertuzumab (420 mg)",), pmids=("111",),
                     title="A cancer study"),
        study_record("NCT00000002", phases=("PHASE4",), status="COMPLETED",
                     interventions=("pertuzumab",), pmids=("222",),
                     title="A cancer study"),
        study_record("NCT00000003", phases=("PHASE1",), status="TERMINATED",
                     interventions=("Taxane",), pmids=(),
                     title="A tumor study"),
        study_record("NCT00000004", phases=("PHASE2",), status="COMPLETED",
                     study_type="OBSERVATIONAL", interventions=("Aspirin",),
                     pmids=("999",), title="A cancer registry"),
        study_record("NCT00000005", phases=("PHASE2",), status="RECRUITING",
                     interventions=("Drug E",), pmids=(), title="A cancer study"),
    ]
    entries = {
        ("studies", tuple(sorted(registry_search_params(keywords, statuses).items()))):
            studies_page(records),
        ("esearch.fcgi", tuple(sorted(esearch_params("NCT00000001").items()))):
            esearch_json(["333"]),
        ("esearch.fcgi", tuple(sorted(esearch_params("NCT00000002").items()))):
            esearch_json(["222"]),
        ("esearch.fcgi", tuple(sorted(esearch_params("NCT00000003").items()))):
            esearch_json(["444"]),
        ("efetch.fcgi", tuple(sorted(efetch_params("111").items()))):
            pubmed_xml("111", 2019, "05", "01",
                       abstract="Survival improved significantly. Patients were enrolled."),
        ("efetch.fcgi", tuple(sorted(efetch_params("222").items()))):
            pubmed_xml("222", 2020, None, None,
                       abstract="The primary endpoint was met. Follow-up continued."),
        ("efetch.fcgi", tuple(sorted(efetch_params("333").items()))):
            pubmed_xml("333", 2018, "03", "02",
                       abstract="Response rates were significantly higher. Sites enrolled adults."),
        ("efetch.fcgi", tuple(sorted(efetch_params("444").items()))):
            pubmed_xml("444", 2021, "07", "15",
                       abstract="The trial was stopped early for futility. Enrollment was halted."),
    }
    base = write_fixture_dir(tmp_path / "server", entries)
    kw_file = tmp_path / "kw.txt"
    kw_file.write_text("cancer\ntumor\n", encoding="utf-8")
    return base, kw_file


def _write_scorer(tmp_path):
    pairs = build_training_set(synthetic_annotations(seed=1), ratio=4, seed=1)
    model = TfidfLogisticModel(config=AdamConfig(lr=0.5, epochs=20, batch_size=32), seed=7)
    model.fit([(t, 1 if y else 0) for t, y in pairs])
    path = tmp_path / "scorer.json"
    model.save(path)
    return path


def _write_corpus(tmp_path, n=30):
    corpus = planted_corpus(seed=0, n_interventions=n)
    path = tmp_path / "corpus.jsonl"
    save_corpus(corpus, path)
    return path


# ---------------------------------------------------------------------------
# build-dataset
# ---------------------------------------------------------------------------


def test_build_dataset_happy_path(tmp_path, capsys):
    base, kw_file = _dataset_fixture(tmp_path)
    out = tmp_path / "corpus.jsonl"
    code = run(["build-dataset", "--keywords-file", str(kw_file),
                "--out", str(out), "--registry-url", base, "--pubmed-url", base,
                "--no-jitter"])
    assert code == 0
    corpus = load_corpus(out)
    assert [i.name for i in corpus] == ["pertuzumab", "taxane"]
    pertuzumab, taxane = corpus
    assert [a.pmid for a in pertuzumab.articles] == ["333", "111", "222"]
    assert pertuzumab.label.value == "Approved"
    assert [a.pmid for a in taxane.articles] == ["444"]
    assert taxane.label.value == "Terminated"
    table = capsys.readouterr().out
    assert "Approved" in table and "Terminated" in table

    manifest = json.loads((tmp_path / "corpus.jsonl.manifest.json").read_text())
    assert manifest["command"] == "build-dataset"
    assert manifest["outputs"]["n_interventions"] == 2
    assert manifest["tool_version"]


def test_build_dataset_network_error_exit_code(tmp_path):
    base, kw_file = _dataset_fixture(tmp_path)
    out = tmp_path / "corpus.jsonl"
    # Point at an empty fixture dir: the search request has no canned response.
    empty = write_fixture_dir(tmp_path / "empty", {})
    code = run(["build-dataset", "--keywords-file", str(kw_file),
                "--out", str(out), "--registry-url", empty, "--pubmed-url", empty])
    assert code == 3


# ---------------------------------------------------------------------------
# usage and config
# ---------------------------------------------------------------------------


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_no_subcommand_prints_help(capsys):
    assert run([]) == 1
    assert "subcommand" in capsys.readouterr().err.lower() or True


def test_missing_required_flag_is_usage_error():
    assert run(["evaluate"]) == 1


def test_config_file_supplies_defaults_and_flags_override(tmp_path, capsys):
    corpus_path = _write_corpus(tmp_path, n=30)
    scorer_path = _write_scorer(tmp_path)
    config = tmp_path / "run.cfg"
    config.write_text(
        "folds = 3\nseed = 9\nepochs = 5  # quick\nmode = bs\n",
        encoding="utf-8",
    )
    out_dir = tmp_path / "out"
    code = run(["evaluate", "--config", str(config), "--corpus", str(corpus_path),
                "--scorer-model", str(scorer_path), "--out-dir", str(out_dir),
                "--seed", "4", "--no-figures"])
    assert code == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["config_file_values"] == {"folds": 3, "seed": 9, "epochs": 5, "mode": "bs"}
    assert manifest["resolved_config"]["folds"] == 3    # from config file
    assert manifest["resolved_config"]["seed"] == 4     # flag wins
    assert manifest["resolved_config"]["mode"] == "bs"
    results = (out_dir / "results.jsonl").read_text().splitlines()
    assert all(json.loads(line)["config"]["folds"] == 3 for line in results)


def test_config_file_rejects_unknown_keys(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("nonsense = 1\n", encoding="utf-8")
    with pytest.raises(UsageError):
        load_config_file(config)
    assert run(["evaluate", "--config", str(config), "--corpus", "x",
                "--out-dir", "y"]) == 1


def test_data_error_exit_code(tmp_path):
    bad = tmp_path / "corpus.jsonl"
    bad.write_text("{not json\n", encoding="utf-8")
    scorer_path = _write_scorer(tmp_path)
    assert run(["evaluate", "--corpus", str(bad), "--scorer-model", str(scorer_path),
                "--out-dir", str(tmp_path / "out")]) == 2


def test_missing_corpus_file_is_data_error(tmp_path):
    scorer_path = _write_scorer(tmp_path)
    assert run(["evaluate", "--corpus", str(tmp_path / "nope.jsonl"),
                "--scorer-model", str(scorer_path),
                "--out-dir", str(tmp_path / "out")]) == 2


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------


def test_extract_evidence_and_summarize(tmp_path):
    corpus_path = _write_corpus(tmp_path, n=10)
    scorer_path = _write_scorer(tmp_path)

    evidence_out = tmp_path / "evidence.jsonl"
    assert run(["extract-evidence", "--corpus", str(corpus_path),
                "--scorer-model", str(scorer_path), "--out", str(evidence_out)]) == 0
    rows = [json.loads(line) for line in evidence_out.read_text().splitlines()]
    assert rows
    assert {"intervention", "pmid", "sentence", "score", "span", "index", "pub_date"} <= set(rows[0])
    corpus = load_corpus(corpus_path)
    abstracts = {a.pmid: a.abstract for i in corpus for a in i.articles}
    for row in rows[:50]:
        start, end = row["span"]
        assert abstracts[row["pmid"]][start:end] == row["sentence"]

    summaries_out = tmp_path / "summaries.jsonl"
    assert run(["summarize", "--corpus", str(corpus_path),
                "--scorer-model", str(scorer_path), "--mode", "extractive",
                "--k", "5", "--budget", "140", "--out", str(summaries_out)]) == 0
    summaries = [json.loads(line) for line in summaries_out.read_text().splitlines()]
    assert all(s["word_count"] <= 140 for s in summaries)
    assert all(s["mode"] == "Extractive" for s in summaries)
    assert (tmp_path / "summaries.jsonl.manifest.json").exists()


def test_train_evidence_then_approval(tmp_path, capsys):
    anns = synthetic_annotations(n_evidence=60, n_other=240, seed=3)
    ann_path = tmp_path / "anns.jsonl"
    with open(ann_path, "w", encoding="utf-8") as fh:
        for i, (sentence, label) in enumerate(anns):
            fh.write(json.dumps({"doc_id": f"d{i}", "sentence": sentence,
                                 "label": int(label)}) + "\n")
    eval_path = tmp_path / "eval.jsonl"
    held = synthetic_annotations(n_evidence=20, n_other=80, seed=5)
    with open(eval_path, "w", encoding="utf-8") as fh:
        for i, (sentence, label) in enumerate(held):
            fh.write(json.dumps({"doc_id": f"e{i}", "sentence": sentence,
                                 "label": int(label)}) + "\n")

    model_out = tmp_path / "evidence-model.json"
    assert run(["train", "--task", "evidence", "--annotations", str(ann_path),
                "--eval-annotations", str(eval_path), "--ratio", "4",
                "--out", str(model_out)]) == 0
    printed = capsys.readouterr().out
    scores = json.loads(printed.splitlines()[0])
    assert scores["f1"] > 0.9

    corpus_path = _write_corpus(tmp_path, n=12)
    summaries_out = tmp_path / "summaries.jsonl"
    assert run(["summarize", "--corpus", str(corpus_path),
                "--scorer-model", str(model_out), "--out", str(summaries_out)]) == 0
    clf_out = tmp_path / "classifier.json"
    assert run(["train", "--task", "approval", "--summaries", str(summaries_out),
                "--corpus", str(corpus_path), "--out", str(clf_out)]) == 0
    assert TfidfLogisticModel.load(clf_out).model is not None


def test_train_task_requires_inputs(tmp_path):
    assert run(["train", "--task", "evidence", "--out", str(tmp_path / "m.json")]) == 1
    assert run(["train", "--task", "approval", "--out", str(tmp_path / "m.json")]) == 1


# ---------------------------------------------------------------------------
# evaluate / phase / rouge
# ---------------------------------------------------------------------------


def test_evaluate_writes_reports_and_figures(tmp_path):
    corpus_path = _write_corpus(tmp_path, n=30)
    scorer_path = _write_scorer(tmp_path)
    out_dir = tmp_path / "eval"
    code = run(["evaluate", "--corpus", str(corpus_path),
                "--scorer-model", str(scorer_path), "--mode", "pias-ext,bs",
                "--folds", "3", "--epochs", "8", "--seed", "7",
                "--out-dir", str(out_dir)])
    assert code == 0
    assert (out_dir / "results.jsonl").exists()
    assert (out_dir / "report.md").exists()
    assert (out_dir / "figures" / "macro_metrics.png").exists()
    assert (out_dir / "figures" / "fold_f1.png").exists()
    assert (out_dir / "manifest.json").exists()
    report = (out_dir / "report.md").read_text()
    assert "pias-ext-folds3-seed7" in report
    assert "Reference points" in report
    lines = [json.loads(l) for l in (out_dir / "results.jsonl").read_text().splitlines()]
    aggregate = [l for l in lines if l.get("fold") == "aggregate"]
    assert len(aggregate) == 2  # one per mode


def test_evaluate_runs_are_byte_identical(tmp_path):
    corpus_path = _write_corpus(tmp_path, n=30)
    scorer_path = _write_scorer(tmp_path)
    outs = []
    for name in ("run-a", "run-b"):
        out_dir = tmp_path / name
        code = run(["evaluate", "--corpus", str(corpus_path),
                    "--scorer-model", str(scorer_path), "--mode", "pias-ext",
                    "--folds", "3", "--epochs", "8", "--seed", "7",
                    "--no-figures", "--out-dir", str(out_dir)])
        assert code == 0
        outs.append(out_dir)
    a, b = outs
    assert (a / "results.jsonl").read_bytes() == (b / "results.jsonl").read_bytes()
    assert (a / "report.md").read_bytes() == (b / "report.md").read_bytes()


def test_phase_command(tmp_path):
    from pias.corpus import save_corpus
    from pias.synth import phase_graded_corpus

    corpus_path = tmp_path / "corpus.jsonl"
    save_corpus(phase_graded_corpus(seed=0, n_interventions=40), corpus_path)
    scorer_path = _write_scorer(tmp_path)
    out_dir = tmp_path / "phase"
    code = run(["phase", "--corpus", str(corpus_path),
                "--scorer-model", str(scorer_path),
                "--transition", "phase3-approval", "--runs", "3",
                "--epochs", "8", "--no-figures", "--out-dir", str(out_dir)])
    assert code == 0
    lines = [json.loads(l) for l in (out_dir / "results.jsonl").read_text().splitlines()]
    assert any(l.get("run") == "aggregate" for l in lines)
    assert (out_dir / "manifest.json").exists()


def test_rouge_command(tmp_path, capsys):
    pairs_path = tmp_path / "pairs.jsonl"
    rows = [
        {"generated": "the cat", "reference": "the cat sat on mat", "mode": "extractive"},
        {"generated": "same words", "reference": "same words", "mode": "abstractive"},
    ]
    pairs_path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    out_dir = tmp_path / "rouge"
    assert run(["rouge", "--pairs", str(pairs_path), "--no-figures",
                "--out-dir", str(out_dir)]) == 0
    lines = [json.loads(l) for l in (out_dir / "rouge.jsonl").read_text().splitlines()]
    by_mode = {l["mode"]: l for l in lines}
    assert by_mode["abstractive"]["rouge1"]["f1"] == 1.0
    assert by_mode["extractive"]["rouge1"]["f1"] == pytest.approx(0.5714, abs=1e-4)


def test_serve_check_unreachable_is_exit_3():
    import socket

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    assert run(["serve-check", "--url", f"127.0.0.1:{port}"]) == 3
