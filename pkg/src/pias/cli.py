"""Command line entry point exposing the pipeline stages and experiments.

Subcommands: build-dataset, extract-evidence, summarize, train, evaluate,
phase, rouge, serve-check. Every flag has a config-file equivalent
(`key = value` lines); explicit flags override the config file, and both are
recorded in the run manifest written next to each command's outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 network/bridge error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bridge import BridgeClient
from .corpus import (
    Label,
    build_intervention_records,
    corpus_stats,
    load_corpus,
    save_corpus,
)
from .errors import BridgeError, DataError, FetchError, UsageError
from .evidence import build_training_set, evaluate_scorer, load_annotations, select_evidence
from .errors import NoEvidenceError
from .experiments import (
    MODES,
    ExperimentConfig,
    phase_transition_subset,
    run_main_experiment,
    run_phase_to_approval,
    run_phase_to_phase,
    run_summarization_adequacy,
)
from .ingest import (
    EUTILS_BASE_URL,
    REGISTRY_BASE_URL,
    DEFAULT_KEYWORDS,
    FetchPolicy,
    Phase,
    StudyStatus,
    default_policy,
    fetch_abstract,
    fetch_cancer_trials,
    link_articles,
    make_transport,
)
from .native_scorer import AdamConfig, TfidfLogisticModel
from .report import (
    render_figures,
    render_rouge_figure,
    write_report,
    write_results,
    write_rouge_results,
)
from .summarize import EchoGenerator, save_summaries

log = logging.getLogger(__name__)

# Summarize-side mode names map onto experiment modes.
SUMMARIZE_MODES = {
    "extractive": "pias-ext",
    "abstractive": "pias-abs",
    "baseline-single": "bs",
    "baseline-n": "bn",
}

TRANSITIONS = {
    "phase1-approval": ("approval", Phase.PHASE1),
    "phase2-approval": ("approval", Phase.PHASE2),
    "phase3-approval": ("approval", Phase.PHASE3),
    "phase1-phase2": ("phase", (Phase.PHASE1, Phase.PHASE2)),
    "phase2-phase3": ("phase", (Phase.PHASE2, Phase.PHASE3)),
}

# Typed config-file keys; every CLI flag has an equivalent here.
_CONFIG_TYPES = {
    "keywords_file": str, "statuses": str, "out": str, "out_dir": str,
    "cache_dir": str, "registry_url": str, "pubmed_url": str,
    "corpus": str, "scorer_model": str, "scorer": str, "generator": str,
    "annotations": str, "eval_annotations": str, "summaries": str,
    "pairs": str, "task": str, "mode": str, "transition": str, "url": str,
    "folds": int, "k": int, "n": int, "budget": int, "chunk_budget": int,
    "ratio": int, "runs": int, "seed": int, "jobs": int, "epochs": int,
    "batch_size": int, "min_df": int,
    "lr": float, "train_fraction": float, "threshold": float,
    "rate": float, "retries": int,
    "figures": bool, "aggressive_phase4": bool, "jitter": bool,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(parser):
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--seed", type=int, default=0, help="seed for all stochastic choices")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker pool size (honored by build-dataset and extract-evidence)")


def _add_scorer_args(parser):
    parser.add_argument("--scorer-model", help="trained native scorer file")
    parser.add_argument("--scorer", choices=["native", "bridge"], default="native",
                        help="evidence scorer backend")
    parser.add_argument("--bridge-url", dest="url", help="bridge host:port (or PIAS_BRIDGE_URL)")


def build_parser() -> tuple:
    """The argument parser plus a name -> subparser map (used to tell which
    flags were given explicitly when merging in config-file values)."""
    parser = _Parser(prog="pias", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pias {__version__}")
    subparsers = parser.add_subparsers(dest="cmd")
    subcommands = {}

    def sub_parser(name, **kwargs):
        p = subparsers.add_parser(name, **kwargs)
        subcommands[name] = p
        return p

    p = sub_parser("build-dataset", help="fetch studies and abstracts, build the corpus")
    _add_common(p)
    p.add_argument("--keywords-file", help="one keyword per line (default: bundled oncology list)")
    p.add_argument("--statuses", default="completed,terminated",
                   help="comma list of overall statuses to keep")
    p.add_argument("--out", required=True, help="corpus output (jsonl)")
    p.add_argument("--cache-dir", help="content-addressed response cache")
    p.add_argument("--registry-url", default=REGISTRY_BASE_URL,
                   help="registry endpoint (fixture:<dir> for canned responses)")
    p.add_argument("--pubmed-url", default=EUTILS_BASE_URL,
                   help="literature endpoint (fixture:<dir> for canned responses)")
    p.add_argument("--rate", type=float, help="max requests per second")
    p.add_argument("--retries", type=int, help="max fetch retries")
    p.add_argument("--no-jitter", dest="jitter", action="store_false", default=True,
                   help="disable retry jitter (reproducible tests)")

    p = sub_parser("extract-evidence", help="score and select evidence sentences")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    _add_scorer_args(p)
    p.add_argument("--out", required=True, help="evidence output (jsonl)")

    p = sub_parser("summarize", help="build per-intervention summaries")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    _add_scorer_args(p)
    p.add_argument("--mode", choices=sorted(SUMMARIZE_MODES), default="extractive")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--budget", type=int, default=140)
    p.add_argument("--chunk-budget", type=int, default=1024)
    p.add_argument("--generator", choices=["echo", "bridge"], default="echo",
                   help="abstractive generator backend")
    p.add_argument("--out", required=True, help="summaries output (jsonl)")

    p = sub_parser("train", help="train the native scorer or classifier")
    _add_common(p)
    p.add_argument("--task", choices=["evidence", "approval"], required=True)
    p.add_argument("--annotations", help="evidence annotations (jsonl: doc_id, sentence, label)")
    p.add_argument("--eval-annotations", help="held-out annotations to report P/R/F1/AUC on")
    p.add_argument("--summaries", help="labeled summaries for the approval task")
    p.add_argument("--corpus", help="corpus supplying labels for the approval task")
    p.add_argument("--ratio", type=int, default=4, help="negatives per positive")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--out", required=True, help="model output (json)")

    p = sub_parser("evaluate", help="cross-validated evaluation of summary modes")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    _add_scorer_args(p)
    p.add_argument("--mode", default="pias-ext",
                   help=f"comma list from {', '.join(MODES)}")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--budget", type=int, default=140)
    p.add_argument("--chunk-budget", type=int, default=1024)
    p.add_argument("--generator", choices=["echo", "bridge"], default="echo")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--aggressive-phase4", action="store_true", default=False,
                   help="drop any article linked to a Phase-4 study, not just exclusively linked")
    p.add_argument("--no-figures", dest="figures", action="store_false", default=True)
    p.add_argument("--out-dir", required=True)

    p = sub_parser("phase", help="phase-transition experiments")
    _add_common(p)
    p.add_argument("--corpus", required=True)
    _add_scorer_args(p)
    p.add_argument("--transition", choices=sorted(TRANSITIONS), required=True)
    p.add_argument("--mode", default="pias-ext", help=f"one of {', '.join(MODES)}")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--budget", type=int, default=140)
    p.add_argument("--chunk-budget", type=int, default=1024)
    p.add_argument("--generator", choices=["echo", "bridge"], default="echo")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=True)
    p.add_argument("--out-dir", required=True)

    p = sub_parser("rouge", help="summarization adequacy over (generated, reference) pairs")
    _add_common(p)
    p.add_argument("--pairs", required=True,
                   help="jsonl with fields generated, reference, and optional mode")
    p.add_argument("--no-figures", dest="figures", action="store_false", default=True)
    p.add_argument("--out-dir", required=True)

    p = sub_parser("serve-check", help="ping the bridge sidecar")
    _add_common(p)
    p.add_argument("--url", help="bridge host:port (or PIAS_BRIDGE_URL)")

    return parser, subcommands


# ---------------------------------------------------------------------------
# Config file
# ---------------------------------------------------------------------------


def _scan_config(argv) -> str | None:
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--config="):
            return arg.split("=", 1)[1]
    return None


def load_config_file(path) -> dict:
    """Parse `key = value` lines; # starts a comment."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_TYPES:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        caster = _CONFIG_TYPES[key]
        if caster is bool:
            values[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            try:
                values[key] = caster(value)
            except ValueError as exc:
                raise UsageError(f"config line {lineno}: {exc}") from exc
    return values


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------


def _write_manifest(target, command, argv, ns, config_file, file_values,
                    inputs, outputs, started):
    resolved = {k: v for k, v in vars(ns).items()
                if k not in ("cmd",) and not k.startswith("_")}
    manifest = {
        "command": command,
        "argv": list(argv),
        "config_file": config_file,
        "config_file_values": file_values,
        "resolved_config": resolved,
        "seed": getattr(ns, "seed", None),
        "inputs": inputs,
        "outputs": outputs,
        "tool_version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    Path(target).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str),
                            encoding="utf-8")


def _manifest_path(ns) -> Path:
    if getattr(ns, "out_dir", None):
        return Path(ns.out_dir) / "manifest.json"
    return Path(str(ns.out) + ".manifest.json")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _policy(ns) -> FetchPolicy:
    base = default_policy()
    return FetchPolicy(
        max_requests_per_second=getattr(ns, "rate", None) or base.max_requests_per_second,
        max_retries=getattr(ns, "retries", None) if getattr(ns, "retries", None) is not None
        else base.max_retries,
        jitter=getattr(ns, "jitter", True),
    )


def _load_scorer(ns):
    if ns.scorer == "bridge":
        return BridgeClient(ns.url)
    if not ns.scorer_model:
        raise UsageError("--scorer-model is required with the native scorer")
    return TfidfLogisticModel.load(ns.scorer_model)


def _generator(ns):
    if getattr(ns, "generator", "echo") == "bridge":
        return BridgeClient(getattr(ns, "url", None))
    return EchoGenerator()


def _experiment_config(ns, mode, **overrides) -> ExperimentConfig:
    values = dict(
        mode=mode,
        folds=getattr(ns, "folds", 10),
        k=getattr(ns, "k", 5),
        n=getattr(ns, "n", 3),
        budget=getattr(ns, "budget", 140),
        chunk_budget=getattr(ns, "chunk_budget", 1024),
        train_fraction=getattr(ns, "train_fraction", 0.8),
        runs=getattr(ns, "runs", 10),
        seed=ns.seed,
        threshold=getattr(ns, "threshold", 0.5),
        min_df=getattr(ns, "min_df", 2),
        aggressive_phase4_exclusion=getattr(ns, "aggressive_phase4", False),
        classifier=AdamConfig(
            lr=getattr(ns, "lr", 0.5),
            epochs=getattr(ns, "epochs", 30),
            batch_size=getattr(ns, "batch_size", 32),
        ),
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def _labeled(corpus):
    return [i for i in corpus if i.label in (Label.APPROVED, Label.TERMINATED)]


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def _cmd_build_dataset(ns) -> tuple:
    if ns.keywords_file:
        keywords = [line.strip() for line in Path(ns.keywords_file).read_text(encoding="utf-8").splitlines()
                    if line.strip() and not line.startswith("#")]
    else:
        keywords = list(DEFAULT_KEYWORDS)
    statuses = set()
    for token in ns.statuses.split(","):
        token = token.strip().upper()
        if not token:
            continue
        try:
            statuses.add(StudyStatus[token])
        except KeyError:
            raise UsageError(f"unknown status {token!r}")

    policy = _policy(ns)
    registry_transport = make_transport(ns.registry_url, policy, ns.cache_dir)
    pubmed_transport = make_transport(ns.pubmed_url, policy, ns.cache_dir)

    studies = fetch_cancer_trials(keywords, statuses, policy,
                                  transport=registry_transport, base_url=ns.registry_url)
    log.info("fetched %d studies", len(studies))

    linked = []
    for study in studies:
        pmids = link_articles(study, policy, transport=pubmed_transport, base_url=ns.pubmed_url)
        linked.append((study, pmids))

    wanted = sorted({p for _, pmids in linked for p in pmids}, key=int)
    articles = {}

    def _fetch(pmid):
        return pmid, fetch_abstract(pmid, policy, transport=pubmed_transport,
                                    base_url=ns.pubmed_url)

    if ns.jobs > 1:
        with ThreadPoolExecutor(max_workers=ns.jobs) as pool:
            for pmid, article in pool.map(_fetch, wanted):
                articles[pmid] = article
    else:
        for pmid in wanted:
            articles[pmid] = _fetch(pmid)[1]

    studies = [
        s.__class__(nct_id=s.nct_id, phases=s.phases, status=s.status,
                    intervention_names=s.intervention_names,
                    linked_pmids=tuple(pmids), study_type=s.study_type, extra=dict(s.extra))
        for s, pmids in linked
    ]
    corpus = build_intervention_records(studies, articles)
    save_corpus(corpus, ns.out)
    print(corpus_stats(corpus).table())
    return (
        {"registry_url": ns.registry_url, "pubmed_url": ns.pubmed_url,
         "keywords": keywords, "statuses": sorted(s.value for s in statuses)},
        {"corpus": str(ns.out), "n_interventions": len(corpus)},
    )


def _cmd_extract_evidence(ns) -> tuple:
    corpus = load_corpus(ns.corpus)
    scorer = _load_scorer(ns)

    def _one(intervention):
        rows = []
        for article in intervention.articles:
            try:
                ev = select_evidence(scorer, article)
            except NoEvidenceError:
                continue
            rows.append({
                "intervention": intervention.name,
                "pmid": ev.pmid,
                "pub_date": ev.pub_date.isoformat(),
                "sentence": ev.sentence.text,
                "index": ev.sentence.index,
                "span": list(ev.sentence.span),
                "score": ev.score,
            })
        return rows

    if ns.jobs > 1 and getattr(scorer, "concurrency", "concurrent") != "serial":
        with ThreadPoolExecutor(max_workers=ns.jobs) as pool:
            all_rows = list(pool.map(_one, corpus))
    else:
        all_rows = [_one(i) for i in corpus]

    count = 0
    with open(ns.out, "w", encoding="utf-8") as fh:
        for rows in all_rows:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True))
                fh.write("\n")
                count += 1
    print(f"wrote {count} evidence sentences for {len(corpus)} interventions")
    return {"corpus": ns.corpus}, {"evidence": str(ns.out), "n_sentences": count}


def _cmd_summarize(ns) -> tuple:
    from .experiments import build_all_summaries

    corpus = _labeled(load_corpus(ns.corpus))
    scorer = _load_scorer(ns)
    mode = SUMMARIZE_MODES[ns.mode]
    config = _experiment_config(ns, mode, folds=10)
    summaries, skipped = build_all_summaries(corpus, mode, scorer, config, _generator(ns))
    save_summaries(list(summaries.values()), ns.out)
    print(f"wrote {len(summaries)} summaries ({len(skipped)} skipped)")
    return {"corpus": ns.corpus}, {"summaries": str(ns.out), "skipped": skipped}


def _cmd_train(ns) -> tuple:
    config = AdamConfig(lr=ns.lr, epochs=ns.epochs, batch_size=ns.batch_size)
    model = TfidfLogisticModel(config=config, seed=ns.seed, min_df=ns.min_df)
    if ns.task == "evidence":
        if not ns.annotations:
            raise UsageError("--annotations is required for the evidence task")
        pairs = build_training_set(load_annotations(ns.annotations), ratio=ns.ratio, seed=ns.seed)
        model.fit([(text, 1 if y else 0) for text, y in pairs])
        inputs = {"annotations": ns.annotations}
        if ns.eval_annotations:
            scores = evaluate_scorer(model, load_annotations(ns.eval_annotations))
            print(json.dumps(scores, sort_keys=True))
            inputs["eval_annotations"] = ns.eval_annotations
    else:
        if not (ns.summaries and ns.corpus):
            raise UsageError("--summaries and --corpus are required for the approval task")
        from .summarize import load_summaries

        labels = {i.name: i.label for i in _labeled(load_corpus(ns.corpus))}
        pairs = []
        for summary in load_summaries(ns.summaries):
            label = labels.get(summary.intervention)
            if label is None:
                continue
            pairs.append((summary.text, 1 if label is Label.APPROVED else 0))
        if not pairs:
            raise DataError("no summaries matched labeled interventions")
        model.fit(pairs)
        inputs = {"summaries": ns.summaries, "corpus": ns.corpus}
    model.save(ns.out)
    print(f"saved model to {ns.out} ({len(model.vocab)} features)")
    return inputs, {"model": str(ns.out)}


def _cmd_evaluate(ns) -> tuple:
    corpus = load_corpus(ns.corpus)
    scorer = _load_scorer(ns)
    generator = _generator(ns)
    modes = [m.strip() for m in ns.mode.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r}; expected one of {MODES}")

    results = []
    for mode in modes:
        config = _experiment_config(ns, mode)
        results.append(run_main_experiment(corpus, config, scorer, generator))

    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results(out_dir / "results.jsonl", results)
    write_report(out_dir / "report.md", results)
    figures = render_figures(out_dir / "figures", results) if ns.figures else []
    for result in results:
        agg = result.aggregate.macro
        print(f"{result.experiment_id}: macro P={agg.precision:.3f}"
              f" R={agg.recall:.3f} F1={agg.f1:.3f}")
    return (
        {"corpus": ns.corpus, "modes": modes},
        {"results": str(out_dir / "results.jsonl"), "report": str(out_dir / "report.md"),
         "figures": [str(p) for p in figures]},
    )


def _cmd_phase(ns) -> tuple:
    corpus = _labeled(load_corpus(ns.corpus))
    scorer = _load_scorer(ns)
    generator = _generator(ns)
    if ns.mode not in MODES:
        raise UsageError(f"unknown mode {ns.mode!r}; expected one of {MODES}")
    config = _experiment_config(ns, ns.mode, folds=10)

    kind, spec = TRANSITIONS[ns.transition]
    if kind == "approval":
        subset = phase_transition_subset(corpus)
        result = run_phase_to_approval(subset, spec, config, scorer, generator)
    else:
        from_phase, to_phase = spec
        result = run_phase_to_phase(corpus, from_phase, to_phase, config, scorer, generator)

    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results(out_dir / "results.jsonl", [result])
    write_report(out_dir / "report.md", [result], title=f"Phase transition: {ns.transition}")
    figures = render_figures(out_dir / "figures", [result]) if ns.figures else []
    agg = result.aggregate.macro
    print(f"{result.experiment_id}: macro P={agg.precision:.3f}"
          f" R={agg.recall:.3f} F1={agg.f1:.3f} over {result.n_items} interventions")
    return (
        {"corpus": ns.corpus, "transition": ns.transition},
        {"results": str(out_dir / "results.jsonl"), "report": str(out_dir / "report.md"),
         "figures": [str(p) for p in figures]},
    )


def _cmd_rouge(ns) -> tuple:
    from .errors import ParseError

    groups: dict = {}
    with open(ns.pairs, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                pair = (row["generated"], row["reference"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise ParseError(f"bad pair record: {exc}", line=lineno) from exc
            groups.setdefault(row.get("mode", "all"), []).append(pair)

    tables = {mode: run_summarization_adequacy(pairs) for mode, pairs in groups.items()}
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rouge_results(out_dir / "rouge.jsonl", tables)
    figures = render_rouge_figure(out_dir / "figures", tables) if ns.figures else []
    for mode in sorted(tables):
        t = tables[mode]
        print(f"{mode}: R-1 {t['rouge1'].f1:.4f}  R-2 {t['rouge2'].f1:.4f}"
              f"  R-L {t['rougeL'].f1:.4f}  ({t['n_pairs']} pairs)")
    return (
        {"pairs": ns.pairs},
        {"results": str(out_dir / "rouge.jsonl"), "figures": [str(p) for p in figures]},
    )


def _cmd_serve_check(ns) -> tuple:
    client = BridgeClient(ns.url)
    status = client.health()
    client.close()
    print(f"bridge at {client.host}:{client.port}: {status}")
    if status != "ok":
        raise BridgeError(f"bridge health is {status!r}")
    return {"url": f"{client.host}:{client.port}"}, {"status": status}


_HANDLERS = {
    "build-dataset": _cmd_build_dataset,
    "extract-evidence": _cmd_extract_evidence,
    "summarize": _cmd_summarize,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "phase": _cmd_phase,
    "rouge": _cmd_rouge,
    "serve-check": _cmd_serve_check,
}


def _explicit_dests(subparser, argv) -> set:
    """Dests of options literally present on the command line."""
    explicit = set()
    for action in subparser._actions:
        for opt in action.option_strings:
            if any(arg == opt or arg.startswith(opt + "=") for arg in argv):
                explicit.add(action.dest)
    return explicit


def run(argv) -> int:
    parser, subcommands = build_parser()
    started = datetime.now(timezone.utc).isoformat()
    try:
        config_path = _scan_config(argv)
        file_values = load_config_file(config_path) if config_path else {}
        ns = parser.parse_args(argv)
        if not getattr(ns, "cmd", None):
            parser.print_help(sys.stderr)
            return 1
        # Config file fills in anything not given explicitly on the line;
        # keys that do not apply to this subcommand are ignored.
        explicit = _explicit_dests(subcommands[ns.cmd], argv)
        for key, value in file_values.items():
            if hasattr(ns, key) and key not in explicit:
                setattr(ns, key, value)
        inputs, outputs = _HANDLERS[ns.cmd](ns)
        if ns.cmd != "serve-check":
            _write_manifest(_manifest_path(ns), ns.cmd, argv, ns, config_path,
                            file_values, inputs, outputs, started)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (FetchError, BridgeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
