"""Command-line pipeline: fetch, preprocess, extract, sample, serve,
export, analyze, validate.

Every stochastic stage takes an explicit --seed, so a study run is
reproducible end to end from the corpus file onward.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import analysis, corpus, extractors, studysampler, surveysvc
from .errors import ConfigurationError, SoessError
from .nlptext import Lexicon
from .preprocess import CodeTokenRuleSet
from .resources import default_code_rules_path, default_lexicon_path, default_patterns_path


def _parse_date(value: str) -> datetime:
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def load_config(path) -> dict:
    """key=value lines, # comments."""
    config = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, value = stripped.split("=", 1)
        config[key.strip()] = value.strip()
    return config


def _resources(args, config: dict) -> extractors.ExtractorResources:
    lexicon_path = args.lexicon or config.get("lexicon") or default_lexicon_path()
    rules_path = args.rules or config.get("rules") or default_code_rules_path()
    patterns_path = args.patterns or config.get("patterns") or default_patterns_path()
    vocab_path = args.vocab or config.get("vocab")
    if not vocab_path:
        raise ConfigurationError("a tag vocabulary file is required (--vocab)")
    return extractors.ExtractorResources(
        lexicon=Lexicon.load(lexicon_path),
        code_rules=CodeTokenRuleSet.from_file(rules_path),
        patterns=extractors.load_word_patterns(patterns_path),
        vocabulary=corpus.load_tag_vocabulary(vocab_path),
        lexrank=extractors.LexRankConfig(summary_size=args.summary_size)
        if hasattr(args, "summary_size") else extractors.LexRankConfig(),
    )


def cmd_fetch(args, config):
    flt = corpus.CorpusFilter(
        tag=args.tag,
        min_question_score=args.min_score,
        date_from=_parse_date(getattr(args, "from")),
        date_to=_parse_date(args.to),
        min_answers=args.min_answers,
    )
    threads = corpus.fetch_threads(flt, args.source)
    corpus.persist_corpus(threads, args.out)
    print(f"fetched {len(threads)} threads -> {args.out}")
    return 0


def cmd_preprocess(args, config):
    threads = corpus.load_corpus(args.corpus)
    count = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for thread in threads:
            for record in extractors.preprocess_thread(thread):
                fh.write(json.dumps({
                    "sentence_id": record.sentence_id,
                    "text": record.text,
                    "char_span": list(record.char_span),
                }, sort_keys=True) + "\n")
                count += 1
    print(f"preprocessed {len(threads)} threads, {count} sentences -> {args.out}")
    return 0


def cmd_extract(args, config):
    threads = corpus.load_corpus(args.corpus)
    resources = _resources(args, config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    pairs = []
    for thread in threads:
        pairs.append((thread, extractors.run_all(thread, resources)))
    records_path = outdir / "extraction.ndj"
    written = extractors.write_extraction_records(records_path, pairs)

    summary = {
        technique.value: sum(result.count(technique) for _, result in pairs)
        for technique in extractors.Technique
    }
    summary_path = outdir / "extraction_summary.json"
    summary_path.write_text(json.dumps({
        "threads": len(pairs), "selected_records": written, "counts": summary,
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"extracted {written} selections over {len(pairs)} threads -> {records_path}")

    results_path = outdir / "results.json"
    results_path.write_text(json.dumps([
        {
            "thread_id": result.thread_id,
            "selections": {sid: sorted(t.value for t in techs)
                           for sid, techs in sorted(result.selections.items())},
        }
        for _, result in pairs
    ], indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def _results_from_records(records: list[dict]) -> list[extractors.ExtractionResult]:
    by_thread: dict[int, dict[str, set[extractors.Technique]]] = {}
    for record in records:
        techs = {extractors.Technique(t) for t in record["techniques"]}
        by_thread.setdefault(record["thread_id"], {})[record["sentence_id"]] = techs
    results = []
    for tid, selections in sorted(by_thread.items()):
        counts = {t: 0 for t in extractors.Technique}
        for techs in selections.values():
            for t in techs:
                counts[t] += 1
        results.append(extractors.ExtractionResult(
            thread_id=tid, selections=selections, counts=counts,
        ))
    return results


def cmd_sample(args, config):
    records = extractors.read_extraction_records(args.extraction)
    results = _results_from_records(records)
    criteria = studysampler.SamplingCriteria(
        sample_size=args.sample_size,
        max_sentences_per_thread=args.max_sentences,
        max_count_spread=args.max_spread,
        seed=args.seed,
    )
    eligible = studysampler.eligible_threads(results)
    evalset = studysampler.sample_balanced(eligible, results, criteria)
    studysampler.save_evaluation_set(evalset, args.out)
    print(f"sampled {len(evalset.thread_ids)} of {len(eligible)} eligible threads "
          f"(summary size {evalset.calibrated_summary_size}) -> {args.out}")
    return 0


def cmd_serve(args, config):
    import uvicorn

    threads = {t.id: t for t in corpus.load_corpus(args.corpus)}
    evalset = studysampler.load_evaluation_set(args.evalset)
    gate = surveysvc.QualityGateSpec.load(args.gate_config)
    content = surveysvc.build_survey_content(threads, evalset, gate)
    store = surveysvc.SurveyStore(
        content, seed=args.seed, log_path=args.store, pilot=args.pilot,
    )
    app = surveysvc.create_app(store)
    print(f"survey service on {args.host}:{args.port} "
          f"({len(content.study_thread_ids)} study threads + gate)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export(args, config):
    threads = {t.id: t for t in corpus.load_corpus(args.corpus)}
    evalset = studysampler.load_evaluation_set(args.evalset)
    gate = surveysvc.QualityGateSpec.load(args.gate_config)
    content = surveysvc.build_survey_content(threads, evalset, gate)
    store = surveysvc.SurveyStore(content, log_path=args.store)
    rows = store.export_records()
    with open(args.out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    print(f"exported {len(rows)} response records -> {args.out}")
    return 0


def cmd_analyze(args, config):
    export_rows = []
    with open(args.export, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                export_rows.append(json.loads(line))
    extraction = extractors.read_extraction_records(args.extraction)
    report = analysis.run_full_analysis(
        export_rows, extraction, alpha=args.alpha, mode=args.mode,
    )
    if args.out:
        analysis.write_report(report, args.out, fmt=args.format)
        print(f"report ({args.format}) -> {args.out}")
    else:
        if args.format == "text":
            sys.stdout.write(analysis.render_report_text(report))
        else:
            json.dump(analysis.report_to_dict(report), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
    return 0


def cmd_validate(args, config):
    """Check config and data files without side effects."""
    problems = []

    def _check(name, fn):
        try:
            fn()
            print(f"ok: {name}")
        except Exception as exc:
            problems.append(f"{name}: {exc}")
            print(f"FAIL: {name}: {exc}")

    lexicon_path = args.lexicon or config.get("lexicon") or default_lexicon_path()
    rules_path = args.rules or config.get("rules") or default_code_rules_path()
    patterns_path = args.patterns or config.get("patterns") or default_patterns_path()
    _check(f"lexicon {lexicon_path}", lambda: Lexicon.load(lexicon_path))
    _check(f"code rules {rules_path}", lambda: CodeTokenRuleSet.from_file(rules_path))
    _check(f"patterns {patterns_path}", lambda: extractors.load_word_patterns(patterns_path))
    vocab_path = args.vocab or config.get("vocab")
    if vocab_path:
        _check(f"vocabulary {vocab_path}", lambda: corpus.load_tag_vocabulary(vocab_path))
    corpus_path = args.corpus or config.get("corpus")
    if corpus_path:
        _check(f"corpus {corpus_path}", lambda: corpus.load_corpus(corpus_path))
    evalset_path = getattr(args, "evalset", None) or config.get("evalset")
    if evalset_path:
        _check(f"evaluation set {evalset_path}",
               lambda: studysampler.load_evaluation_set(evalset_path))
    gate_path = getattr(args, "gate_config", None) or config.get("gate_config")
    if gate_path:
        _check(f"gate config {gate_path}", lambda: surveysvc.QualityGateSpec.load(gate_path))
    return 1 if problems else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soess",
        description="Essential-sentence extraction, survey, and analysis pipeline",
    )
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="fetch threads from the API or an archive")
    p.add_argument("--tag", required=True)
    p.add_argument("--min-score", type=int, default=0, dest="min_score")
    p.add_argument("--from", required=True, help="window start (ISO date)")
    p.add_argument("--to", required=True, help="window end (ISO date)")
    p.add_argument("--min-answers", type=int, default=0, dest="min_answers")
    p.add_argument("--source", default="https://api.stackexchange.com/2.3")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("preprocess", help="dump normalized sentence records")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="run all four techniques over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--patterns")
    p.add_argument("--rules")
    p.add_argument("--lexicon")
    p.add_argument("--vocab")
    p.add_argument("--summary-size", type=int, default=1, dest="summary_size")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sample", help="build a balanced evaluation set")
    p.add_argument("--extraction", required=True, help="extraction.ndj from extract")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-size", type=int, default=20, dest="sample_size")
    p.add_argument("--max-sentences", type=int, default=5, dest="max_sentences")
    p.add_argument("--max-spread", type=int, default=2, dest="max_spread")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the survey HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--evalset", required=True)
    p.add_argument("--gate-config", required=True, dest="gate_config")
    p.add_argument("--store", help="event log path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pilot", action="store_true")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export gate-filtered responses from a store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--evalset", required=True)
    p.add_argument("--gate-config", required=True, dest="gate_config")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("analyze", help="statistical report over an export")
    p.add_argument("--export", required=True)
    p.add_argument("--extraction", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--mode", choices=("pooled", "per_sentence_medians"), default="pooled")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="check config and data files")
    p.add_argument("--corpus")
    p.add_argument("--patterns")
    p.add_argument("--rules")
    p.add_argument("--lexicon")
    p.add_argument("--vocab")
    p.add_argument("--evalset")
    p.add_argument("--gate-config", dest="gate_config")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config) if args.config else {}
    try:
        return args.func(args, config)
    except SoessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
