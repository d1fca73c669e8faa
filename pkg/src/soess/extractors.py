"""The four essential-sentence techniques and the combined runner.

Each technique maps a preprocessed thread to a set of selected sentence
ids.  contextif is a filter cascade over simpleif sentences, so its
selection is always a subset of simpleif's.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, SoessError
from .nlptext import (
    ConditionalClause,
    Lexicon,
    Token,
    annotate,
    extract_conditional_clause,
    if_noun_relation,
    nouns_in,
    tokenize,
    verb_noun_relation,
)
from .preprocess import (
    CODE_TOKEN,
    CodeTokenRuleSet,
    SentenceRecord,
    detect_code_tokens,
    preprocess_answer,
)


class Technique(Enum):
    WORDPATTERN = "wordpattern"
    LEXRANK = "lexrank"
    SIMPLEIF = "simpleif"
    CONTEXTIF = "contextif"


class ExtractionError(SoessError):
    def __init__(self, technique: Technique, cause: Exception):
        super().__init__(f"{technique.value} failed: {cause}")
        self.technique = technique
        self.cause = cause


@dataclass(frozen=True)
class WordPattern:
    """Lemmas that must all appear in a sentence; requires_code demands a
    CW token as well."""

    words: frozenset[str]
    requires_code: bool = False

    def __post_init__(self):
        if not self.words:
            raise ValueError("word pattern needs at least one lemma")


def load_word_patterns(path) -> list[WordPattern]:
    """Parse one pattern per line: comma-separated lemmas, literal CW marks
    the code-word requirement, # comments."""
    patterns = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",") if p.strip()]
            requires_code = CODE_TOKEN in parts
            words = frozenset(p.lower() for p in parts if p != CODE_TOKEN)
            if not words:
                raise ConfigurationError(f"{path}:{lineno}: pattern has no lemmas")
            patterns.append(WordPattern(words=words, requires_code=requires_code))
    if not patterns:
        raise ConfigurationError(f"{path}: pattern file is empty")
    return patterns


@dataclass
class LexRankConfig:
    summary_size: int = 1
    damping: float = 0.85
    convergence_epsilon: float = 1e-6
    max_iterations: int = 200
    similarity_threshold: float | None = None
    include_question: bool = False

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValueError("damping must be in (0, 1)")
        if self.summary_size < 1:
            raise ValueError("summary_size must be positive")


@dataclass
class LexRankResult:
    scores: dict[str, float]
    converged: bool
    iterations: int


@dataclass
class AnalyzedSentence:
    """A sentence record plus its code-augmented, fully tagged token view."""

    record: SentenceRecord
    text: str
    tokens: list[Token]
    code_surfaces: dict[int, str]
    clause: ConditionalClause | None
    doc_index: int

    @property
    def sentence_id(self) -> str:
        return self.record.sentence_id


def analyze_sentence(
    record: SentenceRecord,
    lexicon: Lexicon,
    code_rules: CodeTokenRuleSet,
    doc_index: int = 0,
) -> AnalyzedSentence:
    plain_tokens = annotate(tokenize(record.text), lexicon)
    record.tokens = [t.surface for t in plain_tokens]
    record.lemmas = [t.lemma for t in plain_tokens]

    aug_text, origins = detect_code_tokens(record.text, code_rules, record.placeholder_origins)
    tokens = annotate(tokenize(aug_text), lexicon)
    code_surfaces = {}
    for tok in tokens:
        if tok.surface == CODE_TOKEN and origins.get(tok.start):
            code_surfaces[tok.index] = origins[tok.start]
    return AnalyzedSentence(
        record=record,
        text=aug_text,
        tokens=tokens,
        code_surfaces=code_surfaces,
        clause=extract_conditional_clause(tokens),
        doc_index=doc_index,
    )


def analyze_thread(
    records: list[SentenceRecord],
    lexicon: Lexicon,
    code_rules: CodeTokenRuleSet,
) -> list[AnalyzedSentence]:
    return [
        analyze_sentence(rec, lexicon, code_rules, doc_index=i)
        for i, rec in enumerate(records)
    ]


# ---------------------------------------------------------------------------
# wordpattern

def run_wordpattern(
    sentences: list[AnalyzedSentence],
    patterns: list[WordPattern],
) -> set[str]:
    """Order-free set containment of pattern lemmas over the augmented
    sentence lemmas."""
    if not patterns:
        raise ConfigurationError("no word patterns loaded")
    selected = set()
    for sent in sentences:
        lemmas = {t.lemma for t in sent.tokens}
        has_code = any(t.pos == "CODE" for t in sent.tokens)
        for pattern in patterns:
            if pattern.words <= lemmas and (not pattern.requires_code or has_code):
                selected.add(sent.sentence_id)
                break
    return selected


# ---------------------------------------------------------------------------
# lexrank

def _content_lemmas(lemmas: list[str]) -> list[str]:
    return [l for l in lemmas if any(c.isalnum() for c in l)]


def _lemma_lists(sentences) -> tuple[list[str], list[list[str]]]:
    ids = []
    lists = []
    for s in sentences:
        if isinstance(s, AnalyzedSentence):
            ids.append(s.sentence_id)
            lists.append(_content_lemmas(s.record.lemmas))
        else:
            sid, lemmas = s
            ids.append(sid)
            lists.append(_content_lemmas(list(lemmas)))
    return ids, lists


def similarity_matrix(lemma_lists: list[list[str]]) -> np.ndarray:
    """idf-modified cosine similarity; idf computed over these sentences."""
    n = len(lemma_lists)
    counts = [Counter(lemmas) for lemmas in lemma_lists]
    df = Counter()
    for c in counts:
        df.update(c.keys())
    idf = {w: math.log(n / d) for w, d in df.items()} if n else {}

    weights = []
    norms = np.zeros(n)
    for i, c in enumerate(counts):
        w = {word: tf * idf[word] for word, tf in c.items()}
        weights.append(w)
        norms[i] = math.sqrt(sum(v * v for v in w.values()))

    sim = np.zeros((n, n))
    for i in range(n):
        if norms[i] == 0:
            continue
        for j in range(i, n):
            if norms[j] == 0:
                continue
            shared = weights[i].keys() & weights[j].keys()
            dot = sum(weights[i][w] * weights[j][w] for w in shared)
            sim[i, j] = sim[j, i] = dot / (norms[i] * norms[j])
    return sim


def transition_matrix(sim: np.ndarray, damping: float, threshold: float | None = None) -> np.ndarray:
    """Row-stochastic damped random-walk matrix over the similarity graph.

    Self-similarity is excluded from the walk; a sentence disconnected
    from the rest becomes a dangling node with uniform transitions rather
    than a mass trap."""
    n = sim.shape[0]
    adj = (sim > threshold).astype(float) if threshold is not None else sim.copy()
    np.fill_diagonal(adj, 0.0)
    rows = adj.sum(axis=1)
    stochastic = np.empty_like(adj)
    for i in range(n):
        if rows[i] == 0:
            stochastic[i, :] = 1.0 / n
        else:
            stochastic[i, :] = adj[i, :] / rows[i]
    return (1.0 - damping) / n + damping * stochastic


def lexrank_scores(sentences, config: LexRankConfig | None = None) -> LexRankResult:
    """Stationary distribution of the damped walk, by power iteration.

    Sentences may be AnalyzedSentence objects or (sentence_id, lemmas)
    pairs.  Scores always sum to 1; non-convergence within max_iterations
    is reported through the result flag.
    """
    config = config or LexRankConfig()
    ids, lists = _lemma_lists(sentences)
    if not ids:
        raise ValueError("lexrank needs at least one sentence")
    n = len(ids)
    if n == 1:
        return LexRankResult(scores={ids[0]: 1.0}, converged=True, iterations=0)

    matrix = transition_matrix(
        similarity_matrix(lists), config.damping, config.similarity_threshold
    )
    p = np.full(n, 1.0 / n)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        nxt = matrix.T @ p
        nxt /= nxt.sum()
        if np.abs(nxt - p).sum() < config.convergence_epsilon:
            p = nxt
            converged = True
            break
        p = nxt
    return LexRankResult(
        scores={sid: float(v) for sid, v in zip(ids, p)},
        converged=converged,
        iterations=iterations,
    )


def run_lexrank(sentences, config: LexRankConfig | None = None) -> list[str]:
    """Top summary_size sentence ids; ties go to earlier document position."""
    config = config or LexRankConfig()
    result = lexrank_scores(sentences, config)
    ids = list(result.scores)
    order = sorted(range(len(ids)), key=lambda i: (-result.scores[ids[i]], i))
    k = min(config.summary_size, len(ids))
    return [ids[i] for i in order[:k]]


# ---------------------------------------------------------------------------
# simpleif / contextif

def run_simpleif(sentences: list[AnalyzedSentence]) -> set[str]:
    """Sentences with a token whose lemma is "if"."""
    return {
        s.sentence_id for s in sentences
        if any(t.lemma == "if" for t in s.tokens)
    }


@dataclass
class ContextIfDecision:
    sentence_id: str
    selected: bool
    stage: str | None = None        # "clause" | "vocabulary" | "grammar" | "heuristics"
    reasons: list[str] = field(default_factory=list)
    clause_nouns: set[str] = field(default_factory=set)


def contextif_decision(sent: AnalyzedSentence, vocab_tags: frozenset[str], lexicon: Lexicon) -> ContextIfDecision:
    """Run the three-step cascade for one sentence and report where (if
    anywhere) it was rejected."""
    clause = sent.clause
    if clause is None:
        return ContextIfDecision(sent.sentence_id, False, stage="clause")

    nouns = nouns_in(clause, sent.tokens, sent.code_surfaces)
    if not nouns & vocab_tags:
        return ContextIfDecision(sent.sentence_id, False, stage="vocabulary", clause_nouns=nouns)

    if not (verb_noun_relation(clause, sent.tokens) or if_noun_relation(clause, sent.tokens)):
        return ContextIfDecision(sent.sentence_id, False, stage="grammar", clause_nouns=nouns)

    reasons = []
    if sent.record.text.rstrip().endswith("?"):
        reasons.append("question_mark")
    start, end = clause.token_span
    clause_tokens = sent.tokens[start:end]
    has_person = any(t.lemma in lexicon.first_person for t in clause_tokens)
    has_modal = any(t.pos == "MODAL" for t in sent.tokens)
    if has_person and not has_modal:
        reasons.append("person_without_modal")
    lowered = sent.record.text.replace("’", "'").lower()
    if any(phrase in lowered for phrase in lexicon.unsure_phrases):
        reasons.append("unsure_phrase")
    if clause.parenthesized:
        reasons.append("parenthesized")
    if reasons:
        return ContextIfDecision(sent.sentence_id, False, stage="heuristics",
                                 reasons=reasons, clause_nouns=nouns)
    return ContextIfDecision(sent.sentence_id, True, clause_nouns=nouns)


def expand_vocabulary(vocab) -> frozenset[str]:
    """Tag set plus suffix-lemmatized tag forms, so plural tags (arrays,
    strings) match the lemmatized nouns of a clause."""
    from .nlptext import _suffix_lemma

    tags = getattr(vocab, "tags", vocab)
    if not tags:
        raise ConfigurationError("contextif needs a non-empty tag vocabulary")
    expanded = set(tags)
    expanded.update(_suffix_lemma(t) for t in tags)
    return frozenset(expanded)


def run_contextif(sentences: list[AnalyzedSentence], vocab, lexicon: Lexicon) -> set[str]:
    """Conditional sentences whose clause carries technical context."""
    tags = expand_vocabulary(vocab)
    return {
        s.sentence_id for s in sentences
        if contextif_decision(s, tags, lexicon).selected
    }


# ---------------------------------------------------------------------------
# combined runner

@dataclass
class ExtractorResources:
    lexicon: Lexicon
    code_rules: CodeTokenRuleSet
    patterns: list[WordPattern]
    vocabulary: object                     # TagVocabulary or any set of tags
    lexrank: LexRankConfig = field(default_factory=LexRankConfig)


@dataclass
class ExtractionResult:
    thread_id: int
    selections: dict[str, set[Technique]]
    counts: dict[Technique, int]
    lexrank_converged: bool = True
    sentence_index: dict[str, SentenceRecord] = field(
        default_factory=dict, repr=False, compare=False
    )

    def count(self, technique: Technique) -> int:
        return self.counts.get(technique, 0)


def preprocess_thread(thread, include_question: bool = False) -> list[SentenceRecord]:
    """Sentence records for all answers, in document order.  When asked,
    question sentences are appended under answer id 0."""
    records = []
    for answer in thread.answers:
        records.extend(preprocess_answer(thread.id, answer.id, answer.body_html))
    if include_question:
        records.extend(preprocess_answer(thread.id, 0, thread.question_body_html))
    return records


def run_all(thread, resources: ExtractorResources) -> ExtractionResult:
    """Run all four techniques on one thread and merge the selections.

    With include_question enabled, question sentences join the lexrank
    graph but are never selected; all selections refer to answer
    sentences.
    """
    include_q = resources.lexrank.include_question
    records = preprocess_thread(thread, include_question=include_q)
    answer_records = [r for r in records if not r.sentence_id.split(":")[1] == "0"] \
        if include_q else records
    sentences = analyze_thread(records, resources.lexicon, resources.code_rules)
    answer_ids = {r.sentence_id for r in answer_records}
    answer_sentences = [s for s in sentences if s.sentence_id in answer_ids]

    selections: dict[str, set[Technique]] = {}

    def _select(technique: Technique, ids):
        for sid in ids:
            selections.setdefault(sid, set()).add(technique)

    def _run(technique: Technique, fn):
        try:
            return fn()
        except SoessError:
            raise
        except Exception as exc:
            raise ExtractionError(technique, exc) from exc

    _select(Technique.WORDPATTERN,
            _run(Technique.WORDPATTERN,
                 lambda: run_wordpattern(answer_sentences, resources.patterns)))
    _select(Technique.SIMPLEIF,
            _run(Technique.SIMPLEIF, lambda: run_simpleif(answer_sentences)))
    _select(Technique.CONTEXTIF,
            _run(Technique.CONTEXTIF,
                 lambda: run_contextif(answer_sentences, resources.vocabulary,
                                       resources.lexicon)))

    lexrank_converged = True
    if sentences:
        def _lexrank():
            nonlocal lexrank_converged
            scores = lexrank_scores(sentences, resources.lexrank)
            lexrank_converged = scores.converged
            ids = list(scores.scores)
            order = sorted(
                range(len(ids)),
                key=lambda i: (-scores.scores[ids[i]], i),
            )
            picked = []
            for i in order:
                if ids[i] in answer_ids:
                    picked.append(ids[i])
                if len(picked) >= min(resources.lexrank.summary_size, len(answer_ids)):
                    break
            return picked

        _select(Technique.LEXRANK, _run(Technique.LEXRANK, _lexrank))

    counts = {tech: 0 for tech in Technique}
    for techniques in selections.values():
        for tech in techniques:
            counts[tech] += 1

    contextif_ids = {sid for sid, t in selections.items() if Technique.CONTEXTIF in t}
    simpleif_ids = {sid for sid, t in selections.items() if Technique.SIMPLEIF in t}
    if not contextif_ids <= simpleif_ids:
        raise ExtractionError(
            Technique.CONTEXTIF,
            AssertionError("contextif selected a sentence without an if token"),
        )

    return ExtractionResult(
        thread_id=thread.id,
        selections=selections,
        counts=counts,
        lexrank_converged=lexrank_converged,
        sentence_index={r.sentence_id: r for r in records},
    )


# ---------------------------------------------------------------------------
# extraction record files

def write_extraction_records(path, pairs) -> int:
    """Line-delimited extraction records for (thread, result) pairs."""
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for thread, result in pairs:
            answer_scores = {a.id: a.score for a in thread.answers}
            for sid in sorted(result.selections):
                techniques = result.selections[sid]
                answer_id = int(sid.split(":")[1])
                record = {
                    "thread_id": result.thread_id,
                    "sentence_id": sid,
                    "techniques": sorted(t.value for t in techniques),
                    "text": result.sentence_index[sid].text,
                    "answer_id": answer_id,
                    "answer_score": answer_scores.get(answer_id, 0),
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                written += 1
    return written


def read_extraction_records(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
