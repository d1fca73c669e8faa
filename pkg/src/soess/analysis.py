"""Quantitative analysis of the survey ratings.

Rating medians and highly-rated thresholds, per-technique tables, overlap
(Venn) regions, pairwise rank-sum tests with Benjamini-Hochberg adjustment
and r effect sizes, Fuzzy Kappa agreement, and Spearman correlation.

The rating comparison uses the unpaired two-sample rank-sum (Mann-Whitney)
test.  For small samples (both sides at most 8) the two-sided p-value is
computed by exact permutation enumeration; larger samples use the normal
approximation with midrank tie correction and continuity correction.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

from .extractors import Technique

QUESTIONS = ("sr1", "sr2", "sr3")

#: Highly-rated thresholds: sr1 asks for the exact "meaningful and useful"
#: category (median == 3); sr2/sr3 are 5-point agreement scales where a
#: median of at least "agree" (4) counts.
SR1_TARGET = 3
AGREE_THRESHOLD = 4


def median_rating(values) -> float:
    """Standard median; mean of the middle two for even counts."""
    data = sorted(values)
    if not data:
        raise ValueError("median of an empty rating multiset is undefined")
    n = len(data)
    mid = n // 2
    if n % 2:
        return float(data[mid])
    return (data[mid - 1] + data[mid]) / 2.0


@dataclass
class RatingMatrix:
    """Ratings per question per sentence, plus sentence metadata."""

    ratings: dict[str, dict[str, list[int]]]        # question -> sentence_id -> ratings
    techniques: dict[str, set[Technique]]           # sentence_id -> techniques
    answer_scores: dict[str, int]                   # sentence_id -> answer score

    @property
    def sentence_ids(self) -> set[str]:
        ids = set()
        for per_sentence in self.ratings.values():
            ids.update(per_sentence)
        return ids


def rating_matrix_from_records(
    export_records: list[dict],
    extraction_records: list[dict],
) -> RatingMatrix:
    """Build the matrix from survey export rows and extraction records."""
    techniques = {}
    answer_scores = {}
    for rec in extraction_records:
        sid = rec["sentence_id"]
        techniques[sid] = {Technique(t) for t in rec["techniques"]}
        answer_scores[sid] = rec.get("answer_score", 0)

    ratings: dict[str, dict[str, list[int]]] = {q: {} for q in QUESTIONS}
    for row in export_records:
        sid = row["sentence_id"]
        for q in QUESTIONS:
            if q in row and row[q] is not None:
                ratings[q].setdefault(sid, []).append(int(row[q]))
        if "answer_score" in row:
            answer_scores.setdefault(sid, row["answer_score"])
    return RatingMatrix(ratings=ratings, techniques=techniques, answer_scores=answer_scores)


def highly_rated(matrix: RatingMatrix, question: str) -> set[str]:
    """sr1: median exactly 3; sr2/sr3: median at least 4."""
    if question not in QUESTIONS:
        raise ValueError(f"unknown question {question!r}")
    result = set()
    for sid, values in matrix.ratings[question].items():
        med = median_rating(values)
        if question == "sr1":
            if med == SR1_TARGET:
                result.add(sid)
        elif med >= AGREE_THRESHOLD:
            result.add(sid)
    return result


@dataclass
class TechniqueRow:
    sentences: int
    highly_rated: dict[str, int]
    percentage: dict[str, float]


@dataclass
class TechniqueStats:
    rows: dict[Technique, TechniqueRow]
    total: TechniqueRow


def technique_table(matrix: RatingMatrix) -> TechniqueStats:
    """Per-technique sentence counts and highly-rated counts/fractions,
    plus the unique-sentence totals row."""
    high = {q: highly_rated(matrix, q) for q in QUESTIONS}
    all_ids = matrix.sentence_ids

    def _row(ids) -> TechniqueRow:
        n = len(ids)
        counts = {q: len(ids & high[q]) for q in QUESTIONS}
        pct = {q: (counts[q] / n if n else 0.0) for q in QUESTIONS}
        return TechniqueRow(sentences=n, highly_rated=counts, percentage=pct)

    rows = {}
    for tech in Technique:
        ids = {sid for sid in all_ids if tech in matrix.techniques.get(sid, set())}
        rows[tech] = _row(ids)
    return TechniqueStats(rows=rows, total=_row(all_ids))


@dataclass
class OverlapResult:
    regions: dict[str, int]
    multi_technique: int


def overlap_sets(techniques: dict[str, set[Technique]]) -> OverlapResult:
    """Counts per exact technique combination, keyed "a+b" in a fixed
    order, plus the number of sentences found by more than one."""
    order = [t.value for t in Technique]
    regions: Counter = Counter()
    multi = 0
    for techs in techniques.values():
        if not techs:
            continue
        names = sorted((t.value for t in techs), key=order.index)
        regions["+".join(names)] += 1
        if len(techs) > 1:
            multi += 1
    return OverlapResult(regions=dict(regions), multi_technique=multi)


# ---------------------------------------------------------------------------
# rank statistics

def _midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


class RankSumResult(NamedTuple):
    u: float
    z: float
    p: float


EXACT_MAX_PER_SIDE = 8


def _exact_two_sided_p(ranks: list[float], n1: int, u_obs: float) -> float:
    """Two-sided p by full enumeration of group assignments.

    The permutation distribution of U is symmetric around n1*n2/2, so the
    two-sided p is the probability of a U at least as far from the mean.
    """
    n = len(ranks)
    n2 = n - n1
    mu = n1 * n2 / 2.0
    target = abs(u_obs - mu) - 1e-12
    offset = n1 * (n1 + 1) / 2.0
    hits = 0
    total = 0
    for combo in itertools.combinations(range(n), n1):
        u = sum(ranks[i] for i in combo) - offset
        total += 1
        if abs(u - mu) >= target:
            hits += 1
    return hits / total


def ranksum_test(sample_a, sample_b) -> RankSumResult:
    """Unpaired two-sample rank-sum test with midrank ties.

    Returns (U, z, two-sided p); U is the statistic of sample_a.  The z
    value always comes from the tie-corrected normal approximation with
    continuity correction, so an effect size is available even on the
    exact branch.
    """
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise ValueError("both samples must be nonempty")
    n1, n2 = len(a), len(b)
    pooled = a + b
    ranks = _midranks(pooled)
    u = sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    n = n1 + n2
    tie_counts = Counter(pooled).values()
    tie_term = sum(t ** 3 - t for t in tie_counts)
    if n > 1:
        variance = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    else:
        variance = 0.0

    if variance <= 0:
        # all pooled values equal: no evidence either way
        return RankSumResult(u=u, z=0.0, p=1.0)

    sd = math.sqrt(variance)
    diff = u - mu
    if diff == 0:
        z = 0.0
    else:
        z = (diff - math.copysign(0.5, diff)) / sd

    if max(n1, n2) <= EXACT_MAX_PER_SIDE:
        p = _exact_two_sided_p(ranks, n1, u)
    else:
        p = min(1.0, 2.0 * _norm_sf(abs(z)))
    return RankSumResult(u=u, z=z, p=p)


def bh_adjust(p_values) -> list[float]:
    """Benjamini-Hochberg FDR adjustment, input order preserved."""
    ps = list(p_values)
    m = len(ps)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: ps[i])
    adjusted = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running = min(running, ps[idx] * m / rank)
        adjusted[idx] = min(1.0, running)
    return adjusted


def effect_size(z: float, n_total: int) -> float:
    """r = |z| / sqrt(N)."""
    if n_total <= 0:
        raise ValueError("n_total must be positive")
    return abs(z) / math.sqrt(n_total)


@dataclass
class KappaResult:
    observed: float
    chance: float
    kappa: float
    degenerate: bool = False


def _jaccard(a: frozenset, b: frozenset) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def fuzzy_kappa(coder_a, coder_b, chance_model: str = "pooled") -> KappaResult:
    """Chance-corrected agreement for multi-label assignments.

    Per-item agreement is the Jaccard overlap of the two label sets.
    Chance agreement is the expected Jaccard of two label sets drawn
    independently: with the default "pooled" model both draws come from
    the combined empirical label-set distribution of the two coders;
    with "product" each draw comes from its own coder's distribution
    (Cohen-style marginals).
    """
    a_sets = [frozenset(x) for x in coder_a]
    b_sets = [frozenset(x) for x in coder_b]
    if len(a_sets) != len(b_sets):
        raise ValueError("coders must label the same number of items")
    if not a_sets:
        raise ValueError("no items to compare")
    if any(not s for s in a_sets + b_sets):
        raise ValueError("label sets must be nonempty")

    n = len(a_sets)
    observed = sum(_jaccard(x, y) for x, y in zip(a_sets, b_sets)) / n

    if chance_model == "pooled":
        pooled = Counter(a_sets) + Counter(b_sets)
        total = 2 * n
        chance = sum(
            (ca / total) * (cb / total) * _jaccard(sa, sb)
            for sa, ca in pooled.items()
            for sb, cb in pooled.items()
        )
    elif chance_model == "product":
        dist_a = Counter(a_sets)
        dist_b = Counter(b_sets)
        chance = sum(
            (ca / n) * (cb / n) * _jaccard(sa, sb)
            for sa, ca in dist_a.items()
            for sb, cb in dist_b.items()
        )
    else:
        raise ValueError(f"unknown chance model {chance_model!r}")
    if chance >= 1.0 - 1e-15:
        return KappaResult(observed=observed, chance=1.0,
                           kappa=1.0 if observed >= 1.0 - 1e-15 else 0.0,
                           degenerate=True)
    kappa = (observed - chance) / (1.0 - chance)
    return KappaResult(observed=observed, chance=chance, kappa=kappa)


def spearman(x, y) -> float:
    """Pearson correlation of midranks; NaN when either side has zero
    rank variance."""
    xs = list(x)
    ys = list(y)
    if len(xs) != len(ys) or not xs:
        raise ValueError("need two equal-length nonempty vectors")
    rx = _midranks(xs)
    ry = _midranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return math.nan
    return cov / math.sqrt(vx * vy)


# ---------------------------------------------------------------------------
# full report

@dataclass
class PairwiseTest:
    question: str
    technique_a: Technique
    technique_b: Technique
    n_a: int
    n_b: int
    u: float
    z: float
    p_raw: float
    p_adjusted: float = math.nan
    effect_r: float = 0.0
    significant: bool = False


@dataclass
class AnalysisReport:
    table: TechniqueStats | None
    pairwise: list[PairwiseTest]
    overlap_all: OverlapResult | None
    overlap_highly_rated: dict[str, OverlapResult]
    spearman_vs_answer_score: dict[str, float]
    alpha: float
    mode: str
    no_data: bool = False
    notes: list[str] = field(default_factory=list)


def _technique_samples(matrix: RatingMatrix, question: str, mode: str) -> dict[Technique, list]:
    samples: dict[Technique, list] = {t: [] for t in Technique}
    for sid, values in matrix.ratings[question].items():
        techs = matrix.techniques.get(sid, set())
        for tech in techs:
            if mode == "per_sentence_medians":
                samples[tech].append(median_rating(values))
            else:
                samples[tech].extend(values)
    return samples


def run_full_analysis(
    export_records: list[dict],
    extraction_records: list[dict],
    alpha: float = 0.05,
    mode: str = "pooled",
) -> AnalysisReport:
    """The full deterministic report over a quality-gate-filtered export.

    mode "pooled" compares the raw per-participant ratings of each
    technique's sentences; "per_sentence_medians" compares one median per
    sentence instead.
    """
    if mode not in ("pooled", "per_sentence_medians"):
        raise ValueError(f"unknown mode {mode!r}")
    if not export_records:
        return AnalysisReport(
            table=None, pairwise=[], overlap_all=None, overlap_highly_rated={},
            spearman_vs_answer_score={}, alpha=alpha, mode=mode, no_data=True,
            notes=["export contained no response records"],
        )

    matrix = rating_matrix_from_records(export_records, extraction_records)
    table = technique_table(matrix)
    notes = []

    pairwise: list[PairwiseTest] = []
    pairs = list(itertools.combinations(list(Technique), 2))
    for question in QUESTIONS:
        samples = _technique_samples(matrix, question, mode)
        question_tests = []
        for ta, tb in pairs:
            if not samples[ta] or not samples[tb]:
                notes.append(f"{question}: skipped {ta.value} vs {tb.value} (empty sample)")
                continue
            res = ranksum_test(samples[ta], samples[tb])
            n_a, n_b = len(samples[ta]), len(samples[tb])
            question_tests.append(PairwiseTest(
                question=question, technique_a=ta, technique_b=tb,
                n_a=n_a, n_b=n_b, u=res.u, z=res.z, p_raw=res.p,
                effect_r=effect_size(res.z, n_a + n_b),
            ))
        adjusted = bh_adjust([t.p_raw for t in question_tests])
        for test, p_adj in zip(question_tests, adjusted):
            test.p_adjusted = p_adj
            test.significant = p_adj <= alpha
        pairwise.extend(question_tests)

    overlap_all = overlap_sets(matrix.techniques)
    overlap_high = {}
    for question in QUESTIONS:
        ids = highly_rated(matrix, question)
        overlap_high[question] = overlap_sets(
            {sid: matrix.techniques.get(sid, set()) for sid in ids}
        )

    spearman_scores = {}
    for question in QUESTIONS:
        xs, ys = [], []
        for sid, values in matrix.ratings[question].items():
            score = matrix.answer_scores.get(sid)
            if score is None:
                continue
            for v in values:
                xs.append(v)
                ys.append(score)
        spearman_scores[question] = spearman(xs, ys) if xs else math.nan

    return AnalysisReport(
        table=table, pairwise=pairwise, overlap_all=overlap_all,
        overlap_highly_rated=overlap_high,
        spearman_vs_answer_score=spearman_scores,
        alpha=alpha, mode=mode, notes=notes,
    )


def report_to_dict(report: AnalysisReport) -> dict:
    def _row(row: TechniqueRow) -> dict:
        return {
            "sentences": row.sentences,
            "highly_rated": dict(row.highly_rated),
            "percentage": {q: round(v, 6) for q, v in row.percentage.items()},
        }

    data: dict = {
        "alpha": report.alpha,
        "mode": report.mode,
        "no_data": report.no_data,
        "notes": report.notes,
    }
    if report.table is not None:
        data["table"] = {t.value: _row(r) for t, r in report.table.rows.items()}
        data["table"]["total"] = _row(report.table.total)
    data["pairwise"] = [
        {
            "question": t.question,
            "pair": [t.technique_a.value, t.technique_b.value],
            "n": [t.n_a, t.n_b],
            "u": t.u,
            "z": round(t.z, 9),
            "p_raw": round(t.p_raw, 9),
            "p_adjusted": round(t.p_adjusted, 9),
            "effect_r": round(t.effect_r, 9),
            "significant": t.significant,
        }
        for t in report.pairwise
    ]
    if report.overlap_all is not None:
        data["overlap"] = {
            "all": {"regions": report.overlap_all.regions,
                    "multi_technique": report.overlap_all.multi_technique},
            "highly_rated": {
                q: {"regions": o.regions, "multi_technique": o.multi_technique}
                for q, o in report.overlap_highly_rated.items()
            },
        }
    data["spearman_vs_answer_score"] = {
        q: (None if math.isnan(v) else round(v, 9))
        for q, v in report.spearman_vs_answer_score.items()
    }
    return data


def render_report_text(report: AnalysisReport) -> str:
    """Human-readable rendering of the report."""
    lines = []
    if report.no_data:
        lines.append("No response data: nothing to analyze.")
        return "\n".join(lines) + "\n"

    lines.append("== Technique table ==")
    header = f"{'technique':<14}{'sentences':>10}" + "".join(
        f"{q + ' high':>14}" for q in QUESTIONS
    )
    lines.append(header)
    rows = list(report.table.rows.items()) + [("total", report.table.total)]
    for tech, row in rows:
        name = tech.value if isinstance(tech, Technique) else tech
        cells = "".join(
            f"{row.highly_rated[q]:>8} ({row.percentage[q] * 100:3.0f}%)"
            for q in QUESTIONS
        )
        lines.append(f"{name:<14}{row.sentences:>10}{cells}")

    lines.append("")
    lines.append(f"== Pairwise rank-sum tests (alpha={report.alpha}, {report.mode}) ==")
    for t in report.pairwise:
        flag = " *" if t.significant else ""
        lines.append(
            f"{t.question}  {t.technique_a.value:<12} vs {t.technique_b.value:<12}"
            f" U={t.u:<8g} z={t.z:+.3f} p={t.p_raw:.4f}"
            f" p_adj={t.p_adjusted:.4f} r={t.effect_r:.3f}{flag}"
        )

    lines.append("")
    lines.append("== Overlap (all rated sentences) ==")
    for key in sorted(report.overlap_all.regions):
        lines.append(f"{key}: {report.overlap_all.regions[key]}")
    lines.append(f"sentences found by >1 technique: {report.overlap_all.multi_technique}")
    for q, overlap in report.overlap_highly_rated.items():
        lines.append(f"-- highly rated ({q}): multi-technique {overlap.multi_technique}")

    lines.append("")
    lines.append("== Spearman rating vs answer score ==")
    for q, rho in report.spearman_vs_answer_score.items():
        shown = "undefined" if math.isnan(rho) else f"{rho:+.4f}"
        lines.append(f"{q}: {shown}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def write_report(report: AnalysisReport, path, fmt: str = "records") -> None:
    path = str(path)
    if fmt == "records":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif fmt == "text":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_report_text(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
