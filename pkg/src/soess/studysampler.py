"""Evaluation-set construction: eligibility, balanced sampling, and
summary-size calibration.

A thread is eligible when wordpattern, simpleif and contextif each found at
least one sentence (lexrank always finds one, so it is excluded from the
criterion).  Sampling rejects threads whose per-technique counts are badly
imbalanced or whose total sentence load would overburden raters.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import SoessError
from .extractors import ExtractionResult, Technique

BALANCED_TECHNIQUES = (Technique.WORDPATTERN, Technique.SIMPLEIF, Technique.CONTEXTIF)


class SamplingInfeasibleError(SoessError):
    """The eligible pool ran out before the sample was filled."""

    def __init__(self, accepted: int, wanted: int):
        super().__init__(
            f"pool exhausted: accepted {accepted} of {wanted} requested threads"
        )
        self.accepted = accepted
        self.wanted = wanted


@dataclass
class SamplingCriteria:
    sample_size: int = 20
    max_sentences_per_thread: int = 5
    max_count_spread: int = 2
    max_count_ratio: float = 2.0
    seed: int = 0


@dataclass
class EvaluationSet:
    thread_ids: list[int]
    counts: dict[int, dict[Technique, int]]
    sentence_ids: dict[int, dict[Technique, list[str]]]
    calibrated_summary_size: int = 1
    criteria: SamplingCriteria = field(default_factory=SamplingCriteria)


def eligible_threads(results: list[ExtractionResult]) -> set[int]:
    """Threads where all three non-lexrank techniques fired."""
    return {
        r.thread_id for r in results
        if all(r.count(t) >= 1 for t in BALANCED_TECHNIQUES)
    }


def is_balanced(result: ExtractionResult, criteria: SamplingCriteria) -> bool:
    """The acceptance predicate applied to each sampled candidate."""
    counts = [result.count(t) for t in BALANCED_TECHNIQUES]
    low, high = min(counts), max(counts)
    if low < 1:
        return False
    if high - low > criteria.max_count_spread:
        return False
    if high / low > criteria.max_count_ratio:
        return False
    if len(result.selections) > criteria.max_sentences_per_thread:
        return False
    return True


def sample_balanced(
    eligible: set[int],
    results: list[ExtractionResult],
    criteria: SamplingCriteria,
) -> EvaluationSet:
    """Seeded sampling without replacement with rejection of imbalanced
    threads.  Deterministic for a given seed; raises when the pool is
    exhausted before sample_size threads are accepted."""
    by_id = {r.thread_id: r for r in results}
    pool = sorted(eligible)
    if len(pool) < criteria.sample_size:
        raise SamplingInfeasibleError(accepted=0, wanted=criteria.sample_size)

    rng = random.Random(criteria.seed)
    accepted: list[int] = []
    while pool and len(accepted) < criteria.sample_size:
        candidate = pool.pop(rng.randrange(len(pool)))
        if is_balanced(by_id[candidate], criteria):
            accepted.append(candidate)
    if len(accepted) < criteria.sample_size:
        raise SamplingInfeasibleError(accepted=len(accepted), wanted=criteria.sample_size)

    counts = {}
    sentence_ids = {}
    for tid in accepted:
        result = by_id[tid]
        counts[tid] = {t: result.count(t) for t in BALANCED_TECHNIQUES}
        sentence_ids[tid] = {
            t: sorted(sid for sid, techs in result.selections.items() if t in techs)
            for t in Technique
        }
    evalset = EvaluationSet(
        thread_ids=accepted,
        counts=counts,
        sentence_ids=sentence_ids,
        criteria=criteria,
    )
    evalset.calibrated_summary_size = calibrate_summary_size(evalset)
    return evalset


def calibrate_summary_size(evalset: EvaluationSet) -> int:
    """Median of the per-thread, per-technique counts, rounded half-up,
    never below one."""
    values = [
        evalset.counts[tid][t]
        for tid in evalset.thread_ids
        for t in BALANCED_TECHNIQUES
    ]
    if not values:
        return 1
    median = statistics.median(values)
    return max(1, int(median + 0.5))


def save_evaluation_set(evalset: EvaluationSet, path) -> None:
    header = {
        "criteria": asdict(evalset.criteria),
        "calibrated_summary_size": evalset.calibrated_summary_size,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for tid in evalset.thread_ids:
        record = {
            "thread_id": tid,
            "counts": {t.value: n for t, n in evalset.counts[tid].items()},
            "sentence_ids": {t.value: ids for t, ids in evalset.sentence_ids[tid].items()},
        }
        lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_evaluation_set(path) -> EvaluationSet:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if not lines or not lines[0].strip():
        raise SoessError(f"evaluation set file {path} is empty")
    header = json.loads(lines[0])
    criteria = SamplingCriteria(**header["criteria"])
    thread_ids = []
    counts = {}
    sentence_ids = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        record = json.loads(line)
        tid = record["thread_id"]
        thread_ids.append(tid)
        counts[tid] = {Technique(t): n for t, n in record["counts"].items()}
        sentence_ids[tid] = {Technique(t): ids for t, ids in record["sentence_ids"].items()}
    return EvaluationSet(
        thread_ids=thread_ids,
        counts=counts,
        sentence_ids=sentence_ids,
        calibrated_summary_size=header["calibrated_summary_size"],
        criteria=criteria,
    )
