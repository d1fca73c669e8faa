import random
from datetime import datetime, timezone
from pathlib import Path

import pytest

from soess.corpus import Answer, Thread
from soess.extractors import ExtractorResources, LexRankConfig, load_word_patterns
from soess.nlptext import Lexicon
from soess.preprocess import CodeTokenRuleSet
from soess.resources import default_patterns_path

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.default()


@pytest.fixture(scope="session")
def code_rules():
    return CodeTokenRuleSet.default()


@pytest.fixture(scope="session")
def patterns():
    return load_word_patterns(default_patterns_path())


@pytest.fixture(scope="session")
def tag_vocab_path():
    return FIXTURES / "tags_1000.txt"


@pytest.fixture(scope="session")
def archive_path():
    return FIXTURES / "api_pages.json"


def make_thread(tid, answer_bodies, scores=None, title="T", qscore=1,
                tags=("json",), date=None):
    scores = scores or [len(answer_bodies) - i for i in range(len(answer_bodies))]
    answers = [
        Answer(id=tid * 100 + i, score=scores[i], is_accepted=(i == 0), body_html=body)
        for i, body in enumerate(answer_bodies)
    ]
    return Thread(
        id=tid,
        title=title,
        question_body_html="<p>Question body.</p>",
        question_score=qscore,
        creation_date=date or datetime(2018, 6, 1, tzinfo=timezone.utc),
        tags=set(tags),
        answers=answers,
    )


TECH_WORDS = ["json", "python", "server", "array", "string", "database", "linux", "git"]
PLAIN_NOUNS = ["result", "output", "file", "answer", "method", "approach", "snippet"]
ADJS = ["simple", "useful", "slow", "quick", "common", "different"]

_SENTENCES = [
    lambda r: f"If you use {r.choice(TECH_WORDS)} here, you should try the {r.choice(PLAIN_NOUNS)}.",
    lambda r: f"If you look at the {r.choice(PLAIN_NOUNS)}, it works.",
    lambda r: f"The {r.choice(PLAIN_NOUNS)} is {r.choice(ADJS)}.",
    lambda r: f"Note that the {r.choice(PLAIN_NOUNS)} must be set.",
    lambda r: f"Call <code>parse()</code> before you read the {r.choice(PLAIN_NOUNS)}.",
    lambda r: f"I think this is {r.choice(ADJS)}.",
    lambda r: f"This {r.choice(ADJS)} {r.choice(PLAIN_NOUNS)} explains it.",
    lambda r: f"If the {r.choice(TECH_WORDS)} fails, restart it.",
    lambda r: "Hope this helps.",
    lambda r: f"You could use <a href='https://example.com/x'>the docs</a> for the {r.choice(PLAIN_NOUNS)}.",
]


def make_synthetic_thread(tid, rng: random.Random) -> Thread:
    bodies = []
    for a in range(rng.randint(1, 3)):
        paragraphs = []
        for _p in range(rng.randint(1, 2)):
            n = rng.randint(1, 4)
            sentences = " ".join(rng.choice(_SENTENCES)(rng) for _ in range(n))
            paragraphs.append(f"<p>{sentences}</p>")
        if rng.random() < 0.3:
            paragraphs.append("<pre><code>x = load()\n</code></pre>")
        bodies.append("".join(paragraphs))
    return make_thread(tid, bodies)


def make_synthetic_corpus(n_threads: int, seed: int = 0) -> list[Thread]:
    rng = random.Random(seed)
    return [make_synthetic_thread(1000 + i, rng) for i in range(n_threads)]


@pytest.fixture(scope="session")
def resources(lexicon, code_rules, patterns, tag_vocab_path):
    from soess.corpus import load_tag_vocabulary

    return ExtractorResources(
        lexicon=lexicon,
        code_rules=code_rules,
        patterns=patterns,
        vocabulary=load_tag_vocabulary(tag_vocab_path),
        lexrank=LexRankConfig(),
    )
