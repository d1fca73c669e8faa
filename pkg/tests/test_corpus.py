import hashlib
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soess.corpus import (
    Answer,
    ConfigurationError,
    CorpusFilter,
    CorpusFormatError,
    CorpusVersionError,
    FetchError,
    Thread,
    apply_answer_filter,
    fetch_threads,
    load_corpus,
    load_tag_vocabulary,
    persist_corpus,
)

UTC = timezone.utc
WINDOW = dict(date_from=datetime(2018, 3, 29, tzinfo=UTC),
              date_to=datetime(2019, 3, 29, tzinfo=UTC))


class TestFetchThreads:
    def test_negative_score_filtered(self, archive_path):
        flt = CorpusFilter(tag="json", min_question_score=0, **WINDOW)
        threads = fetch_threads(flt, archive_path)
        assert [t.id for t in threads] == [101, 102, 103, 105]

    def test_empty_archive(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text('{"pages": []}', encoding="utf-8")
        flt = CorpusFilter(tag="json", **WINDOW)
        assert fetch_threads(flt, path) == []

    def test_window_excludes_everything(self, archive_path):
        flt = CorpusFilter(
            tag="json",
            date_from=datetime(2020, 1, 1, tzinfo=UTC),
            date_to=datetime(2021, 1, 1, tzinfo=UTC),
        )
        assert fetch_threads(flt, archive_path) == []

    def test_answers_sorted_by_score_then_accepted(self, archive_path):
        flt = CorpusFilter(tag="json", **WINDOW)
        threads = {t.id: t for t in fetch_threads(flt, archive_path)}
        scores = [a.score for a in threads[102].answers]
        assert scores == sorted(scores, reverse=True)
        # equal scores: accepted answer first
        first_two = threads[102].answers[:2]
        assert first_two[0].is_accepted and not first_two[1].is_accepted

    def test_malformed_archive_is_fetch_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        flt = CorpusFilter(tag="json", **WINDOW)
        with pytest.raises(FetchError):
            fetch_threads(flt, path)

    def test_determinism(self, archive_path):
        flt = CorpusFilter(tag="json", **WINDOW)
        a = fetch_threads(flt, archive_path)
        b = fetch_threads(flt, archive_path)
        assert [t.id for t in a] == [t.id for t in b]
        assert a == b


class TestAnswerFilter:
    def _threads(self, counts):
        out = []
        for i, n in enumerate(counts):
            answers = [
                Answer(id=i * 10 + j, score=1, is_accepted=False, body_html="<p>x</p>")
                for j in range(n)
            ]
            out.append(Thread(
                id=i, title="t", question_body_html="", question_score=0,
                creation_date=datetime(2018, 6, 1, tzinfo=UTC), tags={"json"},
                answers=answers,
            ))
        return out

    def test_min_two(self):
        threads = self._threads([1, 2, 3])
        kept = apply_answer_filter(threads, 2)
        assert [len(t.answers) for t in kept] == [2, 3]

    def test_min_zero_identity(self):
        threads = self._threads([0, 1, 2])
        assert apply_answer_filter(threads, 0) == threads

    def test_six_of_ten(self):
        counts = [2, 1, 3, 0, 2, 5, 1, 2, 4, 1]
        kept = apply_answer_filter(self._threads(counts), 2)
        assert len(kept) == 6

    def test_monotone(self):
        threads = self._threads([0, 1, 2, 3, 4])
        sizes = [len(apply_answer_filter(threads, k)) for k in range(5)]
        assert sizes == sorted(sizes, reverse=True)


class TestTagVocabulary:
    def test_three_tags(self, tmp_path):
        path = tmp_path / "tags.txt"
        path.write_text("server\nload\nnode.js\n", encoding="utf-8")
        vocab = load_tag_vocabulary(path)
        assert vocab.tags == frozenset({"server", "load", "node.js"})

    def test_case_fold_dedup(self, tmp_path):
        path = tmp_path / "tags.txt"
        path.write_text("json\nJSON\n", encoding="utf-8")
        assert len(load_tag_vocabulary(path)) == 1

    def test_bundled_fixture_has_1000(self, tag_vocab_path):
        vocab = load_tag_vocabulary(tag_vocab_path)
        assert len(vocab) == 1000
        assert vocab.snapshot_date == datetime(2019, 3, 29, tzinfo=UTC)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "tags.txt"
        path.write_text("# only a comment\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_tag_vocabulary(path)


class TestCorpusRoundTrip:
    def test_round_trip_fixture(self, archive_path, tmp_path):
        flt = CorpusFilter(tag="json", **WINDOW)
        threads = fetch_threads(flt, archive_path)
        path = tmp_path / "corpus.ndj"
        persist_corpus(threads, path)
        assert load_corpus(path) == threads

    def test_corrupted_file_errors(self, tmp_path):
        path = tmp_path / "corpus.ndj"
        path.write_text("soess-corpus v1\n{broken\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError):
            load_corpus(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "corpus.ndj"
        path.write_text("soess-corpus v9\n", encoding="utf-8")
        with pytest.raises(CorpusVersionError):
            load_corpus(path)

    def test_byte_stable(self, archive_path, tmp_path):
        flt = CorpusFilter(tag="json", **WINDOW)
        threads = fetch_threads(flt, archive_path)
        p1 = tmp_path / "a.ndj"
        p2 = tmp_path / "b.ndj"
        persist_corpus(threads, p1)
        persist_corpus(threads, p2)
        h = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
        assert h(p1) == h(p2)


class _FakeResponse:
    def __init__(self, payload):
        self._payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self._payload


class TestLiveApiClient:
    def _item(self, qid):
        return {"question_id": qid, "title": "t", "score": 1,
                "creation_date": 1530000000, "tags": ["json"],
                "body": "<p>q</p>",
                "answers": [{"answer_id": qid * 10, "score": 1,
                             "is_accepted": False, "body": "<p>a</p>"}]}

    def test_paginates_until_exhaustion(self, monkeypatch):
        pages = {
            1: {"items": [self._item(1)], "has_more": True, "quota_remaining": 100},
            2: {"items": [self._item(2)], "has_more": False, "quota_remaining": 99},
        }
        calls = []

        def fake_get(self_session, url, params=None, timeout=None):
            calls.append(params["page"])
            return _FakeResponse(pages[params["page"]])

        monkeypatch.setattr("requests.Session.get", fake_get)
        flt = CorpusFilter(tag="json", **WINDOW)
        threads = fetch_threads(flt, "https://api.example.com/2.3")
        assert [t.id for t in threads] == [1, 2]
        assert calls == [1, 2]

    def test_quota_exhaustion_is_throttled_error(self, monkeypatch):
        from soess.corpus import ThrottledError

        def fake_get(self_session, url, params=None, timeout=None):
            return _FakeResponse({"items": [], "has_more": False,
                                  "quota_remaining": 0, "backoff": 12})

        monkeypatch.setattr("requests.Session.get", fake_get)
        flt = CorpusFilter(tag="json", **WINDOW)
        with pytest.raises(ThrottledError) as err:
            fetch_threads(flt, "https://api.example.com/2.3")
        assert err.value.backoff == 12

    def test_network_error_carries_page(self, monkeypatch):
        import requests

        def fake_get(self_session, url, params=None, timeout=None):
            raise requests.ConnectionError("boom")

        monkeypatch.setattr("requests.Session.get", fake_get)
        flt = CorpusFilter(tag="json", **WINDOW)
        with pytest.raises(FetchError) as err:
            fetch_threads(flt, "https://api.example.com/2.3")
        assert err.value.page == 1


def test_filter_validates_window():
    with pytest.raises(ValueError):
        CorpusFilter(tag="json",
                     date_from=datetime(2019, 1, 1, tzinfo=UTC),
                     date_to=datetime(2018, 1, 1, tzinfo=UTC))


def test_score_filter_monotone(archive_path):
    sizes = []
    for min_score in (0, 1, 2, 3):
        flt = CorpusFilter(tag="json", min_question_score=min_score, **WINDOW)
        sizes.append(len(fetch_threads(flt, archive_path)))
    assert sizes == sorted(sizes, reverse=True)


# -- property: round-trip on generated corpora -------------------------------

answers_st = st.lists(
    st.builds(
        Answer,
        id=st.integers(min_value=1, max_value=10**6),
        score=st.integers(min_value=-5, max_value=50),
        is_accepted=st.booleans(),
        body_html=st.text(min_size=1, max_size=30).map(lambda s: f"<p>{s}</p>"),
    ),
    max_size=4,
    unique_by=lambda a: a.id,
)

threads_st = st.lists(
    st.builds(
        Thread,
        id=st.integers(min_value=1, max_value=10**7),
        title=st.text(max_size=20),
        question_body_html=st.text(max_size=30),
        question_score=st.integers(min_value=-3, max_value=100),
        creation_date=st.integers(min_value=0, max_value=2 * 10**9).map(
            lambda ts: datetime.fromtimestamp(ts, tz=UTC)
        ),
        tags=st.sets(st.sampled_from(["json", "python", "java"]), min_size=1),
        answers=answers_st,
    ),
    max_size=5,
    unique_by=lambda t: t.id,
)


@settings(max_examples=40)
@given(threads=threads_st)
def test_round_trip_property(tmp_path_factory, threads):
    path = tmp_path_factory.mktemp("corpus") / "c.ndj"
    persist_corpus(threads, path)
    assert load_corpus(path) == threads
