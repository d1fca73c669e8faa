import json
import threading

import pytest
from fastapi.testclient import TestClient

from soess.errors import ConfigurationError
from soess.extractors import Technique
from soess.studysampler import EvaluationSet, SamplingCriteria
from soess.surveysvc import (
    QualityGateSpec,
    SurveyStore,
    build_survey_content,
    create_app,
    display_sentence_text,
    render_answer_html,
    sanitize_html,
)

from conftest import make_thread

GATE_TID = 99
BQ = {"bq1": "yes", "bq2": "Developer", "bq3": "5", "bq4": "web",
      "bq5": "Intermediate", "bq6": "yes", "bq7": "no"}


def study_thread(tid):
    return make_thread(tid, [
        f"<p>This is context {tid}. If you use <code>json.load()</code> here, it works "
        f"because the parser is strict.</p>",
        "<p>Another answer with a plain sentence. Use the docs.</p>",
    ])


def gate_thread():
    return make_thread(GATE_TID, [
        "<p>Some context sentence first. Hope this helps.</p>",
        "<p>Second answer text here.</p>",
    ])


def build_content(n_threads=5):
    threads = {tid: study_thread(tid) for tid in range(1, n_threads + 1)}
    threads[GATE_TID] = gate_thread()
    evalset = EvaluationSet(
        thread_ids=list(range(1, n_threads + 1)),
        counts={tid: {Technique.WORDPATTERN: 1, Technique.SIMPLEIF: 1,
                      Technique.CONTEXTIF: 1} for tid in range(1, n_threads + 1)},
        sentence_ids={tid: {
            Technique.WORDPATTERN: [f"{tid}:{tid * 100}:0:0"],
            Technique.SIMPLEIF: [f"{tid}:{tid * 100}:0:1"],
            Technique.CONTEXTIF: [f"{tid}:{tid * 100}:0:1"],
            Technique.LEXRANK: [f"{tid}:{tid * 100 + 1}:0:0"],
        } for tid in range(1, n_threads + 1)},
        criteria=SamplingCriteria(),
    )
    gate = QualityGateSpec(thread_id=GATE_TID, sentence_id=f"{GATE_TID}:9900:0:1")
    return build_survey_content(threads, evalset, gate)


@pytest.fixture()
def store(tmp_path):
    return SurveyStore(build_content(), seed=1, log_path=tmp_path / "events.ndj")


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


def run_participant(client, answers=None, gate_sr3=1, sr3=4):
    """Complete one full survey session; returns (token, assignment)."""
    r = client.post("/sessions", json={"answers": answers or BQ})
    assert r.status_code == 201, r.text
    token = r.json()["token"]
    assignment = client.get(f"/sessions/{token}/assignment").json()
    gate_sid = f"{GATE_TID}:9900:0:1"
    for tid in assignment["threads"]:
        for sid in assignment["highlights"][str(tid)]:
            value = gate_sr3 if sid == gate_sid else sr3
            r = client.post("/responses", json={
                "token": token, "sentence_id": sid,
                "sr1": 3, "sr2": 4, "sr3": value, "sr4_justification": "because",
            })
            assert r.status_code == 200, r.text
    r = client.post(f"/sessions/{token}/finalize",
                    json={"eq1": "a", "eq2": "b", "eq3": "c", "eq4": "d", "eq5": "e"})
    assert r.status_code == 200, r.text
    return token, assignment


class TestCreateSession:
    def test_intermediate_yes_gets_token(self, client):
        r = client.post("/sessions", json={"answers": BQ})
        assert r.status_code == 201
        assert len(r.json()["token"]) >= 16

    def test_no_experience_screened(self, client):
        answers = {**BQ, "bq5": "No experience at all using json"}
        r = client.post("/sessions", json={"answers": answers})
        assert r.status_code == 422
        assert r.json()["detail"] == "screened_out"

    def test_no_so_usage_screened(self, client):
        r = client.post("/sessions", json={"answers": {**BQ, "bq6": "no"}})
        assert r.status_code == 422

    def test_idempotent_client_ref(self, client):
        r1 = client.post("/sessions", json={"answers": BQ, "client_ref": "c1"})
        r2 = client.post("/sessions", json={"answers": BQ, "client_ref": "c1"})
        assert r1.json()["token"] == r2.json()["token"]

    def test_conflicting_client_ref(self, client):
        client.post("/sessions", json={"answers": BQ, "client_ref": "c2"})
        r = client.post("/sessions",
                        json={"answers": {**BQ, "bq2": "Other"}, "client_ref": "c2"})
        assert r.status_code == 409

    def test_incomplete_answers_rejected(self, client):
        r = client.post("/sessions", json={"answers": {"bq1": "yes"}})
        assert r.status_code == 422


class TestAssignment:
    def test_greedy_lowest_counts_first(self, store):
        # preload counts {1:0, 2:0, 3:1, 4:2, 5:2}
        store.completed_counts.update({3: 1, 4: 2, 5: 2})
        token = store.create_session(BQ).token
        assignment = store.get_assignment(token)
        study = set(assignment.study_thread_ids)
        assert {1, 2} <= study
        assert study <= {1, 2, 3}

    def test_gate_present_exactly_once(self, store):
        token = store.create_session(BQ).token
        assignment = store.get_assignment(token)
        assert assignment.thread_ids.count(GATE_TID) == 1
        assert len(assignment.thread_ids) == 4
        assert len(set(assignment.thread_ids)) == 4

    def test_unknown_token_404(self, client):
        assert client.get("/sessions/nope/assignment").status_code == 404

    def test_gate_position_varies(self, store):
        positions = set()
        for _ in range(12):
            token = store.create_session(BQ).token
            assignment = store.get_assignment(token)
            positions.add(assignment.thread_ids.index(GATE_TID))
        assert len(positions) > 1


class TestResponses:
    def test_valid_ack(self, client):
        token = client.post("/sessions", json={"answers": BQ}).json()["token"]
        assignment = client.get(f"/sessions/{token}/assignment").json()
        sid = assignment["highlights"][str(assignment["threads"][0])][0]
        r = client.post("/responses", json={"token": token, "sentence_id": sid,
                                            "sr1": 3, "sr2": 4, "sr3": 4,
                                            "sr4_justification": "text"})
        assert r.status_code == 200

    def test_out_of_range_rating(self, client):
        token = client.post("/sessions", json={"answers": BQ}).json()["token"]
        assignment = client.get(f"/sessions/{token}/assignment").json()
        sid = assignment["highlights"][str(assignment["threads"][0])][0]
        r = client.post("/responses", json={"token": token, "sentence_id": sid,
                                            "sr1": 3, "sr2": 6, "sr3": 4,
                                            "sr4_justification": "x"})
        assert r.status_code == 422

    def test_sentence_not_assigned(self, client):
        token = client.post("/sessions", json={"answers": BQ}).json()["token"]
        client.get(f"/sessions/{token}/assignment")
        r = client.post("/responses", json={"token": token, "sentence_id": "1:1:9:9",
                                            "sr1": 3, "sr2": 4, "sr3": 4,
                                            "sr4_justification": "x"})
        assert r.status_code == 422

    def test_revision_before_finalize(self, store):
        token = store.create_session(BQ).token
        assignment = store.get_assignment(token)
        sid = assignment.all_sentence_ids()[0]
        store.submit_response(token, sid, 1, 1, 1, "first")
        store.submit_response(token, sid, 3, 5, 5, "revised")
        assert store.responses[(token, sid)]["sr3"] == 5

    def test_rejected_after_finalize(self, client):
        token, assignment = run_participant(client)
        sid = assignment["highlights"][str(assignment["threads"][0])][0]
        r = client.post("/responses", json={"token": token, "sentence_id": sid,
                                            "sr1": 1, "sr2": 1, "sr3": 1,
                                            "sr4_justification": "late"})
        assert r.status_code == 422


class TestFinalize:
    def test_missing_sentences_listed(self, client):
        token = client.post("/sessions", json={"answers": BQ}).json()["token"]
        assignment = client.get(f"/sessions/{token}/assignment").json()
        all_ids = [sid for tid in assignment["threads"]
                   for sid in assignment["highlights"][str(tid)]]
        for sid in all_ids[:-1]:
            client.post("/responses", json={"token": token, "sentence_id": sid,
                                            "sr1": 3, "sr2": 4, "sr3": 4,
                                            "sr4_justification": "t"})
        r = client.post(f"/sessions/{token}/finalize", json={})
        assert r.status_code == 422
        assert r.json()["missing"] == [all_ids[-1]]

    def test_complete_session(self, client):
        token, _ = run_participant(client)
        r = client.post(f"/sessions/{token}/finalize", json={})
        assert r.json() == {"token": token, "status": "completed"}

    def test_double_finalize_idempotent(self, client, store):
        token, _ = run_participant(client)
        counts_before = dict(store.completed_counts)
        r = client.post(f"/sessions/{token}/finalize", json={})
        assert r.status_code == 200
        assert store.completed_counts == counts_before


class TestQualityGate:
    def test_strongly_disagree_kept(self, client, store):
        token, _ = run_participant(client, gate_sr3=1)
        assert token in store.apply_quality_gate()

    def test_agree_rejected(self, client, store):
        token, _ = run_participant(client, gate_sr3=4)
        assert token not in store.apply_quality_gate()
        assert store.participants[token].status == "rejected_at_gate"

    def test_cohort_seven_of_ten(self, client, store):
        tokens = []
        for i in range(10):
            gate_value = 4 if i < 3 else 2
            token, _ = run_participant(client, gate_sr3=gate_value)
            tokens.append(token)
        kept = store.apply_quality_gate()
        assert len(kept) == 7
        rows = store.export_records()
        assert {row["token"] for row in rows} == set(tokens[3:])
        assert all(row["thread_id"] != GATE_TID for row in rows)


class TestPersistence:
    def test_replay_restores_state(self, tmp_path):
        log = tmp_path / "events.ndj"
        store = SurveyStore(build_content(), seed=3, log_path=log)
        client = TestClient(create_app(store))
        token, _ = run_participant(client)

        revived = SurveyStore(build_content(), seed=3, log_path=log)
        assert revived.participants[token].status == "completed"
        assert revived.completed_counts == store.completed_counts
        assert revived.export_records() == store.export_records()

    def test_snapshot_is_versioned(self, store):
        snapshot = store.snapshot()
        assert snapshot["version"] == 1

    def test_bad_header_rejected(self, tmp_path):
        log = tmp_path / "events.ndj"
        log.write_text('{"format": "other", "version": 9}\n', encoding="utf-8")
        with pytest.raises(ConfigurationError):
            SurveyStore(build_content(), log_path=log)


class TestRendering:
    def test_highlight_markers_no_technique_names(self, store):
        payload = store.content.threads[1].payload()
        html = json.dumps(payload)
        for name in ("wordpattern", "lexrank", "simpleif", "contextif"):
            assert name not in html.lower()
        assert 'data-sentence-id="1:100:0:1"' in payload["answers"][0]["html"]

    def test_sanitize_strips_scripts(self):
        html = sanitize_html("<div>ok<script>alert(1)</script><a onclick='x' href='y'>l</a></div>")
        assert "script" not in html and "onclick" not in html
        assert '<a href="y">l</a>' in html

    def test_display_text_restores_placeholders(self, store):
        thread = store.content.threads[1]
        sid = "1:100:0:1"
        assert "json.load()" in display_sentence_text(thread.sentences[sid])

    def test_pre_blocks_preserved(self):
        thread = make_thread(7, ["<p>Look here.</p><pre><code>x = 1</code></pre>"])
        html = render_answer_html(thread.answers[0].body_html, [])
        assert "<pre>" in html and "x = 1" in html


class TestConcurrency:
    def test_assignment_count_conservation(self, tmp_path):
        store = SurveyStore(build_content(8), seed=5, log_path=tmp_path / "ev.ndj")
        app = create_app(store)
        client = TestClient(app)
        tokens = [client.post("/sessions", json={"answers": BQ}).json()["token"]
                  for _ in range(8)]
        errors = []

        def assign(token):
            try:
                r = client.get(f"/sessions/{token}/assignment")
                assert r.status_code == 200
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=assign, args=(t,)) for t in tokens]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        counts = store.assignment_thread_counts()
        assert sum(counts.values()) == 3 * len(tokens)

    def test_reservations_spread_concurrent_assignments(self, tmp_path):
        store = SurveyStore(build_content(8), seed=6, log_path=tmp_path / "ev.ndj")
        tokens = [store.create_session(BQ).token for _ in range(8)]
        for token in tokens:
            store.get_assignment(token)
        counts = store.assignment_thread_counts()
        assert max(counts.values()) - min(counts.values()) <= 2


def test_gate_config_round_trip(tmp_path):
    path = tmp_path / "gate.json"
    path.write_text(json.dumps({
        "thread_id": GATE_TID, "sentence_id": f"{GATE_TID}:9900:0:1",
        "sentence_text": "Hope this helps.",
    }), encoding="utf-8")
    gate = QualityGateSpec.load(path)
    assert gate.passing_sr3 == frozenset({1, 2})


def test_gate_text_mismatch_rejected():
    threads = {1: study_thread(1), GATE_TID: gate_thread()}
    evalset = EvaluationSet(
        thread_ids=[1],
        counts={1: {Technique.WORDPATTERN: 1, Technique.SIMPLEIF: 1, Technique.CONTEXTIF: 1}},
        sentence_ids={1: {Technique.SIMPLEIF: ["1:100:0:0"]}},
        criteria=SamplingCriteria(),
    )
    gate = QualityGateSpec(thread_id=GATE_TID, sentence_id=f"{GATE_TID}:9900:0:0",
                           sentence_text="Hope this helps.")
    with pytest.raises(ConfigurationError):
        build_survey_content(threads, evalset, gate)
