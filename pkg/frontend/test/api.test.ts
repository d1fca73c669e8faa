import { describe, expect, it } from "vitest";

import { responseBody, ScreenedOutError, SurveyApi } from "../src/api.js";
import { canonicalResponseBody, createMockService, makeThread } from "./mockService.js";

describe("payload serialization", () => {
  it("produces the exact schema bytes", () => {
    const body = responseBody({
      token: "tok",
      sentence_id: "1:2:0:0",
      sr1: 3,
      sr2: 4,
      sr3: 5,
      sr4_justification: "short reason",
    });
    expect(body).toBe(
      '{"token":"tok","sentence_id":"1:2:0:0","sr1":3,"sr2":4,"sr3":5,' +
      '"sr4_justification":"short reason"}',
    );
    expect(canonicalResponseBody(JSON.parse(body))).toBe(body);
  });

  it("round-trips unicode justifications byte-for-byte", () => {
    const body = responseBody({
      token: "tok",
      sentence_id: "1:2:0:0",
      sr1: 1,
      sr2: 1,
      sr3: 1,
      sr4_justification: 'it said "servers" – sí',
    });
    expect(canonicalResponseBody(JSON.parse(body))).toBe(body);
  });
});

describe("api client", () => {
  function service() {
    return createMockService({
      threads: [makeThread(21, ["One highlighted sentence."])],
      threadOrder: [21],
    });
  }

  it("creates sessions and fetches assignments", async () => {
    const mock = service();
    globalThis.fetch = mock.fetch;
    const api = new SurveyApi("");
    const token = await api.createSession({
      bq1: "yes", bq2: "dev", bq3: "3", bq4: "web",
      bq5: "Expert", bq6: "yes", bq7: "yes",
    });
    expect(token).toBe("tok-test-123");
    const assignment = await api.getAssignment(token);
    expect(assignment.threads).toEqual([21]);
  });

  it("raises ScreenedOutError on the screening 422", async () => {
    const mock = service();
    globalThis.fetch = mock.fetch;
    const api = new SurveyApi("");
    await expect(api.createSession({
      bq1: "yes", bq2: "dev", bq3: "3", bq4: "web",
      bq5: "No experience at all using json", bq6: "yes", bq7: "yes",
    })).rejects.toBeInstanceOf(ScreenedOutError);
  });

  it("submits responses the mock accepts", async () => {
    const mock = service();
    globalThis.fetch = mock.fetch;
    const api = new SurveyApi("");
    const token = await api.createSession({
      bq1: "yes", bq2: "dev", bq3: "3", bq4: "web",
      bq5: "Expert", bq6: "yes", bq7: "yes",
    });
    await api.getAssignment(token);
    await api.submitResponse({
      token,
      sentence_id: "21:2100:0:0",
      sr1: 3, sr2: 4, sr3: 4,
      sr4_justification: "useful",
    });
    expect(mock.responses.size).toBe(1);
    expect(mock.schemaViolations).toEqual([]);
  });

  it("surfaces validation errors with details", async () => {
    const mock = service();
    globalThis.fetch = mock.fetch;
    const api = new SurveyApi("");
    const token = await api.createSession({
      bq1: "yes", bq2: "dev", bq3: "3", bq4: "web",
      bq5: "Expert", bq6: "yes", bq7: "yes",
    });
    await expect(api.submitResponse({
      token,
      sentence_id: "99:1:0:0",
      sr1: 3, sr2: 4, sr3: 4,
      sr4_justification: "x",
    })).rejects.toThrow(/sentence not in assignment/);
  });
});
