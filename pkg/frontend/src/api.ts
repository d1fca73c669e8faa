// Typed client for the survey service HTTP API.

export interface BackgroundAnswers {
  bq1: string;
  bq2: string;
  bq3: string;
  bq4: string;
  bq5: string;
  bq6: string;
  bq7: string;
}

export interface ExitAnswers {
  eq1: string;
  eq2: string;
  eq3: string;
  eq4: string;
  eq5: string;
}

export interface AssignmentView {
  token: string;
  threads: number[];
  highlights: Record<string, string[]>;
}

export interface HighlightInfo {
  sentence_id: string;
  answer_id: number;
  text: string;
}

export interface AnswerView {
  answer_id: number;
  score: number;
  html: string;
  highlight_ids: string[];
}

export interface ThreadView {
  thread_id: number;
  title: string;
  question_html: string;
  answers: AnswerView[];
  highlights: HighlightInfo[];
}

export interface SentenceResponsePayload {
  token: string;
  sentence_id: string;
  sr1: number;
  sr2: number;
  sr3: number;
  sr4_justification: string;
}

export interface FinalizeReceipt {
  token: string;
  status: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`API error ${status}: ${detail}`);
  }
}

export class ScreenedOutError extends Error {
  constructor() {
    super("participant screened out");
  }
}

/** Serialize a sentence response with the exact field order of the
 * service schema, so payload bytes are reproducible. */
export function responseBody(payload: SentenceResponsePayload): string {
  return JSON.stringify({
    token: payload.token,
    sentence_id: payload.sentence_id,
    sr1: payload.sr1,
    sr2: payload.sr2,
    sr3: payload.sr3,
    sr4_justification: payload.sr4_justification,
  });
}

async function detailOf(res: Response): Promise<string> {
  try {
    const data = await res.json();
    return typeof data.detail === "string" ? data.detail : JSON.stringify(data.detail ?? data);
  } catch {
    return res.statusText;
  }
}

export class SurveyApi {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(answers: BackgroundAnswers, clientRef?: string): Promise<string> {
    const res = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(clientRef ? { answers, client_ref: clientRef } : { answers }),
    });
    if (res.status === 422) {
      const detail = await detailOf(res);
      if (detail === "screened_out") throw new ScreenedOutError();
      throw new ApiError(res.status, detail);
    }
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    const data = await res.json();
    return data.token as string;
  }

  async getAssignment(token: string): Promise<AssignmentView> {
    const res = await fetch(this.url(`/sessions/${encodeURIComponent(token)}/assignment`));
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as AssignmentView;
  }

  async getThread(threadId: number): Promise<ThreadView> {
    const res = await fetch(this.url(`/threads/${threadId}`));
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as ThreadView;
  }

  async submitResponse(payload: SentenceResponsePayload): Promise<void> {
    const res = await fetch(this.url("/responses"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: responseBody(payload),
    });
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
  }

  async finalize(token: string, exit: ExitAnswers): Promise<FinalizeReceipt> {
    const res = await fetch(this.url(`/sessions/${encodeURIComponent(token)}/finalize`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(exit),
    });
    if (!res.ok) throw new ApiError(res.status, await detailOf(res));
    return (await res.json()) as FinalizeReceipt;
  }
}
