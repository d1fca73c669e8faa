// Survey flow state machine, kept free of DOM concerns so the sequence
// and gating rules are directly testable.

import {
  AssignmentView,
  BackgroundAnswers,
  ExitAnswers,
  ScreenedOutError,
  SurveyApi,
} from "./api.js";
import { DraftState, PanelAnswers, clearDraft, loadDraft, saveDraft } from "./drafts.js";

export type Step =
  | { kind: "info" }
  | { kind: "instructions" }
  | { kind: "background" }
  | { kind: "screened" }
  | { kind: "thread"; index: number }
  | { kind: "exit" }
  | { kind: "done"; token: string };

export type AdvanceResult =
  | { ok: true }
  | { ok: false; missingSentenceId: string };

export class SurveyFlow {
  step: Step = { kind: "info" };
  token: string | null = null;
  assignment: AssignmentView | null = null;
  answers = new Map<string, PanelAnswers>();
  lastError: string | null = null;

  constructor(readonly api: SurveyApi) {}

  next(): void {
    if (this.step.kind === "info") this.step = { kind: "instructions" };
    else if (this.step.kind === "instructions") this.step = { kind: "background" };
  }

  async submitBackground(answers: BackgroundAnswers): Promise<void> {
    try {
      this.token = await this.api.createSession(answers);
    } catch (err) {
      if (err instanceof ScreenedOutError) {
        this.step = { kind: "screened" };
        return;
      }
      throw err;
    }
    this.assignment = await this.api.getAssignment(this.token);
    this.step = { kind: "thread", index: 0 };
    this.persist();
  }

  /** Resume a reloaded session from the local draft, if one exists. */
  async resume(token: string): Promise<boolean> {
    const draft = loadDraft(token);
    if (!draft) return false;
    this.token = token;
    this.assignment = await this.api.getAssignment(token);
    this.answers = new Map(Object.entries(draft.answers));
    this.step = { kind: "thread", index: draft.threadIndex };
    return true;
  }

  currentThreadId(): number {
    if (this.step.kind !== "thread" || !this.assignment) {
      throw new Error("not on a thread page");
    }
    const tid = this.assignment.threads[this.step.index];
    if (tid === undefined) throw new Error("thread index out of range");
    return tid;
  }

  highlightIds(threadId: number): string[] {
    return this.assignment?.highlights[String(threadId)] ?? [];
  }

  answerFor(sentenceId: string): PanelAnswers {
    return this.answers.get(sentenceId) ?? {};
  }

  setAnswer(sentenceId: string, partial: PanelAnswers): void {
    const merged = { ...this.answerFor(sentenceId), ...partial, acked: false };
    this.answers.set(sentenceId, merged);
    this.persist();
  }

  isComplete(sentenceId: string): boolean {
    const a = this.answerFor(sentenceId);
    return (
      a.sr1 !== undefined &&
      a.sr2 !== undefined &&
      a.sr3 !== undefined &&
      (a.sr4 ?? "").trim().length > 0
    );
  }

  /** Send one completed panel to the service; keeps the local copy as an
   * optimistic cache until the ack lands. */
  async submitSentence(sentenceId: string): Promise<void> {
    if (!this.token) throw new Error("no session");
    const a = this.answerFor(sentenceId);
    if (!this.isComplete(sentenceId)) throw new Error("panel incomplete");
    await this.api.submitResponse({
      token: this.token,
      sentence_id: sentenceId,
      sr1: a.sr1!,
      sr2: a.sr2!,
      sr3: a.sr3!,
      sr4_justification: a.sr4!,
    });
    this.answers.set(sentenceId, { ...a, acked: true });
    this.persist();
  }

  /** Push every completed-but-unacked panel; used after reconnects. */
  async flushPending(): Promise<void> {
    for (const sid of this.answers.keys()) {
      const a = this.answerFor(sid);
      if (!a.acked && this.isComplete(sid)) {
        await this.submitSentence(sid);
      }
    }
  }

  firstIncomplete(threadId: number): string | null {
    for (const sid of this.highlightIds(threadId)) {
      if (!this.isComplete(sid)) return sid;
    }
    return null;
  }

  /** Advance past the current thread; blocked while any highlighted
   * sentence on it is unanswered. */
  async advanceThread(): Promise<AdvanceResult> {
    if (this.step.kind !== "thread" || !this.assignment) {
      throw new Error("not on a thread page");
    }
    const tid = this.currentThreadId();
    const missing = this.firstIncomplete(tid);
    if (missing) {
      return { ok: false, missingSentenceId: missing };
    }
    await this.flushPending();
    const nextIndex = this.step.index + 1;
    if (nextIndex < this.assignment.threads.length) {
      this.step = { kind: "thread", index: nextIndex };
    } else {
      this.step = { kind: "exit" };
    }
    this.persist();
    return { ok: true };
  }

  async submitExit(exit: ExitAnswers): Promise<string> {
    if (!this.token) throw new Error("no session");
    await this.flushPending();
    const receipt = await this.api.finalize(this.token, exit);
    clearDraft(this.token);
    this.step = { kind: "done", token: receipt.token };
    return receipt.token;
  }

  private persist(): void {
    if (!this.token) return;
    const draft: DraftState = {
      token: this.token,
      threadIndex: this.step.kind === "thread" ? this.step.index : 0,
      answers: Object.fromEntries(this.answers),
    };
    saveDraft(draft);
  }
}
