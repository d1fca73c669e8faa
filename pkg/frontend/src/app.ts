// Application shell: wires the flow state machine to the views and keeps
// the rendered page in sync with the current step.

import { BackgroundAnswers, ExitAnswers, SurveyApi } from "./api.js";
import { activeToken } from "./drafts.js";
import { AdvanceResult, SurveyFlow } from "./flow.js";
import {
  renderBackground,
  renderDone,
  renderExit,
  renderInfo,
  renderInstructions,
  renderScreened,
  renderThread,
} from "./view.js";

export class App {
  readonly flow: SurveyFlow;

  constructor(readonly root: HTMLElement, readonly api: SurveyApi) {
    this.flow = new SurveyFlow(api);
  }

  async start(): Promise<void> {
    const token = activeToken();
    if (token) {
      try {
        if (await this.flow.resume(token)) {
          await this.render();
          return;
        }
      } catch {
        // stale draft or unreachable service: fall through to a fresh start
      }
    }
    await this.render();
  }

  async render(): Promise<void> {
    const step = this.flow.step;
    switch (step.kind) {
      case "info":
        this.show(renderInfo(() => this.advanceIntro()));
        break;
      case "instructions":
        this.show(renderInstructions(() => this.advanceIntro()));
        break;
      case "background":
        this.show(renderBackground((answers) => void this.submitBackground(answers)));
        break;
      case "screened":
        this.show(renderScreened());
        break;
      case "thread": {
        const threadId = this.flow.currentThreadId();
        const thread = await this.api.getThread(threadId);
        const page = renderThread(thread, step.index + 1,
          this.flow.assignment!.threads.length, {
            getAnswer: (sid) => this.flow.answerFor(sid),
            onChange: (sid, partial) => this.flow.setAnswer(sid, partial),
            onSave: (sid) => this.flow.submitSentence(sid),
            onNext: () => void this.nextThread(),
          });
        this.show(page);
        break;
      }
      case "exit":
        this.show(renderExit((exit) => void this.submitExit(exit)));
        break;
      case "done":
        this.show(renderDone(step.token));
        break;
    }
  }

  private show(page: HTMLElement): void {
    this.root.replaceChildren(page);
  }

  private advanceIntro(): void {
    this.flow.next();
    void this.render();
  }

  private async submitBackground(answers: BackgroundAnswers): Promise<void> {
    await this.flow.submitBackground(answers);
    await this.render();
  }

  private async nextThread(): Promise<void> {
    const result: AdvanceResult = await this.flow.advanceThread();
    if (!result.ok) {
      const warning = this.root.querySelector<HTMLElement>('[data-warning="incomplete"]');
      if (warning) {
        warning.textContent = "Please answer every highlighted sentence before continuing.";
      }
      const missing = this.root.querySelector<HTMLElement>(
        `[data-sentence-id="${result.missingSentenceId}"]`,
      );
      if (missing) {
        missing.classList.add("needs-answer");
        if (typeof missing.scrollIntoView === "function") {
          missing.scrollIntoView({ block: "center" });
        }
      }
      return;
    }
    await this.render();
  }

  private async submitExit(exit: ExitAnswers): Promise<void> {
    await this.flow.submitExit(exit);
    await this.render();
  }
}

export function mount(rootId = "app", baseUrl = ""): App {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`missing #${rootId} element`);
  const app = new App(root, new SurveyApi(baseUrl));
  void app.start();
  return app;
}
