// DOM rendering for each survey step.  All highlights share one style and
// the DOM never carries any information about which technique picked a
// sentence or which thread is the attention check.

import { BackgroundAnswers, ExitAnswers, ThreadView } from "./api.js";
import { PanelAnswers } from "./drafts.js";

export const JSON_EXPERTISE_OPTIONS = [
  "No experience at all using json",
  "Beginner",
  "Intermediate",
  "Expert",
] as const;

const SR1_OPTIONS: ReadonlyArray<[number, string]> = [
  [3, "It is meaningful and gives useful information for solving the question."],
  [2, "It is meaningful, but not useful for solving the question."],
  [1, "It does not make sense to me."],
];

const LIKERT: ReadonlyArray<[number, string]> = [
  [5, "Strongly agree"],
  [4, "Agree"],
  [3, "Neither agree nor disagree"],
  [2, "Disagree"],
  [1, "Strongly disagree"],
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function renderInfo(onNext: () => void): HTMLElement {
  const root = el("section", { class: "page", "data-page": "info" });
  root.append(
    el("h1", {}, ["Rating highlighted sentences in Q&A threads"]),
    el("p", {}, [
      "You will read four Stack Overflow threads. In each thread some " +
      "sentences are highlighted; you rate how helpful each one would be " +
      "for navigating to a suitable answer.",
    ]),
    el("p", {}, [
      "Participation is anonymous; your ratings are stored under a random " +
      "token that you submit back to the crowd platform at the end.",
    ]),
  );
  const button = el("button", { "data-action": "next" }, ["Continue"]);
  button.addEventListener("click", onNext);
  root.append(button);
  return root;
}

export function renderInstructions(onNext: () => void): HTMLElement {
  const root = el("section", { class: "page", "data-page": "instructions" });
  root.append(
    el("h1", {}, ["How it works"]),
    el("ul", {}, [
      el("li", {}, ["Click a highlighted sentence to open its questions in the margin."]),
      el("li", {}, ["Answer all three ratings and add a short justification."]),
      el("li", {}, ["Every highlighted sentence must be answered before the next thread unlocks."]),
    ]),
  );
  const button = el("button", { "data-action": "next" }, ["Start"]);
  button.addEventListener("click", onNext);
  root.append(button);
  return root;
}

function textField(name: string, label: string): HTMLElement {
  return el("label", { class: "field" }, [
    label,
    el("input", { type: "text", name, required: "required" }),
  ]);
}

function yesNoField(name: string, label: string): HTMLElement {
  const select = el("select", { name });
  select.append(el("option", { value: "yes" }, ["yes"]), el("option", { value: "no" }, ["no"]));
  return el("label", { class: "field" }, [label, select]);
}

export function renderBackground(
  onSubmit: (answers: BackgroundAnswers) => void,
): HTMLElement {
  const root = el("section", { class: "page", "data-page": "background" });
  root.append(el("h1", {}, ["About you"]));
  const form = el("form", { "data-form": "background" });
  const expertise = el("select", { name: "bq5" });
  for (const option of JSON_EXPERTISE_OPTIONS) {
    expertise.append(el("option", { value: option }, [option]));
  }
  form.append(
    yesNoField("bq1", "Do you develop software as part of your job?"),
    textField("bq2", "Your job title"),
    textField("bq3", "Years of software development experience"),
    textField("bq4", "Your main area of development"),
    el("label", { class: "field" }, ["Your JSON expertise", expertise]),
    yesNoField("bq6", "Have you searched Stack Overflow for information before?"),
    yesNoField("bq7", "Have you contributed to Stack Overflow (questions, answers, comments)?"),
    el("button", { type: "submit" }, ["Begin the survey"]),
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    onSubmit({
      bq1: String(data.get("bq1") ?? ""),
      bq2: String(data.get("bq2") ?? ""),
      bq3: String(data.get("bq3") ?? ""),
      bq4: String(data.get("bq4") ?? ""),
      bq5: String(data.get("bq5") ?? ""),
      bq6: String(data.get("bq6") ?? ""),
      bq7: String(data.get("bq7") ?? ""),
    });
  });
  root.append(form);
  return root;
}

export function renderScreened(): HTMLElement {
  const root = el("section", { class: "page", "data-page": "screened" });
  root.append(
    el("h1", {}, ["Thanks for your interest"]),
    el("p", {}, ["This study needs participants with JSON experience who have used Stack Overflow before."]),
  );
  return root;
}

export interface PanelCallbacks {
  getAnswer(sentenceId: string): PanelAnswers;
  onChange(sentenceId: string, partial: PanelAnswers): void;
  onSave(sentenceId: string): Promise<void>;
}

function radioRow(
  name: string,
  options: ReadonlyArray<[number, string]>,
  selected: number | undefined,
  onPick: (value: number) => void,
): HTMLElement {
  const row = el("div", { class: "options", "data-question": name });
  for (const [value, label] of options) {
    const input = el("input", {
      type: "radio",
      name,
      value: String(value),
    }) as HTMLInputElement;
    if (selected === value) input.checked = true;
    input.addEventListener("change", () => onPick(value));
    row.append(el("label", { class: "option" }, [input, label]));
  }
  return row;
}

export function renderPanel(sentenceId: string, callbacks: PanelCallbacks): HTMLElement {
  const answers = callbacks.getAnswer(sentenceId);
  const panel = el("aside", { class: "margin-panel", "data-panel-for": sentenceId });
  panel.append(el("h2", {}, ["About this sentence"]));

  panel.append(el("p", {}, ["Which statement describes the highlighted sentence best?"]));
  panel.append(radioRow(`sr1:${sentenceId}`, SR1_OPTIONS, answers.sr1,
    (value) => callbacks.onChange(sentenceId, { sr1: value })));

  panel.append(el("p", {}, ["I would want to locate this sentence quickly when reading the thread."]));
  panel.append(radioRow(`sr2:${sentenceId}`, LIKERT, answers.sr2,
    (value) => callbacks.onChange(sentenceId, { sr2: value })));

  panel.append(el("p", {}, ["Highlighting this sentence helps me decide which answers are relevant to me."]));
  panel.append(radioRow(`sr3:${sentenceId}`, LIKERT, answers.sr3,
    (value) => callbacks.onChange(sentenceId, { sr3: value })));

  panel.append(el("p", {}, ["Why did you choose these ratings?"]));
  const justification = el("textarea", {
    name: `sr4:${sentenceId}`,
    rows: "3",
  }) as HTMLTextAreaElement;
  justification.value = answers.sr4 ?? "";
  justification.addEventListener("input", () =>
    callbacks.onChange(sentenceId, { sr4: justification.value }));
  panel.append(justification);

  const error = el("div", { class: "panel-error", "data-error-for": sentenceId });
  const save = el("button", { "data-save": sentenceId }, ["Save rating"]);
  save.addEventListener("click", async () => {
    error.textContent = "";
    try {
      await callbacks.onSave(sentenceId);
      panel.classList.add("saved");
    } catch (err) {
      error.textContent = err instanceof Error ? err.message : String(err);
    }
  });
  panel.append(save, error);
  return panel;
}

export interface ThreadPageCallbacks extends PanelCallbacks {
  onNext(): void;
}

export function renderThread(
  thread: ThreadView,
  position: number,
  total: number,
  callbacks: ThreadPageCallbacks,
): HTMLElement {
  const root = el("section", { class: "page thread", "data-page": "thread" });
  root.append(
    el("div", { class: "progress" }, [`Thread ${position} of ${total}`]),
    el("h1", {}, [thread.title]),
  );

  const question = el("article", { class: "question" });
  question.innerHTML = thread.question_html;
  root.append(question);

  const main = el("div", { class: "thread-body" });
  for (const answer of thread.answers) {
    const block = el("article", { class: "answer", "data-answer-id": String(answer.answer_id) });
    block.innerHTML = answer.html;
    main.append(block);
  }
  const margin = el("div", { class: "margin" });
  root.append(el("div", { class: "columns" }, [main, margin]));

  main.querySelectorAll<HTMLElement>("[data-sentence-id]").forEach((span) => {
    span.addEventListener("click", () => {
      margin.replaceChildren(renderPanel(span.dataset.sentenceId!, callbacks));
    });
  });

  const warning = el("div", { class: "next-warning", "data-warning": "incomplete" });
  const next = el("button", { "data-action": "next-thread" }, [
    position < total ? "Next thread" : "Finish threads",
  ]);
  next.addEventListener("click", callbacks.onNext);
  root.append(warning, next);
  return root;
}

export function renderExit(onSubmit: (exit: ExitAnswers) => void): HTMLElement {
  const root = el("section", { class: "page", "data-page": "exit" });
  root.append(el("h1", {}, ["Almost done"]));
  const form = el("form", { "data-form": "exit" });
  const questions: Array<[keyof ExitAnswers, string]> = [
    ["eq1", "Thinking of the highlighted sentences you found useful: what made them useful?"],
    ["eq2", "And for the ones you found NOT useful: what made them unhelpful?"],
    ["eq3", "What challenges do you usually face when navigating a long thread?"],
    ["eq4", "If Stack Overflow could highlight information for you, what should it highlight?"],
    ["eq5", "Some highlighted sentences were conditionals mentioning languages, systems, or situations. Would highlighting such sentences help you find relevant information faster?"],
  ];
  for (const [name, label] of questions) {
    form.append(el("label", { class: "field" }, [
      label,
      el("textarea", { name, rows: "3" }),
    ]));
  }
  form.append(el("button", { type: "submit" }, ["Submit and get my completion token"]));
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    onSubmit({
      eq1: String(data.get("eq1") ?? ""),
      eq2: String(data.get("eq2") ?? ""),
      eq3: String(data.get("eq3") ?? ""),
      eq4: String(data.get("eq4") ?? ""),
      eq5: String(data.get("eq5") ?? ""),
    });
  });
  root.append(form);
  return root;
}

export function renderDone(token: string): HTMLElement {
  const root = el("section", { class: "page", "data-page": "done" });
  root.append(
    el("h1", {}, ["Thank you!"]),
    el("p", {}, ["Submit this completion token on the crowd platform:"]),
    el("code", { class: "completion-token", "data-token": token }, [token]),
  );
  return root;
}
