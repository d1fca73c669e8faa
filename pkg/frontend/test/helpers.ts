import { App } from "../src/app.js";
import { SurveyApi } from "../src/api.js";
import { MockService } from "./mockService.js";

export async function tick(times = 6): Promise<void> {
  for (let i = 0; i < times; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function mountApp(service: MockService): { app: App; root: HTMLElement } {
  document.body.innerHTML = '<div id="app"></div>';
  globalThis.fetch = service.fetch;
  const root = document.getElementById("app")!;
  const app = new App(root, new SurveyApi(""));
  return { app, root };
}

export function click(element: Element | null): void {
  if (!element) throw new Error("expected element to click");
  (element as HTMLElement).click();
}

export function q<T extends Element = HTMLElement>(selector: string): T {
  const found = document.querySelector<T>(selector);
  if (!found) throw new Error(`missing element: ${selector}`);
  return found;
}

export function setField(form: Element, name: string, value: string): void {
  const field = form.querySelector<HTMLInputElement | HTMLSelectElement | HTMLTextAreaElement>(
    `[name="${name}"]`,
  );
  if (!field) throw new Error(`missing form field ${name}`);
  field.value = value;
  field.dispatchEvent(new Event("input", { bubbles: true }));
  field.dispatchEvent(new Event("change", { bubbles: true }));
}

export function submitForm(form: Element): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function pickRadio(question: string, value: number): void {
  const input = document.querySelector<HTMLInputElement>(
    `[data-question="${question}"] input[value="${value}"]`,
  );
  if (!input) throw new Error(`missing radio ${question}=${value}`);
  input.checked = true;
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

export async function answerPanel(
  sentenceId: string,
  values: { sr1: number; sr2: number; sr3: number; sr4: string },
): Promise<void> {
  click(q(`[data-sentence-id="${sentenceId}"]`));
  await tick();
  pickRadio(`sr1:${sentenceId}`, values.sr1);
  pickRadio(`sr2:${sentenceId}`, values.sr2);
  pickRadio(`sr3:${sentenceId}`, values.sr3);
  const textarea = q<HTMLTextAreaElement>(`[name="sr4:${sentenceId}"]`);
  textarea.value = values.sr4;
  textarea.dispatchEvent(new Event("input", { bubbles: true }));
  click(q(`[data-save="${sentenceId}"]`));
  await tick();
}

export function fillBackground(overrides: Record<string, string> = {}): void {
  const form = q('[data-form="background"]');
  const defaults: Record<string, string> = {
    bq1: "yes",
    bq2: "Backend developer",
    bq3: "6",
    bq4: "web services",
    bq5: "Intermediate",
    bq6: "yes",
    bq7: "no",
  };
  for (const [name, value] of Object.entries({ ...defaults, ...overrides })) {
    setField(form, name, value);
  }
  submitForm(form);
}
