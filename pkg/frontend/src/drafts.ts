// Local draft persistence: answers survive a reload or a dropped
// connection and are restored when the same session resumes.

export interface PanelAnswers {
  sr1?: number;
  sr2?: number;
  sr3?: number;
  sr4?: string;
  acked?: boolean;
}

export interface DraftState {
  token: string;
  threadIndex: number;
  answers: Record<string, PanelAnswers>;
}

const KEY_PREFIX = "soess-draft:";
const TOKEN_KEY = "soess-active-token";

export function saveDraft(state: DraftState): void {
  try {
    localStorage.setItem(KEY_PREFIX + state.token, JSON.stringify(state));
    localStorage.setItem(TOKEN_KEY, state.token);
  } catch {
    // storage full or unavailable: drafts are best-effort
  }
}

export function loadDraft(token: string): DraftState | null {
  try {
    const raw = localStorage.getItem(KEY_PREFIX + token);
    if (!raw) return null;
    const parsed = JSON.parse(raw) as DraftState;
    if (parsed.token !== token) return null;
    return parsed;
  } catch {
    return null;
  }
}

export function activeToken(): string | null {
  try {
    return localStorage.getItem(TOKEN_KEY);
  } catch {
    return null;
  }
}

export function clearDraft(token: string): void {
  try {
    localStorage.removeItem(KEY_PREFIX + token);
    if (localStorage.getItem(TOKEN_KEY) === token) {
      localStorage.removeItem(TOKEN_KEY);
    }
  } catch {
    // ignore
  }
}
