/** Pure view-state transitions; the DOM layer only calls these. */

import type {
  ApiErrorBody,
  EvaluationResponse,
  FigureDetail,
  FigureSummary,
  SessionSummary,
} from "./model.js";

export interface PendingFlags {
  upload: boolean;
  detail: boolean;
  draft: boolean;
  evaluate: boolean;
}

export interface ViewState {
  docId: string | null;
  figures: FigureSummary[];
  selectedFigure: string | null;
  editorText: string;
  detail: FigureDetail | null;
  pending: PendingFlags;
  notice: string | null;
  /** Monotonic sequence number; stale detail responses are discarded. */
  requestSeq: number;
  lastAppliedSeq: number;
}

export function initialState(): ViewState {
  return {
    docId: null,
    figures: [],
    selectedFigure: null,
    editorText: "",
    detail: null,
    pending: { upload: false, detail: false, draft: false, evaluate: false },
    notice: null,
    requestSeq: 0,
    lastAppliedSeq: 0,
  };
}

export function remainingEvaluations(session: SessionSummary): number {
  return Math.max(0, session.evaluation_limit - session.evaluations_used);
}

/** The evaluate button is enabled only when this returns true. */
export function canEvaluate(state: ViewState): boolean {
  if (!state.detail || state.pending.evaluate) return false;
  if (state.editorText.trim() === "") return false;
  return remainingEvaluations(state.detail.session) > 0;
}

export function selectDocument(
  state: ViewState,
  docId: string,
  figures: FigureSummary[],
): ViewState {
  return {
    ...initialState(),
    docId,
    figures,
    selectedFigure: figures.length > 0 ? figures[0]!.id : null,
  };
}

export function selectFigure(state: ViewState, figureId: string): ViewState {
  return {
    ...state,
    selectedFigure: figureId,
    detail: null,
    notice: null,
    editorText: "",
  };
}

export function beginDetailFetch(state: ViewState): [ViewState, number] {
  const seq = state.requestSeq + 1;
  return [
    { ...state, requestSeq: seq, pending: { ...state.pending, detail: true } },
    seq,
  ];
}

/**
 * Apply a fetched figure detail.  Stale responses (an older sequence number
 * than one already applied) are discarded.  Editor text survives a re-fetch
 * of the same figure; it is loaded from the payload only when empty.
 */
export function applyDetail(
  state: ViewState,
  detail: FigureDetail,
  seq: number,
): ViewState {
  if (seq <= state.lastAppliedSeq || detail.figure.id !== state.selectedFigure) {
    return state;
  }
  const editorText =
    state.editorText.trim() === "" ? detail.current_caption : state.editorText;
  return {
    ...state,
    detail,
    editorText,
    lastAppliedSeq: seq,
    pending: { ...state.pending, detail: false },
  };
}

export function setEditorText(state: ViewState, text: string): ViewState {
  return { ...state, editorText: text };
}

/** Copy a generated caption (or the original) into the editor explicitly. */
export function loadIntoEditor(state: ViewState, text: string): ViewState {
  return { ...state, editorText: text, notice: null };
}

export function applyEvaluation(
  state: ViewState,
  response: EvaluationResponse,
): ViewState {
  if (!state.detail) return state;
  return {
    ...state,
    notice: null,
    pending: { ...state.pending, evaluate: false },
    detail: {
      ...state.detail,
      aspect_report: response.aspect_report,
      rating: response.rating,
      session: response.session,
    },
  };
}

/**
 * A limit rejection from the server (possibly raced by another tab).  The
 * server is the source of truth: counters come from the error detail and
 * never underflow below the limit already reached.
 */
export function applyLimitError(state: ViewState, error: ApiErrorBody): ViewState {
  let session = state.detail?.session ?? null;
  const detail = error.detail as { used?: number; limit?: number } | undefined;
  if (session && detail && typeof detail.used === "number" && typeof detail.limit === "number") {
    session = {
      ...session,
      evaluations_used: Math.max(session.evaluations_used, detail.used),
      evaluation_limit: detail.limit,
    };
  }
  return {
    ...state,
    pending: { ...state.pending, evaluate: false },
    notice: session
      ? `Submission limit reached (${session.evaluations_used}/${session.evaluation_limit}).`
      : "Submission limit reached.",
    detail: state.detail && session ? { ...state.detail, session } : state.detail,
  };
}

export function applyDraftSaved(state: ViewState, session: SessionSummary): ViewState {
  if (!state.detail) return state;
  return {
    ...state,
    pending: { ...state.pending, draft: false },
    detail: { ...state.detail, session },
  };
}

export function setNotice(state: ViewState, notice: string | null): ViewState {
  return { ...state, notice };
}
