/** DOM wiring: binds the pure state/render layers to the page. */

import { ApiError, CapsmithClient } from "./api.js";
import type { FigureDetail } from "./model.js";
import {
  evaluateButtonLabel,
  renderCheckTable,
  renderFigureBar,
  renderFigurePlaceholder,
  renderGenerated,
  renderParagraphs,
  renderRating,
} from "./render.js";
import {
  applyDetail,
  applyDraftSaved,
  applyEvaluation,
  applyLimitError,
  beginDetailFetch,
  canEvaluate,
  initialState,
  loadIntoEditor,
  remainingEvaluations,
  selectDocument,
  selectFigure,
  setEditorText,
  setNotice,
  type ViewState,
} from "./state.js";

const client = new CapsmithClient("");
let state: ViewState = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(): void {
  const uploadPanel = el<HTMLElement>("upload-panel");
  const workspace = el<HTMLElement>("workspace");
  uploadPanel.classList.toggle("collapsed", state.docId !== null);
  workspace.hidden = state.docId === null;

  el<HTMLElement>("figure-bar").innerHTML = renderFigureBar(
    state.figures,
    state.selectedFigure,
  );

  const noticeBox = el<HTMLElement>("notice");
  noticeBox.textContent = state.notice ?? "";
  noticeBox.hidden = state.notice === null;

  const detailPanel = el<HTMLElement>("detail-panel");
  if (!state.detail) {
    detailPanel.hidden = true;
    return;
  }
  detailPanel.hidden = false;
  const detail = state.detail;

  el<HTMLElement>("figure-view").innerHTML = renderFigurePlaceholder(detail);
  el<HTMLElement>("check-table").innerHTML = renderCheckTable(detail.aspect_report);
  el<HTMLElement>("rating-panel").innerHTML = renderRating(detail.rating);
  el<HTMLElement>("generated-long").innerHTML = renderGenerated(
    "long",
    detail.generated.long,
    detail.generated.errors["long"],
  );
  el<HTMLElement>("generated-short").innerHTML = renderGenerated(
    "short",
    detail.generated.short,
    detail.generated.errors["short"],
  );
  el<HTMLElement>("paragraphs").innerHTML = renderParagraphs(detail.mention_paragraphs);

  const editor = el<HTMLTextAreaElement>("editor");
  if (editor.value !== state.editorText) {
    editor.value = state.editorText;
  }

  const evaluateBtn = el<HTMLButtonElement>("evaluate-btn");
  evaluateBtn.disabled = !canEvaluate(state);
  evaluateBtn.textContent = state.pending.evaluate
    ? "Evaluating…"
    : evaluateButtonLabel(detail.session);
  el<HTMLElement>("remaining").textContent =
    `${remainingEvaluations(detail.session)} evaluation(s) remaining`;
  el<HTMLButtonElement>("draft-btn").disabled = state.pending.draft;
}

function update(next: ViewState): void {
  state = next;
  render();
}

async function fetchDetail(): Promise<void> {
  if (!state.docId || !state.selectedFigure) return;
  const [pendingState, seq] = beginDetailFetch(state);
  update(pendingState);
  try {
    const detail: FigureDetail = await client.figureDetail(
      state.docId,
      state.selectedFigure,
    );
    update(applyDetail(state, detail, seq));
  } catch (err) {
    update(setNotice(state, err instanceof Error ? err.message : String(err)));
  }
}

async function handleUpload(file: File): Promise<void> {
  const format = file.name.endsWith(".json") ? "bundle" : "pdf";
  update({ ...state, pending: { ...state.pending, upload: true } });
  try {
    const summary = await client.uploadDocument(file, format);
    const figures = await client.listFigures(summary.doc_id);
    update(selectDocument(state, summary.doc_id, figures));
    if (summary.warnings.length > 0) {
      update(setNotice(state, summary.warnings.join(" ")));
    }
    await fetchDetail();
  } catch (err) {
    const message = err instanceof ApiError ? err.body.message : String(err);
    update(setNotice({ ...state, pending: { ...state.pending, upload: false } }, message));
  }
}

async function handleEvaluate(): Promise<void> {
  if (!state.docId || !state.selectedFigure || !canEvaluate(state)) return;
  update({ ...state, pending: { ...state.pending, evaluate: true } });
  try {
    const response = await client.evaluate(
      state.docId,
      state.selectedFigure,
      state.editorText,
    );
    update(applyEvaluation(state, response));
  } catch (err) {
    if (err instanceof ApiError && err.body.code === "submission_limit_reached") {
      update(applyLimitError(state, err.body));
    } else {
      const message = err instanceof ApiError ? err.body.message : String(err);
      update(
        setNotice(
          { ...state, pending: { ...state.pending, evaluate: false } },
          `Evaluation failed: ${message}. Try again.`,
        ),
      );
    }
  }
}

async function handleSaveDraft(): Promise<void> {
  if (!state.docId || !state.selectedFigure) return;
  update({ ...state, pending: { ...state.pending, draft: true } });
  try {
    const summary = await client.saveDraft(
      state.docId,
      state.selectedFigure,
      state.editorText,
    );
    update(applyDraftSaved(state, summary));
  } catch (err) {
    const message = err instanceof ApiError ? err.body.message : String(err);
    update(
      setNotice(
        { ...state, pending: { ...state.pending, draft: false } },
        `Draft not saved: ${message}`,
      ),
    );
  }
}

function bind(): void {
  const dropZone = el<HTMLElement>("drop-zone");
  const fileInput = el<HTMLInputElement>("file-input");

  dropZone.addEventListener("dragover", (event) => {
    event.preventDefault();
    dropZone.classList.add("dragging");
  });
  dropZone.addEventListener("dragleave", () => dropZone.classList.remove("dragging"));
  dropZone.addEventListener("drop", (event) => {
    event.preventDefault();
    dropZone.classList.remove("dragging");
    const file = event.dataTransfer?.files?.[0];
    if (file) void handleUpload(file);
  });
  dropZone.addEventListener("click", () => fileInput.click());
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file) void handleUpload(file);
  });

  el<HTMLElement>("figure-bar").addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>(".figure-tab");
    if (!target?.dataset.figureId) return;
    update(selectFigure(state, target.dataset.figureId));
    void fetchDetail();
  });

  const editor = el<HTMLTextAreaElement>("editor");
  editor.addEventListener("input", () => update(setEditorText(state, editor.value)));

  el<HTMLButtonElement>("evaluate-btn").addEventListener("click", () => void handleEvaluate());
  el<HTMLButtonElement>("draft-btn").addEventListener("click", () => void handleSaveDraft());
  el<HTMLButtonElement>("reload-caption-btn").addEventListener("click", () => {
    if (state.detail) {
      update(loadIntoEditor(state, state.detail.figure.caption));
    }
  });

  el<HTMLElement>("detail-panel").addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLElement>(".copy-to-editor");
    if (button?.dataset.text != null) {
      update(loadIntoEditor(state, button.dataset.text));
    }
  });

  render();
}

document.addEventListener("DOMContentLoaded", bind);
