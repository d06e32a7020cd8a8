/** Thin typed client for the capsmith HTTP API. */

import type {
  ApiErrorBody,
  EvaluationResponse,
  FigureDetail,
  FigureSummary,
  SessionSummary,
  UploadSummary,
} from "./model.js";

export class ApiError extends Error {
  readonly status: number;
  readonly body: ApiErrorBody;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.body = body;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    body = { code: "http_error", message: `HTTP ${resp.status}` };
  }
  return new ApiError(resp.status, body);
}

export class CapsmithClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.url(path), init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  async uploadDocument(file: File | Blob, format: "pdf" | "bundle"): Promise<UploadSummary> {
    const form = new FormData();
    form.append("file", file);
    form.append("format", format);
    return this.requestJson<UploadSummary>("/documents", { method: "POST", body: form });
  }

  async listFigures(docId: string): Promise<FigureSummary[]> {
    return this.requestJson<FigureSummary[]>(`/documents/${encodeURIComponent(docId)}/figures`);
  }

  async figureDetail(docId: string, figureId: string): Promise<FigureDetail> {
    return this.requestJson<FigureDetail>(
      `/documents/${encodeURIComponent(docId)}/figures/${encodeURIComponent(figureId)}`,
    );
  }

  async saveDraft(
    docId: string,
    figureId: string,
    caption: string,
  ): Promise<SessionSummary & { empty_caption?: boolean }> {
    return this.requestJson(
      `/documents/${encodeURIComponent(docId)}/figures/${encodeURIComponent(figureId)}/draft`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ caption }),
      },
    );
  }

  async evaluate(docId: string, figureId: string, caption: string): Promise<EvaluationResponse> {
    return this.requestJson<EvaluationResponse>(
      `/documents/${encodeURIComponent(docId)}/figures/${encodeURIComponent(figureId)}/evaluate`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ caption }),
      },
    );
  }
}
