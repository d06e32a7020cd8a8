"""HTTP API tying the pipeline together.

Endpoints:
    POST /documents                          upload a bundle or text-layer pdf
    GET  /documents/{id}/figures             figure summaries, document order
    GET  /documents/{id}/figures/{fid}       full per-figure panel payload
    PUT  /documents/{id}/figures/{fid}/draft save a draft (free, unlimited)
    POST /documents/{id}/figures/{fid}/evaluate  submission-limited evaluation
    GET  /healthz

Errors use a uniform body: {"code": str, "message": str, "detail"?: any}.
Generated-caption ratings are computed once per document and cached in the
store; user-caption evaluations are always computed fresh.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import aspects as aspects_mod
from . import generation as generation_mod
from . import rating as rating_mod
from .bundle import BundleError, parse_bundle_summary
from .ingest import IngestError, PlainTextExtractor, TextExtractor, build_document
from .mentions import link_paragraphs
from .model import (
    CaptionSession,
    Document,
    aspect_report_to_json,
    generated_caption_to_json,
    rating_to_json,
)
from .rating import HeuristicRatingBackend, RatingBackend, RatingError, build_context
from .store import FileStore, MemoryStore, Store


@dataclass
class ServiceConfig:
    evaluation_limit: int = 2
    max_upload_bytes: int = 10 * 1024 * 1024
    storage_path: Optional[str] = None
    compute_at_upload: bool = True
    fallback_to_heuristic: bool = True
    static_dir: Optional[str] = None
    # Hosted rating backend; unset means offline heuristic only.
    rating_endpoint: Optional[str] = None
    rating_model: str = "gpt-3.5-turbo"
    rating_api_key: str = ""
    rating_timeout: float = 30.0

    @staticmethod
    def from_env(env: Optional[dict[str, str]] = None) -> "ServiceConfig":
        env = dict(os.environ if env is None else env)
        cfg = ServiceConfig()
        if "CAPSMITH_EVALUATION_LIMIT" in env:
            cfg.evaluation_limit = int(env["CAPSMITH_EVALUATION_LIMIT"])
        if "CAPSMITH_MAX_UPLOAD_BYTES" in env:
            cfg.max_upload_bytes = int(env["CAPSMITH_MAX_UPLOAD_BYTES"])
        cfg.storage_path = env.get("CAPSMITH_STORAGE_PATH") or cfg.storage_path
        cfg.static_dir = env.get("CAPSMITH_STATIC_DIR") or cfg.static_dir
        cfg.rating_endpoint = env.get("CAPSMITH_RATING_URL") or cfg.rating_endpoint
        cfg.rating_model = env.get("CAPSMITH_RATING_MODEL", cfg.rating_model)
        cfg.rating_api_key = env.get("CAPSMITH_RATING_API_KEY", cfg.rating_api_key)
        if "CAPSMITH_RATING_TIMEOUT" in env:
            cfg.rating_timeout = float(env["CAPSMITH_RATING_TIMEOUT"])
        if "CAPSMITH_COMPUTE_AT_UPLOAD" in env:
            cfg.compute_at_upload = env["CAPSMITH_COMPUTE_AT_UPLOAD"] not in ("0", "false")
        return cfg


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail

    def body(self) -> dict[str, Any]:
        out: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class Pipeline:
    """Bundles the analysis backends the service runs.

    Pipeline itself satisfies the rating-backend protocol: rate() tries the
    configured backend and falls back to the offline heuristic (when one is
    set), so generated-caption ratings share the same fallback behavior as
    user-caption evaluations.
    """

    aspect_backend: aspects_mod.AspectBackend = field(
        default_factory=aspects_mod.RuleAspectBackend
    )
    rating_backend: RatingBackend = field(default_factory=HeuristicRatingBackend)
    generation_backend: Optional[generation_mod.GenerationBackend] = None
    fallback_rating: Optional[RatingBackend] = None

    @property
    def backend_id(self) -> str:
        return self.rating_backend.backend_id

    def rate(self, ctx, report=None):
        return self.rate_with_fallback(ctx, report)

    def rate_with_fallback(self, ctx, report):
        try:
            return self.rating_backend.rate(ctx, report)
        except RatingError:
            if self.fallback_rating is None:
                raise
            return self.fallback_rating.rate(ctx, report)


def _analyze_document(doc: Document, pipeline: Pipeline) -> dict[str, Any]:
    """Compute the cached per-figure artifacts for a document."""
    index = link_paragraphs(doc)
    figures: dict[str, Any] = {}
    for fig in doc.figures:
        mention_texts = [doc.paragraphs[i].text for i in index[fig.id]]
        report = pipeline.aspect_backend.analyze(fig.caption, fig, mention_texts)
        entry: dict[str, Any] = {"report": aspect_report_to_json(report)}
        if fig.caption.strip():
            ctx = build_context(mention_texts, fig.caption)
            entry["rating"] = rating_to_json(pipeline.rate_with_fallback(ctx, report))
        else:
            entry["rating"] = None
        pair = generation_mod.generate_pair_with_ratings(
            fig,
            mention_texts,
            gen_backend=pipeline.generation_backend,
            rating_backend=pipeline,
            aspect_backend=pipeline.aspect_backend,
        )
        entry["generated"] = {
            "long": generated_caption_to_json(pair.long) if pair.long else None,
            "short": generated_caption_to_json(pair.short) if pair.short else None,
            "errors": {name: message for name, message in pair.errors},
        }
        figures[fig.id] = entry
    return {"mention_index": index, "figures": figures}


def create_app(
    config: Optional[ServiceConfig] = None,
    store: Optional[Store] = None,
    pipeline: Optional[Pipeline] = None,
    extractor: Optional[TextExtractor] = None,
) -> FastAPI:
    cfg = config or ServiceConfig()
    if store is None:
        store = FileStore(cfg.storage_path) if cfg.storage_path else MemoryStore()
    if pipeline is None:
        if cfg.rating_endpoint:
            hosted = rating_mod.HostedRatingBackend(
                endpoint=cfg.rating_endpoint,
                model=cfg.rating_model,
                api_key=cfg.rating_api_key,
                timeout=cfg.rating_timeout,
            )
            fallback = HeuristicRatingBackend() if cfg.fallback_to_heuristic else None
            pipeline = Pipeline(rating_backend=hosted, fallback_rating=fallback)
        else:
            pipeline = Pipeline()
    extractor = extractor or PlainTextExtractor()

    app = FastAPI(title="capsmith", docs_url=None, redoc_url=None)
    session_locks: dict[tuple[str, str], threading.Lock] = {}
    locks_guard = threading.Lock()

    def session_lock(doc_id: str, figure_id: str) -> threading.Lock:
        with locks_guard:
            return session_locks.setdefault((doc_id, figure_id), threading.Lock())

    @app.exception_handler(ApiError)
    async def handle_api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status, content=exc.body())

    def load_document(doc_id: str) -> Document:
        doc = store.get_document(doc_id)
        if doc is None:
            raise ApiError(404, "not_found", f"unknown document {doc_id!r}")
        return doc

    def load_figure(doc: Document, figure_id: str):
        try:
            return doc.figure(figure_id)
        except KeyError:
            raise ApiError(
                404, "not_found", f"unknown figure {figure_id!r} in {doc.doc_id!r}"
            ) from None

    def ensure_analysis(doc: Document) -> dict[str, Any]:
        analysis = store.get_analysis(doc.doc_id)
        if analysis is None:
            analysis = _analyze_document(doc, pipeline)
            store.put_analysis(doc.doc_id, analysis)
        return analysis

    def load_session(doc_id: str, figure_id: str) -> CaptionSession:
        session = store.get_session(doc_id, figure_id)
        if session is None:
            session = CaptionSession(
                doc_id=doc_id,
                figure_id=figure_id,
                evaluation_limit=cfg.evaluation_limit,
            )
        return session

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/documents", status_code=201)
    async def create_document(request: Request) -> dict[str, Any]:
        content_type = request.headers.get("content-type", "")
        fmt = request.query_params.get("format")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                raise ApiError(400, "bad_request", "multipart upload requires a 'file' field")
            payload = await upload.read()
            fmt = fmt or form.get("format")
        else:
            payload = await request.body()
            if fmt is None:
                fmt = "bundle" if content_type.startswith("application/json") else None
        if fmt not in ("pdf", "bundle"):
            raise ApiError(
                400, "bad_request", "format must be 'pdf' or 'bundle'", {"format": fmt}
            )
        if len(payload) > cfg.max_upload_bytes:
            raise ApiError(
                413,
                "payload_too_large",
                f"upload exceeds {cfg.max_upload_bytes} bytes",
                {"size": len(payload)},
            )
        if not payload:
            raise ApiError(400, "bad_request", "empty upload")

        warnings: list[str] = []
        dropped = 0
        if fmt == "bundle":
            try:
                summary = parse_bundle_summary(payload)
            except BundleError as exc:
                raise ApiError(400, "invalid_bundle", str(exc)) from exc
            doc = summary.document
            dropped = summary.dropped_tables
        else:
            doc_id = request.query_params.get("doc_id") or f"doc-{_digest8(payload)}"
            try:
                result = build_document(payload, extractor, doc_id=doc_id)
            except IngestError as exc:
                raise ApiError(400, "ingest_failed", str(exc)) from exc
            doc = result.document
            warnings = list(result.warnings)
            dropped = result.dropped_tables

        store.put_document(doc)
        if cfg.compute_at_upload:
            store.put_analysis(doc.doc_id, _analyze_document(doc, pipeline))
        return {
            "doc_id": doc.doc_id,
            "figure_count": len(doc.figures),
            "paragraph_count": len(doc.paragraphs),
            "dropped_tables": dropped,
            "warnings": warnings,
        }

    @app.get("/documents/{doc_id}/figures")
    def list_figures(doc_id: str) -> list[dict[str, Any]]:
        doc = load_document(doc_id)
        analysis = ensure_analysis(doc)
        out = []
        for fig in doc.figures:
            cached = analysis["figures"].get(fig.id, {})
            rating = cached.get("rating")
            out.append(
                {
                    "id": fig.id,
                    "page": fig.page,
                    "caption": fig.caption,
                    "rating_score": rating["score"] if rating else None,
                }
            )
        return out

    @app.get("/documents/{doc_id}/figures/{figure_id}")
    def get_figure_detail(doc_id: str, figure_id: str) -> dict[str, Any]:
        doc = load_document(doc_id)
        fig = load_figure(doc, figure_id)
        analysis = ensure_analysis(doc)
        cached = analysis["figures"][fig.id]
        session = load_session(doc_id, figure_id)
        mention_paragraphs = [
            {"index": i, "text": doc.paragraphs[i].text}
            for i in analysis["mention_index"].get(fig.id, [])
        ]
        current_caption = session.drafts[-1][0] if session.drafts else fig.caption
        return {
            "figure": {
                "id": fig.id,
                "kind": fig.kind.value,
                "page": fig.page,
                "caption": fig.caption,
                "image_ref": fig.image_ref,
                "has_region": fig.region is not None,
            },
            "current_caption": current_caption,
            "aspect_report": cached["report"],
            "rating": cached["rating"],
            "generated": cached["generated"],
            "mention_paragraphs": mention_paragraphs,
            "session": session.summary(),
        }

    @app.put("/documents/{doc_id}/figures/{figure_id}/draft")
    def save_draft(doc_id: str, figure_id: str, body: dict) -> dict[str, Any]:
        doc = load_document(doc_id)
        load_figure(doc, figure_id)
        caption = body.get("caption")
        if caption is None or not isinstance(caption, str):
            raise ApiError(400, "bad_request", "body must carry a string 'caption'")
        with session_lock(doc_id, figure_id):
            session = load_session(doc_id, figure_id)
            session.add_draft(caption)
            store.put_session(session)
            summary = session.summary()
        summary["empty_caption"] = not caption.strip()
        return summary

    @app.post("/documents/{doc_id}/figures/{figure_id}/evaluate")
    def evaluate_caption(doc_id: str, figure_id: str, body: dict) -> dict[str, Any]:
        doc = load_document(doc_id)
        fig = load_figure(doc, figure_id)
        caption = body.get("caption")
        if caption is None or not isinstance(caption, str) or not caption.strip():
            raise ApiError(400, "bad_request", "evaluation requires a non-empty caption")
        analysis = ensure_analysis(doc)
        mention_texts = [
            doc.paragraphs[i].text
            for i in analysis["mention_index"].get(figure_id, [])
        ]
        with session_lock(doc_id, figure_id):
            session = load_session(doc_id, figure_id)
            if session.evaluation_count >= session.evaluation_limit:
                raise ApiError(
                    409,
                    "submission_limit_reached",
                    f"submission limit reached "
                    f"({session.evaluation_count}/{session.evaluation_limit})",
                    {
                        "used": session.evaluation_count,
                        "limit": session.evaluation_limit,
                    },
                )
            report = pipeline.aspect_backend.analyze(caption, fig, mention_texts)
            ctx = build_context(mention_texts, caption)
            rating = pipeline.rate_with_fallback(ctx, report)
            session.add_evaluation(caption, report, rating)
            store.put_session(session)
            summary = session.summary()
        return {
            "aspect_report": aspect_report_to_json(report),
            "rating": rating_to_json(rating),
            "session": summary,
        }

    if cfg.static_dir and os.path.isdir(cfg.static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=cfg.static_dir, html=True), name="static")

    return app


def _digest8(data: bytes) -> str:
    import hashlib

    return hashlib.sha256(data).hexdigest()[:8]
