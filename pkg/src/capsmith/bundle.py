"""Interchange bundle: the JSON document format the pipeline consumes.

A bundle is a single JSON object:

    {
      "doc_id": str, "title": str, "abstract": str,
      "paragraphs": [str, ...],
      "figures": [
        {"id": str, "kind": "chart"|"table"|"other", "page": int,
         "caption": str,
         "region": {"x1": num, "y1": num, "x2": num, "y2": num}?,
         "figure_text": [str, ...]?, "image_ref": str?}
      ]
    }

Unknown keys are ignored and field order is irrelevant.  Table-kind figures
are dropped at parse time (counted, not errored).  ``serialize_bundle``
additionally emits a ``source_digest`` key, which ``parse_bundle`` honors
when present so that parse(serialize(doc)) reproduces the document exactly;
bundles from external extractors simply omit it and get a digest computed
from the raw bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

from .model import (
    Document,
    FigureKind,
    FigureRecord,
    ModelError,
    Paragraph,
    Rect,
    normalize_figure_id,
)


class BundleError(ValueError):
    """Base class for interchange failures."""


class BundleParseError(BundleError):
    """The input is not well-formed JSON."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class BundleValidationError(BundleError):
    """Well-formed JSON that violates the bundle schema.

    ``path`` names the offending location, e.g. "figures[1].id".
    """

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ParseSummary:
    document: Document
    dropped_tables: int


def _require(obj: dict, key: str, kind: type, path: str) -> Any:
    if key not in obj:
        raise BundleValidationError("missing required field", f"{path}.{key}")
    value = obj[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise BundleValidationError(
                f"expected a number, got {type(value).__name__}", f"{path}.{key}"
            )
        return float(value)
    if kind is int and isinstance(value, bool):
        raise BundleValidationError("expected an integer, got a bool", f"{path}.{key}")
    if not isinstance(value, kind):
        raise BundleValidationError(
            f"expected {kind.__name__}, got {type(value).__name__}", f"{path}.{key}"
        )
    return value


def _parse_figure(raw: Any, path: str) -> FigureRecord:
    if not isinstance(raw, dict):
        raise BundleValidationError("figure must be an object", path)
    raw_id = _require(raw, "id", str, path)
    try:
        fig_id = normalize_figure_id(raw_id)
    except ModelError as exc:
        raise BundleValidationError(str(exc), f"{path}.id") from exc
    kind_str = _require(raw, "kind", str, path)
    try:
        kind = FigureKind(kind_str)
    except ValueError:
        raise BundleValidationError(
            f"kind must be one of chart/table/other, got {kind_str!r}", f"{path}.kind"
        ) from None
    page = _require(raw, "page", int, path)
    caption = _require(raw, "caption", str, path)

    region = None
    if raw.get("region") is not None:
        reg = raw["region"]
        if not isinstance(reg, dict):
            raise BundleValidationError("region must be an object", f"{path}.region")
        region = Rect(
            x1=_require(reg, "x1", float, f"{path}.region"),
            y1=_require(reg, "y1", float, f"{path}.region"),
            x2=_require(reg, "x2", float, f"{path}.region"),
            y2=_require(reg, "y2", float, f"{path}.region"),
        )

    figure_text: tuple[str, ...] = ()
    if raw.get("figure_text") is not None:
        tokens = raw["figure_text"]
        if not isinstance(tokens, list):
            raise BundleValidationError("must be a list", f"{path}.figure_text")
        for i, tok in enumerate(tokens):
            if not isinstance(tok, str) or not tok:
                raise BundleValidationError(
                    "tokens must be non-empty strings", f"{path}.figure_text[{i}]"
                )
        figure_text = tuple(tokens)

    image_ref = raw.get("image_ref")
    if image_ref is not None and not isinstance(image_ref, str):
        raise BundleValidationError("must be a string", f"{path}.image_ref")

    try:
        return FigureRecord(
            id=fig_id,
            kind=kind,
            caption=caption,
            page=page,
            region=region,
            figure_text=figure_text,
            image_ref=image_ref,
        )
    except ModelError as exc:
        raise BundleValidationError(str(exc), path) from exc


def parse_bundle_summary(data: bytes | str) -> ParseSummary:
    """Parse a bundle, returning the Document plus a drop-count summary."""
    raw_bytes = data.encode("utf-8") if isinstance(data, str) else data
    try:
        obj = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise BundleParseError(exc.msg, exc.pos) from exc
    if not isinstance(obj, dict):
        raise BundleValidationError("bundle must be a JSON object", "$")

    doc_id = _require(obj, "doc_id", str, "$")
    title = _require(obj, "title", str, "$")
    abstract = _require(obj, "abstract", str, "$")

    raw_paragraphs = _require(obj, "paragraphs", list, "$")
    paragraphs = []
    for i, text in enumerate(raw_paragraphs):
        if not isinstance(text, str):
            raise BundleValidationError("must be a string", f"$.paragraphs[{i}]")
        paragraphs.append(Paragraph(index=i, text=text))

    raw_figures = _require(obj, "figures", list, "$")
    figures: list[FigureRecord] = []
    dropped = 0
    seen_ids: set[str] = set()
    for i, raw_fig in enumerate(raw_figures):
        fig = _parse_figure(raw_fig, f"$.figures[{i}]")
        if fig.kind is FigureKind.TABLE:
            dropped += 1
            continue
        if fig.id in seen_ids:
            raise BundleValidationError(
                f"duplicate figure id {fig.id!r}", f"$.figures[{i}].id"
            )
        seen_ids.add(fig.id)
        figures.append(fig)

    digest = obj.get("source_digest")
    if not isinstance(digest, str) or not digest:
        digest = hashlib.sha256(raw_bytes).hexdigest()

    document = Document(
        doc_id=doc_id,
        title=title,
        abstract=abstract,
        paragraphs=tuple(paragraphs),
        figures=tuple(figures),
        source_digest=digest,
    )
    return ParseSummary(document=document, dropped_tables=dropped)


def parse_bundle(data: bytes | str) -> Document:
    """Parse interchange JSON into a validated Document."""
    return parse_bundle_summary(data).document


def serialize_bundle(doc: Document) -> bytes:
    """Serialize a Document to interchange JSON (UTF-8).

    Round trips: parse_bundle(serialize_bundle(doc)) == doc.  Paragraph
    mention sets are derived data and not carried by the interchange format;
    re-run the mention linker after parsing.
    """
    figures = []
    for fig in doc.figures:
        raw: dict[str, Any] = {
            "id": fig.id,
            "kind": fig.kind.value,
            "page": fig.page,
            "caption": fig.caption,
        }
        if fig.region is not None:
            raw["region"] = {
                "x1": fig.region.x1,
                "y1": fig.region.y1,
                "x2": fig.region.x2,
                "y2": fig.region.y2,
            }
        if fig.figure_text:
            raw["figure_text"] = list(fig.figure_text)
        if fig.image_ref is not None:
            raw["image_ref"] = fig.image_ref
        figures.append(raw)

    obj = {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "abstract": doc.abstract,
        "paragraphs": [p.text for p in doc.paragraphs],
        "figures": figures,
        "source_digest": doc.source_digest,
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True).encode("utf-8")
