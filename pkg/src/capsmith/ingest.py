"""Turn a document's text layer into a Document.

Extraction itself sits behind the TextExtractor interface.  The build ships
a plain-text fixture extractor (pages separated by a form-feed line, blocks
by blank lines) so the whole pipeline runs without any PDF dependency;
a real PDF text-layer adapter can implement the same interface.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from .model import (
    Document,
    FigureKind,
    FigureRecord,
    ModelError,
    Paragraph,
    Rect,
    normalize_figure_id,
)


class IngestError(RuntimeError):
    pass


@dataclass(frozen=True)
class TextBlock:
    page: int
    text: str
    bbox: Optional[Rect] = None

    def __post_init__(self) -> None:
        if self.page < 1:
            raise ValueError(f"page must be >= 1, got {self.page}")
        if not self.text.strip():
            raise ValueError("block text must be non-empty")


class TextExtractor(Protocol):
    def extract(self, data: bytes) -> list[TextBlock]: ...


def _normalize_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


class PlainTextExtractor:
    """Fixture extractor: UTF-8 text, pages separated by a line containing
    only a form feed, blocks separated by blank lines."""

    def extract(self, data: bytes) -> list[TextBlock]:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IngestError(f"fixture text is not valid UTF-8: {exc}") from exc
        blocks: list[TextBlock] = []
        for page_no, page in enumerate(re.split(r"^\f$", text, flags=re.MULTILINE), 1):
            for raw_block in re.split(r"\n\s*\n", page):
                normalized = _normalize_ws(raw_block)
                if normalized:
                    blocks.append(TextBlock(page=page_no, text=normalized))
        return blocks


# A caption block starts with "Figure <id>" / "Fig. <id>" followed by
# "." or ":"; "Table <id>" blocks are kept but flagged for exclusion.
_CAPTION_RE = re.compile(
    r"^(?:figure|fig\.?)\s*([A-Za-z]?\d+)\s*[.:]\s*(.*)$", re.IGNORECASE | re.DOTALL
)
_TABLE_RE = re.compile(
    r"^(?:table|tab\.)\s*([A-Za-z]?\d+)\s*[.:]\s*(.*)$", re.IGNORECASE | re.DOTALL
)


@dataclass(frozen=True)
class DetectedCaption:
    figure_id: str
    caption: str
    page: int
    kind: FigureKind
    block_index: int


def detect_caption_blocks(
    blocks: Sequence[TextBlock],
) -> tuple[list[DetectedCaption], list[str]]:
    """Find caption blocks.  Duplicate ids keep the first occurrence and
    produce a warning rather than a failure."""
    detections: list[DetectedCaption] = []
    warnings: list[str] = []
    seen: set[tuple[FigureKind, str]] = set()
    for i, block in enumerate(blocks):
        text = _normalize_ws(block.text)
        kind = FigureKind.OTHER
        m = _CAPTION_RE.match(text)
        if not m:
            m = _TABLE_RE.match(text)
            if not m:
                continue
            kind = FigureKind.TABLE
        try:
            fig_id = normalize_figure_id(m.group(1))
        except ModelError:
            continue
        key = (kind, fig_id)
        if key in seen:
            warnings.append(
                f"duplicate caption for {'table' if kind is FigureKind.TABLE else 'figure'}"
                f" {fig_id} on page {block.page}; keeping the first"
            )
            continue
        seen.add(key)
        detections.append(
            DetectedCaption(
                figure_id=fig_id,
                caption=m.group(2).strip(),
                page=block.page,
                kind=kind,
                block_index=i,
            )
        )
    return detections, warnings


@dataclass(frozen=True)
class IngestResult:
    document: Document
    warnings: tuple[str, ...]
    dropped_tables: int


def _figure_text_tokens(
    caption: DetectedCaption, blocks: Sequence[TextBlock]
) -> tuple[str, ...]:
    """Tokens of blocks sitting in the region above the caption block.

    Best effort: requires bbox data from the extractor, which the plain-text
    fixture adapter does not produce; empty figure_text is legal downstream.
    """
    cap_block = blocks[caption.block_index]
    if cap_block.bbox is None:
        return ()
    tokens: list[str] = []
    for block in blocks:
        if block is cap_block or block.page != cap_block.page or block.bbox is None:
            continue
        overlaps = (
            block.bbox.x1 < cap_block.bbox.x2 and block.bbox.x2 > cap_block.bbox.x1
        )
        above = block.bbox.y2 <= cap_block.bbox.y1
        if overlaps and above:
            tokens.extend(t for t in block.text.split() if t)
    return tuple(tokens)


_ABSTRACT_MARKER_RE = re.compile(r"^abstract$", re.IGNORECASE)
_TERMINAL_END_RE = re.compile(r"[.!?]['\")\]]?$")


def _merge_continuations(blocks: list[str]) -> list[str]:
    """Join a block with its predecessor when the predecessor does not end a
    sentence and the block starts lowercase (page-break continuation)."""
    merged: list[str] = []
    for text in blocks:
        if (
            merged
            and text[:1].islower()
            and not _TERMINAL_END_RE.search(merged[-1])
        ):
            merged[-1] = f"{merged[-1]} {text}"
        else:
            merged.append(text)
    return merged


def build_document(
    data: bytes,
    extractor: Optional[TextExtractor] = None,
    *,
    doc_id: str,
) -> IngestResult:
    """Run extraction, caption detection, and paragraph assembly."""
    extractor = extractor or PlainTextExtractor()
    try:
        blocks = extractor.extract(data)
    except IngestError:
        raise
    except Exception as exc:
        raise IngestError(f"text extraction failed: {exc}") from exc
    if not blocks:
        raise IngestError("text extraction produced no blocks")

    detections, warnings = detect_caption_blocks(blocks)
    caption_indices = {d.block_index for d in detections}
    tables = [d for d in detections if d.kind is FigureKind.TABLE]
    figure_captions = [d for d in detections if d.kind is not FigureKind.TABLE]
    if not figure_captions:
        warnings.append("no figure captions detected")

    title = _normalize_ws(blocks[0].text) if blocks[0].page == 1 else ""
    consumed = {0} if title else set()

    abstract = ""
    for i, block in enumerate(blocks):
        if i in consumed or i in caption_indices:
            continue
        if _ABSTRACT_MARKER_RE.match(block.text.strip()):
            consumed.add(i)
            if i + 1 < len(blocks) and (i + 1) not in caption_indices:
                abstract = blocks[i + 1].text
                consumed.add(i + 1)
            break

    body = [
        block.text
        for i, block in enumerate(blocks)
        if i not in caption_indices and i not in consumed
    ]
    paragraph_texts = _merge_continuations(body)
    paragraphs = tuple(
        Paragraph(index=i, text=text) for i, text in enumerate(paragraph_texts)
    )

    figures = tuple(
        FigureRecord(
            id=d.figure_id,
            kind=FigureKind.OTHER,
            caption=d.caption,
            page=d.page,
            figure_text=_figure_text_tokens(d, blocks),
        )
        for d in figure_captions
    )

    document = Document(
        doc_id=doc_id,
        title=title,
        abstract=abstract,
        paragraphs=paragraphs,
        figures=figures,
        source_digest=hashlib.sha256(data).hexdigest(),
    )
    return IngestResult(
        document=document, warnings=tuple(warnings), dropped_tables=len(tables)
    )
