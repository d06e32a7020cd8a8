"""Shared domain types for documents, figures, captions, and sessions.

Everything here is a plain value object. Instances validate their own
invariants at construction time and are treated as immutable afterwards
(CaptionSession is the one exception: the service layer owns its mutation).
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Optional


class ModelError(ValueError):
    """An invariant of a domain type was violated."""


# ---------------------------------------------------------------------------
# Figure identifiers
# ---------------------------------------------------------------------------

# Canonical form: optional single uppercase letter prefix, digits without
# leading zeros ("3", "A1").  Raw tokens may carry leading zeros and
# lowercase prefixes ("03", "a1").
_RAW_ID_RE = re.compile(r"^([A-Za-z]?)0*(\d+)$")
CANONICAL_ID_RE = re.compile(r"^[A-Z]?(?:0|[1-9][0-9]*)$")


def normalize_figure_id(token: str) -> str:
    """Canonicalize a raw figure identifier token.

    "03" -> "3", "a1" -> "A1".  Raises ModelError for tokens outside the
    identifier grammar.
    """
    m = _RAW_ID_RE.match(token.strip())
    if not m:
        raise ModelError(f"not a figure identifier: {token!r}")
    prefix, digits = m.group(1).upper(), m.group(2)
    return f"{prefix}{int(digits)}"


def is_canonical_id(token: str) -> bool:
    return bool(CANONICAL_ID_RE.match(token))


# ---------------------------------------------------------------------------
# Document structure
# ---------------------------------------------------------------------------


class FigureKind(str, Enum):
    CHART = "chart"
    OTHER = "other"
    TABLE = "table"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in page coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float


@dataclass(frozen=True)
class Paragraph:
    index: int
    text: str
    # Canonical figure ids mentioned in this paragraph; filled by the
    # mention linker after construction, empty until then.
    mentions: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ModelError(f"paragraph index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class FigureRecord:
    id: str
    kind: FigureKind
    caption: str = ""
    page: int = 1
    region: Optional[Rect] = None
    figure_text: tuple[str, ...] = ()
    image_ref: Optional[str] = None

    def __post_init__(self) -> None:
        if not is_canonical_id(self.id):
            raise ModelError(f"figure id not canonical: {self.id!r}")
        if self.page < 1:
            raise ModelError(f"figure {self.id}: page must be >= 1, got {self.page}")
        if any(not tok for tok in self.figure_text):
            raise ModelError(f"figure {self.id}: empty figure_text token")


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str
    paragraphs: tuple[Paragraph, ...]
    figures: tuple[FigureRecord, ...]
    source_digest: str

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for fig in self.figures:
            if fig.kind is FigureKind.TABLE:
                raise ModelError(f"table-kind figure {fig.id!r} in document")
            if fig.id in seen:
                raise ModelError(f"duplicate figure id {fig.id!r}")
            seen.add(fig.id)
        for i, para in enumerate(self.paragraphs):
            if para.index != i:
                raise ModelError(
                    f"paragraph indices must be contiguous from 0; "
                    f"position {i} has index {para.index}"
                )
            unknown = para.mentions - seen
            if unknown:
                raise ModelError(
                    f"paragraph {i} mentions unknown figures: {sorted(unknown)}"
                )

    def figure(self, figure_id: str) -> FigureRecord:
        for fig in self.figures:
            if fig.id == figure_id:
                return fig
        raise KeyError(figure_id)

    @property
    def figure_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.figures)


# ---------------------------------------------------------------------------
# Caption quality analysis
# ---------------------------------------------------------------------------

# Fixed display/report order of the six aspects.
ASPECT_ORDER = ("helpfulness", "ocr", "relation", "stats", "takeaway", "visual")
CONTENT_ASPECTS = ("ocr", "relation", "stats", "takeaway", "visual")

Span = tuple[int, int]


class Satisfied(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class AspectEntry:
    satisfied: Satisfied
    evidence: tuple[Span, ...] = ()
    backend_id: str = ""


@dataclass(frozen=True)
class AspectReport:
    """Result of the six-aspect caption check.

    ``entries`` maps each aspect name in ASPECT_ORDER to its entry; the
    ``unknown`` state is only legal for the ocr aspect (missing figure text).
    """

    entries: Mapping[str, AspectEntry]
    caption: str = ""

    def __post_init__(self) -> None:
        if set(self.entries) != set(ASPECT_ORDER):
            raise ModelError(
                f"aspect report must have exactly the aspects {ASPECT_ORDER}, "
                f"got {sorted(self.entries)}"
            )
        for name, entry in self.entries.items():
            if entry.satisfied is Satisfied.UNKNOWN and name != "ocr":
                raise ModelError(f"aspect {name!r} may not be unknown")
            for start, end in entry.evidence:
                if not (0 <= start <= end <= len(self.caption)):
                    raise ModelError(
                        f"aspect {name!r}: evidence span ({start}, {end}) outside "
                        f"caption of length {len(self.caption)}"
                    )

    def __getitem__(self, aspect: str) -> AspectEntry:
        return self.entries[aspect]

    def content_yes_count(self) -> int:
        return sum(
            1
            for name in CONTENT_ASPECTS
            if self.entries[name].satisfied is Satisfied.YES
        )

    def missing_aspects(self) -> tuple[str, ...]:
        return tuple(
            name
            for name in CONTENT_ASPECTS
            if self.entries[name].satisfied is not Satisfied.YES
        )


@dataclass(frozen=True)
class CaptionRating:
    score: int
    explanation: str
    backend_id: str
    raw_response: Optional[str] = None

    def __post_init__(self) -> None:
        if not 1 <= self.score <= 6:
            raise ModelError(f"rating score must be in [1, 6], got {self.score}")
        if not self.explanation:
            raise ModelError("rating explanation must be non-empty")


class CaptionVariant(str, Enum):
    LONG = "long"
    SHORT = "short"


@dataclass(frozen=True)
class GeneratedCaption:
    variant: CaptionVariant
    text: str
    backend_id: str
    rating: Optional[CaptionRating] = None

    def word_count(self) -> int:
        return len(self.text.split())


# ---------------------------------------------------------------------------
# Editing sessions
# ---------------------------------------------------------------------------


@dataclass
class CaptionSession:
    """Per-figure editing state.  Mutated only by the service layer."""

    doc_id: str
    figure_id: str
    drafts: list[tuple[str, float]] = field(default_factory=list)
    evaluations: list[tuple[str, AspectReport, CaptionRating]] = field(
        default_factory=list
    )
    evaluation_limit: int = 2

    @property
    def evaluation_count(self) -> int:
        return len(self.evaluations)

    @property
    def remaining(self) -> int:
        return max(0, self.evaluation_limit - self.evaluation_count)

    def add_draft(self, caption: str, timestamp: Optional[float] = None) -> None:
        self.drafts.append((caption, time.time() if timestamp is None else timestamp))

    def add_evaluation(
        self, caption: str, report: AspectReport, rating: CaptionRating
    ) -> None:
        if self.evaluation_count >= self.evaluation_limit:
            raise ModelError(
                f"evaluation limit reached "
                f"({self.evaluation_count}/{self.evaluation_limit})"
            )
        self.evaluations.append((caption, report, rating))

    def summary(self) -> dict[str, int]:
        return {
            "evaluations_used": self.evaluation_count,
            "evaluation_limit": self.evaluation_limit,
            "drafts": len(self.drafts),
        }


# ---------------------------------------------------------------------------
# JSON helpers for the analysis types (used by the store and the service)
# ---------------------------------------------------------------------------


def aspect_report_to_json(report: AspectReport) -> dict[str, Any]:
    return {
        "caption": report.caption,
        "aspects": {
            name: {
                "satisfied": entry.satisfied.value,
                "evidence": [list(span) for span in entry.evidence],
                "backend_id": entry.backend_id,
            }
            for name, entry in report.entries.items()
        },
    }


def aspect_report_from_json(data: Mapping[str, Any]) -> AspectReport:
    entries = {
        name: AspectEntry(
            satisfied=Satisfied(raw["satisfied"]),
            evidence=tuple((int(s), int(e)) for s, e in raw.get("evidence", [])),
            backend_id=raw.get("backend_id", ""),
        )
        for name, raw in data["aspects"].items()
    }
    return AspectReport(entries=entries, caption=data.get("caption", ""))


def rating_to_json(rating: CaptionRating) -> dict[str, Any]:
    out: dict[str, Any] = {
        "score": rating.score,
        "explanation": rating.explanation,
        "backend_id": rating.backend_id,
    }
    if rating.raw_response is not None:
        out["raw_response"] = rating.raw_response
    return out


def rating_from_json(data: Mapping[str, Any]) -> CaptionRating:
    return CaptionRating(
        score=int(data["score"]),
        explanation=data["explanation"],
        backend_id=data.get("backend_id", ""),
        raw_response=data.get("raw_response"),
    )


def generated_caption_to_json(cap: GeneratedCaption) -> dict[str, Any]:
    out: dict[str, Any] = {
        "variant": cap.variant.value,
        "text": cap.text,
        "backend_id": cap.backend_id,
    }
    if cap.rating is not None:
        out["rating"] = rating_to_json(cap.rating)
    return out


def generated_caption_from_json(data: Mapping[str, Any]) -> GeneratedCaption:
    rating = rating_from_json(data["rating"]) if "rating" in data else None
    return GeneratedCaption(
        variant=CaptionVariant(data["variant"]),
        text=data["text"],
        backend_id=data.get("backend_id", ""),
        rating=rating,
    )


def session_to_json(session: CaptionSession) -> dict[str, Any]:
    return {
        "doc_id": session.doc_id,
        "figure_id": session.figure_id,
        "evaluation_limit": session.evaluation_limit,
        "drafts": [[text, ts] for text, ts in session.drafts],
        "evaluations": [
            {
                "caption": caption,
                "report": aspect_report_to_json(report),
                "rating": rating_to_json(rating),
            }
            for caption, report, rating in session.evaluations
        ],
    }


def session_from_json(data: Mapping[str, Any]) -> CaptionSession:
    session = CaptionSession(
        doc_id=data["doc_id"],
        figure_id=data["figure_id"],
        evaluation_limit=int(data.get("evaluation_limit", 2)),
    )
    session.drafts = [(text, float(ts)) for text, ts in data.get("drafts", [])]
    session.evaluations = [
        (
            item["caption"],
            aspect_report_from_json(item["report"]),
            rating_from_json(item["rating"]),
        )
        for item in data.get("evaluations", [])
    ]
    return session


def with_paragraph_mentions(
    doc: Document, mentions_by_index: Mapping[int, Iterable[str]]
) -> Document:
    """Return a copy of ``doc`` whose paragraphs carry the given mention sets."""
    paragraphs = tuple(
        replace(p, mentions=set(mentions_by_index.get(p.index, ())))
        for p in doc.paragraphs
    )
    return replace(doc, paragraphs=paragraphs)
