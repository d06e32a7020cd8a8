"""Six-aspect caption checklist.

The default backend is rule-based and fully deterministic: lexicons and
patterns come from a versioned YAML config (assets/lexicons.yaml) so tuning
them is a data change.  External classifiers plug in through AspectBackend
and are reached over HTTP.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Protocol, Sequence

import httpx
import yaml

from .model import (
    ASPECT_ORDER,
    AspectEntry,
    AspectReport,
    FigureRecord,
    Satisfied,
    Span,
)

RULE_BACKEND_ID = "rule:lexicon-v1"
# Helpfulness has no rule in the source material; this composite is our
# calibration and is flagged as such in its backend id.
COMPOSITE_BACKEND_ID = "rule:composite-v1"


class AnalysisError(RuntimeError):
    def __init__(self, backend_id: str, cause: Exception):
        super().__init__(f"aspect backend {backend_id!r} failed: {cause}")
        self.backend_id = backend_id
        self.cause = cause


@dataclass(frozen=True)
class AspectLexicons:
    relation_cues: tuple[str, ...]
    takeaway_cues: tuple[str, ...]
    visual_lexicon: tuple[str, ...]
    number_pattern: str
    figure_ref_pattern: str
    ocr_min_token_len: int = 3
    helpfulness_min_words: int = 8
    helpfulness_min_aspects: int = 2
    version: int = 1

    def __post_init__(self) -> None:
        for name in ("relation_cues", "takeaway_cues", "visual_lexicon"):
            if not getattr(self, name):
                raise ValueError(f"lexicon {name!r} must be non-empty")

    @staticmethod
    def from_yaml(text: str) -> "AspectLexicons":
        data = yaml.safe_load(text)
        return AspectLexicons(
            relation_cues=tuple(data["relation_cues"]),
            takeaway_cues=tuple(data["takeaway_cues"]),
            visual_lexicon=tuple(data["visual_lexicon"]),
            number_pattern=data["number_pattern"],
            figure_ref_pattern=data["figure_ref_pattern"],
            ocr_min_token_len=int(data.get("ocr_min_token_len", 3)),
            helpfulness_min_words=int(data.get("helpfulness_min_words", 8)),
            helpfulness_min_aspects=int(data.get("helpfulness_min_aspects", 2)),
            version=int(data.get("version", 1)),
        )

    @staticmethod
    def from_file(path: str) -> "AspectLexicons":
        with open(path, encoding="utf-8") as fh:
            return AspectLexicons.from_yaml(fh.read())


@lru_cache(maxsize=1)
def default_lexicons() -> AspectLexicons:
    text = resources.files("capsmith.assets").joinpath("lexicons.yaml").read_text("utf-8")
    return AspectLexicons.from_yaml(text)


_WORD_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9'\-]*")


def _normalize_token(token: str) -> str:
    return token.casefold().strip("'-")


def check_ocr(
    caption: str,
    figure_text: Sequence[str],
    lexicons: Optional[AspectLexicons] = None,
) -> AspectEntry:
    """Does the caption repeat words that appear inside the figure?

    Unknown when there is no figure text to compare against.  Tokens shorter
    than the configured minimum only match as single-character series labels
    (legend names like "A" or "x" are meaningful figure tokens).
    """
    lex = lexicons or default_lexicons()
    if not figure_text:
        return AspectEntry(Satisfied.UNKNOWN, (), RULE_BACKEND_ID)
    normalized_fig = {_normalize_token(tok) for tok in figure_text}
    normalized_fig.discard("")
    evidence: list[Span] = []
    for m in _WORD_RE.finditer(caption):
        tok = _normalize_token(m.group(0))
        if len(tok) < lex.ocr_min_token_len and len(tok) != 1:
            continue
        if tok in normalized_fig:
            evidence.append((m.start(), m.end()))
    status = Satisfied.YES if evidence else Satisfied.NO
    return AspectEntry(status, tuple(evidence), RULE_BACKEND_ID)


def _pattern_evidence(caption: str, patterns: Sequence[str]) -> list[Span]:
    spans: list[Span] = []
    for pat in patterns:
        for m in re.finditer(pat, caption, flags=re.IGNORECASE):
            spans.append((m.start(), m.end()))
    spans.sort()
    return spans


def check_relation(
    caption: str, lexicons: Optional[AspectLexicons] = None
) -> AspectEntry:
    """Does the caption relate two or more elements ("A is lower than B")?"""
    lex = lexicons or default_lexicons()
    evidence = _pattern_evidence(caption, lex.relation_cues)
    status = Satisfied.YES if evidence else Satisfied.NO
    return AspectEntry(status, tuple(evidence), RULE_BACKEND_ID)


def check_stats(caption: str, lexicons: Optional[AspectLexicons] = None) -> AspectEntry:
    """Does the caption cite numbers that are not figure/section references?"""
    lex = lexicons or default_lexicons()
    excluded: list[Span] = []
    for m in re.finditer(lex.figure_ref_pattern, caption, flags=re.IGNORECASE):
        excluded.append((m.start(), m.end()))
    evidence: list[Span] = []
    for m in re.finditer(lex.number_pattern, caption, flags=re.IGNORECASE):
        start, end = m.start(), m.end()
        if any(s <= start and end <= e for s, e in excluded):
            continue
        # Reject numbers glued to an identifier ("ResNet50").
        if start > 0 and (caption[start - 1].isalnum() or caption[start - 1] == "_"):
            continue
        evidence.append((start, end))
    status = Satisfied.YES if evidence else Satisfied.NO
    return AspectEntry(status, tuple(evidence), RULE_BACKEND_ID)


def check_takeaway(
    caption: str, lexicons: Optional[AspectLexicons] = None
) -> AspectEntry:
    """Does the caption state a high-level conclusion or insight?"""
    lex = lexicons or default_lexicons()
    patterns = [rf"\b{re.escape(cue)}\b" for cue in lex.takeaway_cues]
    evidence = _pattern_evidence(caption, patterns)
    status = Satisfied.YES if evidence else Satisfied.NO
    return AspectEntry(status, tuple(evidence), RULE_BACKEND_ID)


def check_visual(
    caption: str, lexicons: Optional[AspectLexicons] = None
) -> AspectEntry:
    """Does the caption mention visual characteristics (color, shape, ...)?"""
    lex = lexicons or default_lexicons()
    words = sorted(lex.visual_lexicon, key=len, reverse=True)
    pattern = r"\b(?:" + "|".join(re.escape(w) for w in words) + r")\b"
    evidence = _pattern_evidence(caption, [pattern])
    status = Satisfied.YES if evidence else Satisfied.NO
    return AspectEntry(status, tuple(evidence), RULE_BACKEND_ID)


def check_helpfulness(
    caption: str,
    other_aspects: dict[str, AspectEntry],
    lexicons: Optional[AspectLexicons] = None,
) -> AspectEntry:
    """Composite stand-in for the learned helpfulness label.

    Yes when the caption is long enough and covers at least the configured
    number of content aspects.
    """
    lex = lexicons or default_lexicons()
    word_count = len(caption.split())
    yes_count = sum(
        1 for e in other_aspects.values() if e.satisfied is Satisfied.YES
    )
    ok = word_count >= lex.helpfulness_min_words and yes_count >= lex.helpfulness_min_aspects
    return AspectEntry(
        Satisfied.YES if ok else Satisfied.NO, (), COMPOSITE_BACKEND_ID
    )


class AspectBackend(Protocol):
    backend_id: str

    def analyze(
        self,
        caption: str,
        figure: FigureRecord,
        paragraphs: Sequence[str],
    ) -> AspectReport: ...


@dataclass(frozen=True)
class RuleAspectBackend:
    """Deterministic lexicon-driven backend; the shipping default."""

    lexicons: AspectLexicons = field(default_factory=default_lexicons)
    backend_id: str = RULE_BACKEND_ID

    def analyze(
        self,
        caption: str,
        figure: FigureRecord,
        paragraphs: Sequence[str] = (),
    ) -> AspectReport:
        lex = self.lexicons
        entries = {
            "ocr": check_ocr(caption, figure.figure_text, lex),
            "relation": check_relation(caption, lex),
            "stats": check_stats(caption, lex),
            "takeaway": check_takeaway(caption, lex),
            "visual": check_visual(caption, lex),
        }
        entries["helpfulness"] = check_helpfulness(caption, entries, lex)
        return AspectReport(entries=entries, caption=caption)


@dataclass
class HttpAspectBackend:
    """External classifier reached over HTTP.

    POSTs {caption, figure_text, paragraphs} and expects a JSON object with
    a boolean per aspect name.
    """

    url: str
    backend_id: str = "http:aspect-classifier"
    timeout: float = 30.0
    client: Optional[httpx.Client] = None

    def analyze(
        self,
        caption: str,
        figure: FigureRecord,
        paragraphs: Sequence[str] = (),
    ) -> AspectReport:
        payload = {
            "caption": caption,
            "figure_text": list(figure.figure_text),
            "paragraphs": list(paragraphs),
        }
        http = self.client if self.client is not None else httpx
        resp = http.post(self.url, json=payload, timeout=self.timeout)
        resp.raise_for_status()
        data = resp.json()
        entries = {}
        for name in ASPECT_ORDER:
            if name not in data:
                raise ValueError(f"classifier response missing aspect {name!r}")
            entries[name] = AspectEntry(
                Satisfied.YES if data[name] else Satisfied.NO, (), self.backend_id
            )
        return AspectReport(entries=entries, caption=caption)


def analyze(
    caption: str,
    figure: FigureRecord,
    paragraphs: Sequence[str] = (),
    backend: Optional[AspectBackend] = None,
) -> AspectReport:
    """Run the six-aspect check; wraps backend failures with their id."""
    backend = backend or RuleAspectBackend()
    try:
        return backend.analyze(caption, figure, paragraphs)
    except Exception as exc:
        if isinstance(exc, AnalysisError):
            raise
        raise AnalysisError(backend.backend_id, exc) from exc
