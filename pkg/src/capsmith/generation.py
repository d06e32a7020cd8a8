"""Long/short candidate captions for a figure.

The default backend is extractive: it ranks sentences from the
figure-mentioning paragraphs and assembles variants from them, so every
output sentence is guaranteed to come from the source text.  Hosted
abstractive models plug in through GenerationBackend over HTTP.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Protocol, Sequence

import httpx
import yaml

from .aspects import AspectBackend, AspectLexicons, RuleAspectBackend, default_lexicons
from .mentions import find_mentions
from .model import CaptionVariant, FigureRecord, GeneratedCaption
from .rating import HeuristicRatingBackend, RatingBackend, build_context

EXTRACTIVE_BACKEND_ID = "extractive:v1"

_ID_PATTERN = r"[A-Za-z]?\d+"


class GenerationError(RuntimeError):
    def __init__(self, message: str, variant: Optional[CaptionVariant] = None):
        super().__init__(message)
        self.variant = variant


@dataclass(frozen=True)
class DecodeParams:
    num_beams: int = 5
    max_words: Optional[int] = None

    def __post_init__(self) -> None:
        if self.num_beams < 1:
            raise ValueError(f"num_beams must be >= 1, got {self.num_beams}")


@dataclass(frozen=True)
class GenerationConfig:
    mention_weight: float = 2.0
    position_weight: float = 1.0
    lexicon_weight: float = 1.0
    long_min_words: int = 30
    short_max_words: int = 30
    abbreviations: tuple[str, ...] = ()
    prefix_strip: tuple[str, ...] = ()

    @staticmethod
    def from_yaml(text: str) -> "GenerationConfig":
        data = yaml.safe_load(text)
        weights = data.get("weights", {})
        return GenerationConfig(
            mention_weight=float(weights.get("mention", 2.0)),
            position_weight=float(weights.get("position", 1.0)),
            lexicon_weight=float(weights.get("lexicon", 1.0)),
            long_min_words=int(data.get("long_min_words", 30)),
            short_max_words=int(data.get("short_max_words", 30)),
            abbreviations=tuple(data.get("abbreviations", ())),
            prefix_strip=tuple(data.get("prefix_strip", ())),
        )


@lru_cache(maxsize=1)
def default_config() -> GenerationConfig:
    text = (
        resources.files("capsmith.assets")
        .joinpath("generation.yaml")
        .read_text("utf-8")
    )
    return GenerationConfig.from_yaml(text)


# ---------------------------------------------------------------------------
# Sentence splitting and scoring
# ---------------------------------------------------------------------------

_TERMINAL_RE = re.compile(r"[.!?]+")


def split_sentences(text: str, abbreviations: Sequence[str] = ()) -> list[str]:
    """Split on terminal punctuation followed by whitespace and an uppercase
    start, except after known abbreviations."""
    abbrs = tuple(a.casefold() for a in abbreviations)
    out: list[str] = []
    start = 0
    for m in _TERMINAL_RE.finditer(text):
        end = m.end()
        rest = text[end:]
        lead = rest.lstrip()
        if not lead:
            continue
        if rest == lead or not lead[0].isupper():
            continue
        chunk = text[start:end]
        if chunk.rstrip().casefold().endswith(abbrs):
            continue
        sentence = chunk.strip()
        if sentence:
            out.append(sentence)
        start = end
    tail = text[start:].strip()
    if tail:
        out.append(tail)
    return out


@dataclass(frozen=True)
class ScoredSentence:
    text: str
    score: float
    paragraph_index: int
    sentence_index: int
    doc_position: int


def _lexicon_hits(sentence: str, lexicons: AspectLexicons) -> int:
    hits = 0
    words = sorted(lexicons.visual_lexicon, key=len, reverse=True)
    visual_re = r"\b(?:" + "|".join(re.escape(w) for w in words) + r")\b"
    hits += len(re.findall(visual_re, sentence, flags=re.IGNORECASE))
    for cue in lexicons.takeaway_cues:
        hits += len(re.findall(rf"\b{re.escape(cue)}\b", sentence, flags=re.IGNORECASE))
    for pat in lexicons.relation_cues:
        hits += len(re.findall(pat, sentence, flags=re.IGNORECASE))
    return hits


def score_sentences(
    paragraphs: Sequence[str],
    figure_id: str,
    config: Optional[GenerationConfig] = None,
    lexicons: Optional[AspectLexicons] = None,
) -> list[ScoredSentence]:
    """Rank candidate sentences, best first; ties favor earlier position."""
    cfg = config or default_config()
    lex = lexicons or default_lexicons()
    scored: list[ScoredSentence] = []
    position = 0
    for p_idx, paragraph in enumerate(paragraphs):
        for s_idx, sentence in enumerate(split_sentences(paragraph, cfg.abbreviations)):
            mention = 1.0 if find_mentions(sentence, {figure_id}) else 0.0
            decay = 1.0 / (1.0 + s_idx)
            n_words = max(1, len(sentence.split()))
            overlap = min(1.0, _lexicon_hits(sentence, lex) / n_words)
            score = (
                cfg.mention_weight * mention
                + cfg.position_weight * decay
                + cfg.lexicon_weight * overlap
            )
            scored.append(ScoredSentence(sentence, score, p_idx, s_idx, position))
            position += 1
    scored.sort(key=lambda s: (-s.score, s.doc_position))
    return scored


@lru_cache(maxsize=8)
def _strip_patterns(prefix_strip: tuple[str, ...]) -> tuple[re.Pattern, ...]:
    return tuple(
        re.compile(pat.replace("{id}", _ID_PATTERN), re.IGNORECASE)
        for pat in prefix_strip
    )


def strip_figure_prefix(sentence: str, config: Optional[GenerationConfig] = None) -> str:
    """Drop a leading figure-reference phrase and recapitalize."""
    cfg = config or default_config()
    for pat in _strip_patterns(cfg.prefix_strip):
        m = pat.match(sentence)
        if m and m.end() < len(sentence):
            rest = sentence[m.end() :].lstrip()
            if rest:
                return rest[0].upper() + rest[1:]
    return sentence


def _cap_words(text: str, max_words: int) -> str:
    words = text.split()
    if len(words) <= max_words:
        return text
    return " ".join(words[:max_words])


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class GenerationBackend(Protocol):
    backend_id: str

    def generate(
        self,
        figure: FigureRecord,
        paragraphs: Sequence[str],
        variant: CaptionVariant,
        params: DecodeParams,
    ) -> str: ...


@dataclass(frozen=True)
class ExtractiveBackend:
    """Offline default: selects and trims sentences, never invents text."""

    config: GenerationConfig = field(default_factory=default_config)
    backend_id: str = EXTRACTIVE_BACKEND_ID

    def generate(
        self,
        figure: FigureRecord,
        paragraphs: Sequence[str],
        variant: CaptionVariant,
        params: DecodeParams,
    ) -> str:
        ranked = score_sentences(paragraphs, figure.id, self.config)
        if not ranked:
            raise GenerationError("no source material", variant)
        if variant is CaptionVariant.SHORT:
            text = strip_figure_prefix(ranked[0].text, self.config)
            return _cap_words(text, self.config.short_max_words)
        # Long: take top-scored sentences until the word budget is met,
        # then emit them in document order.
        chosen: list[ScoredSentence] = []
        total = 0
        for cand in ranked:
            chosen.append(cand)
            total += len(cand.text.split())
            if total >= self.config.long_min_words:
                break
        chosen.sort(key=lambda s: s.doc_position)
        return " ".join(s.text for s in chosen)


@dataclass
class HostedGenerationBackend:
    """Summarization model service: POST {paragraphs, variant, num_beams,
    max_words} -> {caption}."""

    url: str
    backend_id: str = "hosted:summarizer"
    timeout: float = 60.0
    client: Optional[httpx.Client] = None

    def generate(
        self,
        figure: FigureRecord,
        paragraphs: Sequence[str],
        variant: CaptionVariant,
        params: DecodeParams,
    ) -> str:
        payload = {
            "paragraphs": list(paragraphs),
            "variant": variant.value,
            "num_beams": params.num_beams,
            "max_words": params.max_words,
        }
        try:
            http = self.client if self.client is not None else httpx
            resp = http.post(self.url, json=payload, timeout=self.timeout)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise GenerationError(
                f"generation backend transport failure: {exc}", variant
            ) from exc
        return resp.json()["caption"]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def generate(
    figure: FigureRecord,
    mention_paragraphs: Sequence[str],
    variant: CaptionVariant,
    backend: Optional[GenerationBackend] = None,
    params: Optional[DecodeParams] = None,
) -> GeneratedCaption:
    """Produce one caption variant for a figure."""
    backend = backend or ExtractiveBackend()
    params = params or DecodeParams()
    if not mention_paragraphs and isinstance(backend, ExtractiveBackend):
        raise GenerationError("no source material", variant)
    text = backend.generate(figure, mention_paragraphs, variant, params)
    if not text.strip():
        raise GenerationError("backend returned an empty caption", variant)
    if params.max_words is not None:
        text = _cap_words(text, params.max_words)
    if variant is CaptionVariant.SHORT:
        cfg = backend.config if isinstance(backend, ExtractiveBackend) else default_config()
        text = _cap_words(text, cfg.short_max_words)
    return GeneratedCaption(variant=variant, text=text, backend_id=backend.backend_id)


@dataclass(frozen=True)
class GeneratedPair:
    long: Optional[GeneratedCaption]
    short: Optional[GeneratedCaption]
    errors: tuple[tuple[str, str], ...] = ()  # (variant, message)

    def error_for(self, variant: CaptionVariant) -> Optional[str]:
        for name, message in self.errors:
            if name == variant.value:
                return message
        return None


def generate_pair_with_ratings(
    figure: FigureRecord,
    mention_paragraphs: Sequence[str],
    gen_backend: Optional[GenerationBackend] = None,
    rating_backend: Optional[RatingBackend] = None,
    aspect_backend: Optional[AspectBackend] = None,
    params: Optional[DecodeParams] = None,
) -> GeneratedPair:
    """Generate both variants and rate each; one variant failing does not
    void the other."""
    rating_backend = rating_backend or HeuristicRatingBackend()
    aspect_backend = aspect_backend or RuleAspectBackend()

    results: dict[str, Optional[GeneratedCaption]] = {"long": None, "short": None}
    errors: list[tuple[str, str]] = []
    for variant in (CaptionVariant.LONG, CaptionVariant.SHORT):
        try:
            cap = generate(figure, mention_paragraphs, variant, gen_backend, params)
        except GenerationError as exc:
            errors.append((variant.value, str(exc)))
            continue
        report = aspect_backend.analyze(cap.text, figure, mention_paragraphs)
        ctx = build_context(list(mention_paragraphs), cap.text)
        rating = rating_backend.rate(ctx, report)
        results[variant.value] = GeneratedCaption(
            variant=cap.variant,
            text=cap.text,
            backend_id=cap.backend_id,
            rating=rating,
        )
    return GeneratedPair(
        long=results["long"], short=results["short"], errors=tuple(errors)
    )
