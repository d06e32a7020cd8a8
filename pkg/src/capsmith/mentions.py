"""Locate figure-mentioning paragraphs ("Figure 3 demonstrates ...").

Matching is regex-based and case-insensitive, anchored on the word
"Figure"/"Fig." (optionally plural), and understands conjunction lists
("Figures 3 and 4", "Figs. 1, 2, and 5") and numeric ranges with a hyphen
or en-dash ("Figures 1-3" expands to 1, 2, 3).
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping

from .model import Document, ModelError, normalize_figure_id, with_paragraph_mentions

# Re-exported: canonicalization lives with the identifier grammar.
__all__ = [
    "normalize_figure_id",
    "find_mentions",
    "link_paragraphs",
    "link_document",
    "MentionIndex",
]

MentionIndex = dict[str, list[int]]

_ID = r"[A-Za-z]?\d+"
_RANGE_SEP = r"[-–]"  # hyphen or en-dash
_ITEM = rf"{_ID}(?:\s*{_RANGE_SEP}\s*{_ID})?"
# Separators inside an id list: ", " / ", and " / " and " / " or ".
_SEP = r"(?:\s*,\s*(?:(?:and|or)\s+)?|\s+(?:and|or)\s+)"
_LIST = rf"{_ITEM}(?:{_SEP}{_ITEM})*"

MENTION_RE = re.compile(rf"\bfig(?:ure)?s?\.?\s+({_LIST})\b", re.IGNORECASE)
_ITEM_RE = re.compile(rf"({_ID})(?:\s*{_RANGE_SEP}\s*({_ID}))?", re.IGNORECASE)


_CANONICAL_SPLIT_RE = re.compile(r"^([A-Z]?)(\d+)$")


def _expand_range(start: str, end: str) -> set[str]:
    """Expand "1-3" to {1, 2, 3}.

    Prefixes must agree ("A1-A3"); a reversed or mixed-prefix range is
    treated as two independent mentions rather than an error.
    """
    a, b = normalize_figure_id(start), normalize_figure_id(end)
    pre_a, num_a = _CANONICAL_SPLIT_RE.match(a).groups()  # type: ignore[union-attr]
    pre_b, num_b = _CANONICAL_SPLIT_RE.match(b).groups()  # type: ignore[union-attr]
    if pre_a != pre_b or int(num_a) > int(num_b):
        return {a, b}
    return {f"{pre_a}{n}" for n in range(int(num_a), int(num_b) + 1)}


def find_mentions(paragraph_text: str, known_ids: Iterable[str]) -> set[str]:
    """Canonical ids of the known figures this paragraph refers to."""
    known = set(known_ids)
    if not known:
        return set()
    found: set[str] = set()
    for match in MENTION_RE.finditer(paragraph_text):
        for item in _ITEM_RE.finditer(match.group(1)):
            start, end = item.group(1), item.group(2)
            if end is None:
                try:
                    found.add(normalize_figure_id(start))
                except ModelError:
                    continue
            else:
                found.update(_expand_range(start, end))
    return found & known


def link_paragraphs(doc: Document) -> MentionIndex:
    """Build the figure -> paragraph-index map for a document.

    Every figure id gets a key (an empty list when never mentioned);
    indices are strictly increasing per key.
    """
    known = set(doc.figure_ids)
    index: MentionIndex = {fid: [] for fid in doc.figure_ids}
    for para in doc.paragraphs:
        for fid in sorted(find_mentions(para.text, known)):
            index[fid].append(para.index)
    return index


def link_document(doc: Document) -> tuple[Document, MentionIndex]:
    """link_paragraphs plus a copy of the document with Paragraph.mentions set."""
    index = link_paragraphs(doc)
    by_paragraph: dict[int, set[str]] = {}
    for fid, indices in index.items():
        for i in indices:
            by_paragraph.setdefault(i, set()).add(fid)
    return with_paragraph_mentions(doc, by_paragraph), index


def validate_index(index: Mapping[str, list[int]], doc: Document) -> None:
    """Check the MentionIndex invariants against a document (for tests/tools)."""
    known = set(doc.figure_ids)
    for fid, indices in index.items():
        if fid not in known:
            raise ModelError(f"index key {fid!r} is not a figure in the document")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ModelError(f"indices for {fid!r} not strictly increasing: {indices}")
        for i in indices:
            if not 0 <= i < len(doc.paragraphs):
                raise ModelError(f"paragraph index {i} out of range for {fid!r}")
