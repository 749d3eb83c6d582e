"""Dividing a normalized filing into Part I and Part II.

Three ordered strategies ("pillars"): follow the table-of-contents
hyperlink, match a styled Part II title by pattern, or fall back to page
headers. Each pillar's result is validated against expected Item
keywords before acceptance.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from tenq.docmodel import BlockKind, NormalizedDoc
from tenq.ingest import FilingFormat
from tenq.itemize import CanonicalItem, MatchQuality, _normalize_words, canonical_layout, match_title

DEFAULT_BUDGET_S = 5.0
TOC_WINDOW = 40
TOC_MIN_LINKS = 3

PART1_TITLE_RE = re.compile(r"^part[\s.:\-–—]*(?:i|1)\b(?!i)", re.IGNORECASE)
PART2_TITLE_RE = re.compile(r"^part[\s.:\-–—]*(?:ii|2)\b", re.IGNORECASE)

_PART1_ITEM_KEYWORD = re.compile(r"item\s*[1-4]\b", re.IGNORECASE)
_PART2_ITEM_KEYWORD = re.compile(r"item\s*[1-6]", re.IGNORECASE)


class SplitPillar(Enum):
    HYPERLINK = "hyperlink"
    REGEX = "regex"
    PAGE_HEADER = "page_header"


class SplitConfidence(Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"


class PartitionFailure(Exception):
    """All pillars exhausted (no_split) or the time budget ran out (timeout)."""

    def __init__(self, reason: str, trace: list[dict] | None = None) -> None:
        super().__init__(reason)
        self.reason = reason
        self.trace = trace or []


@dataclass(frozen=True)
class SplitPoint:
    block_index: int  # first block of Part II
    pillar: SplitPillar
    confidence: SplitConfidence


@dataclass
class PartSplit:
    part1: tuple[int, int]  # half-open block range
    part2: tuple[int, int]
    split: SplitPoint
    trace: list[dict] = field(default_factory=list)


def detect_toc_region(
    doc: NormalizedDoc,
    window: int = TOC_WINDOW,
    min_links: int = TOC_MIN_LINKS,
) -> tuple[int, int] | None:
    """Locate the table-of-contents: the earliest window of blocks holding
    the most internal links (>= min_links). Returns a half-open range."""
    link_idx = [b.index for b in doc.blocks if b.href]
    if len(link_idx) < min_links:
        return None
    best: tuple[int, int, int] | None = None  # (count, -start) ordering via tuple compare
    for start_pos, start in enumerate(link_idx):
        in_window = [i for i in link_idx[start_pos:] if i < start + window]
        count = len(in_window)
        if count < min_links:
            continue
        if best is None or count > best[0]:
            best = (count, start, in_window[-1] + 1)
    if best is None:
        return None
    return best[1], best[2]


def _resolve_anchor(doc: NormalizedDoc, target: str) -> int | None:
    for b in doc.blocks:
        if b.anchor_name == target:
            if b.text:
                return b.index
            for nxt in doc.blocks[b.index + 1 :]:
                if nxt.text:
                    return nxt.index
            return None
    return None


def pillar_hyperlink(doc: NormalizedDoc) -> SplitPoint | None:
    """Follow the TOC link whose text is a Part II title to its anchor."""
    if doc.format is not FilingFormat.HTML:
        return None
    region = detect_toc_region(doc)
    if region is None:
        return None
    for i in range(region[0], region[1]):
        block = doc.blocks[i]
        if not block.href or not PART2_TITLE_RE.match(block.text):
            continue
        idx = _resolve_anchor(doc, block.href.lstrip("#"))
        if idx is not None and 0 < idx < len(doc.blocks):
            return SplitPoint(idx, SplitPillar.HYPERLINK, SplitConfidence.EXACT)
    return None


def pillar_regex(doc: NormalizedDoc) -> SplitPoint | None:
    """First styled block matching a Part II title pattern outside the TOC."""
    region = detect_toc_region(doc)
    for block in doc.blocks:
        if region is not None and region[0] <= block.index < region[1]:
            continue
        if not PART2_TITLE_RE.match(block.text):
            continue
        if block.bold or block.centered or block.kind is BlockKind.HEADING:
            if block.index > 0:
                return SplitPoint(block.index, SplitPillar.REGEX, SplitConfidence.EXACT)
    return None


def _page_header_matches_part2(text: str, part2_items: list[CanonicalItem]) -> bool:
    if PART2_TITLE_RE.match(text):
        return True
    words = _normalize_words(text)
    for item in part2_items:
        title_words = _normalize_words(item.official_title)
        # a bare "Item N" is ambiguous between Parts; require the title words
        if title_words and title_words in words:
            return True
    return False


def pillar_page_header(doc: NormalizedDoc) -> SplitPoint | None:
    """Last resort: a Part II title (or a Part-II Item title) within the
    first 3 blocks after a page break."""
    part2_items = [ci for ci in canonical_layout() if ci.part == 2]
    for block in doc.blocks:
        if block.kind is not BlockKind.PAGE_BREAK:
            continue
        for j in range(block.index + 1, min(block.index + 4, len(doc.blocks))):
            candidate = doc.blocks[j]
            if not candidate.text or len(candidate.text) > 120:
                continue
            if _page_header_matches_part2(candidate.text, part2_items):
                if j > 0:
                    return SplitPoint(j, SplitPillar.PAGE_HEADER, SplitConfidence.HEURISTIC)
    return None


def part1_start(doc: NormalizedDoc, split_idx: int, toc: tuple[int, int] | None) -> int:
    for block in doc.blocks[:split_idx]:
        if toc is not None and toc[0] <= block.index < toc[1]:
            continue
        if PART1_TITLE_RE.match(block.text):
            return block.index
    if toc is not None and toc[1] < split_idx:
        return toc[1]
    return 0


def _range_has_keyword(
    doc: NormalizedDoc,
    start: int,
    stop: int,
    keyword: re.Pattern[str],
    toc: tuple[int, int] | None,
) -> bool:
    for i in range(start, stop):
        block = doc.blocks[i]
        if block.kind is BlockKind.TABLE_ROW:
            continue
        if toc is not None and toc[0] <= i < toc[1]:
            continue
        if keyword.search(block.text):
            return True
    return False


def divide_parts(
    doc: NormalizedDoc,
    budget_s: float = DEFAULT_BUDGET_S,
    *,
    clock: Callable[[], float] = time.monotonic,
) -> PartSplit:
    """Try the pillars in order, validating each proposed split.

    A split is accepted only when the Part I range still contains a
    Part-I Item keyword and the Part II range a Part-II Item keyword
    (outside tables and the TOC). Raises PartitionFailure("no_split")
    when every pillar fails, or ("timeout") when the budget is exceeded.
    """
    t0 = clock()
    trace: list[dict] = []
    toc = detect_toc_region(doc)
    n = len(doc.blocks)
    pillars: list[tuple[SplitPillar, Callable[[NormalizedDoc], SplitPoint | None]]] = [
        (SplitPillar.HYPERLINK, pillar_hyperlink),
        (SplitPillar.REGEX, pillar_regex),
        (SplitPillar.PAGE_HEADER, pillar_page_header),
    ]
    for pillar, fn in pillars:
        if clock() - t0 > budget_s:
            raise PartitionFailure("timeout", trace)
        point = fn(doc)
        if point is None:
            trace.append({"pillar": pillar.value, "outcome": "not_found"})
            continue
        idx = point.block_index
        p1_start = part1_start(doc, idx, toc)
        if not _range_has_keyword(doc, p1_start, idx, _PART1_ITEM_KEYWORD, toc):
            trace.append({"pillar": pillar.value, "outcome": "rejected", "reason": "part1_keyword_missing", "split": idx})
            continue
        if not _range_has_keyword(doc, idx, n, _PART2_ITEM_KEYWORD, toc):
            trace.append({"pillar": pillar.value, "outcome": "rejected", "reason": "part2_keyword_missing", "split": idx})
            continue
        trace.append({"pillar": pillar.value, "outcome": "accepted", "split": idx})
        return PartSplit(part1=(p1_start, idx), part2=(idx, n), split=point, trace=trace)
    raise PartitionFailure("no_split", trace)
