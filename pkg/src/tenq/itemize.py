"""Sequential Item identification within one Part's block range."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from tenq.docmodel import Block, BlockKind, NormalizedDoc

MAX_TITLE_CHARS = 120


class ItemizeFailure(Exception):
    """No Item titles could be accepted in the scanned range."""

    def __init__(self, reason: str = "no_items_found") -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CanonicalItem:
    part: int
    item_id: str
    official_title: str


# The standard 10-Q layout: two Parts, eleven Items.
_LAYOUT: tuple[CanonicalItem, ...] = (
    CanonicalItem(1, "1", "Financial Statements."),
    CanonicalItem(1, "2", "MD&A Condition and Results of Operations."),
    CanonicalItem(1, "3", "Quantitative and Qualitative Disclosures About Market Risk."),
    CanonicalItem(1, "4", "Controls and Procedures."),
    CanonicalItem(2, "1", "Legal Proceedings."),
    CanonicalItem(2, "1A", "Risk Factors."),
    CanonicalItem(2, "2", "Unregistered Sales of Equity Securities and Use of Proceeds."),
    CanonicalItem(2, "3", "Defaults Upon Senior Securities."),
    CanonicalItem(2, "4", "Mine Safety Disclosures."),
    CanonicalItem(2, "5", "Other Information."),
    CanonicalItem(2, "6", "Exhibits."),
)


def canonical_layout() -> list[CanonicalItem]:
    """The 11 canonical (part, item id, title) entries, in order."""
    return list(_LAYOUT)


class MatchQuality(Enum):
    EXACT = "exact"
    FUZZY = "fuzzy"
    NONE = "none"


def item_number_pattern(item_id: str, anchored: bool = True) -> re.Pattern[str]:
    """Case-insensitive pattern for "Item <id>" including the common
    spellings of sub-lettered ids ("1A", "1-A", "1.A", "1(a)")."""
    if item_id.upper() == "1A":
        core = r"1\s*[\-.(]?\s*a\)?(?![0-9a-z])"
    else:
        # expecting a bare number must not swallow a sub-lettered id
        core = re.escape(item_id) + r"(?!\s*[\-.(]?\s*a(?![a-z]))(?![0-9a-z])"
    prefix = "^" if anchored else ""
    return re.compile(prefix + r"item\s*" + core, re.IGNORECASE)


_NORM_STRIP_RE = re.compile(r"[^a-z0-9&\s]+")


def _normalize_words(text: str) -> str:
    return " ".join(_NORM_STRIP_RE.sub(" ", text.lower()).split())


def match_title(block: Block, expected: CanonicalItem) -> MatchQuality:
    """Match a block against one canonical item.

    EXACT when the text starts with "Item <id>"; FUZZY when, stripped of
    punctuation, it equals or starts with the official title without the
    "Item" prefix. Anything longer than 120 characters is never a title.
    """
    text = block.text
    if not text or len(text) > MAX_TITLE_CHARS:
        return MatchQuality.NONE
    if item_number_pattern(expected.item_id).match(text):
        return MatchQuality.EXACT
    title_words = _normalize_words(expected.official_title)
    block_words = _normalize_words(text)
    if title_words and (block_words == title_words or block_words.startswith(title_words + " ")):
        return MatchQuality.FUZZY
    return MatchQuality.NONE


def looks_like_title(block: Block) -> bool:
    """Typographic gate separating a title line from body text."""
    if block.kind is BlockKind.PAGE_BREAK or not block.text:
        return False
    return (
        block.bold
        or block.centered
        or block.kind is BlockKind.HEADING
        or (block.left_spaces > 0 and len(block.text) <= MAX_TITLE_CHARS)
    )


class ExtractionMethod(Enum):
    RULE_BASED = "rule_based"
    CLASSIFIER_ASSISTED = "classifier_assisted"
    HUMAN_EDITED = "human_edited"


@dataclass(frozen=True)
class ItemRecord:
    """One extracted Item: its title block and content block range."""

    filing_id: str
    part: int
    item_id: str
    title_block: int
    content_start: int
    content_stop: int  # exclusive
    method: ExtractionMethod
    title_text: str

    def to_dict(self) -> dict:
        return {
            "filing_id": self.filing_id,
            "part": self.part,
            "item_id": self.item_id,
            "title_block": self.title_block,
            "content_start": self.content_start,
            "content_stop": self.content_stop,
            "method": self.method.value,
            "title_text": self.title_text,
        }


def identify_items(
    doc: NormalizedDoc,
    start: int,
    stop: int,
    part: int,
    *,
    toc_region: tuple[int, int] | None = None,
    trace: list[dict] | None = None,
    method: ExtractionMethod = ExtractionMethod.RULE_BASED,
) -> list[ItemRecord]:
    """Walk one Part's blocks once, matching titles against the canonical
    layout with a forward-only cursor.

    A block becomes the next title when it matches a pending canonical
    item, passes the typographic gate, and is outside the TOC region.
    Skipping canonical entries a filer omitted is allowed; the cursor
    never moves backward. Raises ItemizeFailure when nothing is accepted.
    """
    layout = [ci for ci in _LAYOUT if ci.part == part]
    cursor = 0
    accepted: list[tuple[int, CanonicalItem]] = []
    for i in range(start, stop):
        if cursor >= len(layout):
            break
        block = doc.blocks[i]
        if toc_region is not None and toc_region[0] <= i < toc_region[1]:
            continue
        if not looks_like_title(block):
            continue
        hit: tuple[int, CanonicalItem] | None = None
        fuzzy_hits: list[tuple[int, CanonicalItem]] = []
        for j in range(cursor, len(layout)):
            quality = match_title(block, layout[j])
            if quality is MatchQuality.EXACT:
                hit = (j, layout[j])
                break
            if quality is MatchQuality.FUZZY:
                fuzzy_hits.append((j, layout[j]))
        if hit is None and len(fuzzy_hits) == 1:
            hit = fuzzy_hits[0]
        if hit is None:
            if trace is not None and fuzzy_hits:
                trace.append({"event": "ambiguous_fuzzy", "block": i, "text": block.text})
            continue
        j, item = hit
        accepted.append((i, item))
        if trace is not None:
            trace.append(
                {"event": "title_accepted", "block": i, "part": part, "item_id": item.item_id, "cursor": j}
            )
        cursor = j + 1

    if not accepted:
        raise ItemizeFailure("no_items_found")

    records: list[ItemRecord] = []
    for k, (idx, item) in enumerate(accepted):
        next_title = accepted[k + 1][0] if k + 1 < len(accepted) else stop
        records.append(
            ItemRecord(
                filing_id=doc.filing_id,
                part=part,
                item_id=item.item_id,
                title_block=idx,
                content_start=idx + 1,
                content_stop=next_title,
                method=method,
                title_text=doc.blocks[idx].text,
            )
        )
    return records
