"""Candidate segmentation points for filings the rule-based stage failed.

Every keyword occurrence is kept (TOC entries, in-paragraph references,
real titles alike): recall over precision here, the classifier decides.
Each candidate carries the five typographic features and a context
snippet of surrounding blocks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from tenq.docmodel import Block, NormalizedDoc
from tenq.itemize import CanonicalItem, _normalize_words, item_number_pattern

DEFAULT_CONTEXT_WINDOW = 2

_GENERIC_ITEM_RE = re.compile(r"item\s*\d", re.IGNORECASE)


@dataclass(frozen=True)
class FeatureVector:
    """The five typographic features of one candidate."""

    f_bold: int
    f_centered: int
    f_left_spaces: int
    f_right_spaces: int
    f_char_count: int

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.f_bold, self.f_centered, self.f_left_spaces, self.f_right_spaces, self.f_char_count)

    def to_dict(self) -> dict:
        return {
            "bold": self.f_bold,
            "centered": self.f_centered,
            "left_spaces": self.f_left_spaces,
            "right_spaces": self.f_right_spaces,
            "char_count": self.f_char_count,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureVector":
        return FeatureVector(
            f_bold=int(d["bold"]),
            f_centered=int(d["centered"]),
            f_left_spaces=int(d["left_spaces"]),
            f_right_spaces=int(d["right_spaces"]),
            f_char_count=int(d["char_count"]),
        )


@dataclass(frozen=True)
class ContextSnippet:
    """The candidate block plus up to w blocks either side, styles intact."""

    blocks: tuple[Block, ...]
    candidate_offset: int

    def to_dict(self) -> dict:
        return {
            "blocks": [b.to_dict() for b in self.blocks],
            "candidate_offset": self.candidate_offset,
        }

    @staticmethod
    def from_dict(d: dict) -> "ContextSnippet":
        return ContextSnippet(
            blocks=tuple(Block.from_dict(bd) for bd in d["blocks"]),
            candidate_offset=int(d["candidate_offset"]),
        )


@dataclass(frozen=True)
class Candidate:
    block_index: int
    part: int
    item_id: str
    matched_text: str
    context: ContextSnippet


def extract_context(block_index: int, doc: NormalizedDoc, w: int = DEFAULT_CONTEXT_WINDOW) -> ContextSnippet:
    """Window of blocks around a candidate, clipped at document bounds."""
    if w < 0:
        raise ValueError("window must be >= 0")
    start = max(0, block_index - w)
    stop = min(len(doc.blocks), block_index + w + 1)
    return ContextSnippet(blocks=doc.blocks[start:stop], candidate_offset=block_index - start)


def _match_start(block: Block, target: CanonicalItem) -> int | None:
    """Earliest offset where the block matches the target keyword: the
    "Item <id>" pattern anywhere, or the official title words as a prefix
    (how filers word titles that drop the "Item" prefix)."""
    m = item_number_pattern(target.item_id, anchored=False).search(block.text)
    starts: list[int] = []
    if m:
        starts.append(m.start())
    title_words = _normalize_words(target.official_title)
    block_words = _normalize_words(block.text)
    if title_words and (block_words == title_words or block_words.startswith(title_words + " ")):
        starts.append(0)
    if not starts:
        return None
    return min(starts)


def find_candidates(
    doc: NormalizedDoc,
    targets: list[CanonicalItem],
    w: int = DEFAULT_CONTEXT_WINDOW,
) -> list[Candidate]:
    """Every block matching any target keyword, with no typographic gate.

    All occurrences are kept, including TOC rows and in-paragraph
    references; at most one candidate per (block, target) pair.
    """
    if not targets:
        raise ValueError("targets must be non-empty")
    out: list[Candidate] = []
    for block in doc.blocks:
        if not block.text:
            continue
        for target in targets:
            start = _match_start(block, target)
            if start is None:
                continue
            out.append(
                Candidate(
                    block_index=block.index,
                    part=target.part,
                    item_id=target.item_id,
                    matched_text=block.text[start:],
                    context=extract_context(block.index, doc, w),
                )
            )
    return out


def extract_features(candidate: Candidate, doc: NormalizedDoc) -> FeatureVector:
    """Map a candidate's block style to its five features. The character
    count runs from the start of the keyword match to the block's end."""
    block = doc.blocks[candidate.block_index]
    return FeatureVector(
        f_bold=int(block.bold),
        f_centered=int(block.centered),
        f_left_spaces=block.left_spaces,
        f_right_spaces=block.right_spaces,
        f_char_count=len(candidate.matched_text),
    )


def snippet_features(snippet: ContextSnippet) -> FeatureVector:
    """Features recomputed from a snippet alone (used when a classical
    model must stand in for an external backend mid-batch)."""
    block = snippet.blocks[snippet.candidate_offset]
    m = _GENERIC_ITEM_RE.search(block.text)
    chars = len(block.text) - m.start() if m else len(block.text)
    return FeatureVector(
        f_bold=int(block.bold),
        f_centered=int(block.centered),
        f_left_spaces=block.left_spaces,
        f_right_spaces=block.right_spaces,
        f_char_count=chars,
    )
