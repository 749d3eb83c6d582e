"""Normalization of filing bodies into an ordered sequence of styled Blocks.

A Block is one visual line-level unit (paragraph, heading, table row,
page break) carrying the typographic attributes later stages rely on:
bold, centering, and raw leading/trailing space counts. Both normalizers
record source spans as offsets into the decoded body text.
"""

from __future__ import annotations

import html as _html
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import IO

from tenq.ingest import FilingFormat, decode_bytes

DEFAULT_PAGE_WIDTH = 80


class UnparsableHtml(Exception):
    """The tokenizer could not recover a single element from the body."""


class BlockKind(Enum):
    PARAGRAPH = "paragraph"
    HEADING = "heading"
    TABLE_ROW = "table_row"
    PAGE_BREAK = "page_break"
    ANCHOR = "anchor"
    OTHER = "other"


@dataclass(frozen=True)
class Block:
    """One visual unit of a normalized document."""

    index: int
    text: str
    bold: bool
    centered: bool
    kind: BlockKind
    left_spaces: int = 0
    right_spaces: int = 0
    anchor_name: str | None = None
    href: str | None = None
    source_span: tuple[int, int] = (0, 0)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "text": self.text,
            "bold": self.bold,
            "centered": self.centered,
            "kind": self.kind.value,
            "left_spaces": self.left_spaces,
            "right_spaces": self.right_spaces,
            "anchor_name": self.anchor_name,
            "href": self.href,
            "span": [self.source_span[0], self.source_span[1]],
        }

    @staticmethod
    def from_dict(d: dict) -> "Block":
        span = d.get("span", (0, 0))
        return Block(
            index=int(d["index"]),
            text=str(d["text"]),
            bold=bool(d["bold"]),
            centered=bool(d["centered"]),
            kind=BlockKind(d["kind"]),
            left_spaces=int(d.get("left_spaces", 0)),
            right_spaces=int(d.get("right_spaces", 0)),
            anchor_name=d.get("anchor_name"),
            href=d.get("href"),
            source_span=(int(span[0]), int(span[1])),
        )


@dataclass(frozen=True)
class NormalizedDoc:
    filing_id: str
    format: FilingFormat
    blocks: tuple[Block, ...]

    def __len__(self) -> int:
        return len(self.blocks)

    def dump_jsonl(self, fp: IO[str]) -> None:
        """Debug dump: one JSON object per block, newline-delimited."""
        for b in self.blocks:
            fp.write(json.dumps(b.to_dict(), ensure_ascii=False) + "\n")


# --- HTML normalization ---------------------------------------------------

_BLOCK_TAGS = frozenset(
    "p div tr li h1 h2 h3 h4 h5 h6 blockquote pre table thead tbody ul ol dl dt dd "
    "caption center title head body html form section article header footer".split()
)
_HEADING_TAGS = frozenset(("h1", "h2", "h3", "h4", "h5", "h6"))
_BOLD_TAGS = frozenset(("b", "strong")) | _HEADING_TAGS
_SKIP_CONTENT_TAGS = frozenset(("script", "style", "title", "head"))
_VOID_TAGS = frozenset("br hr img meta link input area base col embed source wbr".split())
# tag-soup recovery: these implicitly close an open element of the same name
_AUTO_CLOSE_TAGS = frozenset(("p", "li", "tr", "td", "th", "option"))

_TOKEN_RE = re.compile(r"<!--.*?(?:-->|$)|<[^>]*>|[^<]+", re.DOTALL)
_TAG_PARSE_RE = re.compile(r"<\s*(/?)\s*([a-zA-Z][a-zA-Z0-9]*)(.*?)/?\s*>$", re.DOTALL)
_ATTR_RE = re.compile(r"""([a-zA-Z-]+)\s*=\s*("[^"]*"|'[^']*'|[^\s"'>]+)""", re.DOTALL)
_FONT_WEIGHT_RE = re.compile(r"font-weight\s*:\s*([a-zA-Z0-9]+)", re.IGNORECASE)
_TEXT_ALIGN_RE = re.compile(r"text-align\s*:\s*center", re.IGNORECASE)
_PAGE_BREAK_BEFORE_RE = re.compile(r"(?:page-)?break-before\s*:\s*(?:always|page)", re.IGNORECASE)
_PAGE_BREAK_AFTER_RE = re.compile(r"(?:page-)?break-after\s*:\s*(?:always|page)", re.IGNORECASE)


def _parse_attrs(raw: str) -> dict[str, str]:
    attrs: dict[str, str] = {}
    for m in _ATTR_RE.finditer(raw):
        name = m.group(1).lower()
        value = m.group(2)
        if value and value[0] in "\"'":
            value = value[1:-1]
        attrs.setdefault(name, value)
    return attrs


def _nbsp_count(ws: str) -> int:
    """Visible indentation inside an HTML whitespace run: only non-breaking
    spaces survive browser whitespace collapsing, so only they count."""
    return sum(1 for ch in ws if ch == "\xa0")


@dataclass
class _Run:
    text: str  # entity-decoded
    start: int
    end: int
    bold: bool
    centered: bool
    cell_break: bool = False  # synthetic tab marker between table cells


@dataclass
class _Frame:
    tag: str
    bold: bool
    centered: bool
    skip: bool
    break_after: bool = False


class _HtmlNormalizer:
    """Error-tolerant tag-soup tokenizer producing line-level blocks."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.blocks: list[Block] = []
        self.stack: list[_Frame] = []
        self.runs: list[_Run] = []
        self.in_row = 0
        self.heading = 0
        self.pending_anchor: str | None = None
        self.cur_href: str | None = None
        self.saw_text = False

    def _bold(self) -> bool:
        return self.stack[-1].bold if self.stack else False

    def _centered(self) -> bool:
        return self.stack[-1].centered if self.stack else False

    def _skip(self) -> bool:
        return self.stack[-1].skip if self.stack else False

    def run(self) -> list[Block]:
        for tok in _TOKEN_RE.finditer(self.text):
            raw = tok.group(0)
            if raw.startswith("<!--"):
                continue
            if raw.startswith("<"):
                self._handle_tag(raw, tok.start(), tok.end())
            else:
                self._handle_text(raw, tok.start(), tok.end())
        self._flush()
        if not self.blocks and not self.saw_text:
            raise UnparsableHtml("no element or text recovered from body")
        return self.blocks

    def _handle_text(self, raw: str, start: int, end: int) -> None:
        if self._skip():
            return
        self.saw_text = True
        decoded = _html.unescape(raw)
        self.runs.append(_Run(decoded, start, end, self._bold(), self._centered()))

    def _handle_tag(self, raw: str, start: int, end: int) -> None:
        m = _TAG_PARSE_RE.match(raw)
        if not m:
            return  # doctype, processing instruction, or broken tag
        closing, tag, attr_raw = m.group(1) == "/", m.group(2).lower(), m.group(3)
        if closing:
            self._close_tag(tag, start, end)
            return
        attrs = _parse_attrs(attr_raw)
        style = attrs.get("style", "")

        if _PAGE_BREAK_BEFORE_RE.search(style):
            self._flush()
            self._emit_page_break(start, end)
        if tag == "hr":
            self._flush()
            self._emit_page_break(start, end)
            return
        if tag == "br":
            self._flush()
            return

        anchor = attrs.get("id") or (attrs.get("name") if tag == "a" else None)
        if anchor and self.pending_anchor is None:
            self.pending_anchor = anchor
        if tag == "a":
            href = attrs.get("href", "")
            if href.startswith("#") and self.cur_href is None:
                self.cur_href = href

        if tag in _VOID_TAGS:
            return

        if tag in _AUTO_CLOSE_TAGS and any(f.tag == tag for f in self.stack):
            self._close_tag(tag, start, end)

        if tag in _BLOCK_TAGS:
            self._flush()
        if tag == "tr":
            self.in_row += 1
        if tag in _HEADING_TAGS:
            self.heading += 1
        if tag in ("td", "th") and self.runs:
            self.runs.append(_Run("\t", start, start, False, False, cell_break=True))

        bold = self._bold() or tag in _BOLD_TAGS
        weight = _FONT_WEIGHT_RE.search(style)
        if weight:
            w = weight.group(1).lower()
            if w in ("bold", "bolder") or (w.isdigit() and int(w) >= 700):
                bold = True
        centered = (
            self._centered()
            or tag == "center"
            or attrs.get("align", "").lower() == "center"
            or bool(_TEXT_ALIGN_RE.search(style))
        )
        skip = self._skip() or tag in _SKIP_CONTENT_TAGS
        self.stack.append(
            _Frame(tag, bold, centered, skip, break_after=bool(_PAGE_BREAK_AFTER_RE.search(style)))
        )

    def _close_tag(self, tag: str, start: int, end: int) -> None:
        # pop to the nearest matching open tag, tolerating soup
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                if tag in _BLOCK_TAGS:
                    self._flush()
                for f in self.stack[i:]:
                    if f.tag == "tr":
                        self.in_row = max(0, self.in_row - 1)
                    if f.tag in _HEADING_TAGS:
                        self.heading = max(0, self.heading - 1)
                    if f.break_after:
                        self._flush()
                        self._emit_page_break(start, end)
                del self.stack[i:]
                return
        # close tag with no matching open: ignore

    def _emit_page_break(self, start: int, end: int) -> None:
        self.blocks.append(
            Block(
                index=len(self.blocks),
                text="",
                bold=False,
                centered=False,
                kind=BlockKind.PAGE_BREAK,
                source_span=(start, end),
            )
        )

    def _flush(self) -> None:
        runs, self.runs = self.runs, []
        href, self.cur_href = self.cur_href, None
        if not runs:
            return
        raw_joined = "".join(r.text for r in runs)
        if self.in_row:
            cells = [" ".join(c.split()) for c in raw_joined.split("\t")]
            text = "\t".join(c for c in cells if c)
        else:
            text = " ".join(raw_joined.split())
        if not text:
            return
        content = [r for r in runs if not r.cell_break and r.text.strip()]
        lead_ws = raw_joined[: len(raw_joined) - len(raw_joined.lstrip())]
        trail_ws = raw_joined[len(raw_joined.rstrip()) :]
        kind = BlockKind.TABLE_ROW if self.in_row else (
            BlockKind.HEADING if self.heading else BlockKind.PARAGRAPH
        )
        anchor, self.pending_anchor = self.pending_anchor, None
        self.blocks.append(
            Block(
                index=len(self.blocks),
                text=text,
                bold=all(r.bold for r in content),
                centered=all(r.centered for r in content),
                kind=kind,
                left_spaces=_nbsp_count(lead_ws),
                right_spaces=_nbsp_count(trail_ws),
                anchor_name=anchor,
                href=href,
                source_span=(content[0].start, content[-1].end),
            )
        )


def normalize_html(body: bytes, filing_id: str = "") -> NormalizedDoc:
    """Normalize an HTML body into Blocks.

    One Block per visual line-level element; bold/centered resolve from
    the element and all enclosing elements (tag-based markup, inline
    font-weight >= 700, align/text-align attributes). Horizontal rules and
    page-break styles become PageBreak blocks. Indentation counts only
    non-breaking spaces, the one kind of whitespace HTML renders literally.
    Never fails on mere tag soup.
    """
    text = decode_bytes(body)
    blocks = _HtmlNormalizer(text).run()
    return NormalizedDoc(filing_id=filing_id, format=FilingFormat.HTML, blocks=tuple(blocks))


# --- plain-text normalization ---------------------------------------------

_RULE_LINE_RE = re.compile(r"^(-{10,}|={10,})$")
_LINE_RE = re.compile(r"([^\r\n]*)(\r\n|\r|\n|$)")


def normalize_text(
    body: bytes,
    filing_id: str = "",
    page_width: int = DEFAULT_PAGE_WIDTH,
) -> NormalizedDoc:
    """Normalize a plain-text body: one Block per non-blank physical line.

    bold is always False. A line is centered when its text midpoint falls
    within +/-10% of the page midpoint. Form feeds and rules of >=10
    repeated '-' or '=' become PageBreak blocks.
    """
    text = decode_bytes(body)
    blocks: list[Block] = []
    for m in _LINE_RE.finditer(text):
        raw_line = m.group(1)
        if m.start() == len(text):
            break
        start, end = m.start(1), m.end(1)
        line = raw_line.expandtabs(8)
        if "\f" in line:
            blocks.append(
                Block(
                    index=len(blocks),
                    text="",
                    bold=False,
                    centered=False,
                    kind=BlockKind.PAGE_BREAK,
                    source_span=(start, end),
                )
            )
            line = line.replace("\f", " ")
        stripped = line.strip()
        if not stripped:
            continue
        if _RULE_LINE_RE.match(stripped):
            blocks.append(
                Block(
                    index=len(blocks),
                    text="",
                    bold=False,
                    centered=False,
                    kind=BlockKind.PAGE_BREAK,
                    source_span=(start, end),
                )
            )
            continue
        left = len(line) - len(line.lstrip(" "))
        right = len(line) - len(line.rstrip(" "))
        midpoint = left + len(line.strip()) / 2.0
        # a centered line needs an actual left margin: full-width flush-left
        # lines would otherwise pass the midpoint test
        centered = left > 0 and abs(midpoint - page_width / 2.0) <= 0.10 * page_width
        blocks.append(
            Block(
                index=len(blocks),
                text=" ".join(stripped.split()),
                bold=False,
                centered=centered,
                kind=BlockKind.PARAGRAPH,
                left_spaces=left,
                right_spaces=right,
                source_span=(start, end),
            )
        )
    return NormalizedDoc(filing_id=filing_id, format=FilingFormat.PLAIN_TEXT, blocks=tuple(blocks))


def normalize(body: bytes, fmt: FilingFormat, filing_id: str = "") -> NormalizedDoc:
    if fmt is FilingFormat.HTML:
        return normalize_html(body, filing_id)
    return normalize_text(body, filing_id)
