"""Synthetic 10-Q corpus generator with exact ground truth.

Filings are assembled from logical elements (cover lines, TOC rows, part
headings, item titles, body paragraphs, page breaks) and rendered to
HTML or plain text. The renderer tracks which block index each element
becomes, and generation verifies that mapping against the normalizer, so
ground-truth sidecars are exact by construction.

Perturbations model the troublesome reporting variations: missing TOCs,
dangling anchors, reworded or unstyled titles, in-paragraph references,
omitted items, plain-text rendering, part splits hidden mid-page, and
cross-reference lists that mimic titles.
"""

from __future__ import annotations

import html as _html
import json
import random
import textwrap
from dataclasses import dataclass, field
from pathlib import Path

from tenq.candidates import Candidate, ContextSnippet, extract_features, find_candidates
from tenq.classifiers import LabeledExample
from tenq.docmodel import NormalizedDoc, normalize
from tenq.ingest import FilingFormat, classify_format
from tenq.itemize import CanonicalItem, canonical_layout
from tenq.partition import detect_toc_region

PAGE_WIDTH = 80

PERTURB_KEYS = (
    "omit_toc",
    "dangling_anchors",
    "reworded_titles",
    "in_paragraph_refs",
    "items_omitted",
    "plain_text",
    "unstyled_titles",
    "hidden_part_split",
    "cross_reference_list",
)


@dataclass
class SyntheticSpec:
    seed: int
    n_filings: int
    perturb: dict[str, float] = field(default_factory=dict)
    paragraphs_per_item: tuple[int, int] = (2, 4)
    sentences_per_paragraph: tuple[int, int] = (3, 6)

    def __post_init__(self) -> None:
        for key, p in self.perturb.items():
            if key not in PERTURB_KEYS:
                raise ValueError(f"unknown perturbation: {key}")
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"perturbation probability out of range: {key}={p}")

    def prob(self, key: str) -> float:
        return self.perturb.get(key, 0.0)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_filings": self.n_filings,
            "perturb": dict(self.perturb),
            "paragraphs_per_item": list(self.paragraphs_per_item),
            "sentences_per_paragraph": list(self.sentences_per_paragraph),
        }


@dataclass
class GroundTruth:
    filing_id: str
    format: str
    n_blocks: int
    split_block: int | None
    part1_heading_block: int | None
    titles: list[dict]  # {part, item_id, block}
    candidate_labels: list[dict] = field(default_factory=list)

    def title_block_set(self) -> set[int]:
        return {t["block"] for t in self.titles}

    def expected_records(self) -> list[tuple[int, str, int, int, int]]:
        """(part, item_id, title_block, content_start, content_stop) per
        item, with content rules matching the itemizer's contract."""
        out = []
        per_part: dict[int, list[dict]] = {1: [], 2: []}
        for t in self.titles:
            per_part[t["part"]].append(t)
        part_stop = {1: self.split_block if self.split_block is not None else self.n_blocks, 2: self.n_blocks}
        for part in (1, 2):
            titles = sorted(per_part[part], key=lambda t: t["block"])
            for k, t in enumerate(titles):
                stop = titles[k + 1]["block"] if k + 1 < len(titles) else part_stop[part]
                out.append((part, t["item_id"], t["block"], t["block"] + 1, stop))
        return out

    def to_dict(self) -> dict:
        return {
            "filing_id": self.filing_id,
            "format": self.format,
            "n_blocks": self.n_blocks,
            "split_block": self.split_block,
            "part1_heading_block": self.part1_heading_block,
            "titles": self.titles,
            "candidate_labels": self.candidate_labels,
        }

    @staticmethod
    def from_dict(d: dict) -> "GroundTruth":
        return GroundTruth(
            filing_id=d["filing_id"],
            format=d["format"],
            n_blocks=int(d["n_blocks"]),
            split_block=d.get("split_block"),
            part1_heading_block=d.get("part1_heading_block"),
            titles=list(d["titles"]),
            candidate_labels=list(d.get("candidate_labels", [])),
        )


# --- element model -----------------------------------------------------------


@dataclass
class _El:
    kind: str  # "p" | "row" | "pagebreak"
    text: str = ""
    cells: tuple[str, ...] = ()
    bold: bool = False
    centered: bool = False
    indent: int = 0
    anchor: str | None = None
    href: str | None = None
    role: str = "body"
    part: int | None = None
    item_id: str | None = None

    def expected_text(self, as_text: bool = False) -> str:
        if self.kind == "pagebreak":
            return ""
        if self.kind == "row":
            joiner = " " if as_text else "\t"
            return joiner.join(" ".join(c.split()) for c in self.cells if c.strip())
        return " ".join(self.text.split())


_WORDS = (
    "the company recorded quarterly revenue growth across operating segments and "
    "continued to invest in product development while managing supply chain costs "
    "cash equivalents decreased primarily due to repurchases of common stock and "
    "dividend payments partially offset by proceeds from financing activities "
    "management believes existing liquidity will satisfy working capital needs for "
    "the foreseeable future interest rate fluctuations may affect investment income "
    "deferred balances related to customer contracts increased during the period"
).split()

_REF_TEMPLATES_LONG = (
    "For a discussion of legal matters, refer to {kw} of this report, which describes developments in greater detail than prior filings.",
    "The information set forth under {kw} above is incorporated herein by reference and should be read together with the notes.",
    "As described in {kw} of this report, the company recorded additional accruals during the quarter under review.",
)
_REF_TEMPLATES_SHORT = (
    "These matters are discussed further in {kw}.",
    "See the disclosures under {kw}.",
)


def _sentence(rng: random.Random, n_words: int) -> str:
    words = [rng.choice(_WORDS) for _ in range(n_words)]
    s = " ".join(words)
    return s[0].upper() + s[1:] + "."


def _paragraph(
    rng: random.Random,
    spec: SyntheticSpec,
    ref_item: CanonicalItem | None = None,
    short_ref_share: float = 0.1,
) -> str:
    n = rng.randint(*spec.sentences_per_paragraph)
    sentences = [_sentence(rng, rng.randint(8, 16)) for _ in range(n)]
    if ref_item is not None:
        kw = f"Item {ref_item.item_id}"
        if rng.random() < short_ref_share:
            tpl = rng.choice(_REF_TEMPLATES_SHORT)
        else:
            tpl = rng.choice(_REF_TEMPLATES_LONG)
        ref = tpl.format(kw=kw)
        sentences.insert(rng.randrange(len(sentences) + 1), ref)
    return " ".join(sentences)


def _title_text(rng: random.Random, item: CanonicalItem, reworded: bool) -> str:
    base = f"Item {item.item_id}. {item.official_title}"
    if not reworded:
        return base
    variants = [
        base.upper(),
        f"Item {item.item_id} — {item.official_title.rstrip('.')}",
        f"Item {item.item_id}: {item.official_title.rstrip('.')}",
        item.official_title,  # fuzzy-only: title without the Item prefix
    ]
    if item.item_id == "1A":
        variants.append(f"Item 1-A. {item.official_title}")
    return rng.choice(variants)


PART1_HEADING = "PART I — FINANCIAL INFORMATION"
PART2_HEADING = "PART II — OTHER INFORMATION"


def _pick_items(rng: random.Random, omit: bool) -> list[CanonicalItem]:
    items = canonical_layout()
    if not omit:
        return items
    droppable = {(1, "3"), (1, "4"), (2, "1A"), (2, "2"), (2, "3"), (2, "4"), (2, "5")}
    kept = [ci for ci in items if (ci.part, ci.item_id) not in droppable or rng.random() > 0.5]
    return kept


def build_filing_elements(
    filing_id: str, rng: random.Random, spec: SyntheticSpec
) -> tuple[list[_El], dict[str, bool]]:
    """Assemble one filing's elements plus the per-filing perturbation flags."""
    flags = {key: rng.random() < spec.prob(key) for key in PERTURB_KEYS}
    if flags["plain_text"]:
        flags["omit_toc"] = True  # text-era filings carry no hyperlinked TOC
    is_text = flags["plain_text"]
    company = f"{rng.choice(('Acme', 'Borealis', 'Cobalt', 'Dunmore', 'Everline', 'Fairfield'))} {rng.choice(('Industries', 'Holdings', 'Systems', 'Energy', 'Labs'))}, Inc."
    items = _pick_items(rng, flags["items_omitted"])
    styled = not flags["unstyled_titles"]

    els: list[_El] = []

    def p(text: str, **kw) -> None:
        els.append(_El(kind="p", text=text, **kw))

    # cover page
    p("UNITED STATES", centered=True)
    p("SECURITIES AND EXCHANGE COMMISSION", centered=True)
    p("Washington, D.C. 20549", centered=True)
    p("FORM 10-Q", centered=True, bold=True)
    p("QUARTERLY REPORT PURSUANT TO SECTION 13 OR 15(d)", centered=True)
    p(f"For the quarterly period ended {rng.choice(('March 31', 'June 30', 'September 30'))}, 202{rng.randint(2, 5)}", centered=True)
    p(company, centered=True, bold=True)
    p(f"Commission File Number: 001-{rng.randint(10000, 39999)}", centered=True)
    els.append(_El(kind="pagebreak"))

    # table of contents
    if not flags["omit_toc"]:
        p("TABLE OF CONTENTS", centered=True, bold=True)
        p(PART1_HEADING, href="#pt1", role="toc")
        for ci in items:
            if ci.part == 1:
                p(f"Item {ci.item_id}. {ci.official_title}", href=f"#it1_{ci.item_id}", role="toc")
        p(PART2_HEADING, href="#pt2", role="toc")
        for ci in items:
            if ci.part == 2:
                p(f"Item {ci.item_id}. {ci.official_title}", href=f"#it2_{ci.item_id}", role="toc")
        els.append(_El(kind="pagebreak"))

    anchors = not flags["dangling_anchors"]

    def page_header() -> None:
        p(f"{company} — FORM 10-Q", centered=True, role="page_header")

    # Part I
    page_header()
    p(
        PART1_HEADING,
        bold=True,
        centered=True,
        anchor="pt1" if anchors else None,
        role="part_heading",
        part=1,
    )
    ref_pool = list(items)

    def emit_item(ci: CanonicalItem) -> None:
        reworded = flags["reworded_titles"] and rng.random() < 0.5
        title = _title_text(rng, ci, reworded)
        if not styled:
            bold, centered, indent = False, False, 0
        elif is_text:
            # no bold in plain text: a detectable title is centered or indented
            if rng.random() < 0.4:
                bold, centered, indent = False, True, 0
            else:
                bold, centered, indent = False, False, rng.randint(2, 6)
        else:
            bold = True
            centered = rng.random() < 0.5
            indent = 0 if rng.random() < 0.7 else 2
        els.append(
            _El(
                kind="p",
                text=title,
                bold=bold,
                centered=centered,
                indent=indent,
                anchor=f"it{ci.part}_{ci.item_id}" if anchors else None,
                role="title",
                part=ci.part,
                item_id=ci.item_id,
            )
        )
        for _ in range(rng.randint(*spec.paragraphs_per_item)):
            ref = None
            if flags["in_paragraph_refs"] and rng.random() < 0.5:
                ref = rng.choice(ref_pool)
            # occasional emphasis / block-quote / nbsp-indent decoration, as
            # real HTML filings have; paragraphs stay over the title length
            # cap so the rule path is unaffected
            bold = centered = False
            indent = 0
            if not is_text:
                roll = rng.random()
                if roll < 0.10:
                    bold = True
                elif roll < 0.16:
                    centered = True
                elif roll < 0.30:
                    indent = rng.randint(2, 4)
            p(_paragraph(rng, spec, ref), role="body", bold=bold, centered=centered, indent=indent)
        if ci.part == 1 and ci.item_id == "1":
            for label, a, b in (
                ("Net revenue", "1,284", "1,102"),
                ("Operating income", "312", "268"),
                ("Net income", "235", "199"),
            ):
                els.append(_El(kind="row", cells=(label, f"$ {a}", f"$ {b}"), role="table"))
        if ci.part == 2 and ci.item_id == "6":
            p("31.1 Certification of the principal executive officer.", role="body")
            p("32.1 Section 1350 certification.", role="body")
            if flags["cross_reference_list"]:
                for ref_ci in items:
                    if rng.random() < 0.6:
                        suffix = rng.choice(("— Not applicable.", "— None.", "— See above."))
                        p(
                            f"Item {ref_ci.item_id}. {ref_ci.official_title.rstrip('.')} {suffix}",
                            indent=rng.randint(2, 5) if is_text else 0,
                            role="cross_reference",
                        )

    for ci in items:
        if ci.part != 1:
            continue
        els.append(_El(kind="pagebreak"))
        page_header()
        emit_item(ci)

    # Part II heading: normally on its own page; a hidden split buries it
    # unstyled in the middle of a page (and keeps Part II off page headers,
    # which is what makes such filings hard)
    hidden = flags["hidden_part_split"]
    if hidden:
        p(_paragraph(rng, spec), role="body")
        # indented but neither bold nor centered: invisible to the styled-title
        # pillar yet still recognizable to feature classifiers
        p("Part II — Other Information", indent=rng.randint(2, 5), role="part_heading", part=2)
    else:
        els.append(_El(kind="pagebreak"))
        page_header()
        p(
            PART2_HEADING,
            bold=True,
            centered=True,
            anchor="pt2" if anchors else None,
            role="part_heading",
            part=2,
        )

    part2_items = [ci for ci in items if ci.part == 2]
    for k, ci in enumerate(part2_items):
        if k > 0 and not hidden:
            els.append(_El(kind="pagebreak"))
            page_header()
        emit_item(ci)

    # signature section (belongs to the last item's content range)
    p("SIGNATURES", centered=True, bold=True)
    p(
        "Pursuant to the requirements of the Securities Exchange Act of 1934, the registrant has duly caused this report to be signed on its behalf by the undersigned thereunto duly authorized.",
    )
    p(f"By: /s/ {rng.choice(('J. Rivera', 'M. Chen', 'A. Okafor', 'R. Novak'))}, Chief Financial Officer")
    return els, flags


# --- rendering ---------------------------------------------------------------


def render_html(els: list[_El]) -> tuple[bytes, list[int], list[int]]:
    """Render elements to HTML. Returns (payload, first block index per
    element, block count per element)."""
    out: list[str] = ["<html><head><title>Form 10-Q</title></head>", "<body>"]
    first_idx: list[int] = []
    counts: list[int] = []
    block_i = 0
    in_table = False

    def close_table() -> None:
        nonlocal in_table
        if in_table:
            out.append("</table>")
            in_table = False

    for el in els:
        if el.kind == "pagebreak":
            close_table()
            out.append("<hr>")
            first_idx.append(block_i)
            counts.append(1)
            block_i += 1
            continue
        if el.kind == "row":
            if not in_table:
                out.append("<table>")
                in_table = True
            cells = "".join(f"<td>{_html.escape(c)}</td>" for c in el.cells)
            out.append(f"<tr>{cells}</tr>")
            first_idx.append(block_i)
            counts.append(1)
            block_i += 1
            continue
        close_table()
        attrs = ""
        if el.anchor:
            attrs += f' id="{el.anchor}"'
        if el.centered:
            attrs += ' align="center"'
        inner = _html.escape(el.text)
        if el.href:
            inner = f'<a href="{el.href}">{inner}</a>'
        if el.bold:
            inner = f"<b>{inner}</b>"
        if el.indent:
            inner = "&nbsp;" * el.indent + inner
        out.append(f"<p{attrs}>{inner}</p>")
        first_idx.append(block_i)
        counts.append(1)
        block_i += 1
    close_table()
    out.append("</body></html>")
    return "\n".join(out).encode("utf-8"), first_idx, counts


def render_text(els: list[_El]) -> tuple[bytes, list[int], list[int]]:
    """Render elements to 80-column plain text; paragraphs wrap onto
    multiple lines, each of which is one block."""
    lines: list[str] = []
    first_idx: list[int] = []
    counts: list[int] = []
    block_i = 0
    for el in els:
        if el.kind == "pagebreak":
            lines.append("\f")
            lines.append("")
            first_idx.append(block_i)
            counts.append(1)
            block_i += 1
            continue
        if el.kind == "row":
            left = el.cells[0]
            rest = "  ".join(el.cells[1:])
            lines.append(f"    {left:<34}{rest}")
            lines.append("")
            first_idx.append(block_i)
            counts.append(1)
            block_i += 1
            continue
        if el.centered:
            pad = max(0, (PAGE_WIDTH - len(el.text)) // 2)
            wrapped = [" " * pad + el.text]
        elif el.role in ("title", "part_heading") or len(el.text) <= PAGE_WIDTH - el.indent:
            wrapped = [" " * el.indent + el.text]
        else:
            wrapped = [
                " " * el.indent + ln
                for ln in textwrap.wrap(el.text, width=PAGE_WIDTH - el.indent)
            ]
        lines.extend(wrapped)
        lines.append("")
        first_idx.append(block_i)
        counts.append(len(wrapped))
        block_i += len(wrapped)
    return ("\n".join(lines) + "\n").encode("utf-8"), first_idx, counts


class GenerationError(Exception):
    """Generator bookkeeping fell out of step with the normalizer."""


def generate_filing(
    filing_id: str, rng: random.Random, spec: SyntheticSpec
) -> tuple[bytes, FilingFormat, GroundTruth, NormalizedDoc]:
    """Generate one filing: payload bytes plus verified ground truth."""
    els, flags = build_filing_elements(filing_id, rng, spec)
    if flags["plain_text"]:
        payload, first_idx, counts = render_text(els)
        fmt = FilingFormat.PLAIN_TEXT
    else:
        payload, first_idx, counts = render_html(els)
        fmt = FilingFormat.HTML

    if classify_format(payload) is not fmt:
        raise GenerationError(f"{filing_id}: format classification disagrees")
    doc = normalize(payload, fmt, filing_id)
    n_blocks = first_idx[-1] + counts[-1] if first_idx else 0
    if len(doc.blocks) != n_blocks:
        raise GenerationError(
            f"{filing_id}: expected {n_blocks} blocks, normalizer produced {len(doc.blocks)}"
        )
    as_text = fmt is FilingFormat.PLAIN_TEXT
    for el, idx, cnt in zip(els, first_idx, counts):
        if cnt == 1:
            got = doc.blocks[idx].text
            want = el.expected_text(as_text)
            if el.kind != "pagebreak" and got != want:
                raise GenerationError(f"{filing_id}: block {idx} text {got!r} != {want!r}")

    split_block: int | None = None
    part1_heading: int | None = None
    titles: list[dict] = []
    for el, idx in zip(els, first_idx):
        if el.role == "part_heading" and el.part == 2 and split_block is None:
            split_block = idx
        if el.role == "part_heading" and el.part == 1 and part1_heading is None:
            part1_heading = idx
        if el.role == "title":
            titles.append({"part": el.part, "item_id": el.item_id, "block": idx})

    gt = GroundTruth(
        filing_id=filing_id,
        format=fmt.value,
        n_blocks=n_blocks,
        split_block=split_block,
        part1_heading_block=part1_heading,
        titles=titles,
    )
    title_blocks = gt.title_block_set()
    cands = find_candidates(doc, canonical_layout())
    seen_blocks: set[int] = set()
    for c in cands:
        if c.block_index in seen_blocks:
            continue
        seen_blocks.add(c.block_index)
        gt.candidate_labels.append(
            {
                "block_index": c.block_index,
                "part": c.part,
                "item_id": c.item_id,
                "label": c.block_index in title_blocks,
            }
        )
    return payload, fmt, gt, doc


def filing_identifier(seed: int, i: int, rng: random.Random) -> str:
    cik = rng.randint(1000, 9999999)
    return f"{cik:010d}-24-{i:06d}"


def generate_corpus(spec: SyntheticSpec, out_dir: Path | str) -> list[dict]:
    """Write the corpus: one payload and one ground-truth sidecar per
    filing, plus a corpus.json index. Deterministic by seed."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[dict] = []
    for i in range(spec.n_filings):
        rng = random.Random(f"{spec.seed}:{i}")
        filing_id = filing_identifier(spec.seed, i, rng)
        payload, fmt, gt, _doc = generate_filing(filing_id, rng, spec)
        doc_id = filing_id.replace("-", "")
        ext = "html" if fmt is FilingFormat.HTML else "txt"
        (out_dir / f"{doc_id}.{ext}").write_bytes(payload)
        (out_dir / f"{doc_id}.gt.json").write_text(
            json.dumps(gt.to_dict(), indent=1) + "\n", encoding="utf-8"
        )
        entries.append(
            {
                "filing_id": filing_id,
                "file": f"{doc_id}.{ext}",
                "format": fmt.value,
                "gt_file": f"{doc_id}.gt.json",
            }
        )
    index = {"spec": spec.to_dict(), "filings": entries}
    (out_dir / "corpus.json").write_text(json.dumps(index, indent=1) + "\n", encoding="utf-8")
    return entries


def load_corpus_index(corpus_dir: Path | str) -> dict:
    return json.loads((Path(corpus_dir) / "corpus.json").read_text(encoding="utf-8"))


def load_ground_truth(corpus_dir: Path | str, entry: dict) -> GroundTruth:
    return GroundTruth.from_dict(
        json.loads((Path(corpus_dir) / entry["gt_file"]).read_text(encoding="utf-8"))
    )


# --- labeled datasets ----------------------------------------------------------

# analog of a verification-derived set: cases the rule-based stage handles,
# so titles are styled; the separating structure is clean
VERIFICATION_FLAVOR = {
    "omit_toc": 0.3,
    "dangling_anchors": 0.1,
    "reworded_titles": 0.3,
    "in_paragraph_refs": 0.85,
    "items_omitted": 0.25,
    "plain_text": 0.3,
}

# what a production fallback model trains on: includes the unstyled titles
# and hidden splits the rule path misses
FALLBACK_FLAVOR = {
    "omit_toc": 0.3,
    "dangling_anchors": 0.1,
    "reworded_titles": 0.3,
    "in_paragraph_refs": 0.85,
    "items_omitted": 0.25,
    "plain_text": 0.3,
    "unstyled_titles": 0.2,
    "hidden_part_split": 0.1,
}

# models the population the rule-based stage fails on: unstyled titles and
# title-lookalike cross-reference lists dominate, and only context (the
# surrounding blocks) separates the worst cells
CHALLENGING_FLAVOR = {
    "omit_toc": 0.7,
    "dangling_anchors": 0.2,
    "reworded_titles": 0.5,
    "in_paragraph_refs": 0.9,
    "items_omitted": 0.3,
    "plain_text": 0.4,
    "unstyled_titles": 0.55,
    "hidden_part_split": 0.15,
    "cross_reference_list": 0.85,
}

LABEL_FLAVORS = {
    "verification": VERIFICATION_FLAVOR,
    "fallback": FALLBACK_FLAVOR,
    "challenging": CHALLENGING_FLAVOR,
}


def make_labeled_dataset(
    seed: int,
    n_pos: int,
    n_neg: int,
    flavor: str = "verification",
) -> list[tuple[LabeledExample, ContextSnippet]]:
    """Harvest labeled candidates from generated filings until the class
    quotas fill, then subsample to exactly (n_pos, n_neg).

    Candidates inside a detected TOC region are excluded: the pipeline
    never sends those to a classifier (the TOC is filtered structurally),
    so they would only blur the training signal.
    """
    if flavor not in LABEL_FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r} (known: {', '.join(LABEL_FLAVORS)})")
    spec = SyntheticSpec(seed=seed, n_filings=0, perturb=dict(LABEL_FLAVORS[flavor]))
    rng = random.Random(f"labels:{seed}:{flavor}")
    pos: list[tuple[LabeledExample, ContextSnippet]] = []
    neg: list[tuple[LabeledExample, ContextSnippet]] = []
    i = 0
    while (len(pos) < n_pos or len(neg) < n_neg) and i < 10_000:
        frng = random.Random(f"{seed}:{flavor}:{i}")
        filing_id = filing_identifier(seed, i, frng)
        _payload, _fmt, gt, doc = generate_filing(filing_id, frng, spec)
        i += 1
        toc = detect_toc_region(doc)
        title_blocks = gt.title_block_set()
        seen: set[int] = set()
        for c in find_candidates(doc, canonical_layout()):
            if c.block_index in seen:
                continue
            seen.add(c.block_index)
            if toc is not None and toc[0] <= c.block_index < toc[1]:
                continue
            label = c.block_index in title_blocks
            ex = LabeledExample(
                features=extract_features(c, doc),
                label=label,
                source_filing=filing_id,
            )
            (pos if label else neg).append((ex, c.context))
    if len(pos) < n_pos or len(neg) < n_neg:
        raise GenerationError(
            f"could not harvest enough labeled examples: {len(pos)}/{n_pos} pos, {len(neg)}/{n_neg} neg"
        )
    pos = rng.sample(pos, n_pos)
    neg = rng.sample(neg, n_neg)
    merged = pos + neg
    rng.shuffle(merged)
    return merged


def write_labeled_files(
    pairs: list[tuple[LabeledExample, ContextSnippet]],
    features_path: Path | str,
    snippets_path: Path | str | None = None,
) -> None:
    """Write the feature JSONL (LabeledExample lines) and optionally the
    snippet JSONL consumed by image-classifier backends."""
    features_path = Path(features_path)
    snip_name = Path(snippets_path).name if snippets_path else None
    with open(features_path, "w", encoding="utf-8") as fp:
        for k, (ex, _snip) in enumerate(pairs):
            d = ex.to_dict()
            if snip_name:
                d["snippet_ref"] = f"{snip_name}:{k}"
            fp.write(json.dumps(d) + "\n")
    if snippets_path:
        with open(snippets_path, "w", encoding="utf-8") as fp:
            for ex, snip in pairs:
                fp.write(
                    json.dumps(
                        {
                            "snippet": snip.to_dict(),
                            "label": ex.label,
                            "source_filing": ex.source_filing,
                        }
                    )
                    + "\n"
                )
