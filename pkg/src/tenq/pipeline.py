"""Per-filing orchestration: normalize -> divide parts -> identify items,
with the keyword-candidate + classifier fallback for filings the
rule-based path cannot handle."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from tenq.backend import BackendHandle, BackendUnavailable, ProtocolError, external_classify
from tenq.candidates import Candidate, extract_context, extract_features, find_candidates, snippet_features
from tenq.classifiers import Model, Prediction, predict
from tenq.docmodel import NormalizedDoc, normalize
from tenq.ingest import classify_format
from tenq.itemize import (
    ExtractionMethod,
    ItemRecord,
    ItemizeFailure,
    canonical_layout,
    identify_items,
)
from tenq.partition import (
    PART2_TITLE_RE,
    PartitionFailure,
    detect_toc_region,
    divide_parts,
    part1_start,
)

Scorer = Callable[[Candidate], Prediction]


@dataclass
class FallbackConfig:
    """How to classify candidates when rules fail.

    ``model`` scores candidates from their five features. When
    ``backend_command`` is set, snippets go to the external backend and
    the model (if any) covers per-snippet timeouts and backend loss.
    """

    model: Model | None = None
    backend_command: list[str] | None = None
    backend_timeout_s: float = 2.0


@dataclass
class FilingResult:
    filing_id: str
    ok: bool
    records: list[ItemRecord] = field(default_factory=list)
    split_source: str | None = None
    outcomes: dict = field(default_factory=dict)
    error: str | None = None
    fallback_used: bool = False
    timings: dict[str, float] = field(default_factory=dict)
    doc: NormalizedDoc | None = None
    trace: list[dict] = field(default_factory=list)
    pending_candidates: list[Candidate] = field(default_factory=list)


def make_scorer(fallback: FallbackConfig, doc_lookup: Callable[[Candidate], NormalizedDoc]) -> Scorer:
    """Build the candidate scorer for one pipeline run."""
    backend: BackendHandle | None = None
    if fallback.backend_command:
        try:
            backend = BackendHandle(fallback.backend_command)
        except BackendUnavailable:
            backend = None  # fall through to the classical model entirely

    def classical(cand: Candidate) -> Prediction:
        assert fallback.model is not None
        return predict(fallback.model, extract_features(cand, doc_lookup(cand)))

    if backend is not None:
        handle = backend

        def scorer(cand: Candidate) -> Prediction:
            snippet_fb = None
            if fallback.model is not None:
                model = fallback.model

                def snippet_fb(snippet):  # noqa: E731 - tiny adapter
                    return predict(model, snippet_features(snippet))

            try:
                return external_classify(
                    handle, [cand.context], timeout_s=fallback.backend_timeout_s, fallback=snippet_fb
                )[0]
            except (ProtocolError, TimeoutError):
                if fallback.model is None:
                    raise
                return classical(cand)

        return scorer
    if fallback.model is None:
        raise ValueError("fallback configured with neither model nor backend")
    return classical


def _find_split_by_classifier(
    doc: NormalizedDoc,
    toc: tuple[int, int] | None,
    scorer: Scorer,
) -> int | None:
    """Propose the Part II boundary from classifier-accepted candidates
    matching a Part II title pattern (any style)."""
    for block in doc.blocks:
        if not block.text or len(block.text) > 120:
            continue
        if toc is not None and toc[0] <= block.index < toc[1]:
            continue
        if block.index == 0 or not PART2_TITLE_RE.match(block.text):
            continue
        cand = Candidate(
            block_index=block.index,
            part=2,
            item_id="",
            matched_text=block.text,
            context=extract_context(block.index, doc),
        )
        if scorer(cand).label:
            return block.index
    return None


def _classifier_itemize(
    doc: NormalizedDoc,
    start: int,
    stop: int,
    part: int,
    toc: tuple[int, int] | None,
    scorer: Scorer,
) -> tuple[list[ItemRecord], list[Candidate]]:
    """Assemble ItemRecords from classifier-accepted candidates, walking
    the canonical layout with the same forward-only cursor the rule path
    uses. Returns (records, rejected-or-unused candidates)."""
    layout = [ci for ci in canonical_layout() if ci.part == part]
    cands = [
        c
        for c in find_candidates(doc, layout)
        if start <= c.block_index < stop
        and not (toc is not None and toc[0] <= c.block_index < toc[1])
    ]
    by_block: dict[int, list[Candidate]] = {}
    for c in cands:
        by_block.setdefault(c.block_index, []).append(c)
    ids = [ci.item_id for ci in layout]
    cursor = 0
    accepted: list[tuple[int, str]] = []
    leftovers: list[Candidate] = []
    for block_idx in sorted(by_block):
        if cursor >= len(ids):
            leftovers.extend(by_block[block_idx])
            continue
        taken = False
        for cand in by_block[block_idx]:
            try:
                j = ids.index(cand.item_id, cursor)
            except ValueError:
                continue
            if not scorer(cand).label:
                continue
            accepted.append((block_idx, ids[j]))
            cursor = j + 1
            taken = True
            break
        if not taken:
            leftovers.extend(by_block[block_idx])
    records: list[ItemRecord] = []
    for k, (idx, item_id) in enumerate(accepted):
        next_title = accepted[k + 1][0] if k + 1 < len(accepted) else stop
        records.append(
            ItemRecord(
                filing_id=doc.filing_id,
                part=part,
                item_id=item_id,
                title_block=idx,
                content_start=idx + 1,
                content_stop=next_title,
                method=ExtractionMethod.CLASSIFIER_ASSISTED,
                title_text=doc.blocks[idx].text,
            )
        )
    return records, leftovers


def process_filing(
    payload: bytes,
    filing_id: str,
    *,
    budget_s: float = 5.0,
    fallback: FallbackConfig | None = None,
    scorer: Scorer | None = None,
) -> FilingResult:
    """Run the pipeline on one filing body.

    The fallback (when configured) only ever runs on stages the rule path
    failed: a failed Part division gets a classifier-proposed boundary, a
    failed Part gets classifier-assembled items. Rule-produced records
    are never touched.
    """
    result = FilingResult(filing_id=filing_id, ok=False)
    t0 = time.perf_counter()
    fmt = classify_format(payload)
    doc = normalize(payload, fmt, filing_id)
    result.doc = doc
    result.timings["normalize"] = time.perf_counter() - t0
    result.outcomes["format"] = fmt.value
    toc = detect_toc_region(doc)

    if scorer is None and fallback is not None:
        scorer = make_scorer(fallback, lambda _c: doc)

    t1 = time.perf_counter()
    split_range: tuple[tuple[int, int], tuple[int, int]] | None = None
    try:
        split = divide_parts(doc, budget_s)
        result.trace.extend(split.trace)
        result.split_source = f"pillar:{split.split.pillar.value}"
        split_range = (split.part1, split.part2)
        result.outcomes["partition"] = result.split_source
    except PartitionFailure as exc:
        result.trace.extend(exc.trace)
        result.outcomes["partition"] = f"failed:{exc.reason}"
        if scorer is not None and exc.reason != "timeout":
            idx = _find_split_by_classifier(doc, toc, scorer)
            if idx is not None:
                result.fallback_used = True
                result.split_source = "classifier"
                result.outcomes["partition"] = "classifier"
                split_range = ((part1_start(doc, idx, toc), idx), (idx, len(doc.blocks)))
        if split_range is None:
            result.error = f"partition:{exc.reason}"
            result.timings["partition"] = time.perf_counter() - t1
            return result
    result.timings["partition"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    for part, (start, stop) in zip((1, 2), split_range):
        outcome_key = f"itemize_part{part}"
        try:
            records = identify_items(doc, start, stop, part, toc_region=toc, trace=result.trace)
            result.records.extend(records)
            result.outcomes[outcome_key] = "rule"
            continue
        except ItemizeFailure:
            result.outcomes[outcome_key] = "failed"
        if scorer is None:
            continue
        records, leftovers = _classifier_itemize(doc, start, stop, part, toc, scorer)
        if records:
            result.fallback_used = True
            result.records.extend(records)
            result.outcomes[outcome_key] = "classifier"
            result.pending_candidates.extend(leftovers)
        else:
            result.pending_candidates.extend(leftovers)
    result.timings["itemize"] = time.perf_counter() - t2

    result.ok = (
        result.outcomes.get("itemize_part1") in ("rule", "classifier")
        and result.outcomes.get("itemize_part2") in ("rule", "classifier")
    )
    if not result.ok and result.error is None:
        failed = [k for k, v in result.outcomes.items() if v == "failed"]
        result.error = ",".join(failed) if failed else None
    return result
