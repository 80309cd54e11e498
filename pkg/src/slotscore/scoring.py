"""Slot-filling scoring of predicted events against gold events.

Events are aligned per note by trigger equivalence: same event type and
spans overlapping by at least one character. Arguments of aligned events
are then compared per kind: span-only arguments must match their span
exactly; labeled arguments are span-agnostic and match on subtype alone.
True positives, false negatives, and false positives are tallied per
phenomenon (event type x argument type x subtype) and micro-averaged.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from .schema import LABELED, SPAN_ONLY, AnnotationSchema, ArgumentSpec, EventSpec
from .standoff import (
    Corpus,
    Document,
    EventAnnotation,
    Span,
    annotation_sort_key,
    empty_document,
)

logger = logging.getLogger(__name__)

TRIGGER = "trigger"
SPAN_ONLY_ARG = "span_only_arg"
LABELED_ARG = "labeled_arg"
KINDS = (TRIGGER, SPAN_ONLY_ARG, LABELED_ARG)

# Labeled arguments whose subtype attribute is absent score under this
# sentinel so broken prediction files remain scorable; it equals only
# itself, never a real subtype.
MISSING_SUBTYPE = "<missing>"


class ScoringError(Exception):
    """Gold and predicted inputs cannot be scored against each other."""


@dataclass(frozen=True)
class PhenomenonKey:
    """What a tally is about: a trigger, a span-only argument, or one
    subtype of a labeled argument."""

    kind: str
    event_type: str
    argument_type: str | None = None
    subtype: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown phenomenon kind {self.kind!r}")
        if self.kind == TRIGGER and (self.argument_type or self.subtype):
            raise ValueError("trigger keys carry no argument type or subtype")
        if self.kind == SPAN_ONLY_ARG and (not self.argument_type or self.subtype):
            raise ValueError("span-only keys carry an argument type and no subtype")
        if self.kind == LABELED_ARG and (not self.argument_type or not self.subtype):
            raise ValueError("labeled keys carry both argument type and subtype")

    def sort_key(self) -> tuple:
        return (
            KINDS.index(self.kind),
            self.event_type,
            self.argument_type or "",
            self.subtype or "",
        )


@dataclass
class Counts:
    tp: int = 0
    fn: int = 0
    fp: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fn + other.fn, self.fp + other.fp)

    def __iadd__(self, other: "Counts") -> "Counts":
        self.tp += other.tp
        self.fn += other.fn
        self.fp += other.fp
        return self


@dataclass(frozen=True)
class Metrics:
    tp: int
    fn: int
    fp: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, c: Counts) -> "Metrics":
        p, r, f = prf(c.tp, c.fn, c.fp)
        return cls(c.tp, c.fn, c.fp, p, r, f)


def prf(tp: int, fn: int, fp: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with every 0/0 quotient defined as 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass
class ScoreCounts:
    """tp/fn/fp tallies keyed by phenomenon; additive under concatenation."""

    counts: dict[PhenomenonKey, Counts] = field(default_factory=dict)

    def tally(self, key: PhenomenonKey, tp: int = 0, fn: int = 0, fp: int = 0) -> None:
        if tp == fn == fp == 0:
            return
        cell = self.counts.get(key)
        if cell is None:
            cell = self.counts[key] = Counts()
        cell.tp += tp
        cell.fn += fn
        cell.fp += fp

    def merge(self, other: "ScoreCounts") -> None:
        for key, cell in other.counts.items():
            self.tally(key, cell.tp, cell.fn, cell.fp)

    def __add__(self, other: "ScoreCounts") -> "ScoreCounts":
        out = ScoreCounts()
        out.merge(self)
        out.merge(other)
        return out

    def __getitem__(self, key: PhenomenonKey) -> Counts:
        return self.counts.get(key, Counts())

    def items(self) -> list[tuple[PhenomenonKey, Counts]]:
        return sorted(self.counts.items(), key=lambda kv: kv[0].sort_key())

    def total(self) -> Counts:
        out = Counts()
        for cell in self.counts.values():
            out += cell
        return out

    def restricted_to_event_type(self, event_type: str) -> "ScoreCounts":
        out = ScoreCounts()
        for key, cell in self.counts.items():
            if key.event_type == event_type:
                out.tally(key, cell.tp, cell.fn, cell.fp)
        return out

    def event_types(self) -> set[str]:
        return {key.event_type for key in self.counts}


@dataclass(frozen=True)
class MetricReport:
    """Micro-averaged metrics per key, per rollup, and overall.

    The overall row sums tp/fn/fp across every key, triggers and arguments
    together.
    """

    per_key: dict[PhenomenonKey, Metrics]
    by_event_type: dict[str, Metrics]
    by_argument_type: dict[str, Metrics]
    by_subtype: dict[str, Metrics]
    by_kind: dict[str, Metrics]
    overall: Metrics

    @classmethod
    def from_counts(cls, counts: ScoreCounts) -> "MetricReport":
        def rollup(group_of) -> dict:
            groups: dict[str, Counts] = {}
            for key, cell in counts.counts.items():
                g = group_of(key)
                if g is None:
                    continue
                groups.setdefault(g, Counts()).__iadd__(cell)
            return {g: Metrics.from_counts(c) for g, c in sorted(groups.items())}

        per_key = {k: Metrics.from_counts(c) for k, c in counts.items()}
        return cls(
            per_key=per_key,
            by_event_type=rollup(lambda k: k.event_type),
            by_argument_type=rollup(lambda k: k.argument_type),
            by_subtype=rollup(lambda k: k.subtype),
            by_kind=rollup(lambda k: k.kind),
            overall=Metrics.from_counts(counts.total()),
        )


# ---------------------------------------------------------------------------
# Alignment
# ---------------------------------------------------------------------------

def triggers_equivalent(gold: tuple[str, Span], pred: tuple[str, Span]) -> bool:
    """Any-overlap equivalence: event types equal and spans share at least
    one character."""
    gold_type, gold_span = gold
    pred_type, pred_span = pred
    return gold_type == pred_type and gold_span.overlaps(pred_span)


@dataclass(frozen=True)
class EventAlignment:
    """One-to-one trigger-equivalence matching of a note's events."""

    matched: tuple[tuple[EventAnnotation, EventAnnotation], ...]
    unmatched_gold: tuple[EventAnnotation, ...]
    unmatched_pred: tuple[EventAnnotation, ...]


def _event_order(doc: Document):
    """Document order for alignment: ascending trigger start, then end,
    then annotation id. Trigger-less events sort last and never match."""

    def key(event: EventAnnotation):
        tb = doc.trigger_of(event)
        if tb is None:
            return (1, 0, 0, annotation_sort_key(event.id))
        return (0, tb.span.start, tb.span.end, annotation_sort_key(event.id))

    return sorted(doc.events.values(), key=key)


def align_events(gold: Document, pred: Document) -> EventAlignment:
    """Greedy one-to-one matching per event type.

    Gold events are visited in document order; each takes the first
    still-unmatched predicted event (same order) with an equivalent
    trigger. Deterministic, order-stable, linear in practice.
    """
    gold_events = _event_order(gold)
    pred_events = _event_order(pred)

    matched: list[tuple[EventAnnotation, EventAnnotation]] = []
    taken: set[str] = set()
    for g in gold_events:
        g_tb = gold.trigger_of(g)
        if g_tb is None:
            continue
        for p in pred_events:
            if p.id in taken:
                continue
            p_tb = pred.trigger_of(p)
            if p_tb is None:
                continue
            if triggers_equivalent((g.event_type, g_tb.span), (p.event_type, p_tb.span)):
                matched.append((g, p))
                taken.add(p.id)
                break

    matched_gold = {g.id for g, _ in matched}
    return EventAlignment(
        matched=tuple(matched),
        unmatched_gold=tuple(g for g in gold_events if g.id not in matched_gold),
        unmatched_pred=tuple(p for p in pred_events if p.id not in taken),
    )


# ---------------------------------------------------------------------------
# Argument items
# ---------------------------------------------------------------------------

def resolve_subtype(doc: Document, event: EventAnnotation, target: str, spec: ArgumentSpec,
                    schema: AnnotationSchema) -> str:
    """The subtype label a labeled argument carries, or the missing
    sentinel when its attribute is absent."""
    carrier = event.id if schema.attributes_on_events else target
    attr = doc.attributes_on(carrier).get(spec.attribute_name)
    if attr is None or attr.value is None:
        logger.warning(
            "%s: labeled argument %s on %s has no %s attribute; scoring as %s",
            doc.doc_id, spec.argument_type, event.id, spec.attribute_name, MISSING_SUBTYPE,
        )
        return MISSING_SUBTYPE
    return attr.value


def _argument_items(
    doc: Document, event: EventAnnotation, event_spec: EventSpec, schema: AnnotationSchema
) -> tuple[Counter, Counter]:
    """Multisets of scorable argument tuples for one event.

    Span-only items are (argument_type, fragment list); labeled items are
    (argument_type, subtype). Arguments whose role the schema does not
    declare are not scorable phenomena and are skipped (validation is the
    surface that reports them).
    """
    span_only: Counter = Counter()
    labeled: Counter = Counter()
    for role, target in event.arguments:
        spec = event_spec.by_role(role)
        if spec is None:
            logger.warning(
                "%s: role %s on %s is not declared for %s; skipping in scoring",
                doc.doc_id, role, event.id, event.event_type,
            )
            continue
        if spec.kind == SPAN_ONLY:
            tb = doc.text_bounds[target]
            span_only[(spec.argument_type, tb.span.fragments)] += 1
        else:
            labeled[(spec.argument_type, resolve_subtype(doc, event, target, spec, schema))] += 1
    return span_only, labeled


def score_span_only_args(
    gold: Document,
    pred: Document,
    pair: tuple[EventAnnotation, EventAnnotation],
    schema: AnnotationSchema,
) -> ScoreCounts:
    """Exact-match multiset comparison of a matched pair's span-only
    arguments, keyed by (event type, argument type)."""
    g_event, p_event = pair
    event_spec = schema.event(g_event.event_type)
    out = ScoreCounts()
    if event_spec is None:
        return out
    g_items, _ = _argument_items(gold, g_event, event_spec, schema)
    p_items, _ = _argument_items(pred, p_event, event_spec, schema)

    for item in set(g_items) | set(p_items):
        arg_type = item[0]
        key = PhenomenonKey(SPAN_ONLY_ARG, g_event.event_type, arg_type)
        tp = min(g_items[item], p_items[item])
        out.tally(key, tp=tp, fn=g_items[item] - tp, fp=p_items[item] - tp)
    return out


def score_labeled_args(
    gold: Document,
    pred: Document,
    pair: tuple[EventAnnotation, EventAnnotation],
    schema: AnnotationSchema,
) -> ScoreCounts:
    """Span-agnostic multiset comparison of a matched pair's labeled
    arguments, keyed by (event type, argument type, subtype)."""
    g_event, p_event = pair
    event_spec = schema.event(g_event.event_type)
    out = ScoreCounts()
    if event_spec is None:
        return out
    _, g_items = _argument_items(gold, g_event, event_spec, schema)
    _, p_items = _argument_items(pred, p_event, event_spec, schema)

    for arg_type, subtype in set(g_items) | set(p_items):
        key = PhenomenonKey(LABELED_ARG, g_event.event_type, arg_type, subtype)
        tp = min(g_items[(arg_type, subtype)], p_items[(arg_type, subtype)])
        out.tally(
            key,
            tp=tp,
            fn=g_items[(arg_type, subtype)] - tp,
            fp=p_items[(arg_type, subtype)] - tp,
        )
    return out


def _unmatched_event_counts(
    doc: Document, event: EventAnnotation, schema: AnnotationSchema, as_gold: bool
) -> ScoreCounts:
    """An unmatched event's trigger and every argument count as misses
    (gold side) or spurious slots (pred side)."""
    out = ScoreCounts()
    trigger_key = PhenomenonKey(TRIGGER, event.event_type)
    out.tally(trigger_key, fn=1 if as_gold else 0, fp=0 if as_gold else 1)
    event_spec = schema.event(event.event_type)
    if event_spec is None:
        return out
    span_only, labeled = _argument_items(doc, event, event_spec, schema)
    for (arg_type, _fragments), n in span_only.items():
        key = PhenomenonKey(SPAN_ONLY_ARG, event.event_type, arg_type)
        out.tally(key, fn=n if as_gold else 0, fp=0 if as_gold else n)
    for (arg_type, subtype), n in labeled.items():
        key = PhenomenonKey(LABELED_ARG, event.event_type, arg_type, subtype)
        out.tally(key, fn=n if as_gold else 0, fp=0 if as_gold else n)
    return out


def event_slot_keys(
    doc: Document, event: EventAnnotation, schema: AnnotationSchema
) -> list[PhenomenonKey]:
    """Every slot an event fills, one key per occurrence: its trigger plus
    each scorable argument."""
    keys = [PhenomenonKey(TRIGGER, event.event_type)]
    event_spec = schema.event(event.event_type)
    if event_spec is None:
        return keys
    span_only, labeled = _argument_items(doc, event, event_spec, schema)
    for (arg_type, _fragments), n in sorted(span_only.items()):
        keys.extend([PhenomenonKey(SPAN_ONLY_ARG, event.event_type, arg_type)] * n)
    for (arg_type, subtype), n in sorted(labeled.items()):
        keys.extend([PhenomenonKey(LABELED_ARG, event.event_type, arg_type, subtype)] * n)
    return keys


def score_document(gold: Document, pred: Document, schema: AnnotationSchema) -> ScoreCounts:
    """Tally one note: triggers from the alignment, arguments from matched
    pairs, and all slots of unmatched events as fn/fp."""
    if gold.doc_id != pred.doc_id:
        raise ScoringError(f"doc_id mismatch: gold {gold.doc_id!r} vs pred {pred.doc_id!r}")
    alignment = align_events(gold, pred)
    out = ScoreCounts()
    for g_event, p_event in alignment.matched:
        out.tally(PhenomenonKey(TRIGGER, g_event.event_type), tp=1)
        out.merge(score_span_only_args(gold, pred, (g_event, p_event), schema))
        out.merge(score_labeled_args(gold, pred, (g_event, p_event), schema))
    for g_event in alignment.unmatched_gold:
        out.merge(_unmatched_event_counts(gold, g_event, schema, as_gold=True))
    for p_event in alignment.unmatched_pred:
        out.merge(_unmatched_event_counts(pred, p_event, schema, as_gold=False))
    return out


def per_document_counts(
    gold: Corpus, pred: Corpus, schema: AnnotationSchema, workers: int = 1
) -> dict[str, ScoreCounts]:
    """Per-note tallies for every gold note, in sorted doc_id order.

    Predicted notes absent from gold are an error; gold notes absent from
    pred score against an empty prediction. Notes are independent, so
    ``workers`` only changes wall time, never the result.
    """
    extra = set(pred.documents) - set(gold.documents)
    if extra:
        raise ScoringError(f"predicted notes with no gold counterpart: {sorted(extra)}")

    def score_one(doc_id: str) -> ScoreCounts:
        gold_doc = gold[doc_id]
        pred_doc = pred.documents.get(doc_id)
        if pred_doc is None:
            pred_doc = empty_document(doc_id, gold_doc.text, gold_doc.metadata)
        return score_document(gold_doc, pred_doc, schema)

    doc_ids = gold.doc_ids()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(zip(doc_ids, pool.map(score_one, doc_ids)))
    return {doc_id: score_one(doc_id) for doc_id in doc_ids}


def score_corpus(
    gold: Corpus, pred: Corpus, schema: AnnotationSchema, workers: int = 1
) -> tuple[ScoreCounts, MetricReport]:
    """Corpus tallies (summed over notes) and their micro-averaged report."""
    total = ScoreCounts()
    for counts in per_document_counts(gold, pred, schema, workers=workers).values():
        total.merge(counts)
    return total, MetricReport.from_counts(total)
