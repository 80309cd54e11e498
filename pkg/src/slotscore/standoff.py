"""BRAT standoff annotation model and I/O.

Annotations live in a ``.ann`` file next to the ``.txt`` note they index
into. Three line kinds are modeled: text-bounds (``T``), events (``E``),
and attributes (``A``). Relations, normalizations, and comments are
outside the data model; the parser skips them with a warning in lenient
mode and rejects them in strict mode.

All character offsets are Unicode code-point offsets into the note text,
never byte offsets. Parsed documents are immutable by convention and safe
to share across threads.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

logger = logging.getLogger(__name__)

SOURCES = ("mimic", "uw", "other")
SPLITS = ("train", "dev", "test", "unknown")

_ID_RE = re.compile(r"^([A-Za-z#*]+)(\d*)$")


class StandoffError(Exception):
    """A standoff file could not be parsed or is internally inconsistent."""

    def __init__(self, message: str, doc_id: str = "", line_no: int | None = None):
        self.doc_id = doc_id
        self.line_no = line_no
        where = doc_id or "<input>"
        if line_no is not None:
            where = f"{where}:{line_no}"
        super().__init__(f"{where}: {message}")


def annotation_sort_key(ann_id: str) -> tuple:
    """Sort key ordering T2 before T10 (numeric suffix, then raw id)."""
    m = _ID_RE.match(ann_id)
    if m and m.group(2):
        return (m.group(1), int(m.group(2)), ann_id)
    return (ann_id, -1, ann_id)


@dataclass(frozen=True)
class Span:
    """A (possibly discontinuous) character span: sorted, non-overlapping
    half-open fragments."""

    fragments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        frags = tuple((int(s), int(e)) for s, e in self.fragments)
        if not frags:
            raise ValueError("a span needs at least one fragment")
        prev_end = -1
        for start, end in frags:
            if start < 0 or end <= start:
                raise ValueError(f"invalid fragment ({start}, {end})")
            if start < prev_end:
                raise ValueError("fragments must be sorted and non-overlapping")
            prev_end = end
        object.__setattr__(self, "fragments", frags)

    @classmethod
    def single(cls, start: int, end: int) -> "Span":
        return cls(((start, end),))

    @property
    def start(self) -> int:
        return self.fragments[0][0]

    @property
    def end(self) -> int:
        return self.fragments[-1][1]

    def overlaps(self, other: "Span") -> bool:
        """True if any fragment of this span shares >= 1 character with any
        fragment of ``other``."""
        for a_start, a_end in self.fragments:
            for b_start, b_end in other.fragments:
                if a_start < b_end and b_start < a_end:
                    return True
        return False

    def extract(self, text: str) -> str:
        """Fragment substrings of ``text`` joined by a single space."""
        return " ".join(text[s:e] for s, e in self.fragments)


@dataclass(frozen=True)
class TextBound:
    """An annotated span with a type label and the text it covers."""

    id: str
    label: str
    span: Span
    covered_text: str


@dataclass(frozen=True)
class EventAnnotation:
    """A trigger text-bound plus role-labeled argument text-bounds.

    ``trigger`` and argument targets are text-bound ids resolved through
    the owning Document. ``trigger`` is None only for structurally broken
    events admitted by lenient parsing; validation reports those.
    """

    id: str
    event_type: str
    trigger: str | None
    arguments: tuple[tuple[str, str], ...] = ()  # (role, target text-bound id)


@dataclass(frozen=True)
class AttributeAnnotation:
    """A named value attached to a text-bound or event (e.g. a subtype label)."""

    id: str
    name: str
    target: str
    value: str | None = None


@dataclass(frozen=True)
class DocumentMetadata:
    source: str = "other"
    split: str = "unknown"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}; expected one of {SPLITS}")


@dataclass(frozen=True)
class Document:
    """One note plus its annotations, keyed by annotation id."""

    doc_id: str
    text: str
    text_bounds: dict[str, TextBound] = field(default_factory=dict)
    events: dict[str, EventAnnotation] = field(default_factory=dict)
    attributes: dict[str, AttributeAnnotation] = field(default_factory=dict)
    metadata: DocumentMetadata = field(default_factory=DocumentMetadata)

    def trigger_of(self, event: EventAnnotation) -> TextBound | None:
        if event.trigger is None:
            return None
        return self.text_bounds.get(event.trigger)

    def attributes_on(self, target_id: str) -> dict[str, AttributeAnnotation]:
        """Attributes attached to one annotation, keyed by attribute name."""
        return {a.name: a for a in self.attributes.values() if a.target == target_id}

    def events_of_type(self, event_type: str) -> list[EventAnnotation]:
        return [e for e in self.events.values() if e.event_type == event_type]

    def with_metadata(self, metadata: DocumentMetadata) -> "Document":
        return replace(self, metadata=metadata)


@dataclass
class Corpus:
    """Documents keyed by doc_id."""

    documents: dict[str, Document] = field(default_factory=dict)

    def add(self, doc: Document) -> None:
        if doc.doc_id in self.documents:
            raise StandoffError(f"duplicate doc_id {doc.doc_id!r}")
        self.documents[doc.doc_id] = doc

    def doc_ids(self) -> list[str]:
        return sorted(self.documents)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents.values())

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.documents

    def __getitem__(self, doc_id: str) -> Document:
        return self.documents[doc_id]


def empty_document(doc_id: str, text: str, metadata: DocumentMetadata | None = None) -> Document:
    """A document with no annotations (a system that predicted nothing)."""
    return Document(doc_id=doc_id, text=text, metadata=metadata or DocumentMetadata())


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

# Trailing digits on role names (Status, Status2, ...) are annotation-tool
# bookkeeping for repeated roles, not semantics.
_ROLE_SUFFIX_RE = re.compile(r"\d+$")

# BRAT writes covered text with newlines flattened to spaces so the .ann
# file stays line-oriented; comparisons and serialization do the same.
def _flatten_ws(text: str) -> str:
    return text.replace("\n", " ").replace("\r", " ").replace("\t", " ")


def _parse_fragments(offsets: str, doc_id: str, line_no: int) -> Span:
    fragments = []
    for part in offsets.split(";"):
        pieces = part.split()
        if len(pieces) != 2:
            raise StandoffError(f"malformed span offsets {offsets!r}", doc_id, line_no)
        try:
            start, end = int(pieces[0]), int(pieces[1])
        except ValueError:
            raise StandoffError(f"non-integer span offsets {offsets!r}", doc_id, line_no) from None
        fragments.append((start, end))
    fragments.sort()
    try:
        return Span(tuple(fragments))
    except ValueError as exc:
        raise StandoffError(f"invalid span {offsets!r}: {exc}", doc_id, line_no) from None


def parse_document(
    ann_text: str,
    doc_text: str,
    doc_id: str = "",
    strict: bool = False,
    metadata: DocumentMetadata | None = None,
) -> Document:
    """Parse one ``.ann`` file against its note text.

    Resolution is two-pass, so event and attribute lines may precede the
    text-bounds they reference. In lenient mode (the default), covered-text
    mismatches are repaired from the note text with a warning, unsupported
    line kinds are skipped, and trigger-less events are admitted for the
    validator to report; strict mode turns all of those into errors.

    Raises StandoffError for malformed syntax, out-of-bounds offsets,
    dangling references, and duplicate ids in either mode.
    """
    text_bounds: dict[str, TextBound] = {}
    raw_events: list[tuple[int, str, str, str | None, list[tuple[str, str]]]] = []
    raw_attrs: list[tuple[int, str, str, str, str | None]] = []

    def fail_or_warn(message: str, line_no: int) -> None:
        if strict:
            raise StandoffError(message, doc_id, line_no)
        logger.warning("%s:%d: %s", doc_id or "<input>", line_no, message)

    for line_no, line in enumerate(ann_text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        ann_id = parts[0]
        kind = ann_id[:1]

        if kind == "T":
            if len(parts) < 2:
                raise StandoffError("text-bound line needs type and offsets", doc_id, line_no)
            stated_text = parts[2] if len(parts) >= 3 else ""
            head = parts[1].split(" ", 1)
            if len(head) != 2:
                raise StandoffError(f"malformed text-bound header {parts[1]!r}", doc_id, line_no)
            label, offsets = head
            span = _parse_fragments(offsets, doc_id, line_no)
            if span.end > len(doc_text):
                raise StandoffError(
                    f"span {span.fragments} exceeds text length {len(doc_text)}", doc_id, line_no
                )
            covered = span.extract(doc_text)
            if _flatten_ws(covered) != stated_text:
                message = (
                    f"covered text mismatch for {ann_id}: file says {stated_text!r}, "
                    f"text has {covered!r}"
                )
                fail_or_warn(message, line_no)
            if ann_id in text_bounds:
                raise StandoffError(f"duplicate id {ann_id}", doc_id, line_no)
            text_bounds[ann_id] = TextBound(id=ann_id, label=label, span=span, covered_text=covered)

        elif kind == "E":
            if len(parts) < 2 or not parts[1].strip():
                raise StandoffError("event line needs a trigger field", doc_id, line_no)
            pairs = parts[1].split()
            head = pairs[0].split(":", 1)
            if len(head) != 2 or not head[0]:
                raise StandoffError(f"malformed event trigger {pairs[0]!r}", doc_id, line_no)
            event_type, trigger_ref = head
            trigger: str | None = trigger_ref
            if not trigger_ref:
                fail_or_warn(f"event {ann_id} has no trigger reference", line_no)
                trigger = None
            args: list[tuple[str, str]] = []
            for pair in pairs[1:]:
                bits = pair.split(":", 1)
                if len(bits) != 2 or not bits[0] or not bits[1]:
                    fail_or_warn(f"malformed event argument {pair!r} on {ann_id}", line_no)
                    continue
                role = _ROLE_SUFFIX_RE.sub("", bits[0])
                args.append((role, bits[1]))
            raw_events.append((line_no, ann_id, event_type, trigger, args))

        elif kind == "A":
            if len(parts) < 2:
                raise StandoffError("attribute line needs a body", doc_id, line_no)
            tokens = parts[1].split()
            if len(tokens) < 2:
                raise StandoffError(f"malformed attribute {parts[1]!r}", doc_id, line_no)
            name, target = tokens[0], tokens[1]
            value = " ".join(tokens[2:]) if len(tokens) > 2 else None
            raw_attrs.append((line_no, ann_id, name, target, value))

        elif kind in ("R", "N", "#", "M", "*"):
            fail_or_warn(f"unsupported annotation kind {kind!r} ({ann_id})", line_no)

        else:
            raise StandoffError(f"unrecognized annotation line {line!r}", doc_id, line_no)

    # Second pass: resolve references now that all text-bounds are known.
    event_ids = {ann_id for _, ann_id, _, _, _ in raw_events}
    events: dict[str, EventAnnotation] = {}
    for line_no, ann_id, event_type, trigger, args in raw_events:
        if ann_id in events:
            raise StandoffError(f"duplicate id {ann_id}", doc_id, line_no)
        if trigger is not None:
            tb = text_bounds.get(trigger)
            if tb is None:
                raise StandoffError(f"event {ann_id} trigger {trigger} not found", doc_id, line_no)
            if tb.label != event_type:
                fail_or_warn(
                    f"event {ann_id} type {event_type} != trigger label {tb.label}", line_no
                )
        for role, target in args:
            if target in text_bounds:
                continue
            if target in event_ids:
                raise StandoffError(
                    f"event {ann_id} argument {role} targets an event; only text-bound "
                    "arguments are supported",
                    doc_id,
                    line_no,
                )
            raise StandoffError(
                f"event {ann_id} argument {role} references unknown {target}", doc_id, line_no
            )
        events[ann_id] = EventAnnotation(
            id=ann_id, event_type=event_type, trigger=trigger, arguments=tuple(args)
        )

    attributes: dict[str, AttributeAnnotation] = {}
    seen_name_target: dict[tuple[str, str], str] = {}
    for line_no, ann_id, name, target, value in raw_attrs:
        if ann_id in attributes:
            raise StandoffError(f"duplicate id {ann_id}", doc_id, line_no)
        if target not in text_bounds and target not in events:
            raise StandoffError(
                f"attribute {ann_id} references unknown {target}", doc_id, line_no
            )
        if (name, target) in seen_name_target:
            fail_or_warn(
                f"attribute {ann_id} duplicates {name} on {target} "
                f"(first set by {seen_name_target[(name, target)]})",
                line_no,
            )
            continue
        seen_name_target[(name, target)] = ann_id
        attributes[ann_id] = AttributeAnnotation(id=ann_id, name=name, target=target, value=value)

    return Document(
        doc_id=doc_id,
        text=doc_text,
        text_bounds=text_bounds,
        events=events,
        attributes=attributes,
        metadata=metadata or DocumentMetadata(),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize_document(doc: Document) -> str:
    """Render a document back to ``.ann`` text.

    Lines are emitted as a T block, then E, then A, each sorted by numeric
    id, so identical documents always serialize to identical bytes.
    Round-trips: ``parse_document(serialize_document(d), d.text)`` equals
    ``d`` structurally.
    """
    lines: list[str] = []
    for tb in sorted(doc.text_bounds.values(), key=lambda t: annotation_sort_key(t.id)):
        offsets = ";".join(f"{s} {e}" for s, e in tb.span.fragments)
        lines.append(f"{tb.id}\t{tb.label} {offsets}\t{_flatten_ws(tb.covered_text)}")
    for ev in sorted(doc.events.values(), key=lambda e: annotation_sort_key(e.id)):
        body = f"{ev.event_type}:{ev.trigger or ''}"
        role_counts: dict[str, int] = {}
        for role, target in ev.arguments:
            n = role_counts.get(role, 0) + 1
            role_counts[role] = n
            suffix = "" if n == 1 else str(n)
            body += f" {role}{suffix}:{target}"
        lines.append(f"{ev.id}\t{body}")
    for attr in sorted(doc.attributes.values(), key=lambda a: annotation_sort_key(a.id)):
        body = f"{attr.name} {attr.target}"
        if attr.value is not None:
            body += f" {attr.value}"
        lines.append(f"{attr.id}\t{body}")
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Corpus I/O
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetadataRule:
    """Assigns (source, split) to documents whose doc_id or relative path
    starts with ``pattern``."""

    pattern: str
    source: str
    split: str


def parse_manifest(text: str) -> list[MetadataRule]:
    """Parse a corpus manifest: one ``pattern<TAB>source<TAB>split`` rule per
    line; ``#`` starts a comment. Commas are accepted in place of tabs."""
    rules = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in (line.split("\t") if "\t" in line else line.split(","))]
        if len(fields) != 3:
            raise StandoffError(f"manifest line {line_no}: expected pattern, source, split")
        pattern, source, split = fields
        if source not in SOURCES or split not in SPLITS:
            raise StandoffError(
                f"manifest line {line_no}: source must be one of {SOURCES} and split one of {SPLITS}"
            )
        rules.append(MetadataRule(pattern, source, split))
    return rules


def _metadata_for(rel_path: str, doc_id: str, rules: list[MetadataRule]) -> DocumentMetadata:
    for rule in rules:
        if doc_id == rule.pattern or rel_path.startswith(rule.pattern):
            return DocumentMetadata(source=rule.source, split=rule.split)
    # Fall back to directory-name conventions: any path component naming a
    # source or split assigns it.
    parts = rel_path.split("/")[:-1]
    source = next((p for p in parts if p in SOURCES), "other")
    split = next((p for p in parts if p in SPLITS), "unknown")
    return DocumentMetadata(source=source, split=split)


def load_corpus(
    directory: str | Path,
    manifest: str | Path | None = None,
    strict: bool = False,
    require_ann: bool = False,
) -> Corpus:
    """Load every ``<id>.txt`` / ``<id>.ann`` pair under ``directory``.

    A missing ``.ann`` yields a document with no annotations (a system may
    predict nothing for a note) unless ``require_ann`` is set; a ``.ann``
    without its ``.txt`` is always an error. Metadata comes from manifest
    rules when given, else from directory-name conventions (path components
    named mimic/uw or train/dev/test).
    """
    root = Path(directory)
    if not root.is_dir():
        raise StandoffError(f"corpus directory not found: {root}")
    rules = parse_manifest(Path(manifest).read_text(encoding="utf-8")) if manifest else []

    txt_files = sorted(root.rglob("*.txt"))
    stray_ann = [p for p in sorted(root.rglob("*.ann")) if not p.with_suffix(".txt").exists()]
    if stray_ann:
        raise StandoffError(f"annotation file without note text: {stray_ann[0]}")

    corpus = Corpus()
    for txt_path in txt_files:
        doc_id = txt_path.stem
        rel = txt_path.relative_to(root).with_suffix("").as_posix()
        text = txt_path.read_text(encoding="utf-8")
        metadata = _metadata_for(rel, doc_id, rules)
        ann_path = txt_path.with_suffix(".ann")
        if ann_path.exists():
            try:
                doc = parse_document(
                    ann_path.read_text(encoding="utf-8"),
                    text,
                    doc_id=doc_id,
                    strict=strict,
                    metadata=metadata,
                )
            except StandoffError:
                raise
            except OSError as exc:
                raise StandoffError(f"cannot read {ann_path}: {exc}") from exc
        elif require_ann:
            raise StandoffError(f"missing annotation file for {txt_path}")
        else:
            doc = empty_document(doc_id, text, metadata)
        corpus.add(doc)
    return corpus


def write_corpus(corpus: Corpus, directory: str | Path) -> None:
    """Write ``<id>.txt`` / ``<id>.ann`` pairs through the serializer."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for doc_id in corpus.doc_ids():
        doc = corpus[doc_id]
        (root / f"{doc_id}.txt").write_text(doc.text, encoding="utf-8")
        (root / f"{doc_id}.ann").write_text(serialize_document(doc), encoding="utf-8")
