"""Annotated NLI corpus ingestion and descriptive statistics.

The reader targets eSNLI-style CSV exports: one row per sentence pair,
highlight columns holding comma-separated zero-based token indices (or
``{}`` for none).  Several annotator columns may be given per sentence;
their masks are merged by union.
"""
from __future__ import annotations

import csv
import logging
import string
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    CorpusIOError,
    DataError,
    EmptySelection,
    EmptySentence,
    FormatError,
    HighlightOutOfRange,
    MissingPosTags,
    SchemaError,
)
from .stopwords import DEFAULT_STOPWORDS

log = logging.getLogger(__name__)

LABELS = ("entailment", "contradiction", "neutral")
POS_CATEGORIES = ("VERB", "NOUN", "ADJ", "NUM", "ADP", "DET", "OTHER")
CONTENT_CATEGORIES = ("VERB", "NOUN", "ADJ")

_PUNCT = frozenset(string.punctuation)

# Penn Treebank prefixes folded onto the coarse categories.
_PTB_PREFIX = (
    ("NN", "NOUN"),
    ("VB", "VERB"),
    ("JJ", "ADJ"),
    ("CD", "NUM"),
    ("IN", "ADP"),
    ("DT", "DET"),
    ("PDT", "DET"),
    ("WDT", "DET"),
)


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    is_stop: bool
    pos: str | None = None


@dataclass(frozen=True)
class SentencePair:
    pair_id: str
    premise: tuple[Token, ...]
    hypothesis: tuple[Token, ...]
    label: str
    premise_highlight: tuple[int, ...]
    hypothesis_highlight: tuple[int, ...]

    def __post_init__(self):
        if not self.premise or not self.hypothesis:
            raise EmptySentence(f"pair {self.pair_id}: empty sentence")
        if len(self.premise_highlight) != len(self.premise):
            raise HighlightOutOfRange(
                f"pair {self.pair_id}: premise mask length mismatch", self.pair_id)
        if len(self.hypothesis_highlight) != len(self.hypothesis):
            raise HighlightOutOfRange(
                f"pair {self.pair_id}: hypothesis mask length mismatch", self.pair_id)

    @property
    def sides(self):
        """``(tokens, mask)`` for the premise, then the hypothesis."""
        return ((self.premise, self.premise_highlight),
                (self.hypothesis, self.hypothesis_highlight))


@dataclass(frozen=True)
class Dataset:
    pairs: tuple[SentencePair, ...]
    split_name: str = ""
    skipped_rows: int = 0

    def __post_init__(self):
        if not self.pairs:
            raise EmptySelection(f"dataset {self.split_name!r} is empty")
        seen = set()
        for p in self.pairs:
            if p.pair_id in seen:
                raise DataError(f"duplicate pair_id {p.pair_id!r}")
            seen.add(p.pair_id)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]

    def by_id(self):
        return {p.pair_id: p for p in self.pairs}

    def limit(self, n):
        if n is None or n >= len(self.pairs):
            return self
        return replace(self, pairs=self.pairs[:n])


# -- tokenization ----------------------------------------------------------

def _peel(chunk: str) -> list[str]:
    lead, trail = [], []
    start, end = 0, len(chunk)
    while start < end and chunk[start] in _PUNCT:
        lead.append(chunk[start])
        start += 1
    while end > start and chunk[end - 1] in _PUNCT:
        trail.append(chunk[end - 1])
        end -= 1
    core = [chunk[start:end]] if start < end else []
    return lead + core + trail[::-1]


def tokenize(text: str, stopwords=DEFAULT_STOPWORDS) -> list[Token]:
    """Whitespace split, then split off leading/trailing ASCII punctuation.

    Internal punctuation (``don't``, ``e-mail``) is kept inside the token.
    """
    if not text or not text.strip():
        raise EmptySentence("empty sentence")
    tokens = []
    for chunk in text.split():
        for piece in _peel(chunk):
            norm = piece.lower()
            tokens.append(Token(piece, norm, norm in stopwords))
    return tokens


def parse_highlights(index_list: str, token_count: int, pair_id=None) -> tuple[int, ...]:
    cell = (index_list or "").strip()
    mask = [0] * token_count
    if cell in ("", "{}"):
        return tuple(mask)
    for part in cell.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            idx = int(part)
        except ValueError:
            raise FormatError(f"pair {pair_id}: bad highlight index {part!r}") from None
        if idx < 0 or idx >= token_count:
            raise HighlightOutOfRange(
                f"pair {pair_id}: highlight index {idx} out of range for "
                f"{token_count} tokens", pair_id)
        mask[idx] = 1
    return tuple(mask)


def union_masks(masks: Iterable[Sequence[int]]) -> tuple[int, ...]:
    masks = list(masks)
    return tuple(int(any(bits)) for bits in zip(*masks))


def normalize_pos(tag: str) -> str:
    tag = tag.strip().upper()
    if tag in POS_CATEGORIES:
        return tag
    for prefix, cat in _PTB_PREFIX:
        if tag.startswith(prefix):
            return cat
    return "OTHER"


# -- column mapping --------------------------------------------------------

@dataclass(frozen=True)
class ColumnMap:
    """CSV column names.  Highlight and POS entries accept ``a|b|c`` lists
    or a trailing ``*`` matching every header column with that prefix."""

    pair_id: str = "pairID"
    label: str = "gold_label"
    premise: str = "Sentence1"
    hypothesis: str = "Sentence2"
    premise_hl: str = "Sentence1_Highlighted_*"
    hypothesis_hl: str = "Sentence2_Highlighted_*"
    premise_pos: str | None = None
    hypothesis_pos: str | None = None

    _KEYS = ("pair_id", "label", "premise", "hypothesis", "premise_hl",
             "hypothesis_hl", "premise_pos", "hypothesis_pos")

    @classmethod
    def parse(cls, spec: str | None) -> "ColumnMap":
        """Parse ``key=column,key=column`` overrides on top of the defaults."""
        if not spec:
            return cls()
        values = {}
        for item in spec.split(","):
            if not item.strip():
                continue
            key, sep, col = item.partition("=")
            key = key.strip()
            if not sep or key not in cls._KEYS:
                raise SchemaError(f"bad column mapping entry {item!r}")
            values[key] = col.strip()
        return cls(**values)

    @staticmethod
    def resolve(entry: str, header: Sequence[str]) -> list[str]:
        cols = []
        for name in entry.split("|"):
            name = name.strip()
            if name.endswith("*"):
                cols.extend(h for h in header if h.startswith(name[:-1]))
            elif name in header:
                cols.append(name)
            else:
                raise SchemaError(f"missing column {name!r}")
        if not cols:
            raise SchemaError(f"no column matches {entry!r}")
        return cols


def _tagged(tokens, tags_cell, pair_id, side):
    tags = tags_cell.split()
    if len(tags) != len(tokens):
        raise FormatError(
            f"pair {pair_id}: {len(tags)} {side} POS tags for {len(tokens)} tokens")
    return [replace(t, pos=normalize_pos(tag)) for t, tag in zip(tokens, tags)]


def _read_sidecar(path):
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusIOError(f"cannot read POS sidecar {path}: {exc}") from exc
    rows = []
    for n, line in enumerate(lines, 1):
        prem, sep, hyp = line.partition("\t")
        if not sep:
            raise FormatError(f"POS sidecar line {n}: expected two tab-separated fields", n)
        rows.append((prem, hyp))
    return rows


def parse_corpus(path, column_map: ColumnMap | None = None, *, stopwords=DEFAULT_STOPWORDS,
                 pos_sidecar=None, split_name=None, limit=None) -> Dataset:
    """Read an annotated CSV into a :class:`Dataset`.

    Rows whose label is not one of :data:`LABELS`, or whose sentence is
    empty, are skipped and counted in ``Dataset.skipped_rows``.  ``limit``
    caps the number of retained pairs.
    """
    cmap = column_map or ColumnMap()
    path = Path(path)
    sidecar = _read_sidecar(pos_sidecar) if pos_sidecar else None
    pairs, skipped = [], 0
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for key in ("pair_id", "label", "premise", "hypothesis"):
            if getattr(cmap, key) not in header:
                raise SchemaError(f"missing column {getattr(cmap, key)!r} ({key})")
        prem_hl = ColumnMap.resolve(cmap.premise_hl, header)
        hyp_hl = ColumnMap.resolve(cmap.hypothesis_hl, header)
        prem_pos = ColumnMap.resolve(cmap.premise_pos, header)[0] if cmap.premise_pos else None
        hyp_pos = ColumnMap.resolve(cmap.hypothesis_pos, header)[0] if cmap.hypothesis_pos else None

        for rowno, row in enumerate(reader):
            if limit is not None and len(pairs) >= limit:
                break
            pid = row[cmap.pair_id]
            label = (row[cmap.label] or "").strip().lower()
            if label not in LABELS:
                skipped += 1
                continue
            try:
                prem = tokenize(row[cmap.premise] or "", stopwords)
                hyp = tokenize(row[cmap.hypothesis] or "", stopwords)
            except EmptySentence:
                skipped += 1
                continue
            pmask = union_masks(parse_highlights(row[c], len(prem), pid) for c in prem_hl)
            hmask = union_masks(parse_highlights(row[c], len(hyp), pid) for c in hyp_hl)
            if prem_pos:
                prem = _tagged(prem, row[prem_pos] or "", pid, "premise")
            if hyp_pos:
                hyp = _tagged(hyp, row[hyp_pos] or "", pid, "hypothesis")
            if sidecar is not None:
                if rowno >= len(sidecar):
                    raise FormatError(f"POS sidecar has no line for row {rowno + 1}", rowno + 1)
                prem = _tagged(prem, sidecar[rowno][0], pid, "premise")
                hyp = _tagged(hyp, sidecar[rowno][1], pid, "hypothesis")
            pairs.append(SentencePair(pid, tuple(prem), tuple(hyp), label, pmask, hmask))

    if skipped:
        log.info("%s: skipped %d rows (unknown label or empty sentence)", path.name, skipped)
    return Dataset(tuple(pairs), split_name or path.stem, skipped)


# -- selection and statistics ---------------------------------------------

def filter_by_label(d: Dataset, label: str) -> Dataset:
    kept = tuple(p for p in d.pairs if p.label == label)
    if not kept:
        raise EmptySelection(f"no pair with label {label!r} in {d.split_name!r}")
    return replace(d, pairs=kept, split_name=f"{d.split_name}:{label}")


def highlight_rate(d: Dataset) -> float:
    marked = total = 0
    for p in d:
        for _, mask in p.sides:
            marked += sum(mask)
            total += len(mask)
    return marked / total


def pos_stats(d: Dataset) -> dict[str, float]:
    """Share of each POS category among highlighted tokens.

    The returned mapping holds one entry per :data:`POS_CATEGORIES` plus
    the ``"VERB+NOUN+ADJ"`` aggregate.
    """
    counts = dict.fromkeys(POS_CATEGORIES, 0)
    for p in d:
        for tokens, mask in p.sides:
            for tok, bit in zip(tokens, mask):
                if tok.pos is None:
                    raise MissingPosTags(f"pair {p.pair_id}: token {tok.surface!r} has no POS tag")
                if bit:
                    counts[tok.pos] += 1
    total = sum(counts.values())
    if total == 0:
        raise EmptySelection("no highlighted token to describe")
    stats = {cat: n / total for cat, n in counts.items()}
    stats["VERB+NOUN+ADJ"] = sum(stats[c] for c in CONTENT_CATEGORIES)
    return stats


def vocabulary(d: Dataset) -> set[str]:
    return {t.normalized for p in d for tokens, _ in p.sides for t in tokens}


def oov_rate(d: Dataset, vocab) -> float:
    missing = total = 0
    for p in d:
        for tokens, _ in p.sides:
            for t in tokens:
                total += 1
                missing += t.normalized not in vocab
    return missing / total
