"""Attention-map records and their JSONL exchange format.

One JSON object per line::

    {"pair_id": "...", "premise": [floats], "hypothesis": [floats]}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import CorpusIOError, DataError, DimensionError, FormatError


@dataclass(frozen=True)
class AttentionMap:
    pair_id: str
    premise: np.ndarray
    hypothesis: np.ndarray

    def __post_init__(self):
        for side in ("premise", "hypothesis"):
            arr = np.asarray(getattr(self, side), dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise DimensionError(f"map {self.pair_id}: {side} must be a non-empty vector")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DataError(f"map {self.pair_id}: {side} has negative or non-finite entries")
            object.__setattr__(self, side, arr)

    @property
    def sides(self):
        return self.premise, self.hypothesis

    def to_json(self) -> str:
        return json.dumps({"pair_id": self.pair_id,
                           "premise": [float(x) for x in self.premise],
                           "hypothesis": [float(x) for x in self.hypothesis]})


def human_maps(dataset) -> list[AttentionMap]:
    """Highlight masks of ``dataset`` as two-valued attention maps."""
    return [AttentionMap(p.pair_id, np.array(p.premise_highlight, float),
                         np.array(p.hypothesis_highlight, float)) for p in dataset]


def write_jsonl(maps: Iterable[AttentionMap], path) -> int:
    n = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for m in maps:
            fh.write(m.to_json() + "\n")
            n += 1
    return n


def read_jsonl(path) -> list[AttentionMap]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusIOError(f"cannot read attention maps {path}: {exc}") from exc
    maps = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            maps.append(AttentionMap(str(obj["pair_id"]), obj["premise"], obj["hypothesis"]))
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{n}: bad attention map record ({exc})", n) from None
    return maps


def align(maps: Iterable[AttentionMap], dataset) -> list[AttentionMap]:
    """Reorder ``maps`` to follow ``dataset`` and check token counts."""
    by_id = {m.pair_id: m for m in maps}
    out = []
    for p in dataset:
        m = by_id.get(p.pair_id)
        if m is None:
            raise DataError(f"no attention map for pair {p.pair_id}")
        if m.premise.size != len(p.premise) or m.hypothesis.size != len(p.hypothesis):
            raise DimensionError(f"map {p.pair_id}: lengths do not match the corpus tokens")
        out.append(m)
    return out
