"""Pretrained word-vector tables (GloVe text format) and cosine similarity."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorpusIOError, DimensionError, FormatError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OovPolicy:
    kind: str = "zero"  # "zero" | "seeded_uniform"
    lo: float = -0.05
    hi: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("zero", "seeded_uniform"):
            raise ValueError(f"unknown OOV policy {self.kind!r}")

    @classmethod
    def seeded_uniform(cls, lo=-0.05, hi=0.05, seed=0):
        return cls("seeded_uniform", lo, hi, seed)


ZERO = OovPolicy()


def _token_seed(seed: int, token: str) -> int:
    digest = hashlib.blake2b(f"{seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class EmbeddingTable:
    """Immutable token -> vector map with a deterministic OOV policy."""

    def __init__(self, tokens, vectors, oov_policy: OovPolicy = ZERO):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise DimensionError("vectors must be a (len(tokens), dim) matrix")
        self.index = {}
        for i, tok in enumerate(tokens):
            self.index.setdefault(tok, i)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.oov_policy = oov_policy

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.index)

    def __contains__(self, token):
        return token in self.index

    def with_policy(self, policy: OovPolicy) -> "EmbeddingTable":
        clone = object.__new__(EmbeddingTable)
        clone.index, clone.vectors, clone.oov_policy = self.index, self.vectors, policy
        return clone

    def lookup(self, token: str) -> np.ndarray:
        i = self.index.get(token)
        if i is not None:
            return self.vectors[i]
        pol = self.oov_policy
        if pol.kind == "zero":
            return np.zeros(self.dim)
        rng = np.random.default_rng(_token_seed(pol.seed, token))
        return rng.uniform(pol.lo, pol.hi, size=self.dim)


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    return table.lookup(token)


def load_table(path, dim: int, *, vocab=None, strict=True, oov_policy: OovPolicy = ZERO):
    """Load a whitespace-separated ``<token> <f1> ... <f_dim>`` file.

    ``vocab`` restricts the table to the given tokens, which avoids
    parsing millions of unused rows.  With ``strict=False`` malformed
    lines are skipped and counted instead of raising :class:`FormatError`.
    Duplicate tokens keep their first occurrence.
    """
    tokens, rows, seen, bad = [], [], set(), 0
    try:
        fh = Path(path).open(encoding="utf-8", errors="strict")
    except OSError as exc:
        raise CorpusIOError(f"cannot read embeddings {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                if strict:
                    raise FormatError(
                        f"{path}:{lineno}: expected {dim} floats, got {len(parts) - 1}", lineno)
                bad += 1
                continue
            tok = parts[0]
            if tok in seen or (vocab is not None and tok not in vocab):
                continue
            try:
                row = [float(x) for x in parts[1:]]
            except ValueError:
                if strict:
                    raise FormatError(f"{path}:{lineno}: non-numeric value", lineno) from None
                bad += 1
                continue
            seen.add(tok)
            tokens.append(tok)
            rows.append(row)
    if bad:
        log.warning("%s: skipped %d malformed lines", path, bad)
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingTable(tokens, vectors, oov_policy)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionError(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))
