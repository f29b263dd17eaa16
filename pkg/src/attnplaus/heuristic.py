"""Similarity-based plausible attention map.

Each non-stop token is scored by the sum of its clamped cosine
similarities to the non-stop tokens of the opposite sentence; the sums
are then min-max rescaled over the non-stop positions of the sentence.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable, cosine
from .errors import EmptyVector
from .maps import AttentionMap


@dataclass(frozen=True)
class HeuristicMap:
    premise_scores: np.ndarray
    hypothesis_scores: np.ndarray
    similarity_matrix: np.ndarray
    # True when the sentence has no non-stop token (scores forced to zero)
    premise_degenerate: bool = False
    hypothesis_degenerate: bool = False

    def to_attention_map(self, pair_id) -> AttentionMap:
        return AttentionMap(pair_id, self.premise_scores, self.hypothesis_scores)


def similarity01(w, v, table: EmbeddingTable) -> float:
    if w.is_stop or v.is_stop:
        return 0.0
    return max(0.0, cosine(table.lookup(w.normalized), table.lookup(v.normalized)))


def minmax_normalize(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise EmptyVector("cannot rescale an empty vector")
    lo, hi = xs.min(), xs.max()
    if hi == lo:
        return np.zeros_like(xs)
    return (xs - lo) / (hi - lo)


def _unit_rows(tokens, table):
    mat = np.stack([table.lookup(t.normalized) for t in tokens])
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return np.divide(mat, norms, out=np.zeros_like(mat), where=norms > 0)


def _side_scores(raw, content):
    scores = np.zeros_like(raw)
    if not content.any():
        return scores, True
    scores[content] = minmax_normalize(raw[content])
    return scores, False


def heuristic_map(pair, table: EmbeddingTable) -> HeuristicMap:
    keep_p = np.array([not t.is_stop for t in pair.premise])
    keep_h = np.array([not t.is_stop for t in pair.hypothesis])
    sim = _unit_rows(pair.premise, table) @ _unit_rows(pair.hypothesis, table).T
    sim = np.clip(sim, 0.0, 1.0)
    sim[~keep_p, :] = 0.0
    sim[:, ~keep_h] = 0.0
    prem, dp = _side_scores(sim.sum(axis=1), keep_p)
    hyp, dh = _side_scores(sim.sum(axis=0), keep_h)
    return HeuristicMap(prem, hyp, sim, dp, dh)


def heuristic_maps(dataset, table: EmbeddingTable, threads: int = 1) -> list[AttentionMap]:
    """Heuristic maps for every pair, in dataset order."""
    def one(pair):
        return heuristic_map(pair, table).to_attention_map(pair.pair_id)

    if threads <= 1:
        return [one(p) for p in dataset]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, dataset))
