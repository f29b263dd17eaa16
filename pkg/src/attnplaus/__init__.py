"""Plausibility analysis of attention maps for sentence-pair NLI."""
from .corpus import (ColumnMap, Dataset, SentencePair, Token, filter_by_label, highlight_rate,
                     oov_rate, parse_corpus, parse_highlights, pos_stats, tokenize)
from .embeddings import EmbeddingTable, OovPolicy, cosine, load_table, lookup
from .heuristic import HeuristicMap, heuristic_map, heuristic_maps, minmax_normalize, similarity01
from .maps import AttentionMap, human_maps, read_jsonl, write_jsonl

__version__ = "0.1.0"
