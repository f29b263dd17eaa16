"""Linearly separable three-class toy task for training sanity checks.

Every class owns its content words; function words are shared.  A
bag-of-words classifier separates the classes perfectly, so a working
recurrent model must too.
"""
from __future__ import annotations

import numpy as np

from ..corpus import Dataset, SentencePair, tokenize

CLASS_WORDS = {
    "entailment": (("dog", "cat", "horse", "bird", "child", "woman"),
                   ("runs", "sleeps", "jumps", "eats", "plays", "sings")),
    "contradiction": (("car", "truck", "train", "boat", "plane", "bike"),
                      ("stops", "breaks", "crashes", "turns", "parks", "honks")),
    "neutral": (("chef", "judge", "pilot", "nurse", "poet", "miner"),
                ("waits", "thinks", "writes", "reads", "works", "smiles")),
}
PLACES = ("park", "street", "house", "field")


def _masked(text, content):
    toks = tokenize(text)
    return tuple(toks), tuple(int(t.normalized in content) for t in toks)


def synthetic_task(per_class: int = 40, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    pairs = []
    for label, (nouns, verbs) in CLASS_WORDS.items():
        content = set(nouns) | set(verbs)
        for k in range(per_class):
            n1, n2 = rng.choice(nouns, size=2, replace=False)
            v1, v2 = rng.choice(verbs, size=2, replace=False)
            place = rng.choice(PLACES)
            premise = f"The {n1} {v1} in the {place} and the {n2} {v2} ."
            hypothesis = f"A {rng.choice([n1, n2])} {rng.choice([v1, v2])} ."
            ptoks, pmask = _masked(premise, content)
            htoks, hmask = _masked(hypothesis, content)
            pairs.append(SentencePair(f"syn-{label}-{k}", ptoks, htoks, label, pmask, hmask))
    order = rng.permutation(len(pairs))
    return Dataset(tuple(pairs[i] for i in order), "synthetic")
