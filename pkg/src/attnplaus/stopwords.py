"""Pinned English stop-word list.

127 entries: articles, pronouns, prepositions, conjunctions, auxiliaries,
clitics and punctuation.  Negations ("no", "not", "nor") are deliberately
absent since they carry meaning in sentence comparison.
"""
from pathlib import Path

from .errors import CorpusIOError

_WORDS = """
i me my myself we our ours ourselves you your yours yourself yourselves
he him his himself she her hers herself it its itself they them their theirs themselves
what which who whom this that these those am is are was were be been being
have has had having do does did doing a an the and but if or because as until while
of at by for with about against between into through during before after above below
to from up down in out on off over under then here there when where why how
can could will would should may
all any both each some than
's n't 'm 're 've 'll 'd
""".split()

_PUNCT = [".", ",", "!", "?", ";", ":", "'", '"', "(", ")", "-", "`"]

DEFAULT_STOPWORDS = frozenset(_WORDS + _PUNCT)


def load_stopwords(path):
    """Read a stop-word file: one token per line, blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusIOError(f"cannot read stop-word file {path}: {exc}") from exc
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())
