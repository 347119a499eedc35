"""Token normalization, trigram similarity and an inverted index over literals."""
from __future__ import annotations

import re
from collections import defaultdict
from functools import lru_cache
from typing import Hashable, Iterable

FUZZY_THRESHOLD = 0.5
# unequal tokens can share a trigram set ("aaaa"/"aaaaa"); keep 1.0 for equality only
_MAX_INEXACT = 0.99

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@lru_cache(maxsize=65536)
def trigrams(token: str) -> frozenset[str]:
    padded = f"  {token}  "
    return frozenset(padded[i:i + 3] for i in range(len(padded) - 2))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def token_similarity(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return min(jaccard(trigrams(a), trigrams(b)), _MAX_INEXACT)


def match_score(query: str, literal: str, threshold: float = FUZZY_THRESHOLD) -> float:
    """Similarity in [0, 1] of ``literal`` to ``query``.

    Each query token takes its best similarity against the literal's tokens.
    If any query token stays below ``threshold`` the score is 0; otherwise
    it is the mean of the per-token bests. The score is 1.0 exactly when
    every query token occurs verbatim (after normalization) in the literal.
    """
    q = tokenize(query)
    if not q:
        return 0.0
    lit = tokenize(literal)
    if not lit:
        return 0.0
    lit_set = set(lit)
    total = 0.0
    for tok in q:
        if tok in lit_set:
            best = 1.0
        else:
            best = max(token_similarity(tok, t) for t in lit_set)
            if best < threshold:
                return 0.0
        total += best
    return total / len(q)


class TextIndex:
    """Inverted index from normalized tokens to keys, with a trigram index
    over the token vocabulary for fuzzy lookup.

    Keys are opaque hashables (the store uses triples). ``text_of`` keeps the
    raw literal for each key so candidates can be rescored.
    """

    def __init__(self, threshold: float = FUZZY_THRESHOLD):
        self.threshold = threshold
        self.postings: dict[str, set] = defaultdict(set)
        self.gram_postings: dict[str, set[str]] = defaultdict(set)
        self.text_of: dict[Hashable, str] = {}

    def add(self, key: Hashable, text: str) -> None:
        self.text_of[key] = text
        for tok in set(tokenize(text)):
            if tok not in self.postings:
                for g in trigrams(tok):
                    self.gram_postings[g].add(tok)
            self.postings[tok].add(key)

    def extend(self, items: Iterable[tuple[Hashable, str]]) -> None:
        for key, text in items:
            self.add(key, text)

    @property
    def token_count(self) -> int:
        return len(self.postings)

    def similar_tokens(self, token: str) -> dict[str, float]:
        """Vocabulary tokens with similarity >= threshold to ``token``."""
        out = {}
        if token in self.postings:
            out[token] = 1.0
        grams = trigrams(token)
        seen: set[str] = set()
        for g in grams:
            seen |= self.gram_postings.get(g, set())
        for cand in seen:
            if cand == token:
                continue
            s = token_similarity(token, cand)
            if s >= self.threshold:
                out[cand] = s
        return out

    def lookup(self, query: str, fuzzy: bool = False) -> dict[Hashable, float]:
        """Keys whose literal matches every query token, with match scores."""
        q = tokenize(query)
        if not q:
            return {}
        candidates: set | None = None
        for tok in q:
            if fuzzy:
                keys: set = set()
                for t in self.similar_tokens(tok):
                    keys |= self.postings[t]
            else:
                keys = set(self.postings.get(tok, ()))
            candidates = keys if candidates is None else candidates & keys
            if not candidates:
                return {}
        if not fuzzy:
            return {k: 1.0 for k in candidates}
        out = {}
        for k in candidates:
            s = match_score(query, self.text_of[k], self.threshold)
            if s > 0:
                out[k] = s
        return out
