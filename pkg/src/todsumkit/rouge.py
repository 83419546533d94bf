"""Canonical tokenizer and sentence-level ROUGE-1/2/L.

Counts are clipped (multiset intersection). No stemming and no stopword
removal, so ``cheap`` and ``cheaper`` stay distinct.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .ontology import WORD_TO_DIGIT


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


@dataclass(frozen=True)
class Tokenizer:
    lowercase: bool = True
    strip_punctuation: bool = True
    fold_digit_words: bool = False

    def __call__(self, text: str) -> list[str]:
        return self.tokenize(text)

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        out = []
        for tok in text.split():
            if self.strip_punctuation:
                lo, hi = 0, len(tok)
                while lo < hi and _is_punct(tok[lo]):
                    lo += 1
                while hi > lo and _is_punct(tok[hi - 1]):
                    hi -= 1
                tok = tok[lo:hi]
            if not tok:
                continue
            if self.fold_digit_words:
                tok = WORD_TO_DIGIT.get(tok, tok)
            out.append(tok)
        return out

    def config(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "strip_punctuation": "leading/trailing unicode P* per whitespace token" if self.strip_punctuation else False,
            "fold_digit_words": self.fold_digit_words,
            "stemming": False,
        }


DEFAULT_TOKENIZER = Tokenizer()


def tokenize(text: str) -> list[str]:
    return DEFAULT_TOKENIZER.tokenize(text)


@dataclass(frozen=True)
class RougeScore:
    variant: str
    precision: float
    recall: float
    f: float
    overlap: int = 0
    hyp_count: int = 0
    ref_count: int = 0

    def as_dict(self) -> dict[str, float]:
        return {"p": self.precision, "r": self.recall, "f": self.f}


def _prf(variant: str, m: int, nh: int, nr: int, identical: bool) -> RougeScore:
    if nh == 0 and nr == 0:
        # no units on either side: fall back to exact token-sequence match
        v = 1.0 if identical else 0.0
        return RougeScore(variant, v, v, v, 0, 0, 0)
    p = m / nh if nh else 0.0
    r = m / nr if nr else 0.0
    f = 2 * m / (nh + nr) if m else 0.0
    return RougeScore(variant, p, r, f, m, nh, nr)


class Vocab:
    """Token → int id map shared across calls that compare the same texts."""

    def __init__(self):
        self._ids: dict[str, int] = {}

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        ids = self._ids
        return np.fromiter((ids.setdefault(t, len(ids)) for t in tokens), dtype=np.int64, count=len(tokens))

    def __len__(self) -> int:
        return len(self._ids)


def ngram_ids(ids: np.ndarray, n: int, base: int) -> np.ndarray:
    """Encode each length-``n`` window of ``ids`` as one int64 (base-``base`` digits)."""
    if ids.size < n:
        return np.empty(0, dtype=np.int64)
    out = ids[: ids.size - n + 1].copy()
    for k in range(1, n):
        out = out * base + ids[k: ids.size - n + 1 + k]
    return out


def rouge_n(hyp: Sequence[str], ref: Sequence[str], n: int = 1) -> RougeScore:
    if n not in (1, 2):
        raise ValueError(f"ROUGE-N supports n in {{1, 2}}, got {n}")
    vocab = Vocab()
    h = vocab.encode(hyp)
    r = vocab.encode(ref)
    base = max(len(vocab), 1)
    hg = ngram_ids(h, n, base)
    rg = ngram_ids(r, n, base)
    m = _kernels.clipped_overlap(hg, rg)
    return _prf(f"rouge-{n}", m, hg.size, rg.size, list(hyp) == list(ref))


def rouge_l(hyp: Sequence[str], ref: Sequence[str]) -> RougeScore:
    vocab = Vocab()
    h = vocab.encode(hyp)
    r = vocab.encode(ref)
    lcs = _kernels.lcs_length(h, r)
    return _prf("rouge-l", lcs, h.size, r.size, list(hyp) == list(ref))


def rouge_all(hyp_text: str, ref_text: str, tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> dict[str, RougeScore]:
    hyp = tokenizer.tokenize(hyp_text)
    ref = tokenizer.tokenize(ref_text)
    return {
        "rouge-1": rouge_n(hyp, ref, 1),
        "rouge-2": rouge_n(hyp, ref, 2),
        "rouge-l": rouge_l(hyp, ref),
    }
