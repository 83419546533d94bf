"""Extractive baselines: Lead-k and the greedy ROUGE-2 oracle."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .corpus import Dialogue
from .rouge import DEFAULT_TOKENIZER, Tokenizer, Vocab, ngram_ids


@dataclass(frozen=True)
class ExtractiveSummary:
    selected: tuple[int, ...]
    text: str
    score: float | None = None
    # ROUGE-2 F after each greedy step, in selection order
    trace: tuple[float, ...] = field(default=(), compare=False)


def _join(d: Dialogue, idx) -> str:
    return " ".join(d.turns[i].text for i in idx)


def lead_k(d: Dialogue, k: int = 3) -> ExtractiveSummary:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    idx = tuple(range(min(k, len(d.turns))))
    return ExtractiveSummary(idx, _join(d, idx))


class _Rouge2Scorer:
    """ROUGE-2 F of an ordered utterance selection against one reference.

    Scores are exact fractions 2m / (|hyp bigrams| + |ref bigrams|) so greedy
    comparisons never depend on float rounding.
    """

    def __init__(self, d: Dialogue, reference: str, tokenizer: Tokenizer):
        vocab = Vocab()
        self.utts = [vocab.encode(tokenizer.tokenize(u.text)) for u in d.turns]
        ref = vocab.encode(tokenizer.tokenize(reference))
        self.ref_tokens = ref
        self.base = max(len(vocab), 1)
        self.ref_bigrams = ngram_ids(ref, 2, self.base)

    def __call__(self, idx) -> Fraction:
        if idx:
            hyp = np.concatenate([self.utts[i] for i in idx])
        else:
            hyp = np.empty(0, dtype=np.int64)
        hb = ngram_ids(hyp, 2, self.base)
        denom = hb.size + self.ref_bigrams.size
        if denom == 0:
            return Fraction(int(np.array_equal(hyp, self.ref_tokens)))
        m = _kernels.clipped_overlap(hb, self.ref_bigrams)
        return Fraction(2 * m, denom)


def greedy_oracle(d: Dialogue, reference: str, tokenizer: Tokenizer = DEFAULT_TOKENIZER) -> ExtractiveSummary:
    """Add the utterance that most improves ROUGE-2 F until nothing strictly improves.

    The selection is always scored in dialogue order; ties go to the lowest index.
    """
    if not reference or not reference.strip():
        raise ValueError("reference summary must be non-empty")
    score = _Rouge2Scorer(d, reference, tokenizer)
    chosen: list[int] = []
    best = score(())
    trace = []
    while True:
        pick, pick_score = None, best
        for i in range(len(d.turns)):
            if i in chosen:
                continue
            s = score(sorted(chosen + [i]))
            if s > pick_score:
                pick, pick_score = i, s
        if pick is None:
            break
        chosen.append(pick)
        best = pick_score
        trace.append(float(best))
    idx = tuple(sorted(chosen))
    return ExtractiveSummary(idx, _join(d, idx), float(best), tuple(trace))
