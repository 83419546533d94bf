"""State-aware factual consistency: tuple precision/recall/F1 and error typing."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import fsum
from typing import Sequence

from .state import DialogueState, StateTuple

ERROR_TYPES = ("domain_error", "intent_error", "slot_missing", "slot_redundancy", "slot_value_error")


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class FactualScore:
    precision: float
    recall: float
    f1: float
    n_hyp: int
    n_tgt: int
    n_match: int

    @classmethod
    def from_counts(cls, n_match: int, n_hyp: int, n_tgt: int) -> "FactualScore":
        if n_hyp == 0 and n_tgt == 0:
            return cls(1.0, 1.0, 1.0, 0, 0, 0)
        p = _ratio(n_match, n_hyp)
        r = _ratio(n_match, n_tgt)
        return cls(p, r, _f1(p, r), n_hyp, n_tgt, n_match)


def factual_prf(hyp: DialogueState, tgt: DialogueState) -> FactualScore:
    """Exact 4-field tuple matching; both sides empty scores 1.0."""
    return FactualScore.from_counts(len(hyp.tuples & tgt.tuples), len(hyp), len(tgt))


@dataclass(frozen=True)
class ErrorProfile:
    domain_error: int = 0
    intent_error: int = 0
    slot_missing: int = 0
    slot_redundancy: int = 0
    slot_value_error: int = 0
    # (hyp tuple, tgt tuple or None, category), sorted, for per-sample reports
    details: tuple = field(default=(), compare=False, repr=False)

    @property
    def counts(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in ERROR_TYPES}

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def classify_errors(hyp: DialogueState, tgt: DialogueState) -> ErrorProfile:
    """Assign every unmatched tuple to exactly one of five error types.

    Unmatched hypothesis tuples go through a cascade: unknown domain, then
    unknown (domain, intent), then same slot key with another value (which
    consumes one unmatched gold tuple), else redundancy. Gold tuples left
    over are missing slots.
    """
    extra = sorted(hyp.tuples - tgt.tuples)
    missing = sorted(tgt.tuples - hyp.tuples)
    tgt_domains = tgt.domains
    tgt_intents = tgt.intents

    open_by_key: dict[tuple[str, str, str], list[StateTuple]] = {}
    for t in missing:
        open_by_key.setdefault(t.key(), []).append(t)

    counts = dict.fromkeys(ERROR_TYPES, 0)
    details = []
    for h in extra:
        if h.domain not in tgt_domains:
            cat, partner = "domain_error", None
        elif (h.domain, h.intent) not in tgt_intents:
            cat, partner = "intent_error", None
        elif open_by_key.get(h.key()):
            cat, partner = "slot_value_error", open_by_key[h.key()].pop(0)
        else:
            cat, partner = "slot_redundancy", None
        counts[cat] += 1
        details.append((h, partner, cat))
    for queue in open_by_key.values():
        for t in queue:
            counts["slot_missing"] += 1
            details.append((None, t, "slot_missing"))
    return ErrorProfile(**counts, details=tuple(details))


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class FactualReport:
    n_samples: int
    micro: PRF
    macro: PRF
    n_hyp: int
    n_tgt: int
    n_match: int
    errors_per_sample: dict[str, float]
    error_totals: dict[str, int]

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate_report(per_sample: Sequence[tuple[FactualScore, ErrorProfile]]) -> FactualReport:
    """Micro (pooled counts), macro (mean of per-sample scores) and mean error counts."""
    if not per_sample:
        raise ValueError("cannot aggregate an empty list of samples")
    n = len(per_sample)
    n_hyp = sum(s.n_hyp for s, _ in per_sample)
    n_tgt = sum(s.n_tgt for s, _ in per_sample)
    n_match = sum(s.n_match for s, _ in per_sample)
    micro = FactualScore.from_counts(n_match, n_hyp, n_tgt)
    # fsum is exactly rounded, so macro means do not depend on sample order
    macro = PRF(
        fsum(s.precision for s, _ in per_sample) / n,
        fsum(s.recall for s, _ in per_sample) / n,
        fsum(s.f1 for s, _ in per_sample) / n,
    )
    totals = {k: sum(getattr(e, k) for _, e in per_sample) for k in ERROR_TYPES}
    return FactualReport(
        n_samples=n,
        micro=PRF(micro.precision, micro.recall, micro.f1),
        macro=macro,
        n_hyp=n_hyp,
        n_tgt=n_tgt,
        n_match=n_match,
        errors_per_sample={k: v / n for k, v in totals.items()},
        error_totals=totals,
    )
