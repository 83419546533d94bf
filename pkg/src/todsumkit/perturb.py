"""Noisy dialogue states at a target tuple-level accuracy, and domain-adaptation splits.

Randomness comes from numpy's PCG64 bit generator seeded with a single integer.
Per-dialogue streams mix that seed with a BLAKE2b hash of the dialogue id, so
output never depends on processing order.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Collection, Sequence

import numpy as np

from .corpus import Dialogue
from .ontology import OPEN, Ontology
from .state import DialogueState, StateTuple

OPERATIONS = ("delete", "replace", "insert")
PRNG = "numpy.random.PCG64"


@dataclass(frozen=True)
class NoiseSpec:
    target_accuracy: float
    operation_mix: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.target_accuracy <= 1.0:
            raise ValueError(f"target_accuracy must lie in [0, 1], got {self.target_accuracy}")
        mix = tuple(float(w) for w in self.operation_mix)
        if len(mix) != 3 or any(w < 0 or math.isnan(w) for w in mix) or not any(mix):
            raise ValueError(f"operation_mix needs three non-negative weights, not all zero: {self.operation_mix}")
        object.__setattr__(self, "operation_mix", mix)


def tuple_accuracy(noisy: DialogueState, gold: DialogueState) -> float:
    """|noisy ∩ gold| / max(|noisy|, |gold|); 1.0 when both are empty."""
    return float(_accuracy(noisy.tuples, gold.tuples))


def _accuracy(noisy: frozenset | set, gold: frozenset | set) -> Fraction:
    den = max(len(noisy), len(gold))
    return Fraction(len(noisy & gold), den) if den else Fraction(1)


def derive_seed(seed: int, key: str) -> np.random.SeedSequence:
    h = int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, h])


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class NoiseResult:
    state: DialogueState
    accuracy: float
    edits: tuple[str, ...]


def inject_noise_detailed(state: DialogueState, spec: NoiseSpec, ontology: Ontology,
                          rng: np.random.Generator | None = None) -> NoiseResult:
    """Apply seeded delete/replace/insert edits until accuracy reaches the target.

    Edits land on tuples still shared with the gold state, so every delete or
    replace costs exactly one match. Editing stops at the first point where
    accuracy is less than half a tuple (1/2n) above the target; one edit moves
    accuracy by at most 1/n, so the result is always within 1/2n. Fallbacks: insert -> replace -> delete.
    """
    gold = state.tuples
    n = len(gold)
    if rng is None:
        rng = make_rng(spec.seed)
    if n == 0 or spec.target_accuracy >= 1.0:
        return NoiseResult(state, 1.0, ())

    target = Fraction(repr(spec.target_accuracy))
    half_step = Fraction(1, 2 * n)
    weights = np.asarray(spec.operation_mix) / sum(spec.operation_mix)
    noisy: set[StateTuple] = set(gold)
    edits: list[str] = []
    pool = ontology.closed_tuples

    # each edit lowers accuracy by at most 1/n; inserts are bounded by the pool,
    # so an unreachable target (e.g. 0.0 with inserts only) still terminates
    for _ in range(len(pool) + 4 * n + 8):
        # strict, so an exact half-step tie is resolved by one more edit
        if _accuracy(noisy, gold) - target < half_step:
            break
        op = OPERATIONS[int(rng.choice(3, p=weights))]
        if op == "insert":
            fresh = [t for t in pool if StateTuple(*t) not in noisy]
            if fresh:
                noisy.add(StateTuple(*fresh[int(rng.integers(len(fresh)))]))
                edits.append("insert")
                continue
            op = "replace"
        survivors = sorted(noisy & gold)
        if op == "replace":
            options = []
            for t in survivors:
                vals = ontology.values.get((t.domain, t.slot))
                if vals is None or vals == OPEN:
                    continue
                alts = [v for v in vals if v != t.value and StateTuple(t.domain, t.intent, t.slot, v) not in noisy]
                if alts:
                    options.append((t, alts))
            if options:
                t, alts = options[int(rng.integers(len(options)))]
                noisy.discard(t)
                noisy.add(StateTuple(t.domain, t.intent, t.slot, alts[int(rng.integers(len(alts)))]))
                edits.append("replace")
                continue
            op = "delete"
        if survivors:
            noisy.discard(survivors[int(rng.integers(len(survivors)))])
            edits.append("delete")
    out = DialogueState(frozenset(noisy))
    return NoiseResult(out, float(_accuracy(noisy, gold)), tuple(edits))


def inject_noise(state: DialogueState, spec: NoiseSpec, ontology: Ontology) -> DialogueState:
    return inject_noise_detailed(state, spec, ontology).state


@dataclass(frozen=True)
class DomainSplit:
    target_domain: str
    train: tuple[str, ...]
    test: tuple[str, ...]
    fewshot: tuple[str, ...]
    seed: int

    def to_dict(self) -> dict:
        return {
            "target_domain": self.target_domain,
            "seed": self.seed,
            "train": list(self.train),
            "test": list(self.test),
            "fewshot": list(self.fewshot),
        }


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def make_da_splits(corpus: Sequence[Dialogue], target_domain: str, fewshot_fraction: float = 0.10,
                   seed: int = 0, test_ids: Collection[str] | None = None) -> DomainSplit:
    """Leave-one-domain-out split over single-domain dialogues.

    With ``test_ids`` (the original test partition), target-domain test
    dialogues form the test set and the few-shot sample comes from the
    target-domain training pool. Without it, the few-shot sample is drawn from
    all target-domain dialogues and the rest become the test set.
    Multi-domain dialogues are dropped.
    """
    if fewshot_fraction < 0:
        raise ValueError("fewshot_fraction must be non-negative")
    single = [d for d in corpus if len(d.domains) == 1]
    target = [d.id for d in single if target_domain in d.domains]
    if not target:
        raise ValueError(f"no single-domain dialogues for target domain {target_domain!r}")

    if test_ids is not None:
        test_set = set(test_ids)
        test = [i for i in target if i in test_set]
        pool = [i for i in target if i not in test_set]
        others = [d.id for d in single if target_domain not in d.domains and d.id not in test_set]
    else:
        pool = list(target)
        test = None
        others = [d.id for d in single if target_domain not in d.domains]

    want = _round_half_up(fewshot_fraction * len(pool))
    if want > len(pool):
        warnings.warn(f"few-shot pool has {len(pool)} dialogues, {want} requested; taking all", stacklevel=2)
        want = len(pool)
    rng = make_rng(derive_seed(seed, f"da-split:{target_domain}"))
    picked = sorted(rng.choice(len(pool), size=want, replace=False).tolist()) if want else []
    fewshot = [pool[k] for k in picked]
    if test is None:
        chosen = set(fewshot)
        test = [i for i in pool if i not in chosen]
    return DomainSplit(
        target_domain=target_domain,
        train=tuple(others + fewshot),
        test=tuple(test),
        fewshot=tuple(fewshot),
        seed=seed,
    )
