"""Dialogue-state tuples and their flat string encodings.

The flat form groups tuples by domain, then intent::

    hotel book_hotel(price=cheap ;stars=4) find_hotel(area=centre) restaurant ...

Joint-model targets append the summary after an ``<|endoftext|>`` sentinel.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Iterator, NamedTuple, Sequence

from .ontology import Ontology, OntologyError, clean_surface, normalize_value

SENTINEL = "<|endoftext|>"
_RESERVED = re.compile(r"[();=]")
_BAD_NAME = re.compile(r"[\s();=]")


class StateTuple(NamedTuple):
    domain: str
    intent: str
    slot: str
    value: str

    def key(self) -> tuple[str, str, str]:
        return (self.domain, self.intent, self.slot)


@dataclass(frozen=True)
class DialogueState:
    """An order-free set of :class:`StateTuple`. Iterates in sorted order."""

    tuples: frozenset[StateTuple] = frozenset()

    def __post_init__(self):
        items = frozenset(StateTuple(*t) for t in self.tuples)
        for t in items:
            if not all(t):
                raise ValueError(f"state tuple has an empty field: {t}")
        object.__setattr__(self, "tuples", items)

    @classmethod
    def of(cls, *tuples: Iterable[str]) -> "DialogueState":
        return cls(frozenset(StateTuple(*t) for t in tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[StateTuple]:
        return iter(sorted(self.tuples))

    def __contains__(self, item) -> bool:
        return item in self.tuples

    def __bool__(self) -> bool:
        return bool(self.tuples)

    @property
    def domains(self) -> frozenset[str]:
        return frozenset(t.domain for t in self.tuples)

    @property
    def intents(self) -> frozenset[tuple[str, str]]:
        return frozenset((t.domain, t.intent) for t in self.tuples)

    def to_json(self) -> list[dict[str, str]]:
        return [t._asdict() for t in self]

    @classmethod
    def from_json(cls, items: Iterable[dict]) -> "DialogueState":
        return cls(frozenset(StateTuple(d["domain"], d["intent"], d["slot"], d["value"]) for d in items))


class StateParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


def serialize_state(state: DialogueState) -> str:
    parts: list[str] = []
    for domain, by_domain in groupby(sorted(state.tuples), key=lambda t: t.domain):
        if _BAD_NAME.search(domain):
            raise ValueError(f"domain name not serializable: {domain!r}")
        parts.append(domain)
        for intent, by_intent in groupby(by_domain, key=lambda t: t.intent):
            if _BAD_NAME.search(intent):
                raise ValueError(f"intent name not serializable: {intent!r}")
            pairs = []
            for t in by_intent:
                if _RESERVED.search(t.slot) or _RESERVED.search(t.value):
                    raise ValueError(f"cannot serialize tuple with reserved characters: {t}")
                pairs.append(f"{t.slot}={t.value}")
            parts.append(f"{intent}({' ;'.join(pairs)})")
    return " ".join(parts)


def _canonical(ontology: Ontology | None, domain: str, slot: str, raw: str) -> str:
    value = clean_surface(raw)
    if ontology is None:
        return value
    try:
        return normalize_value(ontology, domain, slot, value) or value
    except OntologyError:
        # unknown names are reported by validation, not by the parser
        return value


def parse_state(text: str, ontology: Ontology | None = None) -> DialogueState:
    """Inverse of :func:`serialize_state`.

    Accepts the domain name once per domain or repeated before every intent.
    Values are normalized through ``ontology`` when one is given.
    """
    n = len(text)
    i = 0
    domain: str | None = None
    out: set[StateTuple] = set()

    def skip_ws(j: int) -> int:
        while j < n and text[j].isspace():
            j += 1
        return j

    while True:
        i = skip_ws(i)
        if i >= n:
            break
        start = i
        while i < n and not text[i].isspace() and text[i] not in "();=":
            i += 1
        name = text[start:i]
        if not name:
            raise StateParseError(f"unexpected {text[i]!r}", i)
        j = skip_ws(i)
        if j >= n or text[j] != "(":
            domain = name
            i = j
            continue
        if domain is None:
            raise StateParseError(f"intent {name!r} has no preceding domain", start)
        intent = name
        i = j + 1
        while True:
            i = skip_ws(i)
            if i >= n:
                raise StateParseError("unbalanced '('", n)
            if text[i] == ")":
                i += 1
                break
            if text[i] == ";":
                i += 1
                continue
            eq = i
            while eq < n and text[eq] not in "=;()":
                eq += 1
            if eq >= n:
                raise StateParseError("unbalanced '('", n)
            if text[eq] != "=":
                raise StateParseError("missing '=' in slot assignment", eq)
            slot = text[i:eq].strip()
            if not slot:
                raise StateParseError("empty slot name", i)
            end = eq + 1
            while end < n and text[end] not in ";)(":
                end += 1
            if end >= n:
                raise StateParseError("unbalanced '('", n)
            if text[end] == "(":
                raise StateParseError("unexpected '(' inside value", end)
            raw = text[eq + 1:end]
            if not raw.strip():
                raise StateParseError(f"empty value for slot {slot!r}", eq + 1)
            out.add(StateTuple(domain, intent, slot, _canonical(ontology, domain, slot, raw)))
            i = end
    return DialogueState(frozenset(out))


def encode_joint_target(state: DialogueState, summary: str) -> str:
    if not summary or not summary.strip():
        raise ValueError("summary must be non-empty")
    if SENTINEL in summary:
        raise ValueError(f"summary contains the sentinel {SENTINEL!r}")
    return f"{serialize_state(state)} {SENTINEL} {summary}"


class JointOutput(NamedTuple):
    state: DialogueState
    summary: str
    missing_sentinel: bool = False
    malformed_state: bool = False
    error: str | None = None


def decode_joint_output(text: str, ontology: Ontology | None = None) -> JointOutput:
    """Split a joint-model output into (state, summary); never raises on bad input."""
    head, sep, tail = text.partition(SENTINEL)
    if not sep:
        return JointOutput(DialogueState(), text.strip(), missing_sentinel=True)
    try:
        state = parse_state(head, ontology)
    except StateParseError as exc:
        return JointOutput(DialogueState(), tail.strip(), malformed_state=True, error=str(exc))
    return JointOutput(state, tail.strip())


def state_match_accuracy(pred: Sequence[DialogueState], gold: Sequence[DialogueState]) -> float:
    """Fraction of aligned positions whose predicted set equals the gold set (joint set match)."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(gold)} gold states")
    if not gold:
        raise ValueError("no states to compare")
    hits = sum(p.tuples == g.tuples for p, g in zip(pred, gold))
    return hits / len(gold)
