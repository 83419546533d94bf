"""Ontology-driven (domain, intent, slot, value) extraction from summary text.

Pipeline:

1. cue-anchored captures for open-valued slots (``name acorn guest house``,
   ``leave at 17:30``); their tokens can't act as domain or intent cues
2. domain scopes from longest-match domain cue phrases, per sentence; text
   before the first cue falls into the first detected domain
3. intent sub-scopes from intent cue phrases; a cue earlier in the same
   sentence carries over, a continuation sentence inherits, and single-intent
   domains need no cue
4. longest-match values against each slot's value list and aliases; a value
   that fits several slots in scope needs an adjacent slot cue (``4-star``,
   ``for 2 people``, ``stars 4``) or is reported as unattached

:func:`render_reference_summary` is a separate, template-only renderer used to
close the loop in tests.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import groupby

from .ontology import DIGIT_TO_WORD, OPEN, Ontology, clean_surface
from .state import DialogueState, StateTuple

_WORD = re.compile(r"[^\W_]+(?:[:'’][^\W_]+)*")
_TIGHT_GAP = re.compile(r"[\s\-:'\"’&/]*")
_SENT_END = re.compile(r"[.!?]")

NEGATIONS = frozenset({"no", "not", "without", "never"})
# never the first word of an open-valued capture; "the"/"a" are allowed there
_CAPTURE_STOP = frozenset({
    "and", "or", "but", "in", "for", "with", "on", "at", "by", "from", "to", "of",
    "which", "that", "who", "is", "was", "are", "also", "then", "as",
})
MAX_CAPTURE_TOKENS = 8
# copulas between a cue and its value: "the name should be golden wok"
_COPULAS = (("should", "be"), ("will", "be"), ("would", "be"), ("must", "be"), ("is",), ("was",), ("are",), ("be",))
# linking words allowed inside a multi-word name
_BRIDGE = frozenset({"and", "of"})


def _phrase(text: str) -> tuple[str, ...]:
    return tuple(m.group(0).lower() for m in _WORD.finditer(text))


@dataclass(frozen=True)
class _Tok:
    text: str
    start: int
    end: int


@dataclass
class _Compiled:
    domain_cues: dict[tuple, str]
    intent_cues: dict[str, dict[tuple, str]]
    all_intent_phrases: frozenset
    slot_cues: dict[str, dict[tuple, frozenset[str]]]
    open_cues: dict[tuple, frozenset[tuple[str, str]]]
    any_slot_cue: frozenset
    values: dict[str, dict[tuple, dict[str, str]]]
    cue_required: dict[str, frozenset[tuple]]
    patterns: dict[tuple[str, str], re.Pattern]
    maxlen: int


@lru_cache(maxsize=16)
def _compile(ontology: Ontology) -> _Compiled:
    domain_cues: dict[tuple, set[str]] = {}
    intent_cues: dict[str, dict[tuple, str]] = {}
    slot_cues: dict[str, dict[tuple, frozenset[str]]] = {}
    open_cues: dict[tuple, set[tuple[str, str]]] = {}
    values: dict[str, dict[tuple, dict[str, str]]] = {}
    cue_required: dict[str, set[tuple]] = {}
    patterns: dict[tuple[str, str], re.Pattern] = {}
    every_cue: set[tuple] = {(w,) for w in NEGATIONS}
    all_intent_phrases: set[tuple] = set()

    for domain in sorted(ontology.domains):
        cfg = ontology.extraction.get(domain)
        syns = cfg.synonyms if cfg else (domain,)
        for s in syns:
            domain_cues.setdefault(_phrase(s), set()).add(domain)
        every_cue.update(_phrase(s) for s in syns)

        table: dict[tuple, set[str]] = {}
        for intent, cues in (cfg.intent_cues if cfg else {}).items():
            for c in cues:
                table.setdefault(_phrase(c), set()).add(intent)
        # a phrase naming two intents of the same domain is no cue at all
        intent_cues[domain] = {p: next(iter(v)) for p, v in table.items() if len(v) == 1}
        all_intent_phrases.update(table)
        every_cue.update(table)

        st: dict[tuple, set[str]] = {}
        for slot, cues in (cfg.slot_cues if cfg else {}).items():
            for c in cues:
                st.setdefault(_phrase(c), set()).add(slot)
                if ontology.is_open(domain, slot):
                    open_cues.setdefault(_phrase(c), set()).add((domain, slot))
        for slot in ontology.domain_slots(domain):
            if slot not in (cfg.slot_cues if cfg else {}):
                st.setdefault(_phrase(slot.replace("_", " ")), set()).add(slot)
                if ontology.is_open(domain, slot):
                    open_cues.setdefault(_phrase(slot.replace("_", " ")), set()).add((domain, slot))
        slot_cues[domain] = {p: frozenset(v) for p, v in st.items()}
        every_cue.update(st)

        for slot, pat in (cfg.value_patterns if cfg else {}).items():
            patterns[(domain, slot)] = re.compile(pat, re.IGNORECASE)

    for domain in sorted(ontology.domains):
        vt: dict[tuple, dict[str, str]] = {}
        req: set[tuple] = set()
        for slot in sorted(ontology.domain_slots(domain)):
            vals = ontology.values[(domain, slot)]
            if vals == OPEN:
                continue
            for v in vals:
                vt.setdefault(_phrase(v), {})[slot] = v
                if v in DIGIT_TO_WORD:
                    word = (DIGIT_TO_WORD[v],)
                    vt.setdefault(word, {})[slot] = v
                    req.add(word)
        for (d, slot, surface), target in ontology.aliases.items():
            if d == domain and ontology.values[(d, slot)] != OPEN:
                vt.setdefault(_phrase(surface), {}).setdefault(slot, target)
        vt.pop((), None)
        req.update(p for p in vt if p in every_cue)
        values[domain] = vt
        cue_required[domain] = frozenset(req)

    maxlen = max(
        [len(p) for p in domain_cues]
        + [len(p) for t in intent_cues.values() for p in t]
        + [len(p) for t in slot_cues.values() for p in t]
        + [len(p) for t in values.values() for p in t]
        + [1]
    )
    return _Compiled(
        domain_cues={p: next(iter(v)) for p, v in domain_cues.items() if len(v) == 1},
        intent_cues=intent_cues,
        all_intent_phrases=frozenset(all_intent_phrases),
        slot_cues=slot_cues,
        open_cues={p: frozenset(v) for p, v in open_cues.items()},
        any_slot_cue=frozenset(p for t in slot_cues.values() for p in t),
        values=values,
        cue_required={d: frozenset(v) for d, v in cue_required.items()},
        patterns=patterns,
        maxlen=maxlen,
    )


@dataclass
class ExtractionResult:
    tuples: DialogueState = field(default_factory=DialogueState)
    spans: dict[StateTuple, tuple[int, int]] = field(default_factory=dict)
    # (surface, candidate "domain.slot" names) for values no cue could place
    unattached_values: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    # (domain, slot, value, candidate intents): found, but the intent was undecidable
    ambiguous: list[tuple[str, str, str, tuple[str, ...]]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tuples": self.tuples.to_json(),
            "spans": [
                {**t._asdict(), "start": s, "end": e}
                for t, (s, e) in sorted(self.spans.items())
            ],
            "unattached": [{"surface": s, "candidates": list(c)} for s, c in self.unattached_values],
            "ambiguous": [
                {"domain": d, "slot": s, "value": v, "intents": list(i)} for d, s, v, i in self.ambiguous
            ],
        }


class _Text:
    """Word tokens of a summary plus gap classification between neighbours."""

    def __init__(self, text: str):
        self.text = text
        self.toks = [_Tok(m.group(0).lower(), m.start(), m.end()) for m in _WORD.finditer(text)]
        n = len(self.toks)
        self.tight = [False] * n
        self.sent_break = [True] * n
        for i in range(1, n):
            gap = text[self.toks[i - 1].end:self.toks[i].start]
            self.tight[i] = _TIGHT_GAP.fullmatch(gap) is not None
            self.sent_break[i] = _SENT_END.search(gap) is not None

    def __len__(self):
        return len(self.toks)

    def phrase_at(self, i: int, length: int) -> tuple | None:
        """Tokens i..i+length as a phrase, or None if a loose gap splits them."""
        j = i + length
        if i < 0 or j > len(self.toks):
            return None
        for k in range(i + 1, j):
            if not self.tight[k]:
                return None
        return tuple(t.text for t in self.toks[i:j])

    def span(self, i: int, j: int) -> tuple[int, int]:
        return self.toks[i].start, self.toks[j - 1].end

    def raw(self, i: int, j: int) -> str:
        s, e = self.span(i, j)
        return self.text[s:e]

    def scan(self, table, lo: int, hi: int, maxlen: int, blocked=frozenset()):
        """Left-to-right, non-overlapping, longest-first phrase hits in [lo, hi)."""
        hits = []
        i = lo
        while i < hi:
            for length in range(min(maxlen, hi - i), 0, -1):
                if any(k in blocked for k in range(i, i + length)):
                    continue
                p = self.phrase_at(i, length)
                if p is not None and p in table:
                    hits.append((i, i + length, p, table[p]))
                    i += length
                    break
            else:
                i += 1
        return hits


@dataclass
class _Capture:
    cue_start: int
    start: int
    end: int
    domain: str
    slot: str


def _is_cue_at(tx: _Text, comp: _Compiled, k: int) -> bool:
    for L in range(1, comp.maxlen + 1):
        p = tx.phrase_at(k, L)
        if p is not None and (p in comp.any_slot_cue or p in comp.domain_cues or p in comp.all_intent_phrases):
            return True
    return False


def _scan_capture(tx: _Text, comp: _Compiled, cj: int, end: int) -> tuple[int, bool]:
    """Extend a capture from ``end``; also report whether it stopped at a hard boundary."""
    n = len(tx)
    while end < n and end - cj < MAX_CAPTURE_TOKENS:
        if end > cj and not tx.tight[end]:
            return end, True
        word = tx.toks[end].text
        if word in _CAPTURE_STOP:
            return end, False
        if end > cj and any(
            tx.phrase_at(end, L) in comp.any_slot_cue for L in range(1, comp.maxlen + 1)
        ):
            return end, False
        end += 1
    return end, end >= n


def _open_captures(tx: _Text, comp: _Compiled) -> list[_Capture]:
    out = []
    n = len(tx)
    for ci, cj, _, targets in tx.scan(comp.open_cues, 0, n, comp.maxlen):
        if cj >= n or not tx.tight[cj] or tx.sent_break[cj]:
            continue
        for cop in _COPULAS:
            if tx.phrase_at(cj, len(cop)) == cop and cj + len(cop) < n and tx.tight[cj + len(cop)]:
                cj += len(cop)
                break
        end, _ = _scan_capture(tx, comp, cj, cj)
        # "frankie and bennys": bridge a linking word only when the rest of the
        # name runs cue-free up to punctuation or the end of the text
        while end > cj and end + 1 < n and tx.toks[end].text in _BRIDGE and tx.tight[end] and tx.tight[end + 1]:
            if any(_is_cue_at(tx, comp, k) for k in range(end + 1, min(n, cj + MAX_CAPTURE_TOKENS))
                   if all(tx.tight[m] for m in range(end + 1, k + 1))):
                break
            ext, hard = _scan_capture(tx, comp, cj, end + 1)
            if not hard or ext == end + 1:
                break
            end = ext
        if end == cj:
            continue
        for domain, slot in sorted(targets):
            pat = comp.patterns.get((domain, slot))
            if pat is None:
                out.append(_Capture(ci, cj, end, domain, slot))
                continue
            for stop in range(end, cj, -1):
                if pat.fullmatch(tx.raw(cj, stop)):
                    out.append(_Capture(ci, cj, stop, domain, slot))
                    break
    return out


def _adjacent_cue_slots(tx: _Text, comp: _Compiled, domain: str, i: int, j: int):
    """Slots named by a cue right before token i / right after token j."""
    cues = comp.slot_cues[domain]
    before: frozenset[str] = frozenset()
    after: frozenset[str] = frozenset()
    if i > 0 and tx.tight[i] and not tx.sent_break[i]:
        for length in range(min(comp.maxlen, i), 0, -1):
            p = tx.phrase_at(i - length, length)
            if p in cues:
                before = cues[p]
                break
    if j < len(tx) and tx.tight[j] and not tx.sent_break[j]:
        for length in range(min(comp.maxlen, len(tx) - j), 0, -1):
            p = tx.phrase_at(j, length)
            if p in cues:
                after = cues[p]
                break
    return before, after


def _negated(tx: _Text, i: int) -> bool:
    if i == 0 or not tx.tight[i]:
        return False
    prev = tx.toks[i - 1].text
    return prev in NEGATIONS or prev.endswith("n't")


def _chunks(tx: _Text, comp: _Compiled, protected: set[int]):
    """Yield (domain, lo, hi, sentence_index) scopes in text order."""
    n = len(tx)
    hits = tx.scan(comp.domain_cues, 0, n, comp.maxlen, protected)
    sentences = []
    lo = 0
    for i in range(1, n + 1):
        if i == n or tx.sent_break[i]:
            sentences.append((lo, i))
            lo = i
    out: list[list] = []
    pending: list[tuple[int, int, int]] = []
    current = None
    for sid, (lo, hi) in enumerate(sentences):
        inside = [(i, d) for i, _, _, d in hits if lo <= i < hi]
        if not inside:
            if current is None:
                pending.append((lo, hi, sid))
            else:
                out.append([current, lo, hi, sid])
            continue
        merged = [inside[0]]
        for i, d in inside[1:]:
            if d != merged[-1][1]:
                merged.append((i, d))
        starts = [lo] + [i for i, _ in merged[1:]]
        ends = [i for i, _ in merged[1:]] + [hi]
        for (_, d), s, e in zip(merged, starts, ends):
            out.append([d, s, e, sid])
        current = merged[-1][1]
    if current is not None and pending:
        first = out[0][0]
        out = [[first, lo, hi, sid] for lo, hi, sid in pending] + out
    return out


def extract_tuples(summary: str, ontology: Ontology) -> ExtractionResult:
    comp = _compile(ontology)
    tx = _Text(summary)
    result = ExtractionResult()
    if not len(tx):
        return result

    captures = _open_captures(tx, comp)
    protected = {k for c in captures for k in range(c.start, c.end)}
    chunks = _chunks(tx, comp, protected)

    found: list[tuple[StateTuple, tuple[int, int]]] = []
    prev_chunk: tuple[str, str | None, int] | None = None  # (domain, last intent, sentence)
    carry: tuple | None = None
    carry_sid = -1
    for domain, lo, hi, sid in chunks:
        if sid != carry_sid:
            carry, carry_sid = None, sid
        # intent sub-scopes
        blocked = protected | {k for i, j, _, _ in tx.scan(comp.domain_cues, lo, hi, comp.maxlen) for k in range(i, j)}
        ihits = tx.scan(comp.intent_cues[domain], lo, hi, comp.maxlen, blocked)
        if ihits:
            subs = []
            starts = [lo] + [i for i, _, _, _ in ihits[1:]]
            ends = [i for i, _, _, _ in ihits[1:]] + [hi]
            for (_, _, _, intent), s, e in zip(ihits, starts, ends):
                subs.append((intent, s, e))
        else:
            intent = None
            if carry is not None and carry in comp.intent_cues[domain]:
                intent = comp.intent_cues[domain][carry]
            elif prev_chunk is not None and prev_chunk[0] == domain and prev_chunk[1] is not None:
                intent = prev_chunk[1]
            elif len(ontology.intents[domain]) == 1:
                intent = next(iter(ontology.intents[domain]))
            subs = [(intent, lo, hi)]
        # any intent phrase (of any domain) in this chunk carries to later chunks of the sentence
        for i, j, p, _ in tx.scan({p: p for p in comp.all_intent_phrases}, lo, hi, comp.maxlen, blocked):
            carry = p
        for intent, s, e in subs:
            _extract_scope(tx, comp, ontology, domain, intent, s, e, captures, found, result)
        prev_chunk = (domain, subs[-1][0], sid)

    tuples = {}
    for t, span in found:
        tuples.setdefault(t, span)
    result.tuples = DialogueState(frozenset(tuples))
    result.spans = tuples
    return result


def _extract_scope(tx, comp, ontology, domain, intent, lo, hi, captures, found, result):
    if intent is not None:
        in_scope = ontology.slots[(domain, intent)]
    else:
        in_scope = ontology.domain_slots(domain)

    cands = []  # (length, start, kind, end, payload)
    for c in captures:
        if c.domain == domain and c.slot in in_scope and lo <= c.cue_start < hi and c.end <= hi:
            cands.append((c.end - c.start, c.start, 0, c.end, c.slot))
    table = comp.values[domain]
    for i in range(lo, hi):
        for length in range(1, min(comp.maxlen, hi - i) + 1):
            p = tx.phrase_at(i, length)
            if p is None:
                break
            slots = table.get(p)
            if not slots:
                continue
            slots = {s: v for s, v in slots.items() if s in in_scope}
            if slots:
                cands.append((length, i, 1, i + length, (p, slots)))

    cands.sort(key=lambda c: (-c[0], c[1], c[2]))
    taken: set[int] = set()
    accepted = []
    for length, i, kind, j, payload in cands:
        if any(k in taken for k in range(i, j)):
            continue
        taken.update(range(i, j))
        accepted.append((i, j, kind, payload))
    accepted.sort()

    intents = tuple(sorted(ontology.intents[domain])) if intent is None else ()
    for i, j, kind, payload in accepted:
        span = tx.span(i, j)
        if kind == 0:
            slot, value = payload, clean_surface(tx.raw(i, j))
        else:
            phrase, slots = payload
            if _negated(tx, i):
                continue
            before, after = _adjacent_cue_slots(tx, comp, domain, i, j)
            pick = None
            decided = False
            # a unit cue after the value ("4 stars") outranks one before it ("for 4")
            for cue in (after, before):
                hit = cue & slots.keys()
                if hit:
                    pick = next(iter(hit)) if len(hit) == 1 else None
                    decided = True
                    break
            if not decided:
                if phrase in comp.cue_required[domain]:
                    # the word is doing duty as a cue, not asserting a value
                    continue
                if len(slots) == 1:
                    pick = next(iter(slots))
            if pick is None:
                result.unattached_values.append(
                    (tx.raw(i, j), tuple(f"{domain}.{s}" for s in sorted(slots)))
                )
                continue
            slot, value = pick, slots[pick]
        if intent is None:
            result.ambiguous.append((domain, slot, value, intents))
        else:
            found.append((StateTuple(domain, intent, slot, value), span))


def render_reference_summary(state: DialogueState, ontology: Ontology) -> str:
    """One templated sentence per (domain, intent), slots as ``<cue> <value>``."""
    sentences = []
    for (domain, intent), group in groupby(sorted(state.tuples), key=lambda t: (t.domain, t.intent)):
        cfg = ontology.extraction.get(domain)
        template = cfg.templates.get(intent) if cfg else None
        if template is None:
            raise KeyError(f"no summary template for intent {domain}.{intent}")
        parts = []
        for t in sorted(group, key=lambda t: (t.slot, t.value)):
            cues = cfg.slot_cues.get(t.slot)
            parts.append(f"{cues[0] if cues else t.slot.replace('_', ' ')} {t.value}")
        sentences.append(template.format(slots=", ".join(parts)))
    return " ".join(sentences)
