"""Task ontology: domains, intents, slots, value vocabularies and aliases.

The on-disk format is a single JSON document::

    {"domains": {<domain>: {
        "intents": {<intent>: {"slots": [<slot>, ...]}},
        "slots": [<slot>, ...],                      # optional domain-level fallback
        "values": {<slot>: [<value>, ...] | "open"},
        "aliases": {<slot>: {<surface>: <value>}},
        "extraction": {...}                          # cue phrases, see extract.py
    }}}

An intent without its own ``slots`` list inherits the domain-level list.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

OPEN = "open"

_WS = re.compile(r"\s+")
_STAR_SUFFIX = re.compile(r"^(\w+)(?:\s*-\s*|\s+)stars?$")

DIGIT_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
    "eighteen", "nineteen", "twenty",
)
WORD_TO_DIGIT = {w: str(i) for i, w in enumerate(DIGIT_WORDS)}
DIGIT_TO_WORD = {str(i): w for i, w in enumerate(DIGIT_WORDS)}


class OntologyError(ValueError):
    """Malformed ontology file, dangling reference, or unknown (domain, slot) lookup."""


def clean_surface(text: str) -> str:
    """Lowercase, trim and collapse internal whitespace."""
    return _WS.sub(" ", text.strip().lower())


def digit_fold(text: str) -> str:
    """Map a spelled-out number (zero..twenty) to its digits; other text passes through."""
    return WORD_TO_DIGIT.get(text, text)


@dataclass(frozen=True)
class ExtractionConfig:
    """Per-domain cue vocabulary used by the tuple extractor and the renderer."""

    synonyms: tuple[str, ...] = ()
    intent_cues: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    slot_cues: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    value_patterns: Mapping[str, str] = field(default_factory=dict)
    templates: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Ontology:
    domains: frozenset[str]
    intents: Mapping[str, frozenset[str]]
    slots: Mapping[tuple[str, str], frozenset[str]]
    values: Mapping[tuple[str, str], tuple[str, ...] | str]
    aliases: Mapping[tuple[str, str, str], str]
    extraction: Mapping[str, ExtractionConfig] = field(default_factory=dict)
    source: str | None = None

    def is_open(self, domain: str, slot: str) -> bool:
        return self.values.get((domain, slot)) == OPEN

    def domain_slots(self, domain: str) -> frozenset[str]:
        """Union of slot names over every intent of ``domain``."""
        out: set[str] = set()
        for intent in self.intents.get(domain, ()):
            out |= self.slots[(domain, intent)]
        return frozenset(out)

    def lookup_alias(self, domain: str, slot: str, surface: str) -> str | None:
        return self.aliases.get((domain, slot, clean_surface(surface)))

    @cached_property
    def closed_tuples(self) -> tuple[tuple[str, str, str, str], ...]:
        """Every legal (domain, intent, slot, value) with a closed value list, sorted."""
        out = []
        for (domain, intent), slot_names in self.slots.items():
            for slot in slot_names:
                vals = self.values[(domain, slot)]
                if vals == OPEN:
                    continue
                out.extend((domain, intent, slot, v) for v in vals)
        return tuple(sorted(out))


def _as_str_tuple(obj, where: str) -> tuple[str, ...]:
    if not isinstance(obj, list) or not all(isinstance(x, str) for x in obj):
        raise OntologyError(f"{where}: expected a list of strings")
    return tuple(obj)


def parse_ontology(doc: Mapping, source: str | None = None) -> Ontology:
    """Build and validate an :class:`Ontology` from an already-decoded JSON document."""
    if not isinstance(doc, Mapping) or not isinstance(doc.get("domains"), Mapping):
        raise OntologyError("ontology document must have a 'domains' object")

    domains: set[str] = set()
    intents: dict[str, frozenset[str]] = {}
    slots: dict[tuple[str, str], frozenset[str]] = {}
    values: dict[tuple[str, str], tuple[str, ...] | str] = {}
    aliases: dict[tuple[str, str, str], str] = {}
    extraction: dict[str, ExtractionConfig] = {}

    for domain, body in doc["domains"].items():
        if not domain or not isinstance(body, Mapping):
            raise OntologyError(f"domain {domain!r}: malformed entry")
        domains.add(domain)
        fallback = _as_str_tuple(body["slots"], f"{domain}.slots") if "slots" in body else None
        raw_intents = body.get("intents") or {}
        if not raw_intents:
            raise OntologyError(f"domain {domain!r}: declares no intents")
        intents[domain] = frozenset(raw_intents)
        for intent, ibody in raw_intents.items():
            if ibody and "slots" in ibody:
                slot_list = _as_str_tuple(ibody["slots"], f"{domain}.{intent}.slots")
            elif fallback is not None:
                slot_list = fallback
            else:
                raise OntologyError(f"intent {domain}.{intent}: no slots and no domain-level fallback")
            slots[(domain, intent)] = frozenset(slot_list)

        used = set().union(*(slots[(domain, i)] for i in intents[domain]))
        raw_values = body.get("values") or {}
        for slot in sorted(used):
            if slot not in raw_values:
                raise OntologyError(f"slot {domain}.{slot}: no value list (use \"open\" for open-valued)")
        for slot, vals in raw_values.items():
            if slot not in used:
                raise OntologyError(f"values for {domain}.{slot}: slot not used by any intent")
            if vals == OPEN:
                values[(domain, slot)] = OPEN
                continue
            cleaned = tuple(dict.fromkeys(clean_surface(v) for v in _as_str_tuple(vals, f"{domain}.values.{slot}")))
            if not cleaned or "" in cleaned:
                raise OntologyError(f"values for {domain}.{slot}: empty value list or empty value")
            values[(domain, slot)] = cleaned

        for slot, table in (body.get("aliases") or {}).items():
            if (domain, slot) not in values:
                raise OntologyError(f"alias table {domain}.{slot}: unknown slot")
            vals = values[(domain, slot)]
            for surface, target in table.items():
                target_c = clean_surface(target)
                if vals != OPEN and target_c not in vals:
                    raise OntologyError(
                        f"alias {domain}.{slot}: {surface!r} -> {target!r} is not a listed value"
                    )
                aliases[(domain, slot, clean_surface(surface))] = target_c

        ext = body.get("extraction") or {}
        slot_cues = {s: _as_str_tuple(c, f"{domain}.extraction.slot_cues.{s}") for s, c in (ext.get("slot_cues") or {}).items()}
        intent_cues = {i: _as_str_tuple(c, f"{domain}.extraction.intent_cues.{i}") for i, c in (ext.get("intent_cues") or {}).items()}
        for s in slot_cues:
            if s not in used:
                raise OntologyError(f"slot cue for unknown slot {domain}.{s}")
        for i in intent_cues:
            if i not in intents[domain]:
                raise OntologyError(f"intent cue for unknown intent {domain}.{i}")
        templates = dict(ext.get("templates") or {})
        for i in templates:
            if i not in intents[domain]:
                raise OntologyError(f"template for unknown intent {domain}.{i}")
        patterns = dict(ext.get("value_patterns") or {})
        for s, pat in patterns.items():
            if values.get((domain, s)) != OPEN:
                raise OntologyError(f"value pattern for {domain}.{s}: only open-valued slots take patterns")
            try:
                re.compile(pat)
            except re.error as exc:
                raise OntologyError(f"value pattern for {domain}.{s}: {exc}") from None
        extraction[domain] = ExtractionConfig(
            synonyms=tuple(dict.fromkeys((domain, *_as_str_tuple(ext.get("synonyms", []), f"{domain}.extraction.synonyms")))),
            intent_cues=intent_cues,
            slot_cues=slot_cues,
            value_patterns=patterns,
            templates=templates,
        )

    return Ontology(
        domains=frozenset(domains),
        intents=intents,
        slots=slots,
        values=values,
        aliases=aliases,
        extraction=extraction,
        source=source,
    )


def load_ontology(path: str | Path) -> Ontology:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise OntologyError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_ontology(doc, source=str(path))


def bundled_ontology_path() -> Path:
    return Path(__file__).with_name("data") / "ontology.json"


def load_bundled_ontology() -> Ontology:
    """The shipped five-domain ontology (30 domain/slot pairs)."""
    return load_ontology(bundled_ontology_path())


def normalize_value(ontology: Ontology, domain: str, slot: str, surface: str) -> str | None:
    """Map a surface form to the slot's canonical value.

    Open-valued slots return the cleaned surface. Closed slots try, in order:
    the value list, the alias table, then digit-word and ``N-star`` folding.
    Returns ``None`` when nothing matches.
    """
    key = (domain, slot)
    if key not in ontology.values:
        raise OntologyError(f"unknown (domain, slot) pair: ({domain}, {slot})")
    text = clean_surface(surface)
    vals = ontology.values[key]
    if vals == OPEN:
        return text
    if text in vals:
        return text
    hit = ontology.aliases.get((domain, slot, text))
    if hit is not None:
        return hit

    candidates = [text]
    m = _STAR_SUFFIX.match(text)
    if m:
        candidates.append(m.group(1))
    for cand in list(candidates):
        if cand in WORD_TO_DIGIT:
            candidates.append(WORD_TO_DIGIT[cand])
        elif cand in DIGIT_TO_WORD:
            candidates.append(DIGIT_TO_WORD[cand])
    for cand in candidates[1:]:
        if cand in vals:
            return cand
        hit = ontology.aliases.get((domain, slot, cand))
        if hit is not None:
            return hit
    return None
