"""Fact files and the indexed knowledge store.

Knowledge is a set of ``has(subject, slot, value)`` triples.  The on-disk
format is one statement per ``has(id, id, id).`` with ``%`` line comments;
identifiers start with a lowercase letter and contain only lowercase
letters, digits and underscores.

The store has set semantics over the raw triples: re-adding an existing
triple never grows it, and the provenance of the first insertion wins.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*")

Triple = tuple[str, str, str]


class FactSyntaxError(ValueError):
    """Malformed fact-file input, with 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def is_identifier(text: str) -> bool:
    return bool(IDENT_RE.fullmatch(text))


@dataclass(frozen=True)
class Provenance:
    kind: str  # "asserted" or "derived"
    file: str | None = None
    line: int | None = None
    rule: str | None = None

    @staticmethod
    def asserted(file: str, line: int) -> "Provenance":
        return Provenance("asserted", file=file, line=line)

    @staticmethod
    def derived(rule: str) -> "Provenance":
        return Provenance("derived", rule=rule)

    def to_json(self) -> dict:
        if self.kind == "asserted":
            return {"kind": "asserted", "file": self.file, "line": self.line}
        return {"kind": "derived", "rule": self.rule}


@dataclass(frozen=True)
class Fact:
    """One triple.  Equality and hashing ignore provenance."""

    subject: str
    slot: str
    value: str
    provenance: Provenance = field(compare=False, default=Provenance.derived("unknown"))

    def __post_init__(self):
        for part in (self.subject, self.slot, self.value):
            if not is_identifier(part):
                raise ValueError(f"invalid identifier: {part!r}")

    @property
    def triple(self) -> Triple:
        return (self.subject, self.slot, self.value)

    def __repr__(self) -> str:
        return f"Fact({self.subject}, {self.slot}, {self.value})"


class KnowledgeStore:
    """Indexed set of facts with pattern queries over every position."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self._facts: dict[Triple, Fact] = {}
        self._by_subject: dict[str, set[Triple]] = {}
        self._by_slot: dict[str, set[Triple]] = {}
        self._by_value: dict[str, set[Triple]] = {}
        self._by_subject_slot: dict[tuple[str, str], set[Triple]] = {}
        for fact in facts:
            self.add(fact)

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts())

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnowledgeStore):
            return NotImplemented
        return self.triples() == other.triples()

    def triples(self) -> frozenset[Triple]:
        return frozenset(self._facts)

    def facts(self) -> list[Fact]:
        """All facts in canonical (subject, slot, value) order."""
        return [self._facts[t] for t in sorted(self._facts)]

    def add(self, fact: Fact) -> bool:
        """Insert a fact; returns False if the triple was already present."""
        triple = fact.triple
        if triple in self._facts:
            return False
        self._facts[triple] = fact
        self._by_subject.setdefault(fact.subject, set()).add(triple)
        self._by_slot.setdefault(fact.slot, set()).add(triple)
        self._by_value.setdefault(fact.value, set()).add(triple)
        self._by_subject_slot.setdefault((fact.subject, fact.slot), set()).add(triple)
        return True

    def add_derived(self, subject: str, slot: str, value: str, rule: str) -> bool:
        """Record a rule-derived fact; no-op when already present."""
        return self.add(Fact(subject, slot, value, Provenance.derived(rule)))

    def query(
        self,
        subject: str | None = None,
        slot: str | None = None,
        value: str | None = None,
    ) -> list[Fact]:
        """Facts matching the bound positions, lexicographically ordered."""
        if subject is not None and slot is not None:
            candidates = self._by_subject_slot.get((subject, slot), set())
        elif subject is not None:
            candidates = self._by_subject.get(subject, set())
        elif slot is not None:
            candidates = self._by_slot.get(slot, set())
        elif value is not None:
            candidates = self._by_value.get(value, set())
        else:
            candidates = set(self._facts)
        out = []
        for triple in candidates:
            s, p, v = triple
            if subject is not None and s != subject:
                continue
            if slot is not None and p != slot:
                continue
            if value is not None and v != value:
                continue
            out.append(triple)
        return [self._facts[t] for t in sorted(out)]

    def values(self, subject: str, slot: str) -> list[str]:
        return [f.value for f in self.query(subject=subject, slot=slot)]

    def subjects(self, slot: str, value: str) -> list[str]:
        return [f.subject for f in self.query(slot=slot, value=value)]

    def identifiers(self) -> set[str]:
        """Every identifier appearing as a subject or value."""
        ids = set(self._by_subject)
        ids.update(self._by_value)
        return ids

    def copy(self) -> "KnowledgeStore":
        return KnowledgeStore(self._facts.values())

    def asserted_only(self) -> "KnowledgeStore":
        return KnowledgeStore(
            f for f in self._facts.values() if f.provenance.kind == "asserted"
        )

    def derived_facts(self) -> list[Fact]:
        return [f for f in self.facts() if f.provenance.kind == "derived"]

    # Serialization ------------------------------------------------------

    def to_fact_text(self, facts: Iterable[Fact] | None = None) -> str:
        """Line-oriented fact file; derived facts carry a rule comment."""
        lines = []
        for fact in self.facts() if facts is None else sorted(facts, key=lambda f: f.triple):
            line = f"has({fact.subject}, {fact.slot}, {fact.value})."
            if fact.provenance.kind == "derived" and fact.provenance.rule:
                line += f" % derived by {fact.provenance.rule}"
            lines.append(line)
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self, facts: Iterable[Fact] | None = None) -> str:
        rows = [
            {
                "subject": f.subject,
                "slot": f.slot,
                "value": f.value,
                "provenance": f.provenance.to_json(),
            }
            for f in (self.facts() if facts is None else sorted(facts, key=lambda f: f.triple))
        ]
        return json.dumps(rows, indent=2, sort_keys=True) + "\n"


class _Scanner:
    """Character scanner tracking 1-based line/column positions."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos]

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def skip_layout(self):
        """Skip whitespace and % comments."""
        while not self.eof():
            ch = self.peek()
            if ch.isspace():
                self.advance()
            elif ch == "%":
                while not self.eof() and self.peek() != "\n":
                    self.advance()
            else:
                return

    def fail(self, message: str):
        raise FactSyntaxError(message, self.line, self.col)

    def expect(self, literal: str):
        for ch in literal:
            if self.eof() or self.peek() != ch:
                found = "end of input" if self.eof() else repr(self.peek())
                self.fail(f"expected {literal!r}, found {found}")
            self.advance()

    def identifier(self) -> str:
        if self.eof():
            self.fail("expected identifier, found end of input")
        match = IDENT_RE.match(self.text, self.pos)
        if not match or match.start() != self.pos:
            self.fail(f"expected identifier, found {self.peek()!r}")
        name = match.group(0)
        for _ in name:
            self.advance()
        return name


def parse_fact_file(text: str, filename: str = "<string>") -> KnowledgeStore:
    """Parse fact statements into a store.

    Raises :class:`FactSyntaxError` on the first malformed statement.
    Duplicate triples are collapsed silently (first wins).
    """
    store = KnowledgeStore()
    scanner = _Scanner(text)
    while True:
        scanner.skip_layout()
        if scanner.eof():
            return store
        line = scanner.line
        scanner.expect("has")
        scanner.skip_layout()
        scanner.expect("(")
        parts = []
        for i in range(3):
            scanner.skip_layout()
            parts.append(scanner.identifier())
            scanner.skip_layout()
            if i < 2:
                scanner.expect(",")
        scanner.expect(")")
        scanner.skip_layout()
        scanner.expect(".")
        subject, slot, value = parts
        store.add(Fact(subject, slot, value, Provenance.asserted(filename, line)))


def parse_fact_path(path: str | Path) -> KnowledgeStore:
    path = Path(path)
    return parse_fact_file(path.read_text(), filename=str(path))


def merge_stores(*stores: KnowledgeStore) -> KnowledgeStore:
    merged = KnowledgeStore()
    for store in stores:
        for fact in store.facts():
            merged.add(fact)
    return merged
