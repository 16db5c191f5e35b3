"""Answer texts as span sequences, so example prompts can hide parts by role.

Roles: ``text`` is always shown; ``aggregate`` (counts, largest-of values,
final inferred quantities) and ``reason`` are replaced by ``...`` in examples;
``choice`` spans show the canonical option list, e.g. ``correct (incorrect)``.
An :class:`ItemList` shows its first two items and replaces the rest by one
``...``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

HIDDEN = "..."
VISIBLE_ITEMS = 2


@dataclass(frozen=True)
class Span:
    text: str
    role: str = "text"
    options: tuple = ()


@dataclass(frozen=True)
class ItemList:
    items: tuple  # each item is a tuple of Span
    sep: str = "\n"


Part = Union[Span, ItemList]


def agg(value) -> Span:
    return Span(str(value), "aggregate")


def reason(text: str) -> Span:
    return Span(text, "reason")


def choice(actual: str, options) -> Span:
    options = tuple(options)
    if actual not in options:
        raise ValueError(f"{actual!r} is not one of {options}")
    return Span(actual, "choice", options)


def items(rows, sep: str = "\n") -> ItemList:
    out = []
    for row in rows:
        if isinstance(row, (Span, str)):
            row = (row,)
        out.append(tuple(Span(p) if isinstance(p, str) else p for p in row))
    return ItemList(tuple(out), sep)


@dataclass(frozen=True)
class Answer:
    parts: tuple = field(default_factory=tuple)

    @classmethod
    def of(cls, *parts) -> "Answer":
        return cls(tuple(Span(p) if isinstance(p, str) else p for p in parts))

    @property
    def text(self) -> str:
        return "".join(_render(p, example=False) for p in self.parts)

    def example(self) -> str:
        out = "".join(_render(p, example=True) for p in self.parts)
        # a hidden span at the end of a sentence would otherwise print four dots
        return out.replace(HIDDEN + ".", HIDDEN)

    def hidden_values(self) -> list[str]:
        """Texts that an example rendering must not reveal."""
        out: list[str] = []
        for p in self.parts:
            if isinstance(p, ItemList):
                for i, it in enumerate(p.items):
                    if i >= VISIBLE_ITEMS:
                        out.append("".join(s.text for s in it))
                    else:
                        out.extend(s.text for s in it if s.role in ("aggregate", "reason"))
            elif p.role in ("aggregate", "reason"):
                out.append(p.text)
        return out

    def __str__(self) -> str:
        return self.text


def _span(s: Span, example: bool) -> str:
    if not example or s.role == "text":
        return s.text
    if s.role == "choice":
        first, *rest = s.options
        return f"{first} ({' / '.join(rest)})" if rest else first
    return HIDDEN


def _render(p: Part, example: bool) -> str:
    if isinstance(p, Span):
        return _span(p, example)
    rows = [("".join(_span(s, example) for s in it)) for it in p.items]
    if example and len(rows) > VISIBLE_ITEMS:
        rows = rows[:VISIBLE_ITEMS] + [HIDDEN]
    return p.sep.join(rows)
