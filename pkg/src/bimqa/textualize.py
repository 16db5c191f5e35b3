"""Render blocks into the semi-structured prose format, and parse it back.

A block text has a header line, then one section per component kind present
(walls, beams, slabs): a kind header line followed by one line per component.
Sections are separated by a blank line. Absent optional attributes are left
out of the sentence rather than marked unknown.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

from .model import KIND_ORDER, Beam, Block, DomainError, Kind, Point3, Slab, Wall, format_hours


class TemplateError(DomainError):
    pass


class GrammarError(DomainError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class TextTemplateSet:
    header_template: str
    kind_names: dict
    kind_header_templates: dict
    data_templates: dict
    locale: str = "en"

    @classmethod
    def from_dict(cls, d: dict) -> "TextTemplateSet":
        return cls(
            header_template=d["header_template"],
            kind_names={Kind(k): v for k, v in d["kind_names"].items()},
            kind_header_templates={Kind(k): v for k, v in d["kind_header_templates"].items()},
            data_templates={Kind(k): dict(v) for k, v in d["data_templates"].items()},
            locale=d.get("locale", "en"),
        )

    @classmethod
    def from_file(cls, path) -> "TextTemplateSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_templates() -> TextTemplateSet:
    raw = resources.files("bimqa").joinpath("data/templates.json").read_text(encoding="utf-8")
    return TextTemplateSet.from_dict(json.loads(raw))


_COUNT_WORDS = {1: "one", 2: "two", 3: "three"}


def numeric_ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def join_and(items: list[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + ", and " + items[-1]


def _fill(template: str, values: dict) -> str:
    names = {f for _, f, _, _ in string.Formatter().parse(template) if f is not None}
    missing = names - set(values)
    if missing:
        raise TemplateError(f"unbound placeholder(s) {sorted(missing)} in template {template[:40]!r}...")
    return template.format(**{k: values[k] for k in names})


def outline_text(outline) -> str:
    return join_and([str(p) for p in outline])


def _component_values(c, ordinal: int) -> dict:
    v = {"ordinal": numeric_ordinal(ordinal), "id": c.id}
    if isinstance(c, Slab):
        v.update(outline=outline_text(c.outline), thickness_mm=c.thickness_mm)
    else:
        v.update(start=str(c.start), end=str(c.end))
        if isinstance(c, Wall):
            v.update(thickness_mm=c.thickness_mm, height_mm=c.height_mm, length_mm=c.length_mm)
        else:
            v.update(section_width_mm=c.section_width_mm, section_depth_mm=c.section_depth_mm)
    return v


def component_sentence(c, ordinal: int, t: TextTemplateSet | None = None) -> str:
    t = t or default_templates()
    tmpl = t.data_templates[c.kind]
    values = _component_values(c, ordinal)
    values["number_clause"] = (
        "" if c.construction_number is None
        else _fill(tmpl["number_clause"], {"construction_number": c.construction_number})
    )
    values["fire_clause"] = (
        "" if c.fire_resistance_hours is None
        else _fill(tmpl["fire_clause"], {"fire_resistance": c.fire_display})
    )
    return _fill(tmpl["sentence"], values)


def textualize_components(components, t: TextTemplateSet | None = None) -> str:
    t = t or default_templates()
    components = list(components)
    if not components:
        raise DomainError("cannot textualize an empty block")
    present = [k for k in KIND_ORDER if any(c.kind == k for c in components)]
    header = _fill(
        t.header_template,
        {
            "count": _COUNT_WORDS[len(present)],
            "type_noun": "type" if len(present) == 1 else "types",
            "kinds": join_and([t.kind_names[k] for k in present]),
        },
    )
    sections = [header]
    for kind in present:
        lines = [_fill(t.kind_header_templates[kind], {})]
        for i, c in enumerate((c for c in components if c.kind == kind), start=1):
            lines.append(component_sentence(c, i, t))
        sections.append("\n".join(lines))
    return "\n\n".join(sections) + "\n"


def textualize(b: Block, t: TextTemplateSet | None = None) -> str:
    return textualize_components(b.components, t)


def with_clean_text(b: Block, t: TextTemplateSet | None = None) -> Block:
    return replace(b, clean_text=textualize(b, t))


# -- parsing -----------------------------------------------------------------

_INT = r"(-?\d+)"
_POINT = rf"\({_INT}, {_INT}, {_INT}\)"
_ORD = r"(\d+)(st|nd|rd|th)"


def _seq(kind_word: str, middle: list[tuple[str, str]]):
    return (
        [("sentence start", rf"The ID of the {_ORD} {kind_word} is (\d+)\. ")]
        + middle
        + [
            ("construction number clause", r"(?:, and its construction number is (.+?))?\."),
            ("fire resistance sentence", r"(?: Its fire resistance is (\d+(?:\.\d+)?) (hours?)\.)?"),
        ]
    )


_ENDPOINTS = (
    "endpoint coordinates",
    rf"Its starting point coordinate is {_POINT}, and the ending point coordinate is {_POINT}\. ",
)
_GRAMMAR = {
    Kind.WALL: _seq(
        "wall",
        [
            _ENDPOINTS,
            ("thickness clause", r"The wall thickness is (\d+) mm, "),
            ("height clause", r"the wall height is (\d+) mm, "),
            ("length clause", r"the wall length is (\d+) mm"),
        ],
    ),
    Kind.BEAM: _seq(
        "beam",
        [
            _ENDPOINTS,
            ("section width clause", r"The section width is (\d+) mm, "),
            ("section depth clause", r"the section depth is (\d+) mm"),
        ],
    ),
    Kind.SLAB: _seq(
        "slab",
        [
            ("outline", r"Its corner point coordinates along the upper surface are (.+?) in order\. "),
            ("thickness clause", r"The slab thickness is (\d+) mm"),
        ],
    ),
}
_GRAMMAR_RE = {k: [(name, re.compile(p)) for name, p in seq] for k, seq in _GRAMMAR.items()}


def _match_sentence(kind: Kind, line: str, lineno: int) -> list:
    pos, groups = 0, []
    for name, rx in _GRAMMAR_RE[kind]:
        m = rx.match(line, pos)
        if m is None:
            raise GrammarError(f"expected {name}", lineno, pos + 1)
        groups.extend(m.groups())
        pos = m.end()
    if pos != len(line):
        raise GrammarError("unexpected trailing text", lineno, pos + 1)
    return groups


def _fire(hours_txt, unit):
    if hours_txt is None:
        return {}
    hours = float(hours_txt)
    if hours.is_integer():
        hours = int(hours)
    text = f"{hours_txt} {unit}"
    return {"fire_resistance_hours": hours, "fire_resistance_text": None if text == format_hours(hours) else text}


_OUTLINE_POINT = re.compile(_POINT)


def _parse_outline(txt: str, lineno: int, col: int) -> tuple:
    pts = [Point3(int(a), int(b), int(c)) for a, b, c in _OUTLINE_POINT.findall(txt)]
    if len(pts) < 3 or outline_text(pts) != txt:
        raise GrammarError("malformed corner point list", lineno, col)
    return tuple(pts)


def _build(kind: Kind, g: list, lineno: int, expected_ordinal: int, line: str):
    n, suffix, cid = int(g[0]), g[1], int(g[2])
    if n < 1 or numeric_ordinal(n) != f"{n}{suffix}":
        raise GrammarError(f"invalid ordinal {n}{suffix}", lineno, len("The ID of the ") + 1)
    if n != expected_ordinal:
        raise GrammarError(f"ordinal {n}{suffix} out of sequence (expected {numeric_ordinal(expected_ordinal)})",
                           lineno, len("The ID of the ") + 1)
    rest = g[3:]
    try:
        if kind is Kind.SLAB:
            outline_txt, thick, number, fh, fu = rest
            outline = _parse_outline(outline_txt, lineno, line.find(outline_txt) + 1)
            return Slab(cid, outline, int(thick), construction_number=number, **_fire(fh, fu))
        pts = [int(v) for v in rest[:6]]
        start, end = Point3(*pts[:3]), Point3(*pts[3:])
        if kind is Kind.WALL:
            thick, height, length, number, fh, fu = rest[6:]
            return Wall(cid, start, end, int(thick), int(height), int(length),
                        construction_number=number, **_fire(fh, fu))
        width, depth, number, fh, fu = rest[6:]
        return Beam(cid, start, end, int(width), int(depth), construction_number=number, **_fire(fh, fu))
    except GrammarError:
        raise
    except DomainError as exc:
        raise GrammarError(str(exc), lineno, 1) from exc


def parse_block_text(text: str, block_id: str = "", source_model: str = "", block_size_mm: int = 1,
                     t: TextTemplateSet | None = None) -> Block:
    """Inverse of :func:`textualize` for the default template set."""
    if t is not None and t != default_templates():
        raise TemplateError("only the default template set can be parsed")
    t = default_templates()
    if not text.endswith("\n"):
        raise GrammarError("text must end with a newline", text.count("\n") + 1, len(text.rsplit("\n", 1)[-1]) + 1)
    lines = text[:-1].split("\n")
    header_to_kind = {_fill(t.kind_header_templates[k], {}): k for k in KIND_ORDER}
    comps, kinds_seen = [], []
    i = 2
    if len(lines) < 3 or lines[1] != "":
        raise GrammarError("expected header line followed by a blank line", 1, 1)
    while i < len(lines):
        lineno = i + 1
        kind = header_to_kind.get(lines[i])
        if kind is None:
            raise GrammarError("expected a component kind header", lineno, 1)
        if kinds_seen and KIND_ORDER.index(kind) <= KIND_ORDER.index(kinds_seen[-1]):
            raise GrammarError(f"section {kind.value} out of order", lineno, 1)
        kinds_seen.append(kind)
        i += 1
        ordinal = 1
        while i < len(lines) and lines[i] != "":
            groups = _match_sentence(kind, lines[i], i + 1)
            comps.append(_build(kind, groups, i + 1, ordinal, lines[i]))
            ordinal += 1
            i += 1
        if ordinal == 1:
            raise GrammarError(f"section {kind.value} has no components", lineno, 1)
        i += 1  # blank separator
    try:
        block = Block(block_id, source_model, block_size_mm, comps)
    except DomainError as exc:
        raise GrammarError(str(exc), 1, 1) from exc
    expected_header = textualize_components(comps, t).split("\n", 1)[0]
    if lines[0] != expected_header:
        raise GrammarError("header does not match the component kinds present", 1, 1)
    return block
