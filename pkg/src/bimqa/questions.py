"""The 22 question templates: loading, instantiation and example rendering.

Template texts live in ``data/questions.json`` exactly as published, with
``[...]`` marking each placeholder. Every placeholder has a resolver that
produces its text from the block, the defect manifest and the injection seed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from . import oracle
from .answer import Answer
from .exchange import parse_block
from .geometry import axis_direction
from .model import (
    DOMAIN_IDS,
    QUESTION_IDS,
    Block,
    Capability,
    DefectKind,
    DefectRecord,
    DomainError,
    Kind,
    QaItem,
    format_hours,
)
from .oracle import KIND_WORDS, NotAxisAligned, Unresolvable, ordinal_word
from .rng import SplitMix64
from .rules import DEFAULT_RULES, RuleSet

__all__ = [
    "QuestionTemplate",
    "ExampleBlock",
    "Resolution",
    "Unresolvable",
    "load_templates",
    "template",
    "resolve",
    "instantiate",
    "render_example",
    "reference_answer",
    "example_block",
    "build_items",
    "leaked_values",
]

_BRACKET = re.compile(r"\[[^\[\]]*\]")


@dataclass(frozen=True)
class QuestionTemplate:
    question_id: str
    capability: Capability
    level_or_case: str
    template_text: str
    placeholder_spec: tuple
    requires: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "capability", Capability(self.capability))
        n = len(_BRACKET.findall(self.template_text))
        if n != len(self.placeholder_spec):
            raise DomainError(f"{self.question_id}: {n} placeholders in text, {len(self.placeholder_spec)} resolvers")

    @property
    def uses_defect_text(self) -> bool:
        return self.question_id in DOMAIN_IDS


@lru_cache(maxsize=1)
def _data() -> dict:
    raw = resources.files("bimqa").joinpath("data/questions.json").read_text(encoding="utf-8")
    return json.loads(raw)


@lru_cache(maxsize=1)
def load_templates() -> tuple:
    out = tuple(
        QuestionTemplate(
            t["question_id"], t["capability"], t["level_or_case"], t["table_text"],
            tuple(t["placeholders"]), dict(t["requires"]),
        )
        for t in _data()["templates"]
    )
    if tuple(t.question_id for t in out) != QUESTION_IDS:
        raise DomainError("question data file does not hold the 22 templates in order")
    return out


def template(question_id: str) -> QuestionTemplate:
    for t in load_templates():
        if t.question_id == question_id:
            return t
    raise DomainError(f"unknown question id {question_id!r}")


def naming_rule_text(rules: RuleSet = DEFAULT_RULES) -> str:
    p = {k.value: v for k, v in rules.naming_prefix.items()}
    return _data()["rule_texts"]["naming"].format(example=p["Wall"] + "20", **p)


def fire_rule_text(rules: RuleSet = DEFAULT_RULES) -> str:
    return _data()["rule_texts"]["fire"].format(hours=format_hours(rules.min_fire_hours))


def example_wrapper(example: str) -> str:
    return _data()["example_wrapper"].format(example=example)


# -- resolution ----------------------------------------------------------------


@dataclass(frozen=True)
class Resolution:
    question_text: str
    target: int | None = None  # component named by a detail question


def _check_requires(tmpl: QuestionTemplate, b: Block) -> None:
    for key, need in tmpl.requires.items():
        if key == "axis_aligned":
            for w in b.walls:
                if axis_direction(w) is None:
                    raise NotAxisAligned(f"{tmpl.question_id}: wall {w.id} is not axis-aligned")
            continue
        have = len(b.of_kind(Kind(key)))
        if have < need:
            raise Unresolvable(f"{tmpl.question_id}: block has {have} {key.lower()}(s), needs {need}")


def _block_order(b: Block, ids) -> list[int]:
    wanted = set(ids)
    return [c.id for c in b.components if c.id in wanted]


def _reference(b: Block, cid: int, by_id: bool, prefer_last: bool) -> str:
    c = b.by_id(cid)
    word = KIND_WORDS[c.kind]
    if by_id:
        return f"the {word} with ID {cid}"
    same = b.of_kind(c.kind)
    n = b.ordinal_of(cid)
    if prefer_last and n == len(same) and n > 1:
        return f"the last {word}"
    return f"the {ordinal_word(n)} {word}"


def resolve(tmpl: QuestionTemplate, b: Block, manifest=(), seed: int = 0,
            rules: RuleSet = DEFAULT_RULES) -> Resolution:
    """Fill every placeholder of ``tmpl`` against ``b``; raises :class:`Unresolvable`."""
    _check_requires(tmpl, b)
    rng = SplitMix64(seed).split("question", tmpl.question_id)
    values, target = [], None
    for spec in tmpl.placeholder_spec:
        kind = spec["resolver"]
        if kind == "literal":
            values.append(spec["value"])
        elif kind in ("wall_ref", "ordinal"):
            n = spec["n"]
            if len(b.walls) < n:
                raise Unresolvable(f"{tmpl.question_id}: block has no {ordinal_word(n)} wall")
            values.append(f"the {ordinal_word(n)} wall" if kind == "wall_ref" else ordinal_word(n))
        elif kind == "naming_rule":
            values.append(naming_rule_text(rules))
        elif kind == "fire_rule":
            values.append(fire_rule_text(rules))
        elif kind in ("defect_ref", "defect_ids"):
            kinds = {DefectKind(k) for k in spec["kinds"]}
            ids = _block_order(b, (d.target_id for d in manifest if d.kind in kinds))
            if not ids:
                raise Unresolvable(f"{tmpl.question_id}: manifest has no {'/'.join(sorted(spec['kinds']))} defect")
            if kind == "defect_ids":
                values.append(", ".join(map(str, ids)))
            else:
                target = rng.choice(ids)
                by_id = rng.below(2) == 1
                values.append(_reference(b, target, by_id, tmpl.question_id == "DI-2"))
        else:
            raise DomainError(f"{tmpl.question_id}: unknown resolver {kind!r}")
    it = iter(values)
    text = _BRACKET.sub(lambda _: next(it), tmpl.template_text)
    return Resolution(text, target)


# -- the shipped example block -------------------------------------------------


@dataclass(frozen=True)
class ExampleBlock:
    block: Block
    manifest: tuple
    seed: int


@lru_cache(maxsize=1)
def example_block() -> ExampleBlock:
    raw = resources.files("bimqa").joinpath("data/example_block.json").read_text(encoding="utf-8")
    doc = json.loads(raw)
    manifest = tuple(DefectRecord.from_dict(d) for d in doc["manifest"]["defects"])
    return ExampleBlock(parse_block(doc["block"]), manifest, int(doc["manifest"]["seed"]))


def reference_answer(tmpl: QuestionTemplate, reference: ExampleBlock | None = None,
                     rules: RuleSet = DEFAULT_RULES) -> Answer:
    ref = reference or example_block()
    res = resolve(tmpl, ref.block, ref.manifest, ref.seed, rules)
    return oracle.answer(tmpl.question_id, ref.block, ref.manifest, rules, res.target)


def render_example(tmpl: QuestionTemplate, reference: ExampleBlock | None = None,
                   rules: RuleSet = DEFAULT_RULES) -> str:
    """The reference block's answer with the designated spans hidden."""
    if reference is None and rules == DEFAULT_RULES:
        return _default_example(tmpl.question_id)
    return reference_answer(tmpl, reference, rules).example()


@lru_cache(maxsize=None)
def _default_example(question_id: str) -> str:
    return reference_answer(template(question_id)).example()


def leaked_values(answer: Answer, example: str | None = None) -> list[str]:
    """Hidden values that still appear, as whole tokens, in the example text."""
    example = answer.example() if example is None else example
    out = []
    for value in answer.hidden_values():
        rx = re.compile(r"(?<![\w.])" + re.escape(value) + r"(?![\w])")
        if rx.search(example):
            out.append(value)
    return out


# -- QaItems -------------------------------------------------------------------


def instantiate(tmpl: QuestionTemplate, b: Block, manifest=(), seed: int = 0,
                rules: RuleSet = DEFAULT_RULES) -> QaItem:
    """A question instance with its example text; the ground truth is left empty."""
    res = resolve(tmpl, b, manifest, seed, rules)
    return QaItem(
        question_id=tmpl.question_id,
        capability=tmpl.capability,
        level_or_case=tmpl.level_or_case,
        question_text=res.question_text,
        example_text=render_example(tmpl, rules=rules),
        ground_truth="",
        uses_defect_text=tmpl.uses_defect_text,
        block_id=b.block_id,
    )


def build_items(b: Block, manifest=(), seed: int = 0, rules: RuleSet = DEFAULT_RULES,
                answers: bool = True, skip_unresolvable: bool = False) -> list[QaItem]:
    """All applicable templates on ``b``, optionally with ground-truth answers."""
    out = []
    for tmpl in load_templates():
        try:
            res = resolve(tmpl, b, manifest, seed, rules)
            truth = oracle.answer(tmpl.question_id, b, manifest, rules, res.target).text if answers else ""
        except Unresolvable:
            if skip_unresolvable:
                continue
            raise
        out.append(QaItem(
            question_id=tmpl.question_id,
            capability=tmpl.capability,
            level_or_case=tmpl.level_or_case,
            question_text=res.question_text,
            example_text=render_example(tmpl, rules=rules),
            ground_truth=truth,
            uses_defect_text=tmpl.uses_defect_text,
            block_id=b.block_id,
        ))
    return out
