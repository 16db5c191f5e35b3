"""Domain types shared by every pipeline stage.

All types are frozen; "mutation" means building a new value with
:func:`dataclasses.replace`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union


class DomainError(ValueError):
    """Base class for validation failures in domain data."""


class DegenerateGeometry(DomainError):
    pass


class DuplicateId(DomainError):
    pass


class Kind(str, enum.Enum):
    WALL = "Wall"
    BEAM = "Beam"
    SLAB = "Slab"


# Canonical in-block ordering: walls, then beams, then slabs.
KIND_ORDER = (Kind.WALL, Kind.BEAM, Kind.SLAB)


@dataclass(frozen=True)
class Point3:
    x: int
    y: int
    z: int

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if isinstance(v, bool) or not isinstance(v, int):
                raise DomainError(f"coordinate must be an integer number of mm, got {v!r}")

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.z]

    def __str__(self) -> str:
        return f"({self.x}, {self.y}, {self.z})"


def format_hours(hours: float) -> str:
    """Display form used in texts: ``1 hour``, ``2 hours``, ``1.5 hours``."""
    num = f"{hours:g}"
    return f"{num} hour" if hours == 1 else f"{num} hours"


def _check_fire(hours, text):
    if hours is None:
        if text is not None:
            raise DomainError("fire_resistance_text given without fire_resistance_hours")
        return
    if isinstance(hours, bool) or not isinstance(hours, (int, float)) or not math.isfinite(hours):
        raise DomainError(f"fire resistance must be a finite number, got {hours!r}")
    if hours < 0:
        raise DomainError("fire resistance must be non-negative")


def _check_positive(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise DomainError(f"{name} must be a positive integer (mm), got {value!r}")


def _check_id(value):
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise DomainError(f"component id must be a positive integer, got {value!r}")


class _Attributes:
    """Optional design attributes shared by every component kind."""

    construction_number: Optional[str]
    fire_resistance_hours: Optional[float]
    fire_resistance_text: Optional[str]

    @property
    def fire_display(self) -> Optional[str]:
        if self.fire_resistance_hours is None:
            return None
        if self.fire_resistance_text is not None:
            return self.fire_resistance_text
        return format_hours(self.fire_resistance_hours)


@dataclass(frozen=True)
class Wall(_Attributes):
    id: int
    start: Point3
    end: Point3
    thickness_mm: int
    height_mm: int
    length_mm: int
    construction_number: Optional[str] = None
    fire_resistance_hours: Optional[float] = None
    fire_resistance_text: Optional[str] = None

    kind = Kind.WALL

    def __post_init__(self):
        _check_id(self.id)
        if self.start == self.end:
            raise DegenerateGeometry(f"wall {self.id}: start equals end")
        _check_positive("thickness_mm", self.thickness_mm)
        _check_positive("height_mm", self.height_mm)
        _check_positive("length_mm", self.length_mm)
        _check_fire(self.fire_resistance_hours, self.fire_resistance_text)


@dataclass(frozen=True)
class Beam(_Attributes):
    id: int
    start: Point3
    end: Point3
    section_width_mm: int
    section_depth_mm: int
    construction_number: Optional[str] = None
    fire_resistance_hours: Optional[float] = None
    fire_resistance_text: Optional[str] = None

    kind = Kind.BEAM

    def __post_init__(self):
        _check_id(self.id)
        if self.start == self.end:
            raise DegenerateGeometry(f"beam {self.id}: start equals end")
        _check_positive("section_width_mm", self.section_width_mm)
        _check_positive("section_depth_mm", self.section_depth_mm)
        _check_fire(self.fire_resistance_hours, self.fire_resistance_text)


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return (v > 0) - (v < 0)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p1, p2, q1))
        or (o2 == 0 and on_seg(p1, p2, q2))
        or (o3 == 0 and on_seg(q1, q2, p1))
        or (o4 == 0 and on_seg(q1, q2, p2))
    )


def is_simple_polygon(pts: list[tuple[int, int]]) -> bool:
    n = len(pts)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a1, a2, pts[j], pts[(j + 1) % n]):
                return False
    # zero area means a collapsed outline
    area2 = sum(pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1] for i in range(n))
    return area2 != 0


@dataclass(frozen=True)
class Slab(_Attributes):
    id: int
    outline: tuple[Point3, ...]
    thickness_mm: int
    construction_number: Optional[str] = None
    fire_resistance_hours: Optional[float] = None
    fire_resistance_text: Optional[str] = None

    kind = Kind.SLAB

    def __post_init__(self):
        _check_id(self.id)
        object.__setattr__(self, "outline", tuple(self.outline))
        pts = self.outline
        if len(pts) < 3:
            raise DegenerateGeometry(f"slab {self.id}: outline needs at least 3 vertices")
        for i, p in enumerate(pts):
            if p == pts[(i + 1) % len(pts)]:
                raise DegenerateGeometry(f"slab {self.id}: consecutive duplicate vertex")
        if len({p.z for p in pts}) != 1:
            raise DegenerateGeometry(f"slab {self.id}: outline is not planar in z")
        if not is_simple_polygon([(p.x, p.y) for p in pts]):
            raise DegenerateGeometry(f"slab {self.id}: outline is not a simple polygon")
        _check_positive("thickness_mm", self.thickness_mm)
        _check_fire(self.fire_resistance_hours, self.fire_resistance_text)


Component = Union[Wall, Beam, Slab]


def component_kind(c: Component) -> Kind:
    return c.kind


def reference_point(c: Component) -> tuple[float, float]:
    """XY point used for grid assignment: segment midpoint or outline centroid."""
    if isinstance(c, Slab):
        pts = [(p.x, p.y) for p in c.outline]
        n = len(pts)
        a = cx = cy = 0.0
        for i in range(n):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % n]
            cross = x0 * y1 - x1 * y0
            a += cross
            cx += (x0 + x1) * cross
            cy += (y0 + y1) * cross
        a *= 0.5
        return cx / (6 * a), cy / (6 * a)
    return (c.start.x + c.end.x) / 2, (c.start.y + c.end.y) / 2


def canonical_order(components) -> list:
    rank = {k: i for i, k in enumerate(KIND_ORDER)}
    return sorted(components, key=lambda c: (rank[c.kind], c.id))


def check_unique_ids(components) -> None:
    seen = set()
    for c in components:
        if c.id in seen:
            raise DuplicateId(f"duplicate component id {c.id}")
        seen.add(c.id)


@dataclass(frozen=True)
class BimModel:
    name: str
    components: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        check_unique_ids(self.components)

    def of_kind(self, kind: Kind) -> list:
        return [c for c in self.components if c.kind == kind]


@dataclass(frozen=True)
class Block:
    block_id: str
    source_model: str
    block_size_mm: int
    components: tuple
    clean_text: str = ""
    defect_text: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        check_unique_ids(self.components)
        if self.block_size_mm <= 0:
            raise DomainError("block_size_mm must be positive")

    def of_kind(self, kind: Kind) -> list:
        return [c for c in self.components if c.kind == kind]

    @property
    def walls(self) -> list:
        return self.of_kind(Kind.WALL)

    @property
    def beams(self) -> list:
        return self.of_kind(Kind.BEAM)

    @property
    def slabs(self) -> list:
        return self.of_kind(Kind.SLAB)

    def by_id(self, cid: int):
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def ordinal_of(self, cid: int) -> int:
        """1-based position of a component among components of its kind."""
        c = self.by_id(cid)
        return [x.id for x in self.of_kind(c.kind)].index(cid) + 1


class DefectKind(str, enum.Enum):
    INTEGRITY_ERASE_NUMBER = "IntegrityEraseNumber"
    INTEGRITY_ERASE_FIRE = "IntegrityEraseFire"
    RATIONALITY_THICKNESS = "RationalityThickness"
    RATIONALITY_Z_ONE_END = "RationalityZOneEnd"
    RATIONALITY_Z_BOTH_ENDS = "RationalityZBothEnds"
    COMPLIANCE_NUMBER = "ComplianceNumber"
    COMPLIANCE_FIRE = "ComplianceFire"


@dataclass(frozen=True)
class DefectRecord:
    kind: DefectKind
    target_id: int
    field: str
    original: str
    corrupted: str

    def __post_init__(self):
        object.__setattr__(self, "kind", DefectKind(self.kind))
        if self.original == self.corrupted:
            raise DomainError("defect must change the value")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "target_id": self.target_id,
            "field": self.field,
            "original": self.original,
            "corrupted": self.corrupted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DefectRecord":
        return cls(DefectKind(d["kind"]), int(d["target_id"]), d["field"], d["original"], d["corrupted"])


class Capability(str, enum.Enum):
    EXTRACTION = "Extraction"
    STATISTICS = "Statistics"
    CALCULATION = "Calculation"
    REASONING = "Reasoning"
    REVIEW_INTEGRITY = "ReviewIntegrity"
    REVIEW_RATIONALITY = "ReviewRationality"
    REVIEW_COMPLIANCE = "ReviewCompliance"
    DETAIL_INTEGRITY = "DetailIntegrity"
    DETAIL_RATIONALITY = "DetailRationality"
    DETAIL_COMPLIANCE = "DetailCompliance"


GENERAL_IDS = ("E1", "E2", "S1", "S2", "C1", "C2", "C3", "R1", "R2", "R3")
DOMAIN_IDS = (
    "RI-1", "RI-2", "RR-1", "RR-2", "RC-1", "RC-2",
    "DI-1", "DI-2", "DR-1", "DR-2", "DC-1", "DC-2",
)
QUESTION_IDS = GENERAL_IDS + DOMAIN_IDS


@dataclass(frozen=True)
class QaItem:
    question_id: str
    capability: Capability
    level_or_case: str
    question_text: str
    example_text: str
    ground_truth: str
    uses_defect_text: bool
    block_id: str = ""

    def __post_init__(self):
        if self.question_id not in QUESTION_IDS:
            raise DomainError(f"unknown question id {self.question_id!r}")
        object.__setattr__(self, "capability", Capability(self.capability))
        if self.uses_defect_text != (self.question_id in DOMAIN_IDS):
            raise DomainError(f"{self.question_id}: uses_defect_text inconsistent with template table")

    def to_dict(self) -> dict:
        return {
            "block_id": self.block_id,
            "question_id": self.question_id,
            "capability": self.capability.value,
            "level_or_case": self.level_or_case,
            "question_text": self.question_text,
            "example_text": self.example_text,
            "ground_truth": self.ground_truth,
            "uses_defect_text": self.uses_defect_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QaItem":
        return cls(
            question_id=d["question_id"],
            capability=Capability(d["capability"]),
            level_or_case=d["level_or_case"],
            question_text=d["question_text"],
            example_text=d["example_text"],
            ground_truth=d.get("ground_truth", ""),
            uses_defect_text=bool(d["uses_defect_text"]),
            block_id=d.get("block_id", ""),
        )


SCORE_FIELDS = ("format", "bleu1", "bleu2", "rouge_l", "cos_sim", "g_eval")
_RANGES = {
    "format": (0, 1),
    "bleu1": (0.0, 1.0),
    "bleu2": (0.0, 1.0),
    "rouge_l": (0.0, 1.0),
    "cos_sim": (-1.0, 1.0),
    "g_eval": (0.0, 1.0),
}


@dataclass(frozen=True)
class ScoreVector:
    format: int
    bleu1: float
    bleu2: float
    rouge_l: float
    cos_sim: Optional[float] = None
    g_eval: Optional[float] = None

    def __post_init__(self):
        if self.format not in (0, 1):
            raise DomainError("format score must be 0 or 1")
        for name in SCORE_FIELDS[1:]:
            v = getattr(self, name)
            if v is None:
                continue
            lo, hi = _RANGES[name]
            if not (lo <= v <= hi):
                raise DomainError(f"{name}={v} outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in SCORE_FIELDS}

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreVector":
        return cls(**{k: d.get(k) for k in SCORE_FIELDS})


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    inquiry_text: str
    question_text: str
    example_text: str

    def user_message(self) -> str:
        return self.inquiry_text + "\n\n" + self.question_text + "\n" + self.example_text

    def to_dict(self) -> dict:
        return {
            "system_prompt": self.system_prompt,
            "inquiry_text": self.inquiry_text,
            "question_text": self.question_text,
            "example_text": self.example_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PromptBundle":
        return cls(d["system_prompt"], d["inquiry_text"], d["question_text"], d["example_text"])


@dataclass(frozen=True)
class EvalRecord:
    qa: QaItem
    model_name: str
    raw_output: str
    final_answer: str = ""
    scores: Optional[ScoreVector] = None
    judge_rationale: Optional[str] = None
    timestamp: str = ""
    prompt: Optional[PromptBundle] = None
    error: Optional[str] = None
    flags: tuple = field(default_factory=tuple)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_name, self.qa.block_id, self.qa.question_id)

    def to_dict(self) -> dict:
        d = {
            "qa": self.qa.to_dict(),
            "model_name": self.model_name,
            "raw_output": self.raw_output,
            "final_answer": self.final_answer,
            "judge_rationale": self.judge_rationale,
            "timestamp": self.timestamp,
            "error": self.error,
            "flags": list(self.flags),
        }
        if self.prompt is not None:
            d["prompt"] = self.prompt.to_dict()
        if self.scores is not None:
            d["scores"] = self.scores.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(
            qa=QaItem.from_dict(d["qa"]),
            model_name=d["model_name"],
            raw_output=d.get("raw_output", ""),
            final_answer=d.get("final_answer", ""),
            scores=ScoreVector.from_dict(d["scores"]) if d.get("scores") else None,
            judge_rationale=d.get("judge_rationale"),
            timestamp=d.get("timestamp", ""),
            prompt=PromptBundle.from_dict(d["prompt"]) if d.get("prompt") else None,
            error=d.get("error"),
            flags=tuple(d.get("flags", ())),
        )
