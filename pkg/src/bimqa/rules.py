"""Design rules shared by inspection and the answer oracle."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .model import DomainError, Kind

_NUMBER_RE = re.compile(r"^[A-Za-z][0-9]+$")


@dataclass(frozen=True)
class RuleSet:
    naming_prefix: dict = field(default_factory=lambda: {Kind.WALL: "Q", Kind.BEAM: "L", Kind.SLAB: "B"})
    min_fire_hours: float = 2.0
    plausible_thickness_mm: tuple = (100, 600)
    parallel_angle_tol_rad: float = 1e-9
    length_rel_tol: float = 0.03
    touching_counts: bool = False

    def __post_init__(self):
        lo, hi = self.plausible_thickness_mm
        if not lo < hi:
            raise DomainError("plausible thickness interval needs lower < upper")
        if self.min_fire_hours <= 0:
            raise DomainError("min_fire_hours must be positive")
        object.__setattr__(self, "naming_prefix", {Kind(k): v for k, v in self.naming_prefix.items()})

    def thickness_ok(self, t: float) -> bool:
        lo, hi = self.plausible_thickness_mm
        return lo <= t <= hi

    def number_ok(self, kind: Kind, number: str) -> bool:
        return bool(_NUMBER_RE.match(number)) and number[0] == self.naming_prefix[kind]

    def fire_ok(self, hours: float) -> bool:
        return hours >= self.min_fire_hours

    @classmethod
    def from_file(cls, path) -> "RuleSet":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown rule fields: {sorted(unknown)}")
        if "plausible_thickness_mm" in data:
            data["plausible_thickness_mm"] = tuple(data["plausible_thickness_mm"])
        return cls(**data)


DEFAULT_RULES = RuleSet()
