"""Pre-injection model inspection: integrity, rationality and compliance."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from .geometry import distance
from .model import Beam, Kind, Wall
from .rules import DEFAULT_RULES, RuleSet


class Rule(str, enum.Enum):
    MISSING_ATTRIBUTE = "MissingAttribute"
    IMPLAUSIBLE_VALUE = "ImplausibleValue"
    NON_COMPLIANT_VALUE = "NonCompliantValue"
    GEOMETRY_INCONSISTENT = "GeometryInconsistent"


@dataclass(frozen=True)
class Violation:
    component_id: int
    rule: Rule
    detail: str

    def to_dict(self) -> dict:
        return {"component_id": self.component_id, "rule": self.rule.value, "detail": self.detail}


@dataclass(frozen=True)
class InspectionReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def clean(self) -> bool:
        return not self.violations

    @property
    def component_ids(self) -> set[int]:
        return {v.component_id for v in self.violations}

    def to_dict(self) -> dict:
        return {"clean": self.clean, "violations": [v.to_dict() for v in self.violations]}


def modal_value(values):
    """Most frequent value; ties go to the smallest."""
    counts = Counter(values)
    if not counts:
        return None
    best = max(counts.values())
    return min(v for v, n in counts.items() if n == best)


def inspect_components(components, rules: RuleSet = DEFAULT_RULES) -> InspectionReport:
    out: list[Violation] = []
    walls = [c for c in components if isinstance(c, Wall)]
    floor_z = modal_value([w.start.z for w in walls if w.start.z == w.end.z])
    for c in components:
        if c.construction_number is None:
            out.append(Violation(c.id, Rule.MISSING_ATTRIBUTE, "construction number missing"))
        elif not rules.number_ok(c.kind, c.construction_number):
            out.append(
                Violation(
                    c.id,
                    Rule.NON_COMPLIANT_VALUE,
                    f"construction number {c.construction_number!r} violates the naming rule "
                    f"(prefix {rules.naming_prefix[c.kind]!r} followed by digits)",
                )
            )
        if c.fire_resistance_hours is None:
            out.append(Violation(c.id, Rule.MISSING_ATTRIBUTE, "fire resistance missing"))
        elif isinstance(c, Beam) and not rules.fire_ok(c.fire_resistance_hours):
            out.append(
                Violation(
                    c.id,
                    Rule.NON_COMPLIANT_VALUE,
                    f"beam fire resistance {c.fire_display} below {rules.min_fire_hours:g} hours",
                )
            )
        if c.kind is Kind.WALL:
            if not rules.thickness_ok(c.thickness_mm):
                lo, hi = rules.plausible_thickness_mm
                out.append(
                    Violation(c.id, Rule.IMPLAUSIBLE_VALUE, f"wall thickness {c.thickness_mm} mm outside [{lo}, {hi}]")
                )
            if c.start.z != c.end.z:
                out.append(
                    Violation(c.id, Rule.IMPLAUSIBLE_VALUE, f"start z {c.start.z} differs from end z {c.end.z}")
                )
            elif floor_z is not None and c.start.z != floor_z:
                out.append(
                    Violation(c.id, Rule.IMPLAUSIBLE_VALUE, f"wall z {c.start.z} differs from floor level {floor_z}")
                )
            computed = distance(c.start, c.end)
            if abs(computed - c.length_mm) / computed > rules.length_rel_tol:
                out.append(
                    Violation(
                        c.id,
                        Rule.GEOMETRY_INCONSISTENT,
                        f"declared length {c.length_mm} mm vs endpoint distance {computed:.0f} mm",
                    )
                )
    return InspectionReport(tuple(out))


def inspect_model(m, rules: RuleSet = DEFAULT_RULES) -> InspectionReport:
    """Inspect a :class:`BimModel` or :class:`Block` (anything with ``components``)."""
    return inspect_components(m.components, rules)
