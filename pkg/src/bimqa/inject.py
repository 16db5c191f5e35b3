"""Seeded defect injection into clean blocks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import (
    Beam,
    Block,
    DefectKind,
    DefectRecord,
    DomainError,
    Point3,
    Wall,
    format_hours,
)
from .rng import SplitMix64
from .textualize import textualize, textualize_components


class InsufficientTargets(DomainError):
    pass


CORRUPTION_RULES = ("prepend_letter", "insert_dash", "strip_letter")

# Most constrained kinds pick targets first.
APPLICATION_ORDER = (
    DefectKind.RATIONALITY_THICKNESS,
    DefectKind.RATIONALITY_Z_ONE_END,
    DefectKind.RATIONALITY_Z_BOTH_ENDS,
    DefectKind.INTEGRITY_ERASE_FIRE,
    DefectKind.COMPLIANCE_FIRE,
    DefectKind.INTEGRITY_ERASE_NUMBER,
    DefectKind.COMPLIANCE_NUMBER,
)

Z_KINDS = (DefectKind.RATIONALITY_Z_ONE_END, DefectKind.RATIONALITY_Z_BOTH_ENDS)


@dataclass(frozen=True)
class InjectionPlan:
    seed: int = 0
    per_kind_counts: dict = field(default_factory=lambda: {k: 1 for k in DefectKind})
    thickness_defect_pool: tuple = (10, 20, 700, 1000)
    z_shift_mm: int = 120
    number_corruptions: tuple = CORRUPTION_RULES
    prepend_letter: str = "W"
    fire_defect_hours: float = 1

    def __post_init__(self):
        counts = {DefectKind(k): int(v) for k, v in self.per_kind_counts.items()}
        for k in DefectKind:
            counts.setdefault(k, 0)
        if any(v < 0 for v in counts.values()):
            raise DomainError("defect counts must be non-negative")
        object.__setattr__(self, "per_kind_counts", counts)
        unknown = set(self.number_corruptions) - set(CORRUPTION_RULES)
        if unknown:
            raise DomainError(f"unknown corruption rules {sorted(unknown)}")
        if self.z_shift_mm == 0:
            raise DomainError("z_shift_mm must be non-zero")

    @property
    def fire_defect_text(self) -> str:
        return format_hours(self.fire_defect_hours)

    @classmethod
    def from_file(cls, path, seed: int | None = None) -> "InjectionPlan":
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        if seed is not None:
            d["seed"] = seed
        for key in ("thickness_defect_pool", "number_corruptions"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def corrupt_number(number: str, rule: str, letter: str = "W") -> str:
    """Apply one naming-rule corruption: ``Q20`` -> ``WQ20`` / ``Q-20`` / ``20``."""
    if rule == "prepend_letter":
        return letter + number
    if rule == "insert_dash":
        return number[:1] + "-" + number[1:]
    if rule == "strip_letter":
        return number[1:]
    raise DomainError(f"unknown corruption rule {rule!r}")


def _eligible(kind: DefectKind, c) -> bool:
    if kind in (DefectKind.RATIONALITY_THICKNESS, *Z_KINDS):
        return isinstance(c, Wall)
    if kind in (DefectKind.INTEGRITY_ERASE_FIRE, DefectKind.COMPLIANCE_FIRE):
        return isinstance(c, Beam) and c.fire_resistance_hours is not None
    return c.construction_number is not None and len(c.construction_number) >= 2


def _apply(kind: DefectKind, c, plan: InjectionPlan, rng: SplitMix64):
    """Return (corrupted component, field, original text, corrupted text)."""
    if kind is DefectKind.INTEGRITY_ERASE_NUMBER:
        return replace(c, construction_number=None), "construction_number", c.construction_number, ""
    if kind is DefectKind.INTEGRITY_ERASE_FIRE:
        return (replace(c, fire_resistance_hours=None, fire_resistance_text=None),
                "fire_resistance", c.fire_display, "")
    if kind is DefectKind.RATIONALITY_THICKNESS:
        value = rng.choice(plan.thickness_defect_pool)
        return replace(c, thickness_mm=value), "thickness_mm", str(c.thickness_mm), str(value)
    if kind is DefectKind.RATIONALITY_Z_ONE_END:
        end = Point3(c.end.x, c.end.y, c.end.z + plan.z_shift_mm)
        return replace(c, end=end), "end.z", str(c.end.z), str(end.z)
    if kind is DefectKind.RATIONALITY_Z_BOTH_ENDS:
        start = Point3(c.start.x, c.start.y, c.start.z + plan.z_shift_mm)
        end = Point3(c.end.x, c.end.y, c.end.z + plan.z_shift_mm)
        return replace(c, start=start, end=end), "z", str(c.start.z), str(start.z)
    if kind is DefectKind.COMPLIANCE_NUMBER:
        rule = rng.choice(plan.number_corruptions)
        new = corrupt_number(c.construction_number, rule, plan.prepend_letter)
        return replace(c, construction_number=new), "construction_number", c.construction_number, new
    if kind is DefectKind.COMPLIANCE_FIRE:
        new = replace(c, fire_resistance_hours=plan.fire_defect_hours, fire_resistance_text=None)
        if new.fire_display == c.fire_display:
            raise InsufficientTargets(f"beam {c.id} already has fire resistance {c.fire_display}")
        return new, "fire_resistance", c.fire_display, new.fire_display
    raise DomainError(f"unhandled defect kind {kind}")


def inject(b: Block, plan: InjectionPlan) -> tuple[Block, list[DefectRecord]]:
    """Corrupt disjoint components of ``b``; returns the block with ``defect_text`` and the manifest."""
    rng = SplitMix64(plan.seed)
    comps = {c.id: c for c in b.components}
    order = [c.id for c in b.components]
    targeted: set[int] = set()
    manifest: list[DefectRecord] = []
    for kind in APPLICATION_ORDER:
        for _ in range(plan.per_kind_counts[kind]):
            pool = [cid for cid in order if cid not in targeted and _eligible(kind, comps[cid])]
            if kind is DefectKind.COMPLIANCE_FIRE:
                pool = [cid for cid in pool if comps[cid].fire_resistance_hours != plan.fire_defect_hours]
            if not pool:
                raise InsufficientTargets(f"block {b.block_id}: no eligible component left for {kind.value}")
            cid = rng.choice(pool)
            new, fld, orig, corrupted = _apply(kind, comps[cid], plan, rng)
            comps[cid] = new
            targeted.add(cid)
            manifest.append(DefectRecord(kind, cid, fld, orig, corrupted))

    n_walls = sum(isinstance(c, Wall) for c in b.components)
    z_targets = sum(1 for d in manifest if d.kind in Z_KINDS)
    shifted = sum(1 for d in manifest if d.kind is DefectKind.RATIONALITY_Z_BOTH_ENDS)
    # the floor level must stay the modal z so shifted walls remain detectable
    if shifted and n_walls - z_targets <= shifted:
        raise InsufficientTargets(f"block {b.block_id}: too few unshifted walls to fix the floor level")

    corrupted = [comps[cid] for cid in order]
    out = replace(b, clean_text=b.clean_text or textualize(b), defect_text=textualize_components(corrupted))
    return out, manifest


def _set(c, rec: DefectRecord, value: str):
    f = rec.field
    if f == "construction_number":
        return replace(c, construction_number=value or None)
    if f == "fire_resistance":
        if not value:
            return replace(c, fire_resistance_hours=None, fire_resistance_text=None)
        hours = float(value.split()[0])
        if hours.is_integer():
            hours = int(hours)
        return replace(c, fire_resistance_hours=hours, fire_resistance_text=None if value == format_hours(hours) else value)
    if f == "thickness_mm":
        return replace(c, thickness_mm=int(value))
    if f == "end.z":
        return replace(c, end=Point3(c.end.x, c.end.y, int(value)))
    if f == "z":
        z = int(value)
        return replace(c, start=Point3(c.start.x, c.start.y, z), end=Point3(c.end.x, c.end.y, z))
    raise DomainError(f"unknown defect field {f!r}")


def apply_manifest(components, manifest, reverse: bool = False) -> list:
    """Replay a manifest forwards (clean -> corrupted) or backwards."""
    comps = {c.id: c for c in components}
    recs = list(reversed(manifest)) if reverse else list(manifest)
    for rec in recs:
        comps[rec.target_id] = _set(comps[rec.target_id], rec, rec.original if reverse else rec.corrupted)
    return [comps[c.id] for c in components]


def defect_components(b: Block, manifest) -> list:
    return apply_manifest(b.components, manifest)


def manifest_to_dict(block_id: str, seed: int, manifest) -> dict:
    return {"block_id": block_id, "seed": seed, "defects": [d.to_dict() for d in manifest]}


def manifest_from_dict(d: dict) -> tuple[str, int, list[DefectRecord]]:
    return d["block_id"], int(d["seed"]), [DefectRecord.from_dict(x) for x in d["defects"]]
