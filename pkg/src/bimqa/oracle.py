"""Ground-truth answers for the 22 question templates.

General questions (E/S/C/R) are answered from the clean components; domain
questions read the defect view, i.e. the clean components with the manifest
replayed on top. The review helpers work on any component list, so the same
code checks an injected block and a repaired one.

Tie-breaking is always "smallest value, then smallest id".
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import replace

from .answer import Answer, agg, choice, items, reason
from .geometry import (
    axis_direction,
    distance,
    is_rectangle,
    orientation,
    rectangle_area,
    slab_xy,
    walls_overlap,
)
from .inject import apply_manifest
from .model import (
    Beam,
    Block,
    DefectKind,
    DomainError,
    Kind,
    Point3,
    Wall,
    format_hours,
)
from .rules import DEFAULT_RULES, RuleSet
from .textualize import numeric_ordinal


class Unresolvable(DomainError):
    """The block lacks the entity a question refers to."""


class NotAxisAligned(Unresolvable):
    pass


_ORDINAL_WORDS = (
    "first second third fourth fifth sixth seventh eighth ninth tenth eleventh twelfth "
    "thirteenth fourteenth fifteenth sixteenth seventeenth eighteenth nineteenth twentieth"
).split()

KIND_WORDS = {Kind.WALL: "wall", Kind.BEAM: "beam", Kind.SLAB: "slab"}
ATTRIBUTES = {"construction number": "construction_number", "fire resistance": "fire_resistance_hours"}


def ordinal_word(n: int) -> str:
    if n < 1:
        raise ValueError("ordinals start at 1")
    return _ORDINAL_WORDS[n - 1] if n <= len(_ORDINAL_WORDS) else numeric_ordinal(n)


def modes(values) -> list:
    """All most-frequent values, ascending (the first is the tie-broken mode)."""
    counts = Counter(values)
    if not counts:
        return []
    best = max(counts.values())
    return sorted(v for v, n in counts.items() if n == best)


def _or(values, unit: str = "") -> str:
    return " or ".join(f"{v}{unit}" for v in values)


def _nth(seq, n: int, what: str):
    if len(seq) < n:
        raise Unresolvable(f"block has {len(seq)} {what}(s); the question needs the {ordinal_word(n)}")
    return seq[n - 1]


def _walls(components) -> list:
    return [c for c in components if isinstance(c, Wall)]


def _beams(components) -> list:
    return [c for c in components if isinstance(c, Beam)]


def defect_view(b: Block, manifest=()) -> list:
    return apply_manifest(b.components, manifest)


def component_name(components, c) -> str:
    """``first wall (ID 342693)`` style reference used inside answers."""
    same = [x.id for x in components if x.kind == c.kind]
    return f"{ordinal_word(same.index(c.id) + 1)} {KIND_WORDS[c.kind]} (ID {c.id})"


# -- general capabilities ----------------------------------------------------


def answer_extraction_l1(b: Block) -> Answer:
    w = _nth(b.walls, 1, "wall")
    return Answer.of(f"The ID of the first wall is {w.id}, and the wall thickness is {w.thickness_mm} mm.")


def answer_extraction_l2(b: Block) -> Answer:
    walls = b.walls
    if not walls:
        raise Unresolvable("block has no walls")
    n = len(walls)
    rows = [
        f"The ID of the {ordinal_word(i)} wall is {w.id}, its start coordinate is {w.start}, "
        f"and its end coordinate is {w.end}."
        for i, w in enumerate(walls, start=1)
    ]
    head = ("There is ", agg(n), " wall in this model.") if n == 1 else ("There are ", agg(n), " walls in this model.")
    return Answer.of(*head, "\n", items(rows))


def answer_statistics_l1(b: Block) -> Answer:
    n = len(b.beams)
    if n == 1:
        return Answer.of("There is ", agg(n), " beam component in the model.")
    return Answer.of("There are ", agg(n), " beam components in the model.")


def thickness_groups(walls) -> list[tuple[int, list[int]]]:
    groups: dict[int, list[int]] = {}
    for w in walls:
        groups.setdefault(w.thickness_mm, []).append(w.id)
    return sorted(groups.items())


def answer_statistics_l2(b: Block) -> Answer:
    if not b.walls:
        raise Unresolvable("block has no walls")
    groups = thickness_groups(b.walls)
    k = len(groups)
    rows = [f"Walls with a thickness of {t} mm: {', '.join(map(str, ids))}." for t, ids in groups]
    noun = "type" if k == 1 else "types"
    verb = "is" if k == 1 else "are"
    return Answer.of(f"There {verb} ", agg(k), f" {noun} of wall thicknesses in the model.", "\n", items(rows))


def length_verdict(computed: float, declared: float, rel_tol: float = 0.03) -> str:
    """``correct`` iff the declared length is within ``rel_tol`` of the computed one."""
    if computed <= 0:
        raise DomainError("computed length must be positive")
    return "correct" if abs(computed - declared) <= rel_tol * computed * (1 + 1e-12) else "incorrect"


def answer_calc_l1(b: Block, manifest=(), rules: RuleSet = DEFAULT_RULES) -> Answer:
    w = _nth(b.walls, 2, "wall")
    computed = distance(w.start, w.end)
    verdict = length_verdict(computed, w.length_mm, rules.length_rel_tol)
    return Answer.of(
        f"The length of the second wall is {round(computed)} mm, and the given length data is {w.length_mm} mm. "
        "The given data is ",
        choice(verdict, ("correct", "incorrect")),
        ".",
    )


def wall_directions(b: Block) -> list[tuple[Wall, str]]:
    out = []
    for w in b.walls:
        phrase = axis_direction(w)
        if phrase is None:
            raise NotAxisAligned(f"wall {w.id} is not parallel to the x- or y-axis")
        out.append((w, phrase))
    return out


def answer_calc_l2(b: Block) -> Answer:
    dirs = wall_directions(b)
    if not dirs:
        raise Unresolvable("block has no walls")
    rows = [
        f"The direction of the {ordinal_word(i)} wall (ID {w.id}) is {phrase}."
        for i, (w, phrase) in enumerate(dirs, start=1)
    ]
    return Answer.of(items(rows))


def slab_areas(b: Block, tol: float = 1e-9) -> list[tuple[int, float | None]]:
    """(id, area in m²) per slab in block order; area is None when not rectangular."""
    out = []
    for s in b.slabs:
        pts = slab_xy(s)
        out.append((s.id, rectangle_area(pts) / 1e6 if is_rectangle(pts, tol) else None))
    return out


def largest_rectangular(areas) -> tuple[int, float] | None:
    rect = [(a, sid) for sid, a in areas if a is not None]
    if not rect:
        return None
    best = max(a for a, _ in rect)
    return min(sid for a, sid in rect if a == best), best


def answer_calc_l3(b: Block, rules: RuleSet = DEFAULT_RULES) -> Answer:
    areas = slab_areas(b, rules.parallel_angle_tol_rad)
    if not areas:
        raise Unresolvable("block has no slabs")
    rows = []
    for i, (sid, area) in enumerate(areas, start=1):
        head = f"The ID of the {ordinal_word(i)} floor slab is {sid}, and it is "
        rows.append(head + ("not rectangular." if area is None else f"rectangular with an area of {area:.2f} square meters."))
    best = largest_rectangular(areas)
    if best is None:
        return Answer.of(items(rows), "\n", "None of the floor slabs is rectangular.")
    sid, area = best
    return Answer.of(
        items(rows),
        "\nAmong these, the ID of the rectangular floor slab with the largest area is ",
        agg(sid),
        ", and its area is ",
        agg(f"{area:.2f}"),
        " m².",
    )


_ORIENTATION_PHRASES = {
    "parallel": "parallel to each other",
    "perpendicular": "perpendicular to each other",
    "neither": "neither parallel nor perpendicular",
}


def answer_reason_l1(b: Block, rules: RuleSet = DEFAULT_RULES) -> Answer:
    a = _nth(b.walls, 2, "wall")
    c = _nth(b.walls, 3, "wall")
    verdict = orientation(a, c, rules.parallel_angle_tol_rad)
    return Answer.of(
        "The planar orientations of the second wall and the third wall are ",
        choice(_ORIENTATION_PHRASES[verdict], tuple(_ORIENTATION_PHRASES.values())),
        ".",
    )


def floor_heights(b: Block) -> list[int]:
    """Candidate floor heights: wall height plus slab thickness, then wall height alone."""
    if not b.walls:
        raise Unresolvable("block has no walls")
    h = modes(w.height_mm for w in b.walls)[0]
    if not b.slabs:
        return [h]
    t = modes(s.thickness_mm for s in b.slabs)[0]
    return [h + t, h]


def answer_reason_l2(b: Block) -> Answer:
    heights = floor_heights(b)
    h = heights[-1]
    if len(heights) == 1:
        why = f"most walls in the model being {h} mm high"
        basis = "the floor height is most likely the wall height"
    else:
        why = f"most walls in the model being {h} mm high and most floor slabs being {heights[0] - h} mm thick"
        basis = "the floor height is most likely the wall height plus the slab thickness"
    return Answer.of(
        "The floor height of the building is most likely ",
        agg(_or(heights, " mm")),
        ". Due to ",
        reason(why),
        f", {basis}.",
    )


def answer_reason_l3(b: Block, rules: RuleSet = DEFAULT_RULES) -> Answer:
    fifth = _nth(b.walls, 5, "wall")
    third = _nth(b.walls, 3, "wall")
    hit = walls_overlap(fifth, third, rules.touching_counts)
    return Answer.of(
        choice("Yes" if hit else "No", ("Yes", "No")),
        ", the fifth wall and the third wall ",
        choice("overlap" if hit else "do not overlap", ("overlap", "do not overlap")),
        ".",
    )


# -- review helpers over component lists ---------------------------------------


def review_missing(components, attribute: str) -> list[int]:
    attr = ATTRIBUTES[attribute]
    return [c.id for c in components if getattr(c, attr) is None]


def review_thickness(components, rules: RuleSet = DEFAULT_RULES) -> list[Wall]:
    return [w for w in _walls(components) if not rules.thickness_ok(w.thickness_mm)]


def floor_level(components) -> int | None:
    """Modal z of walls whose two endpoints agree."""
    zs = modes(w.start.z for w in _walls(components) if w.start.z == w.end.z)
    return zs[0] if zs else None


def review_z(components) -> list[tuple[Wall, str]]:
    """Walls with a suspicious z and the kind of problem: ``mismatch`` or ``offset``."""
    floor = floor_level(components)
    out = []
    for w in _walls(components):
        if w.start.z != w.end.z:
            out.append((w, "mismatch"))
        elif floor is not None and w.start.z != floor:
            out.append((w, "offset"))
    return out


def review_numbers(components, rules: RuleSet = DEFAULT_RULES) -> list[int]:
    return [
        c.id for c in components
        if c.construction_number is not None and not rules.number_ok(c.kind, c.construction_number)
    ]


def review_fire(components, rules: RuleSet = DEFAULT_RULES) -> list[int]:
    return [
        c.id for c in _beams(components)
        if c.fire_resistance_hours is not None and not rules.fire_ok(c.fire_resistance_hours)
    ]


def _id_list(ids) -> object:
    return items([str(i) for i in ids], sep=", ")


# -- design review -------------------------------------------------------------


def answer_review_integrity(b: Block, manifest=(), attribute: str = "construction number") -> Answer:
    if attribute not in ATTRIBUTES:
        raise DomainError(f"unknown attribute {attribute!r}")
    missing = review_missing(defect_view(b, manifest), attribute)
    if not missing:
        return Answer.of(f"All components in the model have been provided with the {attribute}.")
    return Answer.of(f"The IDs of the components missing the {attribute} are: ", _id_list(missing), ".")


def _thickness_reason(t: int, rules: RuleSet) -> str:
    lo, hi = rules.plausible_thickness_mm
    if t < lo:
        return f"the wall being thinner than the usual minimum of {lo} mm for walls in residential buildings"
    return f"the wall being thicker than the usual maximum of {hi} mm for walls in residential buildings"


def answer_review_rationality(b: Block, manifest=(), case: int = 1, rules: RuleSet = DEFAULT_RULES) -> Answer:
    comps = defect_view(b, manifest)
    walls = _walls(comps)
    order = {w.id: i for i, w in enumerate(walls, start=1)}
    if case == 1:
        flagged = review_thickness(comps, rules)
        if not flagged:
            return Answer.of("There are no suspicious wall thickness data in this part of the model.")
        rows = [
            (f"The thickness of the {ordinal_word(order[w.id])} wall is suspicious; its ID is {w.id}, "
             f"and its thickness is {w.thickness_mm}mm. Due to ",
             reason(_thickness_reason(w.thickness_mm, rules)),
             ", this data may be incorrect.")
            for w in flagged
        ]
        return Answer.of("There are some suspicious wall thickness data in this part of the model. ", items(rows, " "))
    if case == 2:
        flagged = review_z(comps)
        if not flagged:
            return Answer.of("There are no suspicious z-coordinate data in this part of the model.")
        floor = floor_level(comps)
        rows = []
        for w, why in flagged:
            text = (
                "the start and end points of the same wall having different z-coordinates" if why == "mismatch"
                else f"the wall being offset from the z-coordinate {floor} of the other walls on the same floor"
            )
            rows.append(
                (f"The z-coordinate of the {ordinal_word(order[w.id])} wall is suspicious; its ID is {w.id}, "
                 f"its starting point z-coordinate is {w.start.z}, and its ending point z-coordinate is {w.end.z}. Due to ",
                 reason(text),
                 ", this data may be incorrect.")
            )
        return Answer.of("There are some suspicious z-coordinate data in this part of the model. ", items(rows, " "))
    raise DomainError(f"unknown case {case}")


def answer_review_compliance(b: Block, manifest=(), case: int = 1, rules: RuleSet = DEFAULT_RULES) -> Answer:
    comps = defect_view(b, manifest)
    if case == 1:
        bad = review_numbers(comps, rules)
        if not bad:
            return Answer.of("All components that need to be checked comply with the naming rules.")
        return Answer.of(
            "The IDs of the components whose construction numbers do not comply with the naming rules are: ",
            _id_list(bad), ".",
        )
    if case == 2:
        bad = review_fire(comps, rules)
        if not bad:
            return Answer.of("All beam components that need to be checked comply with the fire resistance requirements.")
        return Answer.of(
            "The IDs of the beam components that do not comply with the fire resistance requirements are: ",
            _id_list(bad), ".",
        )
    raise DomainError(f"unknown case {case}")


# -- design detailing ----------------------------------------------------------

_DETAIL_KINDS = {
    ("DI", 1): (DefectKind.INTEGRITY_ERASE_NUMBER,),
    ("DI", 2): (DefectKind.INTEGRITY_ERASE_FIRE,),
    ("DR", 1): (DefectKind.RATIONALITY_THICKNESS,),
    ("DR", 2): (DefectKind.RATIONALITY_Z_ONE_END, DefectKind.RATIONALITY_Z_BOTH_ENDS),
    ("DC", 1): (DefectKind.COMPLIANCE_NUMBER,),
    ("DC", 2): (DefectKind.COMPLIANCE_FIRE,),
}


def _targets(manifest, kinds) -> list[int]:
    return [d.target_id for d in manifest if d.kind in kinds]


def _target(b: Block, manifest, kinds, target: int | None):
    ids = _targets(manifest, kinds)
    if not ids:
        raise Unresolvable(f"manifest has no {'/'.join(k.value for k in kinds)} defect")
    if target is None:
        target = ids[0]
    elif target not in ids:
        raise Unresolvable(f"component {target} carries no {'/'.join(k.value for k in kinds)} defect")
    return target


def completed_number(kind: Kind, rules: RuleSet = DEFAULT_RULES) -> str:
    return rules.naming_prefix[kind] + "00"


def completed_fire(components, rules: RuleSet = DEFAULT_RULES) -> tuple[float, str]:
    """Fire resistance for a beam missing it, with the reason."""
    present = [c.fire_resistance_hours for c in _beams(components) if c.fire_resistance_hours is not None]
    mode = modes(present)
    if mode and rules.fire_ok(mode[0]):
        return mode[0], (f"the existing beams mostly having a fire resistance of {format_hours(mode[0])}, "
                         f"which meets the rule of at least {format_hours(rules.min_fire_hours)}")
    return rules.min_fire_hours, (f"the existing beam data not giving a compliant typical value, "
                                  f"the minimum value allowed by the rule is used")


def thickness_candidates(components, target: int, rules: RuleSet = DEFAULT_RULES) -> list[int]:
    others = [w.thickness_mm for w in _walls(components) if w.id != target and rules.thickness_ok(w.thickness_mm)]
    if not others:
        raise Unresolvable("no other wall has a plausible thickness")
    return modes(others)


def z_candidates(components, target: int) -> list[int]:
    suspicious = {w.id for w, _ in review_z(components)}
    zs = [z for w in _walls(components) if w.id != target and w.id not in suspicious for z in (w.start.z, w.end.z)]
    if not zs:
        raise Unresolvable("no other wall gives a floor level")
    return modes(zs)


_DIGITS = re.compile(r"\d+")


def repaired_number(kind: Kind, corrupted: str, rules: RuleSet = DEFAULT_RULES) -> str:
    digits = "".join(_DIGITS.findall(corrupted))
    return rules.naming_prefix[kind] + (digits or "00")


def answer_detail_integrity(b: Block, manifest=(), case: int = 1, rules: RuleSet = DEFAULT_RULES,
                            target: int | None = None) -> Answer:
    comps = defect_view(b, manifest)
    cid = _target(b, manifest, _DETAIL_KINDS[("DI", case)], target)
    c = next(x for x in comps if x.id == cid)
    name = component_name(comps, c)
    if case == 1:
        return Answer.of(f"The construction number of the {name} should be completed as {completed_number(c.kind, rules)}.")
    value, why = completed_fire(comps, rules)
    return Answer.of(
        f"The fire resistance of the {name} should be completed as {format_hours(value)}. Due to ",
        reason(why),
        ", this value is appropriate.",
    )


def answer_detail_rationality(b: Block, manifest=(), case: int = 1, rules: RuleSet = DEFAULT_RULES,
                              target: int | None = None) -> Answer:
    comps = defect_view(b, manifest)
    cid = _target(b, manifest, _DETAIL_KINDS[("DR", case)], target)
    c = next(x for x in comps if x.id == cid)
    name = component_name(comps, c)
    if case == 1:
        values = thickness_candidates(comps, cid, rules)
        return Answer.of(
            f"The wall thickness of the {name} can be modified to {_or(values, ' mm')}. Due to ",
            reason(f"the other walls in this part of the model mostly being {_or(values, ' mm')} thick"),
            ", this value is reasonable.",
        )
    values = z_candidates(comps, cid)
    return Answer.of(
        f"The z-coordinates of the start and end points of the {name} can both be modified to {_or(values)}. Due to ",
        reason(f"the other walls on the same floor mostly having a z-coordinate of {_or(values)}"),
        ", this value is reasonable.",
    )


def answer_detail_compliance(b: Block, manifest=(), case: int = 1, rules: RuleSet = DEFAULT_RULES) -> Answer:
    comps = {c.id: c for c in defect_view(b, manifest)}
    wanted = set(_targets(manifest, _DETAIL_KINDS[("DC", case)]))
    ids = [c.id for c in b.components if c.id in wanted]
    if not ids:
        raise Unresolvable("manifest has no compliance defect of this case")
    if case == 1:
        rows = [
            f"The construction number of the component with ID {cid} can be modified to "
            f"{repaired_number(comps[cid].kind, comps[cid].construction_number, rules)}."
            for cid in ids
        ]
    else:
        fixed = format_hours(rules.min_fire_hours)
        rows = [f"The fire resistance of the beam with ID {cid} can be modified to {fixed}." for cid in ids]
    return Answer.of(items(rows, " "))


# -- repairs -----------------------------------------------------------------


def propose_repairs(b: Block, manifest, rules: RuleSet = DEFAULT_RULES) -> list:
    """Apply every detail answer to the defect view; returns the repaired components."""
    comps = defect_view(b, manifest)
    by_id = {c.id: c for c in comps}
    fire_value, _ = completed_fire(comps, rules)
    for rec in manifest:
        c = by_id[rec.target_id]
        k = rec.kind
        if k is DefectKind.INTEGRITY_ERASE_NUMBER:
            c = replace(c, construction_number=completed_number(c.kind, rules))
        elif k is DefectKind.INTEGRITY_ERASE_FIRE:
            c = replace(c, fire_resistance_hours=fire_value, fire_resistance_text=None)
        elif k is DefectKind.RATIONALITY_THICKNESS:
            c = replace(c, thickness_mm=thickness_candidates(comps, c.id, rules)[0])
        elif k in (DefectKind.RATIONALITY_Z_ONE_END, DefectKind.RATIONALITY_Z_BOTH_ENDS):
            z = z_candidates(comps, c.id)[0]
            c = replace(c, start=Point3(c.start.x, c.start.y, z), end=Point3(c.end.x, c.end.y, z))
        elif k is DefectKind.COMPLIANCE_NUMBER:
            c = replace(c, construction_number=repaired_number(c.kind, c.construction_number, rules))
        elif k is DefectKind.COMPLIANCE_FIRE:
            c = replace(c, fire_resistance_hours=rules.min_fire_hours, fire_resistance_text=None)
        by_id[c.id] = c
    return [by_id[c.id] for c in comps]


# -- dispatch ------------------------------------------------------------------


def answer(question_id: str, b: Block, manifest=(), rules: RuleSet = DEFAULT_RULES,
           target: int | None = None) -> Answer:
    """Ground truth for one template; ``target`` pins the component named by DI/DR questions."""
    table = {
        "E1": lambda: answer_extraction_l1(b),
        "E2": lambda: answer_extraction_l2(b),
        "S1": lambda: answer_statistics_l1(b),
        "S2": lambda: answer_statistics_l2(b),
        "C1": lambda: answer_calc_l1(b, manifest, rules),
        "C2": lambda: answer_calc_l2(b),
        "C3": lambda: answer_calc_l3(b, rules),
        "R1": lambda: answer_reason_l1(b, rules),
        "R2": lambda: answer_reason_l2(b),
        "R3": lambda: answer_reason_l3(b, rules),
        "RI-1": lambda: answer_review_integrity(b, manifest, "construction number"),
        "RI-2": lambda: answer_review_integrity(b, manifest, "fire resistance"),
        "RR-1": lambda: answer_review_rationality(b, manifest, 1, rules),
        "RR-2": lambda: answer_review_rationality(b, manifest, 2, rules),
        "RC-1": lambda: answer_review_compliance(b, manifest, 1, rules),
        "RC-2": lambda: answer_review_compliance(b, manifest, 2, rules),
        "DI-1": lambda: answer_detail_integrity(b, manifest, 1, rules, target),
        "DI-2": lambda: answer_detail_integrity(b, manifest, 2, rules, target),
        "DR-1": lambda: answer_detail_rationality(b, manifest, 1, rules, target),
        "DR-2": lambda: answer_detail_rationality(b, manifest, 2, rules, target),
        "DC-1": lambda: answer_detail_compliance(b, manifest, 1, rules),
        "DC-2": lambda: answer_detail_compliance(b, manifest, 2, rules),
    }
    try:
        fn = table[question_id]
    except KeyError:
        raise DomainError(f"unknown question id {question_id!r}") from None
    return fn()
