"""Neutral JSON exchange format for models and blocks.

Top level: ``{name, walls: [...], beams: [...], slabs: [...]}``; block files
add ``block_id``, ``source_model`` and ``block_size_mm``. Every length is an
integer number of millimetres.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path
from typing import Any

from .model import (
    Beam,
    BimModel,
    Block,
    DegenerateGeometry,
    DomainError,
    Kind,
    Point3,
    Slab,
    Wall,
    canonical_order,
)


class SchemaError(DomainError):
    pass


_COMMON_OPTIONAL = ("construction_number", "fire_resistance_hours", "fire_resistance_text")
_FIELDS = {
    "walls": (("id", "start", "end", "thickness_mm", "height_mm", "length_mm"), _COMMON_OPTIONAL),
    "beams": (("id", "start", "end", "section_width_mm", "section_depth_mm"), _COMMON_OPTIONAL),
    "slabs": (("id", "outline", "thickness_mm"), _COMMON_OPTIONAL),
}
_TOP_REQUIRED = ("name",)
_TOP_OPTIONAL = ("walls", "beams", "slabs", "block_id", "source_model", "block_size_mm")
_KIND_KEY = {Kind.WALL: "walls", Kind.BEAM: "beams", Kind.SLAB: "slabs"}


def _unknown(keys, allowed, where, strict):
    extra = sorted(set(keys) - set(allowed))
    if not extra:
        return
    msg = f"{where}: unknown field(s) {extra}"
    if strict:
        raise SchemaError(msg)
    warnings.warn(msg, stacklevel=3)


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: expected integer, got {v!r}")
    return v


def _point(v, where) -> Point3:
    if not isinstance(v, list) or len(v) != 3:
        raise SchemaError(f"{where}: expected [x, y, z]")
    return Point3(*(_int(c, where) for c in v))


def _optional(obj, where) -> dict:
    out = {}
    num = obj.get("construction_number")
    if num is not None:
        if not isinstance(num, str):
            raise SchemaError(f"{where}.construction_number: expected text")
        out["construction_number"] = num
    hours = obj.get("fire_resistance_hours")
    if hours is not None:
        if isinstance(hours, bool) or not isinstance(hours, (int, float)):
            raise SchemaError(f"{where}.fire_resistance_hours: expected number")
        out["fire_resistance_hours"] = hours
    text = obj.get("fire_resistance_text")
    if text is not None:
        if not isinstance(text, str):
            raise SchemaError(f"{where}.fire_resistance_text: expected text")
        out["fire_resistance_text"] = text
    return out


def _component(key: str, obj: Any, idx: int, strict: bool):
    where = f"{key}[{idx}]"
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected object")
    required, optional = _FIELDS[key]
    for f in required:
        if f not in obj:
            raise SchemaError(f"{where}: missing field {f!r}")
    _unknown(obj, required + optional, where, strict)
    extra = _optional(obj, where)
    cid = _int(obj["id"], f"{where}.id")
    try:
        if key == "walls":
            return Wall(
                cid,
                _point(obj["start"], f"{where}.start"),
                _point(obj["end"], f"{where}.end"),
                _int(obj["thickness_mm"], f"{where}.thickness_mm"),
                _int(obj["height_mm"], f"{where}.height_mm"),
                _int(obj["length_mm"], f"{where}.length_mm"),
                **extra,
            )
        if key == "beams":
            return Beam(
                cid,
                _point(obj["start"], f"{where}.start"),
                _point(obj["end"], f"{where}.end"),
                _int(obj["section_width_mm"], f"{where}.section_width_mm"),
                _int(obj["section_depth_mm"], f"{where}.section_depth_mm"),
                **extra,
            )
        outline = obj["outline"]
        if not isinstance(outline, list):
            raise SchemaError(f"{where}.outline: expected list of points")
        return Slab(
            cid,
            tuple(_point(p, f"{where}.outline[{i}]") for i, p in enumerate(outline)),
            _int(obj["thickness_mm"], f"{where}.thickness_mm"),
            **extra,
        )
    except (SchemaError, DegenerateGeometry):
        raise
    except DomainError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _load(data) -> dict:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed document: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("top level must be an object")
    return data


def _components(doc: dict, strict: bool) -> list:
    for f in _TOP_REQUIRED:
        if f not in doc:
            raise SchemaError(f"missing top-level field {f!r}")
    _unknown(doc, _TOP_REQUIRED + _TOP_OPTIONAL, "document", strict)
    out = []
    for key in ("walls", "beams", "slabs"):
        items = doc.get(key, [])
        if not isinstance(items, list):
            raise SchemaError(f"{key}: expected array")
        out.extend(_component(key, obj, i, strict) for i, obj in enumerate(items))
    return out


def parse_model(data, strict: bool = True) -> BimModel:
    """Parse an exchange document (bytes, text, or already-decoded dict)."""
    doc = _load(data)
    comps = _components(doc, strict)
    if not isinstance(doc["name"], str):
        raise SchemaError("name: expected text")
    return BimModel(doc["name"], comps)


def _comp_dict(c) -> dict:
    if isinstance(c, Wall):
        d = {
            "id": c.id,
            "start": c.start.as_list(),
            "end": c.end.as_list(),
            "thickness_mm": c.thickness_mm,
            "height_mm": c.height_mm,
            "length_mm": c.length_mm,
        }
    elif isinstance(c, Beam):
        d = {
            "id": c.id,
            "start": c.start.as_list(),
            "end": c.end.as_list(),
            "section_width_mm": c.section_width_mm,
            "section_depth_mm": c.section_depth_mm,
        }
    else:
        d = {"id": c.id, "outline": [p.as_list() for p in c.outline], "thickness_mm": c.thickness_mm}
    if c.construction_number is not None:
        d["construction_number"] = c.construction_number
    if c.fire_resistance_hours is not None:
        d["fire_resistance_hours"] = c.fire_resistance_hours
    if c.fire_resistance_text is not None:
        d["fire_resistance_text"] = c.fire_resistance_text
    return d


def _doc(name, components) -> dict:
    doc: dict = {"name": name}
    for kind, key in _KIND_KEY.items():
        doc[key] = [_comp_dict(c) for c in components if c.kind == kind]
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def serialize_model(m: BimModel) -> str:
    return dumps(_doc(m.name, m.components))


def block_to_dict(b: Block) -> dict:
    doc = _doc(b.block_id, b.components)
    doc["block_id"] = b.block_id
    doc["source_model"] = b.source_model
    doc["block_size_mm"] = b.block_size_mm
    return doc


def serialize_block(b: Block) -> str:
    return dumps(block_to_dict(b))


def parse_block(data, strict: bool = True) -> Block:
    """Parse a block file; texts are not stored and must be re-rendered."""
    doc = _load(data)
    comps = _components(doc, strict)
    bid = doc.get("block_id", doc["name"])
    return Block(
        block_id=bid,
        source_model=doc.get("source_model", doc["name"]),
        block_size_mm=_int(doc.get("block_size_mm", 1), "block_size_mm"),
        components=canonical_order(comps),
    )


def read_model(path, strict: bool = True) -> BimModel:
    return parse_model(Path(path).read_bytes(), strict=strict)


def read_block(path, strict: bool = True) -> Block:
    return parse_block(Path(path).read_bytes(), strict=strict)
