"""Spatial partitioning of a model into prompt-sized blocks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .model import BimModel, Block, DomainError, Slab, canonical_order, reference_point

log = logging.getLogger(__name__)


class EmptyResult(DomainError):
    pass


@dataclass(frozen=True)
class PartitionConfig:
    block_size_mm: int = 8000
    min_components: int = 5
    max_components: int = 25
    seed: int = 0  # reserved for injection; partitioning never reads it

    def __post_init__(self):
        if self.block_size_mm <= 0:
            raise DomainError("block_size_mm must be positive")
        if not 0 < self.min_components <= self.max_components:
            raise DomainError("need 0 < min_components <= max_components")


@dataclass(frozen=True)
class PartitionResult:
    blocks: list
    dropped: list  # (cell id, component ids) for under-populated cells

    @property
    def dropped_count(self) -> int:
        return sum(len(ids) for _, ids in self.dropped)


def grid_origin(m: BimModel) -> tuple[int, int]:
    xs, ys = [], []
    for c in m.components:
        pts = c.outline if isinstance(c, Slab) else (c.start, c.end)
        xs.extend(p.x for p in pts)
        ys.extend(p.y for p in pts)
    return min(xs), min(ys)


def cell_of(c, origin, size) -> tuple[int, int]:
    x, y = reference_point(c)
    return math.floor((y - origin[1]) / size), math.floor((x - origin[0]) / size)


def partition_detailed(m: BimModel, cfg: PartitionConfig) -> PartitionResult:
    if not m.components:
        raise EmptyResult(f"model {m.name!r} has no components")
    origin = grid_origin(m)
    cells: dict[tuple[int, int], list] = {}
    for c in m.components:
        cells.setdefault(cell_of(c, origin, cfg.block_size_mm), []).append(c)

    blocks, dropped = [], []
    for (r, col) in sorted(cells):
        comps = canonical_order(cells[(r, col)])
        cell_id = f"r{r}c{col}"
        if len(comps) < cfg.min_components:
            log.warning("dropping cell %s of %s: %d components < %d", cell_id, m.name, len(comps), cfg.min_components)
            dropped.append((cell_id, [c.id for c in comps]))
            continue
        if len(comps) > cfg.max_components:
            log.warning("cell %s of %s holds %d components > %d", cell_id, m.name, len(comps), cfg.max_components)
        blocks.append(Block(f"{m.name}_{cell_id}", m.name, cfg.block_size_mm, comps))
    if not blocks:
        raise EmptyResult(f"no cell of {m.name!r} reaches {cfg.min_components} components")
    return PartitionResult(blocks, dropped)


def partition(m: BimModel, cfg: PartitionConfig) -> list[Block]:
    """Blocks in row-major cell order; texts are left for the textualizer."""
    return partition_detailed(m, cfg).blocks
