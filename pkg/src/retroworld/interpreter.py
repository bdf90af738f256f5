"""Deterministic one-step semantics for rule programs over a snapshot grid.

All conditions read the snapshot; actions accumulate on a pending per-instance
state (position + type), so a later rule can override an earlier one within
the same tick. Instances commit in row-major origin order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .dsl import (
    Action,
    ChangeToEntity,
    Condition,
    Direction,
    ExistsInMap,
    ExistsInPosition,
    FollowDirection,
    FollowEntity,
    FollowTargetLocation,
    Neighboring,
    Neighbours,
    Program,
)
from .grid import Grid, Position


class ProgramSetError(ValueError):
    """Invalid program-to-sprite assignment."""


@dataclass(frozen=True)
class ProgramSet:
    """Program per learnable sprite; empty and exogenous sprites have none."""

    programs: Mapping[int, Program]
    empty_id: int
    exogenous_ids: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "programs", dict(self.programs))
        if self.empty_id in self.programs:
            raise ProgramSetError("the empty sprite cannot have a program")
        for sprite in self.programs:
            if sprite in self.exogenous_ids:
                raise ProgramSetError(f"exogenous sprite {sprite} cannot have a program")

    def with_program(self, sprite: int, program: Program) -> "ProgramSet":
        merged = dict(self.programs)
        merged[sprite] = program
        return ProgramSet(merged, self.empty_id, self.exogenous_ids)


@dataclass(frozen=True)
class PendingInstance:
    """In-step accumulated state of one sprite instance."""

    origin: Position
    current_pos: Position
    current_type: int


_DIR_DELTAS = {
    Direction.UP: (0, -1),
    Direction.DOWN: (0, 1),
    Direction.LEFT: (-1, 0),
    Direction.RIGHT: (1, 0),
}


def eval_condition(cond: Condition, grid: Grid, self_pos: Position) -> bool:
    """Evaluate a condition against the snapshot grid at the instance origin."""
    if isinstance(cond, ExistsInMap):
        return cond.entity in grid.cells
    if isinstance(cond, Neighboring):
        return any(
            grid.get(p) == cond.entity
            for p in self_pos.neighbors4(grid.width, grid.height)
        )
    if isinstance(cond, Neighbours):
        for i, c in enumerate(grid.cells):
            if c != cond.entity1:
                continue
            pos = grid.position(i)
            if any(
                grid.get(p) == cond.entity2
                for p in pos.neighbors4(grid.width, grid.height)
            ):
                return True
        return False
    if isinstance(cond, ExistsInPosition):
        return self_pos == cond.pos
    raise TypeError(f"unknown condition: {cond!r}")


def _step_toward(pos: Position, target: Position) -> Position:
    # Move along the axis with the larger absolute delta; horizontal wins ties.
    dc = target.col - pos.col
    dr = target.row - pos.row
    if dc == 0 and dr == 0:
        return pos
    if abs(dc) >= abs(dr):
        return Position(pos.col + (1 if dc > 0 else -1), pos.row)
    return Position(pos.col, pos.row + (1 if dr > 0 else -1))


def _nearest(grid: Grid, origin: Position, entity: int) -> Position | None:
    best: Position | None = None
    best_d = -1
    for i, c in enumerate(grid.cells):
        if c != entity:
            continue
        p = grid.position(i)
        d = origin.manhattan(p)
        if best is None or d < best_d:
            best, best_d = p, d
    return best


def apply_action(action: Action, inst: PendingInstance, grid: Grid) -> PendingInstance:
    """Apply one action to a pending instance; degenerate cases are no-ops."""
    if isinstance(action, FollowEntity):
        target = _nearest(grid, inst.current_pos, action.entity)
        if target is None or target == inst.current_pos:
            return inst
        return PendingInstance(inst.origin, _step_toward(inst.current_pos, target), inst.current_type)
    if isinstance(action, FollowDirection):
        dc, dr = _DIR_DELTAS[action.direction]
        nxt = Position(inst.current_pos.col + dc, inst.current_pos.row + dr)
        if not grid.in_bounds(nxt):
            return inst
        return PendingInstance(inst.origin, nxt, inst.current_type)
    if isinstance(action, ChangeToEntity):
        return PendingInstance(inst.origin, inst.current_pos, action.entity)
    if isinstance(action, FollowTargetLocation):
        if inst.current_pos == action.pos:
            return inst
        return PendingInstance(inst.origin, _step_toward(inst.current_pos, action.pos), inst.current_type)
    raise TypeError(f"unknown action: {action!r}")


def run_program(program: Program, grid: Grid, origin: Position, start_type: int) -> PendingInstance:
    """Fold a program's matching actions over a fresh pending instance."""
    inst = PendingInstance(origin, origin, start_type)
    for rule in program.rules:
        if eval_condition(rule.condition, grid, origin):
            inst = apply_action(rule.action, inst, grid)
    return inst


def step(grid: Grid, ps: ProgramSet) -> Grid:
    """Advance every programmed sprite instance one tick.

    Semantics: collect programmed instances row-major; vacate their cells in
    the output; evaluate each instance's program against the snapshot at its
    origin; commit in row-major origin order. A commit conflict falls back to
    the instance's origin, then drops the instance.
    """
    snapshot = grid
    instances: list[tuple[int, int]] = [
        (i, c) for i, c in enumerate(snapshot.cells) if c in ps.programs
    ]
    out = list(snapshot.cells)
    for i, _ in instances:
        out[i] = ps.empty_id
    pendings = [
        run_program(ps.programs[c], snapshot, snapshot.position(i), c)
        for i, c in instances
    ]
    for (i, _), pending in zip(instances, pendings):
        commit(out, snapshot, i, pending, ps.empty_id)
    return Grid(snapshot.width, snapshot.height, tuple(out))


def commit(out: list[int], snapshot: Grid, origin_index: int, pending: PendingInstance, empty_id: int) -> None:
    """Write one pending instance into the output cells, respecting occupancy."""
    if pending.current_type == empty_id:
        return
    j = snapshot.index(pending.current_pos)
    if out[j] == empty_id:
        out[j] = pending.current_type
    elif out[origin_index] == empty_id:
        out[origin_index] = pending.current_type
    # otherwise the instance is dropped
