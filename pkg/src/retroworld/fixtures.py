"""Deterministic mini-game simulators with known generating rules.

Both worlds express their dynamics as reference programs in the interpreter's
own semantics, so the emitted trace is exactly reproducible: a teacher-forced
rollout of the reference program set has zero grid Hamming error. The player
sprite performs a seeded pseudo-random legal walk and is exogenous.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .dsl import (
    ChangeToEntity,
    Direction,
    ExistsInMap,
    ExistsInPosition,
    FollowDirection,
    FollowEntity,
    Neighboring,
    Program,
    Rule,
)
from .grid import Grid, Position, Trace
from .interpreter import ProgramSet, step


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class FixtureSpec:
    domain: str  # "chase" | "scroll"
    width: int = 8
    height: int = 8
    seed: int = 0
    episode_count: int = 4
    episode_length: int = 60
    adversarial: bool = False  # chase only: add one random-walk sprite

    def __post_init__(self) -> None:
        if self.domain not in ("chase", "scroll"):
            raise FixtureError(f"unknown fixture domain {self.domain!r}")
        if self.width < 4 or self.height < 4:
            raise FixtureError("fixture grids must be at least 4x4")
        if self.episode_count < 1 or self.episode_length < 2:
            raise FixtureError("need at least one episode of two frames")
        if self.adversarial and self.domain != "chase":
            raise FixtureError("the adversarial sprite exists only in the chase world")


CHASE_NAMES = ("EMPTY", "PLAYER", "CHASER", "PELLET")
CHASE_ADVERSARIAL_NAMES = CHASE_NAMES + ("GHOST",)
SCROLL_NAMES = ("EMPTY", "PLAYER", "FUEL", "PELLET")


def generate_fixture(spec: FixtureSpec) -> tuple[Trace, ProgramSet]:
    if spec.domain == "chase":
        return generate_chase_world(spec)
    return generate_scroll_world(spec)


def _random_free_walk(
    rng: random.Random, pos: Position, before: Grid, after: Grid, empty_id: int
) -> Position:
    """One legal random step: stay, or move to a 4-neighbor that is empty both
    before and after the programmed sprites advanced."""
    options = [pos]
    for n in pos.neighbors4(before.width, before.height):
        if before.get(n) == empty_id and after.get(n) == empty_id:
            options.append(n)
    return options[rng.randrange(len(options))]


def _advance(
    rng: random.Random,
    grid: Grid,
    ps: ProgramSet,
    player_pos: Position,
    player_id: int,
    empty_id: int,
    ghost_pos: Position | None = None,
    ghost_id: int | None = None,
) -> tuple[Grid, Position, Position | None]:
    """Programmed sprites react to the snapshot; the player (and optional
    random ghost) then moves onto a free cell of the stepped grid."""
    nxt = step(grid, ps)
    cells = list(nxt.cells)
    new_player = _random_free_walk(rng, player_pos, grid, nxt, empty_id)
    cells[grid.index(player_pos)] = empty_id
    cells[grid.index(new_player)] = player_id
    new_ghost = ghost_pos
    if ghost_pos is not None and ghost_id is not None:
        staged = Grid(grid.width, grid.height, tuple(cells))
        new_ghost = _random_free_walk(rng, ghost_pos, staged, staged, empty_id)
        cells[grid.index(ghost_pos)] = empty_id
        cells[grid.index(new_ghost)] = ghost_id
    return Grid(grid.width, grid.height, tuple(cells)), new_player, new_ghost


def _random_empty_cell(rng: random.Random, occupied: set[Position], width: int, height: int) -> Position:
    while True:
        p = Position(rng.randrange(width), rng.randrange(height))
        if p not in occupied:
            return p


def generate_chase_world(spec: FixtureSpec) -> tuple[Trace, ProgramSet]:
    """8x8 arena: a chaser greedily pursues the player; a power pellet next to
    the player turns into the player sprite when touched."""
    names = CHASE_ADVERSARIAL_NAMES if spec.adversarial else CHASE_NAMES
    empty, player, chaser, pellet = 0, 1, 2, 3
    ghost = 4 if spec.adversarial else None
    rng = random.Random(spec.seed)
    ps = ProgramSet(
        {
            chaser: Program((Rule(ExistsInMap(player), FollowEntity(player)),)),
            pellet: Program((Rule(Neighboring(player), ChangeToEntity(player)),)),
        },
        empty_id=empty,
        exogenous_ids=frozenset({player}),
    )
    episodes = []
    for _ in range(spec.episode_count):
        w, h = spec.width, spec.height
        player_pos = Position(rng.randrange(w), rng.randrange(h))
        pellet_options = player_pos.neighbors4(w, h)
        pellet_pos = pellet_options[rng.randrange(len(pellet_options))]
        # Far from the player and off the pellet so the chaser's first step
        # cannot land on a live pellet.
        while True:
            chaser_pos = _random_empty_cell(rng, {player_pos, pellet_pos}, w, h)
            if chaser_pos.manhattan(player_pos) >= 4 and chaser_pos.manhattan(pellet_pos) >= 3:
                break
        occupied = {player_pos, pellet_pos, chaser_pos}
        ghost_pos = None
        if ghost is not None:
            while True:
                ghost_pos = _random_empty_cell(rng, occupied, w, h)
                if ghost_pos.manhattan(player_pos) >= 3:
                    break
        cells = [empty] * (w * h)
        cells[player_pos.row * w + player_pos.col] = player
        cells[pellet_pos.row * w + pellet_pos.col] = pellet
        cells[chaser_pos.row * w + chaser_pos.col] = chaser
        if ghost_pos is not None:
            cells[ghost_pos.row * w + ghost_pos.col] = ghost
        grid = Grid(w, h, tuple(cells))
        frames = [grid]
        for _ in range(spec.episode_length - 1):
            grid, player_pos, ghost_pos = _advance(
                rng, grid, ps, player_pos, player, empty, ghost_pos, ghost
            )
            frames.append(grid)
        episodes.append(tuple(frames))
    trace = Trace(
        width=spec.width,
        height=spec.height,
        dictionary=names,
        empty_id=empty,
        exogenous_ids=frozenset({player}),
        episodes=tuple(episodes),
    )
    return trace, ps


def generate_scroll_world(spec: FixtureSpec) -> tuple[Trace, ProgramSet]:
    """Vertical scroller: pellets drift up one cell per frame and vanish at
    the top border; a fuel can disappears when a pellet touches it."""
    empty, player, fuel, pellet = 0, 1, 2, 3
    w, h = spec.width, spec.height
    left_col = min(2, w - 2)
    right_col = min(5, w - 1)
    pellet_rules = [Rule(ExistsInMap(player), FollowDirection(Direction.UP))]
    for col in sorted({left_col, right_col}):
        pellet_rules.append(
            Rule(ExistsInPosition(Position(col, 0)), ChangeToEntity(empty))
        )
    ps = ProgramSet(
        {
            fuel: Program((Rule(Neighboring(pellet), ChangeToEntity(empty)),)),
            pellet: Program(tuple(pellet_rules)),
        },
        empty_id=empty,
        exogenous_ids=frozenset({player}),
    )
    rng = random.Random(spec.seed)
    episodes = []
    for _ in range(spec.episode_count):
        cells = [empty] * (w * h)
        # Staggered pellet columns keep several pellets alive whenever one
        # vanishes at the top, so over-general vanish rules stay penalized.
        pellet_cells = [Position(left_col, r) for r in (2, 4, 6) if r < h - 1]
        pellet_cells += [Position(right_col, r) for r in (3, 5, 7) if r < h - 1]
        for p in pellet_cells:
            cells[p.row * w + p.col] = pellet
        # Fuel starts adjacent to a pellet and disappears on the first step.
        fuel_pos = Position(left_col + 1, 4)
        cells[fuel_pos.row * w + fuel_pos.col] = fuel
        player_pos = Position(rng.randrange(w), h - 1)
        while cells[player_pos.row * w + player_pos.col] != empty:
            player_pos = Position(rng.randrange(w), h - 1)
        cells[player_pos.row * w + player_pos.col] = player
        grid = Grid(w, h, tuple(cells))
        frames = [grid]
        for _ in range(spec.episode_length - 1):
            grid, player_pos, _ = _advance(rng, grid, ps, player_pos, player, empty)
            frames.append(grid)
        episodes.append(tuple(frames))
    trace = Trace(
        width=w,
        height=h,
        dictionary=SCROLL_NAMES,
        empty_id=empty,
        exogenous_ids=frozenset({player}),
        episodes=tuple(episodes),
    )
    return trace, ps
