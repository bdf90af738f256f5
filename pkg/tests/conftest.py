"""Shared fixtures and random-object builders for the test suite."""
from __future__ import annotations

import random

import pytest
from hypothesis import strategies as st

from retroworld import (
    ChangeToEntity,
    Direction,
    ExistsInMap,
    ExistsInPosition,
    FollowDirection,
    FollowEntity,
    FollowTargetLocation,
    Grid,
    Neighboring,
    Neighbours,
    Position,
    Program,
    Rule,
    SynthesisConfig,
    synthesize_all,
)
from retroworld.fixtures import FixtureSpec, generate_fixture

# Pinned seeds: each learned model is validated against a held-out trace of
# the same spec with a different seed.
CHASE_SEED = 7
CHASE_HOLDOUT_SEED = 8
SCROLL_SEED = 3
SCROLL_HOLDOUT_SEED = 4
ADVERSARIAL_SEED = 0


# ---------------------------------------------------------------------------
# Random builders (seeded random.Random; for oracle loops and bulk checks)


def random_grid(rng: random.Random, width: int, height: int, n_sprites: int) -> Grid:
    return Grid(
        width, height, tuple(rng.randrange(n_sprites) for _ in range(width * height))
    )


def random_position(rng: random.Random, width: int, height: int) -> Position:
    return Position(rng.randrange(width), rng.randrange(height))


def random_condition(rng: random.Random, n_sprites: int, width: int, height: int):
    k = rng.randrange(4)
    if k == 0:
        return ExistsInMap(rng.randrange(n_sprites))
    if k == 1:
        return Neighboring(rng.randrange(n_sprites))
    if k == 2:
        return Neighbours(rng.randrange(n_sprites), rng.randrange(n_sprites))
    return ExistsInPosition(random_position(rng, width, height))


def random_action(rng: random.Random, n_sprites: int, width: int, height: int):
    k = rng.randrange(4)
    if k == 0:
        return FollowEntity(rng.randrange(n_sprites))
    if k == 1:
        return FollowDirection(rng.choice(list(Direction)))
    if k == 2:
        return ChangeToEntity(rng.randrange(n_sprites))
    return FollowTargetLocation(random_position(rng, width, height))


def random_program(
    rng: random.Random, n_sprites: int, width: int, height: int, max_rules: int = 5
) -> Program:
    n = rng.randrange(max_rules + 1)
    return Program(
        tuple(
            Rule(
                random_condition(rng, n_sprites, width, height),
                random_action(rng, n_sprites, width, height),
            )
            for _ in range(n)
        )
    )


# ---------------------------------------------------------------------------
# Hypothesis strategies


@st.composite
def grid_st(draw, min_side=1, max_side=6, n_sprites=4):
    w = draw(st.integers(min_side, max_side))
    h = draw(st.integers(min_side, max_side))
    cells = draw(
        st.lists(st.integers(0, n_sprites - 1), min_size=w * h, max_size=w * h)
    )
    return Grid(w, h, tuple(cells))


@st.composite
def grid_triple_st(draw, max_side=6, n_sprites=4):
    """Three grids sharing dimensions, for metric-property checks."""
    w = draw(st.integers(1, max_side))
    h = draw(st.integers(1, max_side))
    cell = st.integers(0, n_sprites - 1)
    cells = st.lists(cell, min_size=w * h, max_size=w * h)
    return tuple(Grid(w, h, tuple(draw(cells))) for _ in range(3))


# ---------------------------------------------------------------------------
# Fixture worlds and learned models (session-scoped: synthesis is the
# expensive part and every consumer needs the same artifacts)


@pytest.fixture(scope="session")
def chase_world():
    return generate_fixture(FixtureSpec("chase", seed=CHASE_SEED))


@pytest.fixture(scope="session")
def chase_holdout():
    return generate_fixture(FixtureSpec("chase", seed=CHASE_HOLDOUT_SEED))


@pytest.fixture(scope="session")
def scroll_world():
    return generate_fixture(FixtureSpec("scroll", seed=SCROLL_SEED))


@pytest.fixture(scope="session")
def scroll_holdout():
    return generate_fixture(FixtureSpec("scroll", seed=SCROLL_HOLDOUT_SEED))


@pytest.fixture(scope="session")
def adversarial_world():
    return generate_fixture(FixtureSpec("chase", seed=ADVERSARIAL_SEED, adversarial=True))


def _learn(trace):
    targets = [
        s
        for s in range(trace.n_sprites)
        if s != trace.empty_id and s not in trace.exogenous_ids
    ]
    cfg = SynthesisConfig.for_trace(trace, targets)
    ps, reports = synthesize_all(trace, cfg)
    return cfg, ps, reports


@pytest.fixture(scope="session")
def chase_learned(chase_world):
    trace, _ = chase_world
    return _learn(trace)


@pytest.fixture(scope="session")
def scroll_learned(scroll_world):
    trace, _ = scroll_world
    return _learn(trace)
