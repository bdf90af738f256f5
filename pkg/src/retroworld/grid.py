"""Symbolic grid core: grids of sprite ids, traces, and the cell-mismatch distance."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

TRACE_FORMAT_VERSION = 1


class GridError(ValueError):
    """Malformed grid or an operation over incompatible grids."""


class TraceFormatError(ValueError):
    """Trace data that does not match the trace file schema."""


class Position(NamedTuple):
    """Cell coordinate; origin top-left, row grows downward."""

    col: int
    row: int

    def manhattan(self, other: "Position") -> int:
        return abs(self.col - other.col) + abs(self.row - other.row)

    def neighbors4(self, width: int, height: int) -> list["Position"]:
        out = []
        for dc, dr in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            c, r = self.col + dc, self.row + dr
            if 0 <= c < width and 0 <= r < height:
                out.append(Position(c, r))
        return out


@dataclass(frozen=True)
class Grid:
    """Row-major matrix of sprite ids, one sprite per cell."""

    width: int
    height: int
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise GridError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        if len(self.cells) != self.width * self.height:
            raise GridError(
                f"expected {self.width * self.height} cells, got {len(self.cells)}"
            )
        if any((not isinstance(c, int)) or c < 0 for c in self.cells):
            raise GridError("cells must be non-negative integers")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "Grid":
        rows = [list(r) for r in rows]
        if not rows or not rows[0]:
            raise GridError("grid rows must be non-empty")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise GridError("ragged grid rows")
        return cls(width, len(rows), tuple(c for r in rows for c in r))

    def to_rows(self) -> list[list[int]]:
        w = self.width
        return [list(self.cells[r * w : (r + 1) * w]) for r in range(self.height)]

    def index(self, pos: Position) -> int:
        return pos.row * self.width + pos.col

    def position(self, index: int) -> Position:
        return Position(index % self.width, index // self.width)

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.col < self.width and 0 <= pos.row < self.height

    def get(self, pos: Position) -> int:
        if not self.in_bounds(pos):
            raise GridError(f"position {pos} out of bounds for {self.width}x{self.height} grid")
        return self.cells[self.index(pos)]

    def find(self, sprite: int) -> list[Position]:
        """Positions holding `sprite`, in row-major order."""
        return [self.position(i) for i, c in enumerate(self.cells) if c == sprite]

    def contains(self, sprite: int) -> bool:
        return sprite in self.cells

    def with_cell(self, pos: Position, sprite: int) -> "Grid":
        i = self.index(pos)
        return Grid(self.width, self.height, self.cells[:i] + (sprite,) + self.cells[i + 1 :])


def grid_distance(a: Grid, b: Grid) -> int:
    """Number of cells whose sprite ids differ (Hamming distance)."""
    if a.width != b.width or a.height != b.height:
        raise GridError(
            f"incompatible grids: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    return sum(1 for x, y in zip(a.cells, b.cells) if x != y)


def overlay_exogenous(pred: Grid, truth: Grid, exogenous_ids: frozenset[int]) -> Grid:
    """Synchronize exogenous cells of a prediction with the ground truth.

    Any cell that holds an exogenous sprite in either grid takes the ground
    truth value; exogenous sprites (e.g. the player) are supplied externally
    and are never predicted.
    """
    if pred.width != truth.width or pred.height != truth.height:
        raise GridError("incompatible grids for exogenous overlay")
    cells = tuple(
        t if (t in exogenous_ids or p in exogenous_ids) else p
        for p, t in zip(pred.cells, truth.cells)
    )
    return Grid(pred.width, pred.height, cells)


@dataclass(frozen=True)
class Trace:
    """Episodes of consecutive grids plus sprite dictionary metadata."""

    width: int
    height: int
    dictionary: tuple[str, ...]
    empty_id: int
    exogenous_ids: frozenset[int]
    episodes: tuple[tuple[Grid, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.dictionary)
        if n == 0:
            raise TraceFormatError("sprite dictionary is empty")
        if not (0 <= self.empty_id < n):
            raise TraceFormatError(f"empty_id {self.empty_id} out of range")
        for e in self.exogenous_ids:
            if not (0 <= e < n):
                raise TraceFormatError(f"exogenous id {e} out of range")
        for ei, ep in enumerate(self.episodes):
            for fi, g in enumerate(ep):
                if g.width != self.width or g.height != self.height:
                    raise TraceFormatError(
                        f"episode {ei} frame {fi} has wrong dimensions"
                    )
                if any(c >= n for c in g.cells):
                    raise TraceFormatError(
                        f"episode {ei} frame {fi} references unknown sprite id"
                    )

    @property
    def n_sprites(self) -> int:
        return len(self.dictionary)

    def name_to_id(self, name: str) -> int:
        try:
            return self.dictionary.index(name)
        except ValueError:
            raise TraceFormatError(f"unknown sprite name: {name!r}") from None

    def to_json_dict(self) -> dict:
        return {
            "version": TRACE_FORMAT_VERSION,
            "width": self.width,
            "height": self.height,
            "sprites": list(self.dictionary),
            "empty_id": self.empty_id,
            "exogenous_ids": sorted(self.exogenous_ids),
            "episodes": [[g.to_rows() for g in ep] for ep in self.episodes],
        }

    @classmethod
    def from_json_dict(cls, data: object) -> "Trace":
        if not isinstance(data, dict):
            raise TraceFormatError("trace file must contain a JSON object")
        expected = {
            "version",
            "width",
            "height",
            "sprites",
            "empty_id",
            "exogenous_ids",
            "episodes",
        }
        unknown = set(data) - expected
        if unknown:
            raise TraceFormatError(f"unknown trace keys: {sorted(unknown)}")
        missing = expected - set(data)
        if missing:
            raise TraceFormatError(f"missing trace keys: {sorted(missing)}")
        if data["version"] != TRACE_FORMAT_VERSION:
            raise TraceFormatError(f"unsupported trace version: {data['version']!r}")
        sprites = data["sprites"]
        if not isinstance(sprites, list) or not all(isinstance(s, str) for s in sprites):
            raise TraceFormatError("sprites must be an array of names")
        try:
            episodes = tuple(
                tuple(Grid.from_rows(rows) for rows in ep) for ep in data["episodes"]
            )
        except (GridError, TypeError) as exc:
            raise TraceFormatError(f"malformed episode grids: {exc}") from exc
        try:
            return cls(
                width=int(data["width"]),
                height=int(data["height"]),
                dictionary=tuple(sprites),
                empty_id=int(data["empty_id"]),
                exogenous_ids=frozenset(int(e) for e in data["exogenous_ids"]),
                episodes=episodes,
            )
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(str(exc)) from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Trace":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Trace":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def occurrence_indices(trace: Trace, sprite: int) -> list[tuple[int, int]]:
    """(episode, frame) pairs whose grid contains `sprite`.

    Episode-final frames are excluded: they have no successor to predict.
    """
    if not (0 <= sprite < trace.n_sprites):
        raise TraceFormatError(f"sprite id {sprite} out of range")
    out = []
    for ei, ep in enumerate(trace.episodes):
        for fi in range(len(ep) - 1):
            if ep[fi].contains(sprite):
                out.append((ei, fi))
    return out
