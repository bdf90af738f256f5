"""Rule DSL for per-sprite behavior: syntax tree, parser, and pretty-printer.

Programs are ordered lists of single-condition if-then rules:

    IF (exists_in_map(PACMAN)) THEN follow_entity(PACMAN)
    IF (is_neighboring(PACMAN)) THEN change_to_entity(EMPTY)

Keywords are case-insensitive and whitespace-insensitive; condition and
action names may be written with underscores or spaces; `#` starts a line
comment. Entities are sprite names or bare integer ids.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from .grid import Position


class Direction(Enum):
    UP = "UP"
    DOWN = "DOWN"
    LEFT = "LEFT"
    RIGHT = "RIGHT"


@dataclass(frozen=True)
class ExistsInMap:
    entity: int


@dataclass(frozen=True)
class Neighboring:
    entity: int


@dataclass(frozen=True)
class Neighbours:
    entity1: int
    entity2: int


@dataclass(frozen=True)
class ExistsInPosition:
    pos: Position


Condition = Union[ExistsInMap, Neighboring, Neighbours, ExistsInPosition]


@dataclass(frozen=True)
class FollowEntity:
    entity: int


@dataclass(frozen=True)
class FollowDirection:
    direction: Direction


@dataclass(frozen=True)
class ChangeToEntity:
    entity: int


@dataclass(frozen=True)
class FollowTargetLocation:
    pos: Position


Action = Union[FollowEntity, FollowDirection, ChangeToEntity, FollowTargetLocation]


@dataclass(frozen=True)
class Rule:
    condition: Condition
    action: Action


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...] = ()

    def __len__(self) -> int:
        return len(self.rules)

    def with_rule(self, rule: Rule) -> "Program":
        return Program(self.rules + (rule,))

    def without_rule(self, index: int) -> "Program":
        return Program(self.rules[:index] + self.rules[index + 1 :])


EMPTY_PROGRAM = Program()


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|-?\d+|[(),]|\S")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | "int" | "punct" | "end"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.split("#", 1)[0]
        for m in _TOKEN_RE.finditer(line):
            t = m.group(0)
            col = m.start() + 1
            if _IDENT_RE.match(t):
                kind = "ident"
            elif t.lstrip("-").isdigit():
                kind = "int"
            elif t in "(),":
                kind = "punct"
            else:
                raise ParseError(f"unexpected character {t!r}", lineno, col)
            tokens.append(_Token(kind, t, lineno, col))
    n = text.count("\n") + 1
    tokens.append(_Token("end", "", n, len(text.split("\n")[-1]) + 1))
    return tokens


# Accepted spellings, normalized to the canonical constructor.
_CONDITION_ALIASES = {
    "exists_in_map": "exists_in_map",
    "neighboring": "neighboring",
    "is_neighboring": "neighboring",
    "neighbours": "neighbours",
    "neighbors": "neighbours",
    "neighboring_entities": "neighbours",
    "exists_in_position": "exists_in_position",
}
_ACTION_ALIASES = {
    "follow_entity": "follow_entity",
    "follow_direction": "follow_direction",
    "change_to_entity": "change_to_entity",
    "follow_target_location": "follow_target_location",
    "follow_target": "follow_target_location",
}


class _Parser:
    def __init__(
        self,
        text: str,
        dictionary: Sequence[str],
        width: int | None = None,
        height: int | None = None,
    ):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.dictionary = list(dictionary)
        self.width = width
        self.height = height

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "end":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect_punct(self, text: str) -> None:
        tok = self.advance()
        if tok.kind != "punct" or tok.text != text:
            raise self.error(f"expected {text!r}, got {tok.text!r}", tok)

    def expect_keyword(self, word: str) -> None:
        tok = self.advance()
        if tok.kind != "ident" or tok.text.lower() != word:
            raise self.error(f"expected {word.upper()!r}, got {tok.text!r}", tok)

    def parse_program(self) -> Program:
        rules = []
        while self.peek().kind != "end":
            rules.append(self.parse_rule())
        return Program(tuple(rules))

    def parse_rule(self) -> Rule:
        self.expect_keyword("if")
        self.expect_punct("(")
        condition = self.parse_condition()
        self.expect_punct(")")
        self.expect_keyword("then")
        action = self.parse_action()
        return Rule(condition, action)

    def _call_name(self) -> tuple[str, _Token]:
        # Condition/action names may be split across several identifier
        # tokens ("exists in map"); join with underscores until '('.
        first = self.advance()
        if first.kind != "ident":
            raise self.error(f"expected a condition or action name, got {first.text!r}", first)
        words = [first.text.lower()]
        while self.peek().kind == "ident":
            words.append(self.advance().text.lower())
        return "_".join(words), first

    def parse_condition(self) -> Condition:
        name, tok = self._call_name()
        canon = _CONDITION_ALIASES.get(name)
        if canon is None:
            raise self.error(f"unknown condition {name!r}", tok)
        self.expect_punct("(")
        if canon == "exists_in_map":
            cond: Condition = ExistsInMap(self.parse_entity())
        elif canon == "neighboring":
            cond = Neighboring(self.parse_entity())
        elif canon == "neighbours":
            e1 = self.parse_entity()
            self.expect_punct(",")
            cond = Neighbours(e1, self.parse_entity())
        else:
            cond = ExistsInPosition(self.parse_position())
        self.expect_punct(")")
        return cond

    def parse_action(self) -> Action:
        name, tok = self._call_name()
        canon = _ACTION_ALIASES.get(name)
        if canon is None:
            raise self.error(f"unknown action {name!r}", tok)
        self.expect_punct("(")
        if canon == "follow_entity":
            act: Action = FollowEntity(self.parse_entity())
        elif canon == "follow_direction":
            act = FollowDirection(self.parse_direction())
        elif canon == "change_to_entity":
            act = ChangeToEntity(self.parse_entity())
        else:
            act = FollowTargetLocation(self.parse_position())
        self.expect_punct(")")
        return act

    def parse_entity(self) -> int:
        tok = self.advance()
        if tok.kind == "int":
            entity = int(tok.text)
            if not (0 <= entity < len(self.dictionary)):
                raise self.error(f"sprite id {entity} out of range", tok)
            return entity
        if tok.kind == "ident":
            try:
                return self.dictionary.index(tok.text)
            except ValueError:
                raise self.error(f"unknown sprite name {tok.text!r}", tok) from None
        raise self.error(f"expected a sprite name or id, got {tok.text!r}", tok)

    def parse_direction(self) -> Direction:
        tok = self.advance()
        if tok.kind == "ident":
            try:
                return Direction[tok.text.upper()]
            except KeyError:
                pass
        raise self.error(f"expected UP, DOWN, LEFT or RIGHT, got {tok.text!r}", tok)

    def parse_int(self) -> int:
        tok = self.advance()
        if tok.kind != "int":
            raise self.error(f"expected an integer, got {tok.text!r}", tok)
        return int(tok.text)

    def parse_position(self) -> Position:
        tok = self.peek()
        col = self.parse_int()
        self.expect_punct(",")
        row = self.parse_int()
        if col < 0 or row < 0:
            raise self.error("positions must be non-negative", tok)
        if self.width is not None and col >= self.width:
            raise self.error(f"column {col} out of range [0,{self.width})", tok)
        if self.height is not None and row >= self.height:
            raise self.error(f"row {row} out of range [0,{self.height})", tok)
        return Position(col, row)


def parse_program(
    text: str,
    dictionary: Sequence[str],
    width: int | None = None,
    height: int | None = None,
) -> Program:
    """Parse program text against a sprite-name table.

    `width`/`height`, when given, bound the positions accepted by
    `exists_in_position` and `follow_target_location`.
    """
    return _Parser(text, dictionary, width, height).parse_program()


def _entity_text(entity: int, dictionary: Sequence[str]) -> str:
    # Names render only when they re-resolve to the same id; otherwise the
    # bare integer keeps print/parse a strict round trip.
    if 0 <= entity < len(dictionary):
        name = dictionary[entity]
        if _IDENT_RE.match(name) and list(dictionary).index(name) == entity:
            return name
    return str(entity)


def _condition_text(cond: Condition, dictionary: Sequence[str]) -> str:
    if isinstance(cond, ExistsInMap):
        return f"exists_in_map({_entity_text(cond.entity, dictionary)})"
    if isinstance(cond, Neighboring):
        return f"neighboring({_entity_text(cond.entity, dictionary)})"
    if isinstance(cond, Neighbours):
        return (
            f"neighbours({_entity_text(cond.entity1, dictionary)},"
            f" {_entity_text(cond.entity2, dictionary)})"
        )
    return f"exists_in_position({cond.pos.col}, {cond.pos.row})"


def _action_text(action: Action, dictionary: Sequence[str]) -> str:
    if isinstance(action, FollowEntity):
        return f"follow_entity({_entity_text(action.entity, dictionary)})"
    if isinstance(action, FollowDirection):
        return f"follow_direction({action.direction.value})"
    if isinstance(action, ChangeToEntity):
        return f"change_to_entity({_entity_text(action.entity, dictionary)})"
    return f"follow_target_location({action.pos.col}, {action.pos.row})"


def print_program(program: Program, dictionary: Sequence[str]) -> str:
    """Canonical text for a program; `parse_program(print_program(p)) == p`."""
    return "\n".join(
        f"IF ({_condition_text(r.condition, dictionary)})"
        f" THEN {_action_text(r.action, dictionary)}"
        for r in program.rules
    )
