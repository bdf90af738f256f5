"""Playground service: serves a learned world model as a live grid game.

The human drives the exogenous player sprite over a WebSocket; programmed
sprites advance via the interpreter on a fixed tick. One logical event loop
owns each session's state; snapshots are immutable copies pushed after every
tick.

WebSocket protocol (UTF-8 JSON on /ws):
  client -> server: {"type": "action", "dir": "up|down|left|right"}
                    {"type": "reset"}
                    {"type": "state"}
  server -> client: {"type": "snapshot", "tick": N, "width": w, "height": h,
                     "cells": [...], "sprites": [names]}
  plus {"type": "ack"} replies to actions and {"type": "error", ...} for
  malformed messages.
"""
from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .grid import Grid, Position
from .interpreter import ProgramSet, step

_DIRECTIONS = {
    "up": (0, -1),
    "down": (0, 1),
    "left": (-1, 0),
    "right": (1, 0),
}


class SessionError(ValueError):
    pass


@dataclass(frozen=True)
class SessionState:
    grid: Grid
    tick_count: int
    ps: ProgramSet
    player_id: int
    player_pos: Position
    tick_ms: int
    pending: str | None = None
    status: str = "running"


def new_session(initial: Grid, ps: ProgramSet, player_id: int, tick_ms: int) -> SessionState:
    positions = initial.find(player_id)
    if not positions:
        raise SessionError("no player sprite on the initial grid")
    return SessionState(
        grid=initial,
        tick_count=0,
        ps=ps,
        player_id=player_id,
        player_pos=positions[0],
        tick_ms=tick_ms,
    )


def tick(state: SessionState) -> SessionState:
    """One tick: move the player per the pending action, advance programmed
    sprites, re-overlay the player, clear the action."""
    if state.status != "running":
        return state
    grid = state.grid
    pos = state.player_pos
    if state.pending is not None:
        dc, dr = _DIRECTIONS[state.pending]
        nxt = Position(pos.col + dc, pos.row + dr)
        if grid.in_bounds(nxt):
            grid = grid.with_cell(pos, state.ps.empty_id).with_cell(nxt, state.player_id)
            pos = nxt
    grid = step(grid, state.ps)
    if grid.get(pos) != state.player_id:
        grid = grid.with_cell(pos, state.player_id)
    return replace(
        state, grid=grid, player_pos=pos, pending=None, tick_count=state.tick_count + 1
    )


def snapshot(state: SessionState, sprites: tuple[str, ...]) -> dict:
    return {
        "type": "snapshot",
        "tick": state.tick_count,
        "width": state.grid.width,
        "height": state.grid.height,
        "cells": list(state.grid.cells),
        "sprites": list(sprites),
    }


def handle_message(
    state: SessionState,
    msg: object,
    initial: SessionState,
    sprites: tuple[str, ...],
) -> tuple[SessionState, dict]:
    """Apply one client message; malformed messages leave the state unchanged."""
    if not isinstance(msg, dict) or "type" not in msg:
        return state, {"type": "error", "message": "message must be an object with a 'type'"}
    kind = msg["type"]
    if kind == "action":
        direction = msg.get("dir")
        if direction not in _DIRECTIONS:
            return state, {"type": "error", "message": f"unknown direction: {direction!r}"}
        # two actions within one tick: last one wins
        return replace(state, pending=direction), {"type": "ack"}
    if kind == "reset":
        return initial, snapshot(initial, sprites)
    if kind == "state":
        return state, snapshot(state, sprites)
    return state, {"type": "error", "message": f"unknown message type: {kind!r}"}


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>retroworld</title></head>
<body><p>No UI bundle found. Build the frontend (<code>npm run build</code> in
<code>frontend/</code>) and restart with <code>--ui frontend/dist</code>, or
connect a WebSocket client to <code>/ws</code>.</p></body></html>
"""


def build_app(
    initial: Grid,
    ps: ProgramSet,
    sprites: tuple[str, ...],
    player_id: int,
    tick_ms: int = 250,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI()
    initial_state = new_session(initial, ps, player_id, tick_ms)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok"}

    @app.websocket("/ws")
    async def ws(websocket: WebSocket) -> None:
        await websocket.accept()
        holder = {"state": initial_state}
        await websocket.send_json(snapshot(holder["state"], sprites))
        period = tick_ms / 1000.0

        async def ticker() -> None:
            loop = asyncio.get_running_loop()
            next_at = loop.time() + period
            while True:
                await asyncio.sleep(max(0.0, next_at - loop.time()))
                next_at += period
                holder["state"] = tick(holder["state"])
                await websocket.send_json(snapshot(holder["state"], sprites))

        task = asyncio.create_task(ticker())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_json({"type": "error", "message": "invalid JSON"})
                    continue
                holder["state"], reply = handle_message(
                    holder["state"], msg, initial_state, sprites
                )
                await websocket.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            task.cancel()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(_FALLBACK_PAGE)

    return app
