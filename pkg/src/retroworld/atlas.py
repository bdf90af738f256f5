"""Per-cell template matching between frame images and symbolic grids.

Replaces the neural sprite-dictionary pipeline with a deterministic
tokenizer: each cell of a frame is matched (after optional background
subtraction) against a fixed atlas of cell-sized sprite bitmaps by per-pixel
L1 distance. The renderer composites sprites back over the background so the
pixel-space prediction error is computable for symbolic predictions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .grid import Grid, GridError

ATLAS_FORMAT_VERSION = 1


class AtlasError(ValueError):
    pass


@dataclass(frozen=True)
class SpriteAtlas:
    """Cell-sized RGB bitmaps per sprite id, plus an optional background."""

    cell_width: int
    cell_height: int
    names: tuple[str, ...]
    sprites: tuple[np.ndarray, ...]  # each (cell_height, cell_width, 3) uint8
    background: np.ndarray | None = None  # full frame, uint8

    def __post_init__(self) -> None:
        if len(self.sprites) != len(self.names):
            raise AtlasError("one bitmap per sprite name required")
        for i, s in enumerate(self.sprites):
            if s.shape != (self.cell_height, self.cell_width, 3) or s.dtype != np.uint8:
                raise AtlasError(f"sprite {i} bitmap has wrong shape or dtype")
        if self.background is not None:
            bh, bw, ch = self.background.shape
            if ch != 3 or bw % self.cell_width or bh % self.cell_height:
                raise AtlasError("background does not tile into the cell lattice")


def tokenize_frame(img: np.ndarray, atlas: SpriteAtlas) -> Grid:
    """Match each cell of `img` to the closest atlas sprite by L1 distance.

    Ties break toward the lowest sprite id.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise GridError("expected an RGB image array")
    H, W, _ = img.shape
    cw, ch = atlas.cell_width, atlas.cell_height
    if H % ch or W % cw:
        raise GridError(f"image {W}x{H} does not divide into {cw}x{ch} cells")
    if atlas.background is not None:
        if atlas.background.shape != img.shape:
            raise GridError("image dimensions do not match the atlas background")
        residual = np.clip(img.astype(np.int64) - atlas.background.astype(np.int64), 0, None)
    else:
        residual = img.astype(np.int64)
    h, w = H // ch, W // cw
    # (h, w, ch, cw, 3) cell view
    cells = residual.reshape(h, ch, w, cw, 3).transpose(0, 2, 1, 3, 4)
    stack = np.stack([s.astype(np.int64) for s in atlas.sprites])  # (l, ch, cw, 3)
    # distances: (h, w, l)
    dists = np.abs(cells[:, :, None] - stack[None, None]).sum(axis=(3, 4, 5))
    ids = dists.argmin(axis=2)  # argmin picks the lowest id on ties
    return Grid(w, h, tuple(int(i) for i in ids.reshape(-1)))


def render_grid(grid: Grid, atlas: SpriteAtlas) -> np.ndarray:
    """Composite sprite bitmaps over the background (additive, clamped)."""
    cw, ch = atlas.cell_width, atlas.cell_height
    H, W = grid.height * ch, grid.width * cw
    if atlas.background is not None:
        if atlas.background.shape != (H, W, 3):
            raise GridError("grid dimensions do not match the atlas background")
        out = atlas.background.astype(np.int64).copy()
    else:
        out = np.zeros((H, W, 3), dtype=np.int64)
    for i, sprite in enumerate(grid.cells):
        if sprite >= len(atlas.sprites):
            raise GridError(f"grid references sprite id {sprite} missing from the atlas")
        r, c = divmod(i, grid.width)
        out[r * ch : (r + 1) * ch, c * cw : (c + 1) * cw] += atlas.sprites[sprite]
    return np.clip(out, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Directory format: atlas.json + PNG files.


def save_atlas(atlas: SpriteAtlas, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": ATLAS_FORMAT_VERSION,
        "cell_width": atlas.cell_width,
        "cell_height": atlas.cell_height,
        "sprites": [f"sprite_{i:03d}.png" for i in range(len(atlas.sprites))],
        "names": list(atlas.names),
        "background": "background.png" if atlas.background is not None else None,
    }
    (directory / "atlas.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for fname, bitmap in zip(meta["sprites"], atlas.sprites):
        Image.fromarray(bitmap).save(directory / fname)
    if atlas.background is not None:
        Image.fromarray(atlas.background).save(directory / "background.png")


def load_atlas(directory: str | Path) -> SpriteAtlas:
    directory = Path(directory)
    meta_path = directory / "atlas.json"
    if not meta_path.is_file():
        raise AtlasError(f"missing atlas.json in {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    expected = {"version", "cell_width", "cell_height", "sprites", "names", "background"}
    unknown = set(meta) - expected
    if unknown:
        raise AtlasError(f"unknown atlas keys: {sorted(unknown)}")
    if meta.get("version") != ATLAS_FORMAT_VERSION:
        raise AtlasError(f"unsupported atlas version: {meta.get('version')!r}")
    sprites = tuple(
        np.asarray(Image.open(directory / fname).convert("RGB"), dtype=np.uint8)
        for fname in meta["sprites"]
    )
    background = None
    if meta["background"] is not None:
        background = np.asarray(
            Image.open(directory / meta["background"]).convert("RGB"), dtype=np.uint8
        )
    return SpriteAtlas(
        cell_width=int(meta["cell_width"]),
        cell_height=int(meta["cell_height"]),
        names=tuple(meta["names"]),
        sprites=sprites,
        background=background,
    )


def synthetic_atlas(
    names: Sequence[str],
    empty_id: int = 0,
    cell_size: int = 8,
    with_background: bool = False,
    frame_cells: tuple[int, int] = (8, 8),
) -> SpriteAtlas:
    """Deterministic atlas with pairwise-distinct sprites for fixtures/tests.

    The empty sprite is all-zero; every other sprite gets a distinct solid
    color well separated in L1, leaving room for additive compositing.
    """
    palette = [
        (120, 40, 40),
        (40, 120, 40),
        (40, 40, 120),
        (120, 120, 0),
        (0, 120, 120),
        (120, 0, 120),
        (90, 90, 90),
        (120, 70, 20),
    ]
    sprites = []
    ci = 0
    for i, _ in enumerate(names):
        bitmap = np.zeros((cell_size, cell_size, 3), dtype=np.uint8)
        if i != empty_id:
            color = palette[ci % len(palette)]
            ci += 1
            bitmap[:, :] = color
            # distinct corner mark avoids palette wrap collisions
            bitmap[0, 0] = ((ci * 17) % 120, (ci * 29) % 120, (ci * 43) % 120)
        sprites.append(bitmap)
    background = None
    if with_background:
        w, h = frame_cells
        background = np.zeros((h * cell_size, w * cell_size, 3), dtype=np.uint8)
        background[:, :] = (10, 10, 20)
    return SpriteAtlas(
        cell_width=cell_size,
        cell_height=cell_size,
        names=tuple(names),
        sprites=tuple(sprites),
        background=background,
    )
