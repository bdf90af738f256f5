"""Template-matching tokenizer and grid renderer."""
from __future__ import annotations

import random

import numpy as np
import pytest

from retroworld.atlas import (
    AtlasError,
    SpriteAtlas,
    load_atlas,
    render_grid,
    save_atlas,
    synthetic_atlas,
    tokenize_frame,
)
from retroworld.grid import Grid, GridError

from conftest import random_grid

NAMES = ("EMPTY", "PLAYER", "CHASER", "PELLET")


@pytest.fixture(scope="module")
def atlas():
    return synthetic_atlas(NAMES)


@pytest.fixture(scope="module")
def atlas_bg():
    return synthetic_atlas(NAMES, with_background=True, frame_cells=(8, 8))


class TestAtlasValidation:
    def test_bitmap_count_must_match_names(self):
        bitmap = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(AtlasError):
            SpriteAtlas(8, 8, ("A", "B"), (bitmap,))

    def test_wrong_bitmap_shape_rejected(self):
        bitmap = np.zeros((4, 8, 3), dtype=np.uint8)
        with pytest.raises(AtlasError):
            SpriteAtlas(8, 8, ("A",), (bitmap,))

    def test_background_must_tile(self):
        bitmap = np.zeros((8, 8, 3), dtype=np.uint8)
        bg = np.zeros((20, 16, 3), dtype=np.uint8)
        with pytest.raises(AtlasError):
            SpriteAtlas(8, 8, ("A",), (bitmap,), background=bg)


class TestTokenize:
    def test_exact_composition_recovered(self, atlas):
        g = random_grid(random.Random(0), 8, 8, len(NAMES))
        assert tokenize_frame(render_grid(g, atlas), atlas) == g

    def test_all_background_frame_is_all_empty(self, atlas_bg):
        img = atlas_bg.background.copy()
        g = tokenize_frame(img, atlas_bg)
        assert all(c == 0 for c in g.cells)

    def test_noise_robust(self, atlas):
        rng = np.random.default_rng(1)
        g = random_grid(random.Random(2), 8, 8, len(NAMES))
        img = render_grid(g, atlas).astype(np.int64)
        noisy = np.clip(img + rng.integers(-2, 3, img.shape), 0, 255).astype(np.uint8)
        assert tokenize_frame(noisy, atlas) == g

    def test_translation_consistent(self, atlas):
        # moving the sprite to another cell moves the token identically
        for idx in (0, 13, 63):
            cells = [0] * 64
            cells[idx] = 2
            g = Grid(8, 8, tuple(cells))
            assert tokenize_frame(render_grid(g, atlas), atlas) == g

    def test_round_trip_500_random_grids(self, atlas_bg):
        rng = random.Random(500)
        for _ in range(500):
            g = random_grid(rng, 8, 8, len(NAMES))
            assert tokenize_frame(render_grid(g, atlas_bg), atlas_bg) == g

    def test_non_rgb_rejected(self, atlas):
        with pytest.raises(GridError):
            tokenize_frame(np.zeros((64, 64), dtype=np.uint8), atlas)

    def test_non_tiling_image_rejected(self, atlas):
        with pytest.raises(GridError):
            tokenize_frame(np.zeros((60, 64, 3), dtype=np.uint8), atlas)


class TestRender:
    def test_all_empty_with_background_is_background(self, atlas_bg):
        g = Grid(8, 8, tuple([0] * 64))
        assert np.array_equal(render_grid(g, atlas_bg), atlas_bg.background)

    def test_single_sprite_patch(self, atlas_bg):
        cells = [0] * 64
        cells[9] = 1  # (col 1, row 1)
        g = Grid(8, 8, tuple(cells))
        img = render_grid(g, atlas_bg)
        cs = atlas_bg.cell_width
        patch = img[cs : 2 * cs, cs : 2 * cs]
        expected = np.clip(
            atlas_bg.background[cs : 2 * cs, cs : 2 * cs].astype(np.int64)
            + atlas_bg.sprites[1],
            0,
            255,
        ).astype(np.uint8)
        assert np.array_equal(patch, expected)
        # everything outside the patch is untouched background
        mask = np.ones((64, 64), dtype=bool)
        mask[cs : 2 * cs, cs : 2 * cs] = False
        assert np.array_equal(img[mask], atlas_bg.background[mask])

    def test_unknown_sprite_id_rejected(self, atlas):
        g = Grid(2, 2, (0, 0, 0, 9))
        with pytest.raises(GridError):
            render_grid(g, atlas)


class TestAtlasFiles:
    def test_save_load_round_trip(self, tmp_path, atlas_bg):
        save_atlas(atlas_bg, tmp_path / "atlas")
        loaded = load_atlas(tmp_path / "atlas")
        assert loaded.names == atlas_bg.names
        assert loaded.cell_width == atlas_bg.cell_width
        for a, b in zip(loaded.sprites, atlas_bg.sprites):
            assert np.array_equal(a, b)
        assert np.array_equal(loaded.background, atlas_bg.background)

    def test_missing_metadata_rejected(self, tmp_path):
        with pytest.raises(AtlasError):
            load_atlas(tmp_path)

    def test_unknown_keys_rejected(self, tmp_path, atlas):
        save_atlas(atlas, tmp_path / "atlas")
        meta = (tmp_path / "atlas" / "atlas.json").read_text()
        (tmp_path / "atlas" / "atlas.json").write_text(meta.replace('"version"', '"vresion"'))
        with pytest.raises(AtlasError):
            load_atlas(tmp_path / "atlas")

    def test_synthetic_sprites_pairwise_distinct(self):
        atlas = synthetic_atlas(tuple(f"S{i}" for i in range(12)))
        for i in range(12):
            for j in range(i + 1, 12):
                d = np.abs(
                    atlas.sprites[i].astype(np.int64) - atlas.sprites[j].astype(np.int64)
                ).sum()
                assert d > 0
