"""End-to-end smoke test for the python bindings.

Generates a small terrain, trains a tiny encoder on its tiles, builds an
index, and checks that reference views localize back to their own tiles.
Run directly: python tests/python/test_smoke.py
"""

import sys

import numpy as np

import edgeloc


def tile_grid(image, size, stride, origin, resolution):
    """Crops plus world centers, mirroring the library's tiling convention."""
    tiles, eastings, northings = [], [], []
    h, w = image.shape
    for y0 in range(0, h - size + 1, stride):
        for x0 in range(0, w - size + 1, stride):
            tiles.append(np.ascontiguousarray(image[y0 : y0 + size, x0 : x0 + size]))
            cx, cy = x0 + (size - 1) / 2.0, y0 + (size - 1) / 2.0
            eastings.append(origin[0] + cx * resolution)
            northings.append(origin[1] - cy * resolution)
    return tiles, eastings, northings


def main():
    terrain = edgeloc.generate_terrain(seed=3, extent=512)
    image = terrain.image
    assert image.shape == (512, 512) and image.dtype == np.uint8
    assert image.std() > 1.0, "terrain should not be uniform"

    shifted = terrain.season(seed=3)
    assert shifted.shape == image.shape
    assert not np.array_equal(shifted, image), "season shift must change the raster"

    edges = edgeloc.canny(image)
    assert edges.shape == image.shape
    fraction = edges.mean()
    assert 0.005 < fraction < 0.2, f"edge fraction {fraction} out of range"

    # Rendering at a tile center with zero perturbation is an exact crop.
    res = terrain.resolution
    origin = terrain.origin
    view = terrain.render(origin[0] + 100 * res + 31.5 * res, origin[1] - 60 * res - 31.5 * res)
    assert view.shape == (64, 64)
    assert np.array_equal(view, image[60:124, 100:164])

    tiles, eastings, northings = tile_grid(image, 64, 32, origin, res)
    assert len(tiles) == 225

    model = edgeloc.train_autoencoder(tiles, latent=8, epochs=3, seed=7)
    assert model.backend == "ae" and model.input == "gray"
    losses = model.loss_history
    assert len(losses) == 3 and losses[-1] < losses[0], "training must reduce the loss"

    emb = model.embed(tiles[0])
    assert emb.shape == (8,)
    assert abs(np.linalg.norm(emb) - 1.0) < 1e-9

    index = edgeloc.Index.build(model, tiles, eastings, northings)
    assert index.count == 225 and index.dim == 8

    hits = 0
    for i in (0, 41, 112, 224):
        top = index.query(model, tiles[i], k=1)
        hits += top[0][0] == i
    assert hits == 4, "reference tiles must match themselves"

    fix = index.localize(model, tiles[112])
    assert abs(fix["easting"] - eastings[112]) < 1e-9
    assert abs(fix["northing"] - northings[112]) < 1e-9
    assert fix["lowe_ratio"] >= 1.0

    try:
        edgeloc.canny(np.zeros((4, 4), dtype=np.uint8), low=-5)
        raise AssertionError("invalid parameters must raise")
    except edgeloc.EdgelocError:
        pass

    print("python smoke: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
