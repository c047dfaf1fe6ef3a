"""Regenerates texture_XX.png: two-stain Beer-Lambert renderings whose
concentration fields are taken from a real IHC micrograph (scikit-image
sample data), so the rasters carry tissue texture while staying on a
two-stain optical-density plane."""

import numpy as np
from PIL import Image
from skimage import data
from skimage.color import rgb2hed

HEMATOXYLIN = np.array([0.650, 0.704, 0.286])
EOSIN = np.array([0.072, 0.990, 0.105])
TILE = 96
# Largest per-channel optical density; darker pixels are scaled back along their
# own stain mix so no channel saturates at 0.
MAX_OD = 4.0


def main():
    hed = rgb2hed(data.immunohistochemistry())
    h = np.clip(hed[..., 0], 0, None)
    e = np.clip(hed[..., 2], 0, None)
    h = h / np.percentile(h, 99) * 1.2
    e = e / np.percentile(e, 99) * 0.8
    stains = np.stack([HEMATOXYLIN / np.linalg.norm(HEMATOXYLIN), EOSIN / np.linalg.norm(EOSIN)], axis=1)
    for k in range(10):
        y, x = divmod(k, 5)
        ys, xs = slice(40 + y * 200, 40 + y * 200 + TILE), slice(20 + x * 90, 20 + x * 90 + TILE)
        conc = np.stack([h[ys, xs], e[ys, xs]], axis=-1)
        od = conc @ stains.T
        peak = od.max(axis=-1, keepdims=True)
        od = od * np.minimum(1.0, MAX_OD / np.maximum(peak, 1e-12))
        rgb = np.clip(np.round(255.0 * np.exp(-od)), 0, 255).astype(np.uint8)
        Image.fromarray(rgb).save(f"texture_{k:02d}.png")


if __name__ == "__main__":
    main()
