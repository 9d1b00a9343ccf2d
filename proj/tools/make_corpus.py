#!/usr/bin/env python3
"""Export the scikit-image sample pictures as 512x512 8-bit PGM files.

The test set holds natural photographs; the train set holds textures and
microscopy/astronomy frames used for feature-space decomposition.
"""
import argparse
import os

import numpy as np
from PIL import Image
from skimage import color, data, io, transform

TEST = ["camera", "astronaut", "moon", "coffee", "chelsea", "rocket",
        "motorcycle_left", "coins", "retina", "clock_motion"]
TRAIN = ["brick", "grass", "gravel", "immunohistochemistry", "cell",
         "hubble_deep_field", "motorcycle_right", "shepp_logan_phantom",
         "colorwheel", "page"]

SIZE = 512


def load(name):
    if name == "motorcycle_left" or name == "motorcycle_right":
        left, right, _ = data.stereo_motorcycle()
        img = left if name == "motorcycle_left" else right
    elif hasattr(data, name):
        img = getattr(data, name)()
    else:
        img = io.imread(os.path.join(os.path.dirname(data.__file__), name + ".png"))
    img = np.asarray(img)
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    img = img.astype(np.float64)
    if img.max() > 1.0:
        img /= 255.0
    h, w = img.shape
    s = min(h, w)
    y0, x0 = (h - s) // 2, (w - s) // 2
    img = img[y0:y0 + s, x0:x0 + s]
    if s != SIZE:
        img = transform.resize(img, (SIZE, SIZE), anti_aliasing=True)
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "corpus"))
    args = ap.parse_args()
    for subset, names in (("test", TEST), ("train", TRAIN)):
        d = os.path.join(args.out, subset)
        os.makedirs(d, exist_ok=True)
        for n in names:
            Image.fromarray(load(n), mode="L").save(os.path.join(d, n + ".pgm"))
            print(subset, n)


if __name__ == "__main__":
    main()
