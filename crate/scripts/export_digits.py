#!/usr/bin/env python3
"""Export the scikit-learn handwritten digits set as IDX files.

The 8x8 source images are upsampled to 20x20 with bilinear interpolation
and centered in a 28x28 frame, matching the geometry of MNIST (20x20
glyph in a 28x28 canvas), so the files are drop-in compatible with
MNIST-shaped pipelines. The first 1000 shuffled samples become the
training split, the remainder the test split. Output goes to
data/digits/.

Usage: python3 scripts/export_digits.py [outdir]
"""
import struct
import sys
from pathlib import Path

import numpy as np
from scipy.ndimage import zoom
from sklearn.datasets import load_digits

SEED = 20240811
TRAIN_COUNT = 1000
SIZE = 28
GLYPH = 20
PAD = (SIZE - GLYPH) // 2


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIZE, SIZE))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/digits")
    outdir.mkdir(parents=True, exist_ok=True)

    bunch = load_digits()
    rng = np.random.RandomState(SEED)
    order = rng.permutation(len(bunch.images))
    images = bunch.images[order] / 16.0
    labels = bunch.target[order]

    factor = GLYPH / images.shape[1]
    glyphs = np.stack([zoom(img, factor, order=1) for img in images])
    upsampled = np.zeros((len(glyphs), SIZE, SIZE))
    upsampled[:, PAD:PAD + GLYPH, PAD:PAD + GLYPH] = glyphs
    upsampled = np.clip(np.round(upsampled * 255.0), 0, 255)

    write_idx_images(outdir / "train-images-idx3-ubyte", upsampled[:TRAIN_COUNT])
    write_idx_labels(outdir / "train-labels-idx1-ubyte", labels[:TRAIN_COUNT])
    write_idx_images(outdir / "test-images-idx3-ubyte", upsampled[TRAIN_COUNT:])
    write_idx_labels(outdir / "test-labels-idx1-ubyte", labels[TRAIN_COUNT:])
    print(f"wrote {TRAIN_COUNT} train / {len(labels) - TRAIN_COUNT} test images to {outdir}")


if __name__ == "__main__":
    main()
