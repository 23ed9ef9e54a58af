"""Bundled sample data for demos and tests.

Real handwritten digit scans (the classic 8x8 set shipped with scikit-learn,
1797 images) are bilinearly upscaled to the standard 28x28 digit geometry and
materialized as genuine IDX files, so the entire pipeline - IDX parsing,
target construction, training, deformation, evaluation - runs end to end
without any download. Full-size digit corpora distributed in the same IDX
format plug in identically; point the data paths at those files instead.

Usage: python -m mdrnn.sample_data OUTDIR [--size 28]
"""

import argparse
import os

import numpy as np
from scipy.ndimage import zoom

from . import data

IMAGES_NAME = "digits-images-idx3-ubyte"
LABELS_NAME = "digits-labels-idx1-ubyte"


def digit_arrays(size=28, cutoff=240):
    """(images uint8 (N, size, size), labels uint8 (N,)) from the bundled scans.

    Mirrors the standard digit-corpus geometry: the glyph is scaled into a
    centered box spanning 5/7 of the canvas, leaving black margins. Values
    below `cutoff` are cleared, keeping only the stroke ridge; the default
    yields sparse, sharply distinct strokes, which keeps desk-scale training
    budgets (tens of sequence updates per image) sufficient. Lower cutoffs
    give thicker, more overlapping strokes and a markedly harder pixel task.
    """
    from sklearn.datasets import load_digits  # deferred: test/demo extra

    raw = load_digits()
    box = max(1, round(size * 20 / 28))
    margin = (size - box) // 2
    factor = box / raw.images.shape[1]
    images = np.zeros((raw.images.shape[0], size, size), dtype=np.uint8)
    for i, img in enumerate(raw.images):
        up = zoom(img / 16.0, factor, order=1)
        glyph = np.rint(np.clip(up, 0.0, 1.0) * 255.0).astype(np.uint8)
        glyph[glyph < cutoff] = 0
        images[i, margin:margin + box, margin:margin + box] = glyph
    return images, raw.target.astype(np.uint8)


def write_digit_idx(out_dir, size=28):
    """Materialize the sample digits as an IDX image/label file pair."""
    os.makedirs(out_dir, exist_ok=True)
    images_path = os.path.join(out_dir, IMAGES_NAME)
    labels_path = os.path.join(out_dir, LABELS_NAME)
    if not (os.path.exists(images_path) and os.path.exists(labels_path)):
        images, labels = digit_arrays(size)
        data.write_idx(images_path, images)
        data.write_idx(labels_path, labels)
    return images_path, labels_path


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--size", type=int, default=28)
    args = parser.parse_args(argv)
    images_path, labels_path = write_digit_idx(args.out_dir, args.size)
    print(images_path)
    print(labels_path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
