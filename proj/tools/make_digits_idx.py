"""Writes the scikit-learn 8x8 digits as an uncompressed IDX image/label pair.

Pixel intensities 0..16 are scaled by 16 (capped at 255) to fill a byte.
"""

import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_idx(out_dir: pathlib.Path, prefix: str) -> None:
    digits = load_digits()
    images = np.minimum(digits.images.astype(np.int32) * 16, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)
    n, rows, cols = images.shape
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{prefix}-images.idx", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, rows, cols))
        f.write(images.tobytes())
    with open(out_dir / f"{prefix}-labels.idx", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data", type=pathlib.Path)
    parser.add_argument("--prefix", default="digits")
    args = parser.parse_args()
    write_idx(args.out, args.prefix)


if __name__ == "__main__":
    main()
