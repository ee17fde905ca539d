#!/usr/bin/env python3
"""Writes the grayscale PGM test corpus from scikit-image's bundled samples.

Evaluation images: camera, moon, astronaut. Training images (subset tables):
coffee, chelsea, rocket, immunohistochemistry. Every image is converted to
8-bit luma and cropped to a multiple of 64 on each side.
"""
import argparse
import pathlib

import numpy as np
from skimage import color, data

EVAL = ["camera", "moon", "astronaut"]
TRAIN = ["coffee", "chelsea", "rocket", "immunohistochemistry"]


def luma(name):
    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3]) * 255.0
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = (img.shape[0] // 64) * 64, (img.shape[1] // 64) * 64
    return img[:h, :w]


def write_pgm(path, img):
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(img.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default=str(pathlib.Path(__file__).parent.parent / "tests" / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for group, names in (("eval", EVAL), ("train", TRAIN)):
        for n in names:
            img = luma(n)
            write_pgm(out / f"{group}_{n}.pgm", img)
            print(f"{group}_{n}.pgm {img.shape[1]}x{img.shape[0]}")


if __name__ == "__main__":
    main()
