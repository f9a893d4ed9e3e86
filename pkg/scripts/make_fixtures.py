"""Regenerate the checked-in test images and the shipped global dictionary.

Test images are grayscale crops of scikit-image sample data; the global
dictionary is trained on crops of a disjoint set of samples.  Run from the
repository root:

    python scripts/make_fixtures.py
    python scripts/make_fixtures.py --goldens-only

Golden bitstreams are encodings of the test images with the shipped
dictionary; regenerate them only after an intentional format change.
"""

import argparse
import logging
from pathlib import Path

import skimage.data as sd

from gvcsr.admm import SparseCodingParams
from gvcsr.codec import GrayImage, encode_image, read_pgm, to_luma, to_patches, write_pgm
from gvcsr.dictlearn import Dictionary, LearnParams, learn
from gvcsr.pursuit import PursuitStop
import numpy as np

ROOT = Path(__file__).resolve().parents[1]
TEST_DIR = ROOT / "tests" / "data"
GOLDEN_DIR = ROOT / "tests" / "golden"
DICT_PATH = ROOT / "src" / "gvcsr" / "data" / "global_g4.gvcd"

# (name, loader, y, x, size)
TEST_IMAGES = [
    ("camera", sd.camera, 100, 200, 96),
    ("moon", sd.moon, 200, 200, 96),
    ("coins", sd.coins, 50, 100, 96),
    ("text", sd.text, 40, 100, 96),
    ("clock", sd.clock, 100, 150, 96),
]
TRAIN_IMAGES = [
    (sd.coffee, 100, 200),
    (sd.chelsea, 80, 150),
    (sd.rocket, 200, 300),
    (sd.brick, 0, 0),
    (sd.astronaut, 60, 180),
    (sd.immunohistochemistry, 200, 200),
]


def gray(arr):
    return to_luma(arr).pixels if arr.ndim == 3 else arr


def crop(loader, y, x, size):
    return GrayImage(gray(loader())[y:y + size, x:x + size])


# (file stem, image, coder, step)
GOLDENS = [
    ("camera_gvcsr_q8", "camera", SparseCodingParams(alpha=50.0, beta=1e-4), 8.0),
    ("text_gvcsr_q16", "text", SparseCodingParams(alpha=50.0, beta=1e-4), 16.0),
    ("coins_ompl4_q8", "coins", PursuitStop.L(4), 8.0),
]


def write_goldens():
    d = Dictionary.load(DICT_PATH)
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for stem, name, coder, step in GOLDENS:
        bs = encode_image(read_pgm(TEST_DIR / f"{name}.pgm"), d, coder, step)
        (GOLDEN_DIR / f"{stem}.gvcb").write_bytes(bs.to_bytes())
        logging.info("wrote golden %s (%d bits)", stem, bs.total_bits)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--goldens-only", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if args.goldens_only:
        write_goldens()
        return
    TEST_DIR.mkdir(parents=True, exist_ok=True)
    for name, loader, y, x, size in TEST_IMAGES:
        write_pgm(TEST_DIR / f"{name}.pgm", crop(loader, y, x, size))
    # four-image set: shifted / brightened views of one scene
    scene = gray(sd.camera())
    for i, (dy, dx, gain) in enumerate([(0, 0, 0), (3, 2, 6), (6, 5, -4), (60, 48, 0)]):
        px = scene[120 + dy:184 + dy, 180 + dx:244 + dx].astype(int) + gain
        write_pgm(TEST_DIR / f"set{i}.pgm", GrayImage(np.clip(px, 0, 255).astype(np.uint8)))

    train = [crop(f, y, x, 128) for f, y, x in TRAIN_IMAGES]
    s = np.hstack([to_patches(im, 8).residuals for im in train])
    params = LearnParams(SparseCodingParams(alpha=50.0, beta=0.0), outer_iters=5, seed=1)
    d, _, report = learn(s, 4 * 64, params)
    for r in report.rounds:
        logging.info("round %d fidelity %.1f l0 %d", r.round, r.fidelity, r.l0)
    DICT_PATH.parent.mkdir(parents=True, exist_ok=True)
    d.save(DICT_PATH)
    logging.info("wrote %s (hash %s)", DICT_PATH, d.hash.hex())
    write_goldens()


if __name__ == "__main__":
    main()
