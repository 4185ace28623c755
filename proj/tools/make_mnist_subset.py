"""Write a stratified MNIST subset as IDX files.

Uses the 5000-image MNIST sample bundled with mlxtend (500 per digit).
"""
import argparse
import pathlib
import struct

import numpy as np
from mlxtend.data import mnist_data


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">BBBBIII", 0, 0, 8, 3, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">BBBBI", 0, 0, 8, 1, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mnist_subset")
    ap.add_argument("--train-per-class", type=int, default=200)
    ap.add_argument("--test-per-class", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    X, y = mnist_data()
    rng = np.random.default_rng(args.seed)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = rng.permutation(np.flatnonzero(y == c))
        train_idx.extend(idx[: args.train_per_class])
        test_idx.extend(idx[args.train_per_class : args.train_per_class + args.test_per_class])
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = X.reshape(-1, 28, 28)
    write_images(out / "train-images-idx3-ubyte", images[train_idx])
    write_labels(out / "train-labels-idx1-ubyte", y[train_idx])
    write_images(out / "t10k-images-idx3-ubyte", images[test_idx])
    write_labels(out / "t10k-labels-idx1-ubyte", y[test_idx])
    print(f"wrote {len(train_idx)} train / {len(test_idx)} test to {out}")


if __name__ == "__main__":
    main()
