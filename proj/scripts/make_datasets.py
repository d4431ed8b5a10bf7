#!/usr/bin/env python3
"""Generate the desk-scale datasets committed under data/.

wine.csv: the UCI Wine dataset (178 samples, 13 features, 3 classes),
exported from scikit-learn with a header row and a 'class' label column.

data/mnist/: IDX-format digit images (MNIST container layout). The 8x8
scikit-learn digits are upscaled to 28x28 and jittered by small integer
shifts to produce 2000 training and 500 test images of centered digits.
"""
import struct
import numpy as np
from sklearn.datasets import load_wine, load_digits


def write_wine(path):
    wine = load_wine()
    names = [n.replace("/", "_") for n in wine.feature_names]
    with open(path, "w") as f:
        f.write(",".join(names) + ",class\n")
        for row, label in zip(wine.data, wine.target):
            f.write(",".join(repr(float(v)) for v in row) + f",{label}\n")


def upscale(img8):
    # nearest-neighbour 8x8 -> 24x24, padded to 28x28
    big = np.kron(img8, np.ones((3, 3)))
    out = np.zeros((28, 28))
    out[2:26, 2:26] = big
    return out


def write_idx(images, labels, img_path, lbl_path):
    n = len(images)
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for img in images:
            f.write(img.astype(np.uint8).tobytes())
    with open(lbl_path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(int(l) for l in labels))


def main():
    write_wine("data/wine.csv")

    digits = load_digits()
    rng = np.random.default_rng(12345)
    n_total = 2500
    idx = rng.integers(0, len(digits.images), size=n_total)
    images, labels = [], []
    for i in idx:
        img = upscale(digits.images[i] * (255.0 / 16.0))
        dy, dx = rng.integers(-2, 3, size=2)
        img = np.roll(np.roll(img, dy, axis=0), dx, axis=1)
        images.append(np.clip(img, 0, 255))
        labels.append(digits.target[i])
    write_idx(images[:2000], labels[:2000],
              "data/mnist/train-images-idx3-ubyte",
              "data/mnist/train-labels-idx1-ubyte")
    write_idx(images[2000:], labels[2000:],
              "data/mnist/t10k-images-idx3-ubyte",
              "data/mnist/t10k-labels-idx1-ubyte")
    print("done")


if __name__ == "__main__":
    main()
