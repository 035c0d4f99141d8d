#!/usr/bin/env python3
"""Fetch the benchmark datasets into this directory.

iris.csv / wine.csv   exported from scikit-learn's bundled copies (no network)
banknote.csv          UCI banknote authentication (needs network)
mnist/*-ubyte         canonical MNIST IDX files (needs network), with an
                      offline fallback that converts the genuine 10k-digit
                      subset bundled in the npm `mnist` package into IDX
                      format (500 training + 9500 test images; see the
                      PROVENANCE file it writes)

Usage: python3 fetch_datasets.py [--mnist-npm-dir NODE_MODULES_DIR]
"""

import argparse
import gzip
import io
import json
import os
import random
import struct
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

HERE = os.path.dirname(os.path.abspath(__file__))

BANKNOTE_URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00267/data_banknote_authentication.txt",
    "https://archive.ics.uci.edu/static/public/267/banknote+authentication.zip",
]

MNIST_MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "http://yann.lecun.com/exdb/mnist/",
]
MNIST_FILES = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
]


def fetch(url, timeout=30):
    with urllib.request.urlopen(url, timeout=timeout) as r:
        return r.read()


def export_sklearn():
    from sklearn.datasets import load_iris, load_wine

    iris = load_iris()
    path = os.path.join(HERE, "iris.csv")
    if not os.path.exists(path):
        with open(path, "w") as f:
            cols = [c.replace(" (cm)", "").replace(" ", "_") for c in iris.feature_names]
            f.write(",".join(cols) + ",species\n")
            for row, label in zip(iris.data, iris.target):
                f.write(",".join(f"{v:g}" for v in row) + f",{iris.target_names[label]}\n")
        print("wrote iris.csv")

    wine = load_wine()
    path = os.path.join(HERE, "wine.csv")
    if not os.path.exists(path):
        with open(path, "w") as f:
            cols = [c.replace("/", "_").replace(" ", "_") for c in wine.feature_names]
            f.write(",".join(cols) + ",class\n")
            for row, label in zip(wine.data, wine.target):
                f.write(",".join(f"{v:g}" for v in row) + f",{wine.target_names[label]}\n")
        print("wrote wine.csv")


def fetch_banknote():
    path = os.path.join(HERE, "banknote.csv")
    if os.path.exists(path):
        return
    for url in BANKNOTE_URLS:
        try:
            blob = fetch(url)
        except Exception as e:
            print(f"banknote: {url} failed ({e})")
            continue
        if url.endswith(".zip"):
            with zipfile.ZipFile(io.BytesIO(blob)) as z:
                name = next(n for n in z.namelist() if n.endswith(".txt"))
                blob = z.read(name)
        text = blob.decode("ascii")
        with open(path, "w") as f:
            f.write("variance,skewness,curtosis,entropy,label\n")
            for line in text.strip().splitlines():
                f.write(line.strip() + "\n")
        print("wrote banknote.csv")
        return
    print("banknote.csv NOT fetched: no reachable mirror")


def write_idx(images_path, labels_path, images, labels):
    n = len(images)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(bytes(labels))


def fetch_mnist_canonical(outdir):
    for mirror in MNIST_MIRRORS:
        try:
            for name in MNIST_FILES:
                raw = gzip.decompress(fetch(mirror + name + ".gz", timeout=60))
                with open(os.path.join(outdir, name), "wb") as f:
                    f.write(raw)
            print(f"wrote canonical MNIST from {mirror}")
            return True
        except Exception as e:
            print(f"mnist: {mirror} failed ({e})")
    return False


def mnist_from_npm(outdir, npm_dir):
    digits_dir = None
    candidates = []
    if npm_dir:
        candidates.append(os.path.join(npm_dir, "mnist", "src", "digits"))
    candidates.append(os.path.join(HERE, "node_modules", "mnist", "src", "digits"))
    for c in candidates:
        if os.path.isdir(c):
            digits_dir = c
            break
    if digits_dir is None:
        # try installing from the npm mirror into a scratch directory
        scratch = tempfile.mkdtemp(prefix="mce_mnist_npm_")
        try:
            subprocess.run(["npm", "install", "--no-audit", "--no-fund", "--prefix", scratch,
                            "mnist"], check=True, capture_output=True, timeout=300)
            digits_dir = os.path.join(scratch, "node_modules", "mnist", "src", "digits")
        except Exception as e:
            print(f"mnist: npm fallback failed ({e})")
            return False
    if not os.path.isdir(digits_dir):
        return False

    pool = []
    for digit in range(10):
        with open(os.path.join(digits_dir, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        count = len(flat) // 784
        for i in range(count):
            pixels = [round(v * 255) for v in flat[i * 784:(i + 1) * 784]]
            pool.append((pixels, digit))
    rng = random.Random(20240229)
    rng.shuffle(pool)
    train, test = pool[:500], pool[500:]
    write_idx(os.path.join(outdir, "train-images-idx3-ubyte"),
              os.path.join(outdir, "train-labels-idx1-ubyte"),
              [p for p, _ in train], [y for _, y in train])
    write_idx(os.path.join(outdir, "t10k-images-idx3-ubyte"),
              os.path.join(outdir, "t10k-labels-idx1-ubyte"),
              [p for p, _ in test], [y for _, y in test])
    with open(os.path.join(outdir, "PROVENANCE.txt"), "w") as f:
        f.write(
            "Offline fallback: genuine MNIST digits from the npm 'mnist' package\n"
            "(10,000 images total), split 500 train / 9,500 test with seed 20240229.\n"
            "These are NOT the canonical 60k/10k archives; rerun fetch_datasets.py\n"
            "with network access to replace them.\n")
    print(f"wrote npm-derived MNIST subset ({len(train)} train / {len(test)} test)")
    return True


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mnist-npm-dir", default=None,
                    help="existing node_modules directory containing the mnist package")
    args = ap.parse_args()

    export_sklearn()
    fetch_banknote()

    outdir = os.path.join(HERE, "mnist")
    os.makedirs(outdir, exist_ok=True)
    if all(os.path.exists(os.path.join(outdir, n)) for n in MNIST_FILES):
        print("mnist files already present")
        return 0
    if not fetch_mnist_canonical(outdir):
        if not mnist_from_npm(outdir, args.mnist_npm_dir):
            print("mnist NOT fetched")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
