#!/usr/bin/env python3
"""Build the desk-scale MNIST IDX pair from the `mnist` npm package.

The npm package (https://www.npmjs.com/package/mnist, MIT) ships 10,000
MNIST digits as per-class JSON files with pixels normalized to 3 decimals.
Rounding back to bytes is exact because 0.0005 * 255 < 0.5.

Images are interleaved by class (0, 1, ..., 9, 0, 1, ...) and the first
`--count` are written.

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 tools/make_desk_mnist.py package/src/digits data/mnist-desk
"""
import argparse
import json
import os
import struct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=5000)
    args = ap.parse_args()

    per_class = []
    for d in range(10):
        with open(os.path.join(args.digits_dir, f"{d}.json")) as f:
            flat = json.load(f)["data"]
        assert len(flat) % 784 == 0
        per_class.append([flat[i:i + 784] for i in range(0, len(flat), 784)])

    images, labels = [], []
    i = 0
    while len(images) < args.count:
        for d in range(10):
            if i < len(per_class[d]) and len(images) < args.count:
                images.append(per_class[d][i])
                labels.append(d)
        i += 1

    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(bytes(int(round(v * 255)) for v in img))
    with open(os.path.join(args.out_dir, "labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


if __name__ == "__main__":
    main()
