"""Rebuild the 2,000-image IDX fixture from the npm `mnist` 1.1.0 package.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 make_subset.py package/src/digits .
"""
import json
import struct
import sys

import numpy as np

src, out = sys.argv[1], sys.argv[2]
images, labels = [], []
for digit in range(10):
    values = np.array(json.load(open(f"{src}/{digit}.json"))["data"], dtype=np.float64).reshape(-1, 784)
    pixels = np.rint(values * 255).astype(np.int64)
    # The package stores v / 255 rounded to 3 decimals; the bytes are recovered exactly.
    assert np.all(np.abs(np.round(pixels / 255, 3) - values) < 1e-9)
    images.append(pixels.astype(np.uint8))
    labels += [digit] * len(pixels)
images = np.concatenate(images)
labels = np.array(labels, dtype=np.uint8)

pick = np.random.RandomState(20220805).permutation(len(labels))[:2000]
with open(f"{out}/images.idx3-ubyte", "wb") as f:
    f.write(struct.pack(">IIII", 0x803, len(pick), 28, 28))
    f.write(images[pick].tobytes())
with open(f"{out}/labels.idx1-ubyte", "wb") as f:
    f.write(struct.pack(">II", 0x801, len(pick)))
    f.write(labels[pick].tobytes())
