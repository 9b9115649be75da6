#!/usr/bin/env python3
"""Builds the committed classifier fixture and its golden outputs.

Writes, next to this script:
  texture_fixture.texw1   TEXW1 weights for the fixed architecture
  golden_patches.png      20 RGB patches of 32x32 laid out left to right
  golden.json             probabilities from the NumPy reference evaluator below

The weights are constructed, not trained: channel 0 of the first layer is a
luma Laplacian, the next layers carry |Laplacian| forward, and hidden unit 0
averages the interior 6x6 cells of the pooled map, so the output tracks
high-frequency energy. Every other coefficient is seeded random noise with a
small output gain so that all coefficients take part in the golden check.

The evaluator here shares no code with the Rust engine: float64 im2col
matrix products, rounding to float32 after every layer.
"""

import hashlib
import json
import os
import struct

import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))
ARCH = ("conv3x3(3,32);relu;conv3x3(32,32);relu;maxpool2;"
        "conv3x3(32,64);relu;conv3x3(64,64);relu;maxpool2;"
        "fully_connected(4096,256);relu;fully_connected(256,1);sigmoid")
LAYERS = [
    {"kind": "conv3x3", "in_channels": 3, "out_channels": 32},
    {"kind": "relu"},
    {"kind": "conv3x3", "in_channels": 32, "out_channels": 32},
    {"kind": "relu"},
    {"kind": "maxpool2"},
    {"kind": "conv3x3", "in_channels": 32, "out_channels": 64},
    {"kind": "relu"},
    {"kind": "conv3x3", "in_channels": 64, "out_channels": 64},
    {"kind": "relu"},
    {"kind": "maxpool2"},
    {"kind": "fully_connected", "in_features": 4096, "out_features": 256},
    {"kind": "relu"},
    {"kind": "fully_connected", "in_features": 256, "out_features": 1},
    {"kind": "sigmoid"},
]
MEANS = [0.5, 0.5, 0.5]
GAIN = 8.0
OFFSET = 0.8


def build_params(rng):
    f32 = np.float32
    lap = np.array([[-1, -1, -1], [-1, 8, -1], [-1, -1, -1]], dtype=np.float64)
    luma = [0.299, 0.587, 0.114]

    w1 = rng.normal(0, 0.05, (32, 3, 3, 3))
    b1 = rng.normal(0, 0.01, 32)
    for c in range(3):
        w1[0, c] = luma[c] * lap
        w1[1, c] = -luma[c] * lap
    b1[:2] = 0

    w2 = rng.normal(0, 0.05, (32, 32, 3, 3))
    b2 = rng.normal(0, 0.01, 32)
    w2[0] = 0
    w2[0, 0, 1, 1] = 1
    w2[0, 1, 1, 1] = 1
    b2[0] = 0

    w3 = rng.normal(0, 0.05, (64, 32, 3, 3))
    b3 = rng.normal(0, 0.01, 64)
    w3[0] = 0
    w3[0, 0, 1, 1] = 1
    b3[0] = 0

    w4 = rng.normal(0, 0.05, (64, 64, 3, 3))
    b4 = rng.normal(0, 0.01, 64)
    w4[0] = 0
    w4[0, 0, 1, 1] = 1
    b4[0] = 0

    w5 = rng.normal(0, 0.01, (256, 4096))
    b5 = rng.normal(0, 0.01, 256)
    w5[0] = 0
    for y in range(1, 7):
        for x in range(1, 7):
            w5[0, y * 8 + x] = 1.0 / 36.0
    b5[0] = 0

    w6 = rng.normal(0, 0.004, (1, 256))
    b6 = np.array([-GAIN * OFFSET])
    w6[0, 0] = GAIN

    return [(f32(w), f32(b)) for w, b in
            [(w1, b1), (w2, b2), (w3, b3), (w4, b4), (w5, b5), (w6, b6)]]


def write_texw1(path, params):
    header = {
        "architecture": ARCH,
        "architecture_hash": hashlib.sha256(ARCH.encode()).hexdigest(),
        "layers": LAYERS,
        "means": MEANS,
        "training": {"origin": "constructed fixture", "seed": 20240917},
    }
    with open(path, "wb") as f:
        f.write(b"TEXW1\n")
        f.write(json.dumps(header).encode())
        f.write(b"\0")
        for w, b in params:
            f.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def conv(x, w, b):
    c, h, wd = x.shape
    pad = np.zeros((c, h + 2, wd + 2), dtype=np.float64)
    pad[:, 1:-1, 1:-1] = x
    cols = np.empty((h * wd, c * 9), dtype=np.float64)
    k = 0
    for ci in range(c):
        for ky in range(3):
            for kx in range(3):
                cols[:, k] = pad[ci, ky:ky + h, kx:kx + wd].reshape(-1)
                k += 1
    out = cols @ w.reshape(w.shape[0], -1).astype(np.float64).T + b.astype(np.float64)
    return out.T.reshape(w.shape[0], h, wd).astype(np.float32)


def pool(x):
    c, h, w = x.shape
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def relu(x):
    return np.maximum(x, np.float32(0))


def reference_forward(patch, params):
    x = patch.astype(np.float32).transpose(2, 0, 1) / np.float32(255)
    x = x - np.array(MEANS, dtype=np.float32)[:, None, None]
    (w1, b1), (w2, b2), (w3, b3), (w4, b4), (w5, b5), (w6, b6) = params
    x = relu(conv(x, w1, b1))
    x = pool(relu(conv(x, w2, b2)))
    x = relu(conv(x, w3, b3))
    x = pool(relu(conv(x, w4, b4)))
    v = x.reshape(-1).astype(np.float64)
    h = relu((w5.astype(np.float64) @ v + b5).astype(np.float32))
    logit = (w6.astype(np.float64) @ h.astype(np.float64) + b6).astype(np.float32)
    return float(np.float32(1.0 / (1.0 + np.exp(-np.float64(logit[0])))))


def patches(rng):
    out = []
    yy, xx = np.mgrid[0:32, 0:32]
    for sigma in (10, 20, 30, 45):
        base = rng.uniform(60, 190, 3)
        out.append(base + rng.normal(0, sigma, (32, 32, 3)))
    for level in (0, 64, 128, 255):
        out.append(np.full((32, 32, 3), level, dtype=np.float64))
    out.append(np.stack([xx * 8, yy * 8, 255 - xx * 4], axis=2))
    out.append(np.stack([yy * 6 + 20] * 3, axis=2))
    out.append(np.where(xx[..., None] < 16, 40.0, 220.0) * np.ones(3))
    out.append(np.where((xx // 4 + yy // 4)[..., None] % 2 == 0, 30.0, 230.0) * np.ones(3))
    disc = ((xx - 16) ** 2 + (yy - 16) ** 2 < 100)[..., None]
    out.append(np.where(disc, np.array([200, 80, 60]), np.array([90, 140, 220])).astype(np.float64))
    for _ in range(4):
        out.append(rng.uniform(0, 255, (32, 32, 3)))
    green = np.array([70, 150, 60]) + rng.normal(0, 25, (32, 32, 3))
    out.append(green)
    blue = np.array([50, 90, 170]) + rng.normal(0, 25, (32, 32, 3))
    out.append(blue)
    mixed = np.where(xx[..., None] < 16, np.array([110.0, 110.0, 110.0]),
                     np.array([110.0, 110.0, 110.0]) + rng.normal(0, 30, (32, 32, 3)))
    out.append(mixed)
    assert len(out) == 20
    return [np.clip(np.rint(p), 0, 255).astype(np.uint8) for p in out]


def main():
    rng = np.random.default_rng(20240917)
    params = build_params(rng)
    write_texw1(os.path.join(HERE, "texture_fixture.texw1"), params)
    ps = patches(rng)
    Image.fromarray(np.concatenate(ps, axis=1)).save(os.path.join(HERE, "golden_patches.png"))
    probs = [reference_forward(p, params) for p in ps]
    with open(os.path.join(HERE, "golden.json"), "w") as f:
        json.dump({"patches": "golden_patches.png", "patch_size": 32,
                   "probabilities": probs}, f, indent=1)
    for i, p in enumerate(probs):
        print(f"{i:2d} {p:.6f}")


if __name__ == "__main__":
    main()
