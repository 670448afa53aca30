#!/usr/bin/env python3
"""Writes a random three-channel bank in .zrw form plus golden convolution
vectors, standing in for an exporter run so the conformance test has data.

usage: make_golden_fixture.py OUT_DIR [--seed N]
"""
import argparse
import struct
import zlib
from pathlib import Path

import numpy as np


def write_zrw(path, layers):
    body = bytearray(b"ZRW1")
    body += struct.pack("<I", len(layers))
    for w, b in layers:
        body += struct.pack("<4I", *w.shape)
        body += w.astype("<f4").tobytes()
        body += b.astype("<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(body))


def write_f32r(path, img):
    h, w = img.shape
    Path(path).write_bytes(b"F32R" + struct.pack("<II", w, h) + img.astype("<f4").tobytes())


def conv_relu(x, w, b):
    """Same-padded stride-1 cross-correlation; x is [in][h][w]."""
    out_c, in_c, kh, kw = w.shape
    _, h, wd = x.shape
    padded = np.zeros((in_c, h + kh - 1, wd + kw - 1))
    padded[:, kh // 2:kh // 2 + h, kw // 2:kw // 2 + wd] = x
    y = np.empty((out_c, h, wd))
    for o in range(out_c):
        acc = np.full((h, wd), float(b[o]))
        for i in range(in_c):
            for r in range(kh):
                for c in range(kw):
                    acc += w[o, i, r, c] * padded[i, r:r + h, c:c + wd]
        y[o] = acc
    return np.maximum(y, 0.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=19)
    ap.add_argument("--cases", type=int, default=5)
    ap.add_argument("--size", type=int, default=8)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    w1 = rng.normal(0.0, 0.3, (64, 3, 3, 3)).astype(np.float32)
    b1 = rng.normal(0.0, 0.1, 64).astype(np.float32)
    w2 = rng.normal(0.0, 0.05, (64, 64, 3, 3)).astype(np.float32)
    b2 = rng.normal(0.0, 0.1, 64).astype(np.float32)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_zrw(out / "golden_bank.zrw", [(w1, b1), (w2, b2)])

    blocks = []
    for _ in range(args.cases):
        stim = rng.uniform(-1.0, 1.0, (args.size, args.size)).astype(np.float32)
        x = np.repeat(stim[None].astype(np.float64), 3, axis=0)
        l1 = conv_relu(x, w1.astype(np.float64), b1.astype(np.float64))
        l2 = conv_relu(l1, w2.astype(np.float64), b2.astype(np.float64))
        blocks.append(stim)
        blocks.extend(l1)
        blocks.extend(l2)
    write_f32r(out / "golden.f32r", np.concatenate(blocks, axis=0))


if __name__ == "__main__":
    main()
