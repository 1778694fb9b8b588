#!/usr/bin/env python3
"""Print parameter counts for a grid of paired quaternion/real models.

Sweeps depth and feature-map width (quaternion channels, with the real
twin at 4x) and reports total trainable scalars plus the conv+dense
weight ratio, which is exactly 4 for every pairing.
"""

import sys

import numpy as np

from qspeech.config import ModelConfig
from qspeech.model import build_model, build_real_model, count_params


def main() -> int:
    rng = np.random.default_rng(0)
    n_classes = 62  # 61 symbols + blank
    print(f"{'layers':>6} {'q-maps':>6} {'real-maps':>9} "
          f"{'q-params':>12} {'real-params':>12} {'weight ratio':>12}")
    for layers in (6, 10):
        for q_maps in (8, 16, 32, 64):
            cfg = ModelConfig(n_conv_layers=layers, conv_channels=q_maps,
                              n_dense_layers=3, dense_width=256)
            q = build_model(cfg, n_classes, rng)
            r = build_real_model(cfg, n_classes, rng)
            qw = sum(l.weight_count() for l in q.convs + q.denses)
            rw = sum(l.weight_count() for l in r.convs + r.denses)
            print(f"{layers:>6} {q_maps:>6} {4 * q_maps:>9} "
                  f"{count_params(q):>12,} {count_params(r):>12,} {rw / qw:>12.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
