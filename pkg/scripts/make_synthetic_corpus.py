#!/usr/bin/env python3
"""Write a small synthetic tone corpus (WAV files plus manifest) for
exercising the extract/train/eval/decode pipeline without real speech.

Usage: python3 scripts/make_synthetic_corpus.py OUT_DIR [--n 24] [--seed 0]
"""

import argparse
import sys

import numpy as np

from qspeech.data import synth_tone_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--n", type=int, default=24, help="number of utterances")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    manifest = synth_tone_corpus(args.out_dir, args.n, ("lo", "mid", "hi"),
                                 np.random.default_rng(args.seed))
    print(f"wrote {args.n} utterances, manifest at {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
