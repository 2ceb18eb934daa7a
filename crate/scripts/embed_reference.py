#!/usr/bin/env python3
"""Reference character-trigram embedder. Writes the golden file the Rust tests check against.

    python3 scripts/embed_reference.py > crates/core/data/embed_golden.json
"""
import json
import math
import sys

DIM = 512

TEXTS = [
    "pick up the red cube",
    "Pick  up the RED cube",
    "put the green toy in the left box",
    "solve for x in 4 + x = 9",
    "fix the word to spell ICRA",
    "table 8x8; red cube at (1,4,0); blue cube at (5,6,0) held",
    "rotate the yellow bowl by 90 degrees",
    "I have a sweet tooth",
    "ab",
    "ünïcödé × ÷",
]


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def normalize(text):
    return " ".join(text.lower().split())


def embed(text, dim=DIM):
    chars = ["\x02"] + list(normalize(text)) + ["\x03"]
    v = [0.0] * dim
    for i in range(len(chars) - 2):
        v[fnv1a64("".join(chars[i : i + 3]).encode("utf-8")) % dim] += 1.0
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def main():
    vecs = [embed(t) for t in TEXTS]
    out = {
        "dimension": DIM,
        "fnv1a64": {s: fnv1a64(s.encode("utf-8")) for s in ["", "a", "foobar", "\x02pi"]},
        "vectors": [
            {"text": t, "nonzero": {str(i): x for i, x in enumerate(v) if x != 0.0}}
            for t, v in zip(TEXTS, vecs)
        ],
        "cosines": [
            [i, j, sum(a * b for a, b in zip(vecs[i], vecs[j]))]
            for i in range(len(TEXTS))
            for j in range(i + 1, len(TEXTS))
        ],
    }
    json.dump(out, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
