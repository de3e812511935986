#!/usr/bin/env python3
"""Writes fixtures/hash_pins.json from a standalone implementation of the
tokenizer and the hashed n-gram embedding, for cross-checking the C++ one."""

import json
import math
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
SPACE = b" \t\n\v\f\r"
SPLIT = b"?!.,"


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def tokenize(text: str) -> list:
    data = text.encode("utf-8")
    out, cur = [], None
    for i, c in enumerate(data):
        if c in SPACE:
            if cur is not None:
                out.append(cur)
            cur = None
            continue
        if c in SPLIT:
            numeric = (c in b".," and cur and chr(cur[-1]).isdigit() and i + 1 < len(data)
                       and chr(data[i + 1]).isdigit())
            if not numeric:
                if cur is not None:
                    out.append(cur)
                cur = None
                out.append(bytes([c]))
                continue
        ch = c + 32 if 65 <= c <= 90 else c
        cur = (cur or b"") + bytes([ch])
    if cur is not None:
        out.append(cur)
    return out


def embed(text, dimension, ngram_max=2, seed=0):
    toks = tokenize(text)
    counts = {}
    for i in range(len(toks)):
        gram = toks[i]
        grams = [gram]
        for n in range(2, ngram_max + 1):
            if i + n > len(toks):
                break
            gram = gram + b" " + toks[i + n - 1]
            grams.append(gram)
        for g in grams:
            idx = (fnv1a64(g) ^ seed) & (dimension - 1)
            counts[idx] = counts.get(idx, 0.0) + 1.0
    norm = math.sqrt(sum(v * v for v in counts.values()))
    return {k: v / norm for k, v in sorted(counts.items())} if norm else {}


def top(vec, k):
    # Highest weight first; equal weights keep ascending index order.
    return [i for i, _ in sorted(vec.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


TEXTS = [
    "What is the volume?",
    "what is the scale factor ?",
    "How did you get that answer?",
    "Sit down",
    "Close your books",
    "The answer is three, right?",
    "Does this picture show ½ or ¼?",
    "The length is 2.5, the width is 3",
    "volume volume volume length",
    "Hi, How are you?",
]

CONFIGS = [(1 << 16, 0), (1 << 14, 0), (1 << 16, 0x5EED)]


def main(path):
    pins = []
    for dim, seed in CONFIGS:
        for t in TEXTS:
            v = embed(t, dim, 2, seed)
            pins.append({"text": t, "dimension": dim, "ngram_max": 2, "hash_seed": seed,
                         "tokens": [x.decode("utf-8") for x in tokenize(t)],
                         "top5": top(v, 5), "indices": sorted(v)})
    fnv = {s: format(fnv1a64(s.encode("utf-8")), "016x") for s in ["", "a", "foobar", "scale factor"]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"fnv1a64": fnv, "pins": pins}, f, ensure_ascii=False, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures/hash_pins.json")
