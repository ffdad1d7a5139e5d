#!/usr/bin/env python3
"""Straight-line reference implementation of the BPE token counter.

Independent of the C++ path: used once to compute the expected counts
frozen into tests/test_tokens.cpp, and re-runnable for new fixtures.

Usage: bpe_reference.py VOCAB_FILE [STRING ...]
"""
import base64
import sys


def load_ranks(path):
    ranks = {}
    with open(path, "rb") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            token_b64, rank = line.split()
            ranks[base64.b64decode(token_b64)] = int(rank)
    return ranks


def classify(byte):
    ch = bytes([byte])
    if ch.isspace():
        return "space"
    if ch.isdigit():
        return "digit"
    if ch.isalpha() or byte >= 0x80:
        return "letter"
    return "other"


def pre_tokenize(data):
    chunks = []
    i, n = 0, len(data)
    while i < n:
        start = i
        if data[i] == 0x20 and i + 1 < n and classify(data[i + 1]) != "space":
            i += 1
        cls = classify(data[i])
        if cls == "space":
            while i < n and classify(data[i]) == "space":
                i += 1
        else:
            while i < n and classify(data[i]) == cls:
                i += 1
        chunks.append(data[start:i])
    return chunks


def bpe_count(chunk, ranks):
    parts = [bytes([b]) for b in chunk]
    while len(parts) > 1:
        best = None
        for i in range(len(parts) - 1):
            merged = parts[i] + parts[i + 1]
            rank = ranks.get(merged)
            if rank is not None and (best is None or rank < best[0]):
                best = (rank, i)
        if best is None:
            break
        _, i = best
        parts[i : i + 2] = [parts[i] + parts[i + 1]]
    return len(parts)


def count(text, ranks):
    return sum(bpe_count(c, ranks) for c in pre_tokenize(text.encode("utf-8")))


def main():
    ranks = load_ranks(sys.argv[1])
    for arg in sys.argv[2:]:
        print(f"{count(arg, ranks)}\t{arg!r}")


if __name__ == "__main__":
    main()
