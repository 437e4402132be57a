"""Brute-force tf-idf cosine, written straight from the definition.

corpus = every text in the pair file; tokens are maximal runs of ASCII
letters/digits, lowercased; tf = raw count; idf = ln((1+N)/(1+df)) + 1.
"""
import json
import math
import sys


def tokens(text):
    out, cur = [], ""
    for ch in text:
        if ch.isascii() and ch.isalnum():
            cur += ch.lower()
        else:
            if cur:
                out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def cosine(corpus, a, b):
    docs = [set(tokens(d)) for d in corpus]
    n = len(corpus)
    vocab = sorted(set(tokens(a)) | set(tokens(b)))

    def weight(text, term):
        tf = tokens(text).count(term)
        df = sum(1 for d in docs if term in d)
        return tf * (math.log((1 + n) / (1 + df)) + 1)

    va = [weight(a, t) for t in vocab]
    vb = [weight(b, t) for t in vocab]
    dot = sum(x * y for x, y in zip(va, vb))
    na = math.sqrt(sum(x * x for x in va))
    nb = math.sqrt(sum(y * y for y in vb))
    return dot / (na * nb)


def main():
    pairs = json.load(open(sys.argv[1]))
    corpus = [p["reference"] for p in pairs] + [p["candidate"] for p in pairs]
    out = {
        "corpus": corpus,
        "pairs": [dict(p, expected=repr(cosine(corpus, p["reference"], p["candidate"])))
                  for p in pairs],
        "small": {"corpus": ["a b", "b c", "a c"], "a": "a b", "b": "b c",
                  "expected": repr(cosine(["a b", "b c", "a c"], "a b", "b c"))},
    }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
