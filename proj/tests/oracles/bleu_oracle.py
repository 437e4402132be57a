"""Reference BLEU values from nltk (sentence_bleu, SmoothingFunction().method2).

method2 adds one to numerator and denominator for n >= 2. Every candidate
in the pair file has at least four tokens, where this coincides with the
C++ implementation.
"""
import json
import sys

from nltk.translate.bleu_score import SmoothingFunction, sentence_bleu


def main():
    pairs = json.load(open(sys.argv[1]))
    smooth = SmoothingFunction().method2
    out = []
    for p in pairs:
        ref, cand = p["reference"].split(), p["candidate"].split()
        assert len(cand) >= 4, p
        value = sentence_bleu([ref], cand, smoothing_function=smooth)
        out.append(dict(p, expected=repr(float(value))))
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
