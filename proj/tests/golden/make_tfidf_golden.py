"""Regenerates tfidf_dim16.json from a standalone implementation of the hashed TF-IDF."""
import json
import math
import pathlib
import re

HERE = pathlib.Path(__file__).parent
DIM = 16


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) % (1 << 64)
    return h


def tokens(text: str):
    return [t.lower() for t in re.findall(r"[A-Za-z0-9]+", text)]


def main():
    corpus = (HERE.parent / "fixtures" / "tfidf_corpus.txt").read_text().splitlines()
    corpus = [d for d in corpus if d.strip()]
    n = len(corpus)
    df = [0] * DIM
    for doc in corpus:
        for b in {fnv1a64(t.encode()) % DIM for t in tokens(doc)}:
            df[b] += 1
    idf = [math.log((1 + n) / (1 + d)) + 1 for d in df]
    vectors = []
    for doc in corpus:
        v = [0.0] * DIM
        for t in tokens(doc):
            v[fnv1a64(t.encode()) % DIM] += 1.0
        v = [x * w for x, w in zip(v, idf)]
        norm = math.sqrt(sum(x * x for x in v))
        vectors.append([x / norm for x in v])
    out = {"dim": DIM, "idf": idf, "vectors": vectors,
           "fnv1a64": {w: str(fnv1a64(w.encode())) for w in ["", "a", "rainfall"]}}
    (HERE / "tfidf_dim16.json").write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
