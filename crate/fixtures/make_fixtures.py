"""Regenerates the fixture corpora and their expected outputs.

Everything expected here (golden runs, metric values) comes from a plain
brute-force implementation in this file, not from the Rust code.

    python3 fixtures/make_fixtures.py
"""

import json
import math
import random
import re
from pathlib import Path

from nltk.stem.porter import PorterStemmer

ROOT = Path(__file__).resolve().parent
STEMMER = PorterStemmer(mode=PorterStemmer.MARTIN_EXTENSIONS)
STOPWORDS = {
    w.strip()
    for w in (ROOT.parent / "crates/core/data/stopwords_en.txt").read_text().splitlines()
    if w.strip() and not w.startswith("#")
}


def analyze(text):
    out = []
    for tok in re.findall(r"[^\W_]+", text):
        tok = tok.lower()
        if tok in STOPWORDS:
            continue
        out.append(STEMMER.stem(tok) if tok.isascii() and tok.isalpha() and len(tok) > 2 else tok)
    return out


def bm25_run(docs, queries, k1, b, hits):
    """docs: [(id, text)], queries: [(qid, text)] -> {qid: [(docid, score)]}"""
    analyzed = [(d, analyze(t)) for d, t in docs]
    n = len(docs)
    avgdl = sum(len(t) for _, t in analyzed) / n
    df = {}
    for _, terms in analyzed:
        for t in set(terms):
            df[t] = df.get(t, 0) + 1
    run = {}
    for qid, text in queries:
        scored = []
        for docid, terms in analyzed:
            dl = len(terms)
            s, matched = 0.0, False
            for q in sorted(set(analyze(text))):
                tf = terms.count(q)
                if tf == 0:
                    continue
                matched = True
                idf = math.log(1 + (n - df[q] + 0.5) / (df[q] + 0.5))
                w = idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
                s += w * analyze(text).count(q)
            if matched:
                scored.append((docid, s))
        scored.sort(key=lambda x: (-x[1], x[0]))
        run[qid] = scored[:hits]
    return run


def dense_run(docs, queries, hits):
    run = {}
    for qid, q in queries:
        scored = [(d, sum(a * b for a, b in zip(q, v))) for d, v in docs]
        scored.sort(key=lambda x: (-x[1], x[0]))
        run[qid] = scored[:hits]
    return run


def fuse(dense, sparse, alpha, hits):
    out = {}
    for qid in sorted(set(dense) | set(sparse)):
        d = dict(dense.get(qid, []))
        s = dict(sparse.get(qid, []))
        dmin = min(d.values()) if d else 0.0
        smin = min(s.values()) if s else 0.0
        scored = [(doc, d.get(doc, dmin) + alpha * s.get(doc, smin)) for doc in set(d) | set(s)]
        scored.sort(key=lambda x: (-x[1], x[0]))
        out[qid] = scored[:hits]
    return out


def metrics(run, qrels, k_mrr=10, k_recall=10):
    rr, rec, ap = [], [], []
    for qid, judged in sorted(qrels.items()):
        rel = {d for d, g in judged.items() if g >= 1}
        ranked = [d for d, _ in run.get(qid, [])]
        first = next((i + 1 for i, d in enumerate(ranked[:k_mrr]) if d in rel), None)
        rr.append(1 / first if first else 0.0)
        rec.append(len(rel & set(ranked[:k_recall])) / len(rel) if rel else 0.0)
        found, total = 0, 0.0
        for i, d in enumerate(ranked):
            if d in rel:
                found += 1
                total += found / (i + 1)
        ap.append(total / len(rel) if rel else 0.0)
    mean = lambda xs: sum(xs) / len(xs)
    return {"mrr@10": mean(rr), "recall@10": mean(rec), "map": mean(ap)}


def write_trec(run, path, tag="ferret"):
    with open(path, "w") as f:
        for qid in sorted(run):
            for i, (d, s) in enumerate(run[qid]):
                f.write(f"{qid} Q0 {d} {i + 1} {s:.6f} {tag}\n")


def write_jsonl(rows, path):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


def toy():
    d = ROOT / "toy"
    (d / "corpus").mkdir(parents=True, exist_ok=True)
    docs = [("d1", "a cat"), ("d2", "cat cat dog"), ("d3", "dog")]
    write_jsonl([{"id": i, "contents": c} for i, c in docs], d / "corpus/docs.jsonl")
    queries = [("q1", "cat"), ("q2", "dog"), ("q3", "a cat and a dog"), ("q4", "the")]
    (d / "topics.tsv").write_text("".join(f"{q}\t{t}\n" for q, t in queries))
    write_trec(bm25_run(docs, queries, 0.9, 0.4, 1000), d / "golden_bm25.trec")


def eval_case():
    d = ROOT / "eval"
    d.mkdir(exist_ok=True)
    # Relevant documents at ranks 1, 4 and nowhere.
    run = {
        "q1": [("a", 4.0), ("b", 3.0), ("c", 2.0)],
        "q2": [("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)],
        "q3": [("a", 2.0), ("b", 1.0)],
    }
    qrels = {"q1": {"a": 1}, "q2": {"d": 2, "b": 0}, "q3": {"z": 1}}
    write_trec(run, d / "run.trec", tag="fixture")
    with open(d / "qrels.txt", "w") as f:
        for q in sorted(qrels):
            for doc, g in sorted(qrels[q].items()):
                f.write(f"{q} 0 {doc} {g}\n")
    assert abs(metrics(run, qrels)["mrr@10"] - 5 / 12) < 1e-12


TOPICS = {
    "energy": "atomic energy nuclear reactor power plant uranium fission commission electricity grid",
    "seafood": "lobster roll crab shrimp seafood restaurant maine butter bread harbor",
    "finance": "stock market shares investors trading prices bonds bank interest rates",
    "space": "rocket launch orbit satellite astronauts moon mission telescope planets stars",
    "garden": "garden tomatoes soil seeds flowers watering compost plants growing spring",
    "music": "guitar concert band songs album singer drums melody orchestra playing",
}
FILLER = "the of and a to in is it was with for on that as by this from have".split()


def mini():
    d = ROOT / "mini"
    (d / "corpus").mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240611)
    names = sorted(TOPICS)
    docs, labels = [], {}
    for i in range(36):
        topic = names[i % len(names)]
        words = TOPICS[topic].split()
        other = TOPICS[names[(i * 7 + 3) % len(names)]].split()
        n = rng.randint(6, 14)
        body = [rng.choice(words) for _ in range(n)]
        body += [rng.choice(other) for _ in range(rng.randint(0, 3))]
        body += [rng.choice(FILLER) for _ in range(rng.randint(2, 6))]
        rng.shuffle(body)
        docid = f"doc{i:02d}"
        docs.append((docid, " ".join(body).capitalize() + "."))
        labels[docid] = topic
    docs.append(("doc36", "Atomic ENERGY commissions regulate the atomic reactors."))
    labels["doc36"] = "energy"
    # Two files to exercise directory ingestion and ordering.
    rows = [{"id": i, "contents": c} for i, c in docs]
    write_jsonl(rows[:20], d / "corpus/part-a.jsonl")
    (d / "corpus/part-b.json").write_text(json.dumps(rows[20:], indent=1) + "\n")

    queries = [
        ("q1", "atomic energy commission"),
        ("q2", "lobster roll restaurant"),
        ("q3", "stock market interest rates"),
        ("q4", "rocket launch to the moon"),
        ("q5", "growing tomatoes in compost soil"),
        ("q6", "guitar concert"),
        ("q7", "nuclear power electricity"),
        ("q8", "seafood harbor bread"),
    ]
    qtopic = {"q1": "energy", "q2": "seafood", "q3": "finance", "q4": "space",
              "q5": "garden", "q6": "music", "q7": "energy", "q8": "seafood"}
    (d / "topics.tsv").write_text("".join(f"{q}\t{t}\n" for q, t in queries))

    # Judge every document of the query's topic: grade 2 if it shares a
    # query word, 1 otherwise; a few off-topic documents get grade 0.
    qrels = {}
    for qid, text in queries:
        qterms = set(analyze(text))
        judged = {}
        for docid, content in docs:
            if labels[docid] == qtopic[qid]:
                judged[docid] = 2 if qterms & set(analyze(content)) else 1
            elif rng.random() < 0.1:
                judged[docid] = 0
        qrels[qid] = judged
    with open(d / "qrels.txt", "w") as f:
        for q in sorted(qrels):
            for doc, g in sorted(qrels[q].items()):
                f.write(f"{q} 0 {doc} {g}\n")

    # Vectors on a 0.25 grid so every dot product is exact in f32.
    dim = 8
    def vec(topic):
        v = [rng.choice([-0.5, -0.25, 0.0, 0.25, 0.5]) for _ in range(dim)]
        v[names.index(topic)] += 0.75
        return v
    dvecs = [(docid, vec(labels[docid])) for docid, _ in docs]
    qvecs = [(qid, vec(qtopic[qid])) for qid, _ in queries]
    write_jsonl([{"id": i, "vector": v} for i, v in dvecs], d / "doc_vectors.jsonl")
    write_jsonl([{"id": i, "vector": v} for i, v in qvecs], d / "query_vectors.jsonl")

    hits = 10
    runs = {
        "bm25-default": bm25_run(docs, queries, 0.9, 0.4, hits),
        "bm25-tuned": bm25_run(docs, queries, 0.82, 0.68, hits),
        "dense-flat": dense_run(dvecs, qvecs, hits),
    }
    runs["dense-hnsw"] = runs["dense-flat"]
    runs["hybrid"] = fuse(runs["dense-flat"], runs["bm25-default"], 0.5, hits)
    write_trec(runs["bm25-default"], d / "golden_bm25.trec")
    write_trec(runs["hybrid"], d / "golden_hybrid.trec")

    expected = {name: metrics(run, qrels) for name, run in runs.items()}
    (d / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")

    run_params = {
        "bm25-default": ("bm25", "topics.tsv", "{ k1: 0.9, b: 0.4, hits: 10 }"),
        "bm25-tuned": ("bm25", "topics.tsv", "{ k1: 0.82, b: 0.68, hits: 10 }"),
        "dense-flat": ("dense-flat", "query_vectors.jsonl", "{ vectors: doc_vectors.jsonl, hits: 10 }"),
        "dense-hnsw": ("dense-hnsw", "query_vectors.jsonl",
                       "{ vectors: doc_vectors.jsonl, hits: 10, M: 16, ef_construction: 200, ef_search: 128, seed: 42 }"),
        "hybrid": ("hybrid", None, "{ dense: dense-flat, sparse: bm25-default, alpha: 0.5, hits: 10 }"),
    }
    lines = ["name: mini", "corpus: corpus", "index:", "  store_positions: true", "  store_docvectors: true",
             "  threads: 2", "runs:"]
    for name, (model, topics, params) in run_params.items():
        lines += [f"  - name: {name}", f"    model: {model}"]
        if topics:
            lines.append(f"    topics: {topics}")
        lines += [f"    params: {params}", f"    output: runs/{name}.trec"]
    lines.append("checks:")
    for name in run_params:
        for metric, value in sorted(expected[name].items()):
            lines += [f"  - run: {name}", "    qrels: qrels.txt", f"    metric: {metric}",
                      f"    expected: {value:.6f}", "    tolerance: 0.000001"]
    (d / "regression.yaml").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    toy()
    eval_case()
    mini()
