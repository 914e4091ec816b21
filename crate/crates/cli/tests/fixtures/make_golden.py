#!/usr/bin/env python3
"""Regenerates the golden files for the CLI tests.

Builds the fixture corpus, then computes the expected model file and score
files by brute-force window scans, without using the Rust code.

    python3 make_golden.py   # run from this directory
"""
import random
import struct

N = 3
SOS = 0xFFFFFFFF
EOS = 0xFFFFFFFE


def corpus():
    rng = random.Random(7)
    normal = []
    for i in range(8):
        seq = []
        for _ in range(rng.randint(10, 40)):
            # A loose cycle with occasional detours, so contexts have
            # several successors and some ties.
            if seq and rng.random() < 0.8:
                seq.append((seq[-1] + 1) % 6)
            else:
                seq.append(rng.randrange(9))
        normal.append((f"run{i}", "Normal", seq))
    long_run = [(j % 6) if j % 97 else 8 for j in range(300)]
    bad = [k % 6 for k in range(120)] + [rng.randrange(10) for _ in range(30)] + [k % 6 for k in range(150)]
    return normal + [("long", "Normal", long_run), ("bad", "Anomaly", bad)]


def padded(seq):
    return [SOS] * (N - 1) + seq + [EOS]


def windows(sequences):
    for seq in sequences:
        p = padded(seq)
        for i in range(len(p) - N + 1):
            yield tuple(p[i:i + N - 1]), p[i + N - 1]


def model_bytes(train):
    ws = list(windows(train))
    out = b"NGRM" + struct.pack("<III", 1, N, len({nxt for _, nxt in ws}))
    out += struct.pack("<Q", len(ws))
    for e in sorted({nxt for _, nxt in ws}):
        out += struct.pack("<IQ", e, sum(1 for _, nxt in ws if nxt == e))
    contexts = sorted({ctx for ctx, _ in ws})
    out += struct.pack("<Q", len(contexts))
    for ctx in contexts:
        succ = sorted({nxt for c, nxt in ws if c == ctx})
        out += struct.pack(f"<{N - 1}I", *ctx) + struct.pack("<I", len(succ))
        for e in succ:
            out += struct.pack("<IQ", e, sum(1 for c, nxt in ws if c == ctx and nxt == e))
    return out


def trailing_mean(values, w):
    out = []
    for i in range(len(values)):
        span = values[max(0, i - w + 1):i + 1]
        total = 0.0
        for v in span:
            total += v
        out.append(total / len(span))
    return out


def scores(train, seq):
    ws = list(windows(train))
    rows = []
    for ctx, event in windows([seq]):
        total = sum(1 for c, _ in ws if c == ctx)
        occ = sum(1 for c, nxt in ws if c == ctx and nxt == event)
        rows.append((event, occ, occ / total if total else 0.0))
    occs = [float(r[1]) for r in rows]
    probs = [r[2] for r in rows]
    ma = [trailing_mean(occs, 100), trailing_mean(occs, 1000), trailing_mean(probs, 100), trailing_mean(probs, 1000)]
    lines = ["position,event_id,occurrence,probability,ma_occ_100,ma_occ_1000,ma_prob_100,ma_prob_1000"]
    for i, (event, occ, prob) in enumerate(rows):
        name = "EoS" if event == EOS else str(event)
        smoothed = ",".join("%.6f" % m[i] for m in ma)
        lines.append(f"{i + 1},{name},{occ},{prob:.6f},{smoothed}")
    return "\n".join(lines) + "\n"


def main():
    seqs = corpus()
    with open("corpus.tsv", "w") as f:
        f.write("#seqfile v1 vocab=10\n")
        for sid, label, events in seqs:
            f.write(f"{sid}\t{label}\t{' '.join(map(str, events))}\n")
    train = [events for _, label, events in seqs if label == "Normal"]
    with open("model_n3.golden", "wb") as f:
        f.write(model_bytes(train))
    by_id = {sid: events for sid, _, events in seqs}
    with open("scores_bad.golden", "w") as f:
        f.write(scores(train, by_id["bad"]))
    with open("scores_run2.golden", "w") as f:
        f.write(scores(train, by_id["run2"]))


if __name__ == "__main__":
    main()
