"""Corpus-size sweep: distilled vs ASE quality as the stream prefix grows.

Uses a noisy planted teacher so ASE quality saturates while distillation keeps
improving with data, and writes a TSV (plus a PNG when matplotlib is around).

Run:  python3 demos/03_corpus_size_sweep.py [output.tsv]
"""

import sys
import tempfile
from pathlib import Path

from x2static import (
    SimilarityDataset,
    StreamHeader,
    TrainerConfig,
    build_vocabulary,
    encode_corpus,
    make_planted_space,
    mock_teacher_encode,
    planted_cosines,
    planted_pair_ids,
    synthesize_corpus,
    write_stream,
)
from x2static.cli import run_sweep

N_WORDS = 500
N_SENTENCES = 60_000
DIM = 32
NOISE = 0.5
FRACTIONS = [0.05, 0.1, 0.25, 0.5, 1.0]


def main() -> None:
    out_path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("sweep.tsv")
    corpus = synthesize_corpus(N_WORDS, N_SENTENCES, seed=7)
    vocab = build_vocabulary(corpus, min_count=1, max_size=N_WORDS)
    planted = make_planted_space(len(vocab), DIM, seed=11)
    encoded = encode_corpus(corpus, vocab)
    stream_path = Path(tempfile.mkdtemp(prefix="x2static_sweep_")) / "noisy.bin"
    write_stream(
        StreamHeader(dim=DIM),
        mock_teacher_encode(encoded, "planted", planted, dim=DIM, seed=3, noise_scale=NOISE),
        stream_path,
    )

    pairs = planted_pair_ids(len(vocab), 1_000, seed=13)
    gold = planted_cosines(planted, pairs)
    dataset = SimilarityDataset(
        "planted",
        [(vocab.words[a], vocab.words[b], float(g)) for (a, b), g in zip(pairs, gold)],
    )

    print(f"sweeping fractions {FRACTIONS} of {N_SENTENCES} noisy records...")
    rows = run_sweep(stream_path, vocab, FRACTIONS, [dataset], TrainerConfig(seed=5, epochs=4))
    with open(out_path, "w", encoding="utf-8") as f:
        for method, fraction, name, rho in rows:
            f.write(f"{method}\t{fraction:g}\t{name}\t{rho:.6f}\n")
            print(f"  {method:10s} fraction={fraction:<5g} rho={rho:+.4f}")
    print(f"rows -> {out_path}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping plot")
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in ("distilled", "ase"):
        xs = [f for m, f, _, _ in rows if m == method]
        ys = [r for m, _, _, r in rows if m == method]
        ax.plot(xs, ys, marker="o", label=method)
    ax.set_xscale("log")
    ax.set_xlabel("corpus fraction")
    ax.set_ylabel("Spearman rho vs planted similarities")
    ax.set_title("Effect of corpus size (noisy planted teacher)")
    ax.legend()
    fig.tight_layout()
    png = out_path.with_suffix(".png")
    fig.savefig(png, dpi=120)
    print(f"plot -> {png}")


if __name__ == "__main__":
    main()
