"""End-to-end walk through the toolchain on a tiny in-memory corpus.

raw text -> preprocess -> vocabulary -> mock teacher stream -> distilled
embeddings + ASE baseline -> similarity evaluation -> nearest neighbors.

Run:  python3 demos/01_end_to_end_pipeline.py
"""

import io
import tempfile
from pathlib import Path

from x2static import (
    AseAccumulator,
    SimilarityDataset,
    StreamHeader,
    TrainerConfig,
    WordEmbeddings,
    ase_finalize,
    build_vocabulary,
    distill,
    encode_corpus,
    evaluate_dataset,
    mock_teacher_encode,
    nearest_neighbors,
    preprocess_corpus,
    read_stream,
    report_tsv,
    write_stream,
)

RAW = """
The cat sat on the warm mat and watched the garden all afternoon.
A small dog barked at the cat from the garden gate until sunset came.
The cat ignored the dog and slept on the mat near the kitchen door.

Stock markets moved higher on Tuesday as traders weighed bank earnings.
Bond yields fell while the dollar held steady against major currencies.
Analysts said bank profits beat forecasts across every major region.

Rain fell on the garden all night and the dog slept inside the house.
By morning the mat outside the door was soaked and the cat stayed in.
The kitchen smelled of coffee while the dog watched the wet garden.
"""


def main() -> None:
    print("== preprocess ==")
    corpus = preprocess_corpus(RAW)
    print(f"{len(corpus.paragraphs)} paragraphs survived the filter "
          f"({corpus.num_sentences()} sentences, {corpus.num_tokens()} tokens)")

    print("\n== vocabulary ==")
    vocab = build_vocabulary(corpus, min_count=1, max_size=1000)
    print(f"{len(vocab)} words; top five:",
          ", ".join(f"{w}({c})" for w, c in zip(vocab.words[:5], vocab.counts[:5])))

    print("\n== mock teacher stream ==")
    encoded = encode_corpus(corpus, vocab)
    records = mock_teacher_encode(encoded, "hash", scope="sentence", dim=24, seed=7)
    workdir = Path(tempfile.mkdtemp(prefix="x2static_demo_"))
    stream_path = workdir / "stream.bin"
    n_bytes = write_stream(StreamHeader(dim=24), records, stream_path)
    print(f"wrote {n_bytes} bytes to {stream_path}")

    print("\n== distillation ==")
    config = TrainerConfig(seed=1, epochs=40, subsample_t=0.05)  # tiny corpus: many epochs
    result = distill(str(stream_path), vocab, config)
    print(f"{result.examples_trained} examples; epoch loss went "
          f"{result.epoch_losses[0]:.3f} -> {result.epoch_losses[-1]:.3f}")
    distilled = WordEmbeddings(vocab.words, result.U)

    print("\n== ASE baseline ==")
    header, records = read_stream(str(stream_path))
    acc = AseAccumulator(vocab, header.dim)
    acc.add_stream(records)
    ase, coverage = ase_finalize(acc)
    print(f"ASE covers {coverage.seen}/{len(vocab)} words")

    print("\n== evaluation ==")
    dataset = SimilarityDataset(
        "toy-sim",
        [
            ("cat", "dog", 8.0),
            ("cat", "mat", 6.0),
            ("garden", "rain", 5.0),
            ("bank", "earnings", 7.0),
            ("cat", "bank", 1.0),
            ("dog", "yields", 0.5),
        ],
    )
    reports = [evaluate_dataset(distilled, dataset), evaluate_dataset(ase, dataset)]
    reports[0].dataset = "toy-sim/distilled"
    reports[1].dataset = "toy-sim/ase"
    print(report_tsv(reports, average_row=False), end="")

    print("\n== nearest neighbors of 'cat' (distilled) ==")
    for word, cosine in nearest_neighbors(distilled, "cat", 5):
        print(f"  {word:10s} {cosine:+.3f}")


if __name__ == "__main__":
    main()
