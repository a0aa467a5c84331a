import hashlib
import json

import numpy as np
import pytest

from x2static.cli import replay_manifest, run
from x2static.corpus import Vocabulary, build_vocabulary, encode_corpus, save_corpus
from x2static.embeddings import WordEmbeddings
from x2static.planted import make_planted_space, synthesize_corpus
from x2static.stream import StreamHeader, mock_teacher_encode, write_stream


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def pipeline_dir(tmp_path):
    """Canonical corpus + vocab + planted embedding file ready for streaming."""
    corpus = synthesize_corpus(40, 300, seed=5, sentence_length=(4, 8))
    vocab = build_vocabulary(corpus, min_count=1, max_size=100)
    planted = make_planted_space(len(vocab), 8, seed=6)
    corpus_path = tmp_path / "corpus.txt"
    save_corpus(corpus, corpus_path)
    vocab_path = tmp_path / "vocab.tsv"
    vocab.save(vocab_path)
    planted_path = tmp_path / "planted.txt"
    WordEmbeddings(vocab.words, planted.vectors).save_text(planted_path)
    stream_path = tmp_path / "stream.bin"
    records = mock_teacher_encode(
        encode_corpus(corpus, vocab), "planted", planted, dim=8, seed=7
    )
    write_stream(StreamHeader(dim=8), records, stream_path)
    dataset_path = tmp_path / "sim.tsv"
    lines = []
    rng = np.random.default_rng(8)
    for _ in range(40):
        a, b = rng.choice(len(vocab), size=2, replace=False)
        gold = float(planted.vectors[a] @ planted.vectors[b])
        lines.append(f"{vocab.words[a]}\t{vocab.words[b]}\t{gold:.6f}")
    dataset_path.write_text("\n".join(lines) + "\n")
    return {
        "dir": tmp_path,
        "corpus": corpus_path,
        "vocab": vocab_path,
        "planted": planted_path,
        "stream": stream_path,
        "dataset": dataset_path,
    }


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(["train", "--no-such-flag", "x"]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert run(["frobnicate"]) == 1

    def test_no_subcommand_is_usage_error(self):
        assert run([]) == 1

    def test_missing_input_file_is_data_error(self, tmp_path, capsys):
        out = tmp_path / "o.txt"
        assert run(["preprocess", "--input", str(tmp_path / "nope.txt"), "--output", str(out)]) == 2
        assert "nope.txt" in capsys.readouterr().err

    def test_invalid_utf8_is_data_error_with_offset(self, tmp_path, capsys):
        raw = tmp_path / "raw.txt"
        raw.write_bytes(b"good text\xff\xfe more")
        assert run(["preprocess", "--input", str(raw), "--output", str(tmp_path / "o.txt")]) == 2
        assert "byte offset 9" in capsys.readouterr().err

    def test_bad_stream_is_data_error(self, tmp_path, pipeline_dir):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"XXXXGARBAGE")
        assert (
            run(
                [
                    "train",
                    "--stream", str(bad),
                    "--vocab", str(pipeline_dir["vocab"]),
                    "--output", str(tmp_path / "emb.txt"),
                ]
            )
            == 2
        )

    def test_zero_coverage_eval_is_data_error(self, tmp_path, pipeline_dir, capsys):
        emb = WordEmbeddings(["qq", "rr"], np.ones((2, 3), dtype=np.float32))
        emb_path = tmp_path / "emb.txt"
        emb.save_text(emb_path)
        code = run(["eval-sim", "--input", str(emb_path), "--dataset", str(pipeline_dir["dataset"])])
        assert code == 2


class TestPipeline:
    def test_preprocess_vocab_roundtrip(self, tmp_path, capsys):
        raw = tmp_path / "raw.txt"
        sentence = "The quick brown fox jumps over the lazy dog near the river today."
        raw.write_text("\n".join([sentence] * 3) + "\n\n" + sentence + "\n")
        corpus_out = tmp_path / "corpus.txt"
        assert run(["preprocess", "--input", str(raw), "--output", str(corpus_out)]) == 0
        vocab_out = tmp_path / "vocab.tsv"
        assert (
            run(
                [
                    "vocab",
                    "--input", str(corpus_out),
                    "--output", str(vocab_out),
                    "--min-count", "1",
                ]
            )
            == 0
        )
        vocab = Vocabulary.load(vocab_out)
        assert "the" in vocab

    def test_train_announces_defaults(self, pipeline_dir, capsys):
        out = pipeline_dir["dir"] / "emb.txt"
        code = run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
            ]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "epochs=1" in text
        assert "negatives=10" in text
        assert "lr=0.001" in text
        assert "batch=128" in text
        assert out.exists()

    def test_train_default_subsample_announced(self, pipeline_dir, capsys):
        out = pipeline_dir["dir"] / "emb2.txt"
        run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
            ]
        )
        assert "subsample-t=5e-06" in capsys.readouterr().out

    def test_train_deterministic_byte_identical(self, pipeline_dir):
        args = lambda out: [
            "train",
            "--stream", str(pipeline_dir["stream"]),
            "--vocab", str(pipeline_dir["vocab"]),
            "--output", str(out),
            "--subsample-t", "0.01",
            "--seed", "42",
        ]
        out1 = pipeline_dir["dir"] / "e1.txt"
        out2 = pipeline_dir["dir"] / "e2.txt"
        assert run(args(out1)) == 0
        assert run(args(out2)) == 0
        assert sha(out1) == sha(out2)

    def test_inputs_not_mutated(self, pipeline_dir):
        before = {k: sha(pipeline_dir[k]) for k in ("corpus", "vocab", "stream", "dataset")}
        out = pipeline_dir["dir"] / "emb3.txt"
        run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
            ]
        )
        run(["eval-sim", "--input", str(out), "--dataset", str(pipeline_dir["dataset"])])
        after = {k: sha(pipeline_dir[k]) for k in ("corpus", "vocab", "stream", "dataset")}
        assert before == after

    def test_binary_checkpoint(self, pipeline_dir):
        out = pipeline_dir["dir"] / "emb_ck.txt"
        ck = pipeline_dir["dir"] / "emb_ck.bin"
        code = run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--checkpoint", str(ck),
                "--subsample-t", "0.01",
            ]
        )
        assert code == 0
        text = WordEmbeddings.load_text(out)
        binary = WordEmbeddings.load_binary(ck, text.words)
        assert np.array_equal(binary.vectors, text.vectors)

    def test_threaded_train_runs(self, pipeline_dir):
        out = pipeline_dir["dir"] / "emb_threads.txt"
        code = run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
                "--threads", "2",
            ]
        )
        assert code == 0
        emb = WordEmbeddings.load_text(out)
        assert np.isfinite(emb.vectors).all()

    def test_static_baseline_mode(self, pipeline_dir, capsys):
        out = pipeline_dir["dir"] / "emb_static.txt"
        code = run(
            [
                "train",
                "--mode", "static_baseline",
                "--input", str(pipeline_dir["corpus"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--dim", "8",
                "--subsample-t", "0.01",
            ]
        )
        assert code == 0
        assert WordEmbeddings.load_text(out).dim == 8

    def test_mock_teacher_then_ase_recovers_planted(self, pipeline_dir, capsys):
        stream2 = pipeline_dir["dir"] / "stream2.bin"
        code = run(
            [
                "mock-teacher",
                "--input", str(pipeline_dir["corpus"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(stream2),
                "--mode", "planted",
                "--planted", str(pipeline_dir["planted"]),
            ]
        )
        assert code == 0
        ase_out = pipeline_dir["dir"] / "ase.txt"
        assert (
            run(
                [
                    "ase",
                    "--stream", str(stream2),
                    "--vocab", str(pipeline_dir["vocab"]),
                    "--output", str(ase_out),
                ]
            )
            == 0
        )
        ase = WordEmbeddings.load_text(ase_out)
        planted = WordEmbeddings.load_text(pipeline_dir["planted"])
        for word in ase.words:
            assert np.allclose(ase.vector(word), planted.vector(word), atol=1e-6)
        assert (pipeline_dir["dir"] / "ase.txt.coverage.tsv").exists()

    def test_eval_sim_report(self, pipeline_dir, capsys):
        report = pipeline_dir["dir"] / "report.tsv"
        code = run(
            [
                "eval-sim",
                "--input", str(pipeline_dir["planted"]),
                "--dataset", str(pipeline_dir["dataset"]),
                "--output", str(report),
            ]
        )
        assert code == 0
        line = report.read_text().strip().split("\n")[0].split("\t")
        assert line[0] == "sim"
        assert float(line[1]) > 0.99  # gold is planted cosine itself
        assert line[2] == line[3] == "40"

    def test_nn_output(self, pipeline_dir, capsys):
        vocab = Vocabulary.load(pipeline_dir["vocab"])
        code = run(
            ["nn", "--input", str(pipeline_dir["planted"]), "--query", vocab.words[0], "--k", "3"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 3
        word, cosine = lines[0].split("\t")
        assert word in vocab
        assert -1.0 <= float(cosine) <= 1.0

    def test_nn_oov_query(self, pipeline_dir):
        assert run(["nn", "--input", str(pipeline_dir["planted"]), "--query", "zzz"]) == 2


class TestManifest:
    def test_manifest_written_with_resolved_config(self, pipeline_dir):
        out = pipeline_dir["dir"] / "emb.txt"
        run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
            ]
        )
        manifest = json.loads((pipeline_dir["dir"] / "emb.txt.manifest.json").read_text())
        assert manifest["subcommand"] == "train"
        assert manifest["config"]["epochs"] == 1
        assert manifest["config"]["negatives"] == 10
        assert manifest["config"]["subsample-t"] == 0.01
        assert manifest["seed"] == 1
        assert manifest["version"]
        assert manifest["duration_s"] >= 0

    def test_manifest_replay_reproduces_bytes(self, pipeline_dir):
        out = pipeline_dir["dir"] / "emb.txt"
        run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
                "--seed", "9",
            ]
        )
        replay_out = pipeline_dir["dir"] / "replayed.txt"
        code = replay_manifest(
            pipeline_dir["dir"] / "emb.txt.manifest.json", {"output": str(replay_out)}
        )
        assert code == 0
        assert sha(out) == sha(replay_out)

    def test_config_file_precedence(self, pipeline_dir, capsys):
        config = pipeline_dir["dir"] / "cfg.json"
        config.write_text(json.dumps({"epochs": 2, "negatives": 3}))
        out = pipeline_dir["dir"] / "emb.txt"
        run(
            [
                "train",
                "--config", str(config),
                "--negatives", "5",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--subsample-t", "0.01",
            ]
        )
        text = capsys.readouterr().out
        assert "epochs=2" in text  # from config file
        assert "negatives=5" in text  # flag wins over config file


class TestSweep:
    def test_row_count_and_ordering(self, pipeline_dir, capsys):
        out = pipeline_dir["dir"] / "sweep.tsv"
        code = run(
            [
                "sweep",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--fractions", "0.5,1.0",
                "--dataset", str(pipeline_dir["dataset"]),
                "--subsample-t", "0.01",
            ]
        )
        assert code == 0
        rows = [line.split("\t") for line in out.read_text().strip().split("\n")]
        assert len(rows) == 4  # fractions x methods x datasets = 2 x 2 x 1
        methods = {r[0] for r in rows}
        assert methods == {"distilled", "ase"}

    def test_unsorted_fractions_usage_error(self, pipeline_dir):
        out = pipeline_dir["dir"] / "sweep.tsv"
        code = run(
            [
                "sweep",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--fractions", "1.0,0.5",
                "--dataset", str(pipeline_dir["dataset"]),
            ]
        )
        assert code == 1

    def test_fraction_with_no_records_is_data_error(self, pipeline_dir):
        out = pipeline_dir["dir"] / "sweep.tsv"
        code = run(
            [
                "sweep",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(out),
                "--fractions", "0.00001,1.0",
                "--dataset", str(pipeline_dir["dataset"]),
                "--subsample-t", "0.01",
            ]
        )
        assert code == 2

    def test_full_fraction_equals_standalone_run(self, pipeline_dir):
        sweep_out = pipeline_dir["dir"] / "sweep.tsv"
        run(
            [
                "sweep",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(sweep_out),
                "--fractions", "1.0",
                "--dataset", str(pipeline_dir["dataset"]),
                "--subsample-t", "0.01",
                "--seed", "4",
            ]
        )
        train_out = pipeline_dir["dir"] / "full.txt"
        run(
            [
                "train",
                "--stream", str(pipeline_dir["stream"]),
                "--vocab", str(pipeline_dir["vocab"]),
                "--output", str(train_out),
                "--subsample-t", "0.01",
                "--seed", "4",
            ]
        )
        report = pipeline_dir["dir"] / "report.tsv"
        run(
            [
                "eval-sim",
                "--input", str(train_out),
                "--dataset", str(pipeline_dir["dataset"]),
                "--output", str(report),
            ]
        )
        standalone_rho = float(report.read_text().split("\t")[1])
        sweep_rows = [r.split("\t") for r in sweep_out.read_text().strip().split("\n")]
        distilled_row = next(r for r in sweep_rows if r[0] == "distilled")
        assert float(distilled_row[3]) == pytest.approx(standalone_rho, abs=1e-6)
