"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The planted-recovery fixtures (2,000-word space, 200,000-sentence corpus) are
built once at module scope and shared; streams go through the real on-disk
binary format.
"""

import math
import time

import numpy as np
import pytest

from x2static.ase import AseAccumulator, ase_finalize
from x2static.cli import run, run_sweep
from x2static.corpus import build_vocabulary, encode_corpus
from x2static.embeddings import WordEmbeddings, init_matrix
from x2static.evaluation import SimilarityDataset, spearman_rho
from x2static.planted import (
    make_planted_space,
    planted_cosines,
    planted_pair_ids,
    synthesize_corpus,
)
from x2static.stream import StreamHeader, mock_teacher_encode, read_stream, write_stream
from x2static.trainer import (
    AdamState,
    NegativeTable,
    TrainerConfig,
    distill,
    keep_target,
    lazy_adam_step,
    logistic_loss,
    pair_loss,
    pair_loss_grads,
)

N_WORDS = 2_000
N_SENTENCES = 200_000
DIM = 32
CORPUS_SEED = 7
PLANTED_SEED = 11
STREAM_SEED = 3
TRAIN_SEED = 5
PAIRS_SEED = 13


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f": {detail}" if detail else ""))


@pytest.fixture(scope="module")
def planted_world(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    corpus = synthesize_corpus(N_WORDS, N_SENTENCES, seed=CORPUS_SEED)
    vocab = build_vocabulary(corpus, min_count=10, max_size=750_000)
    assert len(vocab) == N_WORDS
    planted = make_planted_space(len(vocab), DIM, seed=PLANTED_SEED)
    encoded = encode_corpus(corpus, vocab)

    clean_path = root / "clean.bin"
    write_stream(
        StreamHeader(dim=DIM),
        mock_teacher_encode(encoded, "planted", planted, dim=DIM, seed=STREAM_SEED),
        clean_path,
    )
    noisy_path = root / "noisy.bin"
    write_stream(
        StreamHeader(dim=DIM),
        mock_teacher_encode(
            encoded, "planted", planted, dim=DIM, seed=STREAM_SEED, noise_scale=0.5
        ),
        noisy_path,
    )
    pairs = planted_pair_ids(len(vocab), 1_000, seed=PAIRS_SEED)
    gold = planted_cosines(planted, pairs)
    dataset = SimilarityDataset(
        "planted",
        [(vocab.words[a], vocab.words[b], float(g)) for (a, b), g in zip(pairs, gold)],
    )
    return {
        "root": root,
        "corpus": corpus,
        "vocab": vocab,
        "planted": planted,
        "encoded": encoded,
        "clean_stream": clean_path,
        "noisy_stream": noisy_path,
        "pairs": pairs,
        "gold": gold,
        "dataset": dataset,
    }


def pair_rho(U: np.ndarray, pairs: np.ndarray, gold: np.ndarray) -> float:
    U = U.astype(np.float64)
    norms = np.linalg.norm(U, axis=1)
    pred = (U[pairs[:, 0]] * U[pairs[:, 1]]).sum(axis=1) / (
        norms[pairs[:, 0]] * norms[pairs[:, 1]]
    )
    return spearman_rho(pred, gold)


class TestCriterion1NumericalCore:
    def test_numerical_core_suite(self):
        started = time.perf_counter()

        # logistic identity on the 601-point grid
        x = np.linspace(-30.0, 30.0, 601)
        identity_err = float(np.abs((logistic_loss(x) - logistic_loss(-x)) + x).max())
        assert identity_err < 1e-12

        # analytic gradients vs central finite differences, dim 8, f64, h=1e-5
        rng = np.random.default_rng(101)
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            u = rng.normal(size=8)
            v = rng.normal(size=8)
            negs = rng.normal(size=(int(rng.integers(1, 6)), 8))
            _, gu, gn, gv = pair_loss_grads(u, v, negs)

            def fd(f, x0):
                grad = np.zeros_like(x0)
                for i in range(len(x0)):
                    up, dn = x0.copy(), x0.copy()
                    up[i] += h
                    dn[i] -= h
                    grad[i] = (f(up) - f(dn)) / (2 * h)
                return grad

            checks = [(gu, fd(lambda z: pair_loss(z, v, negs), u.copy()))]
            checks.append((gv, fd(lambda z: pair_loss(u, z, negs), v.copy())))
            for j in range(len(negs)):
                def f_neg(z, j=j):
                    m = negs.copy()
                    m[j] = z
                    return pair_loss(u, v, m)

                checks.append((gn[j], fd(f_neg, negs[j].copy())))
            for analytic, numeric in checks:
                scale = max(float(np.abs(numeric).max()), 1e-8)
                worst = max(worst, float(np.abs(analytic - numeric).max()) / scale)
        assert worst < 1e-6

        # first lazy-Adam step vs the closed form on a dense single-row case
        config = TrainerConfig()
        params = np.zeros((1, 8), dtype=np.float64)
        state = AdamState.zeros(1, 8)
        g = rng.normal(size=(1, 8))
        lazy_adam_step(params, state, np.array([0]), g, config)
        m_hat = g  # first step: m/(1-b1) with m=(1-b1)g
        v_hat = g * g
        closed = -config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        adam_err = float(np.abs(params - closed).max())
        assert adam_err < 1e-12

        elapsed = time.perf_counter() - started
        report(
            "numerical core",
            True,
            f"identity<=1e-12, gradcheck rel err {worst:.2e}, adam err {adam_err:.2e}, "
            f"{elapsed:.1f}s",
        )
        assert elapsed < 10.0


class TestCriterion2Sampling:
    def test_sampling_suite(self):
        started = time.perf_counter()
        rng = np.random.default_rng(202)

        # negative-sampling frequencies on a 10-word vocabulary, 1e6 draws
        counts = np.array([1000, 500, 400, 250, 150, 90, 60, 40, 20, 10], dtype=np.int64)
        table = NegativeTable(counts)
        expected = counts.astype(np.float64) ** 0.75
        expected /= expected.sum()
        draws = table.draw(1_000_000, rng)
        empirical = np.bincount(draws, minlength=10) / 1_000_000
        neg_err = float(np.abs(empirical - expected).max())
        assert neg_err < 0.005

        # subsampling keep-rate at f=0.05, t=5e-6 over 1e6 trials
        kept = sum(keep_target(0.05, 5e-6, rng) for _ in range(1_000_000))
        keep_rate = kept / 1_000_000
        keep_err = abs(keep_rate - 0.0101)
        assert keep_err < 0.003

        elapsed = time.perf_counter() - started
        report(
            "sampling",
            True,
            f"neg err {neg_err:.4f} (<0.005), keep rate {keep_rate:.5f} "
            f"(target 0.0101 +/- 0.003), {elapsed:.1f}s",
        )
        assert elapsed < 30.0


class TestCriterion3PlantedRecovery:
    def test_planted_recovery(self, planted_world):
        started = time.perf_counter()
        w = planted_world
        config = TrainerConfig(seed=TRAIN_SEED)  # stock defaults, 1 epoch
        result = distill(str(w["clean_stream"]), w["vocab"], config)
        rho = pair_rho(result.U, w["pairs"], w["gold"])
        elapsed = time.perf_counter() - started
        ok = rho >= 0.80 and elapsed < 600.0
        report(
            "planted recovery",
            ok,
            f"rho={rho:.4f} (>=0.80 required), {result.examples_trained} examples, "
            f"{elapsed:.0f}s (<600s)",
        )
        assert elapsed < 600.0
        # Known red: even the exact convex optimum of the training objective
        # on these examples reaches only rho ~0.59; a conditional-mean
        # estimator over the same examples reaches ~0.86, which is what the
        # threshold evidently tracks (details in README). Kept faithful.
        assert rho >= 0.80, (
            f"measured rho={rho:.4f}; the 0.80 threshold exceeds what "
            "optimizing this objective on this corpus can produce (exact "
            "convex optimum ~0.59, conditional-mean estimator ~0.86); "
            "see README 'Tests and the acceptance suite'"
        )

    def test_three_epoch_loss_decrease(self, planted_world):
        # mean epoch loss strictly decreases over the first 3 epochs; the
        # final mean is at least 20% below the loss of the untrained model
        w = planted_world
        config = TrainerConfig(seed=TRAIN_SEED, epochs=3)
        result = distill(str(w["clean_stream"]), w["vocab"], config)
        losses = result.epoch_losses
        assert losses[0] > losses[1] > losses[2]

        # initial loss: mean pair loss of the seeded initialization over the
        # first 2000 stream sentences' mean-context examples
        rng = np.random.default_rng(config.seed)
        U0 = init_matrix(len(w["vocab"]), DIM, rng).astype(np.float64)
        table = NegativeTable(w["vocab"].counts)
        probe_rng = np.random.default_rng(999)
        _, records = read_stream(str(w["clean_stream"]))
        total, n = 0.0, 0
        for record in records:
            ctx = record.vectors.astype(np.float64).mean(axis=0)
            wid = int(record.token_ids[0])
            negs = table.sample(config.negatives, wid, probe_rng)
            total += pair_loss(U0[wid], ctx, U0[negs])
            n += 1
            if n >= 2000:
                break
        initial = total / n
        reduction = 1.0 - losses[-1] / initial
        report(
            "three-epoch loss decrease",
            reduction >= 0.20,
            f"epoch means {[round(x, 4) for x in losses]}, initial {initial:.4f}, "
            f"reduction {reduction:.1%}",
        )
        assert reduction >= 0.20


class TestCriterion4DistilledVsAseTrend:
    def test_sweep_trend_with_noise(self, planted_world):
        w = planted_world
        config = TrainerConfig(seed=TRAIN_SEED)
        rows = run_sweep(
            str(w["noisy_stream"]), w["vocab"], [0.05, 0.25, 1.0], [w["dataset"]], config
        )
        distilled = {f: rho for method, f, _, rho in rows if method == "distilled"}
        ok = distilled[1.0] > distilled[0.05]
        report(
            "distilled corpus-size trend",
            ok,
            "distilled rho " + " ".join(f"{f:g}:{r:.4f}" for f, r in sorted(distilled.items())),
        )
        assert ok

    def test_ase_exact_recovery_at_zero_noise(self, planted_world):
        w = planted_world
        header, records = read_stream(str(w["clean_stream"]))
        acc = AseAccumulator(w["vocab"], header.dim)
        acc.add_stream(records)
        embeddings, cov = ase_finalize(acc)
        assert cov.unseen == 0
        err = float(
            np.abs(embeddings.vectors - w["planted"].vectors.astype(np.float64)).max()
        )
        report("ASE exact recovery", err < 1e-9, f"max |ASE - planted| = {err:.2e} (<1e-9)")
        assert err < 1e-9


class TestCriterion5DeterminismAndFormats:
    def test_identical_seeds_byte_identical_files(self, planted_world, tmp_path):
        w = planted_world
        vocab_path = tmp_path / "vocab.tsv"
        w["vocab"].save(vocab_path)
        prefix_path = tmp_path / "prefix.bin"
        _, records = read_stream(str(w["clean_stream"]))
        import itertools

        write_stream(
            StreamHeader(dim=DIM), itertools.islice(records, 10_000), prefix_path
        )
        outs = []
        for name in ("a.txt", "b.txt"):
            out = tmp_path / name
            code = run(
                [
                    "train",
                    "--stream", str(prefix_path),
                    "--vocab", str(vocab_path),
                    "--output", str(out),
                    "--seed", "42",
                ]
            )
            assert code == 0
            outs.append(out.read_bytes())
        ok = outs[0] == outs[1]
        report("seeded determinism", ok, f"{len(outs[0])} bytes, byte-identical={ok}")
        assert ok

    def test_stream_round_trip_bit_exact(self, planted_world, tmp_path):
        w = planted_world
        header, records = read_stream(str(w["clean_stream"]))
        copy_path = tmp_path / "copy.bin"
        import itertools

        first = list(itertools.islice(records, 5_000))
        write_stream(header, first, copy_path)
        header2, records2 = read_stream(str(copy_path))
        second = list(records2)
        rewrite_path = tmp_path / "rewrite.bin"
        write_stream(header2, second, rewrite_path)
        ok = copy_path.read_bytes() == rewrite_path.read_bytes()
        report("stream round trip", ok, "write-read-write bytes identical (f32)")
        assert ok

    def test_embedding_text_round_trip_bit_exact(self, tmp_path, planted_world):
        rng = np.random.default_rng(77)
        vectors = (rng.normal(size=(500, DIM)) * 10).astype(np.float32)
        emb = WordEmbeddings([f"w{i:05d}" for i in range(500)], vectors)
        path = tmp_path / "emb.txt"
        emb.save_text(path)
        loaded = WordEmbeddings.load_text(path)
        ok = np.array_equal(
            loaded.vectors.view(np.uint32), emb.vectors.view(np.uint32)
        )
        report("embedding round trip", ok, "f32 bit patterns identical after text I/O")
        assert ok

    def test_spearman_matches_brute_force_oracle(self):
        rng = np.random.default_rng(88)
        x = np.round(rng.normal(size=1000), 2)  # rounding injects ties
        y = np.round(0.5 * x + rng.normal(size=1000), 2)

        def oracle_ranks(values):
            ranks = np.empty(len(values))
            for i, xi in enumerate(values):
                less = int((values < xi).sum())
                equal = int((values == xi).sum())
                ranks[i] = less + (equal + 1) / 2.0
            return ranks

        rx, ry = oracle_ranks(x), oracle_ranks(y)
        dx, dy = rx - rx.mean(), ry - ry.mean()
        oracle = float((dx @ dy) / math.sqrt((dx @ dx) * (dy @ dy)))
        mine = spearman_rho(x, y)
        err = abs(mine - oracle)
        report("spearman vs oracle", err < 1e-12, f"|diff| = {err:.2e} on 1000 tied values")
        assert err < 1e-12
