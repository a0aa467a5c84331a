import numpy as np
import pytest

from x2static import (
    TokenizedCorpus,
    build_vocabulary,
    encode_corpus,
    make_planted_space,
    mock_teacher_encode,
    synthesize_corpus,
)


def make_paragraph(n_sentences: int, sentence: str = "the quick brown fox jumps over it.") -> str:
    return "\n".join([sentence] * n_sentences)


@pytest.fixture(scope="session")
def tiny_planted():
    """Small planted setup shared by stream/trainer/ase tests."""
    n_words, dim = 60, 16
    corpus = synthesize_corpus(n_words, n_sentences=800, seed=21, sentence_length=(4, 9))
    vocab = build_vocabulary(corpus, min_count=1, max_size=n_words)
    planted = make_planted_space(len(vocab), dim, seed=22)
    encoded = encode_corpus(corpus, vocab)
    records = list(
        mock_teacher_encode(encoded, "planted", planted, scope="sentence", dim=dim, seed=23)
    )
    return {
        "corpus": corpus,
        "vocab": vocab,
        "planted": planted,
        "encoded": encoded,
        "records": records,
        "dim": dim,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
