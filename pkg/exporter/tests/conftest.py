import pytest
import torch
from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

# whole words plus wordpiece continuations, so some corpus words split
WORDS = ["cat", "dog", "bird", "the", "a", "runs", "sees", "fast", "park", "go"]
PIECES = ["play", "##s", "##ing", "##ful", "jump", "##ed"]
MULTI = {"plays": 2, "playing": 2, "playful": 2, "jumped": 2, "jumping": 2}
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_tokenizer():
    vocab = {w: i for i, w in enumerate(SPECIALS + WORDS + PIECES)}
    tok = Tokenizer(models.WordPiece(vocab, unk_token="[UNK]"))
    tok.normalizer = normalizers.BertNormalizer(lowercase=True)
    tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )


def build_model_dir(path, hidden_size=32, num_layers=2, max_positions=48, seed=0):
    tokenizer = build_tokenizer()
    config = BertConfig(
        vocab_size=len(SPECIALS + WORDS + PIECES),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=max(2, hidden_size // 16),
        intermediate_size=hidden_size * 2,
        max_position_embeddings=max_positions,
    )
    torch.manual_seed(seed)
    model = BertModel(config)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


CORPUS_TEXT = """\
the cat plays fast
a dog sees the cat
the playful cat runs

a bird jumps the park
the dog runs playing fast
jumped the fast bird
a cat sees a dog

the park sees a playing dog
go fast cat
the bird plays
"""


def write_vocab(path, words):
    with open(path, "w", encoding="utf-8") as f:
        for i, word in enumerate(words):
            f.write(f"{word}\t{len(words) - i + 1}\n")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return build_model_dir(tmp_path_factory.mktemp("tiny_model"))


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.txt"
    path.write_text(CORPUS_TEXT, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def vocab_file(tmp_path_factory):
    # corpus words minus 'go' so the stream carries an OOV token too
    words = [
        "the", "cat", "a", "dog", "fast", "plays", "sees", "runs", "bird",
        "park", "playing", "playful", "jumped", "jumps",
    ]
    path = tmp_path_factory.mktemp("data") / "vocab.tsv"
    write_vocab(path, words)
    return path
