"""Tests for per-channel vocabularies."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from src.corpus import PairSample
from src.errors import EmptyCorpus
from src.vocab import END_ID, PAD_ID, START_ID, UNK_ID, Vocab, build_vocab, build_vocabs


@pytest.fixture
def samples():
    return [
        PairSample(comment_tokens=["send", "tokens", "to", "owner"], code_tokens=["<START>", "f", "<END>"],
                   sbt=["<START>", "(", "A", ")", "A", "<END>"], nodes=["A", "b"], edges=[(0, 1)]),
        PairSample(comment_tokens=["burn", "tokens"], code_tokens=["<START>", "g", "<END>"],
                   sbt=["<START>", "(", "B", ")", "B", "<END>"], nodes=["B"], edges=[]),
    ]


def test_reserved_ids(samples):
    vocab = build_vocab(samples, "comment")
    assert vocab.itos[:4] == ["<PAD>", "<UNK>", "<START>", "<END>"]
    assert (PAD_ID, UNK_ID, START_ID, END_ID) == (0, 1, 2, 3)


def test_frequency_then_lexicographic_order(samples):
    vocab = build_vocab(samples, "comment")
    assert vocab.itos[4:] == ["tokens", "burn", "owner", "send", "to"]


def test_sentinels_are_not_duplicated(samples):
    vocab = build_vocab(samples, "sbt")
    assert vocab.itos.count("<START>") == 1
    assert vocab.encode(["<START>", "(", "<END>"]) == [START_ID, vocab.id("("), END_ID]


def test_encode_decode(samples):
    vocab = build_vocab(samples, "comment")
    ids = vocab.encode(["send", "gold", "tokens"], add_sentinels=True)
    assert ids[0] == START_ID and ids[-1] == END_ID
    assert ids[2] == UNK_ID
    assert vocab.decode(ids) == ["send", "<UNK>", "tokens"]
    assert vocab.decode([START_ID, vocab.id("burn"), END_ID, vocab.id("send")]) == ["burn"]


def test_save_load_keeps_digest(samples, tmp_path):
    vocabs = build_vocabs(samples)
    for channel, vocab in vocabs.items():
        vocab.save(tmp_path, channel)
        loaded = Vocab.load(tmp_path, channel)
        assert loaded.itos == vocab.itos
        assert loaded.digest() == vocab.digest()


def test_digest_changes_with_content(samples):
    a = build_vocab(samples, "comment")
    b = build_vocab(samples[:1], "comment")
    assert a.digest() != b.digest()


def test_empty_training_split():
    with pytest.raises(EmptyCorpus):
        build_vocab([], "comment")
