"""Tests for id encoding, padding and masks."""
import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
import pytest

from src.batching import EncodedSample, collate, decoder_mask, encode_sample, make_batches, pad_ids
from src.corpus import PairSample
from src.vocab import END_ID, PAD_ID, START_ID, build_vocabs


def _encoded(n_nodes: int, comment_len: int, index: int = 0) -> EncodedSample:
    return EncodedSample(
        comment=[START_ID] + [5] * comment_len + [END_ID],
        nodes=[4 + k for k in range(n_nodes)],
        edges=[(0, k) for k in range(1, n_nodes)],
        sbt=[START_ID] + [4] * (n_nodes + 1) + [END_ID],
        code=[START_ID, 6, END_ID],
        index=index,
    )


def test_pad_ids():
    out = pad_ids([[1, 2, 3], [4]])
    np.testing.assert_array_equal(out, [[1, 2, 3], [4, PAD_ID, PAD_ID]])


def test_decoder_mask_is_causal_and_hides_padding():
    ids = np.array([[START_ID, 7, END_ID, PAD_ID]])
    mask = decoder_mask(ids)
    assert mask.shape == (1, 4, 4)
    assert mask[0, 2, 1] and not mask[0, 1, 2]
    assert not mask[0, 3, 3]
    assert mask[0, 0].tolist() == [True, False, False, False]


def test_collate_shapes():
    batch = collate([_encoded(3, 2, 0), _encoded(5, 4, 1)])
    assert batch.size == 2
    assert batch.Y.shape == (2, 6)
    assert batch.X.shape == (2, 5)
    assert batch.E.shape == (2, 5, 5)
    assert batch.Xp.shape == (2, 8)
    assert batch.C.shape == (2, 3)
    assert batch.M[0].tolist() == [True, True, True, False, False]
    assert batch.target_lengths.tolist() == [3, 5]
    assert batch.indices == [0, 1]


def test_padded_adjacency_rows_and_columns_are_zero():
    batch = collate([_encoded(3, 2), _encoded(5, 2)])
    E = batch.E[0]
    np.testing.assert_array_equal(E[3:, :], 0)
    np.testing.assert_array_equal(E[:, 3:], 0)
    np.testing.assert_array_equal(E[:3, :3], [[1, 1, 1], [1, 1, 0], [1, 0, 1]])


def test_missing_channel_is_left_out():
    sample = _encoded(3, 2)
    sample.sbt = None
    batch = collate([sample])
    assert batch.Xp is None and batch.Mp is None
    assert batch.X is not None


def test_encode_sample_respects_vocab_channels():
    pair = PairSample(comment_tokens=["a", "b", "c", "d"], code_tokens=["<START>", "x", "<END>"],
                      sbt=["<START>", "(", "A", ")", "A", "<END>"], nodes=["A"], edges=[])
    vocabs = build_vocabs([pair])
    enc = encode_sample(pair, {k: v for k, v in vocabs.items() if k != "sbt"})
    assert enc.sbt is None
    assert enc.comment[0] == START_ID and enc.comment[-1] == END_ID
    assert len(enc.comment) == 6
    assert enc.code == [START_ID, vocabs["code"].id("x"), END_ID]


@pytest.mark.parametrize("batch_size, sizes", [(4, [4, 4, 2]), (10, [10]), (3, [3, 3, 3, 1])])
def test_make_batches_partitions(batch_size, sizes):
    samples = [_encoded(2 + i % 3, 2, i) for i in range(10)]
    batches = make_batches(samples, batch_size, seed=0, epoch=0)
    assert [b.size for b in batches] == sizes
    assert sorted(i for b in batches for i in b.indices) == list(range(10))


def test_epoch_order_depends_on_seed_and_epoch():
    samples = [_encoded(2, 2, i) for i in range(20)]
    first = [b.indices for b in make_batches(samples, 20, seed=1, epoch=0)]
    again = [b.indices for b in make_batches(samples, 20, seed=1, epoch=0)]
    other = [b.indices for b in make_batches(samples, 20, seed=1, epoch=1)]
    assert first == again
    assert first != other
    unshuffled = make_batches(samples, 20, shuffle=False)
    assert unshuffled[0].indices == list(range(20))
