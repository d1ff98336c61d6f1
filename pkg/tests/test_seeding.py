import numpy as np

from mosh.seeding import STREAMS, stream


def test_streams_are_reproducible():
    assert np.array_equal(stream(3, "lambda", 5).random(4), stream(3, "lambda", 5).random(4))


def test_streams_are_disjoint():
    draws = {name: stream(0, name).random() for name in STREAMS}
    assert len(set(draws.values())) == len(STREAMS)
    assert stream(0, "lambda", 1).random() != stream(0, "lambda", 2).random()
    assert stream(0, "dm_lambda").random() != stream(0, "sparse_lambdas").random()


def test_stream_ids_unique():
    assert len(set(STREAMS.values())) == len(STREAMS)
