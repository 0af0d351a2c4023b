"""Tests for the counter-based random streams."""

import pytest

from src import rng as streams


class TestStreams:

    def test_same_address_same_draws(self):
        first = streams.stream(7, streams.CONTROL, 3, 12).uniform(size=5)
        second = streams.stream(7, streams.CONTROL, 3, 12).uniform(size=5)
        assert list(first) == list(second)

    @pytest.mark.parametrize("other", [
        (8, streams.CONTROL, 3, 12),
        (7, streams.SENSE, 3, 12),
        (7, streams.CONTROL, 4, 12),
        (7, streams.CONTROL, 3, 13),
    ])
    def test_any_coordinate_changes_the_stream(self, other):
        """Seed, purpose, entity and step each address a different stream."""
        base = streams.stream(7, streams.CONTROL, 3, 12).uniform(size=4)
        assert list(streams.stream(*other).uniform(size=4)) != list(base)

    def test_init_stream_is_a_stream(self):
        assert streams.init_stream(5).integers(1 << 30) == streams.stream(5, streams.INIT, 0, 0).integers(1 << 30)

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            streams.stream(-1, streams.TARGET)
