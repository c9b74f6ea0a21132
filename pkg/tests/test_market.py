"""Market generator tests.

The replay tests re-derive scripts straight-line from the documented draw
recipe so a silent change to the sampling order or the stream layout shows
up as a hard mismatch, not a statistical drift.
"""

import math

import numpy as np
import pytest

from overbook.market import (
    EpisodeScript,
    MarketConfig,
    PassengerRecord,
    assign_cancellation,
    generate_script,
    sample_arrival_times,
    script_from_text,
    script_to_text,
)
from overbook.seeding import mix64


def replay_arrivals(mean_count, horizon, rng):
    # Independent copy of the sampling recipe: exponential gaps on the
    # elapsed axis via inverse CDF, reported on the days-remaining axis.
    mean_gap = horizon / mean_count
    times = []
    elapsed = 0.0
    while True:
        u = rng.random()
        elapsed += -mean_gap * math.log1p(-u)
        if elapsed >= horizon:
            return times
        times.append(horizon - elapsed)


def replay_script(config, seed):
    records = []
    for class_id in range(1, config.num_classes + 1):
        rng = np.random.default_rng(mix64(seed, class_id))
        mean = config.class_means[class_id - 1]
        if mean <= 0:
            continue
        times = replay_arrivals(mean, config.horizon, rng)
        for t in times:
            will_cancel = rng.random() < config.cancel_rate
            cancel_time = None
            if will_cancel:
                u = rng.random()
                while u == 0.0:
                    u = rng.random()
                cancel_time = t * u
            records.append(
                PassengerRecord(class_id, t, will_cancel, cancel_time)
            )
    records.sort(key=lambda r: -r.arrival_time)
    return records


class TestMarketConfig:
    def test_defaults(self):
        config = MarketConfig()
        assert config.capacity == 80
        assert config.horizon == 1000.0
        assert config.fares == (300.0, 200.0, 100.0)
        assert config.class_means == (33.0, 33.0, 34.0)
        assert config.cancel_rate == 0.10
        assert config.bump_factors == (2.0, 2.0, 2.0)
        assert config.num_classes == 3

    def test_fares_must_strictly_decrease(self):
        with pytest.raises(ValueError):
            MarketConfig(fares=(100.0, 200.0, 300.0))
        with pytest.raises(ValueError):
            MarketConfig(fares=(300.0, 300.0, 100.0))

    def test_rejects_bad_scalars(self):
        with pytest.raises(ValueError):
            MarketConfig(capacity=0)
        with pytest.raises(ValueError):
            MarketConfig(horizon=0.0)
        with pytest.raises(ValueError):
            MarketConfig(cancel_rate=1.5)
        with pytest.raises(ValueError):
            MarketConfig(cancel_rate=-0.1)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            MarketConfig(fares=(300.0, 100.0))
        with pytest.raises(ValueError):
            MarketConfig(bump_factors=(2.0, 2.0))

    def test_rejects_negative_class_mean(self):
        with pytest.raises(ValueError):
            MarketConfig(class_means=(33.0, -1.0, 34.0))


class TestPassengerRecord:
    def test_cancel_time_window(self):
        PassengerRecord(1, 500.0, True, 250.0)
        with pytest.raises(ValueError):
            PassengerRecord(1, 500.0, True, 500.0)  # not strictly before
        with pytest.raises(ValueError):
            PassengerRecord(1, 500.0, True, 0.0)
        with pytest.raises(ValueError):
            PassengerRecord(1, 500.0, False, 250.0)  # time without flag
        with pytest.raises(ValueError):
            PassengerRecord(1, 500.0, True, None)  # flag without time

    def test_rejects_bad_class_or_time(self):
        with pytest.raises(ValueError):
            PassengerRecord(0, 500.0, False, None)
        with pytest.raises(ValueError):
            PassengerRecord(1, -1.0, False, None)


class TestArrivalSampling:
    def test_replay_seed_42(self):
        # Frozen from the recipe replay above; three arrivals for mean 5.
        expected = [702.5948353596696, 587.0312929600141, 195.8017299682706]
        got = sample_arrival_times(5, 1000.0, np.random.default_rng(42))
        assert got == expected

    def test_matches_replay_many_seeds(self):
        for seed in range(40):
            got = sample_arrival_times(20, 500.0, np.random.default_rng(seed))
            want = replay_arrivals(20, 500.0, np.random.default_rng(seed))
            assert got == want

    def test_times_decreasing_in_open_closed_range(self):
        for seed in range(25):
            times = sample_arrival_times(50, 1000.0, np.random.default_rng(seed))
            assert all(0.0 < t <= 1000.0 for t in times)
            assert all(a > b for a, b in zip(times, times[1:]))

    def test_zero_mean_draws_nothing(self):
        rng = np.random.default_rng(7)
        assert sample_arrival_times(0, 1000.0, rng) == []
        # The degenerate case must not consume from the stream.
        assert rng.random() == np.random.default_rng(7).random()

    def test_count_is_poisson_distributed(self):
        # Counts over a horizon with exponential gaps are Poisson, so the
        # sample mean and variance both sit near the configured mean.
        rng = np.random.default_rng(2024)
        counts = [len(sample_arrival_times(100, 1000.0, rng)) for _ in range(10000)]
        mean = np.mean(counts)
        var = np.var(counts)
        assert abs(mean / 100.0 - 1.0) < 0.05
        assert abs(var / 100.0 - 1.0) < 0.05


class TestCancellation:
    def test_rate_zero_and_one(self):
        rng = np.random.default_rng(5)
        flag, when = assign_cancellation(400.0, 0.0, rng)
        assert flag is False and when is None
        flag, when = assign_cancellation(400.0, 1.0, rng)
        assert flag is True
        assert 0.0 < when < 400.0

    def test_rate_statistics(self):
        rng = np.random.default_rng(17)
        hits = sum(
            assign_cancellation(100.0, 0.5, rng)[0] for _ in range(10000)
        )
        se = (0.5 * 0.5 / 10000) ** 0.5
        assert abs(hits / 10000 - 0.5) < 3 * se


class TestGenerateScript:
    def test_deterministic_in_seed(self):
        config = MarketConfig()
        a = generate_script(config, 901)
        b = generate_script(config, 901)
        c = generate_script(config, 902)
        assert list(a) == list(b)
        assert list(a) != list(c)

    def test_matches_full_recipe_replay(self):
        config = MarketConfig()
        for seed in (0, 42, 12345):
            got = list(generate_script(config, seed))
            want = replay_script(config, seed)
            assert got == want

    def test_sorted_by_descending_arrival(self):
        script = generate_script(MarketConfig(), 11)
        times = [p.arrival_time for p in script]
        assert times == sorted(times, reverse=True)

    def test_cancel_times_inside_window(self):
        script = generate_script(MarketConfig(cancel_rate=0.5), 13)
        cancellers = [p for p in script if p.will_cancel]
        assert cancellers, "expected some cancellers at rate 0.5"
        for p in cancellers:
            assert 0.0 < p.cancel_time < p.arrival_time

    def test_zero_rate_has_no_cancellers(self):
        script = generate_script(MarketConfig(cancel_rate=0.0), 99)
        assert not any(p.will_cancel for p in script)

    def test_zero_demand_is_empty(self):
        config = MarketConfig(class_means=(0.0, 0.0, 0.0))
        assert len(generate_script(config, 1)) == 0

    def test_per_class_means(self):
        # 10k scripts: per-class arrival counts within 1% of the config.
        config = MarketConfig()
        totals = np.zeros(3)
        n = 10000
        for i in range(n):
            for p in generate_script(config, mix64(123, i)):
                totals[p.class_id - 1] += 1
        means = totals / n
        for got, want in zip(means, config.class_means):
            assert abs(got / want - 1.0) < 0.01

    def test_class_streams_are_independent(self):
        # Dropping a class must not disturb the draws of the others.
        base = MarketConfig()
        solo = MarketConfig(class_means=(33.0, 0.0, 0.0))
        full = [p for p in generate_script(base, 77) if p.class_id == 1]
        alone = list(generate_script(solo, 77))
        assert full == alone


class TestScriptSerialization:
    def test_round_trip_exact(self):
        script = generate_script(MarketConfig(), 321)
        text = script_to_text(script)
        back = script_from_text(text)
        assert list(back) == list(script)
        assert back.seed == script.seed

    def test_text_format(self):
        record = PassengerRecord(2, 512.5, True, 100.25)
        keep = PassengerRecord(1, 400.0, False, None)
        script = EpisodeScript(seed=9, passengers=(record, keep))
        lines = script_to_text(script).splitlines()
        assert lines[0] == "script seed=9 n=2"
        assert lines[1] == "class=2 arrive=512.5 cancel=100.25"
        assert lines[2] == "class=1 arrive=400.0 cancel=none"

    def test_rejects_count_mismatch(self):
        text = "script seed=9 n=3\nclass=1 arrive=400.0 cancel=none\n"
        with pytest.raises(ValueError):
            script_from_text(text)

    def test_rejects_malformed_line(self):
        text = "script seed=9 n=1\nclass=1 arrive=oops cancel=none\n"
        with pytest.raises(ValueError):
            script_from_text(text)

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError):
            script_from_text("n=0 seed=9\n")


class TestEpisodeScript:
    def test_requires_sorted_passengers(self):
        early = PassengerRecord(1, 100.0, False, None)
        late = PassengerRecord(1, 900.0, False, None)
        with pytest.raises(ValueError):
            EpisodeScript(seed=1, passengers=(early, late))

    def test_rejects_bad_seed(self):
        p = PassengerRecord(1, 100.0, False, None)
        with pytest.raises(ValueError):
            EpisodeScript(seed=-1, passengers=(p,))
        with pytest.raises(ValueError):
            EpisodeScript(seed=2**64, passengers=(p,))
