import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latencylab.errors import UnsortedInput
from latencylab.feeds import BookDelta, FuturesTrade, TapeTrade, parse_futures_feed
from latencylab.response import (
    N_LAGS,
    PriceEvent,
    ResponseCurve,
    bootstrap_errors,
    events_from_trades,
    in_force_series,
    liquidity_contributions,
    liquidity_response,
    resample_indices,
    screen_price_events,
    trade_response,
    volume_response,
)
from latencylab.sim import measure

P = 1_300_000
MS = 1_000_000
TAPE = [TapeTrade(900, "SPY", P, 100)]


def test_in_force_series():
    trades = [FuturesTrade(1000, 401, 1), FuturesTrade(1000, 402, 1), FuturesTrade(1001, 401, 2)]
    assert in_force_series(trades) == {1000: 402, 1001: 401}
    assert in_force_series([]) == {}
    with pytest.raises(UnsortedInput):
        in_force_series([FuturesTrade(2, 1, 1), FuturesTrade(1, 1, 1)])


def test_screen_events():
    evs = screen_price_events({1000: 402, 1001: 401}, seed_price=401)
    assert [(e.ms, e.direction) for e in evs] == [(1000, 1), (1001, -1)]
    assert screen_price_events({1: 5, 2: 5, 3: 5}) == []
    # the first price seeds the comparator only
    assert screen_price_events({1: 5, 2: 6})[0].ms == 2


def test_intra_ms_round_trip_emits_no_event():
    trades = [FuturesTrade(1000, 400, 1), FuturesTrade(1001, 401, 1), FuturesTrade(1001, 400, 1)]
    assert events_from_trades(trades) == []


def test_single_liquidity_delta():
    d = [BookDelta(1007 * MS + 5, "B", P, 400)]
    c = liquidity_response([PriceEvent(1000, 1, 10)], d, TAPE, "SPY")
    assert c.at(7) == 400 and c.value.sum() == 400
    assert np.all(c.sigma == 0)
    c = liquidity_response([PriceEvent(1000, -1, 10)], d, TAPE, "SPY")
    assert c.at(7) == -400


def test_three_levels_only():
    d = [BookDelta(1003 * MS, "B", P + 100, 50), BookDelta(1003 * MS, "B", P - 200, 70),
         BookDelta(1003 * MS, "S", P - 100, -20)]
    c = liquidity_response([PriceEvent(1000, 1, 10)], d, TAPE, "SPY")
    assert c.at(3) == 70  # +50 bid add, +20 ask removal, far level ignored


def test_trade_response_single():
    tape = TAPE + [TapeTrade(1005, "SPY", P, 10), TapeTrade(1005, "SPY", P + 100, 10)]
    c = trade_response([PriceEvent(1000, 1, 10)], tape, "SPY")
    assert c.at(5) == 100
    assert c.value.sum() == 100
    flat = TAPE + [TapeTrade(1003, "SPY", P, 10)]
    assert not trade_response([PriceEvent(1000, 1, 10)], flat, "SPY").value.any()


def test_no_reference_price_skips_event():
    c = liquidity_response([PriceEvent(800, 1, 10), PriceEvent(1000, 1, 10)],
                           [BookDelta(1007 * MS, "B", P, 400)], TAPE, "SPY")
    assert c.n_events == 1 and c.skipped["no_reference_price"] == 1


def test_empty_inputs_give_empty_curve():
    c = liquidity_response([], [], TAPE, "SPY")
    assert c.empty and c.value.shape == (N_LAGS,) and not c.value.any() and not c.sigma.any()
    t = trade_response([], TAPE, "SPY")
    assert t.empty


def test_unsorted_tape_rejected():
    with pytest.raises(UnsortedInput):
        trade_response([PriceEvent(1000, 1, 1)], [TapeTrade(5, "SPY", 1, 1), TapeTrade(4, "SPY", 1, 1)], "SPY")


def test_curve_csv_round_trip(tmp_path):
    d = [BookDelta(1007 * MS, "B", P, 400), BookDelta(990 * MS, "S", P, 30)]
    c = liquidity_response([PriceEvent(1000, 1, 10), PriceEvent(1001, -1, 9)], d, TAPE, "SPY",
                           n_resamples=50, seed=4)
    c.write(tmp_path / "liq.csv")
    back = ResponseCurve.read(tmp_path / "liq.csv")
    np.testing.assert_array_equal(back.value, c.value)
    np.testing.assert_array_equal(back.sigma, c.sigma)
    assert (back.n_events, back.kind, back.seed, back.n_resamples) == (2, "liquidity", 4, 50)
    assert (tmp_path / "liq.csv").read_text().splitlines()[0] == "lag_ms,value,sigma"


def test_bootstrap_degenerate_cases():
    same = np.tile(np.arange(61.0), (20, 1))
    assert not bootstrap_errors(same, 50).any()
    assert not bootstrap_errors(np.ones((1, 61)), 50).any()
    assert bootstrap_errors(np.zeros((0, 61)), 50).shape == (61,)
    with pytest.raises(ValueError):
        bootstrap_errors(same, 1)


def test_bootstrap_matches_standard_error():
    rng = np.random.default_rng(11)
    v = 4.0
    contrib = rng.normal(0, np.sqrt(v), size=(1000, 61))
    sigma = bootstrap_errors(contrib, 200, seed=2)
    # per-bin estimates scatter about sqrt(v/n) by ~5%; the bin average is much tighter
    assert np.all(np.abs(sigma / np.sqrt(v / 1000) - 1) < 0.15)
    assert abs(sigma.mean() / np.sqrt(v / 1000) - 1) < 0.03


def test_resample_seeds_order_independent():
    a = resample_indices(10, 5, 3)
    b = resample_indices(10, 8, 3)
    np.testing.assert_array_equal(a, b[:5])


def test_bootstrap_deterministic():
    rng = np.random.default_rng(0)
    c = rng.normal(size=(50, 61))
    np.testing.assert_array_equal(bootstrap_errors(c, 30, seed=9), bootstrap_errors(c, 30, seed=9))


def _brute_liquidity_total(events, ref, deltas):
    total = 0.0
    for e, p in zip(events, ref):
        for d in deltas:
            k = d.ts // MS - e.ms
            if -30 <= k <= 30 and abs(d.price - p) <= 100:
                total += e.direction * (d.signed_share_change if d.side == "B" else -d.signed_share_change)
    return total


@given(st.integers(0, 2**32 - 1))
def test_overlapping_windows_match_double_loop(seed):
    rng = np.random.default_rng(seed)
    events = [PriceEvent(int(m), int(rng.choice([-1, 1])), 0)
              for m in np.unique(rng.integers(1000, 1100, 8))]
    deltas = sorted((BookDelta(int(rng.integers(950, 1150)) * MS, "B" if rng.random() < 0.5 else "S",
                               P + 100 * int(rng.integers(-2, 3)), int(rng.integers(-300, 300)) or 1)
                     for _ in range(40)), key=lambda d: d.ts)
    contrib, _ = liquidity_contributions(events, deltas, TAPE, "SPY")
    assert contrib.sum() == pytest.approx(_brute_liquidity_total(events, [P] * len(events), deltas))


@given(st.integers(0, 2**32 - 1))
def test_direction_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    events = [PriceEvent(int(m), int(rng.choice([-1, 1])), 0)
              for m in np.unique(rng.integers(1000, 1100, 6))]
    deltas = sorted((BookDelta(int(rng.integers(980, 1130)) * MS, "B" if rng.random() < 0.5 else "S",
                               P + 100 * int(rng.integers(-1, 2)), int(rng.integers(1, 300)))
                     for _ in range(30)), key=lambda d: d.ts)
    flipped_e = [PriceEvent(e.ms, -e.direction, e.in_force_price) for e in events]
    flipped_d = [BookDelta(d.ts, d.side, d.price, -d.signed_share_change) for d in deltas]
    a = liquidity_response(events, deltas, TAPE, "SPY", 20, 0)
    b = liquidity_response(flipped_e, flipped_d, TAPE, "SPY", 20, 0)
    np.testing.assert_array_equal(a.value, b.value)


def test_split_law_at_485(clean_485):
    d = measure(clean_485)
    t = d.trade
    frac5 = t.at(5) / t.value.sum()
    assert frac5 == pytest.approx(0.85, abs=0.02)
    assert t.at(4) / t.value.sum() == pytest.approx(0.15, abs=0.02)
    liq = d.liquidity
    assert liq.at(5) / liq.value.sum() == pytest.approx(0.85, abs=0.02)
    # two levels move per event, each carrying half the response
    assert liq.value.sum() == pytest.approx(800, rel=0.02)


def test_event_count_matches_truth(clean_485):
    fut = parse_futures_feed(io.StringIO(clean_485.futures_csv))
    assert len(events_from_trades(fut)) == len(clean_485.truth.events)


def test_volume_response_baseline():
    events = [PriceEvent(1000, 1, 1), PriceEvent(2000, -1, 1)]
    tape = [TapeTrade(t, "SPY", P, 10) for t in range(900, 2100, 50)]
    tape += [TapeTrade(1008, "SPY", P, 500), TapeTrade(2008, "SPY", P, 500)]
    tape.sort(key=lambda t: t.ts)
    c = volume_response(events, tape, "SPY", 20, 0)
    assert c.skipped["baseline_per_ms"] > 0
    assert c.at(8) > 400
    assert c.at(20) < 0.5 * c.at(8)
