import io

import numpy as np
import pytest

from latencylab.errors import InfeasibleConfig
from latencylab.feeds import decode_all, parse_futures_feed, parse_trade_tape
from latencylab.feeds.eqb import AddOrder, HiddenTrade, OrderDelete
from latencylab.response import events_from_trades
from latencylab.sim import SimConfig, SimGroundTruth, measure, simulate_session
from latencylab.stats import latency_quantile, significance_time
from simcache import measured_day, sim_day

HOUR = (34_200_000, 37_800_000)


def test_config_validation():
    with pytest.raises(InfeasibleConfig):
        SimConfig(latency=((4.0, 0.5), (5.0, 0.6)))
    with pytest.raises(InfeasibleConfig):
        SimConfig(drive_rate=-1)
    with pytest.raises(InfeasibleConfig):
        SimConfig(presignal_fraction=1.5)
    with pytest.raises(InfeasibleConfig, match="lead"):
        SimConfig(latency=((1.5, 1.0),), presignal_fraction=0.1, presignal_lead_ms=2.0)
    with pytest.raises(InfeasibleConfig):
        SimConfig(session=(10, 10))


def test_zero_drive_rate_gives_empty_curves():
    out = simulate_session(SimConfig(drive_rate=0.0, session=HOUR))
    assert out.truth.events == []
    d = measure(out)
    assert d.n_events == 0 and d.liquidity.empty and d.trade.empty


def test_deterministic_bytes():
    cfg = dict(seed=9, session=HOUR, noise_order_rate=2.0, noise_trade_rate=0.5,
               futures_noise_rate=0.5, tape_jitter=True, jitter_ms=0.3)
    a = simulate_session(SimConfig(**cfg))
    b = simulate_session(SimConfig(**cfg))
    assert a.futures_csv == b.futures_csv
    assert a.equity_bin == b.equity_bin
    assert a.tape_csv == b.tape_csv
    assert a.truth.to_json() == b.truth.to_json()
    c = simulate_session(SimConfig(**{**cfg, "seed": 10}))
    assert c.equity_bin != a.equity_bin


def test_files_sorted_and_consistent():
    out = sim_day(seed=4, latency=((4.85, 1.0),), noise_order_rate=2.0, noise_trade_rate=0.5,
                  futures_noise_rate=0.5, tape_jitter=True, session=HOUR)
    fut = parse_futures_feed(io.StringIO(out.futures_csv))
    tape = parse_trade_tape(io.StringIO(out.tape_csv))
    msgs = decode_all(out.equity_bin)
    for seq in ([t.ts for t in fut], [t.ts for t in tape], [m.ts for m in msgs]):
        assert all(a <= b for a, b in zip(seq, seq[1:]))
    # every tape print corresponds to an execution or hidden print in the equity feed
    n_exec = sum(1 for m in msgs if type(m).__name__ in ("OrderExecuted", "HiddenTrade"))
    assert n_exec == len(tape)
    # background futures prints never create events
    assert len(events_from_trades(fut)) == len(out.truth.events)


def test_ground_truth_round_trip_and_causality():
    out = sim_day(seed=4, latency=((4.85, 1.0),), noise_order_rate=2.0, noise_trade_rate=0.5,
                  futures_noise_rate=0.5, tape_jitter=True, session=HOUR)
    truth = SimGroundTruth.from_json(out.truth.to_json())
    assert truth.events == out.truth.events
    assert np.all(truth.arrival_lags() >= 3.93)
    assert all(e.presignal_ms is None for e in truth.events)


def test_jitter_only_delays():
    out = simulate_session(SimConfig(seed=1, session=HOUR, latency=((4.2, 1.0),), jitter_ms=1.0))
    lags = out.truth.arrival_lags()
    assert lags.min() >= 4.2 and lags.mean() > 4.6


def test_bins_below_latency_floor_are_null(clean_485):
    liq = measured_day(seed=3, latency=((4.85, 1.0),)).liquidity
    below = liq.lags < 4
    z = np.divide(liq.value, liq.sigma, out=np.zeros(61), where=liq.sigma > 0)
    assert np.all(np.abs(z[below]) < 5)
    assert np.all(liq.value[below][liq.sigma[below] == 0] == 0)


def test_mixture_is_bimodal_and_t5_tracks_fast_component():
    out = sim_day(seed=8, latency=((6.65, 0.5), (4.2, 0.5)))
    liq = measured_day(seed=8, latency=((6.65, 0.5), (4.2, 0.5))).liquidity
    lags = out.truth.arrival_lags()
    # ground-truth arrival histogram in the response's own binning convention
    offs = np.array([e.offset for e in out.truth.events for _ in e.arrivals])
    truth_hist = np.bincount(np.floor(lags + offs).astype(int), minlength=10)[:10]
    assert truth_hist[4] > 0 and truth_hist[6] > 0 and truth_hist[7] > 0
    share = liq.value[30:40] / liq.value[30:40].sum()
    np.testing.assert_allclose(share, truth_hist / truth_hist.sum(), atol=0.02)
    assert share[5] < share[4] and share[5] < share[7]  # dip between the modes
    assert abs(latency_quantile(liq, 0.05) - 4.2) <= 0.5


def test_fill_probability_zero_removes_responder_prints():
    out = simulate_session(SimConfig(seed=2, session=HOUR, fill_prob=0.0))
    tape = parse_trade_tape(io.StringIO(out.tape_csv))
    assert len(tape) == 1  # only the opening print
    msgs = decode_all(out.equity_bin)
    assert sum(isinstance(m, OrderDelete) for m in msgs) >= 2 * len(out.truth.events)
    d = measure(out)
    assert not d.trade.value.any()
    # the tape reference stays at the opening print, so the drifting ladder leaves the window
    assert d.liquidity.value.sum() < 100


def test_tape_jitter_moves_trades_not_liquidity():
    base = dict(seed=6, session=HOUR, latency=((4.85, 1.0),))
    a = measure(simulate_session(SimConfig(**base)))
    b = measure(simulate_session(SimConfig(**base, tape_jitter=True)))
    np.testing.assert_allclose(a.liquidity.value, b.liquidity.value, atol=1e-9)
    assert latency_quantile(b.trade, 0.5) > latency_quantile(a.trade, 0.5) + 0.5


def test_presignal_shows_before_light_time():
    out = sim_day(seed=0, latency=((4.2, 1.0),), presignal_fraction=0.2)
    ps = [e for e in out.truth.events if e.presignal_ms is not None]
    assert 0.17 < len(ps) / len(out.truth.events) < 0.23
    liq = measure(out).liquidity
    t = significance_time(liq, 5, 0.0, 3.93)
    assert t is not None and t < 3.93


def test_desk_preset_background_volume():
    out = simulate_session(SimConfig.desk(seed=0))
    msgs = decode_all(out.equity_bin)
    responder = 4 * len(out.truth.events) + 10
    background = len(msgs) - responder
    assert 0.7e5 < background < 1.5e5
    kinds = {type(m) for m in msgs}
    assert {AddOrder, OrderDelete, HiddenTrade} <= kinds
