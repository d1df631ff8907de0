"""``latencylab`` command line: generate, measure, summarise and plan."""
from __future__ import annotations

import argparse
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write, dump_json, metadata
from .errors import LatencyLabError

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- config and small parsers -----------------------------------------------

def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use flag names."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _floats(s) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in str(s).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {s!r}") from None


def parse_latency(s) -> tuple[tuple[float, float], ...]:
    """``"4.85"`` or ``"6.65:0.5,4.2:0.5"``."""
    parts = [p for p in str(s).split(",") if p.strip()]
    try:
        if len(parts) == 1 and ":" not in parts[0]:
            return ((float(parts[0]), 1.0),)
        return tuple((float(a), float(b)) for a, b in (p.split(":") for p in parts))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad latency mixture: {s!r}") from None


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {path}")
    return p


def _write_meta(path: Path, **params) -> None:
    atomic_write(path.with_name(path.stem + ".meta.json"), dump_json(metadata(**params)))


# --- subcommands ----------------------------------------------------------------

def _day_seed(seed: int, day: int) -> int:
    return int(np.random.SeedSequence([seed, day]).generate_state(1, dtype=np.uint64)[0] >> 1)


def cmd_gen(a) -> int:
    from .sim import SimConfig, simulate_session

    out = Path(a.out)
    kw = dict(latency=a.latency, drive_rate=a.drive_rate, jitter_ms=a.jitter,
              presignal_fraction=a.presignal_fraction, presignal_lead_ms=a.presignal_lead,
              response_shares=a.response_shares, fill_prob=a.fill_prob, tape_jitter=a.tape_jitter,
              symbol=a.symbol)
    make = SimConfig.desk if a.background == "desk" else SimConfig

    def one(day):
        cfg = make(seed=_day_seed(a.seed, day), **kw)
        fut, eq, tape, truth = simulate_session(cfg)
        d = out / f"day{day:03d}"
        atomic_write(d / "futures.csv", fut)
        atomic_write(d / "equity.eqb", eq)
        atomic_write(d / "tape.csv", tape)
        atomic_write(d / "truth.json", truth.to_json())
        atomic_write(d / "meta.json", dump_json(metadata(command="gen", seed=a.seed, day=day,
                                                          day_seed=cfg.seed, symbol=a.symbol)))
        return len(truth.events)

    with ThreadPoolExecutor(max_workers=a.threads) as ex:
        counts = list(ex.map(one, range(a.days)))
    print(f"generated {a.days} day(s) in {out}: {sum(counts)} events")
    return EXIT_OK


def _day_dirs(root: Path, required: str) -> list[Path]:
    if (root / required).exists():
        return [root]
    days = sorted(p for p in root.iterdir() if p.is_dir() and (p / required).exists())
    if not days:
        raise UsageError(f"no day directories with {required} under {root}")
    return days


def cmd_respond(a) -> int:
    from .feeds import build_book, decode_all, parse_futures_feed, parse_trade_tape
    from .feeds.book import DeltaColumns
    from .response import events_from_trades, liquidity_response, trade_response, volume_response

    days = _day_dirs(_existing(a.input, "input directory"), "futures.csv")
    out = Path(a.out)

    def one(d: Path):
        with open(d / "futures.csv") as fh:
            fut = parse_futures_feed(fh)
        with open(_existing(str(d / "tape.csv"), "tape file")) as fh:
            tape = parse_trade_tape(fh)
        eq = _existing(str(d / "equity.eqb"), "equity file").read_bytes()
        _, deltas = build_book(decode_all(eq), a.symbol)
        events = events_from_trades(fut)
        meta = metadata(command="respond", day=d.name, symbol=a.symbol)
        od = out / d.name
        liq = liquidity_response(events, DeltaColumns.from_deltas(deltas), tape, a.symbol,
                                 a.resamples, a.seed)
        liq.write(od / "liquidity.csv", **meta)
        trade_response(events, tape, a.symbol, a.resamples, a.seed).write(od / "trade.csv", **meta)
        if a.volume:
            volume_response(events, tape, a.symbol, a.resamples, a.seed).write(od / "volume.csv", **meta)
        return len(events)

    with ThreadPoolExecutor(max_workers=a.threads) as ex:
        counts = list(ex.map(one, days))
    if sum(counts) == 0:
        print("error: no events", file=sys.stderr)
        return EXIT_DATA
    print(f"measured {len(days)} day(s): {sum(counts)} events")
    return EXIT_OK


def _svg(curve, title: str) -> str:
    w, h, pad = 640, 320, 40
    x = curve.lags + 0.5
    y = curve.value
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = min(0.0, float(y.min())), max(float(y.max()), 1e-12)
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (w - 2 * pad)  # noqa: E731
    sy = lambda v: h - pad - (v - y0) / (y1 - y0) * (h - 2 * pad)  # noqa: E731
    pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x, y))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">\n'
        f'<text x="{pad}" y="20" font-size="12">{title}</text>\n'
        f'<line x1="{pad}" y1="{sy(0):.1f}" x2="{w - pad}" y2="{sy(0):.1f}" stroke="#888"/>\n'
        f'<line x1="{sx(0):.1f}" y1="{pad}" x2="{sx(0):.1f}" y2="{h - pad}" stroke="#888"/>\n'
        f'<polyline fill="none" stroke="#036" points="{pts}"/>\n</svg>\n'
    )


def cmd_stats(a) -> int:
    from .response import ResponseCurve
    from .stats import aggregate_median, heatmap_csv, heatmap_matrix, latency_stats, stats_csv

    root = _existing(a.input, "input directory")
    fname = f"{a.kind}.csv"
    days = _day_dirs(root, fname)
    curves = [ResponseCurve.read(d / fname) for d in days]
    names = [d.name for d in days]
    rows = [latency_stats(n, c, a.xs, a.sigmas, 0.0, a.tf) for n, c in zip(names, curves)]
    out = Path(a.out)
    params = dict(command="stats", kind=a.kind, xs=list(a.xs), sigmas=list(a.sigmas), tf=a.tf,
                  days=names)
    atomic_write(out / "stats.csv", stats_csv(rows, a.xs, a.sigmas))
    _write_meta(out / "stats.csv", **params)
    mat, flags = heatmap_matrix(curves, 0.0, a.tf)
    atomic_write(out / "heatmap.csv", heatmap_csv(names, mat, flags, curves[0].lags))
    _write_meta(out / "heatmap.csv", **params)
    if any(not c.empty for c in curves):
        med = aggregate_median(curves)
        med.write(out / "median.csv", **metadata(**params))
        if a.svg:
            atomic_write(out / "median.svg", _svg(med, f"median {a.kind} response"))
    print(f"wrote stats for {len(days)} day(s) to {out}")
    return EXIT_OK


def cmd_mw_table(a) -> int:
    from .mwphys import load_published_table, read_route_summaries, write_metrics_table

    if a.routes:
        with open(_existing(a.routes, "routes file")) as fh:
            summaries = read_route_summaries(fh)
    else:
        summaries = [r.summary for r in load_published_table()]
    rows = [(s.licensee, s.metrics(a.lrad_us, use_printed_d_ex=s.d_ex_km is not None), s.bitrate)
            for s in summaries]
    buf = io.StringIO()
    write_metrics_table(rows, buf)
    if a.out:
        atomic_write(a.out, buf.getvalue())
        _write_meta(Path(a.out), command="mw-table", lrad_us=a.lrad_us, routes=a.routes)
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _profile(a):
    from .mwphys import AtmosphereModel, RadioProfile

    return RadioProfile(f_ghz=a.f_ghz, l_rad_us=a.lrad_us), AtmosphereModel(k=a.k_factor)


def cmd_mw_plan(a) -> int:
    from .mwphys import greedy_excess_estimate, write_metrics_table
    from .routes import CorridorSpec, hop_list_csv, route_ensemble

    profile, atm = _profile(a)
    spec = CorridorSpec(half_width_km=a.half_width, density_per_km2=a.density)
    rows = route_ensemble(spec, range(a.seed, a.seed + a.seeds), profile, atm,
                          min_hop_km=a.min_hop)
    out = Path(a.out)
    buf = io.StringIO()
    buf.write("seed,towers,opt_N,opt_D_ex,opt_latency_us,greedy_N,greedy_D_ex,greedy_latency_us,"
              "n_near,greedy_estimate_D_ex\n")
    table = []
    for r in rows:
        o, g = r.optimal, r.greedy
        f = lambda v, p=3: "" if v is None else f"{v:.{p}f}"  # noqa: E731
        est = greedy_excess_estimate(g.n_near, g.metrics.d_tot_km) if g and g.n_near else None
        buf.write(",".join([
            str(r.seed), str(r.n_towers),
            str(o.metrics.n_hops) if o else "", f(o and o.metrics.d_ex_km), f(o and o.latency_us),
            str(g.metrics.n_hops) if g else "", f(g and g.metrics.d_ex_km), f(g and g.latency_us),
            f(g and g.n_near), f(est),
        ]) + "\n")
        if o:
            table.append((f"optimal-{r.seed}", o.metrics, ""))
            atomic_write(out / "hops" / f"optimal-{r.seed}.csv", hop_list_csv(o))
    atomic_write(out / "plan.csv", buf.getvalue())
    tbuf = io.StringIO()
    write_metrics_table(table, tbuf)
    atomic_write(out / "routes.csv", tbuf.getvalue())
    params = dict(command="mw-plan", seed=a.seed, seeds=a.seeds, f_ghz=a.f_ghz, lrad_us=a.lrad_us,
                  k=a.k_factor, half_width_km=a.half_width, density=a.density, min_hop_km=a.min_hop)
    _write_meta(out / "plan.csv", **params)
    _write_meta(out / "routes.csv", **params)
    if not table:
        print("error: no connectivity on any seed", file=sys.stderr)
        return EXIT_DATA
    print(f"planned {len(table)}/{len(rows)} routes to {out}")
    return EXIT_OK


def cmd_fcc_reconstruct(a) -> int:
    from .mwphys import write_metrics_table
    from .routes import hop_list_csv, ingest_license_records, reconstruct_routes, write_license_records

    with open(_existing(a.licenses, "license file"), newline="") as fh:
        ing = ingest_license_records(fh)
    for line, reason in ing.malformed:
        print(f"warning: line {line}: {reason}", file=sys.stderr)
    routes = reconstruct_routes(ing.records, a.tolerance_m, a.min_hops, a.lrad_us)
    out = Path(a.out)
    table, residue = [], []
    for k, r in enumerate(routes):
        residue.extend(r.residue)
        if r.metrics is None:
            continue
        name = r.licensee if sum(x.licensee == r.licensee and x.metrics is not None for x in routes) == 1 \
            else f"{r.licensee}#{k}"
        table.append((name, r.metrics, ""))
        safe = "".join(ch if ch.isalnum() else "_" for ch in name)
        atomic_write(out / "hops" / f"{safe}.csv", hop_list_csv(r))
    tbuf = io.StringIO()
    write_metrics_table(table, tbuf)
    atomic_write(out / "routes.csv", tbuf.getvalue())
    rbuf = io.StringIO()
    write_license_records(residue, rbuf)
    atomic_write(out / "residue.csv", rbuf.getvalue())
    params = dict(command="fcc-reconstruct", tolerance_m=a.tolerance_m, min_hops=a.min_hops,
                  lrad_us=a.lrad_us, malformed=len(ing.malformed),
                  duplicates=sum(ing.duplicates.values()))
    _write_meta(out / "routes.csv", **params)
    print(f"reconstructed {len(table)} route(s); {len(residue)} residue link(s)")
    return EXIT_OK


def cmd_econ(a) -> int:
    from .econ import EconParams, econ_report, latency_capture

    p = EconParams(a.f_c, a.volume, a.emini_price, a.emini_tick, a.equity_price, a.response_volume)
    report = metadata(command="econ", **econ_report(p))
    if a.curve:
        from .response import ResponseCurve

        curve = ResponseCurve.read(_existing(a.curve, "curve file"))
        report["latency_capture_ms"] = {f"{f:g}": latency_capture(curve, f) for f in a.capture}
    text = dump_json(report)
    if a.out:
        atomic_write(a.out, text)
    sys.stdout.write(text)
    return EXIT_OK


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latencylab", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.set_defaults(func=fn)
        return sp

    g = add("gen", cmd_gen, "simulate sessions")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--days", type=int, default=1)
    g.add_argument("--latency", type=parse_latency, default=parse_latency("4.85"),
                   help='"L" or "L1:w1,L2:w2" in ms')
    g.add_argument("--drive-rate", type=float, default=0.427)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--presignal-fraction", type=float, default=0.0)
    g.add_argument("--presignal-lead", type=float, default=2.0)
    g.add_argument("--response-shares", type=int, default=800)
    g.add_argument("--fill-prob", type=float, default=1.0)
    g.add_argument("--tape-jitter", type=_bool, default=False)
    g.add_argument("--background", choices=("none", "desk"), default="desk")
    g.add_argument("--symbol", default="SPY")
    g.add_argument("--threads", type=int, default=min(4, os.cpu_count() or 1))
    g.add_argument("--out", required=True)

    r = add("respond", cmd_respond, "measure response curves per day")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--symbol", default="SPY")
    r.add_argument("--resamples", type=int, default=200)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--volume", type=_bool, default=False)
    r.add_argument("--threads", type=int, default=min(4, os.cpu_count() or 1))

    s = add("stats", cmd_stats, "latency statistics, heatmap and median curve")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=("liquidity", "trade", "volume"), default="liquidity")
    s.add_argument("--xs", type=_floats, default=(0.05, 0.15, 0.50))
    s.add_argument("--sigmas", type=_floats, default=(3.0, 5.0, 10.0, 25.0))
    s.add_argument("--tf", type=float, default=30.0)
    s.add_argument("--svg", type=_bool, default=False)

    t = add("mw-table", cmd_mw_table, "route latency table")
    t.add_argument("--routes", help="licensee,N,D_geo,D_tot[,D_ex][,bitrate] CSV")
    t.add_argument("--lrad-us", type=float, default=10.0)
    t.add_argument("--out")

    m = add("mw-plan", cmd_mw_plan, "plan optimal and greedy routes over synthetic tower fields")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--seeds", type=int, default=10)
    m.add_argument("--half-width", type=float, default=70.0)
    m.add_argument("--density", type=float, default=0.02)
    m.add_argument("--min-hop", type=float, default=45.0)
    m.add_argument("--f-ghz", type=float, default=6.0)
    m.add_argument("--k-factor", type=float, default=4.0 / 3.0)
    m.add_argument("--lrad-us", type=float, default=10.0)
    m.add_argument("--out", required=True)

    f = add("fcc-reconstruct", cmd_fcc_reconstruct, "rebuild routes from license records")
    f.add_argument("--licenses", required=True)
    f.add_argument("--tolerance-m", type=float, default=100.0)
    f.add_argument("--min-hops", type=int, default=3)
    f.add_argument("--lrad-us", type=float, default=10.0)
    f.add_argument("--out", required=True)

    e = add("econ", cmd_econ, "economic point estimates")
    e.add_argument("--f-c", type=float, default=0.1)
    e.add_argument("--volume", type=float, default=5e9)
    e.add_argument("--emini-price", type=float, default=65_000.0)
    e.add_argument("--emini-tick", type=float, default=12.5)
    e.add_argument("--equity-price", type=float, default=130.0)
    e.add_argument("--response-volume", type=float, default=2e10)
    e.add_argument("--curve", help="excess-volume response CSV for latency capture")
    e.add_argument("--capture", type=_floats, default=(0.5, 0.95))
    e.add_argument("--out")
    return p


def _prescan(argv):
    cmd = next((x for x in argv if not x.startswith("-")), None)
    cfg = None
    for i, x in enumerate(argv):
        if x == "--config" and i + 1 < len(argv):
            cfg = argv[i + 1]
        elif x.startswith("--config="):
            cfg = x.split("=", 1)[1]
    return cmd, cfg


def _apply_config(parser, argv):
    """Parse ``argv`` with any config-file values installed as subcommand defaults."""
    cmd, cfg_path = _prescan(argv)
    subs = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    if cfg_path and cmd in subs:
        cfg = read_config(cfg_path)
        sp = subs[cmd]
        known = {a.dest for a in sp._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - known - {"config"})
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        # argparse applies ``type`` to string defaults, so raw text is fine here
        sp.set_defaults(**cfg)
        for act in sp._actions:  # noqa: SLF001
            if act.dest in cfg:
                act.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LatencyLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def run(argv) -> int:
    return main(list(argv))


if __name__ == "__main__":
    sys.exit(main())
