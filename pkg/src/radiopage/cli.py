"""Command line entry points.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 no signal
detected in the input audio.  Every command is deterministic for fixed
flags and seed.  A JSON config file given with --config overrides flag
values; flags override built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import corpus, framing, pipeline, plots, raster, scheduler
from .channel import ChannelSpec, parse_channel_spec
from .modem import OfdmProfile, open_wav_writer, iter_wav
from .uplink import BroadcastSim

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NO_SIGNAL = 3


def _load_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            for key, value in json.load(fh).items():
                setattr(args, key, value)
    return args


def _profile(args: argparse.Namespace) -> OfdmProfile:
    kwargs = {}
    text = getattr(args, "profile", None)
    if text:
        names = {f.name for f in dataclass_fields(OfdmProfile)}
        for part in text.split(","):
            key, value = (s.strip() for s in part.split("=", 1))
            if key not in names:
                raise ValueError(f"unknown profile key {key!r}")
            kwargs[key] = type(getattr(OfdmProfile(), key))(value)
    return OfdmProfile(**kwargs)


def _channel(args: argparse.Namespace) -> ChannelSpec | None:
    text = getattr(args, "channel", None)
    if not text:
        return None
    spec = parse_channel_spec(text)
    if getattr(args, "seed", None) is not None and "seed=" not in text:
        spec = ChannelSpec(mode=spec.mode, distance_m=spec.distance_m,
                           rssi_db=spec.rssi_db, snr_db=spec.snr_db,
                           seed=args.seed)
    return spec


def cmd_tx(args) -> int:
    rgb = raster.load_png(args.screenshot)
    cmap = raster.load_clickmap(args.clickmap) if args.clickmap else None
    page = raster.normalize(rgb, args.crop, args.quality, page_id=args.page_id,
                            url=args.url, click_map=cmap)
    profile = _profile(args)
    manifest, bursts = pipeline.tx_page_bursts(
        page, profile, mode=args.mode, frames_per_burst=args.frames_per_burst)
    writer = open_wav_writer(args.out, profile.sample_rate)
    written = 0
    try:
        for burst in bursts:
            writer.writeframes(burst.samples.tobytes())
            written += len(burst.samples)
    finally:
        writer.close()
    manifest_path = Path(args.out).with_suffix(".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=1)
    print(f"wrote {args.out} ({written} samples, {written / profile.sample_rate:.1f} s) "
          f"and {manifest_path}")
    print(f"frames={manifest.frame_count} coded_bytes={manifest.coded_bytes_per_frame} "
          f"bursts={manifest.bursts}")
    return EXIT_OK


def cmd_rx(args) -> int:
    profile = _profile(args)
    stream = iter_wav(args.wav)
    rate = next(stream)
    if rate != profile.sample_rate:
        print(f"error: wav rate {rate} != profile rate {profile.sample_rate}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        result = pipeline.rx_samples(stream, profile, quality=args.quality)
    except pipeline.NoSignalError as exc:
        print(f"no signal: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    raster.save_page_png(args.out, result.page)
    report_path = Path(args.report) if args.report else Path(args.out).with_suffix(".report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(result.report.to_dict(), fh, indent=1)
    plots.save_rx_figure(Path(report_path).with_suffix(".png"), result)
    r = result.report
    print(f"wrote {args.out}; loss={r.frame_loss_rate:.4f} "
          f"({r.received_frames}/{r.total_frames} frames), "
          f"corrected conv={r.conv_corrected} rs={r.rs_corrected}, "
          f"goodput={r.goodput_bps:.0f} bps")
    return EXIT_OK


def _sweep_points(args) -> list[float]:
    if args.points:
        return [float(p) for p in args.points.split(",")]
    lo, hi, step = args.start, args.stop, args.step
    if step == 0:
        raise ValueError("step must be nonzero")
    out = []
    v = lo
    while (step > 0 and v <= hi + 1e-9) or (step < 0 and v >= hi - 1e-9):
        out.append(round(v, 6))
        v += step
    return out


def _sweep_page(args) -> raster.RasterPage:
    pages = corpus.build_corpus(corpus.MINI_PAGE_SPECS if args.small_page
                                else corpus.PAGE_SPECS[:1])
    return corpus.normalize_corpus(pages)[0]


def cmd_sweep(args) -> int:
    page = _sweep_page(args)
    prep = None
    if args.kind in ("rssi", "distance") and not args.no_fec:
        prep = pipeline.prepare_frames(page)  # encode once, drop per repetition
    rows = []
    for value in _sweep_points(args):
        losses = []
        for rep in range(args.reps):
            seed = args.seed + 1000 * rep
            if args.kind == "rssi":
                spec = ChannelSpec(mode="rssi", rssi_db=value, seed=seed)
            elif args.kind == "distance":
                spec = ChannelSpec(mode="distance", distance_m=value, seed=seed)
            else:
                spec = ChannelSpec(mode="awgn", snr_db=value, seed=seed)
            try:
                if prep is not None:
                    run = pipeline.run_prepared(prep, spec)
                    losses.append(run.result.frame_loss_rate)
                elif spec.frame_level:
                    run = pipeline.run_frame_channel(page, spec, with_fec=False)
                    losses.append(run.result.frame_loss_rate)
                else:
                    profile = _profile(args)
                    res = pipeline.loopback(page, profile, channel=spec,
                                            frames_per_burst=args.frames_per_burst)
                    losses.append(res.report.frame_loss_rate)
            except (framing.FramingError, pipeline.NoSignalError):
                losses.append(1.0)
        rows.append({"parameter": value,
                     "frame_loss_rate": statistics.mean(losses),
                     "loss_min": min(losses), "loss_max": max(losses),
                     "reps": args.reps})
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    plots.save_sweep_figure(Path(args.out).with_suffix(".png"), rows, args.kind)
    for r in rows:
        print(f"{args.kind}={r['parameter']:g}  loss={r['frame_loss_rate']:.4f}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    if args.updates:
        updates = scheduler.read_updates_csv(args.updates)
    else:
        updates = scheduler.synth_update_trace(seed=args.seed)
    horizon = args.horizon if args.horizon else (updates[-1][0] + 3600.0)
    rates = [float(r) for r in args.rates.split(",")]
    state = scheduler.run_trace(updates, rates, horizon, sample_dt=args.sample_dt)
    scheduler.write_timeline_csv(args.out, state)
    plots.save_timeline_figure(Path(args.out).with_suffix(".png"),
                               state.timeline, rates)
    peak = max(b for _, b in state.timeline)
    print(f"wrote {args.out}; {len(state.timeline)} samples, "
          f"peak backlog {peak / 1024:.0f} KB, final {state.backlog_bytes / 1024:.0f} KB")
    return EXIT_OK


def cmd_serve(args) -> int:
    import threading
    import time as _time

    import uvicorn

    from .service import build_app

    if args.corpus:
        pages = corpus.load_corpus(args.corpus)
    else:
        pages = corpus.build_corpus()
    catalog = corpus.normalize_corpus(pages)
    channel_spec = _channel(args) or ChannelSpec(mode="cable")
    sim = BroadcastSim(catalog, rates_bps=[args.rate],
                       channel_spec=channel_spec, denylist=corpus.DENYLIST)
    for page in catalog[: args.preload]:
        sim.push(page.url)
    app = build_app(sim)

    if args.realtime:
        def pump():
            while True:
                _time.sleep(1.0)
                sim.advance(1.0)
        threading.Thread(target=pump, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_corpus(args) -> int:
    pages = corpus.build_corpus()
    manifest = corpus.write_corpus(args.out, pages)
    print(f"wrote {len(pages)} pages under {args.out} (manifest {manifest})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radiopage")
    ap.add_argument("--config", help="JSON file whose values override flags")
    sub = ap.add_subparsers(dest="command", required=True)

    tx = sub.add_parser("tx", help="encode a screenshot into a WAV broadcast")
    tx.add_argument("screenshot")
    tx.add_argument("out")
    tx.add_argument("--clickmap")
    tx.add_argument("--url", default="")
    tx.add_argument("--page-id", type=int, default=0)
    tx.add_argument("--quality", type=int, default=raster.DEFAULT_QUALITY)
    tx.add_argument("--crop", type=int, default=raster.DEFAULT_CROP_PX)
    tx.add_argument("--mode", choices=[framing.MODE_COLUMN, framing.MODE_WHOLE_FILE],
                    default=framing.MODE_COLUMN)
    tx.add_argument("--profile", help="comma key=value OfdmProfile overrides")
    tx.add_argument("--frames-per-burst", type=int,
                    default=pipeline.DEFAULT_FRAMES_PER_BURST)
    tx.add_argument("--seed", type=int, default=0)
    tx.set_defaults(fn=cmd_tx)

    rx = sub.add_parser("rx", help="decode a WAV broadcast back into a page")
    rx.add_argument("wav")
    rx.add_argument("out")
    rx.add_argument("--report")
    rx.add_argument("--quality", type=int, default=raster.DEFAULT_QUALITY)
    rx.add_argument("--profile")
    rx.add_argument("--seed", type=int, default=0)
    rx.set_defaults(fn=cmd_rx)

    sw = sub.add_parser("sweep", help="frame-loss sweep over a channel parameter")
    sw.add_argument("kind", choices=["rssi", "distance", "snr"])
    sw.add_argument("out")
    sw.add_argument("--start", type=float, default=-65.0)
    sw.add_argument("--stop", type=float, default=-95.0)
    sw.add_argument("--step", type=float, default=-5.0)
    sw.add_argument("--points", help="explicit comma-separated parameter list")
    sw.add_argument("--reps", type=int, default=10)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--no-fec", action="store_true",
                    help="skip the codec round trip on surviving frames")
    sw.add_argument("--small-page", action="store_true",
                    help="use the small corpus page (fast audio sweeps)")
    sw.add_argument("--profile")
    sw.add_argument("--frames-per-burst", type=int, default=64)
    sw.set_defaults(fn=cmd_sweep)

    sc = sub.add_parser("schedule", help="replay or synthesize a carousel trace")
    sc.add_argument("out")
    sc.add_argument("--updates", help="CSV t_seconds,url,size_bytes")
    sc.add_argument("--rates", default="10000")
    sc.add_argument("--horizon", type=float, default=0.0)
    sc.add_argument("--sample-dt", type=float, default=60.0)
    sc.add_argument("--seed", type=int, default=0)
    sc.set_defaults(fn=cmd_schedule)

    sv = sub.add_parser("serve", help="run the uplink/broadcast HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8471)
    sv.add_argument("--corpus", help="directory with manifest.json (default: builtin)")
    sv.add_argument("--rate", type=float, default=10000.0)
    sv.add_argument("--preload", type=int, default=0,
                    help="push the first N catalog pages at startup")
    sv.add_argument("--channel", help="channel spec, e.g. mode=distance,distance_m=1.0")
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--realtime", action="store_true",
                    help="advance simulated time with the wall clock")
    sv.set_defaults(fn=cmd_serve)

    cp = sub.add_parser("corpus", help="write the bundled synthetic corpus to disk")
    cp.add_argument("out")
    cp.set_defaults(fn=cmd_corpus)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _load_config(args)
        return args.fn(args)
    except (OSError, ValueError, framing.FramingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
