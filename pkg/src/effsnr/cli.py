"""Command-line interface: ``python3 -m effsnr <command> ...``.

Tabular outputs are CSV (``--format json`` gives a records array instead);
single decisions are JSON objects. Every output ends with a newline. Exit
status is 0 on success, 2 on a usage error and 1 on a runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import default_thresholds
from .calibration import fit_thresholds, read_samples_csv, report_rows
from .channel import ChannelGenSpec, generate_trace
from .csi import CsiMeasurement, flat_csi
from .linksim import ALGORITHMS, compare_algorithms, summary_dict, write_events_csv
from .mcs import MCS_SETS, get_mcs
from .model import RxConfig, TxConfig, config_snrs, effective_snr, predict, rate_space
from .netconfig import (EFFECTIVE_SNR_BITRATE, PACKET_SNR, classify_mobility,
                        fit_snr_throughput_curve, select_ap, select_channel, select_relay,
                        trim_power)
from .phy import prr_from_snrs
from .thresholds import ThresholdTable
from .traceio import read_trace, write_trace

PREDICT_COLUMNS = ("t_us", "config", "rho_eff_db", "works", "rate_mbps")
SWEEP_COLUMNS = ("mcs", "snr_db", "rho_eff_db", "prr")
TRIM_COLUMNS = ("t_us", "offset_db", "baseline_mcs", "baseline_rate_mbps", "flag")
CALIBRATE_COLUMNS = ("mcs", "threshold_db", "balanced_error", "window_5_95_db",
                     "window_25_75_db", "flag")

_TRACE_NAME = re.compile(r"^(?P<src>[^-]+)-(?P<dst>[^-]+)(?:-(?P<channel>[^-]+))?\.trace$")


class CliError(Exception):
    """Runtime failure reported on stderr with exit status 1."""


# ------------------------------------------------------------------ output


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise CliError(f"non-finite value {v} in output")
        return repr(v)
    return "" if v is None else v


def _json_value(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _write_text(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def emit_table(rows: Sequence[dict], columns: Sequence[str], fmt: str, out: Optional[str]) -> None:
    if fmt == "json":
        recs = [{c: _json_value(r.get(c)) for c in columns} for r in rows]
        _write_text(json.dumps(recs, indent=1), out)
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    _write_text(buf.getvalue(), out)


def emit_object(obj: dict, out: Optional[str]) -> None:
    _write_text(json.dumps(obj, indent=2, sort_keys=False, default=_json_value), out)


# ------------------------------------------------------------------ inputs


def _thresholds(args) -> ThresholdTable:
    return ThresholdTable.load(args.thresholds) if args.thresholds else default_thresholds()


def _rx(args) -> RxConfig:
    return RxConfig(adc_bits=args.adc_bits)


def _space(n_tx: int, n_rx: int, args):
    space = rate_space(n_tx, n_rx, args.mcs_set, rx=_rx(args))
    if not space:
        raise CliError(f"MCS set {args.mcs_set!r} is empty for {n_tx}x{n_rx} antennas")
    return space


def _pick(trace, index: int) -> CsiMeasurement:
    try:
        return trace[index]
    except IndexError:
        raise CliError(f"record {index} out of range (trace has {len(trace)})") from None


def scan_trace_dir(path) -> dict[tuple, Path]:
    """Map ``(src, dst, channel-or-None)`` to files named ``src-dst[-channel].trace``."""
    d = Path(path)
    if not d.is_dir():
        raise CliError(f"{path} is not a directory")
    found = {}
    for f in sorted(d.iterdir()):
        m = _TRACE_NAME.match(f.name)
        if m:
            found[(m["src"], m["dst"], m["channel"])] = f
    if not found:
        raise CliError(f"no *.trace files in {path}")
    return found


def _metric_kind(args) -> str:
    return PACKET_SNR if args.metric == "packet-snr" else EFFECTIVE_SNR_BITRATE


# ------------------------------------------------------------------ commands


def cmd_gen(args) -> None:
    spec = ChannelGenSpec(seed=args.seed, n_tx=args.n_tx, n_rx=args.n_rx, n_sub=args.n_sub,
                          n_taps=args.taps, delay_spread_samples=args.delay_spread,
                          mean_snr_db=args.mean_snr_db, doppler_coeff=args.doppler,
                          n_records=args.records, interval_us=args.interval_us,
                          mobile_taps=args.mobile_taps)
    write_trace(generate_trace(spec), args.out, args.encoding)


def cmd_predict(args) -> None:
    trace = read_trace(args.trace)
    space = _space(trace.n_tx, trace.n_rx, args)
    table = _thresholds(args).domain("effective-snr")
    labels = [tx.label() for tx, _ in space]
    rows = []
    for rec in trace:
        p = predict(rec, space, table)
        for i, (tx, _) in enumerate(space):
            rows.append({"t_us": rec.timestamp_us, "config": labels[i],
                         "rho_eff_db": float(p.rho_eff_db[i]), "works": bool(p.works[i]),
                         "rate_mbps": float(tx.mcs.rate_mbps)})
    emit_table(rows, PREDICT_COLUMNS, args.format, args.out)


def cmd_calibrate(args) -> None:
    samples = read_samples_csv(args.samples)
    if not samples:
        raise CliError("sample CSV has no rows")
    report = fit_thresholds(samples, packet_len_bytes=args.payload)
    report.thresholds.save(args.out)
    emit_table(report_rows(report), CALIBRATE_COLUMNS, args.format, args.windows)


def cmd_sweep_prr(args) -> None:
    mcs_list = [get_mcs(i) for i in MCS_SETS[args.mcs_set]]
    n_ant = max(m.n_streams for m in mcs_list)
    rx = _rx(args)
    snrs_db = np.arange(args.snr_min, args.snr_max + 1e-9, args.snr_step)
    rows = []
    for m in mcs_list:
        tx = TxConfig(m, tuple(range(m.n_streams)))
        for j, s in enumerate(snrs_db):
            csi = flat_csi(float(s), n_ant, n_ant)
            sub = config_snrs(csi, tx, rx)
            prr = prr_from_snrs(sub, m, args.packets, args.payload, [args.seed, m.index, j])
            rows.append({"mcs": m.index, "snr_db": float(s),
                         "rho_eff_db": effective_snr(sub, m.bits_per_symbol).rho_eff_db,
                         "prr": prr})
    emit_table(rows, SWEEP_COLUMNS, args.format, args.out)


def cmd_simulate(args) -> None:
    trace = read_trace(args.trace)
    names = list(ALGORITHMS) if args.algo == "all" else [args.algo]
    table = _thresholds(args).domain("effective-snr")
    space = _space(trace.n_tx, trace.n_rx, args)
    results = compare_algorithms(trace, names, table, speedup=args.speedup, seed=args.seed,
                                 space=space)
    if args.out:
        if len(names) != 1:
            raise CliError("--out writes one event log; pick a single --algo")
        write_events_csv(results[names[0]].events, args.out)
    emit_table([summary_dict(results[n].summary) for n in names],
               ("algorithm", "speedup", "total_bytes", "bytes_per_s", "fraction_of_optimal"),
               args.format, args.summary)


def _candidates(args, groups: dict) -> list:
    return [(cid, _pick(read_trace(path), args.record)) for cid, path in sorted(groups.items())]


def cmd_select_ap(args) -> None:
    files = scan_trace_dir(args.trace)
    groups = {src: p for (src, dst, ch), p in files.items() if dst == args.client and ch is None}
    if not groups:
        raise CliError(f"no AP traces for client {args.client!r}")
    table = _thresholds(args) if args.metric == "effective-snr" else None
    d = select_ap(_candidates(args, groups), _metric_kind(args), table)
    emit_object({"chosen": d.chosen, "metric": args.metric, "metrics": d.metrics}, args.out)


def cmd_select_channel(args) -> None:
    files = scan_trace_dir(args.trace)
    groups = {ch: p for (src, dst, ch), p in files.items()
              if src == args.src and dst == args.dst and ch is not None}
    if not groups:
        raise CliError(f"no per-channel traces for {args.src}->{args.dst}")
    table = _thresholds(args) if args.metric == "effective-snr" else None
    d = select_channel(_candidates(args, groups), _metric_kind(args), table)
    emit_object({"chosen": d.chosen, "metric": args.metric, "metrics": d.metrics}, args.out)


def cmd_select_relay(args) -> None:
    files = scan_trace_dir(args.trace)
    pairs = {(s, d): p for (s, d, ch), p in files.items() if ch is None}
    nodes = sorted({n for pair in pairs for n in pair})
    relays = [n for n in nodes if n not in (args.src, args.dst)]
    csi = {pair: _pick(read_trace(p), args.record) for pair, p in pairs.items()}
    if args.missing_unreachable:
        needed = [(args.src, args.dst)] + [p for r in relays
                                           for p in ((args.src, r), (r, args.dst))]
        for pair in needed:
            csi.setdefault(pair, None)
    kind = _metric_kind(args)
    curve = None
    if kind == PACKET_SNR:
        if not args.curve:
            raise CliError("--metric packet-snr needs --curve (CSV of packet_snr_db,mbps)")
        with open(args.curve, newline="", encoding="utf-8") as fh:
            pts = [(float(r["packet_snr_db"]), float(r["mbps"])) for r in csv.DictReader(fh)]
        curve = fit_snr_throughput_curve(pts)
    table = _thresholds(args) if kind == EFFECTIVE_SNR_BITRATE else None
    est = select_relay(args.src, args.dst, relays, csi, kind, table, curve)
    emit_object({"chosen": est.chosen, "metric": args.metric,
                 "t_direct": None if math.isinf(est.t_direct) else est.t_direct,
                 "t_relay": {r: (None if math.isinf(t) else t) for r, t in est.t_relay.items()}},
                args.out)


def cmd_trim_power(args) -> None:
    trace = read_trace(args.trace)
    space = _space(trace.n_tx, trace.n_rx, args)
    table = _thresholds(args).domain("effective-snr")
    rows = []
    for rec in trace:
        r = trim_power(rec, table, space)
        rows.append({"t_us": rec.timestamp_us, "offset_db": float(r.offset_db),
                     "baseline_mcs": r.baseline_mcs, "baseline_rate_mbps": r.baseline_rate_mbps,
                     "flag": r.flag})
    emit_table(rows, TRIM_COLUMNS, args.format, args.out)


def cmd_mobility(args) -> None:
    trace = read_trace(args.trace)
    res = classify_mobility(trace.records)
    emit_object({"state": res.state.name, "c_min": res.c_min,
                 "path_min": res.path_min.tolist()}, args.out)


# ------------------------------------------------------------------ parser


def _add_common(p, *, trace=True, out=True, thresholds=False, seed=False, fmt=True,
                model=False):
    if trace:
        p.add_argument("--trace", required=True, metavar="PATH", help="input trace file")
    if out:
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    if thresholds:
        p.add_argument("--thresholds", metavar="PATH",
                       help="threshold table JSON (default: bundled calibration)")
    if seed:
        p.add_argument("--seed", type=int, default=0, metavar="U64")
    if model:
        p.add_argument("--mcs-set", choices=sorted(MCS_SETS), default="all")
        p.add_argument("--adc-bits", type=int, default=6, metavar="N")
    if fmt:
        p.add_argument("--format", choices=("csv", "json"), default="csv")


def _positive(kind):
    def parse(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="effsnr", description="Effective SNR link tools.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", help="write a synthetic channel trace")
    _add_common(p, trace=False, out=False, seed=True, fmt=False)
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--n-tx", type=int, default=1)
    p.add_argument("--n-rx", type=int, default=1)
    p.add_argument("--n-sub", type=int, choices=(56, 114), default=56)
    p.add_argument("--taps", type=int, default=6)
    p.add_argument("--delay-spread", type=float, default=2.0)
    p.add_argument("--mean-snr-db", type=float, default=20.0)
    p.add_argument("--doppler", type=float, default=0.99)
    p.add_argument("--mobile-taps", type=int)
    p.add_argument("--records", type=int, default=100)
    p.add_argument("--interval-us", type=int, default=1000)
    p.add_argument("--encoding", choices=("f32", "q8"), default="f32")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("predict", help="per-record, per-config predictions",
                       description="CSV columns: " + ", ".join(PREDICT_COLUMNS))
    _add_common(p, thresholds=True, model=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("calibrate", help="fit thresholds from delivery samples",
                       description="Input CSV columns: mcs, link_id, snr_db, prr. Report "
                                   "columns: " + ", ".join(CALIBRATE_COLUMNS))
    p.add_argument("samples", metavar="SAMPLES_CSV")
    p.add_argument("--out", required=True, metavar="PATH", help="threshold table JSON")
    p.add_argument("--windows", metavar="PATH", help="report CSV (default: stdout)")
    p.add_argument("--payload", type=_positive(int), default=1500)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep-prr", help="oracle PRR over a flat-channel SNR sweep",
                       description="CSV columns: " + ", ".join(SWEEP_COLUMNS))
    _add_common(p, trace=False, seed=True, model=True)
    p.add_argument("--packets", type=_positive(int), default=50, metavar="N")
    p.add_argument("--payload", type=_positive(int), default=1500)
    p.add_argument("--snr-min", type=float, default=-5.0)
    p.add_argument("--snr-max", type=float, default=35.0)
    p.add_argument("--snr-step", type=_positive(float), default=1.0)
    p.set_defaults(func=cmd_sweep_prr, mcs_set="siso")

    p = sub.add_parser("simulate", help="rate adaptation replay over a trace",
                       description="Event CSV columns: t_us, mcs, bytes, success. Summary "
                                   "columns: algorithm, speedup, total_bytes, bytes_per_s, "
                                   "fraction_of_optimal")
    _add_common(p, thresholds=True, seed=True, model=True)
    p.add_argument("--algo", choices=ALGORITHMS + ("all",), default="effsnr", metavar="NAME")
    p.add_argument("--speedup", type=_positive(float), default=1.0, metavar="F")
    p.add_argument("--summary", metavar="PATH", help="summary output (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    for name, func, help_ in (("select-ap", cmd_select_ap, "best AP for a client"),
                              ("select-channel", cmd_select_channel, "best channel for a link"),
                              ("select-relay", cmd_select_relay, "best relay, if any")):
        p = sub.add_parser(name, help=help_,
                           description="--trace is a directory of src-dst[-channel].trace files")
        _add_common(p, thresholds=True, fmt=False)
        p.add_argument("--metric", choices=("packet-snr", "effective-snr"),
                       default="effective-snr")
        p.add_argument("--record", type=int, default=0, help="record index used per trace")
        if name == "select-ap":
            p.add_argument("--client", required=True)
        else:
            p.add_argument("--src", required=True)
            p.add_argument("--dst", required=True)
        if name == "select-relay":
            p.add_argument("--curve", metavar="PATH",
                           help="packet_snr_db,mbps samples for the packet-snr metric")
            p.add_argument("--missing-unreachable", action="store_true",
                           help="treat absent trace files as unreachable links")
        p.set_defaults(func=func)

    p = sub.add_parser("trim-power", help="lowest transmit offset keeping the best rate",
                       description="CSV columns: " + ", ".join(TRIM_COLUMNS))
    _add_common(p, thresholds=True, model=True)
    p.set_defaults(func=cmd_trim_power)

    p = sub.add_parser("mobility", help="classify a trace as static or mobile")
    _add_common(p, fmt=False)
    p.set_defaults(func=cmd_mobility)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"effsnr {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
