"""Newline-delimited JSON trace files.

Line 1 is a header object, every following line one record::

    {"format": "effsnr-trace/1", "n_rx": 3, "n_tx": 3, "n_sub": 56,
     "interval_us": 1000, "encoding": "f32"}
    {"t_us": 0, "rssi_dbm": [...], "noise_dbm": -92.0, "agc_db": 0.0,
     "csi": [[[[re, im], ...tx], ...rx], ...sub]}

``f32`` records store floats at full precision. ``q8`` records hold signed
8-bit integers plus a per-record ``scale`` giving the float step.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .csi import ChannelTrace, CsiMeasurement, dequantize_matrices, quantize_matrices

FORMAT_TAG = "effsnr-trace/1"
Q8_BITS = 8


class TraceFormatError(ValueError):
    """Malformed trace file; ``record_index`` is None for header problems."""

    def __init__(self, message: str, record_index=None):
        where = "header" if record_index is None else f"record {record_index}"
        super().__init__(f"{where}: {message}")
        self.record_index = record_index


def _record_to_obj(rec: CsiMeasurement, encoding: str) -> dict:
    obj = {"t_us": rec.timestamp_us, "rssi_dbm": list(rec.rssi_dbm),
           "noise_dbm": rec.noise_dbm, "agc_db": rec.agc_db}
    if encoding == "q8":
        ints, step = quantize_matrices(rec.matrices, Q8_BITS)
        obj["scale"] = step
        obj["csi"] = ints.tolist()
    else:
        m = rec.matrices
        obj["csi"] = np.stack([m.real, m.imag], axis=-1).tolist()
    return obj


def write_trace(trace: ChannelTrace, path, encoding: str = "f32") -> None:
    if encoding not in ("f32", "q8"):
        raise ValueError(f"unknown encoding {encoding!r}")
    header = {"format": FORMAT_TAG, "n_rx": trace.n_rx, "n_tx": trace.n_tx,
              "n_sub": trace.n_sub, "interval_us": trace.interval_us, "encoding": encoding}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(_record_to_obj(rec, encoding)) + "\n")


def _parse_record(line: str, index: int, header: dict) -> CsiMeasurement:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"invalid JSON ({exc.msg})", index) from None
    if not isinstance(obj, dict):
        raise TraceFormatError("record is not an object", index)
    try:
        raw = np.asarray(obj["csi"], dtype=float)
        expected = (header["n_sub"], header["n_rx"], header["n_tx"], 2)
        if raw.shape != expected:
            raise TraceFormatError(f"csi shape {raw.shape} != {expected}", index)
        if header["encoding"] == "q8":
            if not np.all(raw == np.rint(raw)):
                raise TraceFormatError("q8 csi must hold integers", index)
            matrices = dequantize_matrices(raw, float(obj["scale"]))
        else:
            matrices = raw[..., 0] + 1j * raw[..., 1]
        return CsiMeasurement(matrices, tuple(obj["rssi_dbm"]), float(obj["noise_dbm"]),
                              float(obj["agc_db"]), int(obj["t_us"]))
    except TraceFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"bad record ({exc})", index) from None


def read_trace(path) -> ChannelTrace:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceFormatError("empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"invalid JSON ({exc.msg})") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT_TAG:
        raise TraceFormatError(f"expected format {FORMAT_TAG!r}")
    for key in ("n_rx", "n_tx", "n_sub", "interval_us", "encoding"):
        if key not in header:
            raise TraceFormatError(f"missing {key!r}")
    if header["encoding"] not in ("f32", "q8"):
        raise TraceFormatError(f"unknown encoding {header['encoding']!r}")
    if not text.endswith("\n"):
        # a final line without its newline was cut short
        raise TraceFormatError("truncated record", len(lines) - 2)

    records = []
    for i, line in enumerate(lines[1:]):
        rec = _parse_record(line, i, header)
        if records and rec.timestamp_us <= records[-1].timestamp_us:
            raise TraceFormatError("timestamps must be strictly increasing", i)
        records.append(rec)
    if not records:
        raise TraceFormatError("no records")
    return ChannelTrace(tuple(records), int(header["interval_us"]), header["encoding"])
