"""File formats: TimeSeries/DriveRecord CSV, compact binary records, and
JSON result documents.

CSV records are human-inspectable with '#'-prefixed header lines carrying
the metadata (sample_rate_hz, t0_s, calibration_m_per_unit, center_freq_hz;
center_freq_hz is 0 for baseband records, and complex-envelope records use
two value columns).  The binary variant (magic "OMB1", little-endian
float64 payload) is for large records.  All writes are atomic
(temp file + rename) and floats are written with shortest round-trip
representation, so a rerun with the same inputs is byte-identical.
"""

import json
import os
import struct
import tempfile

import numpy as np

from .synth import DriveRecord, TimeSeries

RESULT_SCHEMA = "optomech.result/1"
_TS_MAGIC = b"OMB1"


class FormatError(OSError):
    """Raised for malformed or mismatched data files."""


class SchemaError(FormatError):
    """Raised when a result document carries an unexpected schema id."""


def _atomic_write_bytes(path, payload: bytes):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return repr(float(x))


def write_timeseries_csv(path, ts: TimeSeries):
    lines = ["# optomech_timeseries v1",
             f"# sample_rate_hz={_fmt(ts.sample_rate)}",
             f"# t0_s={_fmt(ts.t0)}",
             f"# calibration_m_per_unit={_fmt(ts.calibration)}",
             f"# center_freq_hz={_fmt(ts.center_freq)}"]
    for w in ts.warnings:
        lines.append(f"# warning={w}")
    if ts.is_complex:
        lines.append("value_re,value_im")
        lines.extend(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in ts.values)
    else:
        lines.append("value")
        lines.extend(_fmt(v) for v in ts.values)
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def _parse_headers(fh):
    meta = {}
    warnings = []
    pos = fh.tell()
    line = fh.readline()
    while line.startswith("#"):
        body = line[1:].strip()
        if "=" in body:
            key, val = body.split("=", 1)
            if key.strip() == "warning":
                warnings.append(val.strip())
            else:
                meta[key.strip()] = val.strip()
        pos = fh.tell()
        line = fh.readline()
    fh.seek(pos)
    return meta, warnings


def read_timeseries_csv(path) -> TimeSeries:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# optomech_timeseries"):
            raise FormatError(f"{path}: not an optomech timeseries CSV")
        meta, warnings = _parse_headers(fh)
        cols = fh.readline().strip()
        try:
            if cols == "value_re,value_im":
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
                values = data[:, 0] + 1j * data[:, 1]
            elif cols == "value":
                values = np.loadtxt(fh, ndmin=1)
            else:
                raise FormatError(f"{path}: unexpected column header {cols!r}")
            return TimeSeries(
                sample_rate=float(meta["sample_rate_hz"]),
                t0=float(meta.get("t0_s", 0.0)),
                values=values,
                calibration=float(meta.get("calibration_m_per_unit", 1.0)),
                center_freq=float(meta.get("center_freq_hz", 0.0)),
                warnings=tuple(warnings),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: malformed timeseries CSV: {exc}") from exc


def write_timeseries_bin(path, ts: TimeSeries):
    flags = 1 if ts.is_complex else 0
    head = _TS_MAGIC + struct.pack("<B3x", flags)
    head += struct.pack("<4dQ", ts.sample_rate, ts.t0, ts.calibration,
                        ts.center_freq, ts.n)
    if ts.is_complex:
        payload = np.ascontiguousarray(
            np.column_stack([ts.values.real, ts.values.imag]), dtype="<f8"
        ).tobytes()
    else:
        payload = np.ascontiguousarray(ts.values, dtype="<f8").tobytes()
    _atomic_write_bytes(path, head + payload)


def read_timeseries_bin(path) -> TimeSeries:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _TS_MAGIC:
        raise FormatError(f"{path}: bad magic, not an OMB1 record")
    try:
        (flags,) = struct.unpack_from("<B3x", raw, 4)
        fs, t0, cal, cf, n = struct.unpack_from("<4dQ", raw, 8)
        body = np.frombuffer(raw, dtype="<f8", offset=8 + struct.calcsize("<4dQ"))
        if flags & 1:
            if body.size != 2 * n:
                raise FormatError(f"{path}: truncated complex payload")
            values = body[0::2] + 1j * body[1::2]
        else:
            if body.size != n:
                raise FormatError(f"{path}: truncated payload")
            values = body.copy()
        return TimeSeries(fs, t0, values, cal, cf)
    except struct.error as exc:
        raise FormatError(f"{path}: malformed OMB1 record: {exc}") from exc


def write_timeseries(path, ts: TimeSeries, fmt: str = "csv"):
    if fmt == "csv":
        write_timeseries_csv(path, ts)
    elif fmt == "bin":
        write_timeseries_bin(path, ts)
    else:
        raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'bin'")


def read_timeseries(path) -> TimeSeries:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == _TS_MAGIC:
        return read_timeseries_bin(path)
    return read_timeseries_csv(path)


def write_driverecord_csv(path, rec: DriveRecord):
    base, resp = rec.base_motion, rec.response_motion
    if base.is_complex or resp.is_complex:
        raise ValueError("drive records must be real-valued")
    lines = ["# optomech_driverecord v1",
             f"# drive_freq_hz={_fmt(rec.drive_freq)}",
             f"# sample_rate_hz={_fmt(base.sample_rate)}",
             f"# t0_s={_fmt(base.t0)}",
             f"# base_calibration_m_per_unit={_fmt(base.calibration)}",
             f"# response_calibration_m_per_unit={_fmt(resp.calibration)}",
             "base,response"]
    lines.extend(f"{_fmt(b)},{_fmt(r)}"
                 for b, r in zip(base.values, resp.values))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def read_driverecord_csv(path) -> DriveRecord:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# optomech_driverecord"):
            raise FormatError(f"{path}: not an optomech drive-record CSV")
        meta, _ = _parse_headers(fh)
        cols = fh.readline().strip()
        if cols != "base,response":
            raise FormatError(f"{path}: unexpected column header {cols!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
            fs = float(meta["sample_rate_hz"])
            t0 = float(meta.get("t0_s", 0.0))
            return DriveRecord(
                drive_freq=float(meta["drive_freq_hz"]),
                base_motion=TimeSeries(
                    fs, t0, data[:, 0],
                    float(meta.get("base_calibration_m_per_unit", 1.0))),
                response_motion=TimeSeries(
                    fs, t0, data[:, 1],
                    float(meta.get("response_calibration_m_per_unit", 1.0))),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: malformed drive-record CSV: {exc}") from exc


def write_result_doc(path, doc: dict):
    if doc.get("schema") != RESULT_SCHEMA:
        raise SchemaError(f"result document must declare schema={RESULT_SCHEMA!r}")
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(path, payload.encode())


def read_result_doc(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != RESULT_SCHEMA:
        raise SchemaError(
            f"{path}: schema mismatch (expected {RESULT_SCHEMA!r}, "
            f"got {doc.get('schema')!r})")
    return doc


def make_result_doc(command: str, config: dict, outputs: dict) -> dict:
    return {"schema": RESULT_SCHEMA, "command": command,
            "config": config, "outputs": outputs}


def write_table_csv(path, columns: dict):
    """Column-oriented plot-ready data file: {name: 1-D array}."""
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValueError("all columns must have equal length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())
