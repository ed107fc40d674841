"""Screening of raw radiometer streams down to one representative
brightness-temperature pair per measurement session.

A session file holds a few thousand dual-polarization samples (either
brightness temperatures or raw detector voltages plus a linear
calibration). Records are kept only when all three quality predicates
hold:

  * tb_h and tb_v at or below the 320 K ceiling,
  * tb_h and tb_v at or above the physical floor given by the forward
    model evaluated at saturation moisture (sm = 1),
  * tb_v strictly above tb_h.

Rejected records carry flags naming exactly the violated predicates.
"""

import csv
import datetime as dt
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DataError, DomainError
from .radiative import (DielectricModel, SoilState, SurfaceRoughness, TbPair,
                        VegetationState, forward_tb)

TB_MAX_DEFAULT = 320.0  # K, ceiling applied to both polarizations


class QualityFlag(str, Enum):
    MAX_EXCEEDED = "max_exceeded"
    MIN_VIOLATED = "min_violated"
    POL_ORDER_VIOLATED = "pol_order_violated"


class Statistic(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"
    P25 = "p25"
    P75 = "p75"


@dataclass(frozen=True)
class RawSample:
    timestamp: float  # UTC epoch seconds
    v_h: float
    v_v: float


@dataclass(frozen=True)
class CalibrationParams:
    """Linear voltage-to-kelvin calibration, one gain/offset per channel."""

    gain_h: float = 1.0
    gain_v: float = 1.0
    offset_h: float = 0.0
    offset_v: float = 0.0

    def __post_init__(self):
        if self.gain_h == 0.0 or self.gain_v == 0.0:
            raise DomainError("calibration gains must be nonzero")


@dataclass(frozen=True)
class ObservationRecord:
    timestamp: float  # UTC epoch seconds
    tb: TbPair
    quality_flags: frozenset = field(default_factory=frozenset)


@dataclass(frozen=True)
class FilterThresholds:
    tb_max: float
    tb_min_h: float
    tb_min_v: float

    def __post_init__(self):
        if not (self.tb_min_h < self.tb_max and self.tb_min_v < self.tb_max):
            raise DomainError("minimum thresholds must lie below tb_max")


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    std: float
    p25: float
    p50: float
    p75: float


@dataclass(frozen=True)
class SessionSummary:
    representative: TbPair
    stats_h: ChannelStats
    stats_v: ChannelStats
    n_total: int
    n_accepted: int


def calibrate_voltage(sample, cal):
    """tb_p = gain_p * v_p + offset_p per channel."""
    return TbPair(cal.gain_h * sample.v_h + cal.offset_h,
                  cal.gain_v * sample.v_v + cal.offset_v)


def min_threshold(surface, geometry, t_e, tau_nadir=0.0,
                  dielectric=DielectricModel.MIRONOV):
    """Physical floor (tb_min_h, tb_min_v): the forward model at
    saturation moisture sm = 1 with the site's roughness and albedo.

    tau_nadir defaults to 0, the most permissive (lowest) floor; pass the
    site's current canopy opacity to tighten it.
    """
    pair = forward_tb(
        SoilState(sm=1.0, clay_fraction=surface.clay_fraction, temperature_k=t_e),
        VegetationState(tau_nadir=tau_nadir, omega=surface.omega),
        SurfaceRoughness(surface.h),
        geometry,
        t_e,
        dielectric,
    )
    return pair.tb_h, pair.tb_v


def record_flags(record, thresholds):
    """Flags for the quality predicates the record violates. Non-finite
    values fail the ceiling comparison and are flagged there."""
    tb_h, tb_v = record.tb.tb_h, record.tb.tb_v
    flags = set()
    if not (tb_h <= thresholds.tb_max and tb_v <= thresholds.tb_max):
        flags.add(QualityFlag.MAX_EXCEEDED)
    if not (tb_h >= thresholds.tb_min_h and tb_v >= thresholds.tb_min_v):
        flags.add(QualityFlag.MIN_VIOLATED)
    if not tb_v > tb_h:
        flags.add(QualityFlag.POL_ORDER_VIOLATED)
    return frozenset(flags)


def filter_tb(series, thresholds):
    """Split records into (accepted, rejected); rejected records carry the
    flags of every violated predicate. Empty input yields empty outputs.
    """
    accepted, rejected = [], []
    for rec in series:
        flags = record_flags(rec, thresholds)
        if flags:
            rejected.append(replace(rec, quality_flags=flags))
        else:
            accepted.append(replace(rec, quality_flags=frozenset()))
    return accepted, rejected


def _channel_arrays(accepted):
    if not accepted:
        raise DomainError("no valid observations in session")
    # sorted so every statistic (the mean included) is bit-identical under
    # permutation of the input records
    tb_h = np.sort(np.array([r.tb.tb_h for r in accepted], dtype=float))
    tb_v = np.sort(np.array([r.tb.tb_v for r in accepted], dtype=float))
    return tb_h, tb_v


_STAT_FUNCS = {
    Statistic.MEDIAN: np.median,
    Statistic.MEAN: np.mean,
    Statistic.P25: lambda x: np.percentile(x, 25),
    Statistic.P75: lambda x: np.percentile(x, 75),
}


def representative(accepted, statistic=Statistic.MEDIAN):
    """Per-channel representative value of a session; channels are reduced
    independently. Median is the operational default."""
    tb_h, tb_v = _channel_arrays(accepted)
    func = _STAT_FUNCS[Statistic(statistic)]
    return TbPair(float(func(tb_h)), float(func(tb_v)))


def session_stats(accepted, n_total=None):
    """Population statistics per channel plus the median representative.

    Quartiles interpolate linearly between closest order statistics; std
    is the population form (divide by n).
    """
    tb_h, tb_v = _channel_arrays(accepted)

    def stats(x):
        p25, p50, p75 = np.percentile(x, [25, 50, 75])
        return ChannelStats(float(np.mean(x)), float(np.std(x)),
                            float(p25), float(p50), float(p75))

    return SessionSummary(
        representative=representative(accepted, Statistic.MEDIAN),
        stats_h=stats(tb_h),
        stats_v=stats(tb_v),
        n_total=len(accepted) if n_total is None else n_total,
        n_accepted=len(accepted),
    )


# ----------------------------------------------------------------------
# Session CSV ingestion
# ----------------------------------------------------------------------

TB_HEADER = ("timestamp", "tb_h", "tb_v")
VOLTAGE_HEADER = ("timestamp", "v_h", "v_v")


def parse_utc_timestamp(text):
    """ISO-8601 -> UTC epoch seconds; naive stamps are taken as UTC."""
    raw = text.strip()
    try:
        stamp = dt.datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: {exc}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.timestamp()


def format_utc_timestamp(epoch_s):
    stamp = dt.datetime.fromtimestamp(epoch_s, tz=dt.timezone.utc)
    return stamp.isoformat().replace("+00:00", "Z")


def load_session(path, calibration=None, skip_leading=0):
    """Read one session CSV into ObservationRecords.

    Accepts either brightness-temperature files (timestamp,tb_h,tb_v) or
    raw-voltage files (timestamp,v_h,v_v); the latter require calibration
    parameters. `skip_leading` drops warm-up samples from the front.
    Timestamps must be strictly increasing.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(col.strip() for col in next(reader))
        except StopIteration:
            raise DataError("empty session file", path=path) from None
        if header == TB_HEADER:
            is_voltage = False
        elif header == VOLTAGE_HEADER:
            if calibration is None:
                raise DataError("voltage session requires calibration parameters",
                                path=path, line=1)
            is_voltage = True
        else:
            raise DataError(f"unrecognized session header {','.join(header)!r}",
                            path=path, line=1)

        records = []
        last_ts = None
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataError(f"expected 3 fields, got {len(row)}",
                                path=path, line=line_no)
            try:
                ts = parse_utc_timestamp(row[0])
                a, b = float(row[1]), float(row[2])
            except ValueError as exc:
                raise DataError(str(exc), path=path, line=line_no) from None
            if last_ts is not None and ts <= last_ts:
                raise DataError("timestamps must be strictly increasing",
                                path=path, line=line_no)
            last_ts = ts
            if is_voltage:
                tb = calibrate_voltage(RawSample(ts, a, b), calibration)
            else:
                tb = TbPair(a, b)
            records.append(ObservationRecord(ts, tb))

    if skip_leading:
        records = records[skip_leading:]
    return records


def write_session(path_or_fh, records):
    """Write ObservationRecords back out in the TB session schema, with a
    flags column when any record carries one."""
    own = isinstance(path_or_fh, (str, bytes)) or hasattr(path_or_fh, "__fspath__")
    fh = open(path_or_fh, "w", newline="", encoding="utf-8") if own else path_or_fh
    try:
        writer = csv.writer(fh)
        flagged = any(r.quality_flags for r in records)
        header = list(TB_HEADER) + (["flags"] if flagged else [])
        writer.writerow(header)
        for rec in records:
            row = [format_utc_timestamp(rec.timestamp),
                   f"{rec.tb.tb_h:.6f}", f"{rec.tb.tb_v:.6f}"]
            if flagged:
                row.append("|".join(sorted(f.value for f in rec.quality_flags)))
            writer.writerow(row)
    finally:
        if own:
            fh.close()
