"""Batch orchestration: sessions in, report CSVs out.

For every site session the pipeline calibrates (when needed), screens
records against the quality predicates, reduces the survivors to one
representative brightness-temperature pair, inverts it under every
selected algorithm preset, and finally scores each site/preset series
against the reference probes.

Artifacts written to the output directory, all with deterministic row
order (site, session time, preset name) and fixed number formatting so
reruns are byte-identical:

    sessions.csv        per-session screening and statistics
    rejections.csv      per-session histogram of rejection flags
    retrievals.csv      one row per session x preset
    metrics.csv         one row per site x preset
    plot_tb_series.csv  representative TB series with quartiles
    plot_sm_series.csv  retrieved vs reference moisture with a 2-sigma band
    run_warnings.txt    skipped sessions and data errors, when any
"""

from __future__ import annotations

import datetime as dt
import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .ancillary import daily_ndvi_series, load_reflectance_csv, ndvi_to_tau
from .errors import DataError, DomainError
from .preprocess import (FilterThresholds, QualityFlag, TB_MAX_DEFAULT,
                         filter_tb, format_utc_timestamp, load_session,
                         min_threshold, representative, session_stats)
from .radiative import ViewGeometry
from .retrieval import CONSTANT_T_E, TAU_SCA_KINDS, TempSource, retrieve
from .validation import (metrics, nearest_reference, load_reference_csv,
                         reference_spread, spatial_average)

logger = logging.getLogger(__name__)

FLAG_ORDER = (QualityFlag.MAX_EXCEEDED, QualityFlag.MIN_VIOLATED,
              QualityFlag.POL_ORDER_VIOLATED)


@dataclass
class SessionRow:
    site: str
    session_id: str
    t_mid: float
    n_total: int = 0
    n_accepted: int = 0
    flag_counts: Counter = field(default_factory=Counter)
    summary: object = None
    tb_min_h: float = None
    tb_min_v: float = None
    t_e_measured: float = None
    sm_ref: float = None
    sm_ref_std: float = None
    tau_sca: float = None
    error: str = None


@dataclass
class RetrievalRow:
    site: str
    session_id: str
    t_mid: float
    preset: str
    t_e_used: float = None
    tau_sca: float = None
    result: object = None
    error: str = None


@dataclass
class MetricsRow:
    site: str
    preset: str
    n: int
    report: object = None   # MetricsReport when n >= 2


@dataclass
class PipelineReport:
    sessions: list
    retrievals: list
    metrics_rows: list
    warnings: list
    data_errors: list
    output_dir: Path

    @property
    def ok(self):
        return not self.data_errors


def _session_date(t_mid):
    return dt.datetime.fromtimestamp(t_mid, tz=dt.timezone.utc).date()


def _median_timestamp(records):
    stamps = sorted(r.timestamp for r in records)
    mid = len(stamps) // 2
    if len(stamps) % 2:
        return stamps[mid]
    return 0.5 * (stamps[mid - 1] + stamps[mid])


def _process_session(cfg, site, session_path, references, ndvi_series):
    session_id = Path(session_path).stem
    row = SessionRow(site=site.name, session_id=session_id, t_mid=0.0)
    records = load_session(session_path, calibration=cfg.calibration,
                           skip_leading=cfg.skip_leading)
    if not records:
        row.error = "empty session"
        return row, None
    row.n_total = len(records)
    row.t_mid = _median_timestamp(records)

    reference = nearest_reference(references, row.t_mid, cfg.align_window_s) \
        if references else None
    if reference is not None:
        row.t_e_measured = reference.point_temperature_k
        row.sm_ref = spatial_average(reference)
        row.sm_ref_std = reference_spread(reference)

    geometry = ViewGeometry(site.surface.incidence_deg, cfg.frequency_ghz)
    t_floor = row.t_e_measured if row.t_e_measured is not None else CONSTANT_T_E
    row.tb_min_h, row.tb_min_v = min_threshold(site.surface, geometry, t_floor)
    thresholds = FilterThresholds(tb_max=TB_MAX_DEFAULT, tb_min_h=row.tb_min_h,
                                  tb_min_v=row.tb_min_v)
    accepted, rejected = filter_tb(records, thresholds)
    row.n_accepted = len(accepted)
    for rec in rejected:
        for flag in rec.quality_flags:
            row.flag_counts[flag] += 1
    logger.info("site %s session %s: %d/%d accepted, rejections %s",
                site.name, session_id, row.n_accepted, row.n_total,
                {f.value: row.flag_counts.get(f, 0) for f in FLAG_ORDER})
    if not accepted:
        row.error = "no valid observations in session"
        return row, None

    row.summary = session_stats(accepted, n_total=row.n_total)
    rep = representative(accepted, cfg.statistic)

    entry = cfg.tau_table.entries.get(site.surface.land_cover)
    if entry is not None and entry.b == 0.0:
        row.tau_sca = 0.0
    elif ndvi_series is not None:
        value = ndvi_series.value_on(_session_date(row.t_mid))
        row.tau_sca, _ = ndvi_to_tau(value, cfg.tau_table, site.surface.land_cover)
    return row, rep


def _retrieve_session(cfg, site, session_row, rep, spec):
    out = RetrievalRow(site=site.name, session_id=session_row.session_id,
                       t_mid=session_row.t_mid, preset=spec.name,
                       tau_sca=session_row.tau_sca)
    algo = spec.resolve(site.surface.land_cover)
    if algo.t_e_source == TempSource.CONSTANT:
        out.t_e_used = CONSTANT_T_E
    elif session_row.t_e_measured is not None:
        out.t_e_used = session_row.t_e_measured
    else:
        out.error = "no reference temperature within the alignment window"
        return out
    if algo.kind in TAU_SCA_KINDS and session_row.tau_sca is None:
        out.error = "no ndvi-based opacity available"
        return out
    try:
        out.result = retrieve(rep, algo, site.surface, out.t_e_used,
                              tau_sca=session_row.tau_sca,
                              frequency_ghz=cfg.frequency_ghz)
    except DomainError as exc:
        out.error = str(exc)
    return out


def run_pipeline(cfg, output_dir=None):
    """Execute a campaign; returns a PipelineReport after writing all
    artifacts. Malformed files are recorded as data errors and the
    affected session skipped; everything else still runs.
    """
    out_dir = Path(output_dir) if output_dir else cfg.output_dir
    sessions, retrievals, metrics_rows = [], [], []
    warnings = list(cfg.warnings)
    data_errors = []

    for site in sorted(cfg.sites, key=lambda s: s.name):
        try:
            references = load_reference_csv(site.reference_path) \
                if site.reference_path else []
            ndvi_series = None
            if site.reflectance_path is not None:
                ndvi_series = daily_ndvi_series(
                    load_reflectance_csv(site.reflectance_path))
        except (DataError, DomainError) as exc:
            data_errors.append(str(exc))
            logger.warning("skipping site %s: %s", site.name, exc)
            continue

        site_rows = []
        for session_path in site.session_paths:
            try:
                row, rep = _process_session(cfg, site, session_path,
                                            references, ndvi_series)
            except DataError as exc:
                data_errors.append(str(exc))
                logger.warning("skipping malformed session: %s", exc)
                continue
            sessions.append(row)
            if row.error:
                warnings.append(f"site {site.name} session {row.session_id}: {row.error}")
                continue
            site_rows.append((row, rep))

        for spec in sorted(cfg.presets, key=lambda s: s.name):
            series_obs, series_ref = [], []
            for row, rep in sorted(site_rows, key=lambda item: item[0].t_mid):
                rrow = _retrieve_session(cfg, site, row, rep, spec)
                retrievals.append(rrow)
                if rrow.error:
                    warnings.append(f"site {site.name} session {row.session_id} "
                                    f"preset {spec.name}: {rrow.error}")
                elif row.sm_ref is not None:
                    series_obs.append(rrow.result.sm)
                    series_ref.append(row.sm_ref)
            report = metrics(series_obs, series_ref) if len(series_obs) >= 2 else None
            metrics_rows.append(MetricsRow(site=site.name, preset=spec.name,
                                           n=len(series_obs), report=report))

    sessions.sort(key=lambda r: (r.site, r.t_mid, r.session_id))
    retrievals.sort(key=lambda r: (r.site, r.t_mid, r.session_id, r.preset))
    metrics_rows.sort(key=lambda r: (r.site, r.preset))

    report = PipelineReport(sessions=sessions, retrievals=retrievals,
                            metrics_rows=metrics_rows, warnings=warnings,
                            data_errors=data_errors, output_dir=out_dir)
    write_artifacts(report)
    if not sessions:
        logger.warning("campaign produced no sessions")
    return report


# ----------------------------------------------------------------------
# Artifact writing
# ----------------------------------------------------------------------

def render_metrics_table(metrics_rows):
    """Human-readable companion to metrics.csv."""
    width = max([4] + [len(m.site) for m in metrics_rows])
    lines = [f"{'site':<{width}}  preset    n      bias      rmse    ubrmse        r"]
    for m in metrics_rows:
        rep = m.report
        if rep is None:
            lines.append(f"{m.site:<{width}}  {m.preset:<6} {m.n:>3}"
                         + "         -" * 4)
            continue
        r_text = f"{rep.r:>9.3f}" if not math.isnan(rep.r) else "        -"
        if rep.r_flag != "ok":
            r_text += f" ({rep.r_flag})"
        lines.append(f"{m.site:<{width}}  {m.preset:<6} {m.n:>3} "
                     f"{rep.bias:>9.4f} {rep.rmse:>9.4f} {rep.ubrmse:>9.4f}{r_text}")
    return lines


def _fmt(value, spec="{:.6f}"):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return spec.format(value)


def _atomic_write(path, lines):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def write_artifacts(report):
    out = report.output_dir
    out.mkdir(parents=True, exist_ok=True)

    lines = ["site,session,t_mid,n_total,n_accepted,"
             "n_max_exceeded,n_min_violated,n_pol_order_violated,"
             "tb_h_rep,tb_v_rep,mean_h,std_h,p25_h,p50_h,p75_h,"
             "mean_v,std_v,p25_v,p50_v,p75_v,tb_min_h,tb_min_v,"
             "t_e_measured,sm_ref,sm_ref_std,tau_sca,error"]
    for r in report.sessions:
        s = r.summary
        stats = [""] * 12
        if s is not None:
            stats = [_fmt(v, "{:.4f}") for v in (
                s.representative.tb_h, s.representative.tb_v,
                s.stats_h.mean, s.stats_h.std, s.stats_h.p25, s.stats_h.p50, s.stats_h.p75,
                s.stats_v.mean, s.stats_v.std, s.stats_v.p25, s.stats_v.p50, s.stats_v.p75)]
        lines.append(",".join([
            r.site, r.session_id, format_utc_timestamp(r.t_mid),
            str(r.n_total), str(r.n_accepted),
            *(str(r.flag_counts.get(f, 0)) for f in FLAG_ORDER),
            *stats,
            _fmt(r.tb_min_h, "{:.4f}"), _fmt(r.tb_min_v, "{:.4f}"),
            _fmt(r.t_e_measured, "{:.4f}"), _fmt(r.sm_ref), _fmt(r.sm_ref_std),
            _fmt(r.tau_sca), r.error or ""]))
    _atomic_write(out / "sessions.csv", lines)

    lines = ["site,session,flag,count"]
    for r in report.sessions:
        for flag in FLAG_ORDER:
            lines.append(f"{r.site},{r.session_id},{flag.value},{r.flag_counts.get(flag, 0)}")
    _atomic_write(out / "rejections.csv", lines)

    lines = ["site,session,t_mid,preset,t_e_used,tau_sca,"
             "sm,tau,cost,converged,boundary_hit,evaluations,error"]
    for r in report.retrievals:
        res = r.result
        lines.append(",".join([
            r.site, r.session_id, format_utc_timestamp(r.t_mid), r.preset,
            _fmt(r.t_e_used, "{:.4f}"), _fmt(r.tau_sca),
            _fmt(res.sm if res else None), _fmt(res.tau if res else None),
            _fmt(res.cost if res else None, "{:.6e}"),
            _fmt(res.converged if res else None),
            _fmt(res.boundary_hit if res else None),
            str(res.evaluations) if res else "",
            r.error or ""]))
    _atomic_write(out / "retrievals.csv", lines)

    lines = ["site,preset,n,bias,rmse,ubrmse,r,r_flag"]
    for m in report.metrics_rows:
        rep = m.report
        r_text = "" if rep is None or math.isnan(rep.r) else f"{rep.r:.6f}"
        lines.append(",".join([
            m.site, m.preset, str(m.n),
            _fmt(rep.bias if rep else None), _fmt(rep.rmse if rep else None),
            _fmt(rep.ubrmse if rep else None), r_text,
            rep.r_flag if rep else ""]))
    _atomic_write(out / "metrics.csv", lines)
    _atomic_write(out / "metrics.txt", render_metrics_table(report.metrics_rows))

    lines = ["site,session,t_mid,tb_h_p25,tb_h_p50,tb_h_p75,tb_h_mean,"
             "tb_v_p25,tb_v_p50,tb_v_p75,tb_v_mean"]
    for r in report.sessions:
        if r.summary is None:
            continue
        s = r.summary
        lines.append(",".join([
            r.site, r.session_id, format_utc_timestamp(r.t_mid),
            *(_fmt(v, "{:.4f}") for v in (
                s.stats_h.p25, s.stats_h.p50, s.stats_h.p75, s.stats_h.mean,
                s.stats_v.p25, s.stats_v.p50, s.stats_v.p75, s.stats_v.mean))]))
    _atomic_write(out / "plot_tb_series.csv", lines)

    lines = ["site,session,t_mid,preset,sm_retrieved,sm_ref,sm_ref_lo,sm_ref_hi"]
    for r in report.retrievals:
        if r.result is None:
            continue
        match = next((s for s in report.sessions
                      if s.site == r.site and s.session_id == r.session_id), None)
        ref = lo = hi = None
        if match is not None and match.sm_ref is not None:
            ref = match.sm_ref
            lo = max(ref - 2.0 * match.sm_ref_std, 0.0)
            hi = ref + 2.0 * match.sm_ref_std
        lines.append(",".join([
            r.site, r.session_id, format_utc_timestamp(r.t_mid), r.preset,
            _fmt(r.result.sm), _fmt(ref), _fmt(lo), _fmt(hi)]))
    _atomic_write(out / "plot_sm_series.csv", lines)

    if report.warnings or report.data_errors:
        lines = [f"error: {e}" for e in report.data_errors]
        lines += [f"warning: {w}" for w in report.warnings]
        _atomic_write(out / "run_warnings.txt", lines)
