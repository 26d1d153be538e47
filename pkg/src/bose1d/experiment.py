"""Run a configured experiment over its coupling values and write the results."""
import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from . import __version__
from .config import g_token
from .dmc import run_dmc, timestep_extrapolate
from .model import e_tg
from .observables import density_histogram, extrapolated_estimate, pair_histogram
from .trial import build_trial
from .vmc import optimize_beta, run_vmc

log = logging.getLogger(__name__)

CSV_COLUMNS = ("g", "1/g", "E_vmc", "err", "E_dmc", "err", "E/E_TG")


@dataclass
class ResultRecord:
    config_hash: str
    seed: int
    version: str
    timestamp: str
    config: dict
    rows: list = field(default_factory=list)
    histograms: dict = field(default_factory=dict)
    harmonic: bool = True

    def as_dict(self, files=None):
        return {"config_hash": self.config_hash, "seed": self.seed, "version": self.version,
                "timestamp": self.timestamp, "config": self.config, "results": self.rows,
                "histogram_files": files or {}}


def _round(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
        return float(format(v, ".12g"))
    if isinstance(v, dict):
        return {k: _round(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_round(x) for x in v]
    return v


def _histograms(cfg, trap, n):
    obs = cfg.observables
    hs = []
    if obs.density:
        hs.append(("density", density_histogram(trap, obs.density_bins)))
    if obs.pair and n >= 2:
        hs.append(("pair", pair_histogram(trap, obs.pair_bins)))
    return hs


def _estimators(cfg, have_vmc, have_dmc):
    est = cfg.observables.estimator
    if est == "all":
        wanted = ["vmc", "mixed", "extrapolated"]
    else:
        wanted = [est]
    avail = {"vmc": have_vmc, "mixed": have_dmc, "extrapolated": have_vmc and have_dmc}
    return [e for e in wanted if avail[e]] or (["vmc"] if have_vmc else ["mixed"])


def run_point(cfg, trap, g, workers=1):
    """Energies and histograms at one coupling value."""
    s = cfg.system
    n = s.n_particles
    beta = s.beta
    row = {"g": g_token(g), "inv_g": 0.0 if math.isinf(g) else (math.inf if g == 0 else 1.0 / g)}
    if cfg.beta_grid:
        beta, _, table = optimize_beta(s.family, trap, g, cfg.beta_grid, n, cfg.vmc,
                                       L=s.cutoff_length, workers=workers)
        row["beta_scan"] = [[b, e.mean, e.stderr] for b, e in table]
    trial = build_trial(s.family, trap, g, beta=beta, L=s.cutoff_length)
    row["beta"] = trial.beta
    templates = _histograms(cfg, trap, n)
    want_obs = bool(templates)
    run_v = cfg.sampler in ("vmc", "both") or (want_obs and cfg.observables.estimator
                                                in ("vmc", "extrapolated", "all"))
    run_d = cfg.sampler in ("dmc", "both")
    hists = {}
    if run_v:
        vp = cfg.vmc
        if want_obs and not vp.sample_stride:
            vp = replace(vp, sample_stride=1)
        v = run_vmc(trial, trap, n, vp, workers=workers, histograms=[h for _, h in templates])
        row.update(e_vmc=v.estimate.mean, e_vmc_err=v.estimate.stderr,
                   vmc_acceptance=v.estimate.acceptance, vmc_variance=v.estimate.variance)
        for (name, _), h in zip(templates, v.histograms):
            hists[(name, "vmc")] = h
        log.info("g=%s  E_vmc=%.6f +- %.6f", row["g"], v.estimate.mean, v.estimate.stderr)
    if run_d:
        dp = cfg.dmc
        if want_obs and not dp.sample_stride:
            dp = replace(dp, sample_stride=1)
        d = run_dmc(trial, trap, n, dp, histograms=[h for _, h in templates], workers=workers)
        est = d.estimate
        row.update(dmc_acceptance=est.acceptance, dmc_tau=dp.tau)
        for (name, _), h in zip(templates, d.histograms):
            hists[(name, "mixed")] = h
        if dp.tau_list:
            points = [(dp.tau, est)]
            for tau in dp.tau_list:
                if tau != dp.tau:
                    extra = run_dmc(trial, trap, n, replace(dp, tau=tau, sample_stride=0))
                    points.append((tau, extra.estimate))
            row["dmc_points"] = [[t, p.mean, p.stderr] for t, p in points]
            if len({t for t, _ in points}) >= 2:
                est = timestep_extrapolate(points)
        row.update(e_dmc=est.mean, e_dmc_err=est.stderr)
        log.info("g=%s  E_dmc=%.6f +- %.6f", row["g"], est.mean, est.stderr)
    for name, _ in templates:
        if (name, "vmc") in hists and (name, "mixed") in hists:
            hists[(name, "extrapolated")] = extrapolated_estimate(hists[(name, "mixed")],
                                                                  hists[(name, "vmc")])
    keep = _estimators(cfg, run_v, run_d)
    hists = {k: h.normalize() for k, h in hists.items() if k[1] in keep}
    if trap.kind == "harmonic":
        e = row.get("e_dmc", row.get("e_vmc"))
        row["e_over_etg"] = e / e_tg(n)
    return row, hists


def run_experiment(cfg, workers=1):
    trap = cfg.trap()
    record = ResultRecord(config_hash=cfg.digest(), seed=cfg.seed, version=__version__,
                          timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
                          config=cfg.canonical(), harmonic=trap.kind == "harmonic")
    for g in cfg.system.g:
        row, hists = run_point(cfg, trap, g, workers)
        record.rows.append(row)
        for (name, est), h in hists.items():
            record.histograms[(row["g"], name, est)] = h
    return record


def energies_csv(record):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)

    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        return format(v, ".12g")

    for r in record.rows:
        w.writerow([r["g"], cell(r["inv_g"]), cell(r.get("e_vmc")), cell(r.get("e_vmc_err")),
                    cell(r.get("e_dmc")), cell(r.get("e_dmc_err")),
                    cell(r.get("e_over_etg")) if record.harmonic else ""])
    return buf.getvalue()


def emit_outputs(record, out_dir, formats=("csv", "json")):
    """Write the energy table, the record and the histograms; returns the paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    prefix = os.path.join(out_dir, record.config_hash)
    paths = []

    def write(path, text):
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        paths.append(path)

    files = {}
    for (g, name, est), h in sorted(record.histograms.items()):
        for fmt in formats:
            path = f"{prefix}_g{g}_{name}_{est}.{fmt}"
            write(path, h.to_csv() if fmt == "csv" else h.to_json())
            files.setdefault(f"g={g}", []).append(os.path.basename(path))
    if "csv" in formats:
        write(f"{prefix}_energies.csv", energies_csv(record))
    if "json" in formats:
        text = json.dumps(_round(record.as_dict(files)), sort_keys=True, indent=1)
        write(f"{prefix}_record.json", text + "\n")
    return paths


def write_diagnostics(out_dir, config_hash, message, diagnostics):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{config_hash}_abort.json")
    with open(path, "w") as fh:
        json.dump(_round({"error": message, "diagnostics": diagnostics}), fh,
                  sort_keys=True, indent=1, default=str)
        fh.write("\n")
    return path
