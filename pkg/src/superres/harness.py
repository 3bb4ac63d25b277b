"""Seeded experiment runner: build instances, run every algorithm on the same
data, evaluate, and write long-form CSV plus per-(snr, eta) plot data.

Seed splitting
--------------
Trial ``t`` draws spike positions (ell units) and amplitudes from
``default_rng([master_seed, t])``; the noise for the cell at ``F_list[i]``
and ``snr_list[j]`` comes from ``default_rng([master_seed, t, i, j])``.
Positions are therefore shared across F and SNR within a trial, and every
algorithm sees the identical measurement vector.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bands import BandRadius, default_band_radius
from .metrics import EvaluationRecord, evaluate
from .model import (AmplitudeModel, GridSpec, build_sensing_matrix, draw_amplitudes,
                    measure, sample_positions, spikes_from_positions)
from .solvers import BpdnSettings, blot, bloomp, bpdn, omp

__all__ = [
    "ALGORITHMS",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "ConfigError",
    "run_experiment",
    "sweep_superresolution_factor",
    "estimate_pla_exponent",
    "emit_results",
    "read_results_csv",
    "load_config",
    "PRESETS",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("omp", "bloomp", "bp", "bp_blot")
CSV_COLUMNS = ("trial", "algorithm", "F", "snr", "eta", "unfiltered_rel_error",
               "filtered_rel_error", "relative_residual", "bottleneck_ell",
               "hausdorff_ell", "runtime_ms", "flags")
PLOT_COLUMNS = ("F", "algorithm", "median_error", "q25", "q75")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """A batch of trials.

    ``placement`` is ``{"kind": "random", "min_sep": <ell>}`` or
    ``{"kind": "explicit", "positions": [<ell>, ...]}``.  ``band_radius`` is
    ``"auto"`` (one Rayleigh length, or half the minimum separation below
    one ell) or a radius in ell units.
    """

    F_list: tuple[int, ...] = (50,)
    s: int = 20
    placement: dict = field(default_factory=lambda: {"kind": "random", "min_sep": 4.0})
    m: int = 150
    amplitude_model: AmplitudeModel = AmplitudeModel()
    snr_list: tuple[float, ...] = (20.0,)
    algorithms: tuple[str, ...] = ALGORITHMS
    eta_list: tuple[float, ...] = (0.1,)
    band_radius: Any = "auto"
    trials: int = 10
    master_seed: int = 0
    bpdn: BpdnSettings = BpdnSettings()
    epsilon_multiplier: float = 1.0
    kernel: str = "tent"
    wrap_bands: bool = False
    lo_passes: int = 1

    def __post_init__(self):
        F_list = tuple(int(F) for F in self.F_list)
        if not F_list or any(F < 1 or F != f for F, f in zip(F_list, self.F_list)):
            raise ConfigError("F_list must hold integers >= 1")
        object.__setattr__(self, "F_list", F_list)
        object.__setattr__(self, "snr_list", tuple(float(v) for v in self.snr_list))
        object.__setattr__(self, "eta_list", tuple(float(v) for v in self.eta_list))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.lo_passes < 1:
            raise ConfigError("lo_passes must be >= 1")
        if not self.algorithms or set(self.algorithms) - set(ALGORITHMS):
            raise ConfigError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if any(v <= 0 for v in self.snr_list) or not self.snr_list:
            raise ConfigError("snr values must be positive")
        kind = self.placement.get("kind")
        if kind == "random":
            if set(self.placement) != {"kind", "min_sep"} or self.placement["min_sep"] <= 0:
                raise ConfigError("random placement needs exactly a positive min_sep")
        elif kind == "explicit":
            if set(self.placement) != {"kind", "positions"}:
                raise ConfigError("explicit placement needs exactly a positions list")
            if len(self.placement["positions"]) != self.s:
                raise ConfigError("s must equal the number of explicit positions")
        else:
            raise ConfigError(f"unknown placement kind {kind!r}")
        if not (self.band_radius == "auto" or
                (isinstance(self.band_radius, (int, float)) and self.band_radius > 0)):
            raise ConfigError("band_radius must be 'auto' or a positive length in ell")

    @property
    def min_sep(self) -> float:
        if self.placement["kind"] == "random":
            return float(self.placement["min_sep"])
        p = np.sort(np.asarray(self.placement["positions"], dtype=float))
        return float(np.diff(p).min()) if p.size > 1 else float(self.m)

    def radius_for(self, F: int) -> BandRadius:
        if self.band_radius == "auto":
            r = default_band_radius(self.min_sep, F)
        else:
            r = BandRadius(max(1, math.floor(self.band_radius * F + 1e-9)), "explicit")
        return dataclasses.replace(r, wrap=self.wrap_bands)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["F_list"] = list(self.F_list)
        d["snr_list"] = [v if math.isfinite(v) else "inf" for v in self.snr_list]
        d["eta_list"] = list(self.eta_list)
        d["algorithms"] = list(self.algorithms)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        try:
            if "amplitude_model" in d:
                d["amplitude_model"] = AmplitudeModel(**d["amplitude_model"])
            if "bpdn" in d:
                d["bpdn"] = BpdnSettings(**d["bpdn"])
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        if "snr_list" in d:
            d["snr_list"] = [float(v) for v in d["snr_list"]]
        for key in ("F_list", "snr_list", "eta_list", "algorithms"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class ResultRow:
    trial: int
    algorithm: str
    F: int
    snr: float
    record: EvaluationRecord


@dataclass
class ResultTable:
    rows: list[ResultRow]
    eta_list: tuple[float, ...] = ()

    def values(self, algorithm: str, F: int, snr: float, metric: str = "unfiltered",
               eta: float | None = None) -> np.ndarray:
        """Per-trial values of one metric for one (algorithm, F, snr) cell."""
        out = [_metric(r.record, metric, eta) for r in self.rows
               if r.algorithm == algorithm and r.F == F and r.snr == snr]
        return np.array([v for v in out if v is not None], dtype=float)

    def aggregate(self, metric: str = "unfiltered", eta: float | None = None) -> dict:
        """``{(algorithm, F, snr): {median, mean, q25, q75}}``."""
        cells = sorted({(r.algorithm, r.F, r.snr) for r in self.rows},
                       key=lambda c: (c[2], c[1], ALGORITHMS.index(c[0])))
        out = {}
        for alg, F, snr in cells:
            v = self.values(alg, F, snr, metric, eta)
            v = v[np.isfinite(v)]
            if v.size == 0:
                continue
            q25, med, q75 = np.percentile(v, [25, 50, 75])
            out[(alg, F, snr)] = {"median": float(med), "mean": float(v.mean()),
                                  "q25": float(q25), "q75": float(q75)}
        return out


def _metric(rec: EvaluationRecord, metric: str, eta: float | None):
    if metric == "unfiltered":
        return rec.unfiltered_rel_error
    if metric == "filtered":
        return rec.filtered_rel_errors.get(float(eta))
    if metric == "residual":
        return rec.relative_residual
    if metric == "bottleneck":
        return rec.bottleneck
    if metric == "hausdorff":
        return rec.hausdorff
    raise KeyError(metric)


def _failed_record(exc: Exception, etas) -> EvaluationRecord:
    nan = float("nan")
    return EvaluationRecord(nan, {float(e): nan for e in etas}, nan, None, None, 0.0,
                            [f"error:{type(exc).__name__}:{exc}"])


def _instance_positions(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if config.placement["kind"] == "explicit":
        return np.asarray(config.placement["positions"], dtype=float)
    # pad by one fine step of the coarsest grid so snapping keeps the separation
    pad = 1.0 / min(config.F_list)
    return sample_positions(config.m, config.s, config.min_sep, rng, pad=pad)


def _run_trial(config: ExperimentConfig, t: int) -> list[ResultRow]:
    rng = np.random.default_rng([config.master_seed, t])
    positions = _instance_positions(config, rng)
    amplitudes = draw_amplitudes(len(positions), config.amplitude_model, rng)
    rows = []
    for fi, F in enumerate(config.F_list):
        grid = GridSpec(config.m, F)
        phi = build_sensing_matrix(grid)
        truth = spikes_from_positions(grid, positions, amplitudes)
        radius = config.radius_for(F)
        for si, snr in enumerate(config.snr_list):
            meas = measure(phi, truth, snr, rng_seed=[config.master_seed, t, fi, si])
            rows += _run_cell(config, t, phi, truth, meas, radius)
    return rows


def _run_cell(config, t, phi, truth, meas, radius) -> list[ResultRow]:
    s = truth.sparsity
    F = phi.grid.F
    etas = config.eta_list
    settings = dataclasses.replace(config.bpdn,
                                   epsilon=config.epsilon_multiplier * meas.noise_norm)
    rows = []
    bp_cache = None
    for alg in config.algorithms:
        try:
            start = time.perf_counter()
            if alg == "omp":
                out = omp(phi, meas.y, s)
            elif alg == "bloomp":
                out = bloomp(phi, meas.y, s, radius, lo_passes=config.lo_passes)
            elif bp_cache is None:
                bp_cache = (bpdn(phi, meas.y, settings), time.perf_counter() - start)
                start = time.perf_counter()
            if alg in ("bp", "bp_blot"):
                bp, bp_time = bp_cache
                start -= bp_time
                if alg == "bp":
                    out = bp
                else:
                    out = blot(bp.coefficients, phi, meas.y, s, radius,
                               lo_passes=config.lo_passes)
                    out.flags = bp.flags + out.flags
            elapsed = time.perf_counter() - start
            rec = evaluate(phi, meas.y, truth, out.coefficients, out.support, etas,
                           config.kernel, elapsed, out.flags)
        except Exception as exc:  # recorded per row, never fatal to the batch
            log.warning("trial %d %s F=%d failed: %s", t, alg, F, exc)
            rec = _failed_record(exc, etas)
        rows.append(ResultRow(t, alg, F, meas.snr, rec))
    return rows


def _sort_key(row: ResultRow):
    return (row.trial, row.F, row.snr, ALGORITHMS.index(row.algorithm))


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ResultTable:
    trials = range(config.trials)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_trial, [config] * config.trials, trials))
    else:
        chunks = [_run_trial(config, t) for t in trials]
    rows = sorted((r for chunk in chunks for r in chunk), key=_sort_key)
    return ResultTable(rows, config.eta_list)


def sweep_superresolution_factor(config: ExperimentConfig, threads: int = 1) -> ResultTable:
    """``run_experiment`` over ``config.F_list``; instances share positions across F."""
    if len(config.F_list) < 2:
        log.info("sweep over a single F reduces to run_experiment")
    return run_experiment(config, threads)


def estimate_pla_exponent(errors: Sequence[float], factors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(F)."""
    e = np.asarray(errors, dtype=float)
    F = np.asarray(factors, dtype=float)
    if e.shape != F.shape or e.size < 2:
        raise ValueError("need at least two (error, F) pairs of equal length")
    if np.any(e <= 0) or np.any(F <= 0):
        raise ValueError("errors and factors must be positive for a log-log fit")
    return float(np.polyfit(np.log(F), np.log(e), 1)[0])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    # shortest repr that round-trips exactly; integral values without ".0"
    return str(int(v)) if v.is_integer() and abs(v) < 1e16 else repr(v)


def _parse(v: str):
    return None if v == "" else float(v)


def emit_results(table: ResultTable, path, *, timings: bool = False,
                 render: bool = False) -> list[Path]:
    """Write ``results.csv`` and one plot-data CSV per (snr, eta) under ``path``.

    ``runtime_ms`` is left blank unless ``timings`` is set, which keeps the
    output byte-identical across runs with the same seed.
    """
    if not table.rows:
        raise ValueError("nothing to emit: empty result table")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    etas = table.eta_list
    columns = [c for c in CSV_COLUMNS
               if etas or c not in ("eta", "filtered_rel_error")]
    written = []
    results = out / "results.csv"
    with _open_w(results) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in table.rows:
            rec = row.record
            base = {
                "trial": row.trial, "algorithm": row.algorithm, "F": row.F,
                "snr": row.snr,
                "unfiltered_rel_error": rec.unfiltered_rel_error,
                "relative_residual": rec.relative_residual,
                "bottleneck_ell": rec.bottleneck, "hausdorff_ell": rec.hausdorff,
                "runtime_ms": rec.runtime * 1e3 if timings else None,
            }
            flags = ";".join(rec.flags)
            for eta in (etas or (None,)):
                vals = dict(base)
                if eta is not None:
                    vals["eta"] = eta
                    vals["filtered_rel_error"] = rec.filtered_rel_errors.get(eta)
                w.writerow([flags if c == "flags" else
                            (vals[c] if c == "algorithm" else _fmt(vals[c]))
                            for c in columns])
    written.append(results)

    for snr in sorted({r.snr for r in table.rows}):
        for eta in (etas or (None,)):
            metric = "unfiltered" if eta is None else "filtered"
            agg = table.aggregate(metric, eta)
            name = f"plot_snr{_fmt(snr)}_eta{'none' if eta is None else _fmt(eta)}.csv"
            p = out / name
            with _open_w(p) as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(PLOT_COLUMNS)
                for (alg, F, s), a in agg.items():
                    if s == snr:
                        w.writerow([F, alg, _fmt(a["median"]), _fmt(a["q25"]),
                                    _fmt(a["q75"])])
            written.append(p)
            if render:
                written.append(_render(p))
    return written


def _open_w(p: Path):
    try:
        return open(p, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc}") from exc


def _render(plot_csv: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = read_plot_csv(plot_csv)
    fig, ax = plt.subplots(figsize=(4, 3))
    for alg in ALGORITHMS:
        pts = sorted((F, med) for F, a, med, _, _ in data if a == alg)
        if pts:
            ax.loglog(*zip(*pts), marker="o", label=alg)
    ax.set_xlabel("F")
    ax.set_ylabel("median relative error")
    ax.legend()
    fig.tight_layout()
    png = plot_csv.with_suffix(".png")
    fig.savefig(png, dpi=100)
    plt.close(fig)
    return png


def read_plot_csv(path) -> list[tuple]:
    with open(path, newline="") as fh:
        return [(int(r["F"]), r["algorithm"], float(r["median_error"]),
                 float(r["q25"]), float(r["q75"])) for r in csv.DictReader(fh)]


def read_results_csv(path) -> ResultTable:
    """Rebuild a ResultTable from ``results.csv`` (runtime and flags included)."""
    grouped: dict[tuple, ResultRow] = {}
    etas: list[float] = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            key = (int(r["trial"]), r["algorithm"], int(r["F"]), float(r["snr"]))
            row = grouped.get(key)
            if row is None:
                rec = EvaluationRecord(
                    unfiltered_rel_error=float(r["unfiltered_rel_error"]),
                    filtered_rel_errors={},
                    relative_residual=float(r["relative_residual"]),
                    bottleneck=_parse(r["bottleneck_ell"]),
                    hausdorff=_parse(r["hausdorff_ell"]),
                    runtime=(_parse(r["runtime_ms"]) or 0.0) / 1e3,
                    flags=[f for f in r["flags"].split(";") if f],
                )
                row = grouped[key] = ResultRow(key[0], key[1], key[2], key[3], rec)
            if "eta" in r:
                eta = float(r["eta"])
                if eta not in etas:
                    etas.append(eta)
                row.record.filtered_rel_errors[eta] = float(r["filtered_rel_error"])
    return ResultTable(sorted(grouped.values(), key=_sort_key), tuple(etas))


# Desk-scale versions of the published experiments.
PRESETS: dict[str, ExperimentConfig] = {
    "well_separated": ExperimentConfig(
        F_list=(50,), s=20, placement={"kind": "random", "min_sep": 4.0},
        snr_list=(20.0,), eta_list=(0.0, 0.1), trials=10, master_seed=2012),
    "f_sweep": ExperimentConfig(
        F_list=(2, 5, 10, 25, 50), s=20, placement={"kind": "random", "min_sep": 4.0},
        snr_list=(20.0,), eta_list=(0.0, 0.05), trials=10, master_seed=2013),
    "f_sweep_full": ExperimentConfig(
        F_list=(2, 5, 10, 15, 20, 25, 30, 40, 50), s=20,
        placement={"kind": "random", "min_sep": 4.0},
        snr_list=(100.0, 20.0, 10.0), eta_list=(0.0, 0.05), trials=10,
        master_seed=2013),
    "rayleigh5": ExperimentConfig(
        F_list=(50,), s=5,
        placement={"kind": "explicit", "positions": [76.0, 76.5, 79.0, 80.0, 81.0]},
        snr_list=(20.0,), eta_list=(0.0, 0.25), trials=10, master_seed=2014),
    "rayleigh6": ExperimentConfig(
        F_list=(50,), s=6,
        placement={"kind": "explicit",
                   "positions": [10.0, 10.3, 15.0, 20.0, 25.0, 25.3]},
        amplitude_model=AmplitudeModel("positive_real"),
        snr_list=(20.0,), eta_list=(0.0, 0.1), trials=10, master_seed=2015),
}
