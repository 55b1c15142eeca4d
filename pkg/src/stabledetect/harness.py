"""Monte Carlo sweeps, theorem checks and result tables.

Randomness follows a fixed seed tree: every (point, chunk) pair gets its own
generator from ``SeedSequence(seed, spawn_key=(point, chunk))`` and chunk
sizes do not depend on the thread count, so results are identical for any
``threads``. Within a chunk all detectors see the same observations.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import scipy
import yaml

from . import __version__, detectors, kernels
from .errors import ConfigError, NumericalError
from .estimation import estimate_params
from .field import (EmissionSpec, FadingSpec, HypothesisModel, HypothesisPair, NetworkConfig,
                    empirical_cf, interference_params, signal_params, simulate_aggregate)
from .moments import StatKind
from .stable import (StableParams, c_alpha, char_fn, density_table, require_detection_alpha,
                     sample)

log = logging.getLogger(__name__)

DETECTORS = ("ML", "FLOM", "SIGNED", "LOG", "MIXED", "MIXED-INDEP")
CSV_HEADER = ("snr_db", "detector", "L", "empirical_pe", "theoretical_pe", "n_trials",
              "wilson_halfwidth")
WILSON_Z = 1.959963984540054
UNDER_RESOLVED_PE = 1e-4

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
        "delta": {"type": "number", "exclusiveMinimum": 1},
        "L": {"oneOf": [{"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 1}]},
        "snr_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "detectors": {"type": "array", "items": {"enum": list(DETECTORS)}, "minItems": 1},
        "n_trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "estimation": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["n_e"],
            "properties": {"n_e": {"type": "integer", "minimum": 50},
                           "refresh_period": {"type": "integer", "minimum": 1},
                           "mixed_grid": {"type": "integer", "minimum": 2},
                           "table_step": {"type": "number", "exclusiveMinimum": 0}},
        },
        "local_error": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "thinning": {"enum": ["printed", "success"]},
        "output_path": {"type": "string"},
        "chunk_size": {"type": "integer", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1},
        "pdf_tol": {"type": "number", "exclusiveMinimum": 0},
        "p_points": {"type": "integer", "minimum": 3},
        "spatial": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {"deltas": {"type": "array", "items": {"type": "number"}},
                           "n_draws": {"type": "integer", "minimum": 1},
                           "fading": {"enum": ["rayleigh", "unit"]},
                           "emission": {"enum": ["two_point", "gaussian"]},
                           "t_grid": {"type": "array", "items": {"type": "number"}},
                           "max_bias": {"type": "number", "exclusiveMinimum": 0},
                           "lambda_D": {"type": ["number", "null"], "exclusiveMinimum": 0},
                           "lambda_I": {"type": ["number", "null"], "exclusiveMinimum": 0}},
        },
    },
}


@dataclass(frozen=True)
class EstimationSpec:
    n_e: int
    refresh_period: int = 500
    mixed_grid: int = 12
    table_step: float = 0.05


@dataclass(frozen=True)
class SpatialSpec:
    deltas: tuple = (4.0, 2.222)
    n_draws: int = 100_000
    fading: str = "rayleigh"
    emission: str = "two_point"
    t_grid: tuple = tuple(round(0.1 * k, 10) for k in range(1, 51))
    max_bias: float = 0.005
    lambda_D: float | None = None
    lambda_I: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    L: tuple = (10,)
    snr_grid: tuple = (0.0,)
    detectors: tuple = DETECTORS
    n_trials: int = 100_000
    seed: int = 0
    estimation: EstimationSpec | None = None
    local_error: float | None = None
    thinning: str = "printed"
    output_path: str = "results.csv"
    chunk_size: int = 5000
    threads: int = 1
    pdf_tol: float = 1e-8
    p_points: int = 40
    spatial: SpatialSpec | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be at least 1")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ConfigError("snr_grid must be strictly increasing")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ConfigError(f"unknown detectors {sorted(unknown)}")
        try:
            require_detection_alpha(self.alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config: {exc.message}") from None
        data = dict(data)
        if "delta" in data:
            if "alpha" in data:
                raise ConfigError("give alpha or delta, not both")
            data["alpha"] = 2.0 / data.pop("delta")
        if "alpha" not in data:
            raise ConfigError("config needs alpha or delta")
        if isinstance(data.get("L"), int):
            data["L"] = [data["L"]]
        for key in ("L", "snr_grid", "detectors"):
            if key in data:
                data[key] = tuple(data[key])
        if data.get("estimation") is not None:
            data["estimation"] = EstimationSpec(**data["estimation"])
        if data.get("spatial") is not None:
            sp = dict(data["spatial"])
            for key in ("deltas", "t_grid"):
                if key in sp:
                    sp[key] = tuple(sp[key])
            data["spatial"] = SpatialSpec(**sp)
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path, **overrides) -> ExperimentConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = yaml.safe_load(text) if Path(path).suffix in (".yaml", ".yml") else json.loads(text)
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class BerRow:
    snr_db: float
    detector: str
    L: int
    empirical_pe: float
    theoretical_pe: float
    n_trials: int
    wilson_halfwidth: float
    info: dict = field(default_factory=dict)

    def values(self):
        return (self.snr_db, self.detector, self.L, self.empirical_pe, self.theoretical_pe,
                self.n_trials, self.wilson_halfwidth)


@dataclass
class BerCurve:
    rows: list

    def select(self, detector: str, L: int) -> list:
        return sorted((r for r in self.rows if r.detector == detector and r.L == L),
                      key=lambda r: r.snr_db)

    def crossing(self, detector: str, L: int, target: float = 1e-3,
                 column: str = "empirical_pe") -> float:
        """SNR (dB) where the curve first falls through ``target``, log-linear interpolation.

        A zero empirical Pe is replaced by half an error over the trial count
        so the logarithm stays finite. Returns nan when the curve never crosses.
        """
        rows = self.select(detector, L)
        pts = []
        for r in rows:
            pe = getattr(r, column)
            if column == "empirical_pe" and pe == 0:
                pe = 0.5 / r.n_trials
            pts.append((r.snr_db, pe))
        for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
            if p0 >= target > p1 and p1 > 0:
                f = (math.log10(p0) - math.log10(target)) / (math.log10(p0) - math.log10(p1))
                return s0 + f * (s1 - s0)
        return math.nan

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow([_fmt(v) for v in r.values()])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def wilson_halfwidth(errors: int, n: int, z: float = WILSON_Z) -> float:
    """Half-width of the 95% Wilson score interval for errors / n."""
    if n <= 0:
        return math.nan
    p = errors / n
    return z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))


def chunk_rng(seed: int, point: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(point, chunk))))


def _chunks(n: int, size: int):
    return [(c, min(size, n - start)) for c, start in enumerate(range(0, n, size))]


def build_model(cfg: ExperimentConfig, snr_db: float) -> HypothesisModel:
    """sigma_W = 1 and sigma_S^alpha from the SNR, thinned by the local error rate if set."""
    power = 10 ** (snr_db / 10)
    if cfg.local_error is not None:
        power *= cfg.local_error if cfg.thinning == "printed" else 1 - cfg.local_error
    return HypothesisModel.from_scale_powers(cfg.alpha, power, 1.0)


def _draw_observations(rng, alpha, signal_sigma, n, L, prior_H1=0.5):
    labels = rng.random(n) < prior_H1
    noise = sample(StableParams(alpha, 1.0, 0.0), rng, (n, L))
    sig = sample(StableParams(alpha, signal_sigma, 1.0), rng, (n, L))
    return labels, noise + labels[:, None] * sig


class _Bank:
    """Detector set configured for one hypothesis pair and L."""

    def __init__(self, names, model, L, pdf_tol, mixed_grid=None, polish=True, table_step=0.01):
        self.names = list(names)
        self.model = model
        self.pdf_tol = pdf_tol
        self.table_step = table_step
        self.summaries, self.info, self.failed = {}, {}, {}
        self.powers, self.signed = [], []
        for name in self.names:
            try:
                self._setup(name, L, mixed_grid, polish)
            except (ValueError, NumericalError) as exc:
                self.failed[name] = exc

    def _col(self, p, signed):
        self.powers.append(p)
        self.signed.append(signed)
        return len(self.powers) - 1

    def _setup(self, name, L, mixed_grid, polish):
        m = self.model
        if name == "ML":
            # build the density tables now so a quadrature failure is recorded, not raised mid-run
            for law in (m.h0, m.h1):
                density_table(law.alpha, law.beta, self.pdf_tol, self.table_step)
            self.info[name] = {}
            return
        if name == "LOG":
            s = detectors.summarize(StatKind.log(), m, L)
            self.summaries[name] = (s, None)
            self.info[name] = {"theoretical": detectors.theoretical_pe_1d(s)}
        elif name in ("FLOM", "SIGNED"):
            p = detectors.optimize_p(name, m, L)
            kind = StatKind.flom(p) if name == "FLOM" else StatKind.signed(p)
            s = detectors.summarize(kind, m, L)
            self.summaries[name] = (s, self._col(p, name == "SIGNED"))
            self.info[name] = {"p": p, "theoretical": detectors.theoretical_pe_1d(s)}
        else:
            indep = name == "MIXED-INDEP"
            p1, p2 = detectors.optimize_p(name, m, L, n_grid=mixed_grid, polish=polish)
            s = detectors.summarize_mixed(m, p1, p2, L, indep)
            cols = (self._col(p1, False), self._col(p2, True))
            self.summaries[name] = (s, cols)
            self.info[name] = {"p": [p1, p2], "theoretical": detectors.theoretical_pe_mixed(s),
                               "auto_independence": s.auto_independence,
                               "condition": s.condition}

    def errors(self, y, labels) -> dict:
        out = {}
        means = None
        if self.powers or "LOG" in self.summaries:
            means = kernels.row_power_means(y, self.powers, self.signed)
        for name in self.names:
            if name in self.failed:
                continue
            if name == "ML":
                stat = detectors.ml_statistics(y, self.model, self.pdf_tol, self.table_step)
                h1 = stat > 0
            elif name in ("MIXED", "MIXED-INDEP"):
                s, (c1, c2) = self.summaries[name]
                h1 = detectors.decide_h1(*detectors.lrt_2d_statistic(means[:, c1], means[:, c2], s))
            else:
                s, col = self.summaries[name]
                z = means[:, -1] if col is None else means[:, col]
                h1 = detectors.decide_h1(*detectors.lrt_1d_statistic(z, s))
            out[name] = int(np.count_nonzero(h1 != labels))
        return out


def _run_parallel(fn, jobs, threads):
    if threads <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def _sum_counts(results):
    total = {}
    for res in results:
        for k, v in res.items():
            total[k] = total.get(k, 0) + v
    return total


def run_ber_sweep(cfg: ExperimentConfig, threads: int | None = None) -> BerCurve:
    """Empirical and theoretical error rates over (L, SNR, detector)."""
    threads = threads or cfg.threads
    rows = []
    for li, L in enumerate(cfg.L):
        for si, snr in enumerate(cfg.snr_grid):
            point = li * len(cfg.snr_grid) + si
            model = build_model(cfg, snr)
            bank = _Bank(cfg.detectors, model, L, cfg.pdf_tol)
            sig_sigma = model.signal_power ** (1 / cfg.alpha)

            def job(chunk, n, point=point, bank=bank, sig_sigma=sig_sigma, L=L, model=model):
                rng = chunk_rng(cfg.seed, point, chunk)
                labels, y = _draw_observations(rng, cfg.alpha, sig_sigma, n, L, model.prior_H1)
                return bank.errors(y, labels)

            counts = _sum_counts(_run_parallel(job, _chunks(cfg.n_trials, cfg.chunk_size), threads))
            rows.extend(_rows_for_point(cfg, snr, L, bank, counts, cfg.n_trials))
    return BerCurve(rows)


def _rows_for_point(cfg, snr, L, bank, counts, n, theory=None):
    rows = []
    for name in cfg.detectors:
        info = dict(bank.info.get(name, {}))
        theo = theory.get(name, math.nan) if theory is not None else info.pop("theoretical", math.nan)
        info.pop("theoretical", None)
        if name in bank.failed:
            exc = bank.failed[name]
            info["error"] = f"{type(exc).__name__}: {exc}"
            info["numerical_failure"] = isinstance(exc, NumericalError)
            rows.append(BerRow(float(snr), name, L, math.nan, math.nan, 0, math.nan, info))
            continue
        err = counts.get(name, 0)
        pe = err / n if n else math.nan
        if n and pe < UNDER_RESOLVED_PE:
            info["under_resolved"] = True
        if n and not math.isnan(theo) and 0 < theo < 10 / n:
            log.warning("%s L=%d snr=%g: theoretical Pe %.2g needs more than %d trials",
                        name, L, snr, theo, n)
        rows.append(BerRow(float(snr), name, L, pe, float(theo), n, wilson_halfwidth(err, n), info))
    return rows


def run_estimated_param_sweep(cfg: ExperimentConfig, threads: int | None = None) -> BerCurve:
    """Error rates when every detector uses parameters estimated from N_e fresh samples.

    Each block of ``refresh_period`` trials draws N_e samples under H0 and
    N_e under H1, estimates (alpha, sigma, beta) for each freely, and runs
    the detectors with those estimates. Blocks whose estimation or detector
    setup fails are skipped and counted in the row info.
    """
    if cfg.estimation is None:
        raise ConfigError("estimated-sweep needs an 'estimation' section")
    est = cfg.estimation
    threads = threads or cfg.threads
    rows = []
    for li, L in enumerate(cfg.L):
        for si, snr in enumerate(cfg.snr_grid):
            point = li * len(cfg.snr_grid) + si
            model = build_model(cfg, snr)
            sig_sigma = model.signal_power ** (1 / cfg.alpha)
            truth = _Bank(cfg.detectors, model, L, cfg.pdf_tol, mixed_grid=est.mixed_grid,
                          polish=False)
            theory = {k: v.get("theoretical", math.nan) for k, v in truth.info.items()}

            def job(chunk, n, point=point, L=L, sig_sigma=sig_sigma):
                rng = chunk_rng(cfg.seed, point, chunk)
                h0 = sample(StableParams(cfg.alpha, 1.0, 0.0), rng, est.n_e)
                h1 = (sample(StableParams(cfg.alpha, 1.0, 0.0), rng, est.n_e)
                      + sample(StableParams(cfg.alpha, sig_sigma, 1.0), rng, est.n_e))
                labels, y = _draw_observations(rng, cfg.alpha, sig_sigma, n, L)
                try:
                    pair = HypothesisPair(estimate_params(h0).params, estimate_params(h1).params)
                except (ValueError, NumericalError):
                    return {"_failed_blocks": 1, "_skipped": n}
                bank = _Bank(cfg.detectors, pair, L, cfg.pdf_tol, mixed_grid=est.mixed_grid,
                             polish=False, table_step=est.table_step)
                out = bank.errors(y, labels)
                out.update({f"_n_{k}": n for k in out})
                for k in bank.failed:
                    out[f"_failed_{k}"] = 1
                return out

            counts = _sum_counts(_run_parallel(job, _chunks(cfg.n_trials, est.refresh_period),
                                               threads))
            for name in cfg.detectors:
                n = counts.get(f"_n_{name}", 0)
                err = counts.get(name, 0)
                info = {"failed_blocks": counts.get("_failed_blocks", 0)
                        + counts.get(f"_failed_{name}", 0)}
                pe = err / n if n else math.nan
                rows.append(BerRow(float(snr), name, L, pe, float(theory.get(name, math.nan)), n,
                                   wilson_halfwidth(err, n), info))
    return BerCurve(rows)


def run_p_sensitivity(cfg: ExperimentConfig) -> list:
    """Theoretical Pe on a p-grid for FLOM and SIGNED; LOG repeated as its constant."""
    rows = []
    for L in cfg.L:
        for snr in cfg.snr_grid:
            model = build_model(cfg, snr)
            log_pe = detectors.theoretical_pe_1d(detectors.summarize(StatKind.log(), model, L))
            for p in detectors.p_grid(cfg.alpha, cfg.p_points):
                p = float(p)
                fl = detectors.theoretical_pe_1d(detectors.summarize(StatKind.flom(p), model, L))
                sg = detectors.theoretical_pe_1d(detectors.summarize(StatKind.signed(p), model, L))
                rows.append({"L": L, "snr_db": float(snr), "p": p, "FLOM": fl, "SIGNED": sg,
                             "LOG": log_pe})
    return rows


def _spatial_config(sp: SpatialSpec, delta: float) -> NetworkConfig:
    """Network whose signal and interference both have unit scale unless densities are given."""
    a = 2.0 / delta
    fading = FadingSpec(sp.fading)
    emission = EmissionSpec(sp.emission)
    unit = (math.pi / 2) / c_alpha(a)
    lam_d = sp.lambda_D or 1.0 / (unit * fading.abs_moment(2 * a))
    lam_i = sp.lambda_I or 1.0 / (unit * fading.abs_moment(a) ** 2 * emission.abs_moment(a))
    return NetworkConfig(lam_d, lam_i, delta, fading, w_emission=emission)


def run_cf_validation(cfg: ExperimentConfig, threads: int | None = None) -> dict:
    """Compare empirical CFs of spatial aggregates with the stable-law predictions."""
    sp = cfg.spatial or SpatialSpec()
    threads = threads or cfg.threads
    t = np.asarray(sp.t_grid, dtype=float)
    bound = 4 / math.sqrt(sp.n_draws)
    report = {"bound": bound, "n_draws": sp.n_draws, "cases": []}
    jobs = []
    for di, delta in enumerate(sp.deltas):
        net = _spatial_config(sp, delta)
        for wi, which in enumerate(("interference", "signal")):
            jobs.append((di, wi, delta, net, which))

    def run(di, wi, delta, net, which):
        rng = chunk_rng(cfg.seed, di, wi)
        draws = simulate_aggregate(net, which, None, rng, sp.n_draws, max_bias=sp.max_bias)
        law = signal_params(net) if which == "signal" else interference_params(net)
        emp = empirical_cf(draws, t)
        theo = char_fn(law, t)
        err = np.abs(emp - theo)
        comp = np.maximum(np.abs(emp.real - theo.real), np.abs(emp.imag - theo.imag))
        return {"delta": delta, "alpha": law.alpha, "which": which, "sigma": law.sigma,
                "beta": law.beta, "max_abs_error": float(err.max()),
                "max_component_error": float(comp.max()),
                "passed": bool(comp.max() <= bound),
                "t": t.tolist(), "empirical": [[z.real, z.imag] for z in emp],
                "theoretical": [[z.real, z.imag] for z in theo]}

    report["cases"] = _run_parallel(run, jobs, threads)
    report["passed"] = all(c["passed"] for c in report["cases"])
    return report


def manifest(cfg: ExperimentConfig, command: str, wall_time: float, extra=None) -> dict:
    out = {
        "command": command,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {"stabledetect": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version(),
                     "kernel_backend": kernels.BACKEND},
        "wall_time_s": wall_time,
    }
    if extra:
        out.update(extra)
    return out


def write_outputs(out_path, command, cfg, result, wall_time) -> tuple[Path, Path]:
    """CSV table plus ``<stem>.manifest.json`` next to it."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    extra = {}
    if isinstance(result, BerCurve):
        result.to_csv(out)
        extra["rows"] = [{"snr_db": r.snr_db, "detector": r.detector, "L": r.L, **r.info}
                         for r in result.rows if r.info]
    elif command == "cf-validate":
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("delta", "which", "t", "empirical_re", "empirical_im", "theoretical_re",
                        "theoretical_im"))
            for case in result["cases"]:
                for tv, e, th in zip(case["t"], case["empirical"], case["theoretical"]):
                    w.writerow([_fmt(float(case["delta"])), case["which"], _fmt(tv),
                                *(_fmt(float(v)) for v in (*e, *th))])
        extra["summary"] = {k: v for k, v in result.items() if k != "cases"}
        extra["cases"] = [{k: v for k, v in c.items() if k not in ("t", "empirical", "theoretical")}
                          for c in result["cases"]]
    else:
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("L", "snr_db", "p", "FLOM", "SIGNED", "LOG"))
            for r in result:
                w.writerow([_fmt(r[k]) for k in ("L", "snr_db", "p", "FLOM", "SIGNED", "LOG")])
    man = out.with_name(out.stem + ".manifest.json")
    man.write_text(json.dumps(manifest(cfg, command, wall_time, extra), indent=2, sort_keys=True,
                              default=_json_default) + "\n")
    return out, man


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    res = fn(*args, **kwargs)
    return res, time.perf_counter() - start
