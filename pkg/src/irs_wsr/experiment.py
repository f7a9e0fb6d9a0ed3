"""Seeded Monte Carlo sweeps over N, M or the quantization order."""
from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .channel import ScenarioGeometry, sample_scenario
from .dmao import METHODS, DmaoOptions, quantize_phases
from .exceptions import ConfigError, SingularChannelError
from .objective import weighted_sum_rate
from .rcg import SolverOptions
from .system import SystemConfig, dbm_to_watts

SWEEPS = ("N", "M", "Q")
METHOD_ORDER = ("dmao", "random", "mrt", "zf")
DEFAULT_VALUES = {"N": [8, 12, 16, 20, 24], "M": [8, 12, 16, 20, 24], "Q": [2, 4, 8, 16, 32]}


@dataclass
class ExperimentConfig:
    system: SystemConfig
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    options: DmaoOptions = field(default_factory=DmaoOptions)
    sweep: str = "N"
    values: list = field(default_factory=lambda: list(DEFAULT_VALUES["N"]))
    trials: int = 50
    seed: int = 0
    methods: list = field(default_factory=lambda: list(METHOD_ORDER))
    out: str = "results.csv"
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        validate(self)

    def system_for(self, value) -> SystemConfig:
        if self.sweep == "N":
            return replace(self.system, n_antennas=value)
        if self.sweep == "M":
            return replace(self.system, n_elements=value)
        return self.system


@dataclass
class ResultRow:
    method: str
    axis_value: int
    trial: int
    seed: int
    sum_rate: Optional[float]
    outer_iterations: int
    elapsed_s: Optional[float]
    status: str


@dataclass
class SummaryRow:
    method: str
    axis_value: int
    mean: Optional[float]
    stderr: Optional[float]
    trials: int
    status: str


def validate(cfg: ExperimentConfig) -> None:
    if cfg.sweep not in SWEEPS:
        raise ConfigError("experiment.sweep", f"must be one of {SWEEPS}, got {cfg.sweep!r}")
    if not cfg.values:
        raise ConfigError("experiment.values", "at least one axis value is required")
    for i, v in enumerate(cfg.values):
        if not isinstance(v, (int, np.integer)) or v <= 0:
            raise ConfigError(f"experiment.values[{i}]", f"must be a positive integer, got {v!r}")
        if cfg.sweep == "Q" and v < 2:
            raise ConfigError(f"experiment.values[{i}]", "quantization order must be at least 2")
    if cfg.trials < 1:
        raise ConfigError("experiment.trials", "must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("experiment.seed", "must be nonnegative")
    if cfg.workers < 1:
        raise ConfigError("experiment.workers", "must be at least 1")
    if not cfg.methods:
        raise ConfigError("experiment.methods", "at least one method is required")
    for m in cfg.methods:
        if m not in METHODS:
            raise ConfigError("experiment.methods", f"unknown method {m!r}")
    sizes = {"N": cfg.system.n_antennas, "M": cfg.system.n_elements}
    rows = {"N": cfg.system.bs_rows, "M": cfg.system.irs_rows}
    key = {"N": "system.antennas", "M": "system.elements"}
    for axis in ("N", "M"):
        candidates = cfg.values if cfg.sweep == axis else [sizes[axis]]
        for v in candidates:
            if v % rows[axis]:
                raise ConfigError(
                    "experiment.values" if cfg.sweep == axis else key[axis],
                    f"{v} is not divisible by the {rows[axis]} array rows",
                )
    if cfg.geometry.n_irs != cfg.system.n_irs:
        raise ConfigError("geometry.irs", f"{cfg.geometry.n_irs} positions for {cfg.system.n_irs} surfaces")


# ---------------------------------------------------------------- seeding

def trial_seed(master_seed: int, trial: int) -> int:
    """32-bit seed of one trial, derived from the master seed and trial index."""
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1)[0])


def trial_streams(seed: int) -> dict:
    """Independent generators for the channel draw and for each method's start point."""
    children = np.random.SeedSequence(seed).spawn(1 + len(METHOD_ORDER))
    streams = {"channel": np.random.default_rng(children[0])}
    for name, child in zip(METHOD_ORDER, children[1:]):
        streams[name] = np.random.default_rng(child)
    return streams


# ---------------------------------------------------------------- execution

def _solve(method, channels, system, opts, rng):
    t0 = time.perf_counter()
    try:
        result = METHODS[method](channels, system, opts, rng)
    except SingularChannelError:
        return None, time.perf_counter() - t0
    return result, time.perf_counter() - t0


def _row(cfg, method, value, trial, seed, rate, iters, elapsed, status="ok"):
    return ResultRow(
        method=method,
        axis_value=int(value),
        trial=trial,
        seed=seed,
        sum_rate=rate,
        outer_iterations=iters,
        elapsed_s=elapsed if cfg.timing else None,
        status=status,
    )


def _run_size_trial(cfg: ExperimentConfig, value: int, trial: int) -> list:
    seed = trial_seed(cfg.seed, trial)
    streams = trial_streams(seed)
    system = cfg.system_for(value)
    channels = sample_scenario(cfg.geometry, system, streams["channel"])
    opts = replace(cfg.options, quantization=system.quantization)
    rows = []
    for method in cfg.methods:
        result, elapsed = _solve(method, channels, system, opts, streams[method])
        if result is None:
            rows.append(_row(cfg, method, value, trial, seed, None, 0, elapsed, "skipped_singular"))
        else:
            rows.append(_row(cfg, method, value, trial, seed, result.objective, result.outer_iterations, elapsed))
    return rows


def _run_quantization_trial(cfg: ExperimentConfig, trial: int) -> list:
    # one continuous solve per method, then each Q is applied to its phases
    seed = trial_seed(cfg.seed, trial)
    streams = trial_streams(seed)
    system = cfg.system
    channels = sample_scenario(cfg.geometry, system, streams["channel"])
    rows = []
    for method in cfg.methods:
        if cfg.options.reoptimize_after_quantization:
            rows.extend(_requantized_rows(cfg, method, channels, trial, seed))
            continue
        result, elapsed = _solve(method, channels, system, replace(cfg.options, quantization=None), streams[method])
        for Q in cfg.values:
            if result is None:
                rows.append(_row(cfg, method, Q, trial, seed, None, 0, elapsed, "skipped_singular"))
                continue
            u = np.exp(-1j * quantize_phases(result.theta, Q, cfg.options.quantizer))
            rate = weighted_sum_rate(result.V, u, channels, system)
            rows.append(_row(cfg, method, Q, trial, seed, rate, result.outer_iterations, elapsed))
    return rows


def _requantized_rows(cfg, method, channels, trial, seed):
    rows = []
    for Q in cfg.values:
        # fresh streams so every Q starts from the same point
        rng = trial_streams(seed)[method]
        result, elapsed = _solve(method, channels, cfg.system, replace(cfg.options, quantization=Q), rng)
        if result is None:
            rows.append(_row(cfg, method, Q, trial, seed, None, 0, elapsed, "skipped_singular"))
        else:
            rows.append(_row(cfg, method, Q, trial, seed, result.objective, result.outer_iterations, elapsed))
    return rows


def _work_item(args):
    cfg, value, trial = args
    if cfg.sweep == "Q":
        return _run_quantization_trial(cfg, trial)
    return _run_size_trial(cfg, value, trial)


def sort_rows(rows):
    return sorted(rows, key=lambda r: (r.method, r.axis_value, r.trial))


def run_experiment(cfg: ExperimentConfig, progress=None) -> list:
    """Run every (axis value, trial) cell for every method; rows come back sorted.

    All methods inside one cell see the same channel realization. The
    realization depends only on ``(cfg.seed, trial)``, so cells along the
    sweep axis share path gains, angles and user drops.
    """
    if cfg.sweep == "Q":
        items = [(cfg, None, t) for t in range(cfg.trials)]
    else:
        items = [(cfg, v, t) for v in cfg.values for t in range(cfg.trials)]
    rows = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for chunk in pool.map(_work_item, items):
                rows.extend(chunk)
                if progress:
                    progress(len(rows))
    else:
        for item in items:
            rows.extend(_work_item(item))
            if progress:
                progress(len(rows))
    return sort_rows(rows)


# ---------------------------------------------------------------- aggregation / IO

def aggregate(rows) -> list:
    """Mean, standard error and count of ok rows per (method, axis value)."""
    cells = {}
    for r in rows:
        cells.setdefault((r.method, r.axis_value), [])
        if r.status == "ok":
            cells[(r.method, r.axis_value)].append(r.sum_rate)
    summary = []
    for (method, value), rates in sorted(cells.items()):
        n = len(rates)
        if n == 0:
            summary.append(SummaryRow(method, value, None, None, 0, "empty"))
            continue
        mean = math.fsum(rates) / n
        stderr = float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        summary.append(SummaryRow(method, value, mean, stderr, n, "ok"))
    return summary


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def emit_csv(rows, path, row_type=ResultRow) -> Path:
    """Write ``rows`` (dataclass instances of ``row_type``) with a header line."""
    path = Path(path)
    names = [f.name for f in dataclasses.fields(row_type)]
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for r in rows:
                writer.writerow([_fmt(getattr(r, n)) for n in names])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _parse(value: str, typ: str):
    # field annotations are strings under postponed evaluation
    if value == "":
        return None
    if typ == "int":
        return int(value)
    if "float" in typ:
        return float(value)
    return value


def read_csv(path, row_type=ResultRow) -> list:
    """Parse a file written by :func:`emit_csv` back into ``row_type`` instances."""
    types = {f.name: f.type for f in dataclasses.fields(row_type)}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [row_type(**{k: _parse(v, types[k]) for k, v in rec.items()}) for rec in reader]


def summary_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))


# ---------------------------------------------------------------- config files

def _get(d, key, path, default=None, required=False):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected a mapping")
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
        return default
    return d[key]


_KNOWN_KEYS = {
    "": {"system", "geometry", "solver", "experiment"},
    "system": {"antennas", "elements", "irs", "users", "power_w", "noise_dbm", "weights",
               "quantization", "paths", "bs_rows", "irs_rows"},
    "geometry": {"bs", "irs", "user_center", "user_radius", "carrier_hz", "spacing"},
    "solver": {"outer_max_iters", "outer_rel_tol", "beamformer", "reflection", "quantizer",
               "reoptimize_after_quantization"},
    "experiment": {"sweep", "values", "trials", "seed", "methods", "out", "workers", "timing"},
}


def _reject_unknown(d, path):
    if not isinstance(d, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    allowed = _KNOWN_KEYS[path] if path in _KNOWN_KEYS else {f.name for f in dataclasses.fields(SolverOptions)}
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown key")


def _num(value, path, typ=float):
    try:
        if typ is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {typ.__name__}, got {value!r}") from None


def _point(value, path):
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(path, f"expected an [x, y] pair, got {value!r}")
    return (_num(value[0], f"{path}[0]"), _num(value[1], f"{path}[1]"))


def _solver_options(d, path) -> SolverOptions:
    base = SolverOptions()
    kwargs = {}
    if d is not None:
        _reject_unknown(d, path)
    for f in dataclasses.fields(SolverOptions):
        if d is not None and f.name in d:
            kwargs[f.name] = _num(d[f.name], f"{path}.{f.name}", int if isinstance(getattr(base, f.name), int) else float)
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from the parsed YAML document.

    Every section is optional; missing keys fall back to the reference
    scenario (two surfaces, four users, 1 W, -80 dBm noise, 3 GHz).
    """
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping")
    _reject_unknown(doc, "")
    sysd = _get(doc, "system", "", {}) or {}
    geod = _get(doc, "geometry", "", {}) or {}
    sold = _get(doc, "solver", "", {}) or {}
    expd = _get(doc, "experiment", "", {}) or {}
    for section, d in (("system", sysd), ("geometry", geod), ("solver", sold), ("experiment", expd)):
        _reject_unknown(d, section)

    K = _num(_get(sysd, "users", "system", 4), "system.users", int)
    weights = _get(sysd, "weights", "system", 1.0)
    if isinstance(weights, list):
        weights = [_num(w, f"system.weights[{i}]") for i, w in enumerate(weights)]
        if len(weights) != K:
            raise ConfigError("system.weights", f"expected {K} entries, got {len(weights)}")
    else:
        weights = _num(weights, "system.weights")
    quant = _get(sysd, "quantization", "system", None)
    try:
        system = SystemConfig(
            n_antennas=_num(_get(sysd, "antennas", "system", 20), "system.antennas", int),
            n_elements=_num(_get(sysd, "elements", "system", 20), "system.elements", int),
            n_irs=_num(_get(sysd, "irs", "system", 2), "system.irs", int),
            n_users=K,
            power=_num(_get(sysd, "power_w", "system", 1.0), "system.power_w"),
            noise_power=float(dbm_to_watts(_num(_get(sysd, "noise_dbm", "system", -80.0), "system.noise_dbm"))),
            weights=weights,
            quantization=None if quant is None else _num(quant, "system.quantization", int),
            n_paths=_num(_get(sysd, "paths", "system", 3), "system.paths", int),
            bs_rows=_num(_get(sysd, "bs_rows", "system", 2), "system.bs_rows", int),
            irs_rows=_num(_get(sysd, "irs_rows", "system", 2), "system.irs_rows", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("system", str(exc)) from None

    irs = _get(geod, "irs", "geometry", [[10, 24], [24, 10]])
    if not isinstance(irs, list):
        raise ConfigError("geometry.irs", "expected a list of [x, y] pairs")
    try:
        geometry = ScenarioGeometry(
            bs_position=_point(_get(geod, "bs", "geometry", [0, 0]), "geometry.bs"),
            irs_positions=[_point(p, f"geometry.irs[{i}]") for i, p in enumerate(irs)],
            user_center=_point(_get(geod, "user_center", "geometry", [20, 0]), "geometry.user_center"),
            user_radius=_num(_get(geod, "user_radius", "geometry", 2.0), "geometry.user_radius"),
            carrier_frequency=_num(_get(geod, "carrier_hz", "geometry", 3e9), "geometry.carrier_hz"),
            spacing=_num(_get(geod, "spacing", "geometry", 0.5), "geometry.spacing"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("geometry", str(exc)) from None

    try:
        options = DmaoOptions(
            outer_max_iters=_num(_get(sold, "outer_max_iters", "solver", 100), "solver.outer_max_iters", int),
            outer_rel_tol=_num(_get(sold, "outer_rel_tol", "solver", 1e-4), "solver.outer_rel_tol"),
            beamformer=_solver_options(_get(sold, "beamformer", "solver", None), "solver.beamformer"),
            reflection=_solver_options(_get(sold, "reflection", "solver", None), "solver.reflection"),
            quantization=system.quantization,
            quantizer=str(_get(sold, "quantizer", "solver", "circular")),
            reoptimize_after_quantization=bool(_get(sold, "reoptimize_after_quantization", "solver", False)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("solver", str(exc)) from None

    sweep = str(_get(expd, "sweep", "experiment", "N"))
    values = _get(expd, "values", "experiment", None)
    if values is None:
        values = list(DEFAULT_VALUES.get(sweep, []))
    if not isinstance(values, list):
        raise ConfigError("experiment.values", "expected a list of integers")
    values = [_num(v, f"experiment.values[{i}]", int) for i, v in enumerate(values)]
    methods = _get(expd, "methods", "experiment", list(METHOD_ORDER))
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    return ExperimentConfig(
        system=system,
        geometry=geometry,
        options=options,
        sweep=sweep,
        values=values,
        trials=_num(_get(expd, "trials", "experiment", 50), "experiment.trials", int),
        seed=_num(_get(expd, "seed", "experiment", 0), "experiment.seed", int),
        methods=list(methods),
        out=str(_get(expd, "out", "experiment", "results.csv")),
        workers=_num(_get(expd, "workers", "experiment", 1), "experiment.workers", int),
        timing=bool(_get(expd, "timing", "experiment", False)),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"invalid YAML: {exc}") from None
    return config_from_dict(doc)
