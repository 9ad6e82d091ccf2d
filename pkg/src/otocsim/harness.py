"""Experiment orchestration: configuration, grid sweeps, output files and self-checks."""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import platform
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dynamics import TrotterConfig, XXZParams, build_xxz, trotter_slope
from .oracle import OTOCSpec, correlator_f, frobenius_form, oracle_row, otoc_c, random_spec, size_identity_check
from .protocols import (
    EstimateRecord,
    ISMConfig,
    RTMConfig,
    WMMConfig,
    ism_estimate,
    ism_extrapolated,
    modified_eigenvalue,
    povm_residuals,
    rtm_estimate,
    rtm_exact,
    wmm_estimate,
    wmm_exact,
)
from .qcore import X, Y, Z, embed_local
from .thermal import GibbsSpec, OptimizerConfig, TFDAnsatz, vqa_optimize

log = logging.getLogger(__name__)

PROTOCOLS = ("RTM", "WMM", "ISM")
CSV_COLUMNS = (
    "protocol", "delta", "beta", "tau", "mean_C", "std_C", "oracle_C",
    "shots", "reps", "seed", "gibbs_mode", "evolution_mode", "extra",
)
NUMERIC_COLUMNS = ("delta", "beta", "tau", "mean_C", "std_C", "oracle_C")
INT_COLUMNS = ("shots", "reps", "seed")


@dataclass
class ExperimentConfig:
    n: int = 4
    deltas: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    beta: float = 1.0
    t_max: float = 2.1
    n_points: int = 15
    shots: int = 1000
    reps: int = 10
    protocols: list[str] = field(default_factory=lambda: list(PROTOCOLS))
    theta: float = 0.4
    theta_sweep: list[float] = field(default_factory=list)
    ism_estimator: str = "finite-theta"
    phis: list[float] = field(default_factory=lambda: [math.pi / 2] * 4)
    gibbs_mode: str = "exact"
    evolution_mode: str = "trotter"
    trotter_order: int = 2
    trotter_steps: float = 4.0
    master_seed: int = 2025
    output_path: str = "otoc_sweep"
    workers: int = 1
    vqa_layers_a: int = 2
    vqa_layers_s: int = 3
    vqa_max_evals: int = 20000

    def __post_init__(self):
        self.deltas = [float(d) for d in self.deltas]
        self.protocols = [p.upper() for p in self.protocols]
        if not self.deltas:
            raise ValueError("deltas must be nonempty")
        if not self.t_max > 0 or self.n_points < 2:
            raise ValueError("time grid needs t_max > 0 and n_points >= 2")
        if self.shots < 1 or self.reps < 1:
            raise ValueError("shots and reps must be >= 1")
        if any(p not in PROTOCOLS for p in self.protocols):
            raise ValueError(f"protocols must be drawn from {PROTOCOLS}")
        if self.gibbs_mode not in ("exact", "vqa"):
            raise ValueError("gibbs_mode must be 'exact' or 'vqa'")
        if self.evolution_mode not in ("exact-gate", "trotter"):
            raise ValueError("evolution_mode must be 'exact-gate' or 'trotter'")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        self.trotter  # raises on an invalid order or step count

    @property
    def trotter(self) -> TrotterConfig | None:
        if self.evolution_mode == "exact-gate":
            return None
        return TrotterConfig(self.trotter_order, self.trotter_steps)

    def evolution_label(self) -> str:
        return "exact-gate" if self.trotter is None else self.trotter.describe()

    def time_grid(self) -> list[float]:
        return [self.t_max * k / (self.n_points - 1) for k in range(self.n_points)]

    def field_strength(self, delta: float) -> float:
        return (1.0 - delta) / 2.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def paper_default_config() -> ExperimentConfig:
    return ExperimentConfig()


# ---------------------------------------------------------------------------
# config files: flat "key = value" lines, '#' comments, lists comma-separated

_LIST_FLOAT = {"deltas", "theta_sweep", "phis"}
_LIST_STR = {"protocols"}


def _coerce(name: str, raw: str, default):
    raw = raw.strip()
    if name in _LIST_FLOAT:
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if name in _LIST_STR:
        return [v.strip() for v in raw.split(",") if v.strip()]
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string("[config]\n" + text)
    current = (base or ExperimentConfig()).to_dict()
    defaults = ExperimentConfig().to_dict()
    for key, raw in parser["config"].items():
        key = key.strip().replace("-", "_")
        if key not in defaults:
            raise ValueError(f"unknown config key {key!r}")
        current[key] = _coerce(key, raw, defaults[key])
    return ExperimentConfig.from_dict(current)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base)


def dump_config_text(cfg: ExperimentConfig) -> str:
    lines = []
    for key, val in cfg.to_dict().items():
        if isinstance(val, list):
            val = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweep


@dataclass
class ResultTable:
    rows: list[dict]
    config: dict
    version: str = __version__
    wallclock: dict = field(default_factory=dict)


def cell_seed(master_seed: int, protocol: str, delta_index: int, tau_index: int) -> int:
    """Stable per-cell seed; repetitions derive their streams from it."""
    ss = np.random.SeedSequence([int(master_seed), zlib.crc32(protocol.encode()), delta_index, tau_index])
    return int(ss.generate_state(1, np.uint32)[0])


def _spec(cfg: ExperimentConfig, delta: float, tau: float) -> OTOCSpec:
    H = build_xxz(XXZParams(cfg.n, delta, cfg.field_strength(delta)))
    op = embed_local(X, [0], cfg.n)
    return OTOCSpec(H, cfg.beta, op, op, tau)


def _extra(meta: dict) -> str:
    parts = []
    for k in sorted(meta):
        v = meta[k]
        if isinstance(v, float):
            v = format_number(v)
        parts.append(f"{k}={v}")
    return ";".join(parts)


def run_cell(cfg: ExperimentConfig, protocol: str, delta_index: int, tau_index: int,
             input_state=None) -> EstimateRecord:
    delta = cfg.deltas[delta_index]
    tau = cfg.time_grid()[tau_index]
    spec = _spec(cfg, delta, tau)
    seed = cell_seed(cfg.master_seed, protocol, delta_index, tau_index)
    common = dict(shots=cfg.shots, reps=cfg.reps, seed=seed, trotter=cfg.trotter, input_state=input_state)
    if protocol == "RTM":
        return rtm_estimate(RTMConfig(spec, **common))
    if protocol == "WMM":
        return wmm_estimate(WMMConfig(spec, phis=tuple(cfg.phis), **common))
    sweep = cfg.theta_sweep if len(cfg.theta_sweep) >= 2 else None
    return ism_estimate(ISMConfig(spec, theta=cfg.theta, theta_sweep=sweep,
                                  estimator=cfg.ism_estimator, **common))


def _cell_task(args):
    cfg_dict, protocol, di, ti, input_state = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    try:
        return run_cell(cfg, protocol, di, ti, input_state), None
    except Exception as exc:  # recorded as an error row; the sweep continues
        log.warning("cell %s/%d/%d failed: %s", protocol, di, ti, exc)
        return None, f"{type(exc).__name__}:{exc}"


def prepare_inputs(cfg: ExperimentConfig) -> tuple[dict, dict]:
    """Thermal inputs per delta index (None means exact Gibbs) and diagnostics."""
    inputs, info = {}, {}
    for di, delta in enumerate(cfg.deltas):
        if cfg.gibbs_mode == "exact":
            inputs[di] = None
            continue
        H = build_xxz(XXZParams(cfg.n, delta, cfg.field_strength(delta)))
        res = vqa_optimize(GibbsSpec(H, cfg.beta), TFDAnsatz(cfg.n, cfg.vqa_layers_a, cfg.vqa_layers_s),
                           OptimizerConfig(max_evals=cfg.vqa_max_evals, seed=cfg.master_seed + di))
        inputs[di] = res.prepared_state()
        info[di] = {"vqa_fidelity": res.fidelity_to_exact, "vqa_free_energy": res.free_energy}
    return inputs, info


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable:
    """Every (protocol, delta, tau) cell, joined with the exact value."""
    started = time.time()
    workers = cfg.workers if workers is None else workers
    grid = cfg.time_grid()
    inputs, vqa_info = prepare_inputs(cfg)
    oracle = {}
    for di, delta in enumerate(cfg.deltas):
        for ti, tau in enumerate(grid):
            oracle[di, ti] = otoc_c(_spec(cfg, delta, tau))

    cfg_dict = cfg.to_dict()
    tasks = [(cfg_dict, p, di, ti, inputs[di])
             for p in cfg.protocols for di in range(len(cfg.deltas)) for ti in range(len(grid))]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_task, tasks, chunksize=4))
    else:
        results = [_cell_task(t) for t in tasks]

    rows = []
    for (_, protocol, di, ti, _), (rec, err) in zip(tasks, results):
        row = {
            "protocol": protocol,
            "delta": cfg.deltas[di],
            "beta": cfg.beta,
            "tau": grid[ti],
            "oracle_C": oracle[di, ti],
            "shots": cfg.shots,
            "reps": cfg.reps,
            "seed": cell_seed(cfg.master_seed, protocol, di, ti),
            "gibbs_mode": cfg.gibbs_mode,
            "evolution_mode": cfg.evolution_label(),
        }
        meta = dict(vqa_info.get(di, {}))
        if err is None:
            row["mean_C"], row["std_C"] = rec.mean_C, rec.std_C
            meta.update({k: v for k, v in rec.metadata.items() if k != "evolution"})
        else:
            row["mean_C"] = row["std_C"] = math.nan
            meta["error"] = err
        row["extra"] = _extra(meta)
        rows.append(row)
    finished = time.time()
    wallclock = {"started": started, "finished": finished, "seconds": finished - started}
    return ResultTable(rows, cfg_dict, __version__, wallclock)


# ---------------------------------------------------------------------------
# output


def format_number(value) -> str:
    """Locale-free text for CSV cells: 12 significant digits, no negative zero."""
    if isinstance(value, (bool, np.bool_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value) + 0.0, ".12g")
    return str(value)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.rows:
        writer.writerow([format_number(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    for rec in reader:
        row = dict(rec)
        for c in NUMERIC_COLUMNS:
            row[c] = float(row[c])
        for c in INT_COLUMNS:
            row[c] = int(row[c])
        rows.append(row)
    return rows


def table_to_json(table: ResultTable) -> str:
    doc = {
        "config": table.config,
        "rows": [{c: (None if isinstance(r[c], float) and math.isnan(r[c]) else r[c]) for c in CSV_COLUMNS}
                 for r in table.rows],
        "versions": {"otocsim": table.version, "numpy": np.__version__, "python": platform.python_version()},
        "wallclock": table.wallclock,
    }
    return json.dumps(doc, indent=2, default=float)


def write_outputs(table: ResultTable, path: str | Path, formats: Sequence[str] = ("csv", "json")) -> list[Path]:
    """Write ``<path>.csv`` and/or ``<path>.json``; returns the files written."""
    if not table.rows:
        raise ValueError("refusing to write an empty table")
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            target = base.with_suffix(".csv")
            target.write_text(table_to_csv(table), encoding="utf-8")
        elif fmt == "json":
            target = base.with_suffix(".json")
            target.write_text(table_to_json(table), encoding="utf-8")
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        written.append(target)
    return written


def oracle_table(cfg: ExperimentConfig) -> list[dict]:
    return [oracle_row(delta, cfg.beta, _spec(cfg, delta, tau))
            for delta in cfg.deltas for tau in cfg.time_grid()]


# ---------------------------------------------------------------------------
# self-checks


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.residual = float(self.residual)
        self.passed = bool(np.isfinite(self.residual) and self.residual < self.tolerance)


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name}: residual={c.residual:.3e} tol={c.tolerance:.0e}"
                for c in self.checks]

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "checks": [asdict(c) for c in self.checks]}, indent=2)


def _max(values) -> float:
    return float(max(values)) if values else 0.0


def identity_residuals(n_specs: int, seed: int = 0) -> tuple[float, float]:
    """Worst ``|C - 2(1 - Re F)|`` and ``|C - Frobenius form|`` over random specs."""
    rng = np.random.default_rng(seed)
    via_f, via_frob = [], []
    for k in range(n_specs):
        spec = random_spec(rng, int(rng.choice([2, 3])), float((0.0, 1.0, 3.0)[k % 3]))
        c = otoc_c(spec)
        via_f.append(abs(c - 2 * (1 - correlator_f(spec).real)))
        via_frob.append(abs(c - frobenius_form(spec)))
    return _max(via_f), _max(via_frob)


def povm_worst(phis=(math.pi / 8, math.pi / 4, math.pi / 2), alpha=modified_eigenvalue, seed: int = 0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for phi in phis:
        for A in (X, Y, Z):
            for name, r in povm_residuals(A, phi, rng, alpha).items():
                worst[name] = max(worst.get(name, 0.0), r)
    return worst


def agreement_residuals(n: int = 2, beta: float = 1.0, delta: float = 0.5,
                        taus=(0.3, 0.7, 1.4), thetas=(0.2, 0.1, 0.05)) -> dict[str, float]:
    """Exact-expectation protocol outputs against the oracle, exact gates and Gibbs input."""
    H = build_xxz(XXZParams.tied_field(n, delta))
    op = embed_local(X, [0], n)
    out = {"RTM": 0.0, "WMM": 0.0, "ISM": 0.0}
    for tau in taus:
        spec = OTOCSpec(H, beta, op, op, tau)
        c = otoc_c(spec)
        out["RTM"] = max(out["RTM"], abs(2 * (1 - rtm_exact(RTMConfig(spec)).real) - c))
        out["WMM"] = max(out["WMM"], abs(wmm_exact(WMMConfig(spec)) - c))
        ext, _ = ism_extrapolated(ISMConfig(spec), thetas)
        out["ISM"] = max(out["ISM"], abs(ext - c))
    return out


def validate(n: int = 2, n_specs: int = 20, alpha=modified_eigenvalue, seed: int = 0) -> ValidationReport:
    """Identity, measurement-algebra, protocol-agreement and product-formula checks.

    ``alpha`` replaces the modified eigenvalues in the measurement-algebra
    block; passing a wrong normalization must make that block fail.
    """
    checks = []
    r_f, r_frob = identity_residuals(n_specs, seed)
    checks.append(Check("identity_C_vs_ReF", r_f, 1e-10))
    checks.append(Check("identity_C_vs_frobenius", r_frob, 1e-10))
    for name, r in povm_worst(alpha=alpha, seed=seed).items():
        checks.append(Check(f"povm_{name}", r, 1e-12))
    H3 = build_xxz(XXZParams.tied_field(3, 0.5))
    size = [abs(np.subtract(*size_identity_check(embed_local(X, [0], 3), H3, tau, site)))
            for tau in (0.0, 0.5, 1.0) for site in range(3)]
    checks.append(Check("operator_size_identity", _max(size), 1e-10))
    for name, r in agreement_residuals(n).items():
        checks.append(Check(f"agreement_{name}", r, 1e-6 if name == "ISM" else 1e-8))
    # two-site chains have a single bond, where the product formula is exact
    H = build_xxz(XXZParams.tied_field(4, 0.5))
    for order in (1, 2):
        slope, _ = trotter_slope(H, 2.1, order, (10, 20, 50, 100))
        checks.append(Check(f"trotter_order{order}_slope", abs(slope - order), 0.3))
    return ValidationReport(checks)
