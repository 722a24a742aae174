"""Plain-text run configuration, manifests, CSV time series and plot scripts."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .initial_data import CONVENTION_NOTE, continuum_threshold, smallness_threshold
from .timestepper import SolverConfig

CSV_HEADER = "t,chi_m1,chi_0,chi_1,l2,hs,grad_inf,apriori_lhs,apriori_margin,energy_residual"


class ConfigError(ValueError):
    """Malformed configuration; ``line``/``col`` are 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Experiment:
    """Grid and initial data of a run.

    ``initial`` is ``taylor_green`` or ``random``; when ``chi_target`` is set the
    data is rescaled to that chi^-1 size after construction (and after the
    optional ``truncate_R`` cut).
    """

    n: int = 32
    period: float = 2 * math.pi
    dealias_fraction: float = 2.0 / 3.0
    initial: str = "taylor_green"
    amplitude: float = 1.0
    chi_target: float | None = 0.5
    kmax: float = 4.0
    spectral_exponent: float = 1.0
    seed: int = 0
    truncate_R: float | None = None
    tol_ledger: float = 1e-6
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.initial not in ("taylor_green", "random"):
            raise ValueError(f"initial must be 'taylor_green' or 'random', got {self.initial!r}")
        if self.chi_target is not None and not self.chi_target > 0:
            raise ValueError("chi_target must be positive")
        if self.tol_ledger < 0:
            raise ValueError("tol_ledger must be nonnegative")


_SECTIONS = (SolverConfig, Experiment)


def _field_table():
    table = {}
    for cls in _SECTIONS:
        for f in fields(cls):
            table[f.name.lower()] = (cls, f)
    return table


def _coerce(text: str, f: dataclasses.Field, line: int, col: int):
    t = str(f.type)
    low = text.lower()
    try:
        if "None" in t and low == "none":
            return None
        if t.startswith("bool"):
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"expected true/false, got {text!r}")
        if t.startswith("int"):
            return int(text)
        if t.startswith("float"):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {f.name}: {exc}", line, col) from None


def parse_config(text: str) -> tuple[SolverConfig, Experiment]:
    """Parse ``key = value`` lines (``#`` starts a comment).  Keys are the field
    names of :class:`SolverConfig` and :class:`Experiment`, case-insensitive."""
    table = _field_table()
    values = {cls: {} for cls in _SECTIONS}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        eq = line.index("=")
        key, value = line[:eq], line[eq + 1 :]
        kcol = len(key) - len(key.lstrip()) + 1
        vcol = eq + 2 + len(value) - len(value.lstrip())
        key, value = key.strip(), value.strip()
        if key.lower() not in table:
            raise ConfigError(f"unknown key {key!r}", lineno, kcol)
        if key.lower() in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key.lower()]})", lineno, kcol)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno, vcol)
        seen[key.lower()] = lineno
        cls, f = table[key.lower()]
        values[cls][f.name] = _coerce(value, f, lineno, vcol)
    try:
        exp = Experiment(**values[Experiment])
        cfg = SolverConfig(**values[SolverConfig])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, exp


def _render_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: SolverConfig, exp: Experiment) -> str:
    """Inverse of :func:`parse_config`, with every default written out."""
    lines = []
    for obj in (cfg, exp):
        for f in fields(obj):
            lines.append(f"{f.name} = {_render_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> tuple[SolverConfig, Experiment]:
    p = Path(path)
    if p.suffix == ".json":
        return load_manifest(p)
    return parse_config(p.read_text())


def load_manifest(path) -> tuple[SolverConfig, Experiment]:
    data = json.loads(Path(path).read_text())
    return parse_config(data["config_text"])


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def build_manifest(cfg: SolverConfig, exp: Experiment, *, outcomes: dict | None = None, extra: dict | None = None) -> dict:
    return {
        "package": "rotns",
        "version": __version__,
        "config": _jsonable(cfg),
        "experiment": _jsonable(exp),
        "config_text": render_config(cfg, exp),
        "grid": {"n": exp.n, "period": exp.period, "dealias_fraction": exp.dealias_fraction},
        "convention": CONVENTION_NOTE,
        "threshold": {"torus": smallness_threshold(cfg.nu), "continuum": continuum_threshold(cfg.nu)},
        "constants": {"nu": cfg.nu, "omega": cfg.omega, "C0": cfg.C0, "C1": cfg.C1, "convolution_constant": 1.0},
        "seed": exp.seed,
        "scheme": cfg.scheme,
        "outcomes": _jsonable(outcomes or {}),
        "extra": _jsonable(extra or {}),
    }


def write_json(path, data) -> Path:
    p = Path(path)
    p.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return p


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def timeseries_rows(traj, ledger, energy) -> list[str]:
    res = np.concatenate([[0.0], energy.residuals])
    rows = [CSV_HEADER]
    for j, r in enumerate(traj.reports):
        vals = (
            traj.times[j], r.chi_m1, r.chi_0, r.chi_1, r.l2, r.hs_full, r.grad_inf,
            ledger.lhs[j], ledger.margin[j], res[j],
        )
        rows.append(",".join(_fmt(v) for v in vals))
    return rows


def read_timeseries(path) -> dict:
    """Columns of a time-series CSV as float arrays keyed by header name."""
    lines = Path(path).read_text().strip().splitlines()
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names))
    return {name: data[:, i] for i, name in enumerate(names)}


PLOT_TEMPLATE = """\
# chi^-1 norm against the a priori bound ||u0||_chi^-1
set datafile separator ','
set key top right
set xlabel 't'
set ylabel '||u(t)||_{{chi^{{-1}}}}'
set logscale y
bound = {bound}
plot '{csv}' using 1:2 skip 1 with lines title 'chi_m1(t)', \\
     bound with lines dashtype 2 title '||u_0||_{{chi^{{-1}}}}'
"""


def emit_outputs(outdir, traj, ledger, energy, cfg: SolverConfig, exp: Experiment, *, outcomes=None, extra=None) -> dict:
    """Write ``timeseries.csv``, ``manifest.json`` and ``plot.gp`` into ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "timeseries.csv"
    csv.write_text("\n".join(timeseries_rows(traj, ledger, energy)) + "\n")
    manifest = build_manifest(cfg, exp, outcomes=outcomes, extra=extra)
    write_json(out / "manifest.json", manifest)
    plot = out / "plot.gp"
    plot.write_text(PLOT_TEMPLATE.format(bound=_fmt(ledger.chi_m1[0]), csv=csv.name))
    return {"csv": csv, "manifest": out / "manifest.json", "plot": plot}


def default_outdir(name: str) -> Path:
    return Path(os.environ.get("ROTNS_OUT_DIR", "rotns_out")) / name
