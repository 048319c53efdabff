"""Command-line front end: ``heatlab run --config <path> [--out <dir>] [--preset <name>] [--jobs N]``.

Configs are flat ``key = value`` text with ``#`` comments.  Grids accept
``linspace(a, b, n)``, ``geomspace(a, b, n)`` or a comma-separated list.
Each run writes ``<name>.csv``, a ``<name>.meta`` sidecar in the same
key-value format and, unless ``plot = no``, a ``<name>_plot.py`` script.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import analysis, kernels
from .analysis import Setup, SweepSpec
from .baths import BathSpec
from .hilbert import HybridSystem, TwoQubitSystem
from .liouvillian import GAP_RTOL
from .observables import qubit_polarization
from .steadystate import RESIDUAL_TOL, SteadyStateError, TruncationPolicy

MODES = ("steady", "sweep-lambda", "sweep-bias", "rectify", "detune", "amplify")
PRESET_ALIASES = {"fig3": "fig3a", "fig6": "fig6b"}
FLOAT_FORMAT = ".16e"

DEFAULT_COLUMNS = {
    "steady": ("lambda", "epsilon", "t_a", "t_sigma", "j_a", "j_sigma", "j_ss", "sigma_z", "n_max", "residual"),
    "sweep-lambda": ("lambda", "j_ss", "sigma_z", "n_max", "residual"),
    "sweep-bias": ("delta_t", "lambda", "j_ss_over_lambda2"),
    "rectify": ("delta_t", "lambda", "j_forward", "j_reverse", "rectification"),
    "detune": ("delta", "delta_t", "j_ss_over_lambda2"),
    "amplify": ("t_sigma_l", "j_l", "j_r", "beta_r"),
}

# Design conventions recorded in every sidecar.
DESIGN_DEFAULTS = {
    "bias_convention": "t_a = t0 + delta_t/2, t_sigma = t0 - delta_t/2",
    "current_sign": "positive into the bath; j_ss = j_sigma (j_sigma_r for amplify)",
    "ndtc_threshold": analysis.NDTC_THRESHOLD,
    "derivative_scheme": "second-order finite differences, one-sided at grid ends",
    "gap_rtol": GAP_RTOL,
    "residual_tol": RESIDUAL_TOL,
    "steady_solver": "extended-precision gth state reduction with structural ergodicity check",
    "float_format": FLOAT_FORMAT,
}


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; field names are the config keys (``lambda`` maps to ``lam``)."""

    mode: str = "steady"
    name: str = "run"
    omega0: float = 1.0
    epsilon: float = 1.0
    lam: float = 0.05
    alpha_a: float = 0.005
    alpha_sigma: float = 0.005
    omega_c: float = 10.0
    t_a: float = 1.5
    t_sigma: float = 0.5
    t0: float = 1.0
    eps_l: float = 1.0
    eps_r: float = 1.0
    lambda_l: float = 0.1
    lambda_r: float = 0.4
    alpha_sigma_l: float = 0.005
    alpha_sigma_r: float = 0.005
    t_sigma_l: float = 0.5
    t_sigma_r: float = 0.2
    n_max: int = 30
    truncation: str = "fixed"
    truncation_start: int = 10
    truncation_growth: int = 10
    truncation_cap: int = 200
    truncation_rtol: float = 1e-3
    truncation_extra: int = 0
    grid: str = ""
    family: str = ""
    quantities: str = "j_ss"
    columns: str = ""
    plot: bool = True

    # --- text format -------------------------------------------------
    @classmethod
    def key_of(cls, attr):
        return "lambda" if attr == "lam" else attr

    @classmethod
    def attr_of(cls, key):
        return "lam" if key == "lambda" else key

    @classmethod
    def from_mapping(cls, values: dict, base: "RunConfig | None" = None) -> "RunConfig":
        base = base or cls()
        types = {f.name: f.type for f in fields(cls)}
        updates = {}
        for key, raw in values.items():
            attr = cls.attr_of(key)
            if attr not in types or key == "lam":
                raise ConfigError(key, "unknown key")
            updates[attr] = _convert(key, raw, types[attr])
        cfg = replace(base, **updates)
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        return cls.from_mapping(parse_kv(text), base)

    def to_mapping(self) -> dict[str, str]:
        return {self.key_of(f.name): _format_value(getattr(self, f.name)) for f in fields(self)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())

    # --- checks ------------------------------------------------------
    def validate(self):
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", self.name):
            raise ConfigError("name", "use letters, digits, '.', '_' or '-' only")
        for key in ("omega0", "omega_c"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be positive")
        for key in ("lam", "lambda_l", "lambda_r", "alpha_a", "alpha_sigma", "alpha_sigma_l", "alpha_sigma_r",
                    "t_a", "t_sigma", "t_sigma_l", "t_sigma_r"):
            if not getattr(self, key) >= 0:
                raise ConfigError(self.key_of(key), "must be nonnegative")
        if not self.t0 > 0:
            raise ConfigError("t0", "must be positive")
        if self.n_max < 1:
            raise ConfigError("n_max", "must be at least 1")
        if self.truncation not in ("fixed", "auto"):
            raise ConfigError("truncation", "must be 'fixed' or 'auto'")
        if self.truncation_growth < 1:
            raise ConfigError("truncation_growth", "must be at least 1")
        if self.truncation_start < 1:
            raise ConfigError("truncation_start", "must be at least 1")
        if self.truncation_extra < 0:
            raise ConfigError("truncation_extra", "must be nonnegative")
        if not self.truncation_rtol > 0:
            raise ConfigError("truncation_rtol", "must be positive")
        if self.mode != "steady":
            if not self.grid:
                raise ConfigError("grid", f"required for mode {self.mode}")
            self.grid_values()
        self.family_values()
        q = {s.strip() for s in self.quantities.split(",") if s.strip()}
        if q - analysis.QUANTITIES:
            raise ConfigError("quantities", f"unknown entries {sorted(q - analysis.QUANTITIES)}")

    def grid_values(self) -> tuple[float, ...]:
        vals = parse_grid("grid", self.grid)
        d = np.diff(vals)
        if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("grid", "must be strictly monotone")
        if self.mode in ("sweep-bias", "rectify", "detune") and max(abs(v) for v in vals) > 2 * self.t0:
            raise ConfigError("grid", "bias beyond 2*t0 would make a temperature negative")
        if self.mode == "sweep-lambda" and min(vals) < 0:
            raise ConfigError("grid", "coupling values must be nonnegative")
        if self.mode == "amplify":
            lo, hi = sorted((self.t_sigma_r, self.t_a))
            if min(vals) < lo or max(vals) > hi:
                raise ConfigError("grid", f"gate temperatures must lie in [{lo}, {hi}]")
            if len(vals) < 3:
                raise ConfigError("grid", "need at least 3 gate temperatures")
        return vals

    def family_values(self) -> tuple[float, ...]:
        vals = parse_grid("family", self.family) if self.family else ()
        if self.mode == "detune":
            for d in vals:
                if not self.omega0 - d > 0:
                    raise ConfigError("family", f"detuning {d} makes epsilon nonpositive")
        return vals

    def column_names(self) -> tuple[str, ...]:
        if self.columns:
            return tuple(c.strip() for c in self.columns.split(",") if c.strip())
        return DEFAULT_COLUMNS[self.mode]

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(
            self.truncation, self.truncation_start, self.truncation_growth, self.truncation_cap,
            self.truncation_rtol, self.truncation_extra,
        )

    def setup(self) -> Setup:
        return Setup(
            HybridSystem(self.epsilon, self.omega0, self.lam, self.n_max),
            BathSpec(self.alpha_a, self.omega_c, self.t_a, "a"),
            BathSpec(self.alpha_sigma, self.omega_c, self.t_sigma, "sigma"),
        )

    def transistor(self) -> analysis.TransistorSetup:
        return analysis.TransistorSetup(
            TwoQubitSystem(self.eps_l, self.eps_r, self.lambda_l, self.lambda_r, self.omega0, self.n_max),
            BathSpec(self.alpha_a, self.omega_c, self.t_a, "a"),
            BathSpec(self.alpha_sigma_l, self.omega_c, self.t_sigma_l, "sigma_L"),
            BathSpec(self.alpha_sigma_r, self.omega_c, self.t_sigma_r, "sigma_R"),
        )


def _convert(key, raw, typ):
    raw = raw.strip()
    try:
        if typ in ("float", float):
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if typ in ("int", int):
            return int(raw)
        if typ in ("bool", bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except ValueError:
        raise ConfigError(key, f"cannot read {raw!r} as {getattr(typ, '__name__', typ)}") from None
    return raw


def _format_value(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "missing key")
        if key in out:
            raise ConfigError(key, "given twice")
        out[key] = value
    return out


_GRID_FN = re.compile(r"^(linspace|geomspace)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


def parse_grid(key: str, text: str) -> tuple[float, ...]:
    text = text.strip()
    m = _GRID_FN.match(text)
    try:
        if m:
            fn, a, b, n = m.groups()
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise ValueError
            if fn == "geomspace" and (a <= 0 or b <= 0):
                raise ConfigError(key, "geomspace needs positive endpoints")
            vals = getattr(np, fn)(a, b, n)
        else:
            vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(key, f"cannot parse grid {text!r}") from None
    if len(vals) == 0 or not all(math.isfinite(v) for v in vals):
        raise ConfigError(key, "grid must hold finite values")
    return tuple(float(v) for v in vals)


# --- presets ------------------------------------------------------------

def preset_names() -> list[str]:
    root = resources.files("heatlab") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    name = PRESET_ALIASES.get(name, name)
    path = resources.files("heatlab") / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r} (known: {', '.join(preset_names())})")
    return path.read_text(encoding="utf-8")


def load_config(config_path: str | None = None, preset: str | None = None) -> RunConfig:
    """Preset values first, then the config file on top of them."""
    cfg = RunConfig()
    if preset:
        cfg = RunConfig.from_text(preset_text(preset), cfg)
    if config_path:
        text = Path(config_path).read_text(encoding="utf-8")
        cfg = RunConfig.from_text(text, cfg)
    if not preset and not config_path:
        raise ConfigError("config", "give --config and/or --preset")
    return cfg


# --- execution ----------------------------------------------------------

def execute(cfg: RunConfig, jobs: int = 1) -> analysis.SweepResult:
    """Run the configured experiment and return the full result table."""
    policy = cfg.policy()
    if cfg.mode == "amplify":
        t = cfg.transistor()
        return analysis.amplification_factor(t.system, t.baths, cfg.grid_values(), policy, jobs)
    base = cfg.setup()
    quantities = {s.strip() for s in cfg.quantities.split(",") if s.strip()}
    if cfg.mode == "steady":
        r = analysis.evaluate_point(base.system, base.baths, policy)
        cols = DEFAULT_COLUMNS["steady"] + ("certificate_delta",)
        row = (cfg.lam, cfg.epsilon, cfg.t_a, cfg.t_sigma, r.currents["a"], r.currents["sigma"], r.j_ss,
               qubit_polarization(r.populations), r.n_max, r.residual, r.certificate_delta)
        if "populations" in quantities:
            cols += analysis._population_columns(analysis.POPULATION_LEVELS)
            row += analysis._population_values(r.populations, r.n_max, analysis.POPULATION_LEVELS)
        return analysis.SweepResult("steady", cols, [row], {})
    axis = {"sweep-lambda": "coupling_lambda", "sweep-bias": "temp_bias", "rectify": "temp_bias",
            "detune": "detuning"}[cfg.mode]
    spec = SweepSpec(axis, cfg.grid_values(), base, frozenset(quantities), cfg.family_values(), cfg.t0,
                     policy, jobs)
    runner = {
        "sweep-lambda": analysis.sweep_coupling,
        "sweep-bias": analysis.sweep_temperature_bias,
        "rectify": analysis.sweep_rectification,
        "detune": analysis.sweep_detuning,
    }[cfg.mode]
    return runner(spec)


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), FLOAT_FORMAT)


def render_csv(result: analysis.SweepResult, columns) -> str:
    missing = [c for c in columns if c not in result.columns]
    if missing:
        raise ConfigError("columns", f"not produced by this mode: {', '.join(missing)}")
    idx = [result.columns.index(c) for c in columns]
    lines = [",".join(columns)]
    lines += [",".join(_fmt(row[k]) for k in idx) for row in result.rows]
    return "\n".join(lines) + "\n"


def render_meta(cfg: RunConfig, result: analysis.SweepResult) -> str:
    items = dict(cfg.to_mapping())
    items["backend"] = kernels.BACKEND
    for k, v in DESIGN_DEFAULTS.items():
        items[k] = _format_value(v)
    if "n_max" in result.columns:
        used = result.column("n_max").astype(int)
        items["n_max_used_min"] = str(int(used.min()))
        items["n_max_used_max"] = str(int(used.max()))
    if "residual" in result.columns:
        items["residual_max"] = _fmt(float(np.max(result.column("residual"))))
    if "certificate_delta" in result.columns:
        d = result.column("certificate_delta")
        items["certificate_delta_max"] = "none" if np.all(np.isnan(d)) else _fmt(float(np.nanmax(d)))
    if "zero_denominator" in result.columns:
        items["zero_denominator_points"] = str(int(result.column("zero_denominator").sum()))
    items["rows"] = str(len(result.rows))
    return "".join(f"{k} = {v}\n" for k, v in items.items())


_PLOT_TEMPLATE = '''"""Plot {csv} (generated by heatlab)."""
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

with open("{csv}", newline="") as fh:
    rows = list(csv.DictReader(fh))

x_key, y_keys, group_key = {x!r}, {ys!r}, {group!r}
groups = defaultdict(list)
for row in rows:
    groups[row[group_key] if group_key else ""].append(row)

fig, ax = plt.subplots()
for label, chunk in groups.items():
    for y in y_keys:
        tag = " ".join(s for s in (y, f"{{group_key}}={{float(label):g}}" if group_key else "") if s)
        ax.plot([float(r[x_key]) for r in chunk], [float(r[y]) for r in chunk], marker=".", label=tag)
ax.set_xlabel(x_key)
{xscale}ax.legend()
fig.savefig("{png}", dpi=150)
'''


def render_plot_script(cfg: RunConfig, csv_name: str, columns) -> str:
    x = columns[0]
    group = next((c for c in ("lambda", "delta") if c in columns and c != x), "")
    ys = [c for c in columns[1:] if c not in (group, "n_max", "residual", "certificate_delta")]
    xscale = 'ax.set_xscale("log")\n' if cfg.mode == "sweep-lambda" else ""
    return _PLOT_TEMPLATE.format(csv=csv_name, x=x, ys=ys, group=group, xscale=xscale,
                                 png=csv_name[:-4] + ".png")


def write_outputs(cfg: RunConfig, result: analysis.SweepResult, out_dir: Path) -> list[Path]:
    columns = cfg.column_names()
    csv_text = render_csv(result, columns)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / f"{cfg.name}.csv", out_dir / f"{cfg.name}.meta"]
    texts = [csv_text, render_meta(cfg, result)]
    if cfg.plot:
        paths.append(out_dir / f"{cfg.name}_plot.py")
        texts.append(render_plot_script(cfg, paths[0].name, columns))
    for path, text in zip(paths, texts):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatlab", description="Heat transport through a qubit-phonon hybrid.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured experiment and write CSV + metadata")
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("--preset", help="start from a shipped preset (e.g. fig2a, fig3a, fig6b)")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (HEATLAB_JOBS overrides)")
    sub.add_parser("presets", help="list shipped presets")
    return parser


def _jobs_from(cli_jobs):
    env = os.environ.get("HEATLAB_JOBS", "").strip()
    if env:
        try:
            cli_jobs = int(env)
        except ValueError:
            raise ConfigError("HEATLAB_JOBS", f"not an integer: {env!r}") from None
    if cli_jobs < 1:
        raise ConfigError("jobs", "must be at least 1")
    return cli_jobs


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print("\n".join(preset_names()))
        return 0
    try:
        jobs = _jobs_from(args.jobs)
        cfg = load_config(args.config, args.preset)
        result = execute(cfg, jobs)
        render_csv(result, cfg.column_names())
    except ValueError as exc:  # ConfigError, or a physical parameter rejected downstream
        print(f"heatlab: config error: {exc}", file=sys.stderr)
        return 1
    except SteadyStateError as exc:
        print(f"heatlab: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"heatlab: I/O error: {exc}", file=sys.stderr)
        return 3
    try:
        paths = write_outputs(cfg, result, Path(args.out))
    except OSError as exc:
        print(f"heatlab: I/O error: {exc}", file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
