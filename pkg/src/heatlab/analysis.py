"""Parameter sweeps and thermal-management figures of merit.

Temperature-bias sweeps follow the symmetric convention
T_a = T0 + dT/2, T_sigma = T0 - dT/2.  Every sweep evaluates grid points
independently (optionally in worker processes) and returns rows ordered by
grid index, so identical inputs give identical tables.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .baths import BathSpec
from .hilbert import HybridSystem, TwoQubitSystem
from .liouvillian import build_rates_for
from .observables import bath_currents, qubit_polarization
from .steadystate import TruncationPolicy, certify, solve_steady_state

AXES = ("coupling_lambda", "temp_bias", "gate_temperature", "detuning")
QUANTITIES = frozenset({"j_ss", "polarization", "populations", "rectification", "amplification"})
NDTC_THRESHOLD = 0.1
POPULATION_LEVELS = 3


class InsufficientGrid(ValueError):
    pass


class RectificationZero(RuntimeWarning):
    """Both currents vanish; the rectification factor is reported as 0."""


class ZeroDenominator(RuntimeWarning):
    """dJ_L vanished at some gate points; beta_R is reported as +inf there."""


@dataclass(frozen=True)
class Setup:
    """Single-qubit device with its two baths."""

    system: HybridSystem
    bath_a: BathSpec
    bath_sigma: BathSpec

    @property
    def baths(self):
        return (self.bath_a, self.bath_sigma)


@dataclass(frozen=True)
class TransistorSetup:
    """Two-qubit device: mode bath (source), gate bath sigma_L, drain bath sigma_R."""

    system: TwoQubitSystem
    bath_a: BathSpec
    bath_l: BathSpec
    bath_r: BathSpec

    @property
    def baths(self):
        return (self.bath_a, self.bath_l, self.bath_r)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and around which base point.

    ``grid`` is the swept axis: lambda, dT, gate temperature, or dT again for
    detuning studies.  ``family`` holds the outer parameter for families of
    curves: lambda values for ``temp_bias`` (defaults to the base lambda) and
    detunings delta = omega0 - epsilon for ``detuning``.
    """

    axis: str
    grid: tuple[float, ...]
    base: Setup | TransistorSetup
    quantities: frozenset = frozenset({"j_ss"})
    family: tuple[float, ...] = ()
    t0: float = 1.0
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    jobs: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        grid = tuple(float(v) for v in self.grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "family", tuple(float(v) for v in self.family))
        object.__setattr__(self, "quantities", frozenset(self.quantities))
        unknown = self.quantities - QUANTITIES
        if unknown:
            raise ValueError(f"unknown quantities {sorted(unknown)}")
        if len(grid) == 0:
            raise ValueError("empty grid")
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("grid must be strictly monotone")
        if self.axis in ("temp_bias", "detuning"):
            if self.t0 <= 0:
                raise ValueError("t0 must be positive")
            if max(abs(v) for v in grid) > 2 * self.t0:
                raise ValueError("|dT| must not exceed 2*t0 (temperatures would go negative)")


@dataclass
class SweepResult:
    axis: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=np.float64)

    def select(self, **match) -> "SweepResult":
        """Rows whose columns equal the given values (e.g. ``lambda=0.01``)."""
        idx = {name: self.columns.index(name) for name in match}
        rows = [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]
        return SweepResult(self.axis, self.columns, rows, dict(self.metadata))

    def __len__(self):
        return len(self.rows)


class PointResult(NamedTuple):
    currents: dict
    j_ss: float
    populations: np.ndarray
    residual: float
    n_max: int
    certificate_delta: float


class NDTCReport(NamedTuple):
    present: bool
    peak_bias: float
    suppression_ratio: float


def bias_temperatures(t0: float, delta_t: float) -> tuple[float, float]:
    """(T_a, T_sigma) for a symmetric bias around t0."""
    return t0 + delta_t / 2, t0 - delta_t / 2


def evaluate_point(system, baths, policy: TruncationPolicy | None = None) -> PointResult:
    """Steady state and bath currents at one parameter point under ``policy``."""
    policy = policy or TruncationPolicy()
    delta = math.nan
    if policy.mode == "auto":
        cert = certify(
            replace(system, n_max=policy.start), baths, policy.growth, policy.start, policy.rtol, policy.cap
        )
        system = replace(system, n_max=cert.n_max + policy.extra)
        delta = cert.delta
    elif policy.extra:
        system = replace(system, n_max=system.n_max + policy.extra)
    rates = build_rates_for(system, baths)
    ss = solve_steady_state(rates)
    j = bath_currents(ss, rates)
    j_ss = j["sigma"] if "sigma" in j else j["sigma_R"]
    return PointResult(j, j_ss, ss.populations, ss.residual, system.n_max, delta)


def _evaluate(task):
    return evaluate_point(*task)


def _resolve_jobs(jobs):
    env = os.environ.get("HEATLAB_JOBS")
    if env:
        jobs = int(env)
    return max(1, int(jobs or 1))


def _run_points(tasks, jobs):
    jobs = _resolve_jobs(jobs)
    if jobs == 1 or len(tasks) < 2:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order
        return list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _population_columns(levels):
    return tuple(f"p_up_{n}" for n in range(levels)) + tuple(f"p_down_{n}" for n in range(levels))


def _population_values(p, n_max, levels):
    lv = n_max + 1
    return tuple(float(p[n]) for n in range(levels)) + tuple(float(p[lv + n]) for n in range(levels))


def _over_lam2(j, lam):
    return j / lam**2 if lam > 0 else math.nan


def _metadata(spec: SweepSpec) -> dict:
    base = spec.base
    meta = {"axis": spec.axis, "grid": list(spec.grid), "family": list(spec.family), "t0": spec.t0}
    if isinstance(base, Setup):
        s = base.system
        meta.update(omega0=s.omega0, epsilon=s.epsilon, lam=s.lam, n_max=s.n_max)
        for name, b in (("a", base.bath_a), ("sigma", base.bath_sigma)):
            meta.update({f"alpha_{name}": b.alpha, f"omega_c_{name}": b.omega_c, f"t_{name}": b.temperature})
    else:
        s = base.system
        meta.update(
            omega0=s.omega0, eps_l=s.eps_l, eps_r=s.eps_r, lam_l=s.lam_l, lam_r=s.lam_r, n_max=s.n_max
        )
        for name, b in (("a", base.bath_a), ("sigma_l", base.bath_l), ("sigma_r", base.bath_r)):
            meta.update({f"alpha_{name}": b.alpha, f"omega_c_{name}": b.omega_c, f"t_{name}": b.temperature})
    p = spec.policy
    meta.update(
        truncation=p.mode,
        truncation_start=p.start,
        truncation_growth=p.growth,
        truncation_cap=p.cap,
        truncation_rtol=p.rtol,
        truncation_extra=p.extra,
        ndtc_threshold=NDTC_THRESHOLD,
        backend=kernels.BACKEND,
    )
    return meta


def _require(spec, axis, kind=Setup):
    if spec.axis != axis:
        raise ValueError(f"expected a {axis!r} sweep, got {spec.axis!r}")
    if not isinstance(spec.base, kind):
        raise TypeError(f"{axis} sweeps need a {kind.__name__} base")


def sweep_coupling(spec: SweepSpec) -> SweepResult:
    """J_ss, polarization and (optionally) low-level populations versus lambda."""
    _require(spec, "coupling_lambda")
    base = spec.base
    for lam in spec.grid:
        if lam < 0:
            raise ValueError("lambda grid must be nonnegative")
    tasks = [(replace(base.system, lam=lam), base.baths, spec.policy) for lam in spec.grid]
    results = _run_points(tasks, spec.jobs)
    pops = "populations" in spec.quantities
    cols = ("lambda", "j_ss", "j_a", "sigma_z", "n_max", "residual", "certificate_delta")
    if pops:
        cols += _population_columns(POPULATION_LEVELS)
    rows = []
    for lam, r in zip(spec.grid, results):
        row = (lam, r.j_ss, r.currents["a"], qubit_polarization(r.populations), r.n_max, r.residual,
               r.certificate_delta)
        if pops:
            row += _population_values(r.populations, r.n_max, POPULATION_LEVELS)
        rows.append(row)
    return SweepResult(spec.axis, cols, rows, _metadata(spec))


def _bias_tasks(base: Setup, t0, grid, lams, policy, eps=None):
    tasks = []
    for lam in lams:
        for dt in grid:
            ta, ts = bias_temperatures(t0, dt)
            system = replace(base.system, lam=lam)
            if eps is not None:
                system = replace(system, epsilon=eps)
            tasks.append((system, (base.bath_a.with_temperature(ta), base.bath_sigma.with_temperature(ts)), policy))
    return tasks


_BIAS_COLUMNS = ("delta_t", "lambda", "t_a", "t_sigma", "j_ss", "j_ss_over_lambda2", "sigma_z", "n_max",
                 "residual", "certificate_delta")


def _bias_row(dt, lam, t0, r):
    ta, ts = bias_temperatures(t0, dt)
    return (dt, lam, ta, ts, r.j_ss, _over_lam2(r.j_ss, lam), qubit_polarization(r.populations), r.n_max,
            r.residual, r.certificate_delta)


def sweep_temperature_bias(spec: SweepSpec) -> SweepResult:
    """J_ss(dT) curves, one per lambda in ``spec.family`` (or the base lambda)."""
    _require(spec, "temp_bias")
    lams = spec.family or (spec.base.system.lam,)
    tasks = _bias_tasks(spec.base, spec.t0, spec.grid, lams, spec.policy)
    results = iter(_run_points(tasks, spec.jobs))
    rows = [_bias_row(dt, lam, spec.t0, next(results)) for lam in lams for dt in spec.grid]
    return SweepResult(spec.axis, _BIAS_COLUMNS, rows, _metadata(spec))


def sweep_detuning(spec: SweepSpec) -> SweepResult:
    """J_ss(dT) curves, one per detuning delta = omega0 - epsilon in ``spec.family``."""
    _require(spec, "detuning")
    w0 = spec.base.system.omega0
    deltas = spec.family or (w0 - spec.base.system.epsilon,)
    for d in deltas:
        if not w0 - d > 0:
            raise ValueError(f"detuning {d} leaves epsilon = omega0 - delta <= 0")
    lam = spec.base.system.lam
    tasks = []
    for d in deltas:
        tasks += _bias_tasks(spec.base, spec.t0, spec.grid, (lam,), spec.policy, eps=w0 - d)
    results = iter(_run_points(tasks, spec.jobs))
    cols = ("delta", "epsilon") + _BIAS_COLUMNS
    rows = [(d, w0 - d) + _bias_row(dt, lam, spec.t0, next(results)) for d in deltas for dt in spec.grid]
    return SweepResult(spec.axis, cols, rows, _metadata(spec))


def detect_ndtc(sweep: SweepResult | tuple, threshold: float = NDTC_THRESHOLD) -> NDTCReport:
    """Look for negative differential thermal conductance on a single J(dT) curve.

    Present when the maximum of J over the grid is interior and the current at
    the largest bias sits below (1 - threshold) of it.  Accepts a sweep
    result holding one curve, or a ``(delta_t, j)`` pair of arrays.
    """
    if isinstance(sweep, SweepResult):
        if "lambda" in sweep.columns and len(set(sweep.column("lambda"))) > 1:
            raise ValueError("sweep holds several curves; select one first")
        if "delta" in sweep.columns and len(set(sweep.column("delta"))) > 1:
            raise ValueError("sweep holds several curves; select one first")
        dt, j = sweep.column("delta_t"), sweep.column("j_ss")
    else:
        dt, j = (np.asarray(v, dtype=np.float64) for v in sweep)
    if dt.size < 5:
        raise InsufficientGrid(f"need at least 5 bias points, got {dt.size}")
    order = np.argsort(dt)
    dt, j = dt[order], j[order]
    if np.any(np.diff(dt) <= 0):
        raise ValueError("bias grid must be strictly monotone")
    k = int(np.argmax(j))
    jmax = float(j[k])
    ratio = float(j[-1] / jmax) if jmax > 0 else math.nan
    present = 0 < k < dt.size - 1 and jmax > 0 and j[-1] < (1.0 - threshold) * jmax
    return NDTCReport(bool(present), float(dt[k]), ratio)


def rectification_factor(j_forward: float, j_reverse: float) -> float:
    """R = |J(dT) + J(-dT)| / max(|J(dT)|, |J(-dT)|), between 0 and 2."""
    scale = max(abs(j_forward), abs(j_reverse))
    if scale == 0:
        warnings.warn("both currents vanish; rectification set to 0", RectificationZero, stacklevel=2)
        return 0.0
    return abs(j_forward + j_reverse) / scale


def sweep_rectification(spec: SweepSpec) -> SweepResult:
    """R(dT) for each lambda: forward bias and its mirror image with the baths' temperatures swapped."""
    _require(spec, "temp_bias")
    lams = spec.family or (spec.base.system.lam,)
    grid = spec.grid
    fwd = _bias_tasks(spec.base, spec.t0, grid, lams, spec.policy)
    rev = _bias_tasks(spec.base, spec.t0, tuple(-v for v in grid), lams, spec.policy)
    results = _run_points(fwd + rev, spec.jobs)
    half = len(fwd)
    cols = ("delta_t", "lambda", "j_forward", "j_reverse", "rectification", "n_max")
    rows = []
    for i, (lam, dt) in enumerate((lam, dt) for lam in lams for dt in grid):
        jf, jr = results[i].j_ss, results[half + i].j_ss
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RectificationZero)
            r = rectification_factor(jf, jr)
        rows.append((dt, lam, jf, jr, r, max(results[i].n_max, results[half + i].n_max)))
    return SweepResult("temp_bias", cols, rows, _metadata(spec))


def amplification_factor(
    sys: TwoQubitSystem,
    baths: Sequence[BathSpec],
    gate_grid: Sequence[float],
    policy: TruncationPolicy | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Drain/gate current sensitivity beta_R = |dJ_R/dT_L| / |dJ_L/dT_L| over a gate-temperature grid.

    Derivatives come from second-order finite differences on the grid
    (central inside, one-sided at the two ends).  Where dJ_L vanishes the
    table holds +inf and ``zero_denominator`` = 1.
    """
    bath_a, bath_l, bath_r = baths
    grid = np.asarray(gate_grid, dtype=np.float64)
    if grid.size < 3:
        raise InsufficientGrid("need at least 3 gate temperatures")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("gate grid must be strictly increasing")
    lo, hi = sorted((bath_r.temperature, bath_a.temperature))
    if grid[0] < lo or grid[-1] > hi:
        raise ValueError(f"gate temperatures must lie in [{lo}, {hi}]")
    tasks = [(sys, (bath_a, bath_l.with_temperature(float(t)), bath_r), policy) for t in grid]
    results = _run_points(tasks, jobs)
    jl = np.array([r.currents["sigma_L"] for r in results])
    jr = np.array([r.currents["sigma_R"] for r in results])
    djl = np.gradient(jl, grid, edge_order=2)
    djr = np.gradient(jr, grid, edge_order=2)
    scale = max(float(np.max(np.abs(jl))), float(np.max(np.abs(jr))), np.finfo(float).tiny)
    zero = np.abs(djl) <= 1e-12 * scale / float(np.ptp(grid))
    beta = np.full(grid.size, math.inf)
    beta[~zero] = np.abs(djr[~zero] / djl[~zero])
    if np.any(zero):
        warnings.warn("gate current derivative vanished; beta_R set to +inf", ZeroDenominator, stacklevel=2)
    cols = ("t_sigma_l", "j_l", "j_r", "j_a", "beta_r", "zero_denominator", "n_max", "residual")
    rows = [
        (float(t), float(jl[i]), float(jr[i]), r.currents["a"], float(beta[i]), int(zero[i]), r.n_max, r.residual)
        for i, (t, r) in enumerate(zip(grid, results))
    ]
    meta = _metadata(SweepSpec("gate_temperature", tuple(grid), TransistorSetup(sys, *baths),
                               policy=policy or TruncationPolicy()))
    return SweepResult("gate_temperature", cols, rows, meta)


def sweep_gate(spec: SweepSpec) -> SweepResult:
    _require(spec, "gate_temperature", TransistorSetup)
    return amplification_factor(spec.base.system, spec.base.baths, spec.grid, spec.policy, spec.jobs)


__all__ = [
    "Setup",
    "TransistorSetup",
    "SweepSpec",
    "SweepResult",
    "PointResult",
    "NDTCReport",
    "InsufficientGrid",
    "RectificationZero",
    "ZeroDenominator",
    "bias_temperatures",
    "evaluate_point",
    "sweep_coupling",
    "sweep_temperature_bias",
    "sweep_detuning",
    "sweep_rectification",
    "sweep_gate",
    "detect_ndtc",
    "rectification_factor",
    "amplification_factor",
]
