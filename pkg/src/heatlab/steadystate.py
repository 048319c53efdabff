"""Stationary populations of the dressed rate equations.

Main path: a structural ergodicity check on the transition graph followed by
Grassmann-Taksar-Heyman state reduction, which works only with nonnegative
off-diagonal rates and keeps full relative accuracy for nearly decomposable
chains (strong coupling leaves the two qubit branches joined by rates ~1e-15
of the ladder rates).  Independent routes for cross-checks: RK4 time
evolution, the weak-coupling perturbative solution and the strong-coupling
closed form.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from . import kernels
from .baths import BathSpec, bose_occupation
from .hilbert import HybridSystem
from .liouvillian import RateMatrixSet, build_rates_for, weak_coupling_generators

RESIDUAL_TOL = 1e-10
EXTENDED = np.longdouble  # 80-bit on x86-64; falls back to float64 where the platform has no wider type


class SteadyStateError(RuntimeError):
    pass


class NonErgodic(SteadyStateError):
    """More than one closed class: the stationary state is not unique."""


class SolverFailure(SteadyStateError):
    pass


class StepTooLarge(ValueError):
    pass


class SingularReducedOperator(SteadyStateError):
    pass


class NoConvergence(SteadyStateError):
    pass


@dataclass(frozen=True)
class SteadyStateResult:
    populations: np.ndarray
    residual: float
    n_max_used: int
    converged: bool = True
    clipped: float = 0.0
    method: str = "gth"
    extended: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.populations.setflags(write=False)
        if self.extended is not None:
            self.extended.setflags(write=False)


def _generator(rates) -> np.ndarray:
    if isinstance(rates, RateMatrixSet):
        return rates.total
    return np.asarray(rates, dtype=np.float64)


def _n_max_of(rates, size):
    if isinstance(rates, RateMatrixSet):
        return rates.basis.n_max
    return size - 1


def closed_classes(w: np.ndarray) -> list[np.ndarray]:
    """Closed communicating classes of the graph i -> j where ``w[j, i] > 0``."""
    adj = (w.T > 0).astype(np.int8)
    np.fill_diagonal(adj, 0)
    ncomp, lab = connected_components(adj, directed=True, connection="strong")
    leaves = np.ones(ncomp, dtype=bool)
    src, dst = np.nonzero(adj)
    cross = lab[src] != lab[dst]
    leaves[np.unique(lab[src[cross]])] = False
    return [np.flatnonzero(lab == c) for c in np.flatnonzero(leaves)]


def _relative_residual(w, p):
    scale = float(np.max(np.abs(np.diag(w)))) or 1.0
    return float(np.max(np.abs(w @ p))) / scale


def _augmented_solve(w):
    """Null vector with one balance row replaced by the normalization row."""
    n = w.shape[0]
    a = w.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return scipy.linalg.solve(a, b)


def _gth_extended(w):
    """State reduction in extended precision on a generator ``w`` (columns = sources).

    Small currents are differences of much larger gross fluxes; carrying the
    populations with ~1e-19 relative accuracy keeps the energy balance of
    the bath currents at the 1e-10 level even when J is 1e-9 of the flux.
    """
    a = np.array(w.T, dtype=EXTENDED)
    n = a.shape[0]
    np.fill_diagonal(a, 0)
    for k in range(n - 1, 0, -1):
        s = a[k, :k].sum()
        if not s > 0:
            return np.full(n, np.nan, dtype=EXTENDED)
        a[:k, k] /= s
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n, dtype=EXTENDED)
    pi[0] = 1
    for k in range(1, n):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def solve_steady_state(
    rates, method: str = "gth", tol: float = RESIDUAL_TOL, precision: str = "extended"
) -> SteadyStateResult:
    """Unique normalized null vector of the total generator.

    ``method`` is ``"gth"`` (state reduction, default) or ``"lu"`` (balance
    equations with one row swapped for sum(P) = 1).  With
    ``precision="extended"`` (default) the GTH reduction runs in extended
    precision and the result keeps those populations in ``extended`` for
    the current evaluation; ``"double"`` uses the compiled float64 kernel.
    Transient states get zero weight.
    """
    if precision not in ("extended", "double"):
        raise ValueError(f"unknown precision {precision!r}")
    w = _generator(rates)
    if not np.all(np.isfinite(w)):
        raise SolverFailure("generator has non-finite entries")
    n = w.shape[0]
    classes = closed_classes(w)
    if len(classes) != 1:
        raise NonErgodic(f"transition graph has {len(classes)} closed classes")
    keep = classes[0]
    sub = w[np.ix_(keep, keep)]
    ext = None
    if method == "gth":
        if precision == "extended":
            q = _gth_extended(sub)
        else:
            q = kernels.gth_stationary(np.ascontiguousarray(sub.T))
        if not np.all(np.isfinite(q)):
            q = _augmented_solve(sub)
            method = "lu"
        elif precision == "extended":
            ext = np.zeros(n, dtype=EXTENDED)
            ext[keep] = q
    elif method == "lu":
        q = _augmented_solve(sub)
    else:
        raise ValueError(f"unknown method {method!r}")
    p = np.zeros(n)
    p[keep] = q
    clipped = float(max(0.0, -p.min()))
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    res = _relative_residual(w, p)
    if not res < tol:
        raise SolverFailure(f"residual {res:.3e} above tolerance {tol:.1e}")
    return SteadyStateResult(p, res, _n_max_of(rates, n), True, clipped, method, ext)


def default_dt(w: np.ndarray) -> float:
    return 0.1 / float(np.max(np.abs(np.diag(w))))


def rk4_propagator(w: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of dP/dt = W P as a matrix."""
    h = dt * w
    eye = np.eye(w.shape[0])
    return eye + h @ (eye + h @ (eye / 2 + h @ (eye / 6 + h / 24)))


def evolve_to_stationarity(
    rates, p0, horizon: float, dt: float | None = None, method: str = "auto"
) -> np.ndarray:
    """Integrate the rate equations with fixed-step RK4 up to ``horizon``.

    ``method="step"`` takes the steps one by one; ``"square"`` applies the
    same number of RK4 steps through repeated squaring of the one-step
    propagator, which makes horizons of 1e12 relaxation units affordable.
    ``"auto"`` steps when fewer than 2e5 steps are needed.
    """
    w = _generator(rates)
    p0 = np.asarray(p0, dtype=np.float64)
    if p0.shape != (w.shape[0],):
        raise ValueError("p0 does not match the generator dimension")
    diag = float(np.max(np.abs(np.diag(w))))
    if diag == 0.0:
        return p0.copy()
    dt = default_dt(w) if dt is None else float(dt)
    if not 0 < dt < 2.0 / diag:
        raise StepTooLarge(f"dt={dt} outside (0, {2.0 / diag:.3e})")
    n_steps = max(1, int(math.ceil(horizon / dt)))
    if method == "auto":
        method = "step" if n_steps <= 200_000 else "square"
    if method == "step":
        return kernels.rk4_steps(np.ascontiguousarray(w), p0, dt, n_steps)
    if method != "square":
        raise ValueError(f"unknown method {method!r}")
    r = rk4_propagator(w, dt)
    p = p0.copy()
    while n_steps:
        if n_steps & 1:
            p = r @ p
        n_steps >>= 1
        if n_steps:
            r = r @ r
            r /= r.sum(axis=0)  # stay column-stochastic against roundoff drift
    return p


def solve_weak_coupling_perturbative(
    sys: HybridSystem, bath_a: BathSpec, bath_sigma: BathSpec
) -> SteadyStateResult:
    """Second-order (in 2 lam/omega0) stationary state around the decoupled product state."""
    if sys.lam / sys.omega0 > 0.05:
        warnings.warn("perturbative solver used outside lam/omega0 <= 0.05", RuntimeWarning, stacklevel=2)
    m0, ml = weak_coupling_generators(sys, bath_a, bath_sigma)
    p0 = decoupled_populations(sys, bath_a, bath_sigma)
    n = m0.shape[0]
    # bordered system: M0 y + mu P0 = -M_lambda P0, sum(y) = 0
    border = np.zeros((n + 1, n + 1))
    border[:n, :n] = m0
    border[:n, n] = p0
    border[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[:n] = -(ml @ p0)
    if len(closed_classes(m0)) != 1:
        raise SingularReducedOperator("M_a + M_sigma has more than one stationary direction")
    sol = scipy.linalg.solve(border, rhs)
    y = sol[:n]
    p = p0 + sys.x**2 * y
    clipped = float(max(0.0, -p.min()))
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    res = _relative_residual(m0 + sys.x**2 * ml, p)
    return SteadyStateResult(p, res, sys.n_max, True, clipped, "perturbative")


def decoupled_populations(sys: HybridSystem, bath_a: BathSpec, bath_sigma: BathSpec) -> np.ndarray:
    """Product of the qubit Gibbs state at T_sigma and the mode Gibbs state at T_a.

    Normalized within the truncation.
    """
    n = np.arange(sys.n_max + 1) * sys.omega0
    mode = _boltzmann(n, bath_a.temperature)
    qubit = _boltzmann(np.array([sys.epsilon / 2, -sys.epsilon / 2]), bath_sigma.temperature)
    p = np.concatenate([qubit[0] * mode, qubit[1] * mode])
    return p / p.sum()


def _boltzmann(energies, temperature):
    e = energies - energies.min()
    if temperature == 0:
        return (e == 0).astype(np.float64)
    return np.exp(-e / temperature)


def strong_coupling_populations(sys: HybridSystem, bath_a: BathSpec) -> np.ndarray:
    """Both branches thermal at T_a, ordered (up n..., down n...).

    Uses the untruncated partition function 2 cosh(eps/2T_a) (1 + n_a(omega0)),
    so the entries sum to one minus the geometric tail beyond n_max.
    """
    t = bath_a.temperature
    if t <= 0:
        raise ValueError("closed form needs T_a > 0")
    eps, w0 = sys.epsilon, sys.omega0
    z = 2.0 * math.cosh(eps / (2 * t)) * (1.0 + bose_occupation(w0, t))
    n = np.arange(sys.n_max + 1) * w0
    up = np.exp(-(n + eps / 2) / t) / z
    down = np.exp(-(n - eps / 2) / t) / z
    return np.concatenate([up, down])


@dataclass(frozen=True)
class TruncationPolicy:
    """How n_max is chosen for a parameter point.

    ``mode="fixed"`` uses the system's n_max unchanged; ``"auto"`` certifies
    (see :func:`certify_truncation`) starting from ``start`` and then adds
    ``extra`` levels on top of the certified value.
    """

    mode: str = "fixed"
    start: int = 10
    growth: int = 10
    cap: int = 200
    rtol: float = 1e-3
    extra: int = 0

    def __post_init__(self):
        if self.mode not in ("fixed", "auto"):
            raise ValueError(f"unknown truncation mode {self.mode!r}")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")


@dataclass(frozen=True)
class Certificate:
    n_max: int
    delta: float
    history: tuple[tuple[int, float], ...] = field(default=())


def _currents(system, baths):
    from .observables import bath_currents

    rates = build_rates_for(system, baths)
    ss = solve_steady_state(rates, precision="double")
    return bath_currents(ss.populations, rates), rates


def _change(new, old, atol):
    scale = max(abs(v) for v in new.values())
    diff = max(abs(new[k] - old[k]) for k in new)
    if scale <= atol:
        return 0.0 if diff <= atol else math.inf
    return diff / scale


def certify_truncation(
    system,
    baths,
    growth: int = 10,
    start: int | None = None,
    rtol: float = 1e-3,
    cap: int = 200,
) -> tuple[int, float]:
    """Smallest n_max (on the start + k*growth ladder) whose currents move by < rtol.

    Returns ``(n_max_certified, last_delta)``.  The certified value is the
    lower of the two truncations compared.  A point whose currents all sit
    below ~1e-13 of the largest rate counts as converged once successive
    values agree to that absolute level.
    """
    cert = certify(system, baths, growth, start, rtol, cap)
    return cert.n_max, cert.delta


def certify(system, baths, growth=10, start=None, rtol=1e-3, cap=200) -> Certificate:
    if growth < 1:
        raise ValueError("growth must be >= 1")
    n = system.n_max if start is None else int(start)
    n = max(1, n)
    prev, rates = _currents(replace(system, n_max=n), baths)
    history = []
    while True:
        nxt = n + growth
        if nxt > cap:
            raise NoConvergence(f"truncation not certified below n_max={cap}")
        cur, rates = _currents(replace(system, n_max=nxt), baths)
        atol = 1e-13 * rates.max_rate * system.omega0
        delta = _change(cur, prev, atol)
        history.append((n, delta))
        if delta < rtol:
            return Certificate(n, delta, tuple(history))
        n, prev = nxt, cur
