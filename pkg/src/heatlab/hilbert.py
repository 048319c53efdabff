"""Exact dressed eigenbasis of the qubit-phonon Hamiltonian.

Because sigma_z commutes with the system Hamiltonian, each qubit projection
(a "branch") sees a harmonic mode displaced by its own amount g.  The
eigenstates are displaced Fock states tensored with a branch state, and every
matrix element needed downstream reduces to the overlap D_nm between Fock
states displaced relative to each other.

Energies are in units where hbar = k_B = 1; omega0 is conventionally 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels

UP, DOWN = "up", "down"
UP_FROM_DOWN, DOWN_FROM_UP = "up_from_down", "down_from_up"


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class HybridSystem:
    """One qubit longitudinally coupled to a single phonon mode."""

    epsilon: float
    omega0: float = 1.0
    lam: float = 0.0
    n_max: int = 30

    def __post_init__(self):
        _check_finite(epsilon=self.epsilon, omega0=self.omega0, lam=self.lam)
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")

    @property
    def x(self) -> float:
        """Relative displacement 2*lam/omega0 between the two branches."""
        return 2.0 * self.lam / self.omega0

    def displacements(self) -> tuple[float, float]:
        return self.lam / self.omega0, -self.lam / self.omega0


@dataclass(frozen=True)
class TwoQubitSystem:
    """Two qubits (L, R) sharing one phonon mode."""

    eps_l: float
    eps_r: float
    lam_l: float
    lam_r: float
    omega0: float = 1.0
    n_max: int = 30

    def __post_init__(self):
        _check_finite(
            eps_l=self.eps_l, eps_r=self.eps_r, lam_l=self.lam_l, lam_r=self.lam_r, omega0=self.omega0
        )
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.lam_l < 0 or self.lam_r < 0:
            raise ValueError("couplings must be nonnegative")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")

    def displacements(self) -> tuple[float, float, float, float]:
        """g_1..g_4 for the spin states uu, ud, du, dd."""
        s = (self.lam_l + self.lam_r) / self.omega0
        d = (self.lam_l - self.lam_r) / self.omega0
        return s, d, -d, -s

    def offsets(self) -> tuple[float, float, float, float]:
        """Branch energies Lambda_1..Lambda_4 (energy of the n = 0 level)."""
        w = self.omega0
        sum2 = (self.lam_l + self.lam_r) ** 2 / w
        dif2 = (self.lam_l - self.lam_r) ** 2 / w
        el, er = self.eps_l, self.eps_r
        return (
            (el + er) / 2 - sum2,
            (el - er) / 2 - dif2,
            (-el + er) / 2 - dif2,
            (-el - er) / 2 - sum2,
        )


class DressedState(NamedTuple):
    branch: str
    n: int
    energy: float


def _check_index(name, v):
    if int(v) != v or v < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")


def displacement_coefficient(n: int, m: int, x: float) -> float:
    """Overlap D_nm(x) between Fock states displaced by x.

    D_nm(x) = exp(-x^2/2) sum_l (-1)^l sqrt(n! m!) x^(n+m-2l) / ((n-l)! (m-l)! l!)

    Evaluated with a normalized three-term (Laguerre) recurrence along the
    diagonal |n - m| rather than the alternating sum, which cancels
    catastrophically once x is of order one.
    """
    _check_index("n", n)
    _check_index("m", m)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    n, m = int(n), int(m)
    lo, k = min(n, m), abs(n - m)
    ax = abs(x)
    if ax == 0.0:
        return (-1.0) ** n if k == 0 else 0.0
    y = ax * ax
    logf = k * math.log(ax) - 0.5 * y - 0.5 * math.lgamma(k + 1.0)
    scale = logf if logf < -600.0 else 0.0
    f, fm1 = math.exp(logf - scale), 0.0
    for j in range(lo):
        f, fm1 = ((2 * j + 1 + k - y) * f - math.sqrt(j * (j + k)) * fm1) / math.sqrt(
            (j + 1.0) * (j + 1.0 + k)
        ), f
        if abs(f) > 1e200:
            f, fm1, scale = f / 1e200, fm1 / 1e200, scale + math.log(1e200)
    val = f * math.exp(scale)
    if lo % 2:
        val = -val
    if x < 0 and k % 2:
        val = -val
    return val


def displacement_table(n_max: int, x: float) -> np.ndarray:
    """All D_nm(x) for 0 <= n, m <= n_max as a symmetric array."""
    _check_index("n_max", n_max)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return kernels.displacement_table(int(n_max), float(x))


def _check_within(sys, *idx):
    for v in idx:
        _check_index("index", v)
        if v > sys.n_max:
            raise IndexError(f"index {v} outside truncation 0..{sys.n_max}")


def sigma_x_element(n: int, m: int, direction: str, sys: HybridSystem) -> float:
    """<up,n|sigma_x|down,m> (``up_from_down``) or <down,n|sigma_x|up,m>."""
    _check_within(sys, n, m)
    d = displacement_coefficient(n, m, sys.x)
    if direction == UP_FROM_DOWN:
        return (-1.0) ** n * d
    if direction == DOWN_FROM_UP:
        return (-1.0) ** m * d
    raise ValueError(f"unknown direction {direction!r}")


def a_dagger_element(n: int, m: int, branch: str, sys: HybridSystem) -> float:
    """<branch,n| a^dagger |branch,m> in the displaced basis."""
    _check_within(sys, n, m)
    g_up, g_down = sys.displacements()
    if branch == UP:
        g = g_up
    elif branch == DOWN:
        g = g_down
    else:
        raise ValueError(f"unknown branch {branch!r}")
    val = math.sqrt(m + 1) if n == m + 1 else 0.0
    if n == m:
        val -= g
    return val


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DressedBasis:
    """Enumerated dressed eigenstates and cached transition tables.

    States are ordered branch-major: all n of branch 0, then branch 1, ...
    ``sigma_tables[(b1, b2)][n, m]`` holds the signed element
    ``<b1, n| sigma |b2, m>``; the reverse direction is its transpose.
    """

    n_max: int
    omega0: float
    branches: tuple[str, ...]
    displacements: np.ndarray
    offsets: np.ndarray
    energy_shift: float
    channels: dict[str, tuple[tuple[int, int], ...]]
    sigma_tables: dict[tuple[int, int], np.ndarray] = field(repr=False)
    a_dagger_tables: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def size(self) -> int:
        return len(self.branches) * self.levels

    @property
    def energies(self) -> np.ndarray:
        n = np.arange(self.levels) * self.omega0
        return np.concatenate([n + off + self.energy_shift for off in self.offsets])

    def index(self, branch: str | int, n: int) -> int:
        b = branch if isinstance(branch, int) else self.branches.index(branch)
        if not 0 <= n <= self.n_max:
            raise IndexError(f"n={n} outside truncation 0..{self.n_max}")
        return b * self.levels + n

    def state(self, i: int) -> DressedState:
        b, n = divmod(i, self.levels)
        return DressedState(self.branches[b], n, float(self.energies[i]))

    @property
    def states(self) -> list[DressedState]:
        return [self.state(i) for i in range(self.size)]

    def gap(self, i: int, j: int) -> float:
        """E_j - E_i, formed from level and branch-offset differences."""
        bi, ni = divmod(i, self.levels)
        bj, nj = divmod(j, self.levels)
        return (nj - ni) * self.omega0 + (self.offsets[bj] - self.offsets[bi])

    def gap_table(self) -> np.ndarray:
        """``G[j, i] = E_j - E_i`` for every pair of states."""
        lv = np.arange(self.levels) * self.omega0
        b = len(self.branches)
        lev = np.tile(lv, b)
        off = np.repeat(self.offsets, self.levels)
        return np.subtract.outer(lev, lev) + np.subtract.outer(off, off)


def _make_basis(n_max, omega0, branches, g, offsets, shift, channels):
    tables = {}
    for pairs in channels.values():
        for b1, b2 in pairs:
            d = displacement_table(n_max, g[b1] - g[b2])
            sign = np.where(np.arange(n_max + 1) % 2, -1.0, 1.0)[:, None]
            tables[(b1, b2)] = _readonly(sign * d)
    adag = []
    for gb in g:
        t = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=np.float64)), -1)
        t -= gb * np.eye(n_max + 1)
        adag.append(_readonly(t))
    return DressedBasis(
        n_max=int(n_max),
        omega0=float(omega0),
        branches=tuple(branches),
        displacements=_readonly(np.array(g, dtype=np.float64)),
        offsets=_readonly(np.array(offsets, dtype=np.float64)),
        energy_shift=float(shift),
        channels=channels,
        sigma_tables=tables,
        a_dagger_tables=tuple(adag),
    )


def build_dressed_basis(sys: HybridSystem) -> DressedBasis:
    """Dressed basis of the single-qubit system, ordered (up, down) x n."""
    shift = -sys.lam**2 / sys.omega0
    return _make_basis(
        sys.n_max,
        sys.omega0,
        (UP, DOWN),
        sys.displacements(),
        (sys.epsilon / 2, -sys.epsilon / 2),
        shift,
        {"sigma": ((0, 1),)},
    )


def build_two_qubit_basis(sys: TwoQubitSystem) -> DressedBasis:
    """Dressed basis of the two-qubit system; branches 1..4 = uu, ud, du, dd.

    sigma_L flips the left spin (1<->3, 2<->4), sigma_R the right (1<->2, 3<->4).
    """
    return _make_basis(
        sys.n_max,
        sys.omega0,
        ("1", "2", "3", "4"),
        sys.displacements(),
        sys.offsets(),
        0.0,
        {"sigma_L": ((0, 2), (1, 3)), "sigma_R": ((0, 1), (2, 3))},
    )
