"""Population-transfer generators of the dressed master equation.

In the dressed eigenbasis the dissipators only connect eigenstates, so the
steady state closes on the diagonal populations.  Each bath contributes a
classical rate matrix ``W`` with ``W[j, i]`` the rate i -> j for i != j and
``W[i, i] = -sum_j W[j, i]``; d/dt P = W P.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .baths import BathLabel, BathSpec, sequential_rates
from .hilbert import (
    DressedBasis,
    DressedState,
    HybridSystem,
    TwoQubitSystem,
    build_dressed_basis,
    build_two_qubit_basis,
)

# Gaps below this (relative to the spectral width) count as exactly zero for
# the theta gate; float roundoff of a true zero gap is ~1e-16.
GAP_RTOL = 1e-12


def gap_tolerance(basis: DressedBasis) -> float:
    width = basis.omega0 * basis.levels + float(np.ptp(basis.offsets))
    return GAP_RTOL * width


@dataclass(frozen=True)
class RateMatrixSet:
    per_bath: dict[str, np.ndarray]
    gap_table: np.ndarray = field(repr=False)
    basis: DressedBasis = field(repr=False)
    baths: dict[str, BathSpec] = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return sum(self.per_bath.values())

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.per_bath)

    @property
    def max_rate(self) -> float:
        return float(max(np.max(-np.diag(w)) for w in self.per_bath.values()))


def _coupling_sigma(basis: DressedBasis, channel: str) -> np.ndarray:
    """|<j|sigma|i>|^2 over the full state space for one spin channel."""
    lv = basis.levels
    c = np.zeros((basis.size, basis.size))
    for b1, b2 in basis.channels[channel]:
        t2 = basis.sigma_tables[(b1, b2)] ** 2
        c[b1 * lv:(b1 + 1) * lv, b2 * lv:(b2 + 1) * lv] = t2
        c[b2 * lv:(b2 + 1) * lv, b1 * lv:(b1 + 1) * lv] = t2.T
    return c


def _coupling_mode(basis: DressedBasis) -> np.ndarray:
    """|<j|a^dagger|i>|^2 restricted to nonzero-gap pairs (same branch, n -> n+1)."""
    lv = basis.levels
    c = np.zeros((basis.size, basis.size))
    for b in range(len(basis.branches)):
        t2 = basis.a_dagger_tables[b] ** 2
        np.fill_diagonal(t2, 0.0)  # the -g_eta diagonal sits on a zero gap
        blk = t2 + t2.T
        c[b * lv:(b + 1) * lv, b * lv:(b + 1) * lv] = blk
    return c


def _assemble(basis, gaps, coupling2, bath):
    return kernels.assemble_rates(
        np.ascontiguousarray(gaps),
        np.ascontiguousarray(coupling2),
        float(bath.alpha),
        float(bath.omega_c),
        float(bath.temperature),
        gap_tolerance(basis),
    )


def _operator_element2(basis: DressedBasis, channel: str, i: int, j: int) -> float:
    """|<j|S^dagger|i>|^2 for the operator coupled to ``channel``."""
    lv = basis.levels
    bi, ni = divmod(i, lv)
    bj, nj = divmod(j, lv)
    if channel == BathLabel.PHONON_A.value:
        if bi != bj:
            return 0.0
        return float(basis.a_dagger_tables[bi][nj, ni]) ** 2
    for b1, b2 in basis.channels.get(channel, ()):
        if (bj, bi) == (b1, b2):
            return float(basis.sigma_tables[(b1, b2)][nj, ni]) ** 2
        if (bj, bi) == (b2, b1):
            return float(basis.sigma_tables[(b1, b2)][ni, nj]) ** 2
    return 0.0


def transition_rate(
    from_state: DressedState | int,
    to_state: DressedState | int,
    bath: BathSpec,
    basis: DressedBasis,
    channel: str | None = None,
) -> float:
    """Rate of the single transition ``from_state -> to_state`` caused by ``bath``.

    Upward transitions (positive gap) absorb from the bath with gamma*n*|<to|S^+|from>|^2,
    downward ones emit with gamma*(1+n)*|<to|S|from>|^2.  ``channel``
    defaults to the bath's label.
    """
    i = _as_index(from_state, basis)
    j = _as_index(to_state, basis)
    channel = channel or BathLabel(bath.label).value
    if i == j:
        return 0.0
    gap = basis.gap(i, j)
    if abs(gap) <= gap_tolerance(basis):
        return 0.0
    if gap > 0:
        c2 = _operator_element2(basis, channel, i, j)
        kp, _ = sequential_rates(gap, bath)
        return kp * c2
    c2 = _operator_element2(basis, channel, j, i)  # |<to|S|from>|^2 = |<from|S^+|to>|^2
    _, km = sequential_rates(-gap, bath)
    return km * c2


def _as_index(state, basis):
    if isinstance(state, DressedState):
        return basis.index(state.branch, state.n)
    i = int(state)
    if not 0 <= i < basis.size:
        raise ValueError(f"state index {i} outside basis of size {basis.size}")
    return i


def build_rate_matrices(sys: HybridSystem, bath_a: BathSpec, bath_sigma: BathSpec) -> RateMatrixSet:
    """Per-bath generators for the single-qubit device."""
    basis = build_dressed_basis(sys)
    gaps = basis.gap_table()
    per_bath = {
        "a": _assemble(basis, gaps, _coupling_mode(basis), bath_a),
        "sigma": _assemble(basis, gaps, _coupling_sigma(basis, "sigma"), bath_sigma),
    }
    return RateMatrixSet(per_bath, gaps, basis, {"a": bath_a, "sigma": bath_sigma})


def build_two_qubit_rate_matrices(
    sys: TwoQubitSystem, bath_a: BathSpec, bath_l: BathSpec, bath_r: BathSpec
) -> RateMatrixSet:
    """Per-bath generators for the two-qubit, three-bath device."""
    basis = build_two_qubit_basis(sys)
    gaps = basis.gap_table()
    per_bath = {
        "a": _assemble(basis, gaps, _coupling_mode(basis), bath_a),
        "sigma_L": _assemble(basis, gaps, _coupling_sigma(basis, "sigma_L"), bath_l),
        "sigma_R": _assemble(basis, gaps, _coupling_sigma(basis, "sigma_R"), bath_r),
    }
    return RateMatrixSet(per_bath, gaps, basis, {"a": bath_a, "sigma_L": bath_l, "sigma_R": bath_r})


def build_rates_for(system, baths) -> RateMatrixSet:
    """Dispatch on system type; ``baths`` is (a, sigma) or (a, sigma_L, sigma_R)."""
    if isinstance(system, TwoQubitSystem):
        return build_two_qubit_rate_matrices(system, *baths)
    return build_rate_matrices(system, *baths)


def weak_coupling_generators(
    sys: HybridSystem, bath_a: BathSpec, bath_sigma: BathSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Leading-order generators ``(M0, M_lambda)`` with W ~ M0 + (2 lam/omega0)^2 M_lambda.

    M0 = M_a + M_sigma holds the mode ladder and the phonon-conserving spin
    flips; M_lambda holds the one-phonon side bands of the spin flip.  Built
    transition by transition from the explicit weak-coupling rate equations,
    independently of the dressed-basis assembly.
    """
    n_max, w0, eps = sys.n_max, sys.omega0, sys.epsilon
    lv = n_max + 1
    up = lambda m: m  # noqa: E731
    dn = lambda m: lv + m  # noqa: E731
    m0 = np.zeros((2 * lv, 2 * lv))
    ml = np.zeros((2 * lv, 2 * lv))

    def link(mat, src, dst, rate):
        if rate:
            mat[dst, src] += rate
            mat[src, src] -= rate

    ka_p, ka_m = sequential_rates(w0, bath_a)
    ks_p, ks_m = sequential_rates(eps, bath_sigma)
    ksum_p, ksum_m = sequential_rates(w0 + eps, bath_sigma)
    kdif_p, kdif_m = sequential_rates(w0 - eps, bath_sigma)
    krev_p, krev_m = sequential_rates(eps - w0, bath_sigma)
    for m in range(lv):
        for br in (up, dn):
            if m + 1 < lv:
                link(m0, br(m), br(m + 1), (m + 1) * ka_p)
                link(m0, br(m + 1), br(m), (m + 1) * ka_m)
        link(m0, dn(m), up(m), ks_p)
        link(m0, up(m), dn(m), ks_m)
        if m + 1 < lv:
            # up_{m+1} <-> down_m, gap eps + omega0
            link(ml, dn(m), up(m + 1), (m + 1) * ksum_p)
            link(ml, up(m + 1), dn(m), (m + 1) * ksum_m)
            # up_m <-> down_{m+1}, gap eps - omega0 (only one sign is live)
            link(ml, dn(m + 1), up(m), (m + 1) * kdif_m)
            link(ml, up(m), dn(m + 1), (m + 1) * kdif_p)
            link(ml, dn(m + 1), up(m), (m + 1) * krev_p)
            link(ml, up(m), dn(m + 1), (m + 1) * krev_m)
    return m0, ml


__all__ = [
    "RateMatrixSet",
    "transition_rate",
    "build_rate_matrices",
    "build_two_qubit_rate_matrices",
    "build_rates_for",
    "weak_coupling_generators",
    "gap_tolerance",
]
